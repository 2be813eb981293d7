use std::time::Instant;

use nalgebra::linalg::SymmetricEigen;
use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use symstat::nug::{lambda_of, problem_from_costs, LambdaTable};
use symstat::oracle::{brute_force_min, random_dataset, run_trials, Objective, TrialConfig};
use symstat::repr::{fourier_inverse, CMatrix};
use symstat::rounding::{greedy_round_lambda, PartialSolution};
use symstat::{
    build_group, build_problem, greedy_round, irreps, singer_round, solve_sdp, Dataset, Error,
    GroupSpec, Metric, Mode, PairCostTable, RoundingParams, UnitQuaternion,
};

const FAMILIES: [&str; 7] = ["C2", "C7", "D2", "D7", "T", "O", "I"];

fn min_eig(m: &CMatrix) -> f64 {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    SymmetricEigen::new(h).eigenvalues.min()
}

/// Random point of the λ polytope.
fn random_lambda(r: &mut ChaCha8Rng, n: usize, group: &symstat::FiniteRotationGroup) -> LambdaTable {
    let m = group.order();
    let mut l = LambdaTable::zeros(n, m);
    for i in 0..n {
        l.set(i, i, 0, 1.0);
        for j in (i + 1)..n {
            let w: Vec<f64> = (0..m).map(|_| -r.random::<f64>().ln()).collect();
            let s: f64 = w.iter().sum();
            for g in 0..m {
                l.set(i, j, g, w[g] / s);
                l.set(j, i, group.inverse(g), w[g] / s);
            }
        }
    }
    l
}

/// `X^k_ij = Σ_g λ_ij(g) ρ_k(g)`, assembled directly.
fn synthesize(lambda: &LambdaTable, reps: &symstat::IrrepSet) -> Vec<CMatrix> {
    let n = lambda.n();
    reps.iter()
        .map(|rep| {
            let d = rep.dim();
            let mut x = CMatrix::zeros(n * d, n * d);
            for i in 0..n {
                for j in 0..n {
                    let mut b = CMatrix::zeros(d, d);
                    for g in 0..lambda.order() {
                        b += rep.image(g) * Complex64::new(lambda.get(i, j, g), 0.0);
                    }
                    x.view_mut((i * d, j * d), (d, d)).copy_from(&b);
                }
            }
            x
        })
        .collect()
}

#[test]
fn fourier_blocks_reproduce_costs() {
    let mut r = ChaCha8Rng::seed_from_u64(21);
    for name in FAMILIES {
        let g = build_group(name.parse().unwrap()).unwrap();
        let reps = irreps(&g).unwrap();
        let data = random_dataset(Mode::Rotation, 3, &mut r);
        let p = build_problem(&data, &g, &reps, Metric::Arithmetic).unwrap();
        let dims = reps.dims();
        for i in 0..3 {
            for j in 0..3 {
                let coeffs: Vec<CMatrix> = p
                    .blocks()
                    .iter()
                    .zip(&dims)
                    .map(|(b, &d)| b.view((i * d, j * d), (d, d)) / Complex64::new(d as f64, 0.0))
                    .collect();
                let f = fourier_inverse(&coeffs, &reps).unwrap();
                for (x, v) in f.iter().enumerate() {
                    assert!((v.re - p.costs().get(j, i, x)).abs() < 1e-10 && v.im.abs() < 1e-10);
                }
            }
        }
        for b in p.blocks() {
            assert!((b - b.adjoint()).norm() < 1e-12);
        }
    }
}

#[test]
fn objective_identity_on_feasible_lambda() {
    let mut r = ChaCha8Rng::seed_from_u64(22);
    for name in FAMILIES {
        let g = build_group(name.parse().unwrap()).unwrap();
        let reps = irreps(&g).unwrap();
        let data = random_dataset(Mode::Projection, 4, &mut r);
        let p = build_problem(&data, &g, &reps, Metric::Geometric).unwrap();
        for _ in 0..5 {
            let l = random_lambda(&mut r, 4, &g);
            let x = synthesize(&l, &reps);
            let mut direct = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    for e in 0..g.order() {
                        direct += p.costs().get(i, j, e) * l.get(i, j, e);
                    }
                }
            }
            assert!((p.block_objective(&x) - direct).abs() < 1e-10, "{name}");
            assert!((p.lambda_objective(&l) - direct).abs() < 1e-12);
        }
    }
}

#[test]
fn lifted_assignments_are_feasible_and_exact() {
    let mut r = ChaCha8Rng::seed_from_u64(23);
    for name in FAMILIES {
        let g = build_group(name.parse().unwrap()).unwrap();
        let reps = irreps(&g).unwrap();
        let data = random_dataset(Mode::Rotation, 4, &mut r);
        let p = build_problem(&data, &g, &reps, Metric::Arithmetic).unwrap();
        let a: Vec<usize> = (0..4).map(|_| r.random_range(0..g.order())).collect();
        let lift = p.lift(&a).unwrap();
        assert!((lift.objective - p.costs().cost_of(&a, &g)).abs() < 1e-9);
        assert!((p.block_objective(&lift.blocks) - lift.objective).abs() < 1e-9);
        for (k, x) in lift.blocks.iter().enumerate() {
            let d = reps.get(k).dim();
            assert!(min_eig(x) > -1e-9);
            for i in 0..4 {
                let diag = x.view((i * d, i * d), (d, d)).into_owned();
                assert!((diag - CMatrix::identity(d, d)).norm() < 1e-9);
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                let l = lambda_of(&lift, &reps, i, j).unwrap();
                let rel = g.relative(a[i], a[j]);
                for (x, v) in l.iter().enumerate() {
                    let want = if x == rel { 1.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn relaxation_bounds_every_assignment() {
    let mut r = ChaCha8Rng::seed_from_u64(24);
    for (name, n) in [("C2", 6), ("C7", 4), ("D2", 5), ("T", 3), ("O", 3)] {
        let g = build_group(name.parse().unwrap()).unwrap();
        let reps = irreps(&g).unwrap();
        let data = random_dataset(Mode::Rotation, n, &mut r);
        let p = build_problem(&data, &g, &reps, Metric::Arithmetic).unwrap();
        let sol = solve_sdp(&p, 1e-6, 20_000).unwrap();
        let (_, best) = brute_force_min(Objective::LTilde, &data, &g, Metric::Arithmetic).unwrap();
        assert!(sol.objective <= best + 1e-6, "{name}: {} > {best}", sol.objective);
        // exhaustive check over the full space
        let total = g.order().pow(n as u32);
        for code in 0..total {
            let mut c = code;
            let a: Vec<usize> = (0..n)
                .map(|_| {
                    let x = c % g.order();
                    c /= g.order();
                    x
                })
                .collect();
            assert!(sol.objective <= p.costs().cost_of(&a, &g) + 1e-6);
        }
        for k in &sol.blocks {
            assert!(min_eig(k) >= -1e-5);
        }
        for i in 0..n {
            for j in 0..n {
                let l = lambda_of(&sol, &reps, i, j).unwrap();
                assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-5);
                assert!(l.iter().all(|&v| v >= -1e-5));
                if i == j {
                    assert!(l[0] >= 1.0 - 1e-5);
                }
            }
        }
    }
}

#[test]
fn single_point_relaxation() {
    let g = build_group(GroupSpec::Octahedral).unwrap();
    let reps = irreps(&g).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(25);
    let data = random_dataset(Mode::Rotation, 1, &mut r);
    let p = build_problem(&data, &g, &reps, Metric::Arithmetic).unwrap();
    let sol = solve_sdp(&p, 1e-6, 20_000).unwrap();
    assert!(sol.objective.abs() < 1e-12);
    assert_eq!(lambda_of(&sol, &reps, 0, 0).unwrap()[0], 1.0);
}

#[test]
fn clustered_data_gives_confident_lambda() {
    let mut r = ChaCha8Rng::seed_from_u64(26);
    for name in ["C7", "D2", "T"] {
        let g = build_group(name.parse().unwrap()).unwrap();
        let reps = irreps(&g).unwrap();
        let center = UnitQuaternion::random(&mut r);
        let qs: Vec<UnitQuaternion> = (0..5)
            .map(|_| {
                let w = Vector3::new(r.random_range(-0.05..0.05), r.random_range(-0.05..0.05), r.random_range(-0.05..0.05));
                center * UnitQuaternion::exp(&w) * *g.element(r.random_range(0..g.order()))
            })
            .collect();
        let data = Dataset::Rotations(qs);
        let p = build_problem(&data, &g, &reps, Metric::Arithmetic).unwrap();
        let sol = solve_sdp(&p, 1e-6, 20_000).unwrap();
        let (best, _) = brute_force_min(Objective::LTilde, &data, &g, Metric::Arithmetic).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let l = lambda_of(&sol, &reps, i, j).unwrap();
                assert!(l[g.relative(best[i], best[j])] >= 0.9, "{name} ({i},{j})");
            }
        }
        assert_eq!(greedy_round(&sol, p.costs(), &g, &RoundingParams::default()).unwrap(), best);
    }
}

#[test]
fn oversized_problems_are_rejected() {
    let g = build_group(GroupSpec::Icosahedral).unwrap();
    let reps = irreps(&g).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(27);
    let data = random_dataset(Mode::Projection, 60, &mut r);
    let p = build_problem(&data, &g, &reps, Metric::Arithmetic).unwrap();
    assert!(matches!(solve_sdp(&p, 1e-6, 10), Err(Error::ProblemTooLarge { .. })));
}

#[test]
fn delta_lambda_rounds_to_its_assignment() {
    let mut r = ChaCha8Rng::seed_from_u64(28);
    for name in FAMILIES {
        let g = build_group(name.parse().unwrap()).unwrap();
        let reps = irreps(&g).unwrap();
        let data = random_dataset(Mode::Rotation, 5, &mut r);
        let p = build_problem(&data, &g, &reps, Metric::Arithmetic).unwrap();
        let a: Vec<usize> = (0..5).map(|_| r.random_range(0..g.order())).collect();
        let lift = p.lift(&a).unwrap();
        let gauged: Vec<usize> = a.iter().map(|&x| g.relative(x, a[0])).collect();
        for params in [RoundingParams::default(), RoundingParams::new(1, 0.0).unwrap()] {
            assert_eq!(greedy_round(&lift, p.costs(), &g, &params).unwrap(), gauged);
        }
        if g.spec().is_cyclic() {
            assert_eq!(singer_round(&lift, &g, &reps).unwrap(), gauged);
        } else {
            assert!(matches!(singer_round(&lift, &g, &reps), Err(Error::NotCyclic(_))));
        }
    }
}

#[test]
fn greedy_rounding_finds_global_optimum() {
    for name in FAMILIES {
        let spec: GroupSpec = name.parse().unwrap();
        let mut cfg = TrialConfig::new(spec, Metric::Arithmetic, Mode::Rotation);
        cfg.n = Some(4);
        let reports: Vec<_> = run_trials(&cfg, 29, 100).unwrap().into_iter().map(|r| r.unwrap()).collect();
        let hits = reports.iter().filter(|r| r.nug.optimal == Some(true)).count();
        assert!(hits >= 95, "{name}: {hits}/100");
        for rep in &reports {
            assert_eq!(rep.nug.assignment[0], 0);
            assert!(rep.sdp_objective <= rep.global_l_tilde.as_ref().unwrap().1 + 1e-5);
        }
    }
}

#[test]
fn partial_costs_accumulate() {
    let mut r = ChaCha8Rng::seed_from_u64(30);
    let g = build_group(GroupSpec::Dihedral(3)).unwrap();
    let n = 6;
    let costs = PairCostTable::from_fn(n, g.order(), |i, j, _| if i == j { 0.0 } else { r.random::<f64>() });
    let mut s = PartialSolution::new(n);
    assert_eq!(s.get(2, 2, &g), Some(0));
    let mut prev = 0.0;
    while !s.is_complete() {
        let (i, j) = loop {
            let (i, j) = (r.random_range(0..n), r.random_range(0..n));
            if !s.is_decided(i, j) {
                break (i, j);
            }
        };
        let e = r.random_range(0..g.order());
        s = s.with_relation(i, j, e, &costs, &g).unwrap();
        assert_eq!(s.get(i, j, &g), Some(e));
        assert_eq!(s.get(j, i, &g), Some(g.inverse(e)));
        assert!(s.cost() >= prev);
        assert!((s.cost() - s.recompute_cost(&costs, &g)).abs() < 1e-12);
        prev = s.cost();
    }
    // closure: chained relations compose
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let ab = s.get(a, b, &g).unwrap();
                let bc = s.get(b, c, &g).unwrap();
                assert_eq!(s.get(a, c, &g), Some(g.compose(ab, bc)));
            }
        }
    }
    let a = s.assignment(&g).unwrap();
    assert_eq!(a[0], 0);
    assert!((costs.cost_of(&a, &g) - s.cost()).abs() < 1e-12);
}

#[test]
fn rounding_time_scales_gently() {
    let g = build_group(GroupSpec::Dihedral(7)).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(31);
    let params = RoundingParams::default();
    let mut times = Vec::new();
    for n in [10, 20, 40] {
        let lambda = random_lambda(&mut r, n, &g);
        let costs = PairCostTable::from_fn(n, g.order(), |i, j, _| if i == j { 0.0 } else { r.random::<f64>() });
        let mut best = f64::INFINITY;
        for _ in 0..5 {
            let t = Instant::now();
            greedy_round_lambda(&lambda, &costs, &g, &params).unwrap();
            best = best.min(t.elapsed().as_secs_f64());
        }
        times.push(best);
    }
    for w in times.windows(2) {
        assert!(w[1] <= 8.0 * w[0].max(1e-4), "{times:?}");
    }
}

#[test]
fn costs_from_explicit_table() {
    let g = build_group(GroupSpec::Cyclic(2)).unwrap();
    let reps = irreps(&g).unwrap();
    // two points preferring to differ by the half turn
    let costs = PairCostTable::from_fn(2, 2, |i, j, e| if i == j { if e == 0 { 0.0 } else { 1.0 } } else if e == 1 { 0.0 } else { 1.0 });
    let p = problem_from_costs(costs, &g, &reps).unwrap();
    let sol = solve_sdp(&p, 1e-8, 20_000).unwrap();
    assert!(sol.objective.abs() < 1e-6);
    assert_eq!(greedy_round(&sol, p.costs(), &g, &RoundingParams::default()).unwrap(), vec![0, 1]);
}
