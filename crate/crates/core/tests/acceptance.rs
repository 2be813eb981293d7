use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use symstat::cluster::{
    gen_synthetic, kmeans_fundamental_baseline, kmeans_quotient, ClusterConfig, SyntheticSpec,
};
use symstat::oracle::{aggregate, random_dataset, run_trials, Summary, TrialConfig, TrialReport};
use symstat::procrustes::{bound_f, bound_f1, bound_f2, eval_l, eval_l_tilde};
use symstat::repr::{fourier_forward, fourier_inverse};
use symstat::so3::{dist_s2, dist_so3};
use symstat::symmetry::{quotient_dist_s2, quotient_dist_so3};
use symstat::{
    build_group, estimate, irreps, Dataset, Direction, GroupSpec, Metric, Mode, RoundingParams,
    UnitQuaternion,
};

const FAMILIES: [GroupSpec; 7] = [
    GroupSpec::Cyclic(2),
    GroupSpec::Cyclic(7),
    GroupSpec::Dihedral(2),
    GroupSpec::Dihedral(7),
    GroupSpec::Tetrahedral,
    GroupSpec::Octahedral,
    GroupSpec::Icosahedral,
];
const REFERENCE_ROE: [f64; 7] = [0.337, 0.448, 0.934, 0.961, 0.984, 0.986, 0.999];
const METRICS: [Metric; 2] = [Metric::Arithmetic, Metric::Geometric];
const MODES: [Mode; 2] = [Mode::Rotation, Mode::Projection];

type Outcome = Result<(bool, String), String>;

fn trials(cfg: &TrialConfig, seed: u64, count: usize, pool: &mut Vec<TrialReport>) -> Result<Summary, String> {
    let mut ok = Vec::with_capacity(count);
    for r in run_trials(cfg, seed, count).map_err(|e| e.to_string())? {
        ok.push(r.map_err(|e| format!("{} {} {}: {e}", cfg.group, cfg.metric, cfg.mode))?);
    }
    let s = aggregate(&ok).map_err(|e| e.to_string())?;
    pool.extend(ok);
    Ok(s)
}

fn random_assignment(r: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<usize> {
    (0..n).map(|_| r.random_range(0..m)).collect()
}

fn pairwise_identity() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for spec in FAMILIES {
        let g = build_group(spec).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let n = r.random_range(2..10);
            let data = random_dataset(Mode::Projection, n, &mut r);
            let a = random_assignment(&mut r, n, g.order());
            let l = eval_l(&data, &a, &g, Metric::Arithmetic).map_err(|e| e.to_string())?;
            let lt = eval_l_tilde(&data, &a, &g, Metric::Arithmetic).map_err(|e| e.to_string())?;
            worst = worst.max((lt - bound_f(l).map_err(|e| e.to_string())?).abs());
        }
    }
    Ok((worst <= 1e-10, format!("max |L~ - f(L)| = {worst:.2e} over 700 instances")))
}

fn loss_sandwich() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(102);
    let groups: Vec<_> = FAMILIES.iter().map(|&s| build_group(s).unwrap()).collect();
    let mut violations = 0;
    for t in 0..1000 {
        let g = &groups[t % groups.len()];
        let n = r.random_range(2..10);
        let data = random_dataset(Mode::Rotation, n, &mut r);
        let a = random_assignment(&mut r, n, g.order());
        let l = eval_l(&data, &a, g, Metric::Arithmetic).map_err(|e| e.to_string())?;
        let lt = eval_l_tilde(&data, &a, g, Metric::Arithmetic).map_err(|e| e.to_string())?;
        let x = l.min(6.0);
        let lo = bound_f1(x).map_err(|e| e.to_string())?;
        let hi = bound_f2(x).map_err(|e| e.to_string())?;
        if lt < lo - 1e-9 || lt > hi + 1e-9 {
            violations += 1;
        }
    }
    Ok((violations == 0, format!("{violations} violations in 1000 instances")))
}

fn approximation(groups: &[GroupSpec], count: usize, seed: u64, pool: &mut Vec<TrialReport>) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for &spec in groups {
        let idx = FAMILIES.iter().position(|&s| s == spec).unwrap();
        let mut cfg = TrialConfig::new(spec, Metric::Arithmetic, Mode::Rotation);
        cfg.exact_loss = true;
        let s = trials(&cfg, seed, count, pool)?;
        let roe = s.roe.unwrap_or(f64::NAN);
        let rcg = s.ratio_rcg_below_01.unwrap_or(f64::NAN);
        let need = if spec.is_cyclic() { 0.90 } else { 0.98 };
        let ok = (roe - REFERENCE_ROE[idx]).abs() <= 0.08 && rcg >= need;
        pass &= ok;
        parts.push(format!("{spec} RoE {:.1}% RCG<0.1 {:.1}%", 100.0 * roe, 100.0 * rcg));
    }
    Ok((pass, parts.join(", ")))
}

fn rounding_accuracy(pool: &mut Vec<TrialReport>) -> Outcome {
    let mut pass = true;
    let mut worst_acc: f64 = 1.0;
    let mut worst_rcg: f64 = 0.0;
    for spec in [GroupSpec::Cyclic(2), GroupSpec::Dihedral(2), GroupSpec::Tetrahedral] {
        for metric in METRICS {
            for mode in MODES {
                let s = trials(&TrialConfig::new(spec, metric, mode), 202, 100, pool)?;
                let nug = s.nug.ok_or("no brute-force reference")?;
                pass &= nug.accuracy >= 0.95 && nug.max_rcg <= 0.05;
                worst_acc = worst_acc.min(nug.accuracy);
                worst_rcg = worst_rcg.max(nug.max_rcg);
            }
        }
    }
    Ok((
        pass,
        format!("worst accuracy {:.1}%, worst RCG-NUG {:.2}% over 12 settings", 100.0 * worst_acc, 100.0 * worst_rcg),
    ))
}

fn eigenvector_gap(pool: &mut Vec<TrialReport>) -> Outcome {
    let mut best_gap = f64::NEG_INFINITY;
    let mut parts = Vec::new();
    for metric in METRICS {
        for mode in MODES {
            let mut cfg = TrialConfig::new(GroupSpec::Cyclic(2), metric, mode);
            cfg.singer = true;
            let s = trials(&cfg, 203, 200, pool)?;
            let nug = s.nug.ok_or("no brute-force reference")?.accuracy;
            let singer = s.singer.ok_or("no eigenvector rounding")?.accuracy;
            best_gap = best_gap.max(nug - singer);
            parts.push(format!("{metric}/{mode} {:.1}% vs {:.1}%", 100.0 * nug, 100.0 * singer));
        }
    }
    Ok((best_gap >= 0.05, format!("greedy vs eigenvector: {}", parts.join(", "))))
}

fn hyperparameters(pool: &mut Vec<TrialReport>) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for spec in [GroupSpec::Cyclic(2), GroupSpec::Dihedral(7)] {
        let mut cfg = TrialConfig::new(spec, Metric::Arithmetic, Mode::Rotation);
        cfg.rounding = RoundingParams::new(20, 0.99).map_err(|e| e.to_string())?;
        cfg.extra_rounding = vec![RoundingParams::new(20, 0.0).map_err(|e| e.to_string())?];
        let s = trials(&cfg, 204, 200, pool)?;
        let main = s.nug.ok_or("no brute-force reference")?.accuracy;
        let zero = s.extra[0].ok_or("no brute-force reference")?.accuracy;
        pass &= main >= zero && zero < 1.0;
        parts.push(format!("{spec} c=0.99 {:.1}% c=0 {:.1}%", 100.0 * main, 100.0 * zero));
    }
    Ok((pass, parts.join(", ")))
}

fn feasibility(pool: &[TrialReport]) -> Outcome {
    let mut sum_dev: f64 = 0.0;
    let mut lam_min = f64::INFINITY;
    let mut diag_min = f64::INFINITY;
    let mut eig_min = f64::INFINITY;
    let mut gap = f64::NEG_INFINITY;
    for r in pool {
        let f = &r.feasibility;
        sum_dev = sum_dev.max(f.lambda_sum_deviation);
        lam_min = lam_min.min(f.lambda_min);
        diag_min = diag_min.min(f.lambda_diag_min);
        eig_min = eig_min.min(f.min_eigenvalue);
        if let Some((_, best)) = &r.global_l_tilde {
            gap = gap.max(r.sdp_objective - best);
        }
    }
    let pass = sum_dev <= 1e-5 && lam_min >= -1e-5 && diag_min >= 1.0 - 1e-5 && eig_min >= -1e-5 && gap <= 1e-5;
    Ok((
        pass,
        format!(
            "{} trials: sum dev {sum_dev:.1e}, min lambda {lam_min:.1e}, min diag {diag_min:.6}, min eig {eig_min:.1e}, max SDP - L~* {gap:.1e}",
            pool.len()
        ),
    ))
}

fn gauge() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(108);
    let groups: Vec<_> = FAMILIES.iter().map(|&s| build_group(s).unwrap()).collect();
    let mut worst: f64 = 0.0;
    for t in 0..100 {
        let g = &groups[t % groups.len()];
        let mode = MODES[t % 2];
        let metric = METRICS[(t / 2) % 2];
        let n = r.random_range(2..8);
        let data = random_dataset(mode, n, &mut r);
        let a = random_assignment(&mut r, n, g.order());
        let h = r.random_range(0..g.order());
        let b: Vec<usize> = a.iter().map(|&x| g.compose(x, h)).collect();
        for f in [eval_l, eval_l_tilde] {
            let x = f(&data, &a, g, metric).map_err(|e| e.to_string())?;
            let y = f(&data, &b, g, metric).map_err(|e| e.to_string())?;
            worst = worst.max((x - y).abs());
        }
    }
    Ok((worst < 1e-12, format!("max change {worst:.1e} over 100 instances")))
}

fn clustering() -> Outcome {
    let spec = GroupSpec::Cyclic(3);
    let group = build_group(spec).map_err(|e| e.to_string())?;
    let pts = gen_synthetic(&SyntheticSpec::five_class_c3(), &group, None).map_err(|e| e.to_string())?;
    let dirs: Vec<Direction> = pts.iter().map(|p| p.direction).collect();
    let truth: Vec<usize> = pts.iter().map(|p| p.label).collect();
    let mut quotient = Vec::new();
    for seed in 0..5 {
        let res = kmeans_quotient(&dirs, Some(&truth), &ClusterConfig::new(5, spec, seed)).map_err(|e| e.to_string())?;
        quotient.push(res.accuracy.unwrap_or(0.0));
    }
    let mut baseline = Vec::new();
    for seed in 0..4 {
        let cfg = ClusterConfig::classical(5, spec, seed);
        let res = kmeans_fundamental_baseline(&dirs, Some(&truth), &cfg).map_err(|e| e.to_string())?;
        baseline.push(res.accuracy.unwrap_or(1.0));
    }
    let pass = quotient.iter().all(|&a| a == 1.0) && baseline.iter().any(|&a| a <= 0.8);
    Ok((pass, format!("quotient {quotient:?}, baseline {baseline:?}")))
}

fn timing() -> Outcome {
    let group = build_group(GroupSpec::Cyclic(7)).map_err(|e| e.to_string())?;
    let reps = irreps(&group).map_err(|e| e.to_string())?;
    let mut r = ChaCha8Rng::seed_from_u64(110);
    let data = Dataset::Rotations((0..10).map(|_| UnitQuaternion::random(&mut r)).collect());
    let t = Instant::now();
    estimate(&data, &group, &reps, Metric::Arithmetic, &Default::default()).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    Ok((secs <= 300.0, format!("C7, N=10 rotations in {secs:.3} s")))
}

fn properties() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(111);
    let mut violations = 0usize;
    let mut checks = 0usize;
    let mut check = |ok: bool| {
        checks += 1;
        if !ok {
            violations += 1;
        }
    };
    for metric in METRICS {
        for _ in 0..500 {
            let (a, b, c) = (
                UnitQuaternion::random(&mut r).to_matrix(),
                UnitQuaternion::random(&mut r).to_matrix(),
                UnitQuaternion::random(&mut r).to_matrix(),
            );
            let ab = dist_so3(&a, &b, metric);
            check(ab >= 0.0 && (ab - dist_so3(&b, &a, metric)).abs() < 1e-12);
            check(dist_so3(&a, &a, metric) < 1e-7);
            check(ab <= dist_so3(&a, &c, metric) + dist_so3(&c, &b, metric) + 1e-9);
            let (u, v, w) = (Direction::random(&mut r), Direction::random(&mut r), Direction::random(&mut r));
            let uv = dist_s2(&u, &v, metric);
            check(uv >= 0.0 && (uv - dist_s2(&v, &u, metric)).abs() < 1e-12);
            check(uv <= dist_s2(&u, &w, metric) + dist_s2(&w, &v, metric) + 1e-9);
        }
    }
    for spec in FAMILIES {
        let g = build_group(spec).map_err(|e| e.to_string())?;
        let reps = irreps(&g).map_err(|e| e.to_string())?;
        check(reps.dims().iter().map(|d| d * d).sum::<usize>() == g.order());
        check(reps.homomorphism_residual(&g) < 1e-9);
        check(reps.unitarity_residual() < 1e-9);
        for i in 0..g.order() {
            check(g.compose(i, g.inverse(i)) == 0);
            for j in 0..g.order() {
                check((*g.element(i) * *g.element(j)).same_rotation(g.element(g.compose(i, j)), 1e-9));
            }
        }
        for metric in METRICS {
            for _ in 0..100 {
                let (a, b, c) = (
                    UnitQuaternion::random(&mut r).to_matrix(),
                    UnitQuaternion::random(&mut r).to_matrix(),
                    UnitQuaternion::random(&mut r).to_matrix(),
                );
                let d = |x, y| quotient_dist_so3(x, y, &g, metric).0;
                check(d(&a, &b) <= d(&a, &c) + d(&c, &b) + 1e-9);
                check((d(&a, &b) - d(&b, &a)).abs() < 1e-9);
                let h = r.random_range(0..g.order());
                check(d(&a, &(a * *g.matrix(h))) < 1e-7);
                let (u, v) = (Direction::random(&mut r), Direction::random(&mut r));
                let e = quotient_dist_s2(&u, &v, &g, metric).0;
                check((e - quotient_dist_s2(&v, &u, &g, metric).0).abs() < 1e-9);
                check(quotient_dist_s2(&u, &u.rotate_inverse(g.element(h)), &g, metric).0 < 1e-7);
            }
        }
        for _ in 0..20 {
            let f: Vec<Complex64> = (0..g.order())
                .map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
                .collect();
            let coeffs = fourier_forward(&f, &reps).map_err(|e| e.to_string())?;
            let back = fourier_inverse(&coeffs, &reps).map_err(|e| e.to_string())?;
            check(f.iter().zip(&back).all(|(a, b)| (a - b).norm() <= 1e-10));
        }
    }
    Ok((violations == 0, format!("{violations} violations in {checks} checks")))
}

fn main() -> ExitCode {
    let mut pool = Vec::new();
    let mut failed = 0;
    let mut report = |id: &str, name: &str, outcome: Outcome, secs: f64| {
        let (ok, detail) = match outcome {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!("[{}] {id} {name}: {detail} ({secs:.1} s)", if ok { "PASS" } else { "FAIL" });
    };

    macro_rules! run {
        ($id:expr, $name:expr, $body:expr) => {{
            let t = Instant::now();
            let outcome = $body;
            report($id, $name, outcome, t.elapsed().as_secs_f64());
        }};
    }

    run!("1", "pairwise loss identity on S2", pairwise_identity());
    run!("2", "rotation loss sandwich", loss_sandwich());
    run!(
        "3a",
        "loss approximation, reduced preset",
        approximation(&[GroupSpec::Cyclic(2), GroupSpec::Dihedral(2), GroupSpec::Tetrahedral], 100, 303, &mut pool)
    );
    run!("3b", "loss approximation, all groups", approximation(&FAMILIES, 200, 301, &mut pool));
    run!("4", "rounding reaches the global optimum", rounding_accuracy(&mut pool));
    run!("5", "greedy beats eigenvector rounding", eigenvector_gap(&mut pool));
    run!("6", "hyperparameter trend", hyperparameters(&mut pool));
    run!("7", "relaxation feasibility", feasibility(&pool));
    run!("8", "gauge invariance", gauge());
    run!("9", "K-means under C3", clustering());
    run!("10", "mean and variance timing", timing());
    run!("11", "metric axioms and Fourier round trips", properties());

    if failed == 0 {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
