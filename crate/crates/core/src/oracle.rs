//! Brute-force optima and the benchmark harness comparing them with the
//! relax-and-round pipeline.

use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::nug::{lambda_of, NugSolution, PairCostTable, SolverOptions};
use crate::pipeline::solve_relaxation;
use crate::procrustes::{eval_l, kabsch, Dataset, Mode};
use crate::repr::{irreps, IrrepSet};
use crate::rounding::{greedy_round, singer_round, RoundingParams};
use crate::so3::{Direction, Metric, UnitQuaternion};
use crate::symmetry::{build_group, FiniteRotationGroup, GroupSpec};

/// Largest gauge-fixed search space enumerated.
pub const SEARCH_LIMIT: f64 = 1e7;
/// Cost gap treated as equality when scoring rounding.
pub const COST_EQUALITY: f64 = 1e-9;

/// Objective minimized by brute force.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Loss against the optimal mean.
    L,
    /// Pairwise loss.
    LTilde,
}

/// `1 + ⌈log_M 1000⌉` points per benchmark instance.
pub fn points_for_order(order: usize) -> usize {
    if order <= 1 {
        return 2;
    }
    let mut k = 0;
    let mut power = 1usize;
    while power < 1000 {
        power = power.saturating_mul(order);
        k += 1;
    }
    1 + k
}

/// Uniform random sample of `n` rotations or directions.
pub fn random_dataset<R: Rng + ?Sized>(mode: Mode, n: usize, rng: &mut R) -> Dataset {
    match mode {
        Mode::Rotation => Dataset::Rotations((0..n).map(|_| UnitQuaternion::random(rng)).collect()),
        Mode::Projection => Dataset::Directions((0..n).map(|_| Direction::random(rng)).collect()),
    }
}

/// Fast exact `L` for the arithmetic metric, falling back to [`eval_l`].
struct LossEvaluator<'a> {
    data: &'a Dataset,
    group: &'a FiniteRotationGroup,
    metric: Metric,
    matrices: Vec<Vec<Matrix3<f64>>>,
    vectors: Vec<Vec<Vector3<f64>>>,
}

impl<'a> LossEvaluator<'a> {
    fn new(data: &'a Dataset, group: &'a FiniteRotationGroup, metric: Metric) -> Self {
        let m = group.order();
        let mut matrices = Vec::new();
        let mut vectors = Vec::new();
        match data {
            // R_i g for every i and g
            Dataset::Rotations(v) => {
                matrices = v
                    .iter()
                    .map(|q| (0..m).map(|g| *(*q * *group.element(g)).to_matrix().matrix()).collect())
                    .collect()
            }
            Dataset::Directions(v) => {
                vectors = v
                    .iter()
                    .map(|d| (0..m).map(|g| *d.rotate_inverse(group.element(g)).vector()).collect())
                    .collect()
            }
        }
        LossEvaluator {
            data,
            group,
            metric,
            matrices,
            vectors,
        }
    }

    fn eval(&self, assignment: &[usize]) -> Result<f64> {
        if self.metric == Metric::Geometric {
            return eval_l(self.data, assignment, self.group, self.metric);
        }
        let n = assignment.len() as f64;
        match self.data {
            Dataset::Rotations(_) => {
                let mut acc = Matrix3::zeros();
                for (rows, &g) in self.matrices.iter().zip(assignment) {
                    acc += rows[g];
                }
                let k = kabsch(&(acc / n));
                // (1/N) Σ ‖R_i g_i − R̄‖² = 6 − 2 Tr(R̄ᵀ R̃)
                Ok((6.0 - 2.0 * (k.sigma[0] + k.sigma[1] + k.epsilon * k.sigma[2])).max(0.0))
            }
            Dataset::Directions(_) => {
                let mut acc = Vector3::zeros();
                for (rows, &g) in self.vectors.iter().zip(assignment) {
                    acc += rows[g];
                }
                Ok((2.0 * (1.0 - (acc / n).norm())).max(0.0))
            }
        }
    }
}

/// Global minimum over gauge-fixed assignments (`g_1 = e`).
///
/// Assignments are visited in lexicographic order and the first strict
/// minimum is kept.
pub fn brute_force_min(
    objective: Objective,
    data: &Dataset,
    group: &FiniteRotationGroup,
    metric: Metric,
) -> Result<(Vec<usize>, f64)> {
    let n = data.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let m = group.order();
    let size = (m as f64).powi(n as i32 - 1);
    if size > SEARCH_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            size,
            limit: SEARCH_LIMIT,
        });
    }
    let costs = PairCostTable::from_data(data, group, metric);
    let evaluator = LossEvaluator::new(data, group, metric);
    let eval = |a: &[usize]| -> Result<f64> {
        match objective {
            Objective::LTilde => Ok(costs.cost_of(a, group)),
            Objective::L => evaluator.eval(a),
        }
    };
    let mut current = vec![0usize; n];
    let mut best = current.clone();
    let mut best_cost = eval(&current)?;
    loop {
        // odometer over positions 1..n, last position fastest
        let mut pos = n;
        loop {
            if pos == 1 {
                return Ok((best, best_cost));
            }
            pos -= 1;
            current[pos] += 1;
            if current[pos] < m {
                break;
            }
            current[pos] = 0;
        }
        let c = eval(&current)?;
        if c < best_cost {
            best_cost = c;
            best.copy_from_slice(&current);
        }
    }
}

/// What a benchmark trial computes.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub group: GroupSpec,
    pub metric: Metric,
    pub mode: Mode,
    /// Points per instance; `None` uses [`points_for_order`].
    pub n: Option<usize>,
    pub rounding: RoundingParams,
    pub solver: SolverOptions,
    /// Also minimize `L` by brute force.
    pub exact_loss: bool,
    /// Also run eigenvector rounding (cyclic groups only).
    pub singer: bool,
    /// Skip brute force entirely (timing runs).
    pub skip_brute_force: bool,
    /// Also round with each of these parameter sets.
    pub extra_rounding: Vec<RoundingParams>,
}

impl TrialConfig {
    pub fn new(group: GroupSpec, metric: Metric, mode: Mode) -> Self {
        TrialConfig {
            group,
            metric,
            mode,
            n: None,
            rounding: RoundingParams::default(),
            solver: SolverOptions::default(),
            exact_loss: false,
            singer: false,
            skip_brute_force: false,
            extra_rounding: Vec::new(),
        }
    }
}

/// Feasibility measurements of the relaxed solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Feasibility {
    /// Largest `|Σ_g λ_ij(g) − 1|`.
    pub lambda_sum_deviation: f64,
    pub lambda_min: f64,
    /// Smallest `λ_ii(e)`.
    pub lambda_diag_min: f64,
    pub min_eigenvalue: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// A rounded assignment scored against the pairwise optimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rounded {
    pub assignment: Vec<usize>,
    pub cost: f64,
    /// Relative gap to the brute-force optimum, when known.
    pub rcg: Option<f64>,
    /// Cost equals the optimum within [`COST_EQUALITY`].
    pub optimal: Option<bool>,
    /// Assignment equals the optimal one.
    pub identical: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub group: String,
    pub metric: Metric,
    pub mode: Mode,
    pub n: usize,
    pub seed: u64,
    /// Brute-force minimizer and value of `L`.
    pub global_l: Option<(Vec<usize>, f64)>,
    /// Brute-force minimizer and value of `L̃`.
    pub global_l_tilde: Option<(Vec<usize>, f64)>,
    /// `L` evaluated at the `L̃` minimizer.
    pub l_at_l_tilde_optimum: Option<f64>,
    /// Relative gap in `L` between the two minimizers.
    pub rcg: Option<f64>,
    pub sdp_objective: f64,
    pub feasibility: Feasibility,
    pub nug: Rounded,
    pub singer: Option<Rounded>,
    pub extra: Vec<Rounded>,
    /// Seconds spent solving and rounding.
    pub solve_seconds: f64,
}

fn relative_gap(reference: f64, value: f64) -> f64 {
    let num = (reference - value).abs();
    if reference.abs() < 1e-300 {
        if num < 1e-300 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / reference.abs()
    }
}

fn score(
    assignment: Vec<usize>,
    costs: &PairCostTable,
    group: &FiniteRotationGroup,
    global: Option<&(Vec<usize>, f64)>,
) -> Rounded {
    let cost = costs.cost_of(&assignment, group);
    let (rcg, optimal, identical) = match global {
        Some((a, c)) => (
            Some(relative_gap(*c, cost)),
            Some((cost - c).abs() <= COST_EQUALITY),
            Some(*a == assignment),
        ),
        None => (None, None, None),
    };
    Rounded {
        assignment,
        cost,
        rcg,
        optimal,
        identical,
    }
}

fn feasibility(solution: &NugSolution, irreps: &IrrepSet) -> Result<Feasibility> {
    let n = solution.lambda.n();
    let mut dev = 0.0f64;
    let mut min = f64::INFINITY;
    let mut diag = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            let l = lambda_of(solution, irreps, i, j)?;
            dev = dev.max((l.iter().sum::<f64>() - 1.0).abs());
            min = l.iter().copied().fold(min, f64::min);
            if i == j {
                diag = diag.min(l[0]);
            }
        }
    }
    Ok(Feasibility {
        lambda_sum_deviation: dev,
        lambda_min: min,
        lambda_diag_min: diag,
        min_eigenvalue: solution.diagnostics.min_eigenvalue,
        converged: solution.diagnostics.converged,
        iterations: solution.diagnostics.iterations,
    })
}

/// Runs one instance on a prepared group.
pub fn run_trial_with(
    config: &TrialConfig,
    group: &FiniteRotationGroup,
    irreps: &IrrepSet,
    seed: u64,
) -> Result<TrialReport> {
    let n = config.n.unwrap_or_else(|| points_for_order(group.order()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = random_dataset(config.mode, n, &mut rng);

    let global_l_tilde = if config.skip_brute_force {
        None
    } else {
        Some(brute_force_min(Objective::LTilde, &data, group, config.metric)?)
    };
    let (global_l, l_at_l_tilde_optimum, rcg) = match (&global_l_tilde, config.exact_loss) {
        (Some((a, _)), true) => {
            let gl = brute_force_min(Objective::L, &data, group, config.metric)?;
            let at = LossEvaluator::new(&data, group, config.metric).eval(a)?;
            let gap = relative_gap(gl.1, at);
            (Some(gl), Some(at), Some(gap))
        }
        _ => (None, None, None),
    };

    let start = Instant::now();
    let (problem, solution) = solve_relaxation(&data, group, irreps, config.metric, &config.solver)?;
    let assignment = greedy_round(&solution, problem.costs(), group, &config.rounding)?;
    let solve_seconds = start.elapsed().as_secs_f64();

    let nug = score(assignment, problem.costs(), group, global_l_tilde.as_ref());
    let singer = if config.singer && group.spec().is_cyclic() {
        let a = singer_round(&solution, group, irreps)?;
        Some(score(a, problem.costs(), group, global_l_tilde.as_ref()))
    } else {
        None
    };
    let extra = config
        .extra_rounding
        .iter()
        .map(|params| {
            let a = greedy_round(&solution, problem.costs(), group, params)?;
            Ok(score(a, problem.costs(), group, global_l_tilde.as_ref()))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(TrialReport {
        group: group.name(),
        metric: config.metric,
        mode: config.mode,
        n,
        seed,
        global_l,
        global_l_tilde,
        l_at_l_tilde_optimum,
        rcg,
        sdp_objective: solution.objective,
        feasibility: feasibility(&solution, irreps)?,
        nug,
        singer,
        extra,
        solve_seconds,
    })
}

/// Runs one instance, building the group and its representations.
pub fn run_trial(config: &TrialConfig, seed: u64) -> Result<TrialReport> {
    let group = build_group(config.group)?;
    let reps = irreps(&group)?;
    run_trial_with(config, &group, &reps, seed)
}

/// Seed of trial `index` under `master`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.random()
}

/// Runs `trials` instances in parallel; results are in trial order.
pub fn run_trials(
    config: &TrialConfig,
    master_seed: u64,
    trials: usize,
) -> Result<Vec<Result<TrialReport>>> {
    let group = build_group(config.group)?;
    let reps = irreps(&group)?;
    Ok((0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial_with(config, &group, &reps, trial_seed(master_seed, t)))
        .collect())
}

/// Accuracy and worst gap of one rounding method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundingSummary {
    /// Fraction of trials whose cost matches the optimum.
    pub accuracy: f64,
    /// Fraction of trials whose assignment equals the optimal one.
    pub identical: f64,
    pub max_rcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub trials: usize,
    pub roe: Option<f64>,
    pub ratio_rcg_below_001: Option<f64>,
    pub ratio_rcg_below_01: Option<f64>,
    pub nug: Option<RoundingSummary>,
    pub singer: Option<RoundingSummary>,
    /// One entry per extra rounding parameter set.
    pub extra: Vec<Option<RoundingSummary>>,
    pub unconverged: usize,
    pub mean_solve_seconds: f64,
}

fn fraction(count: usize, total: usize) -> f64 {
    count as f64 / total as f64
}

fn summarize_rounding<'a>(rounded: impl Iterator<Item = &'a Rounded>) -> Option<RoundingSummary> {
    let items: Vec<&Rounded> = rounded.filter(|r| r.optimal.is_some()).collect();
    if items.is_empty() {
        return None;
    }
    let total = items.len();
    Some(RoundingSummary {
        accuracy: fraction(items.iter().filter(|r| r.optimal == Some(true)).count(), total),
        identical: fraction(items.iter().filter(|r| r.identical == Some(true)).count(), total),
        max_rcg: items
            .iter()
            .filter_map(|r| r.rcg)
            .fold(0.0, f64::max),
    })
}

/// Benchmark metrics over a set of trials.
pub fn aggregate(reports: &[TrialReport]) -> Result<Summary> {
    if reports.is_empty() {
        return Err(Error::EmptyInput);
    }
    let total = reports.len();
    let with_l: Vec<&TrialReport> = reports.iter().filter(|r| r.rcg.is_some()).collect();
    let (roe, below_001, below_01) = if with_l.is_empty() {
        (None, None, None)
    } else {
        let k = with_l.len();
        let equal = with_l
            .iter()
            .filter(|r| match (&r.global_l, &r.global_l_tilde) {
                (Some((a, _)), Some((b, _))) => a == b,
                _ => false,
            })
            .count();
        let below = |p: f64| with_l.iter().filter(|r| r.rcg.unwrap() < p).count();
        (
            Some(fraction(equal, k)),
            Some(fraction(below(0.01), k)),
            Some(fraction(below(0.1), k)),
        )
    };
    Ok(Summary {
        trials: total,
        roe,
        ratio_rcg_below_001: below_001,
        ratio_rcg_below_01: below_01,
        nug: summarize_rounding(reports.iter().map(|r| &r.nug)),
        singer: summarize_rounding(reports.iter().filter_map(|r| r.singer.as_ref())),
        extra: (0..reports[0].extra.len())
            .map(|i| summarize_rounding(reports.iter().filter_map(|r| r.extra.get(i))))
            .collect(),
        unconverged: reports.iter().filter(|r| !r.feasibility.converged).count(),
        mean_solve_seconds: reports.iter().map(|r| r.solve_seconds).sum::<f64>() / total as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::procrustes::eval_l_tilde;

    #[test]
    fn points_formula() {
        assert_eq!(points_for_order(2), 11);
        assert_eq!(points_for_order(60), 3);
        assert_eq!(points_for_order(12), 4);
        assert_eq!(points_for_order(7), 5);
        assert_eq!(points_for_order(4), 6);
        assert_eq!(points_for_order(14), 4);
        assert_eq!(points_for_order(24), 4);
        // exact powers do not round up
        assert_eq!(points_for_order(10), 4);
        assert_eq!(points_for_order(1000), 2);
    }

    #[test]
    fn single_point_is_trivial() {
        let group = build_group(GroupSpec::Octahedral).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data = random_dataset(Mode::Rotation, 1, &mut rng);
        for obj in [Objective::L, Objective::LTilde] {
            let (a, c) = brute_force_min(obj, &data, &group, Metric::Arithmetic).unwrap();
            assert_eq!(a, vec![0]);
            assert!(c.abs() < 1e-12);
        }
    }

    #[test]
    fn gauge_fixed_matches_full_enumeration() {
        let group = build_group(GroupSpec::Tetrahedral).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data = random_dataset(Mode::Rotation, 3, &mut rng);
        let (_, fixed) = brute_force_min(Objective::LTilde, &data, &group, Metric::Arithmetic).unwrap();
        let mut full = f64::INFINITY;
        for a in 0..12 {
            for b in 0..12 {
                for c in 0..12 {
                    full = full.min(eval_l_tilde(&data, &[a, b, c], &group, Metric::Arithmetic).unwrap());
                }
            }
        }
        assert!((fixed - full).abs() < 1e-12);
    }

    #[test]
    fn fast_loss_matches_generic() {
        let group = build_group(GroupSpec::Dihedral(3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for mode in [Mode::Rotation, Mode::Projection] {
            let data = random_dataset(mode, 4, &mut rng);
            let ev = LossEvaluator::new(&data, &group, Metric::Arithmetic);
            let a = [0, 2, 5, 3];
            let fast = ev.eval(&a).unwrap();
            let slow = eval_l(&data, &a, &group, Metric::Arithmetic).unwrap();
            assert!((fast - slow).abs() < 1e-12, "{mode}: {fast} vs {slow}");
        }
    }

    #[test]
    fn search_limit_enforced() {
        let group = build_group(GroupSpec::Icosahedral).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data = random_dataset(Mode::Projection, 6, &mut rng);
        assert!(matches!(
            brute_force_min(Objective::LTilde, &data, &group, Metric::Arithmetic),
            Err(Error::SearchSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn aggregate_definitions() {
        let base = TrialReport {
            group: "C2".into(),
            metric: Metric::Arithmetic,
            mode: Mode::Rotation,
            n: 2,
            seed: 0,
            global_l: Some((vec![0, 1], 1.0)),
            global_l_tilde: Some((vec![0, 1], 0.5)),
            l_at_l_tilde_optimum: Some(1.05),
            rcg: Some(0.05),
            sdp_objective: 0.5,
            feasibility: Feasibility {
                lambda_sum_deviation: 0.0,
                lambda_min: 0.0,
                lambda_diag_min: 1.0,
                min_eigenvalue: 0.0,
                converged: true,
                iterations: 1,
            },
            nug: Rounded {
                assignment: vec![0, 1],
                cost: 0.5,
                rcg: Some(0.0),
                optimal: Some(true),
                identical: Some(true),
            },
            singer: None,
            extra: Vec::new(),
            solve_seconds: 0.0,
        };
        let s = aggregate(&[base]).unwrap();
        assert_eq!(s.roe, Some(1.0));
        assert_eq!(s.ratio_rcg_below_01, Some(1.0));
        assert_eq!(s.ratio_rcg_below_001, Some(0.0));
        assert_eq!(s.nug.unwrap().accuracy, 1.0);
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn trial_runs_and_is_reproducible() {
        let mut cfg = TrialConfig::new(GroupSpec::Cyclic(2), Metric::Arithmetic, Mode::Projection);
        cfg.n = Some(5);
        cfg.singer = true;
        let a = run_trial(&cfg, 17).unwrap();
        let b = run_trial(&cfg, 17).unwrap();
        assert_eq!(a.nug, b.nug);
        assert!(a.sdp_objective <= a.global_l_tilde.as_ref().unwrap().1 + 1e-5);
        assert_eq!(a.nug.assignment[0], 0);
        assert!(a.singer.is_some());
    }
}
