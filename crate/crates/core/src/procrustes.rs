//! Means on SO(3) and S², the exact and pairwise losses, and the bound
//! functions relating them.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::so3::{
    dist_s2, dist_so3_quat, s2_exp, s2_log, Direction, Metric, RotationMatrix, UnitQuaternion,
};
use crate::symmetry::FiniteRotationGroup;

/// Resultant norm below which the arithmetic S² mean is undefined.
pub const DEGENERATE_MEAN_THRESHOLD: f64 = 1e-9;
pub const KARCHER_TOLERANCE: f64 = 1e-10;
pub const KARCHER_MAX_ITERATIONS: usize = 100;

/// Whether the data are rotations or projection directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rotation,
    Projection,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Rotation => "rotation",
            Mode::Projection => "projection",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rotation" | "rotations" | "so3" => Ok(Mode::Rotation),
            "projection" | "projections" | "s2" => Ok(Mode::Projection),
            other => Err(Error::InvalidParameter(format!("unknown mode `{other}`"))),
        }
    }
}

/// Input sample: rotations (as quaternions) or directions.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Rotations(Vec<UnitQuaternion>),
    Directions(Vec<Direction>),
}

impl Dataset {
    pub fn len(&self) -> usize {
        match self {
            Dataset::Rotations(v) => v.len(),
            Dataset::Directions(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mode(&self) -> Mode {
        match self {
            Dataset::Rotations(_) => Mode::Rotation,
            Dataset::Directions(_) => Mode::Projection,
        }
    }

    /// Representatives `R_i g_i` or `g_iᵀ n_i`.
    pub fn apply(&self, assignment: &[usize], group: &FiniteRotationGroup) -> Result<Dataset> {
        check_assignment(assignment, self.len(), group)?;
        Ok(match self {
            Dataset::Rotations(v) => Dataset::Rotations(
                v.iter()
                    .zip(assignment)
                    .map(|(q, &g)| *q * *group.element(g))
                    .collect(),
            ),
            Dataset::Directions(v) => Dataset::Directions(
                v.iter()
                    .zip(assignment)
                    .map(|(n, &g)| n.rotate_inverse(group.element(g)))
                    .collect(),
            ),
        })
    }

    /// Distance between points `i` and `j`.
    pub fn distance(&self, i: usize, j: usize, metric: Metric) -> f64 {
        match self {
            Dataset::Rotations(v) => dist_so3_quat(&v[i], &v[j], metric),
            Dataset::Directions(v) => dist_s2(&v[i], &v[j], metric),
        }
    }
}

/// A mean on SO(3) or S².
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanPoint {
    Rotation(UnitQuaternion),
    Direction(Direction),
}

impl MeanPoint {
    /// Distance from the mean to point `i` of `data`.
    pub fn distance_to(&self, data: &Dataset, i: usize, metric: Metric) -> f64 {
        match (self, data) {
            (MeanPoint::Rotation(m), Dataset::Rotations(v)) => dist_so3_quat(m, &v[i], metric),
            (MeanPoint::Direction(m), Dataset::Directions(v)) => dist_s2(m, &v[i], metric),
            _ => panic!("mean and data live on different spaces"),
        }
    }

    pub fn as_vec(&self) -> Vec<f64> {
        match self {
            MeanPoint::Rotation(q) => q.as_array().to_vec(),
            MeanPoint::Direction(n) => n.as_array().to_vec(),
        }
    }
}

/// Mean, variance and the representatives that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanVarResult {
    pub mean: MeanPoint,
    pub variance: f64,
    pub assignment: Vec<usize>,
    /// Pairwise loss `L̃` at `assignment`.
    pub approx_cost: f64,
}

pub(crate) fn check_assignment(
    assignment: &[usize],
    n: usize,
    group: &FiniteRotationGroup,
) -> Result<()> {
    if assignment.len() != n {
        return Err(Error::AssignmentLength {
            expected: n,
            got: assignment.len(),
        });
    }
    for &g in assignment {
        group.check_index(g)?;
    }
    Ok(())
}

/// Kabsch projection of a 3×3 matrix onto SO(3).
#[derive(Debug, Clone, Copy)]
pub struct Kabsch {
    pub rotation: RotationMatrix,
    /// Singular values in decreasing order.
    pub sigma: [f64; 3],
    /// `det(UVᵀ)`.
    pub epsilon: f64,
    /// The minimizer is not unique (`σ₂ + εσ₃ = 0`).
    pub degenerate: bool,
}

pub fn kabsch(m: &Matrix3<f64>) -> Kabsch {
    let svd = m.svd(true, true);
    let mut u = svd.u.expect("U requested");
    let mut v_t = svd.v_t.expect("Vᵀ requested");
    let mut s = svd.singular_values;
    // sort descending, permuting U columns and Vᵀ rows alongside
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    if idx != [0, 1, 2] {
        let (u0, v0, s0) = (u, v_t, s);
        for (k, &i) in idx.iter().enumerate() {
            u.set_column(k, &u0.column(i));
            v_t.set_row(k, &v0.row(i));
            s[k] = s0[i];
        }
    }
    let epsilon = if (u * v_t).determinant() < 0.0 { -1.0 } else { 1.0 };
    let d = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, epsilon));
    let r = u * d * v_t;
    let scale = s[0].max(1.0);
    Kabsch {
        rotation: RotationMatrix::new(r).unwrap_or_else(|_| RotationMatrix::identity()),
        sigma: [s[0], s[1], s[2]],
        epsilon,
        degenerate: (s[1] + epsilon * s[2]).abs() <= 1e-12 * scale,
    }
}

fn euclidean_mean(rotations: &[RotationMatrix]) -> Matrix3<f64> {
    let mut acc = Matrix3::zeros();
    for r in rotations {
        acc += r.matrix();
    }
    acc / rotations.len() as f64
}

/// Arithmetic (chordal) mean of rotations.
pub fn mean_so3_arith(rotations: &[RotationMatrix]) -> Result<RotationMatrix> {
    if rotations.is_empty() {
        return Err(Error::EmptyInput);
    }
    let k = kabsch(&euclidean_mean(rotations));
    if k.degenerate {
        log::warn!("arithmetic SO(3) mean is not unique; returning the SVD candidate");
    }
    Ok(k.rotation)
}

/// Arithmetic (chordal) mean of directions.
pub fn mean_s2_arith(dirs: &[Direction]) -> Result<Direction> {
    if dirs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sum: Vector3<f64> = dirs.iter().map(|d| *d.vector()).sum();
    let mean = sum / dirs.len() as f64;
    let norm = mean.norm();
    if norm < DEGENERATE_MEAN_THRESHOLD {
        return Err(Error::DegenerateMean {
            norm,
            threshold: DEGENERATE_MEAN_THRESHOLD,
        });
    }
    Ok(Direction::from_unit(mean / norm))
}

struct Karcher<T> {
    mean: T,
    last_step: f64,
    converged: bool,
}

fn karcher_so3(rotations: &[UnitQuaternion]) -> Karcher<UnitQuaternion> {
    let matrices: Vec<RotationMatrix> = rotations.iter().map(|q| q.to_matrix()).collect();
    let mut mu = kabsch(&euclidean_mean(&matrices)).rotation.to_quaternion();
    let n = rotations.len() as f64;
    let mut step = f64::INFINITY;
    for _ in 0..KARCHER_MAX_ITERATIONS {
        let inv = mu.conjugate();
        let delta: Vector3<f64> = rotations.iter().map(|q| (inv * *q).log()).sum::<Vector3<f64>>() / n;
        step = delta.norm();
        mu = mu * UnitQuaternion::exp(&delta);
        if step < KARCHER_TOLERANCE {
            return Karcher { mean: mu, last_step: step, converged: true };
        }
    }
    Karcher { mean: mu, last_step: step, converged: false }
}

fn karcher_s2(dirs: &[Direction]) -> Karcher<Direction> {
    let mut mu = mean_s2_arith(dirs).unwrap_or(dirs[0]);
    let n = dirs.len() as f64;
    let mut step = f64::INFINITY;
    for _ in 0..KARCHER_MAX_ITERATIONS {
        let delta: Vector3<f64> = dirs.iter().map(|d| s2_log(&mu, d)).sum::<Vector3<f64>>() / n;
        step = delta.norm();
        mu = s2_exp(&mu, &delta);
        if step < KARCHER_TOLERANCE {
            return Karcher { mean: mu, last_step: step, converged: true };
        }
    }
    Karcher { mean: mu, last_step: step, converged: false }
}

fn not_converged(last_step: f64, last_iterate: Vec<f64>) -> Error {
    Error::KarcherNotConverged {
        iterations: KARCHER_MAX_ITERATIONS,
        last_step,
        last_iterate,
    }
}

/// Karcher (geodesic) mean of rotations.
pub fn mean_geometric_so3(rotations: &[UnitQuaternion]) -> Result<UnitQuaternion> {
    if rotations.is_empty() {
        return Err(Error::EmptyInput);
    }
    let k = karcher_so3(rotations);
    if k.converged {
        Ok(k.mean)
    } else {
        Err(not_converged(k.last_step, k.mean.as_array().to_vec()))
    }
}

/// Karcher (geodesic) mean of directions.
pub fn mean_geometric_s2(dirs: &[Direction]) -> Result<Direction> {
    if dirs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let k = karcher_s2(dirs);
    if k.converged {
        Ok(k.mean)
    } else {
        Err(not_converged(k.last_step, k.mean.as_array().to_vec()))
    }
}

/// Mean of a dataset under `metric`.
pub fn mean_of(data: &Dataset, metric: Metric) -> Result<MeanPoint> {
    match (data, metric) {
        (Dataset::Rotations(v), Metric::Arithmetic) => {
            let m: Vec<RotationMatrix> = v.iter().map(|q| q.to_matrix()).collect();
            Ok(MeanPoint::Rotation(mean_so3_arith(&m)?.to_quaternion()))
        }
        (Dataset::Rotations(v), Metric::Geometric) => {
            Ok(MeanPoint::Rotation(mean_geometric_so3(v)?))
        }
        (Dataset::Directions(v), Metric::Arithmetic) => Ok(MeanPoint::Direction(mean_s2_arith(v)?)),
        (Dataset::Directions(v), Metric::Geometric) => {
            Ok(MeanPoint::Direction(mean_geometric_s2(v)?))
        }
    }
}

fn warn_unconverged(converged: bool, last_step: f64) {
    if !converged {
        log::warn!("Karcher mean stopped after {KARCHER_MAX_ITERATIONS} iterations (last step {last_step:.2e}); using the last iterate");
    }
}

/// Mean and `(1/N) Σ d(·, mean)²` of the representatives selected by `assignment`.
///
/// A geometric mean that hits the iteration cap is used as is, with a warning.
pub fn mean_and_variance(
    data: &Dataset,
    assignment: &[usize],
    group: &FiniteRotationGroup,
    metric: Metric,
) -> Result<(MeanPoint, f64)> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let reps = data.apply(assignment, group)?;
    let mean = match (&reps, metric) {
        (Dataset::Rotations(v), Metric::Geometric) => {
            let k = karcher_so3(v);
            warn_unconverged(k.converged, k.last_step);
            MeanPoint::Rotation(k.mean)
        }
        (Dataset::Directions(v), Metric::Geometric) => {
            let k = karcher_s2(v);
            warn_unconverged(k.converged, k.last_step);
            MeanPoint::Direction(k.mean)
        }
        _ => mean_of(&reps, metric)?,
    };
    let n = reps.len();
    let var = (0..n)
        .map(|i| mean.distance_to(&reps, i, metric).powi(2))
        .sum::<f64>()
        / n as f64;
    Ok((mean, var))
}

/// Exact loss `L(g_1, …, g_N)`.
pub fn eval_l(
    data: &Dataset,
    assignment: &[usize],
    group: &FiniteRotationGroup,
    metric: Metric,
) -> Result<f64> {
    mean_and_variance(data, assignment, group, metric).map(|(_, v)| v)
}

/// Pairwise loss `L̃ = (1/2N²) Σ_{i,j} d(·,·)²` over ordered pairs.
pub fn eval_l_tilde(
    data: &Dataset,
    assignment: &[usize],
    group: &FiniteRotationGroup,
    metric: Metric,
) -> Result<f64> {
    let reps = data.apply(assignment, group)?;
    let n = reps.len();
    if n == 0 {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            acc += reps.distance(i, j, metric).powi(2);
        }
    }
    // each unordered pair appears twice
    Ok(2.0 * acc / (2.0 * (n * n) as f64))
}

/// Full result for a chosen assignment.
pub fn mean_var_result(
    data: &Dataset,
    assignment: &[usize],
    group: &FiniteRotationGroup,
    metric: Metric,
) -> Result<MeanVarResult> {
    let (mean, variance) = mean_and_variance(data, assignment, group, metric)?;
    let approx_cost = eval_l_tilde(data, assignment, group, metric)?;
    Ok(MeanVarResult {
        mean,
        variance,
        assignment: assignment.to_vec(),
        approx_cost,
    })
}

fn check_domain(x: f64, lo: f64, hi: f64) -> Result<()> {
    // small slack for roundoff at the interval ends
    let slack = 1e-12;
    if !(x >= lo - slack && x <= hi + slack) {
        return Err(Error::OutOfDomain { value: x, lo, hi });
    }
    Ok(())
}

/// `x − x²/4` on `[0, 2]`: the exact map from `L` to `L̃` on S² (arithmetic).
pub fn bound_f(x: f64) -> Result<f64> {
    check_domain(x, 0.0, 2.0)?;
    Ok(x - x * x / 4.0)
}

/// Lower bound of `L̃` in terms of `L` on SO(3) (arithmetic).
pub fn bound_f1(x: f64) -> Result<f64> {
    check_domain(x, 0.0, 6.0)?;
    Ok(if x <= 4.0 {
        x - x * x / 8.0
    } else if x <= 16.0 / 3.0 {
        -8.0 + 4.0 * x - 3.0 * x * x / 8.0
    } else {
        -24.0 + 9.0 * x - 3.0 * x * x / 4.0
    })
}

/// Upper bound of `L̃` in terms of `L` on SO(3) (arithmetic).
pub fn bound_f2(x: f64) -> Result<f64> {
    check_domain(x, 0.0, 6.0)?;
    Ok(x - x * x / 12.0)
}

pub fn bound_f2_inv(y: f64) -> Result<f64> {
    check_domain(y, 0.0, 3.0)?;
    Ok(6.0 - (36.0 - 12.0 * y).max(0.0).sqrt())
}
