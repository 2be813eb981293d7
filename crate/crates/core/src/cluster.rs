//! K-means on S²/𝒢 with symmetry-aware means, and the fundamental-domain
//! baseline.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pipeline::{estimate, EstimateOptions};
use crate::procrustes::{mean_s2_arith, Dataset, MeanPoint};
use crate::repr::{irreps, IrrepSet};
use crate::rounding::RoundingParams;
use crate::so3::{dist_s2, Direction, Metric, UnitQuaternion};
use crate::symmetry::{build_group, quotient_dist_s2, FiniteRotationGroup, GroupSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterConfig {
    pub k: usize,
    pub group: GroupSpec,
    pub metric: Metric,
    /// Members drawn per cluster when computing a mean.
    pub subsample: usize,
    pub max_iterations: usize,
    pub seed: u64,
    pub rounding: RoundingParams,
    pub init: Init,
    /// Independent runs; the one with the lowest final objective is kept.
    pub restarts: usize,
}

/// How initial centers are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    /// `k` distinct points uniformly at random.
    Random,
    /// Distance-weighted sampling (k-means++).
    PlusPlus,
}

impl ClusterConfig {
    /// Defaults for the quotient method: k-means++ seeding, five restarts.
    pub fn new(k: usize, group: GroupSpec, seed: u64) -> Self {
        ClusterConfig {
            k,
            group,
            metric: Metric::Arithmetic,
            subsample: 10,
            max_iterations: 50,
            seed,
            rounding: RoundingParams::default(),
            init: Init::PlusPlus,
            restarts: 5,
        }
    }

    /// Classical K-means settings: uniform initial centers, one run.
    pub fn classical(k: usize, group: GroupSpec, seed: u64) -> Self {
        ClusterConfig {
            init: Init::Random,
            restarts: 1,
            ..Self::new(k, group, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("cluster count must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be at least 1".into()));
        }
        if self.subsample == 0 {
            return Err(Error::InvalidParameter("subsample size must be at least 1".into()));
        }
        self.group.validate()?;
        self.rounding.validate()
    }
}

/// One class of synthetic directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticClass {
    pub center: Direction,
    /// Chord distance from every point to the center.
    pub radius: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SyntheticSpec {
    pub classes: Vec<SyntheticClass>,
}

impl SyntheticSpec {
    /// Five classes of 100 points, radius 0.2, used with C₃.
    pub fn five_class_c3() -> Self {
        let s3 = 3f64.sqrt();
        let centers = [
            (0.0, 0.5, s3 / 2.0),
            (0.75, s3 / 4.0, 0.5),
            (1.0, 0.0, 0.0),
            (0.75, s3 / 4.0, -0.5),
            (0.0, 0.5, -s3 / 2.0),
        ];
        SyntheticSpec {
            classes: centers
                .iter()
                .map(|&(x, y, z)| SyntheticClass {
                    center: Direction::new(x, y, z).expect("unit center"),
                    radius: 0.2,
                    count: 100,
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.classes {
            if !(c.radius > 0.0 && c.radius < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "radius {} outside (0, 1)",
                    c.radius
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    pub direction: Direction,
    pub label: usize,
}

fn tangent_basis(c: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if c.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let u = (helper - c * c.dot(&helper)).normalize();
    (u, c.cross(&u))
}

/// Evenly spaced points on a circle about each class center.
///
/// With `scramble`, each point is replaced by `gᵀ p` for a uniformly drawn
/// `g`, which leaves its class in S²/𝒢 unchanged.
pub fn gen_synthetic(
    spec: &SyntheticSpec,
    group: &FiniteRotationGroup,
    scramble: Option<u64>,
) -> Result<Vec<LabeledPoint>> {
    spec.validate()?;
    let mut rng = scramble.map(ChaCha8Rng::seed_from_u64);
    let mut out = Vec::new();
    for (label, class) in spec.classes.iter().enumerate() {
        let c = *class.center.vector();
        let (u, v) = tangent_basis(&c);
        let alpha = 2.0 * (class.radius / 2.0).asin();
        for j in 0..class.count {
            let theta = 2.0 * PI * j as f64 / class.count as f64;
            let p = c * alpha.cos() + (u * theta.cos() + v * theta.sin()) * alpha.sin();
            let mut d = Direction::normalize(p)?;
            if let Some(rng) = rng.as_mut() {
                let g = rng.random_range(0..group.order());
                d = d.rotate_inverse(group.element(g));
            }
            out.push(LabeledPoint {
                direction: d,
                label,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterResult {
    pub labels: Vec<usize>,
    pub centers: Vec<[f64; 3]>,
    /// Sum of squared distances to the assigned center after each assignment.
    pub objective: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Best-permutation agreement with the true labels, when known.
    pub accuracy: Option<f64>,
}

/// Fraction of points whose label matches the truth under the best
/// relabeling.
pub fn label_accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::AssignmentLength {
            expected: truth.len(),
            got: predicted.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::EmptyInput);
    }
    let kp = predicted.iter().max().unwrap() + 1;
    let kt = truth.iter().max().unwrap() + 1;
    let k = kp.max(kt);
    if k > 10 {
        return Err(Error::InvalidParameter(format!(
            "exhaustive label matching supports at most 10 labels, got {k}"
        )));
    }
    let mut counts = vec![vec![0usize; k]; k];
    for (&p, &t) in predicted.iter().zip(truth) {
        counts[p][t] += 1;
    }
    // DP over subsets of true labels
    let mut best = vec![0usize; 1 << k];
    for mask in 0usize..(1 << k) {
        let p = mask.count_ones() as usize;
        if p >= k {
            continue;
        }
        for t in 0..k {
            if mask & (1 << t) == 0 {
                let next = mask | (1 << t);
                best[next] = best[next].max(best[mask] + counts[p][t]);
            }
        }
    }
    Ok(best[(1 << k) - 1] as f64 / predicted.len() as f64)
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(a.wrapping_mul(0x1_0000_0000).wrapping_add(b));
    rng.random()
}

fn seed_centers<F>(
    points: &[Direction],
    k: usize,
    init: Init,
    rng: &mut ChaCha8Rng,
    dist: F,
) -> Vec<Direction>
where
    F: Fn(&Direction, &Direction) -> f64 + Sync,
{
    if init == Init::Random {
        return sample(rng, points.len(), k).into_iter().map(|i| points[i]).collect();
    }
    let mut centers = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| dist(p, &centers[0]).powi(2)).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total <= 0.0 {
            rng.random_range(0..points.len())
        } else {
            let mut r = rng.random::<f64>() * total;
            let mut idx = points.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                if r < *w {
                    idx = i;
                    break;
                }
                r -= w;
            }
            idx
        };
        let c = points[idx];
        for (p, d) in points.iter().zip(d2.iter_mut()) {
            *d = d.min(dist(p, &c).powi(2));
        }
        centers.push(c);
    }
    centers
}

fn assign<F>(points: &[Direction], centers: &[Direction], dist: &F) -> (Vec<usize>, Vec<f64>)
where
    F: Fn(&Direction, &Direction) -> f64 + Sync,
{
    points
        .par_iter()
        .map(|p| {
            let mut best = (0, f64::INFINITY);
            for (c, center) in centers.iter().enumerate() {
                let d = dist(p, center);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best
        })
        .unzip()
}

/// Moves the farthest point into each empty cluster.
fn fill_empty(labels: &mut [usize], dists: &mut [f64], centers: &mut [Direction], points: &[Direction]) {
    for c in 0..centers.len() {
        if labels.contains(&c) {
            continue;
        }
        let far = (0..points.len())
            .max_by(|&a, &b| dists[a].total_cmp(&dists[b]))
            .unwrap();
        labels[far] = c;
        dists[far] = 0.0;
        centers[c] = points[far];
    }
}

type MeanFn<'a> = dyn Fn(&[Direction], u64, &Direction) -> Result<Direction> + Sync + 'a;

/// Lloyd iterations with a caller-supplied mean, best of several restarts.
fn lloyd<F>(
    points: &[Direction],
    truth: Option<&[usize]>,
    config: &ClusterConfig,
    dist: F,
    mean: &MeanFn<'_>,
) -> Result<ClusterResult>
where
    F: Fn(&Direction, &Direction) -> f64 + Sync,
{
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    if config.k > points.len() {
        return Err(Error::InvalidParameter(format!(
            "cluster count {} exceeds number of points {}",
            config.k,
            points.len()
        )));
    }
    let mut best: Option<ClusterResult> = None;
    for r in 0..config.restarts {
        let seed = if r == 0 {
            config.seed
        } else {
            mix(config.seed, u64::MAX, r as u64)
        };
        let run = lloyd_once(points, config, seed, &dist, mean)?;
        let better = match &best {
            None => true,
            Some(b) => run.objective.last() < b.objective.last(),
        };
        if better {
            best = Some(run);
        }
    }
    let mut best = best.expect("at least one restart");
    best.accuracy = truth.map(|t| label_accuracy(&best.labels, t)).transpose()?;
    Ok(best)
}

fn lloyd_once<F>(
    points: &[Direction],
    config: &ClusterConfig,
    seed: u64,
    dist: &F,
    mean: &MeanFn<'_>,
) -> Result<ClusterResult>
where
    F: Fn(&Direction, &Direction) -> f64 + Sync,
{
    let k = config.k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_centers(points, k, config.init, &mut rng, dist);
    let (mut labels, mut dists) = assign(points, &centers, dist);
    fill_empty(&mut labels, &mut dists, &mut centers, points);
    let mut objective = vec![dists.iter().map(|d| d * d).sum()];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        iterations += 1;
        let it = iterations as u64;
        let members: Vec<Vec<Direction>> = (0..k)
            .map(|c| {
                points
                    .iter()
                    .zip(&labels)
                    .filter(|(_, &l)| l == c)
                    .map(|(p, _)| *p)
                    .collect()
            })
            .collect();
        centers = members
            .par_iter()
            .enumerate()
            .map(|(c, m)| mean(m, mix(seed, it, c as u64), &centers[c]))
            .collect::<Result<Vec<_>>>()?;
        let (mut next, mut next_d) = assign(points, &centers, dist);
        fill_empty(&mut next, &mut next_d, &mut centers, points);
        objective.push(next_d.iter().map(|d| d * d).sum());
        let stable = next == labels;
        labels = next;
        if stable {
            converged = true;
            break;
        }
    }
    Ok(ClusterResult {
        labels,
        centers: centers.iter().map(|c| c.as_array()).collect(),
        objective,
        iterations,
        converged,
        accuracy: None,
    })
}

/// K-means on S²/𝒢 with quotient distances and relax-and-round means of
/// subsampled clusters.
pub fn kmeans_quotient(
    points: &[Direction],
    truth: Option<&[usize]>,
    config: &ClusterConfig,
) -> Result<ClusterResult> {
    config.validate()?;
    let group = build_group(config.group)?;
    let reps = irreps(&group)?;
    kmeans_quotient_with(points, truth, config, &group, &reps)
}

pub fn kmeans_quotient_with(
    points: &[Direction],
    truth: Option<&[usize]>,
    config: &ClusterConfig,
    group: &FiniteRotationGroup,
    reps: &IrrepSet,
) -> Result<ClusterResult> {
    config.validate()?;
    let metric = config.metric;
    let opts = EstimateOptions {
        rounding: config.rounding,
        ..Default::default()
    };
    let dist = |a: &Direction, b: &Direction| quotient_dist_s2(a, b, group, metric).0;
    let mean = |members: &[Direction], step_seed: u64, previous: &Direction| {
        if members.is_empty() {
            return Ok(*previous);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(step_seed);
        let take = config.subsample.min(members.len());
        let chosen: Vec<Direction> = sample(&mut rng, members.len(), take)
            .into_iter()
            .map(|i| members[i])
            .collect();
        match estimate(&Dataset::Directions(chosen), group, reps, metric, &opts) {
            Ok(est) => match est.result.mean {
                MeanPoint::Direction(d) => Ok(d),
                MeanPoint::Rotation(_) => unreachable!("directions yield a direction mean"),
            },
            Err(Error::DegenerateMean { .. }) => Ok(*previous),
            Err(e) => Err(e),
        }
    };
    lloyd(points, truth, config, dist, &mean)
}

/// Representative of `p` in the sector `φ ∈ [0, 2π/n)` about the z-axis.
pub fn to_fundamental_domain(p: &Direction, n: usize) -> Direction {
    let v = p.vector();
    let sector = 2.0 * PI / n as f64;
    let phi = v.y.atan2(v.x).rem_euclid(2.0 * PI);
    let turns = (phi / sector).floor();
    let angle = -turns * sector;
    let q = UnitQuaternion::from_axis_angle(Vector3::z(), angle).expect("unit axis");
    p.rotate(&q)
}

/// Classical K-means after folding every point into the fundamental domain.
pub fn kmeans_fundamental_baseline(
    points: &[Direction],
    truth: Option<&[usize]>,
    config: &ClusterConfig,
) -> Result<ClusterResult> {
    config.validate()?;
    let n = match config.group {
        GroupSpec::Cyclic(n) => n,
        other => return Err(Error::NoFundamentalDomain(other.to_string())),
    };
    let folded: Vec<Direction> = points.iter().map(|p| to_fundamental_domain(p, n)).collect();
    let dist = |a: &Direction, b: &Direction| dist_s2(a, b, Metric::Arithmetic);
    let mean = |members: &[Direction], _: u64, previous: &Direction| {
        if members.is_empty() {
            return Ok(*previous);
        }
        match mean_s2_arith(members) {
            Ok(d) => Ok(d),
            Err(Error::DegenerateMean { .. }) => Ok(*previous),
            Err(e) => Err(e),
        }
    };
    lloyd(&folded, truth, config, dist, &mean)
}
