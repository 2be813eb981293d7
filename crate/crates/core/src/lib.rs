//! Means and variances of rotations and projection directions under a
//! finite molecular symmetry group.
//!
//! The estimator minimizes a pairwise surrogate of the variance over
//! assignments of group elements, using a semidefinite relaxation built from
//! the group's irreducible representations and a greedy multi-hypothesis
//! rounding.

pub mod cluster;
pub mod error;
pub mod io;
pub mod nug;
pub mod oracle;
pub mod pipeline;
pub mod procrustes;
pub mod repr;
pub mod rounding;
pub mod so3;
pub mod symmetry;

pub use error::{Error, Result};
pub use nug::{build_problem, solve_sdp, NugProblem, NugSolution, PairCostTable, SolverOptions};
pub use pipeline::{estimate, Estimate, EstimateOptions};
pub use procrustes::{Dataset, MeanPoint, MeanVarResult, Mode};
pub use repr::{irreps, IrrepSet};
pub use rounding::{greedy_round, singer_round, RoundingParams};
pub use so3::{Direction, Metric, RotationMatrix, UnitQuaternion};
pub use symmetry::{build_group, FiniteRotationGroup, GroupSpec};
