//! End-to-end mean and variance under symmetry: relax, round, average.

use crate::error::{Error, Result};
use crate::nug::{build_problem, solve_sdp_with, Diagnostics, NugSolution, SolverOptions};
use crate::procrustes::{bound_f1, bound_f2_inv, mean_var_result, Dataset, MeanVarResult, Mode};
use crate::repr::IrrepSet;
use crate::rounding::{greedy_round, RoundingParams};
use crate::so3::Metric;
use crate::symmetry::FiniteRotationGroup;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EstimateOptions {
    pub rounding: RoundingParams,
    pub solver: SolverOptions,
}

/// Mean and variance of a symmetric sample with solver bookkeeping.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub result: MeanVarResult,
    pub sdp_objective: f64,
    pub diagnostics: Diagnostics,
    /// Lower bound on the true variance; arithmetic rotations only.
    pub variance_lower_bound: Option<f64>,
}

/// Solves the relaxation, accepting the last iterate if the solver stalls.
pub fn solve_relaxation(
    data: &Dataset,
    group: &FiniteRotationGroup,
    irreps: &IrrepSet,
    metric: Metric,
    solver: &SolverOptions,
) -> Result<(crate::nug::NugProblem, NugSolution)> {
    let problem = build_problem(data, group, irreps, metric)?;
    let solution = match solve_sdp_with(&problem, solver, None) {
        Ok(s) => s,
        Err(Error::SolverNotConverged {
            iterations,
            primal,
            dual,
            last,
        }) => {
            log::warn!(
                "SDP stopped after {iterations} iterations (primal {primal:e}, dual {dual:e}); using last iterate"
            );
            *last
        }
        Err(e) => return Err(e),
    };
    Ok((problem, solution))
}

/// Estimates the mean and variance of `data` modulo `group`.
pub fn estimate(
    data: &Dataset,
    group: &FiniteRotationGroup,
    irreps: &IrrepSet,
    metric: Metric,
    opts: &EstimateOptions,
) -> Result<Estimate> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    opts.rounding.validate()?;
    let (problem, solution) = solve_relaxation(data, group, irreps, metric, &opts.solver)?;
    let assignment = greedy_round(&solution, problem.costs(), group, &opts.rounding)?;
    let result = mean_var_result(data, &assignment, group, metric)?;
    let variance_lower_bound = match (data.mode(), metric) {
        (Mode::Rotation, Metric::Arithmetic) => {
            let v = result.variance.clamp(0.0, 6.0);
            Some(bound_f2_inv(bound_f1(v)?.min(3.0))?)
        }
        _ => None,
    };
    Ok(Estimate {
        result,
        sdp_objective: solution.objective,
        diagnostics: solution.diagnostics,
        variance_lower_bound,
    })
}
