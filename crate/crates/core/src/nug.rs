//! Non-unique-games relaxation: pairwise costs, their Fourier blocks, and a
//! first-order solver for the resulting semidefinite program.
//!
//! The solver is ADMM on the splitting `λ ∈ A`, `Z ∈ PSD`, `T(λ) = Z`, where
//! `A` is the polytope of symmetric pairwise probability tables with
//! `λ_ii = δ_e` and `T(λ)^k_ij = Σ_g λ_ij(g) ρ_k(g)`. With the inner product
//! `Σ_k (d_k/|𝒢|) Re Tr(XᴴY)` the map `T` is an isometry, so the λ-step is a
//! Euclidean projection onto `A` and the Z-step is an eigenvalue clip.

use std::collections::VecDeque;

use nalgebra::linalg::SymmetricEigen;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::procrustes::{check_assignment, Dataset};
use crate::repr::{fourier_forward, CMatrix, IrrepSet, C64};
use crate::so3::Metric;
use crate::symmetry::FiniteRotationGroup;

/// `N · max d_k` at or above which problems are rejected.
pub const SCALE_LIMIT: usize = 300;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 20_000;

/// Imaginary residue tolerated silently when recovering λ.
const IMAG_DISCARD: f64 = 1e-8;
/// Imaginary residue above which recovery fails.
const IMAG_FAIL: f64 = 1e-6;

/// `f_ij(g)` for all ordered pairs, including the `1/(2N²)` factor.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCostTable {
    n: usize,
    m: usize,
    values: Vec<f64>,
}

impl PairCostTable {
    pub fn from_fn(n: usize, m: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(n * n * m);
        for i in 0..n {
            for j in 0..n {
                for g in 0..m {
                    values.push(f(i, j, g));
                }
            }
        }
        PairCostTable { n, m, values }
    }

    /// Costs of `data` under `group`: `d(R_i g, R_j)²` or `d(gᵀn_i, n_j)²`, scaled.
    pub fn from_data(data: &Dataset, group: &FiniteRotationGroup, metric: Metric) -> Self {
        let n = data.len();
        let m = group.order();
        let scale = 1.0 / (2.0 * (n * n) as f64);
        let mut table = PairCostTable {
            n,
            m,
            values: vec![0.0; n * n * m],
        };
        let transformed: Vec<Dataset> = (0..m)
            .map(|g| {
                data.apply(&vec![g; n], group)
                    .expect("uniform assignment is valid")
            })
            .collect();
        for i in 0..n {
            for j in 0..n {
                for g in 0..m {
                    let d = match (&transformed[g], data) {
                        (Dataset::Rotations(a), Dataset::Rotations(b)) => {
                            crate::so3::dist_so3_quat(&a[i], &b[j], metric)
                        }
                        (Dataset::Directions(a), Dataset::Directions(b)) => {
                            crate::so3::dist_s2(&a[i], &b[j], metric)
                        }
                        _ => unreachable!(),
                    };
                    table.values[(i * n + j) * m + g] = scale * d * d;
                }
            }
        }
        // the self-cost at the identity is exactly zero
        for i in 0..n {
            table.values[(i * n + i) * m] = 0.0;
        }
        table
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, g: usize) -> f64 {
        self.values[(i * self.n + j) * self.m + g]
    }

    pub fn pair(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.n + j) * self.m;
        &self.values[start..start + self.m]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `Σ_{i,j} f_ij(g_i g_j⁻¹)`, the pairwise loss at an assignment.
    pub fn cost_of(&self, assignment: &[usize], group: &FiniteRotationGroup) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                acc += self.get(i, j, group.relative(assignment[i], assignment[j]));
            }
        }
        acc
    }
}

/// The relaxation of one instance.
#[derive(Debug, Clone)]
pub struct NugProblem {
    group: FiniteRotationGroup,
    irreps: IrrepSet,
    costs: PairCostTable,
    blocks: Vec<CMatrix>,
}

/// Builds the Fourier blocks `F_k` from a cost table.
///
/// Block `(i, j)` of `F_k` holds `d_k f̂_ji(k)`, so that
/// `Σ_k Tr(F_k X^k) = Σ_{ij} Σ_g f_ij(g) λ_ij(g)`.
pub fn problem_from_costs(
    costs: PairCostTable,
    group: &FiniteRotationGroup,
    irreps: &IrrepSet,
) -> Result<NugProblem> {
    let n = costs.n();
    if costs.order() != group.order() || irreps.group_order() != group.order() {
        return Err(Error::InvalidParameter(
            "cost table, group and representations disagree on the group order".into(),
        ));
    }
    let dims = irreps.dims();
    let mut blocks: Vec<CMatrix> = dims.iter().map(|&d| CMatrix::zeros(n * d, n * d)).collect();
    for i in 0..n {
        for j in 0..n {
            let f: Vec<C64> = costs.pair(j, i).iter().map(|&v| C64::new(v, 0.0)).collect();
            let hat = fourier_forward(&f, irreps)?;
            for (k, h) in hat.iter().enumerate() {
                let d = dims[k];
                let scaled = h * C64::new(d as f64, 0.0);
                blocks[k].view_mut((i * d, j * d), (d, d)).copy_from(&scaled);
            }
        }
    }
    Ok(NugProblem {
        group: group.clone(),
        irreps: irreps.clone(),
        costs,
        blocks,
    })
}

/// Assembles the relaxation for `data`.
pub fn build_problem(
    data: &Dataset,
    group: &FiniteRotationGroup,
    irreps: &IrrepSet,
    metric: Metric,
) -> Result<NugProblem> {
    problem_from_costs(PairCostTable::from_data(data, group, metric), group, irreps)
}

impl NugProblem {
    pub fn n(&self) -> usize {
        self.costs.n()
    }

    pub fn group(&self) -> &FiniteRotationGroup {
        &self.group
    }

    pub fn irreps(&self) -> &IrrepSet {
        &self.irreps
    }

    pub fn costs(&self) -> &PairCostTable {
        &self.costs
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    /// `Σ_k Re Tr(F_k X^k)`.
    pub fn block_objective(&self, x: &[CMatrix]) -> f64 {
        self.blocks
            .iter()
            .zip(x)
            .map(|(f, x)| crate::repr::trace_product(f, x).re)
            .sum()
    }

    /// `Σ_{ij} Σ_g f_ij(g) λ_ij(g)`.
    pub fn lambda_objective(&self, lambda: &LambdaTable) -> f64 {
        self.costs
            .values
            .iter()
            .zip(&lambda.values)
            .map(|(f, l)| f * l)
            .sum()
    }

    /// Rank-one lift `X^k_ij = ρ_k(g_i) ρ_k(g_j)ᴴ` of an assignment.
    pub fn lift(&self, assignment: &[usize]) -> Result<NugSolution> {
        check_assignment(assignment, self.n(), &self.group)?;
        let n = self.n();
        let m = self.group.order();
        let mut lambda = LambdaTable::zeros(n, m);
        for i in 0..n {
            for j in 0..n {
                lambda.set(i, j, self.group.relative(assignment[i], assignment[j]), 1.0);
            }
        }
        let basis = Basis::new(&self.irreps);
        let blocks = basis.synthesize(&lambda);
        Ok(self.finish(lambda, blocks, 0, 0.0, 0.0, true))
    }

    fn finish(
        &self,
        lambda: LambdaTable,
        blocks: Vec<CMatrix>,
        iterations: usize,
        primal: f64,
        dual: f64,
        converged: bool,
    ) -> NugSolution {
        let diagnostics = Diagnostics {
            iterations,
            primal_residual: primal,
            dual_residual: dual,
            converged,
            min_eigenvalue: blocks
                .iter()
                .map(min_eigenvalue)
                .fold(f64::INFINITY, f64::min),
            max_affine_violation: affine_violation(&lambda, &self.group),
            min_lambda: lambda.values.iter().copied().fold(f64::INFINITY, f64::min),
        };
        NugSolution {
            objective: self.lambda_objective(&lambda),
            lambda,
            blocks,
            diagnostics,
        }
    }
}

/// Real table `λ_ij(g)` over ordered pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaTable {
    n: usize,
    m: usize,
    values: Vec<f64>,
}

impl LambdaTable {
    pub fn zeros(n: usize, m: usize) -> Self {
        LambdaTable {
            n,
            m,
            values: vec![0.0; n * n * m],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, g: usize) -> f64 {
        self.values[(i * self.n + j) * self.m + g]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, g: usize, v: f64) {
        self.values[(i * self.n + j) * self.m + g] = v;
    }

    pub fn pair(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.n + j) * self.m;
        &self.values[start..start + self.m]
    }

    fn pair_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let start = (i * self.n + j) * self.m;
        &mut self.values[start..start + self.m]
    }
}

/// Feasibility and convergence measurements of a solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
    /// Smallest eigenvalue over all blocks `X^k`.
    pub min_eigenvalue: f64,
    /// Largest violation of `Σ_g λ_ij(g) = 1`, `λ_ii = δ_e` and `λ_ji(g) = λ_ij(g⁻¹)`.
    pub max_affine_violation: f64,
    pub min_lambda: f64,
}

#[derive(Debug, Clone)]
pub struct NugSolution {
    pub blocks: Vec<CMatrix>,
    pub lambda: LambdaTable,
    /// `Σ_k Tr(F_k X^k)` in the units of the cost table.
    pub objective: f64,
    pub diagnostics: Diagnostics,
}

/// Per-iteration solver record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub penalty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iters: usize,
    /// Initial penalty parameter.
    pub penalty: f64,
    /// Iterations between penalty adjustments.
    pub balance_every: usize,
    /// Residual ratio that triggers a penalty adjustment.
    pub balance_ratio: f64,
    pub over_relaxation: f64,
    /// Number of past residuals used for Anderson extrapolation; 0 disables it.
    pub anderson_memory: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOLERANCE,
            max_iters: DEFAULT_MAX_ITERATIONS,
            penalty: 1.0,
            balance_every: 50,
            balance_ratio: 2.0,
            over_relaxation: 1.6,
            anderson_memory: 10,
        }
    }
}

/// Solves the relaxation with default options apart from `tol` and `max_iters`.
pub fn solve_sdp(problem: &NugProblem, tol: f64, max_iters: usize) -> Result<NugSolution> {
    let opts = SolverOptions {
        tol,
        max_iters,
        ..SolverOptions::default()
    };
    solve_sdp_with(problem, &opts, None)
}

/// Solves the relaxation, reporting every iteration to `observer` if given.
pub fn solve_sdp_with(
    problem: &NugProblem,
    opts: &SolverOptions,
    mut observer: Option<&mut dyn FnMut(&IterationRecord)>,
) -> Result<NugSolution> {
    if !(opts.tol > 0.0) || opts.max_iters == 0 || !(opts.penalty > 0.0) {
        return Err(Error::InvalidParameter(
            "solver needs tol > 0, max_iters > 0 and a positive penalty".into(),
        ));
    }
    let n = problem.n();
    let size = n * problem.irreps.max_dim();
    if size >= SCALE_LIMIT {
        return Err(Error::ProblemTooLarge {
            size,
            limit: SCALE_LIMIT,
        });
    }
    let scale = problem.costs.max_value();
    let admm = Admm {
        problem,
        basis: Basis::new(&problem.irreps),
        cost_scale: if scale > 0.0 { 1.0 / scale } else { 1.0 },
        alpha: opts.over_relaxation,
    };
    let mut rho = opts.penalty;
    let mut accel = Anderson::new(opts.anderson_memory);

    let mut state = admm.pack(&admm.basis.zero_blocks(n), &admm.basis.zero_blocks(n));
    let mut out = admm.step(&state, rho);
    let mut iter = 1;
    loop {
        if let Some(obs) = observer.as_deref_mut() {
            obs(&IterationRecord {
                iteration: iter,
                objective: problem.lambda_objective(&out.lambda),
                primal_residual: out.primal,
                dual_residual: out.dual,
                penalty: rho,
            });
        }
        if out.primal.max(out.dual) < opts.tol {
            log::debug!("SDP converged after {iter} iterations");
            return Ok(problem.finish(out.lambda, out.x, iter, out.primal, out.dual, true));
        }
        if iter >= opts.max_iters {
            break;
        }

        if opts.balance_every > 0 && iter % opts.balance_every == 0 {
            let factor = if out.primal > opts.balance_ratio * out.dual {
                2.0
            } else if out.dual > opts.balance_ratio * out.primal {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 {
                // scaled dual variable U = Y/ρ
                rho *= factor;
                admm.rescale_dual(&mut out.next, 1.0 / factor);
                accel.clear();
            }
        }

        let residual: Vec<f64> = out.next.iter().zip(&state).map(|(a, b)| a - b).collect();
        let candidate = accel.extrapolate(&state, &out.next, &residual);
        match candidate {
            Some(trial) => {
                let trial_out = admm.step(&trial, rho);
                iter += 1;
                let trial_res = norm_diff(&trial_out.next, &trial);
                if trial_res <= norm(&residual) {
                    state = trial;
                    out = trial_out;
                } else {
                    accel.clear();
                    state = std::mem::take(&mut out.next);
                    out = admm.step(&state, rho);
                    iter += 1;
                }
            }
            None => {
                state = std::mem::take(&mut out.next);
                out = admm.step(&state, rho);
                iter += 1;
            }
        }
    }
    let (primal, dual) = (out.primal, out.dual);
    let last = problem.finish(out.lambda, out.x, iter, primal, dual, false);
    Err(Error::SolverNotConverged {
        iterations: iter,
        primal,
        dual,
        last: Box::new(last),
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// One ADMM sweep as a fixed-point map on the packed `(Z, U)` state.
struct Admm<'a> {
    problem: &'a NugProblem,
    basis: Basis,
    cost_scale: f64,
    alpha: f64,
}

struct StepOutput {
    next: Vec<f64>,
    lambda: LambdaTable,
    x: Vec<CMatrix>,
    primal: f64,
    dual: f64,
}

impl Admm<'_> {
    fn pack(&self, z: &[CMatrix], u: &[CMatrix]) -> Vec<f64> {
        z.iter()
            .chain(u)
            .flat_map(|m| m.iter().flat_map(|c| [c.re, c.im]))
            .collect()
    }

    fn unpack(&self, state: &[f64], n: usize) -> (Vec<CMatrix>, Vec<CMatrix>) {
        let mut offset = 0;
        let mut take = |d: usize| {
            let len = n * d * n * d;
            let m = CMatrix::from_iterator(
                n * d,
                n * d,
                (0..len).map(|t| C64::new(state[offset + 2 * t], state[offset + 2 * t + 1])),
            );
            offset += 2 * len;
            m
        };
        let z: Vec<CMatrix> = self.basis.dims.iter().map(|&d| take(d)).collect();
        let u: Vec<CMatrix> = self.basis.dims.iter().map(|&d| take(d)).collect();
        (z, u)
    }

    fn rescale_dual(&self, state: &mut [f64], factor: f64) {
        let half = state.len() / 2;
        state[half..].iter_mut().for_each(|v| *v *= factor);
    }

    fn step(&self, state: &[f64], rho: f64) -> StepOutput {
        let n = self.problem.n();
        let (z, mut u) = self.unpack(state, n);
        // λ-step: project T*(Z − U) − c/ρ onto A
        let v: Vec<CMatrix> = z.iter().zip(&u).map(|(a, b)| a - b).collect();
        let target = self.basis.adjoint(&v, n);
        let mut lambda = LambdaTable::zeros(n, self.problem.group.order());
        project_polytope(
            &target,
            &self.problem.costs,
            self.cost_scale / rho,
            &self.problem.group,
            &mut lambda,
        );
        let x = self.basis.synthesize(&lambda);

        // Z-step on the over-relaxed point
        let a = self.alpha;
        let relaxed: Vec<CMatrix> = x
            .iter()
            .zip(&z)
            .map(|(xk, zk)| xk * C64::new(a, 0.0) + zk * C64::new(1.0 - a, 0.0))
            .collect();
        let z_next: Vec<CMatrix> = relaxed
            .iter()
            .zip(&u)
            .map(|(r, uk)| project_psd(&hermitian_part(&(r + uk))))
            .collect();
        for k in 0..u.len() {
            u[k] += &relaxed[k] - &z_next[k];
        }

        let primal = x
            .iter()
            .zip(&z_next)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let dual = rho
            * z_next
                .iter()
                .zip(&z)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
        StepOutput {
            next: self.pack(&z_next, &u),
            lambda,
            x,
            primal,
            dual,
        }
    }
}

/// Type-II Anderson extrapolation over the last few fixed-point residuals.
struct Anderson {
    memory: usize,
    last: Option<(Vec<f64>, Vec<f64>)>,
    dx: VecDeque<Vec<f64>>,
    dg: VecDeque<Vec<f64>>,
    /// Gram matrix of the stored `dg` columns, same order.
    gram: VecDeque<VecDeque<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Anderson {
    fn new(memory: usize) -> Self {
        Anderson {
            memory,
            last: None,
            dx: VecDeque::new(),
            dg: VecDeque::new(),
            gram: VecDeque::new(),
        }
    }

    fn clear(&mut self) {
        self.last = None;
        self.dx.clear();
        self.dg.clear();
        self.gram.clear();
    }

    fn push(&mut self, dx: Vec<f64>, dg: Vec<f64>) {
        if self.dg.len() == self.memory {
            self.dx.pop_front();
            self.dg.pop_front();
            self.gram.pop_front();
            for row in &mut self.gram {
                row.pop_front();
            }
        }
        let mut row: VecDeque<f64> = self.dg.iter().map(|c| dot(c, &dg)).collect();
        for (r, &v) in self.gram.iter_mut().zip(row.iter()) {
            r.push_back(v);
        }
        row.push_back(dot(&dg, &dg));
        self.gram.push_back(row);
        self.dx.push_back(dx);
        self.dg.push_back(dg);
    }

    /// Records `(x, g = F(x) − x)` and returns the extrapolated point, if any.
    fn extrapolate(&mut self, x: &[f64], fx: &[f64], g: &[f64]) -> Option<Vec<f64>> {
        if self.memory == 0 {
            return None;
        }
        if let Some((px, pg)) = self.last.take() {
            let dx = x.iter().zip(&px).map(|(a, b)| a - b).collect();
            let dg = g.iter().zip(&pg).map(|(a, b)| a - b).collect();
            self.push(dx, dg);
        }
        self.last = Some((x.to_vec(), g.to_vec()));
        let cols = self.dg.len();
        if cols == 0 {
            return None;
        }
        let trace: f64 = (0..cols).map(|c| self.gram[c][c]).sum();
        let ridge = 1e-10 * trace.max(f64::MIN_POSITIVE);
        let gram = DMatrix::from_fn(cols, cols, |r, c| {
            self.gram[r][c] + if r == c { ridge } else { 0.0 }
        });
        let rhs = nalgebra::DVector::from_iterator(cols, self.dg.iter().map(|c| dot(c, g)));
        let gamma = gram.cholesky()?.solve(&rhs);
        if gamma.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut out = fx.to_vec();
        for (c, &gc) in gamma.iter().enumerate() {
            for ((o, a), b) in out.iter_mut().zip(&self.dx[c]).zip(&self.dg[c]) {
                *o -= gc * (a + b);
            }
        }
        Some(out)
    }
}

/// `λ_ij(g) = (1/|𝒢|) Σ_k d_k Tr(X^k_ij ρ_k(g)ᴴ)` recovered from the blocks.
pub fn lambda_of(solution: &NugSolution, irreps: &IrrepSet, i: usize, j: usize) -> Result<Vec<f64>> {
    let m = irreps.group_order();
    let mut out = Vec::with_capacity(m);
    for g in 0..m {
        let mut acc = C64::new(0.0, 0.0);
        for (k, rho) in irreps.iter().enumerate() {
            let d = rho.dim();
            let block = solution.blocks[k].view((i * d, j * d), (d, d));
            let img = rho.image(g);
            for r in 0..d {
                for c in 0..d {
                    acc += block[(r, c)] * img[(r, c)].conj() * d as f64;
                }
            }
        }
        acc /= m as f64;
        if acc.im.abs() > IMAG_FAIL {
            return Err(Error::ImaginaryResidue(acc.im.abs()));
        }
        if acc.im.abs() > IMAG_DISCARD {
            log::warn!("discarding imaginary residue {:e} in lambda", acc.im.abs());
        }
        out.push(acc.re);
    }
    Ok(out)
}

/// Representation images flattened for the inner loops.
struct Basis {
    dims: Vec<usize>,
    order: usize,
    /// Per irrep, `order` column-major `d×d` images.
    images: Vec<Vec<C64>>,
}

impl Basis {
    fn new(irreps: &IrrepSet) -> Self {
        let images = irreps
            .iter()
            .map(|r| {
                r.images()
                    .iter()
                    .flat_map(|m| m.as_slice().iter().copied())
                    .collect()
            })
            .collect();
        Basis {
            dims: irreps.dims(),
            order: irreps.group_order(),
            images,
        }
    }

    fn zero_blocks(&self, n: usize) -> Vec<CMatrix> {
        self.dims.iter().map(|&d| CMatrix::zeros(n * d, n * d)).collect()
    }

    /// `T(λ)`: blocks `X^k_ij = Σ_g λ_ij(g) ρ_k(g)`.
    fn synthesize(&self, lambda: &LambdaTable) -> Vec<CMatrix> {
        let n = lambda.n;
        let mut out = self.zero_blocks(n);
        for (k, &d) in self.dims.iter().enumerate() {
            let dd = d * d;
            let imgs = &self.images[k];
            let mut acc = vec![C64::new(0.0, 0.0); dd];
            for i in 0..n {
                for j in i..n {
                    acc.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
                    for (g, &l) in lambda.pair(i, j).iter().enumerate() {
                        if l != 0.0 {
                            let img = &imgs[g * dd..(g + 1) * dd];
                            for (a, b) in acc.iter_mut().zip(img) {
                                *a += b * l;
                            }
                        }
                    }
                    let block = DMatrix::from_column_slice(d, d, &acc);
                    out[k].view_mut((i * d, j * d), (d, d)).copy_from(&block);
                    if i != j {
                        out[k]
                            .view_mut((j * d, i * d), (d, d))
                            .copy_from(&block.adjoint());
                    }
                }
            }
        }
        out
    }

    /// `T*(V)_ij(g) = (1/|𝒢|) Σ_k d_k Re Tr(V^k_ij ρ_k(g)ᴴ)` for all ordered pairs.
    fn adjoint(&self, v: &[CMatrix], n: usize) -> LambdaTable {
        let m = self.order;
        let mut out = LambdaTable::zeros(n, m);
        let inv_m = 1.0 / m as f64;
        for (k, &d) in self.dims.iter().enumerate() {
            let dd = d * d;
            let imgs = &self.images[k];
            let w = d as f64 * inv_m;
            let mut buf = vec![C64::new(0.0, 0.0); dd];
            for i in 0..n {
                for j in 0..n {
                    let block = v[k].view((i * d, j * d), (d, d));
                    for c in 0..d {
                        for r in 0..d {
                            buf[c * d + r] = block[(r, c)];
                        }
                    }
                    let dst = out.pair_mut(i, j);
                    for (g, slot) in dst.iter_mut().enumerate() {
                        let img = &imgs[g * dd..(g + 1) * dd];
                        // Re Σ V_ab conj(ρ_ab)
                        let s: f64 = buf
                            .iter()
                            .zip(img)
                            .map(|(a, b)| a.re * b.re + a.im * b.im)
                            .sum();
                        *slot += w * s;
                    }
                }
            }
        }
        out
    }
}

/// Euclidean projection of `target − shift·f` onto the pairwise polytope.
fn project_polytope(
    target: &LambdaTable,
    costs: &PairCostTable,
    shift: f64,
    group: &FiniteRotationGroup,
    out: &mut LambdaTable,
) {
    let n = target.n;
    let m = target.m;
    let mut avg = vec![0.0; m];
    let mut work = vec![0.0; m];
    for i in 0..n {
        let diag = out.pair_mut(i, i);
        diag.iter_mut().for_each(|x| *x = 0.0);
        diag[0] = 1.0;
        for j in (i + 1)..n {
            let a = target.pair(i, j);
            let b = target.pair(j, i);
            let fa = costs.pair(i, j);
            let fb = costs.pair(j, i);
            for g in 0..m {
                let gi = group.inverse(g);
                avg[g] = 0.5 * ((a[g] - shift * fa[g]) + (b[gi] - shift * fb[gi]));
            }
            project_simplex(&avg, &mut work);
            out.pair_mut(i, j).copy_from_slice(&work);
            let back = out.pair_mut(j, i);
            for g in 0..m {
                back[group.inverse(g)] = work[g];
            }
        }
    }
}

/// Euclidean projection onto the probability simplex (sort-based).
pub(crate) fn project_simplex(v: &[f64], out: &mut [f64]) {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    for (o, &x) in out.iter_mut().zip(v) {
        *o = (x - theta).max(0.0);
    }
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn project_psd(m: &CMatrix) -> CMatrix {
    let eig = SymmetricEigen::new(m.clone());
    if eig.eigenvalues.iter().all(|&v| v >= 0.0) {
        return m.clone();
    }
    let q = &eig.eigenvectors;
    let mut scaled = q.clone();
    for (c, &v) in eig.eigenvalues.iter().enumerate() {
        let s = C64::new(v.max(0.0), 0.0);
        scaled.column_mut(c).iter_mut().for_each(|x| *x *= s);
    }
    hermitian_part(&(scaled * q.adjoint()))
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    SymmetricEigen::new(hermitian_part(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn affine_violation(lambda: &LambdaTable, group: &FiniteRotationGroup) -> f64 {
    let n = lambda.n;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let p = lambda.pair(i, j);
            worst = worst.max((p.iter().sum::<f64>() - 1.0).abs());
            if i == j {
                worst = worst.max((p[0] - 1.0).abs());
                worst = worst.max(p[1..].iter().map(|x| x.abs()).fold(0.0, f64::max));
            }
            let q = lambda.pair(j, i);
            for g in 0..p.len() {
                worst = worst.max((p[g] - q[group.inverse(g)]).abs());
            }
        }
    }
    worst
}
