//! Recovering group elements from a relaxed solution.
//!
//! [`greedy_round`] keeps up to `m` compatible partial solutions and extends
//! them one relative element at a time, most confident pair first.
//! [`singer_round`] is the eigenvector baseline for cyclic groups.

use nalgebra::linalg::SymmetricEigen;

use crate::error::{Error, Result};
use crate::nug::{LambdaTable, NugSolution, PairCostTable};
use crate::repr::IrrepSet;
use crate::symmetry::FiniteRotationGroup;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundingParams {
    /// Maximum number of partial solutions kept.
    pub m: usize,
    /// Probability mass the candidate elements of a pair must cover.
    pub c: f64,
}

impl Default for RoundingParams {
    fn default() -> Self {
        RoundingParams { m: 20, c: 0.99 }
    }
}

impl RoundingParams {
    pub fn new(m: usize, c: f64) -> Result<Self> {
        let p = RoundingParams { m, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.c) {
            return Err(Error::InvalidParameter(format!(
                "c must lie in [0, 1], got {}",
                self.c
            )));
        }
        Ok(())
    }
}

/// Compatible partial solution stored as components with offsets.
///
/// Every index `a` carries `h_a` with `s(a, b) = h_a h_b⁻¹` whenever `a` and
/// `b` share a component, so closure under inversion and chaining holds by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSolution {
    component: Vec<usize>,
    offset: Vec<usize>,
    members: Vec<Vec<usize>>,
    cost: f64,
    merges: usize,
}

impl PartialSolution {
    /// Only the diagonal `s(i, i) = e` decided.
    pub fn new(n: usize) -> Self {
        PartialSolution {
            component: (0..n).collect(),
            offset: vec![0; n],
            members: (0..n).map(|i| vec![i]).collect(),
            cost: 0.0,
            merges: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.component.len()
    }

    pub fn is_decided(&self, i: usize, j: usize) -> bool {
        self.component[i] == self.component[j]
    }

    pub fn is_complete(&self) -> bool {
        self.merges + 1 >= self.n()
    }

    /// `s(i, j)` if decided.
    pub fn get(&self, i: usize, j: usize, group: &FiniteRotationGroup) -> Option<usize> {
        self.is_decided(i, j)
            .then(|| group.relative(self.offset[i], self.offset[j]))
    }

    /// Partial cost `Σ f_ij(s(i, j))` over decided ordered pairs.
    pub fn cost(&self) -> f64 {
        self.cost
    }

    /// Partial cost recomputed from scratch.
    pub fn recompute_cost(&self, costs: &PairCostTable, group: &FiniteRotationGroup) -> f64 {
        let n = self.n();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if let Some(g) = self.get(i, j, group) {
                    acc += costs.get(i, j, g);
                }
            }
        }
        acc
    }

    /// Offset change that makes `s(i, j) = g` when applied to `j`'s component.
    fn regauge(&self, i: usize, j: usize, g: usize, group: &FiniteRotationGroup) -> usize {
        // h_i (h_j t)⁻¹ = g  ⇒  t = h_j⁻¹ g⁻¹ h_i
        let hj_inv = group.inverse(self.offset[j]);
        group.compose(group.compose(hj_inv, group.inverse(g)), self.offset[i])
    }

    /// Cost added by deciding `s(i, j) = g` for undecided `(i, j)`.
    pub fn merge_cost(
        &self,
        i: usize,
        j: usize,
        g: usize,
        costs: &PairCostTable,
        group: &FiniteRotationGroup,
    ) -> f64 {
        let t = self.regauge(i, j, g, group);
        let a = &self.members[self.component[i]];
        let b = &self.members[self.component[j]];
        let mut acc = 0.0;
        for &x in a {
            for &y in b {
                let hy = group.compose(self.offset[y], t);
                let sxy = group.relative(self.offset[x], hy);
                acc += costs.get(x, y, sxy) + costs.get(y, x, group.inverse(sxy));
            }
        }
        acc
    }

    /// Decides `s(i, j) = g` and closes the result; `added` is the cost increment.
    fn merge(&mut self, i: usize, j: usize, g: usize, added: f64, group: &FiniteRotationGroup) {
        let (ci, cj) = (self.component[i], self.component[j]);
        debug_assert_ne!(ci, cj);
        // move the smaller component; the relation is symmetric
        let (keep, moved, t) = if self.members[ci].len() >= self.members[cj].len() {
            (ci, cj, self.regauge(i, j, g, group))
        } else {
            (cj, ci, self.regauge(j, i, group.inverse(g), group))
        };
        let moved_members = std::mem::take(&mut self.members[moved]);
        for &y in &moved_members {
            self.offset[y] = group.compose(self.offset[y], t);
            self.component[y] = keep;
        }
        self.members[keep].extend(moved_members);
        self.cost += added;
        self.merges += 1;
    }

    /// Decides `s(i, j) = g`, returning the closed partial solution.
    pub fn with_relation(
        &self,
        i: usize,
        j: usize,
        g: usize,
        costs: &PairCostTable,
        group: &FiniteRotationGroup,
    ) -> Result<PartialSolution> {
        group.check_index(g)?;
        if let Some(existing) = self.get(i, j, group) {
            if existing == g {
                return Ok(self.clone());
            }
            return Err(Error::InvalidParameter(format!(
                "pair ({i}, {j}) is already decided as element {existing}"
            )));
        }
        let added = self.merge_cost(i, j, g, costs, group);
        let mut out = self.clone();
        out.merge(i, j, g, added, group);
        Ok(out)
    }

    /// Gauge-fixed assignment `g_i = s(i, 0)`, for complete solutions.
    pub fn assignment(&self, group: &FiniteRotationGroup) -> Option<Vec<usize>> {
        (0..self.n()).map(|i| self.get(i, 0, group)).collect()
    }
}

/// Per-pair group elements sorted by decreasing clamped λ.
struct SortedPair {
    i: usize,
    j: usize,
    order: Vec<usize>,
    mass: Vec<f64>,
}

fn sort_pairs(lambda: &LambdaTable) -> Vec<SortedPair> {
    let n = lambda.n();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let mass: Vec<f64> = lambda.pair(i, j).iter().map(|v| v.clamp(0.0, 1.0)).collect();
            let mut order: Vec<usize> = (0..mass.len()).collect();
            // stable: equal mass keeps the lower element index first
            order.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]));
            out.push(SortedPair { i, j, order, mass });
        }
    }
    // most confident pair first; ties by lexicographic pair order
    out.sort_by(|a, b| a.mass[a.order[0]].total_cmp(&b.mass[b.order[0]]).reverse());
    out
}

/// Number of leading elements whose mass reaches `c` (at least one).
fn candidate_count(pair: &SortedPair, c: f64) -> usize {
    let mut acc = 0.0;
    for (k, &g) in pair.order.iter().enumerate() {
        acc += pair.mass[g];
        if acc >= c {
            return k + 1;
        }
    }
    pair.order.len()
}

/// Greedy multi-hypothesis rounding of a λ table.
pub fn greedy_round_lambda(
    lambda: &LambdaTable,
    costs: &PairCostTable,
    group: &FiniteRotationGroup,
    params: &RoundingParams,
) -> Result<Vec<usize>> {
    params.validate()?;
    let n = lambda.n();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if costs.n() != n || lambda.order() != group.order() || costs.order() != group.order() {
        return Err(Error::InvalidParameter(
            "λ table, cost table and group sizes disagree".into(),
        ));
    }
    let pairs = sort_pairs(lambda);
    let mut hypotheses = vec![PartialSolution::new(n)];
    while !hypotheses[0].is_complete() {
        let leader = &hypotheses[0];
        let pick = pairs
            .iter()
            .find(|p| !leader.is_decided(p.i, p.j))
            .expect("incomplete solution has an undecided pair");
        let (i, j) = (pick.i, pick.j);
        let l = candidate_count(pick, params.c);

        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        for (p, hyp) in hypotheses.iter().enumerate() {
            if hyp.is_decided(i, j) {
                candidates.push((hyp.cost(), p, usize::MAX));
                continue;
            }
            for &g in &pick.order[..l] {
                candidates.push((hyp.cost() + hyp.merge_cost(i, j, g, costs, group), p, g));
            }
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
        candidates.truncate(params.m);
        hypotheses = candidates
            .into_iter()
            .map(|(total, p, g)| {
                let mut next = hypotheses[p].clone();
                if g != usize::MAX {
                    let added = total - next.cost();
                    next.merge(i, j, g, added, group);
                }
                next
            })
            .collect();
    }
    Ok(hypotheses[0]
        .assignment(group)
        .expect("complete partial solution"))
}

/// Greedy rounding of a solved relaxation.
pub fn greedy_round(
    solution: &NugSolution,
    costs: &PairCostTable,
    group: &FiniteRotationGroup,
    params: &RoundingParams,
) -> Result<Vec<usize>> {
    greedy_round_lambda(&solution.lambda, costs, group, params)
}

/// Eigenvector rounding of `X¹` for cyclic groups.
pub fn singer_round(
    solution: &NugSolution,
    group: &FiniteRotationGroup,
    irreps: &IrrepSet,
) -> Result<Vec<usize>> {
    let spec = group.spec();
    if !spec.is_cyclic() {
        return Err(Error::NotCyclic(spec.to_string()));
    }
    let n_order = group.order();
    let x1 = match solution.blocks.get(1) {
        Some(b) => b,
        None => return Ok(vec![0; solution.lambda.n()]),
    };
    let n = x1.nrows();
    if irreps.get(1).dim() != 1 {
        return Err(Error::NotCyclic(spec.to_string()));
    }
    let eig = SymmetricEigen::new(x1.clone());
    let top = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .expect("nonempty block");
    let v = eig.eigenvectors.column(top);
    let step = std::f64::consts::TAU / n_order as f64;
    let power: Vec<i64> = (0..n)
        .map(|i| (v[i].arg() / step).round() as i64)
        .collect();

    // σ^k for k = 0..n-1, σ being the element with ρ₁(σ) = e^{2πi/n}
    let sigma = group
        .index_of(&spec.generators()[0])
        .expect("generator is a group element");
    let mut powers = vec![0usize; n_order];
    for k in 1..n_order {
        powers[k] = group.compose(powers[k - 1], sigma);
    }
    Ok(power
        .iter()
        .map(|&k| powers[(k - power[0]).rem_euclid(n_order as i64) as usize])
        .collect())
}
