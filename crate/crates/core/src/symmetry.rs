//! Molecular symmetry groups Cₙ, Dₙ, T, O and I built from quaternion
//! generators, with Cayley and inverse tables and quotient distances.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::so3::{dist_s2, dist_so3, Direction, Metric, RotationMatrix, UnitQuaternion};

/// Elements closer than this (up to sign) are identified.
const DEDUP_TOLERANCE: f64 = 1e-6;
/// Closure larger than this means the generators are wrong.
const CLOSURE_CAP: usize = 1000;
/// Largest n accepted for Cₙ and Dₙ.
pub const MAX_ORDER_PARAMETER: usize = 50;

/// Which molecular symmetry group to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupSpec {
    Cyclic(usize),
    Dihedral(usize),
    Tetrahedral,
    Octahedral,
    Icosahedral,
}

impl GroupSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GroupSpec::Cyclic(n) if n == 0 || n > MAX_ORDER_PARAMETER => {
                Err(Error::InvalidGroupSpec(self.to_string()))
            }
            GroupSpec::Dihedral(n) if !(2..=MAX_ORDER_PARAMETER).contains(&n) => {
                Err(Error::InvalidGroupSpec(self.to_string()))
            }
            _ => Ok(()),
        }
    }

    /// Group order |𝒢|.
    pub fn order(&self) -> usize {
        match *self {
            GroupSpec::Cyclic(n) => n,
            GroupSpec::Dihedral(n) => 2 * n,
            GroupSpec::Tetrahedral => 12,
            GroupSpec::Octahedral => 24,
            GroupSpec::Icosahedral => 60,
        }
    }

    pub fn is_cyclic(&self) -> bool {
        matches!(self, GroupSpec::Cyclic(_))
    }

    /// Generators in the order they are applied during closure.
    pub fn generators(&self) -> Vec<UnitQuaternion> {
        let half = |n: usize| {
            let a = PI / n as f64;
            UnitQuaternion::from_raw(a.cos(), 0.0, 0.0, a.sin())
        };
        let s3 = 3f64.sqrt();
        let s5 = 5f64.sqrt();
        match *self {
            GroupSpec::Cyclic(n) => vec![half(n)],
            GroupSpec::Dihedral(n) => vec![half(n), UnitQuaternion::from_raw(0.0, 1.0, 0.0, 0.0)],
            GroupSpec::Tetrahedral => vec![
                UnitQuaternion::from_raw(0.5, 0.0, 0.0, s3 / 2.0),
                UnitQuaternion::from_raw(0.0, 0.0, 6f64.sqrt() / 3.0, s3 / 3.0),
            ],
            GroupSpec::Octahedral => vec![
                UnitQuaternion::from_raw(0.5f64.sqrt(), 0.0, 0.0, 0.5f64.sqrt()),
                UnitQuaternion::from_raw(0.5, 0.5, 0.5, 0.5),
            ],
            GroupSpec::Icosahedral => vec![
                UnitQuaternion::from_raw(0.0, 0.0, 0.0, 1.0),
                UnitQuaternion::from_raw(0.5, 0.0, (s5 - 1.0) / 4.0, (s5 + 1.0) / 4.0),
            ],
        }
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::Cyclic(n) => write!(f, "C{n}"),
            GroupSpec::Dihedral(n) => write!(f, "D{n}"),
            GroupSpec::Tetrahedral => f.write_str("T"),
            GroupSpec::Octahedral => f.write_str("O"),
            GroupSpec::Icosahedral => f.write_str("I"),
        }
    }
}

impl FromStr for GroupSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::InvalidGroupSpec(s.to_string());
        let spec = match t {
            "T" => GroupSpec::Tetrahedral,
            "O" => GroupSpec::Octahedral,
            "I" => GroupSpec::Icosahedral,
            _ if t.len() > 1 => {
                let n: usize = t[1..].parse().map_err(|_| bad())?;
                match &t[..1] {
                    "C" => GroupSpec::Cyclic(n),
                    "D" => GroupSpec::Dihedral(n),
                    _ => return Err(bad()),
                }
            }
            _ => return Err(bad()),
        };
        spec.validate().map_err(|_| bad())?;
        Ok(spec)
    }
}

/// How an element was first reached during closure: `parent ∘ generator`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Word {
    pub parent: usize,
    pub generator: usize,
}

/// A finite rotation group with its multiplication table.
///
/// Index 0 is always the identity and the element order is the
/// breadth-first discovery order from the identity.
#[derive(Debug, Clone)]
pub struct FiniteRotationGroup {
    spec: GroupSpec,
    elements: Vec<UnitQuaternion>,
    matrices: Vec<RotationMatrix>,
    words: Vec<Option<Word>>,
    cayley: Vec<usize>,
    inverse: Vec<usize>,
}

fn find_element(elements: &[UnitQuaternion], q: &UnitQuaternion) -> Option<usize> {
    elements.iter().position(|p| {
        let a = p.as_array();
        let b = q.as_array();
        let minus: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let plus: f64 = a.iter().zip(&b).map(|(x, y)| (x + y) * (x + y)).sum::<f64>().sqrt();
        minus.min(plus) <= DEDUP_TOLERANCE
    })
}

/// Builds the group generated by the spec's quaternion generators.
pub fn build_group(spec: GroupSpec) -> Result<FiniteRotationGroup> {
    spec.validate()?;
    let gens = spec.generators();
    let mut elements = vec![UnitQuaternion::IDENTITY];
    let mut words: Vec<Option<Word>> = vec![None];
    let mut head = 0;
    while head < elements.len() {
        for (gi, g) in gens.iter().enumerate() {
            let cand = elements[head] * *g;
            if find_element(&elements, &cand).is_none() {
                if elements.len() >= CLOSURE_CAP {
                    return Err(Error::ClosureOverflow { cap: CLOSURE_CAP });
                }
                elements.push(cand);
                words.push(Some(Word {
                    parent: head,
                    generator: gi,
                }));
            }
        }
        head += 1;
    }

    let m = elements.len();
    let mut cayley = vec![0usize; m * m];
    for i in 0..m {
        for j in 0..m {
            let p = elements[i] * elements[j];
            cayley[i * m + j] = find_element(&elements, &p).ok_or(Error::ClosureOverflow { cap: m })?;
        }
    }
    let inverse = (0..m)
        .map(|i| {
            (0..m)
                .find(|&j| cayley[i * m + j] == 0)
                .ok_or(Error::ClosureOverflow { cap: m })
        })
        .collect::<Result<Vec<_>>>()?;
    let matrices = elements.iter().map(|q| q.to_matrix()).collect();

    Ok(FiniteRotationGroup {
        spec,
        elements,
        matrices,
        words,
        cayley,
        inverse,
    })
}

impl FiniteRotationGroup {
    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn name(&self) -> String {
        self.spec.to_string()
    }

    pub fn elements(&self) -> &[UnitQuaternion] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &UnitQuaternion {
        &self.elements[i]
    }

    pub fn matrix(&self, i: usize) -> &RotationMatrix {
        &self.matrices[i]
    }

    /// Index of `element_i ∘ element_j`.
    #[inline]
    pub fn compose(&self, i: usize, j: usize) -> usize {
        self.cayley[i * self.elements.len() + j]
    }

    #[inline]
    pub fn inverse(&self, i: usize) -> usize {
        self.inverse[i]
    }

    /// `g_i ∘ g_j⁻¹`.
    #[inline]
    pub fn relative(&self, i: usize, j: usize) -> usize {
        self.compose(i, self.inverse[j])
    }

    pub fn cayley_row(&self, i: usize) -> &[usize] {
        let m = self.elements.len();
        &self.cayley[i * m..(i + 1) * m]
    }

    /// Generator word of an element; `None` for the identity.
    pub fn word(&self, i: usize) -> Option<Word> {
        self.words[i]
    }

    /// Index of a quaternion in the group, if present.
    pub fn index_of(&self, q: &UnitQuaternion) -> Option<usize> {
        find_element(&self.elements, q)
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.order() {
            Ok(())
        } else {
            Err(Error::ElementOutOfRange {
                index: i,
                order: self.order(),
            })
        }
    }
}

/// Distance on SO(3)/𝒢 and the element achieving it.
pub fn quotient_dist_so3(
    r1: &RotationMatrix,
    r2: &RotationMatrix,
    group: &FiniteRotationGroup,
    metric: Metric,
) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for g in 0..group.order() {
        let d = dist_so3(&(*r1 * *group.matrix(g)), r2, metric);
        if d < best.0 {
            best = (d, g);
        }
    }
    best
}

/// Distance on S²/𝒢, minimizing over `gᵀ n1`.
pub fn quotient_dist_s2(
    n1: &Direction,
    n2: &Direction,
    group: &FiniteRotationGroup,
    metric: Metric,
) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for g in 0..group.order() {
        let d = dist_s2(&n1.rotate_inverse(group.element(g)), n2, metric);
        if d < best.0 {
            best = (d, g);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_specs() -> Vec<GroupSpec> {
        vec![
            GroupSpec::Cyclic(1),
            GroupSpec::Cyclic(2),
            GroupSpec::Cyclic(3),
            GroupSpec::Cyclic(7),
            GroupSpec::Dihedral(2),
            GroupSpec::Dihedral(3),
            GroupSpec::Dihedral(7),
            GroupSpec::Tetrahedral,
            GroupSpec::Octahedral,
            GroupSpec::Icosahedral,
        ]
    }

    #[test]
    fn group_orders() {
        for spec in all_specs() {
            let g = build_group(spec).unwrap();
            assert_eq!(g.order(), spec.order(), "{spec}");
        }
    }

    #[test]
    fn c2_table() {
        let g = build_group(GroupSpec::Cyclic(2)).unwrap();
        assert_eq!(g.cayley_row(0), &[0, 1]);
        assert_eq!(g.cayley_row(1), &[1, 0]);
    }

    #[test]
    fn tables_are_consistent() {
        for spec in all_specs() {
            let g = build_group(spec).unwrap();
            let m = g.order();
            for i in 0..m {
                assert_eq!(g.compose(0, i), i);
                assert_eq!(g.compose(i, 0), i);
                assert_eq!(g.compose(i, g.inverse(i)), 0);
                // Latin square
                let mut row: Vec<usize> = g.cayley_row(i).to_vec();
                row.sort_unstable();
                assert_eq!(row, (0..m).collect::<Vec<_>>());
                for j in 0..m {
                    for k in 0..m {
                        assert_eq!(
                            g.compose(g.compose(i, j), k),
                            g.compose(i, g.compose(j, k)),
                            "associativity in {spec}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn words_reproduce_elements() {
        for spec in all_specs() {
            let g = build_group(spec).unwrap();
            let gens = spec.generators();
            for i in 1..g.order() {
                let w = g.word(i).unwrap();
                let q = *g.element(w.parent) * gens[w.generator];
                assert!(q.same_rotation(g.element(i), 1e-9));
            }
        }
    }

    #[test]
    fn parse_specs() {
        for s in ["C1", "C2", "C7", "D2", "D7", "T", "O", "I", "C50", "D50"] {
            let spec: GroupSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        for s in ["C0", "D1", "C51", "X3", "", "Cx", "TT"] {
            assert!(s.parse::<GroupSpec>().is_err(), "{s}");
        }
    }

    #[test]
    fn quotient_distance_zero_on_same_class() {
        let g = build_group(GroupSpec::Octahedral).unwrap();
        let r = UnitQuaternion::from_raw(0.5, 0.5, -0.5, 0.5).to_matrix();
        for k in 0..g.order() {
            let (d, _) = quotient_dist_so3(&r, &(r * *g.matrix(k)), &g, Metric::Arithmetic);
            assert!(d < 1e-12);
        }
    }
}
