//! Unitary irreducible representations of the molecular symmetry groups and
//! the generalized Fourier transform over a finite group.
//!
//! Representation values are given on the generators only; images of all
//! other elements follow from the generator words recorded while closing the
//! group. Families whose textbook matrices are not unitary are conjugated
//! into unitary form with a Cholesky factor of the averaged Gram matrix.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::symmetry::{FiniteRotationGroup, GroupSpec};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Homomorphism residual above which representation construction fails.
const HOMOMORPHISM_TOLERANCE: f64 = 1e-6;

/// One irreducible representation: an image per group element.
#[derive(Debug, Clone)]
pub struct Irrep {
    dim: usize,
    images: Vec<CMatrix>,
}

impl Irrep {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn image(&self, g: usize) -> &CMatrix {
        &self.images[g]
    }

    pub fn images(&self) -> &[CMatrix] {
        &self.images
    }
}

/// Complete list of unitary irreps, trivial representation first.
#[derive(Debug, Clone)]
pub struct IrrepSet {
    irreps: Vec<Irrep>,
    order: usize,
}

impl IrrepSet {
    pub fn len(&self) -> usize {
        self.irreps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.irreps.is_empty()
    }

    pub fn get(&self, k: usize) -> &Irrep {
        &self.irreps[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Irrep> {
        self.irreps.iter()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.irreps.iter().map(|r| r.dim).collect()
    }

    pub fn max_dim(&self) -> usize {
        self.irreps.iter().map(|r| r.dim).max().unwrap_or(1)
    }

    /// Group order the images are indexed by.
    pub fn group_order(&self) -> usize {
        self.order
    }

    /// Largest `‖ρ(g∘h) − ρ(g)ρ(h)‖` over all irreps and element pairs.
    pub fn homomorphism_residual(&self, group: &FiniteRotationGroup) -> f64 {
        self.irreps
            .iter()
            .map(|r| homomorphism_residual(&r.images, group))
            .fold(0.0, f64::max)
    }

    /// Largest `‖ρ(g)ρ(g)ᴴ − I‖` over all irreps and elements.
    pub fn unitarity_residual(&self) -> f64 {
        self.irreps
            .iter()
            .flat_map(|r| r.images.iter())
            .map(|m| (m * m.adjoint() - CMatrix::identity(m.nrows(), m.ncols())).norm())
            .fold(0.0, f64::max)
    }
}

fn homomorphism_residual(images: &[CMatrix], group: &FiniteRotationGroup) -> f64 {
    let m = group.order();
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let lhs = &images[group.compose(i, j)];
            let rhs = &images[i] * &images[j];
            worst = worst.max((lhs - rhs).norm());
        }
    }
    worst
}

fn real_matrix(n: usize, rows: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(n, n, rows.iter().map(|&v| C64::new(v, 0.0)))
}

fn scalar(z: C64) -> CMatrix {
    CMatrix::from_element(1, 1, z)
}

fn real_scalar(v: f64) -> CMatrix {
    scalar(C64::new(v, 0.0))
}

fn rotation2(angle: f64) -> CMatrix {
    let (s, c) = angle.sin_cos();
    real_matrix(2, &[c, -s, s, c])
}

/// Generator images of every irrep, in the standard listing order.
fn generator_images(spec: GroupSpec) -> Vec<Vec<CMatrix>> {
    use std::f64::consts::PI;
    match spec {
        GroupSpec::Cyclic(n) => (0..n)
            .map(|k| vec![scalar(C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64))])
            .collect(),
        GroupSpec::Dihedral(n) => {
            let flip = real_matrix(2, &[1.0, 0.0, 0.0, -1.0]);
            let mut out = vec![
                vec![real_scalar(1.0), real_scalar(1.0)],
                vec![real_scalar(1.0), real_scalar(-1.0)],
            ];
            let top = if n % 2 == 1 {
                (n - 1) / 2
            } else {
                out.push(vec![real_scalar(-1.0), real_scalar(1.0)]);
                out.push(vec![real_scalar(-1.0), real_scalar(-1.0)]);
                n / 2 - 1
            };
            for k in 1..=top {
                out.push(vec![rotation2(2.0 * PI * k as f64 / n as f64), flip.clone()]);
            }
            out
        }
        GroupSpec::Tetrahedral => {
            let w = C64::from_polar(1.0, 2.0 * PI / 3.0);
            vec![
                vec![real_scalar(1.0), real_scalar(1.0)],
                vec![scalar(w), real_scalar(1.0)],
                vec![scalar(w * w), real_scalar(1.0)],
                vec![
                    real_matrix(3, &[-1.0, -1.0, -1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
                    real_matrix(3, &[-1.0, -1.0, -1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0]),
                ],
            ]
        }
        GroupSpec::Octahedral => vec![
            vec![real_scalar(1.0), real_scalar(1.0)],
            vec![real_scalar(-1.0), real_scalar(1.0)],
            vec![
                real_matrix(2, &[1.0, 0.0, -1.0, -1.0]),
                real_matrix(2, &[0.0, 1.0, -1.0, -1.0]),
            ],
            vec![
                real_matrix(3, &[-1.0, -1.0, -1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]),
                real_matrix(3, &[0.0, 1.0, 0.0, -1.0, -1.0, -1.0, 0.0, 0.0, 1.0]),
            ],
            vec![
                real_matrix(3, &[1.0, 1.0, 1.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0]),
                real_matrix(3, &[0.0, 1.0, 0.0, -1.0, -1.0, -1.0, 0.0, 0.0, 1.0]),
            ],
        ],
        GroupSpec::Icosahedral => {
            let s5 = 5f64.sqrt();
            let mut out = vec![
                vec![real_scalar(1.0), real_scalar(1.0)],
                vec![
                    real_matrix(
                        4,
                        &[
                            -1.0, -1.0, -1.0, -1.0, //
                            0.0, 0.0, 1.0, 0.0, //
                            0.0, 1.0, 0.0, 0.0, //
                            0.0, 0.0, 0.0, 1.0,
                        ],
                    ),
                    real_matrix(
                        4,
                        &[
                            0.0, 0.0, 0.0, 1.0, //
                            1.0, 0.0, 0.0, 0.0, //
                            0.0, 0.0, 1.0, 0.0, //
                            0.0, 1.0, 0.0, 0.0,
                        ],
                    ),
                ],
                vec![
                    real_matrix(
                        5,
                        &[
                            0.0, 1.0, 0.0, 0.0, 0.0, //
                            1.0, 0.0, 0.0, 0.0, 0.0, //
                            0.0, 0.0, 1.0, 0.0, 0.0, //
                            -1.0, -1.0, 0.0, -1.0, 0.0, //
                            0.0, 1.0, 0.0, 1.0, 1.0,
                        ],
                    ),
                    real_matrix(
                        5,
                        &[
                            0.0, 0.0, 1.0, 0.0, 0.0, //
                            0.0, -1.0, -1.0, -1.0, -1.0, //
                            -1.0, 0.0, 0.0, 0.0, 1.0, //
                            0.0, 1.0, 0.0, 0.0, 0.0, //
                            1.0, 0.0, 1.0, 0.0, 0.0,
                        ],
                    ),
                ],
            ];
            for x in [(-1.0 + s5) / 2.0, (-1.0 - s5) / 2.0] {
                out.push(vec![
                    real_matrix(3, &[-x, 1.0, -x, x, x, -1.0, 0.0, 0.0, -1.0]),
                    real_matrix(3, &[0.0, 1.0 + x, -1.0 - x, -1.0, -1.0, x, -x, -x, 1.0]),
                ]);
            }
            out
        }
    }
}

/// Extends generator images to every element through the closure words.
fn extend_to_group(gens: &[CMatrix], group: &FiniteRotationGroup) -> Vec<CMatrix> {
    let d = gens[0].nrows();
    let mut images: Vec<CMatrix> = Vec::with_capacity(group.order());
    images.push(CMatrix::identity(d, d));
    for i in 1..group.order() {
        let w = group.word(i).expect("non-identity element has a word");
        images.push(&images[w.parent] * &gens[w.generator]);
    }
    images
}

/// Conjugates a representation into an equivalent unitary one.
///
/// With `A = Σ_g ρ(g)ᴴρ(g) = PᴴP`, the map `g ↦ Pρ(g)P⁻¹` is unitary.
pub fn unitarize(rep: &[CMatrix]) -> Result<Vec<CMatrix>> {
    let d = rep.first().ok_or(Error::EmptyInput)?.nrows();
    let mut gram = CMatrix::zeros(d, d);
    for m in rep {
        gram += m.adjoint() * m;
    }
    // Hermitian by construction; remove roundoff asymmetry
    let gram = (&gram + gram.adjoint()) * C64::new(0.5, 0.0);
    let chol = gram.cholesky().ok_or(Error::NotPositiveDefinite)?;
    // A = L Lᴴ, so P = Lᴴ
    let p = chol.l().adjoint();
    let p_inv = p
        .clone()
        .try_inverse()
        .ok_or(Error::NotPositiveDefinite)?;
    Ok(rep.iter().map(|m| &p * m * &p_inv).collect())
}

/// Unitary irreducible representations of `group`.
pub fn irreps(group: &FiniteRotationGroup) -> Result<IrrepSet> {
    let spec = group.spec();
    let mut irreps = Vec::new();
    for (k, gens) in generator_images(spec).into_iter().enumerate() {
        let dim = gens[0].nrows();
        let mut images = extend_to_group(&gens, group);
        if dim > 1 {
            images = unitarize(&images)?;
        }
        let residual = homomorphism_residual(&images, group);
        if residual > HOMOMORPHISM_TOLERANCE {
            return Err(Error::NotHomomorphism { index: k, residual });
        }
        irreps.push(Irrep { dim, images });
    }
    Ok(IrrepSet {
        irreps,
        order: group.order(),
    })
}

/// `Tr(A·B)` without forming the product.
#[inline]
pub(crate) fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for r in 0..n {
        for c in 0..n {
            acc += a[(r, c)] * b[(c, r)];
        }
    }
    acc
}

/// Forward transform `f̂(k) = (1/|𝒢|) Σ_g f(g) ρ_k(g)ᴴ`.
pub fn fourier_forward(f: &[C64], irreps: &IrrepSet) -> Result<Vec<CMatrix>> {
    let m = irreps.group_order();
    if f.len() != m {
        return Err(Error::InvalidParameter(format!(
            "group function has {} values, group order is {m}",
            f.len()
        )));
    }
    let scale = 1.0 / m as f64;
    Ok(irreps
        .iter()
        .map(|r| {
            let mut acc = CMatrix::zeros(r.dim, r.dim);
            for (fg, img) in f.iter().zip(&r.images) {
                acc += img.adjoint() * *fg;
            }
            acc * C64::new(scale, 0.0)
        })
        .collect())
}

/// Inverse transform `f(g) = Σ_k d_k Tr(f̂(k) ρ_k(g))`.
pub fn fourier_inverse(coeffs: &[CMatrix], irreps: &IrrepSet) -> Result<Vec<C64>> {
    if coeffs.len() != irreps.len()
        || coeffs
            .iter()
            .zip(irreps.iter())
            .any(|(c, r)| c.nrows() != r.dim || c.ncols() != r.dim)
    {
        return Err(Error::InvalidParameter(
            "Fourier coefficient shapes do not match the irreducible representations".into(),
        ));
    }
    Ok((0..irreps.group_order())
        .map(|g| {
            coeffs
                .iter()
                .zip(irreps.iter())
                .map(|(c, r)| trace_product(c, &r.images[g]) * r.dim as f64)
                .sum()
        })
        .collect())
}
