//! Rotation and direction primitives and the base distances on SO(3) and S².
//!
//! Rotations are carried as unit quaternions. The sign of a quaternion is
//! never canonicalized: `q` and `-q` describe the same rotation, and every
//! formula in this crate is insensitive to that sign.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest deviation from unit norm that constructors silently repair.
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// Distance flavour used throughout a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Chordal distance: Frobenius norm on SO(3), Euclidean norm on S².
    Arithmetic,
    /// Rotation angle on SO(3), arc length on S².
    Geometric,
}

impl Metric {
    pub fn short_name(self) -> &'static str {
        match self {
            Metric::Arithmetic => "arith",
            Metric::Geometric => "geo",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "arith" | "arithmetic" | "a" => Ok(Metric::Arithmetic),
            "geo" | "geometric" | "g" => Ok(Metric::Geometric),
            other => Err(Error::InvalidParameter(format!("unknown metric `{other}`"))),
        }
    }
}

/// A rotation as a unit quaternion `(w, x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitQuaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Builds a quaternion, renormalizing inputs whose norm is within
    /// [`UNIT_TOLERANCE`] of one and rejecting anything worse.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NotUnit {
                norm,
                tolerance: UNIT_TOLERANCE,
            });
        }
        Ok(Self::from_raw(w / norm, x / norm, y / norm, z / norm))
    }

    /// Normalizes an arbitrary nonzero 4-vector.
    pub fn normalize(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::NotUnit {
                norm,
                tolerance: UNIT_TOLERANCE,
            });
        }
        Ok(Self::from_raw(w / norm, x / norm, y / norm, z / norm))
    }

    pub(crate) const fn from_raw(w: f64, x: f64, y: f64, z: f64) -> Self {
        UnitQuaternion { w, x, y, z }
    }

    /// Uniformly distributed rotation (normalized 4-d Gaussian).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v: [f64; 4] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            if let Ok(q) = Self::normalize(v[0], v[1], v[2], v[3]) {
                return q;
            }
        }
    }

    /// Rotation of `angle` radians about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Result<Self> {
        let n = axis.norm();
        if n < 1e-300 {
            return Err(Error::InvalidParameter("zero rotation axis".into()));
        }
        let (s, c) = (angle / 2.0).sin_cos();
        let a = axis / n;
        Ok(Self::from_raw(c, s * a.x, s * a.y, s * a.z))
    }

    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn conjugate(&self) -> Self {
        Self::from_raw(self.w, -self.x, -self.y, -self.z)
    }

    pub fn neg(&self) -> Self {
        Self::from_raw(-self.w, -self.x, -self.y, -self.z)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// True when both quaternions describe the same rotation.
    pub fn same_rotation(&self, other: &Self, tol: f64) -> bool {
        1.0 - self.dot(other).abs() <= tol
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let v = (self.x * self.x + self.y * self.y + self.z * self.z).sqrt();
        2.0 * v.atan2(self.w.abs())
    }

    pub fn to_matrix(&self) -> RotationMatrix {
        let UnitQuaternion { w, x, y, z } = *self;
        let m = Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        );
        RotationMatrix(m)
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        let u = Vector3::new(self.x, self.y, self.z);
        let t = 2.0 * u.cross(v);
        v + self.w * t + u.cross(&t)
    }

    /// Rotation vector (axis times angle) with angle in `[0, π]`.
    pub fn log(&self) -> Vector3<f64> {
        let (w, v) = if self.w < 0.0 {
            (-self.w, Vector3::new(-self.x, -self.y, -self.z))
        } else {
            (self.w, Vector3::new(self.x, self.y, self.z))
        };
        let s = v.norm();
        if s < 1e-300 {
            return Vector3::zeros();
        }
        let angle = 2.0 * s.atan2(w);
        v * (angle / s)
    }

    pub fn exp(omega: &Vector3<f64>) -> Self {
        let angle = omega.norm();
        if angle < 1e-300 {
            return Self::IDENTITY;
        }
        let (s, c) = (angle / 2.0).sin_cos();
        let a = omega * (s / angle);
        Self::from_raw(c, a.x, a.y, a.z)
    }

    fn renormalized(self) -> Self {
        let n = self.dot(&self).sqrt();
        Self::from_raw(self.w / n, self.x / n, self.y / n, self.z / n)
    }
}

impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;

    fn mul(self, b: UnitQuaternion) -> UnitQuaternion {
        let a = self;
        UnitQuaternion::from_raw(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
        .renormalized()
    }
}

impl fmt::Display for UnitQuaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.w, self.x, self.y, self.z)
    }
}

/// An element of SO(3) as a 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn identity() -> Self {
        RotationMatrix(Matrix3::identity())
    }

    /// Validates orthogonality and orientation to [`UNIT_TOLERANCE`].
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let ortho = (m.transpose() * m - Matrix3::identity()).abs().max();
        let det = m.determinant();
        if !(ortho <= UNIT_TOLERANCE) || (det - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NotUnit {
                norm: det,
                tolerance: UNIT_TOLERANCE,
            });
        }
        Ok(RotationMatrix(m))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        RotationMatrix(self.0.transpose())
    }

    /// Shepperd's method; the returned sign is arbitrary but deterministic.
    pub fn to_quaternion(&self) -> UnitQuaternion {
        let m = &self.0;
        let trace = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        let q = if trace > m[(0, 0)] && trace > m[(1, 1)] && trace > m[(2, 2)] {
            let s = 2.0 * (1.0 + trace).sqrt();
            UnitQuaternion::from_raw(
                0.25 * s,
                (m[(2, 1)] - m[(1, 2)]) / s,
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(1, 0)] - m[(0, 1)]) / s,
            )
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = 2.0 * (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt();
            UnitQuaternion::from_raw(
                (m[(2, 1)] - m[(1, 2)]) / s,
                0.25 * s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
            )
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = 2.0 * (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt();
            UnitQuaternion::from_raw(
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                0.25 * s,
                (m[(1, 2)] + m[(2, 1)]) / s,
            )
        } else {
            let s = 2.0 * (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt();
            UnitQuaternion::from_raw(
                (m[(1, 0)] - m[(0, 1)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
                (m[(1, 2)] + m[(2, 1)]) / s,
                0.25 * s,
            )
        };
        q.renormalized()
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;

    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl From<UnitQuaternion> for RotationMatrix {
    fn from(q: UnitQuaternion) -> Self {
        q.to_matrix()
    }
}

/// A point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction(Vector3<f64>);

impl Direction {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Vector3::new(x, y, z);
        let norm = v.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NotUnit {
                norm,
                tolerance: UNIT_TOLERANCE,
            });
        }
        Ok(Direction(v / norm))
    }

    /// Normalizes any nonzero vector.
    pub fn normalize(v: Vector3<f64>) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::NotUnit {
                norm,
                tolerance: UNIT_TOLERANCE,
            });
        }
        Ok(Direction(v / norm))
    }

    pub(crate) fn from_unit(v: Vector3<f64>) -> Self {
        Direction(v / v.norm())
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v = Vector3::new(
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            );
            if let Ok(d) = Self::normalize(v) {
                return d;
            }
        }
    }

    pub fn vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.0.x, self.0.y, self.0.z]
    }

    /// `Rᵀ n`, the action used by the quotient S²/𝒢.
    pub fn rotate_inverse(&self, q: &UnitQuaternion) -> Direction {
        Direction::from_unit(q.conjugate().rotate(&self.0))
    }

    pub fn rotate(&self, q: &UnitQuaternion) -> Direction {
        Direction::from_unit(q.rotate(&self.0))
    }
}

fn clamp_unit(c: f64) -> f64 {
    c.clamp(-1.0, 1.0)
}

/// Distance between two rotations.
pub fn dist_so3(r1: &RotationMatrix, r2: &RotationMatrix, metric: Metric) -> f64 {
    match metric {
        Metric::Arithmetic => (r1.0 - r2.0).norm(),
        Metric::Geometric => (r1.transpose() * *r2).to_quaternion().angle(),
    }
}

/// Same distance as [`dist_so3`], evaluated on quaternions.
pub fn dist_so3_quat(q1: &UnitQuaternion, q2: &UnitQuaternion, metric: Metric) -> f64 {
    let rel = q1.conjugate() * *q2;
    match metric {
        // ‖R1 − R2‖_F = 2√2 |sin(θ/2)|
        Metric::Arithmetic => {
            let s = (rel.x * rel.x + rel.y * rel.y + rel.z * rel.z).sqrt().min(1.0);
            2.0 * std::f64::consts::SQRT_2 * s
        }
        Metric::Geometric => rel.angle(),
    }
}

/// Distance between two directions.
pub fn dist_s2(n1: &Direction, n2: &Direction, metric: Metric) -> f64 {
    match metric {
        Metric::Arithmetic => (n1.0 - n2.0).norm(),
        Metric::Geometric => {
            // atan2 form is accurate near 0 and π; equals arccos of the clamped dot
            let cross = n1.0.cross(&n2.0).norm();
            let dot = clamp_unit(n1.0.dot(&n2.0));
            cross.atan2(dot).clamp(0.0, PI)
        }
    }
}

/// Log map on S² at `base`.
pub(crate) fn s2_log(base: &Direction, x: &Direction) -> Vector3<f64> {
    let p = base.0;
    let v = x.0 - p * p.dot(&x.0);
    let s = v.norm();
    if s < 1e-300 {
        return Vector3::zeros();
    }
    let angle = dist_s2(base, x, Metric::Geometric);
    v * (angle / s)
}

/// Exp map on S² at `base` for a tangent vector `t`.
pub(crate) fn s2_exp(base: &Direction, t: &Vector3<f64>) -> Direction {
    let a = t.norm();
    if a < 1e-300 {
        return *base;
    }
    Direction::from_unit(base.0 * a.cos() + t * (a.sin() / a))
}
