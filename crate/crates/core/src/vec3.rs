//! Three-component vectors, coordinate axes and rotations.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when a vector is required to have unit length.
pub const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Returns the vector scaled to unit length. The zero vector is returned unchanged.
    #[inline]
    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            self * (1.0 / n)
        }
    }

    #[inline]
    pub fn component(self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
            Axis::Z => self.z,
        }
    }

    #[inline]
    pub fn as_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn is_unit(self) -> bool {
        (self.norm() - 1.0).abs() <= UNIT_TOLERANCE
    }

    /// Uniformly distributed point on the unit sphere.
    pub fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let r = (1.0 - z * z).max(0.0).sqrt();
        Vec3::new(r * phi.cos(), r * phi.sin(), z)
    }

    pub fn max_abs_diff(self, other: Vec3) -> f64 {
        let d = self - other;
        d.x.abs().max(d.y.abs()).max(d.z.abs())
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    #[inline]
    fn sub_assign(&mut self, o: Vec3) {
        self.x -= o.x;
        self.y -= o.y;
        self.z -= o.z;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Index<Axis> for Vec3 {
    type Output = f64;
    fn index(&self, axis: Axis) -> &f64 {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
            Axis::Z => &self.z,
        }
    }
}

impl std::iter::Sum for Vec3 {
    fn sum<I: Iterator<Item = Vec3>>(iter: I) -> Vec3 {
        iter.fold(Vec3::ZERO, |a, b| a + b)
    }
}

/// One of the three Cartesian spin axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> Vec3 {
        match self {
            Axis::X => Vec3::X,
            Axis::Y => Vec3::Y,
            Axis::Z => Vec3::Z,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(Error::InvalidArgument(format!("unknown axis '{other}'"))),
        }
    }
}

/// Rodrigues rotation of `v` about the unit vector `axis` by `angle` (right-hand rule).
///
/// This is the exact solution of `dS/dt = B × S` for constant `B = angle/t · axis`.
pub fn rotate_about_axis(v: Vec3, axis: Vec3, angle: f64) -> Result<Vec3> {
    let n = axis.norm();
    if (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::NonUnitAxis(n));
    }
    let (s, c) = angle.sin_cos();
    Ok(v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c)))
}

/// Rotation about a coordinate axis given precomputed `(sin, cos)`.
///
/// The component along `axis` is left bit-for-bit untouched.
#[inline]
pub fn rotate_axis_sc(v: Vec3, axis: Axis, sin: f64, cos: f64) -> Vec3 {
    match axis {
        Axis::X => Vec3::new(v.x, v.y * cos - v.z * sin, v.y * sin + v.z * cos),
        Axis::Y => Vec3::new(v.z * sin + v.x * cos, v.y, v.z * cos - v.x * sin),
        Axis::Z => Vec3::new(v.x * cos - v.y * sin, v.x * sin + v.y * cos, v.z),
    }
}

#[inline]
pub fn rotate_axis(v: Vec3, axis: Axis, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    rotate_axis_sc(v, axis, s, c)
}

/// 3×3 matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);

    pub fn identity() -> Self {
        let mut m = Mat3::ZERO;
        for k in 0..3 {
            m.0[k][k] = 1.0;
        }
        m
    }

    /// Rotation matrix for a right-handed rotation about a coordinate axis.
    pub fn rotation(axis: Axis, angle: f64) -> Self {
        let mut m = Mat3::ZERO;
        for (col, e) in Axis::ALL.iter().enumerate() {
            let r = rotate_axis(e.unit(), axis, angle).as_array();
            for row in 0..3 {
                m.0[row][col] = r[row];
            }
        }
        m
    }

    #[inline]
    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    #[inline]
    pub fn transpose_mul_vec(&self, v: Vec3) -> Vec3 {
        self.transpose().mul_vec(v)
    }

    pub fn transpose(&self) -> Mat3 {
        let mut t = Mat3::ZERO;
        for r in 0..3 {
            for c in 0..3 {
                t.0[c][r] = self.0[r][c];
            }
        }
        t
    }

    pub fn mul(&self, o: &Mat3) -> Mat3 {
        let mut out = Mat3::ZERO;
        for r in 0..3 {
            for c in 0..3 {
                out.0[r][c] = (0..3).map(|k| self.0[r][k] * o.0[k][c]).sum();
            }
        }
        out
    }

    pub fn bilinear(&self, a: Vec3, b: Vec3) -> f64 {
        a.dot(self.mul_vec(b))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn abs_sum(&self) -> f64 {
        self.0.iter().flatten().map(|v| v.abs()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        a.max_abs_diff(b) <= tol
    }

    #[test]
    fn pi_flip_about_x() {
        let r = rotate_about_axis(Vec3::Z, Vec3::X, PI).unwrap();
        assert!(close(r, -Vec3::Z, 1e-15));
    }

    #[test]
    fn rotation_fixes_its_axis() {
        let r = rotate_about_axis(Vec3::X, Vec3::X, 1.234).unwrap();
        assert!(close(r, Vec3::X, 1e-15));
    }

    #[test]
    fn quarter_turn_about_x_sends_z_to_minus_y() {
        // z cos(t) - y sin(t) at t = pi/2
        let r = rotate_about_axis(Vec3::Z, Vec3::X, PI / 2.0).unwrap();
        assert!(close(r, -Vec3::Y, 1e-15));
    }

    #[test]
    fn non_unit_axis_is_rejected() {
        let err = rotate_about_axis(Vec3::Z, Vec3::new(1.0, 1.0, 0.0), 0.3).unwrap_err();
        assert!(matches!(err, Error::NonUnitAxis(_)));
    }

    #[test]
    fn axis_fast_path_matches_rodrigues() {
        let v = Vec3::new(0.3, -0.5, 0.8).normalized();
        for axis in Axis::ALL {
            for &angle in &[0.1, 1.0, -2.3, PI] {
                let a = rotate_axis(v, axis, angle);
                let b = rotate_about_axis(v, axis.unit(), angle).unwrap();
                assert!(close(a, b, 1e-15), "{axis:?} {angle}");
                assert_eq!(a.component(axis), v.component(axis));
            }
        }
    }

    #[test]
    fn rotation_matrix_matches_vector_rotation() {
        let v = Vec3::new(0.2, 0.7, -0.4);
        let m = Mat3::rotation(Axis::Y, 0.77);
        assert!(close(m.mul_vec(v), rotate_axis(v, Axis::Y, 0.77), 1e-15));
        let id = m.transpose().mul(&m);
        assert!((id.0[0][0] - 1.0).abs() < 1e-15 && id.0[0][1].abs() < 1e-15);
    }

    fn arb_vec() -> impl Strategy<Value = Vec3> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    fn arb_axis() -> impl Strategy<Value = Vec3> {
        arb_vec()
            .prop_filter("nonzero", |v| v.norm() > 1e-3)
            .prop_map(|v| v.normalized())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn rotation_preserves_norm(v in arb_vec(), axis in arb_axis(), angle in -20.0..20.0f64) {
            let r = rotate_about_axis(v, axis, angle).unwrap();
            prop_assert!((r.norm() - v.norm()).abs() <= 1e-12);
        }
    }

    proptest! {
        #[test]
        fn rotations_compose(v in arb_vec(), axis in arb_axis(), a in -7.0..7.0f64, b in -7.0..7.0f64) {
            let two = rotate_about_axis(rotate_about_axis(v, axis, a).unwrap(), axis, b).unwrap();
            let one = rotate_about_axis(v, axis, a + b).unwrap();
            prop_assert!(close(two, one, 1e-9));
        }
    }
}
