//! 2x2 complex matrices for single-qubit operations.

use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Row-major 2x2 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);
    pub const X: Mat2 = Mat2([[ZERO, ONE], [ONE, ZERO]]);
    pub const Y: Mat2 = Mat2([[ZERO, C64::new(0.0, -1.0)], [I, ZERO]]);
    pub const Z: Mat2 = Mat2([[ONE, ZERO], [ZERO, C64::new(-1.0, 0.0)]]);

    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn rz(theta: f64) -> Self {
        let h = theta / 2.0;
        Mat2([
            [C64::from_polar(1.0, -h), ZERO],
            [ZERO, C64::from_polar(1.0, h)],
        ])
    }

    pub fn ry(theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Mat2([
            [C64::new(c, 0.0), C64::new(-s, 0.0)],
            [C64::new(s, 0.0), C64::new(c, 0.0)],
        ])
    }

    /// `exp(-i theta/2 (axis . sigma))` for a unit axis.
    pub fn axis_rotation(axis: [f64; 3], theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        let [x, y, z] = axis;
        Mat2([
            [C64::new(c, -s * z), C64::new(-s * y, -s * x)],
            [C64::new(s * y, -s * x), C64::new(c, s * z)],
        ])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    pub fn column(&self, k: usize) -> [C64; 2] {
        [self.0[0][k], self.0[1][k]]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Largest entry of `|U^dagger U - 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint() * *self;
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((p.0[r][c] - target).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    /// Spectral norm of `self - other`.
    pub fn op_distance(&self, other: &Mat2) -> f64 {
        let d = Mat2([
            [self.0[0][0] - other.0[0][0], self.0[0][1] - other.0[0][1]],
            [self.0[1][0] - other.0[1][0], self.0[1][1] - other.0[1][1]],
        ]);
        // Largest singular value from the eigenvalues of D^dagger D.
        let g = d.adjoint() * d;
        let a = g.0[0][0].re;
        let c = g.0[1][1].re;
        let b = g.0[0][1].norm();
        let disc = ((a - c) * (a - c) / 4.0 + b * b).sqrt();
        ((a + c) / 2.0 + disc).max(0.0).sqrt()
    }

    pub fn to_params(&self) -> Vec<f64> {
        self.0
            .iter()
            .flat_map(|row| row.iter().flat_map(|z| [z.re, z.im]))
            .collect()
    }

    pub fn from_params(p: &[f64]) -> Option<Self> {
        if p.len() != 8 {
            return None;
        }
        Some(Mat2([
            [C64::new(p[0], p[1]), C64::new(p[2], p[3])],
            [C64::new(p[4], p[5]), C64::new(p[6], p[7])],
        ]))
    }

    pub fn is_identity(&self) -> bool {
        *self == Mat2::IDENTITY
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Mat2(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paulis_are_unitary_and_anticommute() {
        for p in [Mat2::X, Mat2::Y, Mat2::Z] {
            assert!(p.is_unitary(1e-15));
        }
        let xy = Mat2::X * Mat2::Y;
        let yx = Mat2::Y * Mat2::X;
        for r in 0..2 {
            for c in 0..2 {
                assert!((xy.0[r][c] + yx.0[r][c]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn op_distance_of_small_rotation() {
        let theta = 0.3;
        let u = Mat2::axis_rotation([0.0, 0.6, 0.8], theta);
        let expected = 2.0 * (theta / 4.0).sin();
        assert!((Mat2::IDENTITY.op_distance(&u) - expected).abs() < 1e-12);
        assert!(u.op_distance(&u) < 1e-15);
    }

    #[test]
    fn params_roundtrip() {
        let u = Mat2::rz(0.4) * Mat2::ry(1.1);
        assert_eq!(Mat2::from_params(&u.to_params()), Some(u));
    }
}
