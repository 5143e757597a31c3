use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Real 2×2 matrix `[[a11, a12], [a21, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

/// Complex 2×2 matrix, the fiber value of a complexified cocycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2C {
    pub a11: Complex64,
    pub a12: Complex64,
    pub a21: Complex64,
    pub a22: Complex64,
}

/// Arithmetic shared by real and complex fibers so that products and
/// exponents can be written once.
pub trait Fiber: Copy + Mul<Output = Self> {
    fn identity() -> Self;
    fn scale(self, s: f64) -> Self;
    /// Largest entry modulus; a cheap norm for renormalization.
    fn max_abs(&self) -> f64;
    /// Operator 2-norm.
    fn op_norm(&self) -> f64;
    fn inverse(&self) -> Self;
    fn det_abs(&self) -> f64;
    fn sub_norm(&self, other: &Self) -> f64;
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    /// One-step Schrödinger matrix `[[c, -1], [1, 0]]`.
    #[inline(always)]
    pub const fn schrodinger(c: f64) -> Self {
        Self::new(c, -1.0, 1.0, 0.0)
    }

    /// Rotation `R_φ` by the angle `2πφ`.
    pub fn rotation(phi: f64) -> Self {
        let (s, c) = (std::f64::consts::TAU * phi).sin_cos();
        Self::new(c, -s, s, c)
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    #[inline(always)]
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.a11 * v[0] + self.a12 * v[1],
            self.a21 * v[0] + self.a22 * v[1],
        ]
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.a11, self.a21, self.a12, self.a22)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.a11 + o.a11, self.a12 + o.a12, self.a21 + o.a21, self.a22 + o.a22)
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(self.a11 - o.a11, self.a12 - o.a12, self.a21 - o.a21, self.a22 - o.a22)
    }

    pub fn to_complex(&self) -> Mat2C {
        Mat2C::new(
            self.a11.into(),
            self.a12.into(),
            self.a21.into(),
            self.a22.into(),
        )
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    #[inline(always)]
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }
}

/// Largest singular value from the Gram matrix `[[p, r], [r̄, s]] = M*M`:
/// `σ² = (p + s)/2 + sqrt(((p − s)/2)² + |r|²)`, free of cancellation when
/// the singular values are close.
fn sigma_max(p: f64, s: f64, r_abs: f64) -> f64 {
    let h = 0.5 * (p - s);
    (0.5 * (p + s) + h.hypot(r_abs)).sqrt()
}

impl Fiber for Mat2 {
    fn identity() -> Self {
        Self::IDENTITY
    }

    #[inline(always)]
    fn scale(self, s: f64) -> Self {
        Self::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    #[inline(always)]
    fn max_abs(&self) -> f64 {
        self.a11
            .abs()
            .max(self.a12.abs())
            .max(self.a21.abs().max(self.a22.abs()))
    }

    fn op_norm(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        let s = self.scale(1.0 / m);
        let p = s.a11 * s.a11 + s.a21 * s.a21;
        let q = s.a12 * s.a12 + s.a22 * s.a22;
        let r = s.a11 * s.a12 + s.a21 * s.a22;
        m * sigma_max(p, q, r.abs())
    }

    fn inverse(&self) -> Self {
        let d = self.det();
        Self::new(self.a22 / d, -self.a12 / d, -self.a21 / d, self.a11 / d)
    }

    fn det_abs(&self) -> f64 {
        self.det().abs()
    }

    fn sub_norm(&self, other: &Self) -> f64 {
        self.sub(other).op_norm()
    }
}

impl Mat2C {
    pub const fn new(a11: Complex64, a12: Complex64, a21: Complex64, a22: Complex64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub fn det(&self) -> Complex64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> Complex64 {
        self.a11 + self.a22
    }
}

impl Mul for Mat2C {
    type Output = Mat2C;

    #[inline(always)]
    fn mul(self, o: Mat2C) -> Mat2C {
        Mat2C::new(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }
}

impl Fiber for Mat2C {
    fn identity() -> Self {
        Mat2::IDENTITY.to_complex()
    }

    #[inline(always)]
    fn scale(self, s: f64) -> Self {
        Self::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    #[inline(always)]
    fn max_abs(&self) -> f64 {
        // l∞ of real and imaginary parts; within √2 of the modulus, which is
        // all renormalization needs.
        [self.a11, self.a12, self.a21, self.a22]
            .iter()
            .map(|z| z.re.abs().max(z.im.abs()))
            .fold(0.0, f64::max)
    }

    fn op_norm(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        let s = self.scale(1.0 / m);
        let p = s.a11.norm_sqr() + s.a21.norm_sqr();
        let q = s.a12.norm_sqr() + s.a22.norm_sqr();
        let r = s.a11.conj() * s.a12 + s.a21.conj() * s.a22;
        m * sigma_max(p, q, r.norm())
    }

    fn inverse(&self) -> Self {
        let d = self.det();
        Self::new(self.a22 / d, -self.a12 / d, -self.a21 / d, self.a11 / d)
    }

    fn det_abs(&self) -> f64 {
        self.det().norm()
    }

    fn sub_norm(&self, other: &Self) -> f64 {
        Mat2C::new(
            self.a11 - other.a11,
            self.a12 - other.a12,
            self.a21 - other.a21,
            self.a22 - other.a22,
        )
        .op_norm()
    }
}
