use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{Fiber, Mat2, Mat2C};
use super::CocycleError;
use crate::arithmetic::Frequency;

/// A continuous map `θ ↦ A(θ)` from the circle (turn units) into 2×2 real
/// matrices, together with a lift of its action on unit vectors.
pub trait FiberMap: Sync {
    fn at(&self, theta: f64) -> Mat2;

    /// Angle in radians swept by the unit vector `v` under `A(θ)`, chosen on
    /// the continuous lift homotopic to the identity. The default takes the
    /// principal branch, which is correct whenever the map stays within a
    /// half turn of the identity.
    fn lift(&self, theta: f64, v: [f64; 2]) -> f64 {
        principal_angle(v, self.at(theta).apply(v))
    }
}

/// Signed angle from `v` to `w` in `(−π, π]`.
#[inline]
pub fn principal_angle(v: [f64; 2], w: [f64; 2]) -> f64 {
    let cross = v[0] * w[1] - v[1] * w[0];
    let dot = v[0] * w[0] + v[1] * w[1];
    cross.atan2(dot)
}

/// Lift of `[[c, −1], [1, 0]]` acting on `v`.
///
/// `v · Av = c x²`, so the swept angle sits in `[−π/2, π/2]` for `c ≥ 0` and
/// in `[π/2, 3π/2]` for `c ≤ 0`; this is the branch that equals `π/2` at
/// `c = 0` and varies continuously with `c`.
#[inline(always)]
pub fn schrodinger_lift(c: f64, v: [f64; 2]) -> f64 {
    let (x, y) = (v[0], v[1]);
    let cross = x * x - c * x * y + y * y;
    let dot = c * x * x;
    let a = cross.atan2(dot);
    if a < -FRAC_PI_2 {
        a + TAU
    } else {
        a
    }
}

/// Almost Mathieu cocycle data `θ ↦ S_E^λ(θ + iε)`.
///
/// The potential is `2λ cos(2πθ)`; `epsilon` is the imaginary part of the
/// angle `2πθ`, so the complexified potential is `2λ cos(2πθ + iε)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchrodingerCocycle {
    pub lambda: f64,
    pub energy: f64,
    pub epsilon: f64,
    pub alpha: Frequency,
}

/// Fiber value of a possibly complexified Schrödinger cocycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transfer {
    Real(Mat2),
    Complex(Mat2C),
}

impl SchrodingerCocycle {
    pub fn new(lambda: f64, energy: f64, alpha: Frequency) -> Result<Self, CocycleError> {
        Self::complexified(lambda, energy, 0.0, alpha)
    }

    pub fn complexified(
        lambda: f64,
        energy: f64,
        epsilon: f64,
        alpha: Frequency,
    ) -> Result<Self, CocycleError> {
        // λ = 0 is the free Laplacian and is allowed as a degenerate case.
        if !(lambda >= 0.0) || !energy.is_finite() || !epsilon.is_finite() {
            return Err(CocycleError::Parameter(format!(
                "need lambda >= 0 and finite E, epsilon (got {lambda}, {energy}, {epsilon})"
            )));
        }
        Ok(Self {
            lambda,
            energy,
            epsilon,
            alpha,
        })
    }

    #[inline(always)]
    pub fn potential(&self, theta: f64) -> f64 {
        2.0 * self.lambda * (TAU * theta).cos()
    }

    pub fn real_at(&self, theta: f64) -> Mat2 {
        Mat2::schrodinger(self.energy - self.potential(theta))
    }

    pub fn complex_at(&self, theta: f64) -> Mat2C {
        let z = Complex64::new(TAU * theta, self.epsilon).cos();
        let one = Complex64::new(1.0, 0.0);
        Mat2C::new(self.energy - 2.0 * self.lambda * z, -one, one, 0.0.into())
    }

    /// `[[E − 2λ cos(2πθ + iε), −1], [1, 0]]`.
    pub fn transfer_matrix(&self, theta: f64) -> Transfer {
        if self.epsilon == 0.0 {
            Transfer::Real(self.real_at(theta))
        } else {
            Transfer::Complex(self.complex_at(theta))
        }
    }
}

impl FiberMap for SchrodingerCocycle {
    fn at(&self, theta: f64) -> Mat2 {
        self.real_at(theta)
    }

    fn lift(&self, theta: f64, v: [f64; 2]) -> f64 {
        schrodinger_lift(self.energy - self.potential(theta), v)
    }
}

/// A constant cocycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub Mat2);

impl FiberMap for Constant {
    fn at(&self, _theta: f64) -> Mat2 {
        self.0
    }
}

/// `θ ↦ R_{kθ/2}`: a rotation by `πkθ`. For odd `k` this is only a map
/// into PSL(2, R) (it changes sign over one period); its degree is `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HalfTwist(pub i64);

impl FiberMap for HalfTwist {
    fn at(&self, theta: f64) -> Mat2 {
        Mat2::rotation(0.5 * self.0 as f64 * theta)
    }

    fn lift(&self, theta: f64, _v: [f64; 2]) -> f64 {
        PI * self.0 as f64 * theta
    }
}

/// Any closure `θ ↦ A(θ)`, lifted by the principal branch.
pub struct FnMap<F>(pub F);

impl<F: Fn(f64) -> Mat2 + Sync> FiberMap for FnMap<F> {
    fn at(&self, theta: f64) -> Mat2 {
        (self.0)(theta)
    }
}

/// `θ ↦ B(θ+α)^{-1} A(θ) B(θ)`.
///
/// `B` is evaluated at the unreduced argument `θ + α`, so half twists
/// combine consistently and the result is a genuine SL(2, R) map even when
/// `B` only lives in PSL(2, R).
pub struct Conjugated<'a, A: ?Sized, B: ?Sized> {
    a: &'a A,
    b: &'a B,
    alpha: f64,
}

/// Conjugates `a` by `b` over the rotation by `alpha`, after checking that
/// `b` stays invertible on `n_samples` equally spaced phases.
pub fn conjugate<'a, A: FiberMap + ?Sized, B: FiberMap + ?Sized>(
    a: &'a A,
    b: &'a B,
    alpha: &Frequency,
    n_samples: usize,
) -> Result<Conjugated<'a, A, B>, CocycleError> {
    const DET_FLOOR: f64 = 1e-10;
    for j in 0..n_samples.max(1) {
        let theta = j as f64 / n_samples.max(1) as f64;
        let det = b.at(theta).det_abs();
        if !(det > DET_FLOOR) {
            return Err(CocycleError::SingularConjugation { theta, det });
        }
    }
    Ok(Conjugated {
        a,
        b,
        alpha: alpha.value(),
    })
}

impl<A: FiberMap + ?Sized, B: FiberMap + ?Sized> FiberMap for Conjugated<'_, A, B> {
    fn at(&self, theta: f64) -> Mat2 {
        self.b.at(theta + self.alpha).inverse() * self.a.at(theta) * self.b.at(theta)
    }

    fn lift(&self, theta: f64, v: [f64; 2]) -> f64 {
        let b0 = self.b.at(theta);
        let w1 = b0.apply(v);
        let l1 = self.b.lift(theta, v);
        let n1 = unit(w1);
        let l2 = self.a.lift(theta, n1);
        let w2 = self.a.at(theta).apply(n1);
        let binv = self.b.at(theta + self.alpha).inverse();
        let u = unit(binv.apply(w2));
        let l3 = -self.b.lift(theta + self.alpha, u);
        l1 + l2 + l3
    }
}

#[inline(always)]
pub(crate) fn unit(v: [f64; 2]) -> [f64; 2] {
    let r = v[0].hypot(v[1]);
    [v[0] / r, v[1] / r]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Frequency {
        Frequency::golden()
    }

    #[test]
    fn transfer_matrix_examples() {
        let j = Mat2::new(0.0, -1.0, 1.0, 0.0);
        let free = SchrodingerCocycle::new(0.0, 0.0, golden()).unwrap();
        assert_eq!(free.real_at(0.37), j);
        let c = SchrodingerCocycle::new(1.0, 2.0, golden()).unwrap();
        assert_eq!(c.real_at(0.0), j);
        let c = SchrodingerCocycle::new(1.0, 0.0, golden()).unwrap();
        assert!(c.real_at(0.25).sub_norm(&j) < 1e-15);
        assert_eq!(c.real_at(0.25).det(), 1.0);
    }

    #[test]
    fn complex_transfer_has_unit_determinant() {
        let c = SchrodingerCocycle::complexified(0.7, 0.3, 0.9, golden()).unwrap();
        let Transfer::Complex(m) = c.transfer_matrix(0.123) else {
            panic!("expected complex fiber")
        };
        assert!((m.det() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let c0 = SchrodingerCocycle::new(0.7, 0.3, golden()).unwrap();
        assert!(matches!(c0.transfer_matrix(0.1), Transfer::Real(_)));
    }

    #[test]
    fn negative_coupling_rejected() {
        assert!(SchrodingerCocycle::new(-0.5, 0.0, golden()).is_err());
    }

    #[test]
    fn schrodinger_lift_is_continuous_in_c() {
        let v = unit([0.3, -0.8]);
        let mut prev = schrodinger_lift(-10.0, v);
        let mut c = -10.0;
        while c < 10.0 {
            c += 1e-3;
            let a = schrodinger_lift(c, v);
            assert!((a - prev).abs() < 0.05, "jump at c = {c}");
            prev = a;
        }
        assert!((schrodinger_lift(0.0, v) - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn conjugation_by_identity_is_trivial() {
        let a = SchrodingerCocycle::new(0.5, 0.2, golden()).unwrap();
        let id = Constant(Mat2::IDENTITY);
        let c = conjugate(&a, &id, &golden(), 16).unwrap();
        for t in [0.0, 0.3, 0.77] {
            assert!(c.at(t).sub_norm(&a.at(t)) < 1e-15);
            let v = unit([0.6, 0.2]);
            assert!((c.lift(t, v) - a.lift(t, v)).abs() < 1e-12);
        }
    }

    #[test]
    fn half_twist_conjugation_of_rotation() {
        let alpha = golden();
        let r = Constant(Mat2::rotation(0.3));
        let b = HalfTwist(1);
        let c = conjugate(&r, &b, &alpha, 16).unwrap();
        let expected = Mat2::rotation(0.3 - alpha.value() / 2.0);
        for t in [0.0, 0.2, 0.5, 0.9] {
            assert!(c.at(t).sub_norm(&expected) < 1e-13);
        }
    }

    #[test]
    fn singular_conjugation_detected() {
        let a = Constant(Mat2::IDENTITY);
        let b = FnMap(|t: f64| Mat2::new(1.0, 0.0, 0.0, (TAU * t).sin()));
        assert!(matches!(
            conjugate(&a, &b, &golden(), 8),
            Err(CocycleError::SingularConjugation { .. })
        ));
    }
}
