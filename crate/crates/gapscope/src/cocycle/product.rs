use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::maps::{FiberMap, SchrodingerCocycle};
use super::matrix::{Fiber, Mat2};
use crate::arithmetic::Frequency;
use crate::par;

/// A product `M · e^{log_scale}` with `‖M‖ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenormalizedProduct<T> {
    pub matrix: T,
    pub log_scale: f64,
}

impl<T: Fiber> RenormalizedProduct<T> {
    /// The product itself; overflows for large `log_scale`.
    pub fn value(&self) -> T {
        self.matrix.scale(self.log_scale.exp())
    }
}

/// Binary exponent of a positive normal double.
#[inline(always)]
fn exponent(x: f64) -> i32 {
    ((x.to_bits() >> 52) & 0x7ff) as i32 - 1023
}

#[inline(always)]
fn pow2(e: i32) -> f64 {
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// Running product renormalized by exact powers of two after every factor.
///
/// Scaling by `2^-e` is exact in floating point, so the bookkeeping adds no
/// rounding; only the final normalization to unit operator norm takes a log.
#[derive(Debug, Clone, Copy)]
pub struct Accumulator<T> {
    m: T,
    exp2: i64,
}

impl<T: Fiber> Accumulator<T> {
    pub fn new() -> Self {
        Self {
            m: T::identity(),
            exp2: 0,
        }
    }

    #[inline(always)]
    pub fn push_left(&mut self, a: T) {
        self.m = a * self.m;
        self.renormalize();
    }

    #[inline(always)]
    pub fn push_right(&mut self, a: T) {
        self.m = self.m * a;
        self.renormalize();
    }

    #[inline(always)]
    fn renormalize(&mut self) {
        let e = exponent(self.m.max_abs());
        if e != 0 {
            self.m = self.m.scale(pow2(-e));
            self.exp2 += e as i64;
        }
    }

    pub fn log_norm(&self) -> f64 {
        self.exp2 as f64 * LN_2 + self.m.op_norm().ln()
    }

    pub fn finish(self) -> RenormalizedProduct<T> {
        let n = self.m.op_norm();
        RenormalizedProduct {
            matrix: self.m.scale(1.0 / n),
            log_scale: self.exp2 as f64 * LN_2 + n.ln(),
        }
    }
}

impl<T: Fiber> Default for Accumulator<T> {
    fn default() -> Self {
        Self::new()
    }
}

#[inline(always)]
pub(crate) fn wrap(theta: f64) -> f64 {
    theta - theta.floor()
}

/// `A_n(θ) = A(θ+(n−1)α) ⋯ A(θ)` for `n ≥ 0` and
/// `A_{−n}(θ) = A_n(θ−nα)^{-1}` for negative counts, with any fiber type.
pub fn product_with<T: Fiber>(
    fiber: impl Fn(f64) -> T,
    alpha: f64,
    theta: f64,
    n: i64,
) -> RenormalizedProduct<T> {
    let mut acc = Accumulator::new();
    if n >= 0 {
        let mut th = wrap(theta);
        for _ in 0..n {
            acc.push_left(fiber(th));
            th = wrap(th + alpha);
        }
    } else {
        for j in 1..=n.unsigned_abs() {
            acc.push_left(fiber(wrap(theta - j as f64 * alpha)).inverse());
        }
    }
    acc.finish()
}

/// The `n`-step product of a real cocycle in renormalized form.
pub fn cocycle_product<M: FiberMap + ?Sized>(
    map: &M,
    alpha: &Frequency,
    theta: f64,
    n: i64,
) -> RenormalizedProduct<Mat2> {
    product_with(|t| map.at(t), alpha.value(), theta, n)
}

/// Equidistributed phases `θ_j = (j + u) / n` with one seeded jitter `u`.
pub fn phase_grid(n_phases: usize, seed: u64) -> Vec<f64> {
    let n = n_phases.max(1);
    let u: f64 = ChaCha8Rng::seed_from_u64(seed).gen();
    (0..n).map(|j| (j as f64 + u) / n as f64).collect()
}

/// Phase average of `log ‖A_n(θ)‖ / n` for an arbitrary fiber type.
pub fn lyapunov_with<T: Fiber>(
    fiber: impl Fn(f64) -> T + Sync,
    alpha: f64,
    n_iter: usize,
    phases: &[f64],
) -> f64 {
    let logs = par::map(phases, |&th| {
        product_with(&fiber, alpha, th, n_iter as i64).log_scale / n_iter as f64
    });
    logs.iter().sum::<f64>() / phases.len() as f64
}

/// Lyapunov exponent of a real cocycle map.
pub fn lyapunov_of<M: FiberMap + ?Sized>(
    map: &M,
    alpha: &Frequency,
    n_iter: usize,
    n_phases: usize,
    seed: u64,
) -> f64 {
    lyapunov_with(|t| map.at(t), alpha.value(), n_iter, &phase_grid(n_phases, seed))
}

/// `L(α, S_E^λ)`, averaged over `n_phases` equidistributed phases.
///
/// Ignores `c.epsilon`; see [`lyapunov_complexified`].
pub fn lyapunov_exponent(c: &SchrodingerCocycle, n_iter: usize, n_phases: usize, seed: u64) -> f64 {
    lyapunov_with(
        |t| c.real_at(t),
        c.alpha.value(),
        n_iter,
        &phase_grid(n_phases, seed),
    )
}

/// `L(α, S_E^λ(· + iε))` computed with complex fibers.
pub fn lyapunov_complexified(
    c: &SchrodingerCocycle,
    n_iter: usize,
    n_phases: usize,
    seed: u64,
) -> f64 {
    lyapunov_with(
        |t| c.complex_at(t),
        c.alpha.value(),
        n_iter,
        &phase_grid(n_phases, seed),
    )
}
