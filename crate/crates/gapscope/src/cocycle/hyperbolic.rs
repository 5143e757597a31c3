//! Numerical test for uniform hyperbolicity.
//!
//! Two conditions must hold on a phase sample:
//!
//! * growth: `log ‖A_n(θ)‖ / n ≥ threshold` for every sampled phase;
//! * splitting: the unstable direction (pushed forward from `n` steps in the
//!   past) and the stable direction (pulled back from `n` steps in the future)
//!   stay transversal along an orbit segment.
//!
//! Growth alone cannot separate a gap from the spectrum when the Lyapunov
//! exponent is positive on the spectrum; there the two directions exist but
//! come arbitrarily close to each other, which the splitting check catches.
//! Verdicts within a relative band of either threshold are reported as
//! indeterminate.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::maps::FiberMap;
use super::matrix::{Fiber, Mat2};
use super::product::{wrap, Accumulator};
use crate::arithmetic::Frequency;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UhConfig {
    /// Product length for growth and burn-in length for the splitting.
    pub n_iter: usize,
    /// Phases sampled for the growth condition.
    pub n_phases: usize,
    /// Orbit points at which the splitting is checked.
    pub orbit_len: usize,
    pub growth_threshold: f64,
    /// Minimal sine of the angle between stable and unstable directions.
    pub angle_floor: f64,
    /// Relative width of the indeterminate band around each threshold.
    pub band: f64,
}

impl UhConfig {
    /// Configuration with `n_iter` steps and a growth threshold a few times
    /// above the `ln(n)/n` floor that bounded products leave behind.
    pub fn with_iters(n_iter: usize) -> Self {
        let n_iter = n_iter.max(16);
        Self {
            n_iter,
            n_phases: 8,
            orbit_len: 4000,
            growth_threshold: default_growth_threshold(n_iter),
            angle_floor: 5e-3,
            band: 0.25,
        }
    }
}

impl Default for UhConfig {
    fn default() -> Self {
        Self::with_iters(2000)
    }
}

pub fn default_growth_threshold(n_iter: usize) -> f64 {
    let n = n_iter.max(2) as f64;
    4.0 * n.ln() / n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hyperbolicity {
    Hyperbolic,
    NotHyperbolic,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UhVerdict {
    pub status: Hyperbolicity,
    /// Smallest observed growth exponent.
    pub margin: f64,
    /// Smallest observed sine of the stable/unstable angle (`NaN` when the
    /// growth test already failed).
    pub min_angle: f64,
}

impl UhVerdict {
    pub fn is_uniformly_hyperbolic(&self) -> bool {
        self.status == Hyperbolicity::Hyperbolic
    }

    pub fn is_indeterminate(&self) -> bool {
        self.status == Hyperbolicity::Indeterminate
    }
}

fn growth_phases(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |j| (j as f64 + 0.5) / n as f64)
}

const ORBIT_START: f64 = 0.0;

/// Shared decision procedure.
///
/// `phase_step(p, i)` is the `i`-th factor of the growth product at phase
/// `p`; `orbit_step(i)` is the fiber at `θ_0 + (i − n)α` for
/// `i ∈ [0, 2n + m)` where `m = cfg.orbit_len`.
fn classify(
    cfg: &UhConfig,
    phase_step: impl Fn(usize, usize) -> Mat2,
    orbit_step: impl Fn(usize) -> Mat2,
) -> UhVerdict {
    let n = cfg.n_iter;
    let m = cfg.orbit_len;
    let lo = cfg.growth_threshold * (1.0 - cfg.band);
    let hi = cfg.growth_threshold * (1.0 + cfg.band);

    let mut margin = f64::INFINITY;
    for p in 0..cfg.n_phases.max(1) {
        let mut acc = Accumulator::<Mat2>::new();
        for i in 0..n {
            acc.push_left(phase_step(p, i));
        }
        let g = acc.log_norm() / n as f64;
        margin = margin.min(g);
        if margin < lo {
            return UhVerdict {
                status: Hyperbolicity::NotHyperbolic,
                margin,
                min_angle: f64::NAN,
            };
        }
    }

    // Forward push: direction at orbit index i before the factor i acts.
    let mut unstable = vec![[0.0; 2]; m];
    let mut v = [1.0, 0.5];
    for i in 0..n + m {
        if i >= n {
            unstable[i - n] = v;
        }
        v = orbit_step(i).apply(v);
        let r = v[0].abs().max(v[1].abs());
        v = [v[0] / r, v[1] / r];
    }
    // Backward pull from index 2n + m down to n.
    let mut min_angle = f64::INFINITY;
    let mut w = [0.5, 1.0];
    for i in (n..2 * n + m).rev() {
        w = orbit_step(i).inverse().apply(w);
        let r = w[0].abs().max(w[1].abs());
        w = [w[0] / r, w[1] / r];
        if i < n + m {
            let u = unstable[i - n];
            let s = (u[0] * w[1] - u[1] * w[0]).abs()
                / (u[0].hypot(u[1]) * w[0].hypot(w[1]));
            min_angle = min_angle.min(s);
        }
    }

    let a_lo = cfg.angle_floor / (1.0 + 3.0 * cfg.band);
    let a_hi = cfg.angle_floor * (1.0 + 3.0 * cfg.band);
    let status = if min_angle < a_lo {
        Hyperbolicity::NotHyperbolic
    } else if margin >= hi && min_angle >= a_hi {
        Hyperbolicity::Hyperbolic
    } else {
        Hyperbolicity::Indeterminate
    };
    UhVerdict {
        status,
        margin,
        min_angle,
    }
}

/// Uniform hyperbolicity test for an arbitrary real cocycle map.
pub fn is_uniformly_hyperbolic<M: FiberMap + ?Sized>(
    map: &M,
    alpha: &Frequency,
    cfg: &UhConfig,
) -> UhVerdict {
    let a = alpha.value();
    let n = cfg.n_iter;
    let phases: Vec<Vec<Mat2>> = growth_phases(cfg.n_phases.max(1))
        .map(|t| (0..n).map(|i| map.at(wrap(t + i as f64 * a))).collect())
        .collect();
    let orbit: Vec<Mat2> = (0..2 * n + cfg.orbit_len)
        .map(|i| map.at(wrap(ORBIT_START + (i as f64 - n as f64) * a)))
        .collect();
    classify(cfg, |p, i| phases[p][i], |i| orbit[i])
}

/// Precomputed potentials for repeated tests of `(α, S_E^λ)` at many
/// energies. The potential along each orbit does not depend on `E`, so
/// energy scans only pay for the 2×2 recursion.
#[derive(Debug, Clone)]
pub struct SchrodingerUh {
    pub lambda: f64,
    pub cfg: UhConfig,
    phase_potential: Vec<Vec<f64>>,
    orbit_potential: Vec<f64>,
}

impl SchrodingerUh {
    pub fn new(lambda: f64, alpha: &Frequency, cfg: UhConfig) -> Self {
        let a = alpha.value();
        let n = cfg.n_iter;
        let v = |t: f64| 2.0 * lambda * (TAU * t).cos();
        let phase_potential = growth_phases(cfg.n_phases.max(1))
            .map(|t| (0..n).map(|i| v(t + i as f64 * a)).collect())
            .collect();
        let orbit_potential = (0..2 * n + cfg.orbit_len)
            .map(|i| v(ORBIT_START + (i as f64 - n as f64) * a))
            .collect();
        Self {
            lambda,
            cfg,
            phase_potential,
            orbit_potential,
        }
    }

    pub fn test(&self, energy: f64) -> UhVerdict {
        classify(
            &self.cfg,
            |p, i| Mat2::schrodinger(energy - self.phase_potential[p][i]),
            |i| Mat2::schrodinger(energy - self.orbit_potential[i]),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::maps::{Constant, SchrodingerCocycle};

    fn golden() -> Frequency {
        Frequency::golden()
    }

    #[test]
    fn far_energy_is_hyperbolic() {
        let c = SchrodingerCocycle::new(0.5, 10.0, golden()).unwrap();
        let v = is_uniformly_hyperbolic(&c, &golden(), &UhConfig::with_iters(1000));
        assert_eq!(v.status, Hyperbolicity::Hyperbolic, "{v:?}");
        assert!(v.margin > 2.0);
    }

    #[test]
    fn elliptic_constant_is_not_hyperbolic() {
        let c = SchrodingerCocycle::new(0.0, 1.0, golden()).unwrap();
        let v = is_uniformly_hyperbolic(&c, &golden(), &UhConfig::with_iters(1000));
        assert_eq!(v.status, Hyperbolicity::NotHyperbolic);
    }

    #[test]
    fn symmetric_energy_is_in_spectrum() {
        for lambda in [0.5, 2.0] {
            let c = SchrodingerCocycle::new(lambda, 0.0, golden()).unwrap();
            let v = is_uniformly_hyperbolic(&c, &golden(), &UhConfig::with_iters(2000));
            assert_eq!(v.status, Hyperbolicity::NotHyperbolic, "lambda {lambda}: {v:?}");
        }
    }

    #[test]
    fn precomputed_probe_matches_generic_path() {
        let alpha = golden();
        let cfg = UhConfig::with_iters(1000);
        let probe = SchrodingerUh::new(0.5, &alpha, cfg);
        for e in [-2.9, -1.0, 0.0, 0.93, 2.6] {
            let c = SchrodingerCocycle::new(0.5, e, alpha.clone()).unwrap();
            let a = is_uniformly_hyperbolic(&c, &alpha, &cfg);
            let b = probe.test(e);
            assert_eq!(a.status, b.status);
            assert!((a.margin - b.margin).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_hyperbolic_matrix() {
        let m = Constant(Mat2::new(2.0, 0.0, 0.0, 0.5));
        let v = is_uniformly_hyperbolic(&m, &golden(), &UhConfig::with_iters(1000));
        assert_eq!(v.status, Hyperbolicity::Hyperbolic);
        assert!((v.margin - 2f64.ln()).abs() < 1e-12);
        assert!((v.min_angle - 1.0).abs() < 1e-12);
    }
}
