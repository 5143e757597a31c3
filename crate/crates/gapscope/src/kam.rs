//! One step of the discrete KAM scheme for `sl(2, R)` perturbations of a
//! constant cocycle: Fourier truncations, resonance splitting, the
//! homological equation and a single Newton step with its measured
//! quadratic remainder.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arithmetic::{torus_distance, Frequency};
use crate::cocycle::{Fiber, Mat2, Mat2C};

#[derive(Debug, thiserror::Error)]
pub enum KamError {
    #[error("mode {k} is resonant: divisor {divisor:.3e} below the floor {floor:.3e}")]
    Resonant { k: i64, divisor: f64, floor: f64 },
    #[error("perturbation too large: |f| q^3 = {value:.3e} exceeds {limit}")]
    Smallness { value: f64, limit: f64 },
    #[error("constant part is not in SL(2, R): det = {det}")]
    NotUnimodular { det: f64 },
    #[error("invalid series: {0}")]
    Series(String),
}

/// Trigonometric polynomial `Σ_{|k| ≤ L} ĉ(k) e^{2πikθ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    degree: usize,
    coeffs: Vec<Complex64>,
}

impl FourierSeries {
    pub fn zero(degree: usize) -> Self {
        Self {
            degree,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * degree + 1],
        }
    }

    /// A single mode `c e^{2πikθ}`; pass `real = true` to add the mirrored
    /// conjugate mode so that the series is real valued.
    pub fn mode(k: i64, c: Complex64, real: bool) -> Self {
        let mut s = Self::zero(k.unsigned_abs() as usize);
        s.set(k, c);
        if real && k != 0 {
            s.set(-k, c.conj());
        } else if real {
            s.set(0, Complex64::new(c.re, 0.0));
        }
        s
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.degree {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[(k + self.degree as i64) as usize]
    }

    /// Sets `ĉ(k)`, growing the degree if needed.
    pub fn set(&mut self, k: i64, c: Complex64) {
        let need = k.unsigned_abs() as usize;
        if need > self.degree {
            *self = self.with_degree(need);
        }
        let i = (k + self.degree as i64) as usize;
        self.coeffs[i] = c;
    }

    fn with_degree(&self, degree: usize) -> Self {
        let mut out = Self::zero(degree);
        for k in self.modes() {
            if k.unsigned_abs() as usize <= degree {
                out.coeffs[(k + degree as i64) as usize] = self.coeff(k);
            }
        }
        out
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> {
        let l = self.degree as i64;
        -l..=l
    }

    pub fn eval(&self, theta: f64) -> Complex64 {
        self.modes()
            .map(|k| self.coeff(k) * Complex64::from_polar(1.0, TAU * k as f64 * theta))
            .sum()
    }

    /// Weighted coefficient norm `Σ |ĉ(k)| e^{|k| h}`; `h = 0` gives the
    /// `ℓ¹` norm, which dominates the sup norm.
    pub fn weighted_norm(&self, h: f64) -> f64 {
        self.modes()
            .map(|k| self.coeff(k).norm() * (k.abs() as f64 * h).exp())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.weighted_norm(0.0)
    }

    /// `ĉ(−k) = conj(ĉ(k))` holds exactly.
    pub fn is_real(&self) -> bool {
        self.modes().all(|k| self.coeff(-k) == self.coeff(k).conj())
    }

    /// Keeps the modes selected by `keep`.
    pub fn filter(&self, keep: impl Fn(i64) -> bool) -> Self {
        let mut out = Self::zero(self.degree);
        for k in self.modes().filter(|&k| keep(k)) {
            out.set(k, self.coeff(k));
        }
        out
    }

    /// `T_L f`: the modes with `|k| < L`.
    pub fn truncate_low(&self, l: usize) -> Self {
        self.filter(|k| (k.unsigned_abs() as usize) < l)
    }

    /// `R_L f`: the modes with `|k| ≥ L`.
    pub fn truncate_high(&self, l: usize) -> Self {
        self.filter(|k| (k.unsigned_abs() as usize) >= l)
    }

    pub fn add(&self, o: &Self) -> Self {
        let d = self.degree.max(o.degree);
        let mut out = Self::zero(d);
        for k in out.modes().collect::<Vec<_>>() {
            out.set(k, self.coeff(k) + o.coeff(k));
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `(k, re, im)` triples for every mode.
    pub fn triples(&self) -> Vec<(i64, f64, f64)> {
        self.modes().map(|k| {
            let c = self.coeff(k);
            (k, c.re, c.im)
        }).collect()
    }

    pub fn from_triples(triples: &[(i64, f64, f64)]) -> Self {
        let mut s = Self::zero(0);
        for &(k, re, im) in triples {
            s.set(k, Complex64::new(re, im));
        }
        s
    }
}

impl Serialize for FourierSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.triples().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FourierSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let t = Vec::<(i64, f64, f64)>::deserialize(d)?;
        Ok(Self::from_triples(&t))
    }
}

/// Traceless matrix series `[[diag, upper], [lower, −diag]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlMatSeries {
    pub diag: FourierSeries,
    pub upper: FourierSeries,
    pub lower: FourierSeries,
}

impl SlMatSeries {
    pub fn zero(degree: usize) -> Self {
        Self {
            diag: FourierSeries::zero(degree),
            upper: FourierSeries::zero(degree),
            lower: FourierSeries::zero(degree),
        }
    }

    pub fn degree(&self) -> usize {
        self.diag.degree().max(self.upper.degree()).max(self.lower.degree())
    }

    fn components(&self) -> [&FourierSeries; 3] {
        [&self.diag, &self.upper, &self.lower]
    }

    fn map(&self, f: impl Fn(&FourierSeries) -> FourierSeries) -> Self {
        Self {
            diag: f(&self.diag),
            upper: f(&self.upper),
            lower: f(&self.lower),
        }
    }

    /// Largest component norm.
    pub fn norm(&self) -> f64 {
        self.components().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.components().iter().all(|c| c.is_real())
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|c| c.scale(s))
    }

    pub fn filter(&self, keep: impl Fn(i64) -> bool + Copy) -> Self {
        self.map(|c| c.filter(keep))
    }

    /// Modes with a nonzero coefficient in some component.
    pub fn support(&self) -> Vec<i64> {
        let l = self.degree() as i64;
        (-l..=l)
            .filter(|&k| self.components().iter().any(|c| c.coeff(k) != Complex64::new(0.0, 0.0)))
            .collect()
    }

    /// Matrix of Fourier coefficients at mode `k`.
    pub fn coeff(&self, k: i64) -> Mat2C {
        let a = self.diag.coeff(k);
        Mat2C::new(a, self.upper.coeff(k), self.lower.coeff(k), -a)
    }

    fn set(&mut self, k: i64, m: Mat2C) {
        self.diag.set(k, 0.5 * (m.a11 - m.a22));
        self.upper.set(k, m.a12);
        self.lower.set(k, m.a21);
    }

    /// Value at `θ`; real part only, exact for real series.
    pub fn eval(&self, theta: f64) -> Mat2 {
        let a = self.diag.eval(theta).re;
        Mat2::new(a, self.upper.eval(theta).re, self.lower.eval(theta).re, -a)
    }

    /// Real series with coefficients drawn uniformly from the unit disc on
    /// the modes `modes` (and their mirrors), normalized to `norm`.
    pub fn random(modes: &[i64], norm: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Self::zero(0);
        for &k in modes {
            let mut draw = || {
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if k == 0 { Complex64::new(c.re, 0.0) } else { c }
            };
            let m = Mat2C::new(draw(), draw(), draw(), Complex64::new(0.0, 0.0));
            let m = Mat2C::new(m.a11, m.a12, m.a21, -m.a11);
            out.set(k, m);
            if k != 0 {
                out.set(-k, conj(&m));
            }
        }
        let n = out.norm();
        if n > 0.0 { out.scale(norm / n) } else { out }
    }
}

fn conj(m: &Mat2C) -> Mat2C {
    Mat2C::new(m.a11.conj(), m.a12.conj(), m.a21.conj(), m.a22.conj())
}

/// Constant `D = [[1, d], [0, 1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolicConstant {
    pub d: f64,
}

impl ParabolicConstant {
    pub fn matrix(&self) -> Mat2 {
        Mat2::new(1.0, self.d, 0.0, 1.0)
    }
}

/// The non-resonance floor `1/(7 q_next)` on `‖kα‖`.
pub fn resonance_floor(q_next: u64) -> f64 {
    1.0 / (7.0 * q_next as f64)
}

pub fn is_resonant(k: i64, alpha: &Frequency, q_next: u64) -> bool {
    k == 0 || torus_distance(k as f64 * alpha.value()) < resonance_floor(q_next)
}

/// Splits `m` into its non-resonant and resonant modes; `k = 0` is always
/// resonant.
pub fn resonant_split(m: &SlMatSeries, alpha: &Frequency, q_next: u64) -> (SlMatSeries, SlMatSeries) {
    (
        m.filter(|k| !is_resonant(k, alpha, q_next)),
        m.filter(|k| is_resonant(k, alpha, q_next)),
    )
}

/// Smallest admissible divisor `|e^{2πix} − 1|` with `‖x‖` at the floor.
fn divisor_floor(q_next: u64) -> f64 {
    2.0 * (std::f64::consts::PI * resonance_floor(q_next)).sin()
}

fn phase(k: i64, alpha: &Frequency) -> Complex64 {
    Complex64::from_polar(1.0, TAU * k as f64 * alpha.value())
}

/// Divides by `μz − 1` after checking it against the floor.
fn divide(k: i64, num: Complex64, mu_z: Complex64, floor: f64) -> Result<Complex64, KamError> {
    let den = mu_z - 1.0;
    if den.norm() < floor {
        return Err(KamError::Resonant { k, divisor: den.norm(), floor });
    }
    Ok(num / den)
}

/// Solves `Ad_D Y(θ+α) − Y(θ) = M(θ)` with `Ad_D Y = D⁻¹ Y D` for the
/// parabolic constant `D` and a non-resonant right side. Writing
/// `Y = [[a, b], [c, −a]]`, the system is triangular:
///
/// ```text
/// c(θ+α) − c(θ) = M₂₁
/// a(θ+α) − a(θ) = M₁₁ + d c(θ+α)
/// b(θ+α) − b(θ) = M₁₂ − 2d a(θ+α) + d² c(θ+α)
/// ```
pub fn solve_homological_parabolic(
    d: ParabolicConstant,
    alpha: &Frequency,
    m: &SlMatSeries,
    q_next: u64,
) -> Result<SlMatSeries, KamError> {
    let floor = divisor_floor(q_next);
    let d = d.d;
    let mut y = SlMatSeries::zero(m.degree());
    let real = m.is_real();
    for k in m.support() {
        if k == 0 {
            return Err(KamError::Resonant { k, divisor: 0.0, floor });
        }
        if real && k < 0 {
            continue;
        }
        let z = phase(k, alpha);
        let mk = m.coeff(k);
        let c = divide(k, mk.a21, z, floor)?;
        let a = divide(k, mk.a11 + d * z * c, z, floor)?;
        let b = divide(k, mk.a12 - 2.0 * d * z * a + d * d * z * c, z, floor)?;
        let zero = Complex64::new(0.0, 0.0);
        let yk = Mat2C::new(a, b, c, zero - a);
        y.set(k, yk);
        if real {
            y.set(-k, conj(&yk));
        }
    }
    Ok(y)
}

/// Solves `Ad_A Y(θ+α) − Y(θ) = M(θ)` for any constant `A ∈ SL(2, R)`.
///
/// Constants with `|tr A| ≠ 2` are diagonalized over `C`; there the
/// equation decouples into `(λᵢ⁻¹λⱼ e^{2πikα} − 1) Ẑᵢⱼ(k) = N̂ᵢⱼ(k)`.
/// Constants with `|tr A|` within `1e-8` of 2 are rotated to upper
/// triangular form and handed to the parabolic solver.
pub fn solve_homological(
    a: &Mat2,
    alpha: &Frequency,
    m: &SlMatSeries,
    q_next: u64,
) -> Result<SlMatSeries, KamError> {
    let det = a.det();
    if (det - 1.0).abs() > 1e-9 {
        return Err(KamError::NotUnimodular { det });
    }
    let tr = a.trace();
    if (tr.abs() - 2.0).abs() <= 1e-8 {
        return solve_near_parabolic(a, alpha, m, q_next);
    }
    let floor = divisor_floor(q_next);
    let (v, lam) = diagonalize(a);
    let v_inv = v.inverse();
    let mu = [[1.0.into(), lam[1] / lam[0]], [lam[0] / lam[1], 1.0.into()]];
    let real = m.is_real();
    let mut y = SlMatSeries::zero(m.degree());
    for k in m.support() {
        if k == 0 {
            return Err(KamError::Resonant { k, divisor: 0.0, floor });
        }
        if real && k < 0 {
            continue;
        }
        let z = phase(k, alpha);
        let n = v_inv * m.coeff(k) * v;
        let nz = [[n.a11, n.a12], [n.a21, n.a22]];
        let mut zz = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                zz[i][j] = divide(k, nz[i][j], mu[i][j] * z, floor)?;
            }
        }
        let yk = v * Mat2C::new(zz[0][0], zz[0][1], zz[1][0], zz[1][1]) * v_inv;
        y.set(k, yk);
        if real {
            y.set(-k, conj(&yk));
        }
    }
    Ok(y)
}

/// Eigenvectors (as columns) and eigenvalues of a non-parabolic `A`.
fn diagonalize(a: &Mat2) -> (Mat2C, [Complex64; 2]) {
    let tr = a.trace();
    let disc = Complex64::new(tr * tr - 4.0, 0.0).sqrt();
    let lam = [(tr + disc) / 2.0, (tr - disc) / 2.0];
    let col = |l: Complex64| {
        if a.a12.abs() >= a.a21.abs() {
            (Complex64::new(a.a12, 0.0), l - a.a11)
        } else {
            (l - a.a22, Complex64::new(a.a21, 0.0))
        }
    };
    let (x0, y0) = col(lam[0]);
    let (x1, y1) = col(lam[1]);
    (Mat2C::new(x0, x1, y0, y1), lam)
}

/// `A = ±P [[1, d], [0, 1]] P⁻¹` with `P` a rotation; `Ad` ignores the sign.
fn solve_near_parabolic(
    a: &Mat2,
    alpha: &Frequency,
    m: &SlMatSeries,
    q_next: u64,
) -> Result<SlMatSeries, KamError> {
    let s = a.trace().signum();
    let b = a.scale(s);
    // Fixed direction of `b`: kernel of `b − I`.
    let (r1, r2) = ([b.a11 - 1.0, b.a12], [b.a21, b.a22 - 1.0]);
    let row = if r1[0].hypot(r1[1]) >= r2[0].hypot(r2[1]) { r1 } else { r2 };
    let (vx, vy) = if row[0] == 0.0 && row[1] == 0.0 {
        (1.0, 0.0)
    } else {
        let n = row[0].hypot(row[1]);
        (-row[1] / n, row[0] / n)
    };
    let p = Mat2::new(vx, -vy, vy, vx);
    let pt = p.transpose();
    let d = (pt * b * p).a12;
    let conj_series = |x: &SlMatSeries, l: &Mat2, r: &Mat2| {
        let mut out = SlMatSeries::zero(x.degree());
        for k in x.support() {
            out.set(k, l.to_complex() * x.coeff(k) * r.to_complex());
        }
        out
    };
    let n = conj_series(m, &pt, &p);
    let z = solve_homological_parabolic(ParabolicConstant { d }, alpha, &n, q_next)?;
    Ok(conj_series(&z, &p, &pt))
}

/// `‖Ad_A Y(·+α) − Y − M‖`, computed mode by mode.
pub fn homological_residual(a: &Mat2, alpha: &Frequency, y: &SlMatSeries, m: &SlMatSeries) -> f64 {
    let ac = a.to_complex();
    let ai = a.inverse().to_complex();
    let l = y.degree().max(m.degree()) as i64;
    let mut r = SlMatSeries::zero(l as usize);
    for k in -l..=l {
        let yk = y.coeff(k);
        let lhs = ai * yk * ac;
        let z = phase(k, alpha);
        let d = Mat2C::new(
            lhs.a11 * z - yk.a11 - m.coeff(k).a11,
            lhs.a12 * z - yk.a12 - m.coeff(k).a12,
            lhs.a21 * z - yk.a21 - m.coeff(k).a21,
            lhs.a22 * z - yk.a22 - m.coeff(k).a22,
        );
        r.set(k, d);
    }
    r.norm()
}

/// `exp` of a traceless matrix: `cosh(s) I + sinh(s)/s X` with `s² = −det X`
/// (trigonometric when `s²` is negative).
pub fn sl2_exp(x: &Mat2) -> Mat2 {
    let s2 = -x.det();
    let (c, sh) = if s2.abs() < 1e-8 {
        (1.0 + s2 / 2.0 + s2 * s2 / 24.0, 1.0 + s2 / 6.0 + s2 * s2 / 120.0)
    } else if s2 > 0.0 {
        let s = s2.sqrt();
        (s.cosh(), s.sinh() / s)
    } else {
        let w = (-s2).sqrt();
        (w.cos(), w.sin() / w)
    };
    Mat2::IDENTITY.scale(c).add(&x.scale(sh))
}

/// Outcome of one Newton step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KamStepResult {
    /// The conjugation `Y`.
    pub conjugation: SlMatSeries,
    /// Non-resonant part of the perturbation removed by the step.
    pub removed: SlMatSeries,
    /// Resonant part kept in the new perturbation.
    pub kept: SlMatSeries,
    pub resonant_modes: Vec<i64>,
    pub input_norm: f64,
    /// Sup over the sampled phases of
    /// `‖e^{−Y(θ+α)} A e^{F(θ)} e^{Y(θ)} − A e^{F_re(θ)}‖`.
    pub remainder_norm: f64,
    /// `remainder / input²`.
    pub quadratic_constant: f64,
    /// `‖Y‖ / ‖F_nre‖`.
    pub solution_ratio: f64,
    pub homological_residual: f64,
}

/// Bound on `‖f‖ q_next³` accepted by [`newton_step`].
pub const SMALLNESS_LIMIT: f64 = 1.0;

/// One Newton step for the cocycle `A e^{F(θ)}`: removes the non-resonant
/// part of `F` by the conjugation `e^{Y}` and measures what is left.
pub fn newton_step(
    a: &Mat2,
    f: &SlMatSeries,
    alpha: &Frequency,
    q_next: u64,
) -> Result<KamStepResult, KamError> {
    let input_norm = f.norm();
    let gate = input_norm * (q_next as f64).powi(3);
    if gate >= SMALLNESS_LIMIT {
        return Err(KamError::Smallness { value: gate, limit: SMALLNESS_LIMIT });
    }
    let (nonres, res) = resonant_split(f, alpha, q_next);
    let y = solve_homological(a, alpha, &nonres, q_next)?;
    let homological_residual = homological_residual(a, alpha, &y, &nonres);

    let samples = 64 + 8 * f.degree().max(y.degree());
    let av = alpha.value();
    let remainder_norm = (0..samples)
        .map(|j| {
            let t = j as f64 / samples as f64;
            let lhs = sl2_exp(&y.eval(t + av).scale(-1.0)) * *a * sl2_exp(&f.eval(t)) * sl2_exp(&y.eval(t));
            let rhs = *a * sl2_exp(&res.eval(t));
            lhs.sub_norm(&rhs)
        })
        .fold(0.0, f64::max);

    let removed_norm = nonres.norm();
    Ok(KamStepResult {
        resonant_modes: res.support(),
        input_norm,
        remainder_norm,
        quadratic_constant: if input_norm > 0.0 { remainder_norm / (input_norm * input_norm) } else { 0.0 },
        solution_ratio: if removed_norm > 0.0 { y.norm() / removed_norm } else { 0.0 },
        homological_residual,
        conjugation: y,
        removed: nonres,
        kept: res,
    })
}

/// Least-squares slope of `log remainder` against `log norm`.
pub fn fit_contraction_exponent(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionRow {
    pub norm: f64,
    pub remainder: f64,
    pub quadratic_constant: f64,
    pub solution_ratio: f64,
    pub homological_residual: f64,
}

/// Newton steps on `A e^{s F₀}` for a fixed shape `F₀` at each norm in
/// `norms`, with the fitted contraction exponent.
pub fn contraction_sweep(
    a: &Mat2,
    shape: &SlMatSeries,
    alpha: &Frequency,
    q_next: u64,
    norms: &[f64],
) -> Result<(Vec<ContractionRow>, f64), KamError> {
    let base = shape.norm();
    if base == 0.0 {
        return Err(KamError::Series("zero perturbation shape".into()));
    }
    let rows = norms
        .iter()
        .map(|&n| {
            let r = newton_step(a, &shape.scale(n / base), alpha, q_next)?;
            Ok(ContractionRow {
                norm: r.input_norm,
                remainder: r.remainder_norm,
                quadratic_constant: r.quadratic_constant,
                solution_ratio: r.solution_ratio,
                homological_residual: r.homological_residual,
            })
        })
        .collect::<Result<Vec<_>, KamError>>()?;
    let p = fit_contraction_exponent(&rows.iter().map(|r| (r.norm, r.remainder)).collect::<Vec<_>>());
    Ok((rows, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Frequency {
        Frequency::golden()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn truncation_split_is_exact() {
        let s = SlMatSeries::random(&[0, 1, 2, 3, 5], 1.0, 3).diag;
        assert_eq!(s.truncate_low(0), FourierSeries::zero(s.degree()));
        assert_eq!(s.truncate_high(0), s);
        let m = FourierSeries::mode(3, c(0.5, 0.1), false);
        assert_eq!(m.truncate_low(4), m);
        for l in 0..7 {
            assert_eq!(s.truncate_low(l).add(&s.truncate_high(l)), s);
        }
    }

    #[test]
    fn json_triples() {
        let s = FourierSeries::mode(1, c(0.25, -0.5), true);
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, "[[-1,0.25,0.5],[0,0.0,0.0],[1,0.25,-0.5]]");
        let back: FourierSeries = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn resonance_classification() {
        let a = golden();
        assert!(is_resonant(0, &a, 8));
        assert!(!is_resonant(1, &a, 8));
        // ‖34α‖ ≈ 0.013 < 1/56.
        assert!(is_resonant(34, &a, 8));
        assert!(!is_resonant(21, &a, 8));
        let m = SlMatSeries::random(&[0, 1, 34], 1.0, 0);
        let (n, r) = resonant_split(&m, &a, 8);
        assert_eq!(n.support(), vec![-1, 1]);
        assert_eq!(r.support(), vec![-34, 0, 34]);
    }

    #[test]
    fn single_mode_forced_formula() {
        let a = golden();
        let mut m = SlMatSeries::zero(2);
        m.lower.set(2, c(0.3, 0.2));
        m.diag.set(2, c(-0.1, 0.4));
        m.upper.set(2, c(0.7, 0.0));
        let y = solve_homological_parabolic(ParabolicConstant { d: 0.0 }, &a, &m, 8).unwrap();
        let den = phase(2, &a) - 1.0;
        assert!((y.lower.coeff(2) - c(0.3, 0.2) / den).norm() < 1e-15);
        assert!((y.upper.coeff(2) - c(0.7, 0.0) / den).norm() < 1e-15);
        assert!(homological_residual(&Mat2::IDENTITY, &a, &y, &m) < 1e-15);
    }

    #[test]
    fn parabolic_residual_is_rounding_level() {
        let a = golden();
        let m = SlMatSeries::random(&[3], 1.0, 1);
        let d = ParabolicConstant { d: 0.1 };
        let y = solve_homological_parabolic(d, &a, &m, 8).unwrap();
        assert!(homological_residual(&d.matrix(), &a, &y, &m) < 1e-12 * m.norm());
        assert!(y.is_real());
    }

    #[test]
    fn solution_size_bound_shape() {
        let a = golden();
        let modes: Vec<i64> = (1..=25).collect();
        let m = SlMatSeries::random(&modes, 1.0, 7);
        assert_eq!(m.support().len(), 50);
        let d = ParabolicConstant { d: 0.3 };
        let y = solve_homological_parabolic(d, &a, &m, 8).unwrap();
        let ratio = y.norm() / m.norm();
        assert!(ratio <= 10.0 * 8f64.powi(3), "{ratio}");
        assert!(homological_residual(&d.matrix(), &a, &y, &m) < 1e-12 * m.norm());
    }

    #[test]
    fn resonant_input_is_rejected() {
        let a = golden();
        let m = SlMatSeries::random(&[34], 1.0, 0);
        assert!(matches!(
            solve_homological_parabolic(ParabolicConstant { d: 0.0 }, &a, &m, 8),
            Err(KamError::Resonant { .. })
        ));
        let m = SlMatSeries::random(&[0], 1.0, 0);
        assert!(solve_homological(&Mat2::rotation(0.1), &a, &m, 8).is_err());
    }

    #[test]
    fn elliptic_solve() {
        let a = golden();
        let r = Mat2::rotation(0.1);
        let m = SlMatSeries::random(&[1, 2, 3], 1.0, 5);
        let y = solve_homological(&r, &a, &m, 8).unwrap();
        assert!(y.is_real());
        assert!(homological_residual(&r, &a, &y, &m) < 1e-12 * m.norm());
        // Hyperbolic constants take the same path.
        let h = Mat2::new(2.0, 1.0, 1.0, 1.0);
        let y = solve_homological(&h, &a, &m, 8).unwrap();
        assert!(homological_residual(&h, &a, &y, &m) < 1e-12 * m.norm());
    }

    #[test]
    fn general_parabolic_constants() {
        let a = golden();
        let m = SlMatSeries::random(&[1, 2], 1.0, 9);
        // A conjugate of [[1, 0.4], [0, 1]] and the negative of one.
        let p = Mat2::rotation(0.13);
        let base = p * Mat2::new(1.0, 0.4, 0.0, 1.0) * p.transpose();
        for cst in [base, base.scale(-1.0), Mat2::IDENTITY] {
            let y = solve_homological(&cst, &a, &m, 8).unwrap();
            assert!(homological_residual(&cst, &a, &y, &m) < 1e-12 * m.norm());
        }
    }

    #[test]
    fn exponential_closed_form() {
        let x = Mat2::new(0.0, 1.0, 0.0, 0.0);
        assert_eq!(sl2_exp(&x), Mat2::new(1.0, 1.0, 0.0, 1.0));
        let w = 0.7;
        let r = sl2_exp(&Mat2::new(0.0, -w, w, 0.0));
        assert!(r.sub_norm(&Mat2::rotation(w / TAU)) < 1e-15);
        let h = sl2_exp(&Mat2::new(0.5, 0.0, 0.0, -0.5));
        assert!((h.a11 - 0.5f64.exp()).abs() < 1e-15 && (h.a22 - (-0.5f64).exp()).abs() < 1e-15);
        assert!((sl2_exp(&Mat2::new(0.3, 1.2, -0.4, -0.3)).det() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_perturbation() {
        let r = newton_step(&Mat2::new(1.0, 0.2, 0.0, 1.0), &SlMatSeries::zero(3), &golden(), 8).unwrap();
        assert_eq!(r.remainder_norm, 0.0);
        assert_eq!(r.conjugation.norm(), 0.0);
    }

    #[test]
    fn parabolic_single_mode_step() {
        let a = Mat2::new(1.0, 0.2, 0.0, 1.0);
        let f = SlMatSeries::random(&[1], 1e-4, 2);
        let r = newton_step(&a, &f, &golden(), 8).unwrap();
        assert!(r.remainder_norm <= 1e-6, "{}", r.remainder_norm);
        assert!(r.conjugation.is_real());
    }

    #[test]
    fn smallness_gate() {
        let f = SlMatSeries::random(&[1], 2e-3, 2);
        assert!(matches!(
            newton_step(&Mat2::IDENTITY, &f, &golden(), 8),
            Err(KamError::Smallness { .. })
        ));
    }

    #[test]
    fn quadratic_contraction() {
        let shape = SlMatSeries::random(&[0, 1, 2, 3], 1.0, 11);
        for a in [Mat2::new(1.0, 0.3, 0.0, 1.0), Mat2::rotation(0.1)] {
            let (rows, p) = contraction_sweep(&a, &shape, &golden(), 8, &[1e-3, 1e-4, 1e-5]).unwrap();
            assert!(p >= 1.8, "{p}: {rows:?}");
        }
    }

    #[test]
    fn exponent_fit() {
        let pts: Vec<(f64, f64)> = [1e-3, 1e-4, 1e-5].iter().map(|&x| (x, 3.0 * x * x)).collect();
        assert!((fit_contraction_exponent(&pts) - 2.0).abs() < 1e-12);
    }
}
