//! Continued fractions, best approximants and small-divisor bookkeeping.
//!
//! A [`Frequency`] is a number `α ∈ (0, 1)` together with its partial
//! quotients `α = [0; a_1, a_2, ...]` and convergents `p_n / q_n`, indexed from
//! `n = 0` (`p_0 / q_0 = 0 / 1`). Numerators and denominators are `i64`; an
//! expansion that would overflow stops early and sets [`Frequency::truncated`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArithmeticError {
    #[error("value {0} is outside the open interval (0, 1)")]
    Domain(f64),
    #[error("at least {needed} convergents are required, found {found}")]
    InsufficientData { needed: usize, found: usize },
    #[error("convergent index {index} out of range (last usable index is {last})")]
    Index { index: usize, last: usize },
    #[error("partial quotients must be positive integers")]
    BadQuotient,
    #[error("rational {p}/{q} is not a reduced fraction in (0, 1)")]
    BadRational { p: i64, q: i64 },
}

/// A convergent `p / q` together with its position in the expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Approximant {
    pub p: i64,
    pub q: i64,
    pub index: usize,
}

/// Frequency of the base rotation with its continued-fraction data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FrequencyWire", into = "FrequencyWire")]
pub struct Frequency {
    value: f64,
    quotients: Vec<u64>,
    convergents: Vec<(i64, i64)>,
    exact: bool,
    truncated: bool,
}

impl Frequency {
    /// Expands a double by the Euclidean algorithm.
    ///
    /// The expansion is faithful to the double, not to whatever real number
    /// the double was meant to approximate. It stops when the current
    /// convergent reproduces `x` to machine precision, when the remainder
    /// vanishes (exact rational input), or when the next denominator would
    /// overflow.
    pub fn expand(x: f64, max_terms: usize) -> Result<Self, ArithmeticError> {
        if !(x > 0.0 && x < 1.0) {
            return Err(ArithmeticError::Domain(x));
        }
        let max_terms = max_terms.max(1);
        let mut quotients = Vec::new();
        let mut convergents = vec![(0i64, 1i64)];
        let (mut p_prev, mut q_prev) = (1i64, 0i64);
        let (mut p, mut q) = (0i64, 1i64);
        let mut rem = x;
        let mut exact = false;
        let mut truncated = false;

        while quotients.len() < max_terms {
            let inv = 1.0 / rem;
            let a_f = inv.floor();
            if !a_f.is_finite() || a_f >= i64::MAX as f64 {
                truncated = true;
                break;
            }
            let a = a_f as i64;
            let next = a
                .checked_mul(p)
                .and_then(|v| v.checked_add(p_prev))
                .zip(a.checked_mul(q).and_then(|v| v.checked_add(q_prev)));
            let Some((p_next, q_next)) = next else {
                truncated = true;
                break;
            };
            quotients.push(a as u64);
            convergents.push((p_next, q_next));
            (p_prev, q_prev, p, q) = (p, q, p_next, q_next);

            rem = inv - a_f;
            if rem == 0.0 || (x * q as f64 - p as f64).abs() <= f64::EPSILON * q as f64 * x {
                exact = p as f64 / q as f64 == x;
                break;
            }
        }
        Ok(Self {
            value: x,
            quotients,
            convergents,
            exact,
            truncated,
        })
    }

    /// Builds the frequency `[0; a_1, ..., a_m]` from its partial quotients.
    ///
    /// The value is the last convergent. For archetypes such as the golden
    /// mean this avoids the noise of expanding a rounded double; the presets
    /// then replace the value by the irrational it stands for.
    pub fn from_quotients(quotients: &[u64]) -> Result<Self, ArithmeticError> {
        if quotients.is_empty() || quotients.contains(&0) {
            return Err(ArithmeticError::BadQuotient);
        }
        if quotients.len() == 1 && quotients[0] == 1 {
            // [0; 1] = 1 is not in (0, 1).
            return Err(ArithmeticError::Domain(1.0));
        }
        let mut convergents = vec![(0i64, 1i64)];
        let (mut p_prev, mut q_prev) = (1i64, 0i64);
        let (mut p, mut q) = (0i64, 1i64);
        let mut kept = Vec::with_capacity(quotients.len());
        let mut truncated = false;
        for &a in quotients {
            let a = a as i64;
            let next = a
                .checked_mul(p)
                .and_then(|v| v.checked_add(p_prev))
                .zip(a.checked_mul(q).and_then(|v| v.checked_add(q_prev)));
            let Some((p_next, q_next)) = next else {
                truncated = true;
                break;
            };
            kept.push(a as u64);
            convergents.push((p_next, q_next));
            (p_prev, q_prev, p, q) = (p, q, p_next, q_next);
        }
        // Backward evaluation is more accurate than p / q for long expansions.
        let mut value = 0.0f64;
        for &a in kept.iter().rev() {
            value = 1.0 / (a as f64 + value);
        }
        Ok(Self {
            value,
            quotients: kept,
            exact: !truncated && value == p as f64 / q as f64,
            convergents,
            truncated,
        })
    }

    /// The exact rational `p / q`, expanded with integer arithmetic.
    pub fn rational(p: i64, q: i64) -> Result<Self, ArithmeticError> {
        if q <= 1 || p <= 0 || p >= q || gcd(p, q) != 1 {
            return Err(ArithmeticError::BadRational { p, q });
        }
        let mut quotients = Vec::new();
        let (mut num, mut den) = (q, p);
        while den != 0 {
            quotients.push((num / den) as u64);
            (num, den) = (den, num % den);
        }
        let mut f = Self::from_quotients(&quotients)?;
        f.value = p as f64 / q as f64;
        f.exact = true;
        Ok(f)
    }

    /// `(√5 − 1) / 2 = [0; 1, 1, 1, ...]`, cut after 30 quotients.
    pub fn golden() -> Self {
        let mut f = Self::from_quotients(&[1; 30]).expect("valid quotients");
        f.value = (5f64.sqrt() - 1.0) / 2.0;
        f.exact = false;
        f
    }

    /// `√2 − 1 = [0; 2, 2, 2, ...]`, cut after 16 quotients.
    pub fn silver() -> Self {
        let mut f = Self::from_quotients(&[2; 16]).expect("valid quotients");
        f.value = 2f64.sqrt() - 1.0;
        f.exact = false;
        f
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn quotients(&self) -> &[u64] {
        &self.quotients
    }

    /// Convergents `(p_n, q_n)` starting with `(0, 1)`.
    pub fn convergents(&self) -> &[(i64, i64)] {
        &self.convergents
    }

    pub fn approximant(&self, index: usize) -> Option<Approximant> {
        self.convergents
            .get(index)
            .map(|&(p, q)| Approximant { p, q, index })
    }

    /// Denominators `q_n`.
    pub fn denominators(&self) -> impl Iterator<Item = i64> + '_ {
        self.convergents.iter().map(|&(_, q)| q)
    }

    /// True when the value is exactly the last convergent, i.e. the frequency
    /// is a rational and downstream code should take the periodic path.
    pub fn is_rational(&self) -> bool {
        self.exact
    }

    /// True when the expansion stopped to avoid integer overflow.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// The last convergent, or `None` when only `0/1` is stored.
    pub fn last_convergent(&self) -> Option<(i64, i64)> {
        (self.convergents.len() > 1).then(|| *self.convergents.last().unwrap())
    }

    /// Index of the first convergent whose denominator is at least `q`.
    pub fn convergent_at_least(&self, q: i64) -> Option<usize> {
        self.convergents.iter().position(|&(_, qn)| qn >= q)
    }
}

#[derive(Serialize, Deserialize)]
struct FrequencyWire {
    value: f64,
    quotients: Vec<u64>,
    convergents: Vec<[i64; 2]>,
}

impl From<Frequency> for FrequencyWire {
    fn from(f: Frequency) -> Self {
        Self {
            value: f.value,
            quotients: f.quotients,
            convergents: f.convergents.iter().map(|&(p, q)| [p, q]).collect(),
        }
    }
}

impl TryFrom<FrequencyWire> for Frequency {
    type Error = ArithmeticError;

    fn try_from(w: FrequencyWire) -> Result<Self, Self::Error> {
        if !(w.value > 0.0 && w.value < 1.0) {
            return Err(ArithmeticError::Domain(w.value));
        }
        let rebuilt = Frequency::from_quotients(&w.quotients)?;
        let given: Vec<(i64, i64)> = w.convergents.iter().map(|c| (c[0], c[1])).collect();
        if given != rebuilt.convergents {
            return Err(ArithmeticError::BadQuotient);
        }
        let exact = rebuilt
            .last_convergent()
            .is_some_and(|(p, q)| p as f64 / q as f64 == w.value);
        Ok(Self {
            value: w.value,
            exact,
            ..rebuilt
        })
    }
}

/// Distance from `x` to the nearest integer, `‖x‖_{R/Z} ∈ [0, 1/2]`.
pub fn torus_distance(x: f64) -> f64 {
    (x - x.round()).abs()
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a as i64
}

/// Finite-data proxy for `β(α) = limsup ln q_{n+1} / q_n`: the maximum of
/// `ln q_{n+1} / q_n` over the stored convergents. It is an estimate, not the
/// limit.
pub fn beta_estimate(f: &Frequency) -> Result<f64, ArithmeticError> {
    let q: Vec<i64> = f.denominators().collect();
    if q.len() < 3 {
        return Err(ArithmeticError::InsufficientData {
            needed: 3,
            found: q.len(),
        });
    }
    Ok(q.windows(2)
        .map(|w| (w[1] as f64).ln() / w[0] as f64)
        .fold(0.0, f64::max))
}

/// How a single `k` relates to the small-divisor bound `‖kα‖ ≥ 1/(7 q_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivisorStatus {
    /// Inside the bound's range and satisfying it.
    Holds,
    /// Inside the range but below the bound.
    Violated,
    /// `k` is a multiple of `q_n`; the bound does not apply.
    ExemptMultiple,
    /// `|k| > q_{n+1} / 6`; the bound does not apply.
    OutOfRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivisorEntry {
    pub k: i64,
    pub distance: f64,
    pub status: DivisorStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivisorProfile {
    pub index: usize,
    pub q_n: i64,
    pub q_next: i64,
    pub bound: f64,
    pub entries: Vec<DivisorEntry>,
}

impl DivisorProfile {
    pub fn violations(&self) -> impl Iterator<Item = &DivisorEntry> {
        self.entries
            .iter()
            .filter(|e| e.status == DivisorStatus::Violated)
    }
}

/// Torus distances `‖kα‖` for `1 ≤ k ≤ k_max`, classified against the bound
/// `‖kα‖ ≥ 1/(7 q_n)` that holds for `|k| ≤ q_{n+1}/6`, `q_n ∤ k`.
pub fn divisor_profile(
    f: &Frequency,
    n: usize,
    k_max: i64,
) -> Result<DivisorProfile, ArithmeticError> {
    let conv = f.convergents();
    if n == 0 || n + 1 >= conv.len() {
        return Err(ArithmeticError::Index {
            index: n,
            last: conv.len().saturating_sub(2),
        });
    }
    let q_n = conv[n].1;
    let q_next = conv[n + 1].1;
    let bound = 1.0 / (7.0 * q_n as f64);
    let alpha = f.value();
    let entries = (1..=k_max.max(0))
        .map(|k| {
            let distance = torus_distance(k as f64 * alpha);
            let status = if k % q_n == 0 {
                DivisorStatus::ExemptMultiple
            } else if 6 * k > q_next {
                DivisorStatus::OutOfRange
            } else if distance >= bound {
                DivisorStatus::Holds
            } else {
                DivisorStatus::Violated
            };
            DivisorEntry {
                k,
                distance,
                status,
            }
        })
        .collect();
    Ok(DivisorProfile {
        index: n,
        q_n,
        q_next,
        bound,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Euclidean algorithm on exact integers, used as an oracle.
    fn euclid(mut num: i64, mut den: i64) -> Vec<u64> {
        let mut out = Vec::new();
        while den != 0 {
            out.push((num / den) as u64);
            (num, den) = (den, num % den);
        }
        out
    }

    #[test]
    fn golden_mean_expands_to_ones() {
        let f = Frequency::expand((5f64.sqrt() - 1.0) / 2.0, 6).unwrap();
        assert_eq!(f.quotients(), &[1, 1, 1, 1, 1, 1]);
        let q: Vec<i64> = f.denominators().collect();
        assert_eq!(q, vec![1, 1, 2, 3, 5, 8, 13]);
    }

    #[test]
    fn pi_convergents() {
        let x = std::f64::consts::PI - 3.0;
        let f = Frequency::expand(x, 4).unwrap();
        // 1/(π-3) = 7.0625..., then 15, 1, 292
        assert_eq!(f.quotients(), &[7, 15, 1, 292]);
        let pi: Vec<(i64, i64)> = f.convergents()[1..]
            .iter()
            .map(|&(p, q)| (p + 3 * q, q))
            .collect();
        assert_eq!(pi, vec![(22, 7), (333, 106), (355, 113), (103993, 33102)]);
        // Oracle: Euclid on the exact rational 355/113 - 3 = 16/113.
        assert_eq!(euclid(113, 16), vec![7, 16]);
        assert_eq!(euclid(113, 16)[0], f.quotients()[0]);
    }

    #[test]
    fn rational_half_terminates() {
        let f = Frequency::expand(0.5, 10).unwrap();
        assert_eq!(f.quotients(), &[2]);
        assert!(f.is_rational());
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(Frequency::expand(0.0, 3), Err(ArithmeticError::Domain(_))));
        assert!(matches!(Frequency::expand(1.2, 3), Err(ArithmeticError::Domain(_))));
        assert!(matches!(Frequency::expand(f64::NAN, 3), Err(ArithmeticError::Domain(_))));
        assert!(Frequency::rational(2, 4).is_err());
        assert!(Frequency::from_quotients(&[0, 1]).is_err());
    }

    #[test]
    fn rational_constructor_matches_euclid() {
        let f = Frequency::rational(13, 21).unwrap();
        assert_eq!(f.quotients(), euclid(21, 13).as_slice());
        assert_eq!(f.last_convergent(), Some((13, 21)));
        assert!(f.is_rational());
    }

    #[test]
    fn beta_of_golden_mean() {
        let f = Frequency::from_quotients(&[1; 20]).unwrap();
        let b = beta_estimate(&f).unwrap();
        assert!(b <= 2f64.ln() + 1e-15);
        let q: Vec<i64> = f.denominators().collect();
        let terms: Vec<f64> = q.windows(2).map(|w| (w[1] as f64).ln() / w[0] as f64).collect();
        assert!(terms[terms.len() - 5..].iter().all(|&t| t < 0.05));
        assert!(terms[2..].windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn beta_of_synthetic_expansion() {
        let f = Frequency::from_quotients(&[1, 10, 1, 10_000]).unwrap();
        // q: 1, 1, 11, 12, 120011 by hand.
        let q: Vec<i64> = f.denominators().collect();
        assert_eq!(q, vec![1, 1, 11, 12, 120_011]);
        let expected = [0.0, 11f64.ln(), 12f64.ln() / 11.0, 120_011f64.ln() / 12.0]
            .into_iter()
            .fold(0.0, f64::max);
        assert_eq!(beta_estimate(&f).unwrap(), expected);
    }

    #[test]
    fn beta_needs_three_convergents() {
        let f = Frequency::from_quotients(&[3]).unwrap();
        assert_eq!(f.convergents().len(), 2);
        assert!(matches!(
            beta_estimate(&f),
            Err(ArithmeticError::InsufficientData { found: 2, .. })
        ));
    }

    #[test]
    fn torus_distance_examples() {
        assert!((torus_distance(0.618034) - 0.381966).abs() < 1e-12);
        assert_eq!(torus_distance(2.25), 0.25);
        assert_eq!(torus_distance(0.5), 0.5);
        assert_eq!(torus_distance(-0.1), torus_distance(0.1));
    }

    #[test]
    fn divisor_profile_golden() {
        let f = Frequency::golden();
        // q_5 = 8, q_6 = 13.
        let prof = divisor_profile(&f, 5, 1).unwrap();
        assert_eq!((prof.q_n, prof.q_next), (8, 13));
        let e = prof.entries[0];
        assert!((e.distance - 0.381966).abs() < 1e-6);
        assert!(e.distance >= 1.0 / 56.0);
        assert_eq!(e.status, DivisorStatus::Holds);
    }

    #[test]
    fn multiples_of_q_are_exempt() {
        let f = Frequency::silver();
        let prof = divisor_profile(&f, 3, 30).unwrap();
        let q = prof.q_n;
        for e in &prof.entries {
            if e.k % q == 0 {
                assert_eq!(e.status, DivisorStatus::ExemptMultiple);
            }
        }
        assert!(prof.entries.iter().any(|e| e.status == DivisorStatus::ExemptMultiple));
    }

    #[test]
    fn divisor_profile_index_error() {
        let f = Frequency::from_quotients(&[1; 5]).unwrap();
        assert!(matches!(divisor_profile(&f, 5, 3), Err(ArithmeticError::Index { .. })));
        assert!(matches!(divisor_profile(&f, 0, 3), Err(ArithmeticError::Index { .. })));
    }

    #[test]
    fn json_schema() {
        let f = Frequency::from_quotients(&[1, 2]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"value":0.6666666666666666,"quotients":[1,2],"convergents":[[0,1],[1,1],[2,3]]}"#);
        let back: Frequency = serde_json::from_str(&s).unwrap();
        assert_eq!(back.quotients(), f.quotients());
        let bad = r#"{"value":0.6,"quotients":[1,2],"convergents":[[0,1],[1,2]]}"#;
        assert!(serde_json::from_str::<Frequency>(bad).is_err());
    }
}
