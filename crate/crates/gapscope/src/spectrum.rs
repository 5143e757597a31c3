//! Operator-side computations: Dirichlet truncations, Sturm counts, the
//! integrated density of states, spectrum scans and periodic approximants.

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::arithmetic::{gcd, Frequency};
use crate::cocycle::{phase_grid, Hyperbolicity, SchrodingerUh, UhConfig, UhVerdict};
use crate::par;

#[derive(Debug, thiserror::Error)]
pub enum SpectrumError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("io failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Half-width of the interval `[−2−2λ, 2+2λ]` that contains the spectrum.
pub fn norm_bound(lambda: f64) -> f64 {
    2.0 + 2.0 * lambda.abs()
}

/// Dirichlet section of the operator on sites `0..n`; off-diagonals are 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalOperator {
    pub diagonal: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    /// Row-sum bound on the operator norm.
    pub fn norm_bound(&self) -> f64 {
        2.0 + self.diagonal.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diagonal[i]
            } else if i.abs_diff(j) == 1 {
                1.0
            } else {
                0.0
            }
        })
    }
}

/// Diagonal `v_j = 2λ cos(2π(jα + θ))`, `j = 0..n`.
pub fn truncated_tridiagonal(lambda: f64, alpha: &Frequency, theta: f64, n: usize) -> TridiagonalOperator {
    let a = alpha.value();
    TridiagonalOperator {
        diagonal: (0..n.max(1))
            .map(|j| 2.0 * lambda * (TAU * (j as f64 * a + theta)).cos())
            .collect(),
    }
}

/// Number of eigenvalues below `energy`: the count of negative pivots in
/// `d_1 = v_1 − E`, `d_j = v_j − E − 1/d_{j−1}`.
pub fn sturm_count(t: &TridiagonalOperator, energy: f64) -> usize {
    let floor = -f64::EPSILON * (t.norm_bound() + energy.abs());
    sturm_count_diag(&t.diagonal, energy, floor)
}

#[inline]
fn sturm_count_diag(diagonal: &[f64], energy: f64, zero_pivot: f64) -> usize {
    let mut count = 0usize;
    let mut d = 1.0f64;
    let mut first = true;
    for &v in diagonal {
        d = if first { v - energy } else { v - energy - 1.0 / d };
        first = false;
        if d == 0.0 {
            d = zero_pivot;
        }
        count += (d < 0.0) as usize;
    }
    count
}

/// Phase-averaged eigenvalue counting on Dirichlet sections, with the
/// diagonals precomputed so that repeated evaluations only run the Sturm
/// recursion.
#[derive(Debug, Clone)]
pub struct IdsEstimator {
    lambda: f64,
    n: usize,
    diagonals: Vec<Vec<f64>>,
}

impl IdsEstimator {
    pub fn new(lambda: f64, alpha: &Frequency, n: usize, n_phases: usize, seed: u64) -> Self {
        let diagonals = phase_grid(n_phases, seed)
            .into_iter()
            .map(|theta| truncated_tridiagonal(lambda, alpha, theta, n).diagonal)
            .collect();
        Self {
            lambda,
            n: n.max(1),
            diagonals,
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// `N(E)` estimate in `[0, 1]`; non-decreasing in `E`.
    pub fn at(&self, energy: f64) -> f64 {
        let floor = -f64::EPSILON * (norm_bound(self.lambda) + energy.abs());
        let total: usize = self
            .diagonals
            .iter()
            .map(|d| sturm_count_diag(d, energy, floor))
            .sum();
        total as f64 / (self.n * self.diagonals.len()) as f64
    }

    pub fn at_many(&self, energies: &[f64]) -> Vec<f64> {
        par::map(energies, |&e| self.at(e))
    }
}

/// Integrated density of states `N(E)` averaged over `n_phases`
/// equidistributed phases of `n`-site sections.
pub fn ids(lambda: f64, alpha: &Frequency, energy: f64, n: usize, n_phases: usize, seed: u64) -> f64 {
    IdsEstimator::new(lambda, alpha, n, n_phases, seed).at(energy)
}

/// Spectrum membership by Johnson's criterion: `E ∈ Σ` iff the cocycle is
/// not uniformly hyperbolic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub member: bool,
    pub indeterminate: bool,
    pub margin: f64,
}

impl From<UhVerdict> for Membership {
    fn from(v: UhVerdict) -> Self {
        Self {
            member: v.status != Hyperbolicity::Hyperbolic,
            indeterminate: v.status == Hyperbolicity::Indeterminate,
            margin: v.margin,
        }
    }
}

pub fn spectrum_member(lambda: f64, alpha: &Frequency, energy: f64, cfg: &UhConfig) -> Membership {
    SchrodingerUh::new(lambda, alpha, *cfg).test(energy).into()
}

/// Uniform energy grid `start + i·step`, `i < len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl EnergyGrid {
    pub fn new(start: f64, end: f64, step: f64) -> Result<Self, SpectrumError> {
        if !(step > 0.0) || !(end >= start) {
            return Err(SpectrumError::Parameter(format!(
                "grid needs step > 0 and end >= start (got [{start}, {end}] step {step})"
            )));
        }
        let len = ((end - start) / step + 1e-9).floor() as usize + 1;
        Ok(Self { start, step, len })
    }

    /// Grid covering `[−2−2λ, 2+2λ]` plus one step on each side.
    pub fn covering(lambda: f64, step: f64) -> Result<Self, SpectrumError> {
        let b = norm_bound(lambda) + step;
        let half = (b / step).ceil();
        Self::new(-half * step, half * step, step)
    }

    pub fn energy(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn energies(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.energy(i)).collect()
    }

    pub fn end(&self) -> f64 {
        self.energy(self.len.saturating_sub(1))
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn scaled(&self, s: f64) -> Self {
        if s >= 0.0 {
            Self::new(self.lo * s, self.hi * s)
        } else {
            Self::new(self.hi * s, self.lo * s)
        }
    }
}

/// Sorts and merges overlapping or touching intervals.
pub fn merge_intervals(mut v: Vec<Interval>) -> Vec<Interval> {
    v.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut out: Vec<Interval> = Vec::with_capacity(v.len());
    for iv in v {
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
            _ => out.push(iv),
        }
    }
    out
}

/// Distance from `x` to a sorted, disjoint union of intervals.
pub fn distance_to_set(x: f64, set: &[Interval]) -> f64 {
    let i = set.partition_point(|iv| iv.hi < x);
    let mut d = f64::INFINITY;
    if let Some(iv) = set.get(i) {
        d = if iv.lo <= x { 0.0 } else { iv.lo - x };
    }
    if i > 0 {
        d = d.min(x - set[i - 1].hi);
    }
    d
}

/// One-sided `sup_{x ∈ a} dist(x, b)`. The supremum over an interval of `a`
/// is reached at its endpoints or at midpoints of gaps of `b` inside it.
fn directed_hausdorff(a: &[Interval], b: &[Interval]) -> f64 {
    let mut sup = 0.0f64;
    for iv in a {
        sup = sup.max(distance_to_set(iv.lo, b)).max(distance_to_set(iv.hi, b));
        for w in b.windows(2) {
            let mid = 0.5 * (w[0].hi + w[1].lo);
            if iv.contains(mid) {
                sup = sup.max(distance_to_set(mid, b));
            }
        }
    }
    sup
}

/// Hausdorff distance between two sorted, disjoint unions of intervals.
pub fn hausdorff_distance(a: &[Interval], b: &[Interval]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() { 0.0 } else { f64::INFINITY };
    }
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// Settings for a spectrum scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub uh: UhConfig,
    /// Section size for the IDS column.
    pub ids_size: usize,
    pub ids_phases: usize,
    pub seed: u64,
    /// Settle indeterminate verdicts by IDS growth across the grid cell
    /// instead of assigning them to the spectrum.
    pub resolve_indeterminate: bool,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            uh: UhConfig::default(),
            ids_size: 10_000,
            ids_phases: 4,
            seed: 0,
            resolve_indeterminate: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub energy: f64,
    pub member: bool,
    pub status: Hyperbolicity,
    pub margin: f64,
    pub ids: f64,
}

/// Grid approximation of `Σ_{λ,α}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumApproximation {
    pub lambda: f64,
    pub alpha: Frequency,
    pub grid: EnergyGrid,
    pub points: Vec<GridPoint>,
    pub intervals: Vec<Interval>,
}

impl SpectrumApproximation {
    /// CSV with columns `E,member,margin,ids`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SpectrumError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["E", "member", "margin", "ids"])?;
        for p in &self.points {
            w.write_record([
                format!("{}", p.energy),
                format!("{}", p.member as u8),
                format!("{}", p.margin),
                format!("{}", p.ids),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// JSON interval list `[[lo, hi], ...]`.
    pub fn intervals_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.intervals
                .iter()
                .map(|iv| serde_json::json!([iv.lo, iv.hi]))
                .collect(),
        )
    }

    /// Index of the grid point closest to `energy`.
    pub fn index_of(&self, energy: f64) -> usize {
        let i = ((energy - self.grid.start) / self.grid.step).round();
        (i.max(0.0) as usize).min(self.grid.len - 1)
    }

    pub fn is_member(&self, energy: f64) -> bool {
        self.points[self.index_of(energy)].member
    }
}

/// Maximal runs of `true` as closed intervals on the grid.
pub fn runs_to_intervals(grid: &EnergyGrid, member: &[bool]) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &m) in member.iter().enumerate() {
        match (m, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(Interval::new(grid.energy(s), grid.energy(i - 1)));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Interval::new(grid.energy(s), grid.energy(member.len() - 1)));
    }
    out
}

/// Scans the grid with the uniform hyperbolicity test; every point carries
/// the IDS value for cross-checks.
///
/// Indeterminate points count as spectrum, unless `resolve_indeterminate`
/// is set: then they count as spectrum only if at least two eigenvalues per
/// phase-averaged section fall into their grid cell. Dirichlet edge states
/// contribute isolated eigenvalues inside gaps, hence the margin of two.
pub fn spectrum_intervals(
    lambda: f64,
    alpha: &Frequency,
    grid: &EnergyGrid,
    cfg: &ScanConfig,
) -> SpectrumApproximation {
    let probe = SchrodingerUh::new(lambda, alpha, cfg.uh);
    let counter = IdsEstimator::new(lambda, alpha, cfg.ids_size, cfg.ids_phases, cfg.seed);
    let quantum = 1.0 / (counter.size() * cfg.ids_phases.max(1)) as f64;
    let h = 0.5 * grid.step;
    let points = par::map_range(grid.len, |i| {
        let energy = grid.energy(i);
        let v = probe.test(energy);
        let member = match v.status {
            Hyperbolicity::Hyperbolic => false,
            Hyperbolicity::NotHyperbolic => true,
            Hyperbolicity::Indeterminate if cfg.resolve_indeterminate => {
                counter.at(energy + h) - counter.at(energy - h) > 1.5 * quantum
            }
            Hyperbolicity::Indeterminate => true,
        };
        GridPoint {
            energy,
            member,
            status: v.status,
            margin: v.margin,
            ids: counter.at(energy),
        }
    });
    let member: Vec<bool> = points.iter().map(|p| p.member).collect();
    SpectrumApproximation {
        lambda,
        alpha: alpha.clone(),
        grid: *grid,
        intervals: runs_to_intervals(grid, &member),
        points,
    }
}

/// Membership from IDS growth: a grid cell belongs to the spectrum when the
/// counting function rises by more than `floor` across it.
pub fn ids_growth_membership(counter: &IdsEstimator, grid: &EnergyGrid, floor: f64) -> Vec<bool> {
    let h = 0.5 * grid.step;
    let edges: Vec<f64> = (0..=grid.len).map(|i| grid.energy(i) - h).collect();
    let n_at = counter.at_many(&edges);
    n_at.windows(2).map(|w| w[1] - w[0] > floor).collect()
}

/// Spectrum of the periodic operator with frequency `p/q`, as the union
/// over sampled phases of the bands `{E : |tr A_q(θ, E)| ≤ 2}`.
///
/// Band edges are the eigenvalues of the `q × q` periodic and antiperiodic
/// matrices; sorted together they pair up into the bands.
pub fn rational_spectrum(
    lambda: f64,
    p: i64,
    q: i64,
    theta_samples: usize,
) -> Result<Vec<Interval>, SpectrumError> {
    if q < 1 || p < 0 || gcd(p, q) != 1 {
        return Err(SpectrumError::Parameter(format!("{p}/{q} is not a reduced fraction")));
    }
    let s = theta_samples.max(1);
    let bands: Vec<Vec<Interval>> = par::map_range(s, |j| {
        let theta = j as f64 / (q as f64 * s as f64);
        periodic_bands(lambda, p, q, theta)
    });
    Ok(merge_intervals(bands.into_iter().flatten().collect()))
}

/// Bands of the `q`-periodic operator at one phase.
pub fn periodic_bands(lambda: f64, p: i64, q: i64, theta: f64) -> Vec<Interval> {
    let qn = q as usize;
    let alpha = p as f64 / q as f64;
    let v: Vec<f64> = (0..qn)
        .map(|j| 2.0 * lambda * (TAU * (j as f64 * alpha + theta)).cos())
        .collect();
    let mut edges = Vec::with_capacity(2 * qn);
    for sign in [1.0, -1.0] {
        edges.extend(bloch_eigenvalues(&v, sign));
    }
    edges.sort_by(f64::total_cmp);
    edges
        .chunks_exact(2)
        .map(|c| Interval::new(c[0], c[1]))
        .collect()
}

/// Eigenvalues of the periodic (`sign = 1`) or antiperiodic (`sign = −1`)
/// Jacobi matrix with diagonal `v` and unit hopping.
fn bloch_eigenvalues(v: &[f64], sign: f64) -> Vec<f64> {
    let q = v.len();
    match q {
        1 => vec![v[0] + 2.0 * sign],
        2 => {
            let m = DMatrix::from_row_slice(2, 2, &[v[0], 1.0 + sign, 1.0 + sign, v[1]]);
            m.symmetric_eigenvalues().iter().copied().collect()
        }
        _ => {
            let mut m = DMatrix::<f64>::zeros(q, q);
            for i in 0..q {
                m[(i, i)] = v[i];
                if i + 1 < q {
                    m[(i, i + 1)] = 1.0;
                    m[(i + 1, i)] = 1.0;
                }
            }
            m[(0, q - 1)] = sign;
            m[(q - 1, 0)] = sign;
            m.symmetric_eigenvalues().iter().copied().collect()
        }
    }
}

/// `tr A_q(θ, E)` for the frequency `p/q`, the discriminant of the
/// periodic operator.
pub fn periodic_trace(lambda: f64, p: i64, q: i64, theta: f64, energy: f64) -> f64 {
    let alpha = p as f64 / q as f64;
    let (mut a, mut b, mut c, mut d) = (1.0, 0.0, 0.0, 1.0);
    for j in 0..q {
        let e = energy - 2.0 * lambda * (TAU * (j as f64 * alpha + theta)).cos();
        (a, b, c, d) = (e * a - c, e * b - d, a, b);
    }
    a + d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Frequency {
        Frequency::golden()
    }

    /// Characteristic polynomial of a symmetric tridiagonal matrix with unit
    /// off-diagonals by the three-term recurrence, used as a bisection oracle.
    fn char_poly(diag: &[f64], x: f64) -> f64 {
        let (mut p0, mut p1) = (1.0, diag[0] - x);
        for &d in &diag[1..] {
            (p0, p1) = (p1, (d - x) * p1 - p0);
        }
        p1
    }

    #[test]
    fn free_section() {
        let t = truncated_tridiagonal(0.0, &golden(), 0.3, 3);
        assert_eq!(t.diagonal, vec![0.0; 3]);
        assert_eq!(sturm_count(&t, 1.0), 2);
        assert_eq!(sturm_count(&t, -1.5), 0);
        assert_eq!(sturm_count(&t, 1.5), 3);
    }

    #[test]
    fn section_examples() {
        let t = truncated_tridiagonal(1.0, &golden(), 0.0, 2);
        assert!((t.diagonal[0] - 2.0).abs() < 1e-15);
        let expected = 2.0 * (TAU * 0.618_033_988_749_894_9).cos();
        assert!((t.diagonal[1] - expected).abs() < 1e-12);
        assert!((t.diagonal[1] + 1.4748).abs() < 1e-4);
        let t = truncated_tridiagonal(0.5, &golden(), 0.25, 1);
        assert!(t.diagonal[0].abs() < 1e-15);
        assert_eq!(sturm_count(&TridiagonalOperator { diagonal: vec![0.0] }, 1.0), 1);
    }

    #[test]
    fn counts_outside_norm_bound() {
        let t = truncated_tridiagonal(0.7, &golden(), 0.1, 50);
        assert_eq!(sturm_count(&t, -2.0 - 1.4 - 1e-9), 0);
        assert_eq!(sturm_count(&t, 2.0 + 1.4 + 1e-9), 50);
    }

    #[test]
    fn sturm_matches_dense_eigenvalues() {
        let t = truncated_tridiagonal(0.8, &golden(), 0.17, 12);
        let eig = t.to_dense().symmetric_eigenvalues();
        for e in [-2.5, -1.0, -0.1, 0.3, 1.7, 3.0] {
            let brute = eig.iter().filter(|&&x| x < e).count();
            assert_eq!(sturm_count(&t, e), brute);
        }
        // Oracle via sign changes of the characteristic polynomial.
        let e = 0.3;
        let mut changes = 0;
        let mut prev = 1.0f64;
        let diag = &t.diagonal;
        for k in 1..=diag.len() {
            let v = char_poly(&diag[..k], e);
            if v * prev < 0.0 {
                changes += 1;
            }
            prev = v;
        }
        assert_eq!(changes, sturm_count(&t, e));
    }

    #[test]
    fn ids_limits_and_symmetry() {
        let a = golden();
        assert_eq!(ids(0.5, &a, -4.0, 200, 2, 0), 0.0);
        assert_eq!(ids(0.5, &a, 4.0, 200, 2, 0), 1.0);
        assert!((ids(0.5, &a, 0.0, 2000, 8, 0) - 0.5).abs() < 0.01);
        assert!((ids(0.0, &a, 0.0, 2000, 2, 0) - 0.5).abs() < 0.01);
    }

    #[test]
    fn free_spectrum_membership() {
        let a = golden();
        let cfg = UhConfig::with_iters(2000);
        assert!(spectrum_member(0.0, &a, 1.0, &cfg).member);
        assert!(spectrum_member(0.0, &a, -1.9, &cfg).member);
        assert!(!spectrum_member(0.0, &a, 2.5, &cfg).member);
        assert!(!spectrum_member(0.5, &a, 10.0, &cfg).member);
        assert!(spectrum_member(0.5, &a, 0.0, &cfg).member);
    }

    #[test]
    fn grid_covering() {
        let g = EnergyGrid::covering(0.5, 0.25).unwrap();
        assert!(g.start <= -3.0 && g.end() >= 3.0);
        assert!(EnergyGrid::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn interval_merging_and_distance() {
        let m = merge_intervals(vec![
            Interval::new(2.0, 3.0),
            Interval::new(0.0, 1.0),
            Interval::new(0.5, 1.5),
        ]);
        assert_eq!(m, vec![Interval::new(0.0, 1.5), Interval::new(2.0, 3.0)]);
        assert!((distance_to_set(1.8, &m) - 0.2).abs() < 1e-15);
        let a = vec![Interval::new(0.0, 3.0)];
        // Gap (1.5, 2.0) inside `a`: the midpoint 1.75 is 0.25 away from `m`.
        assert!((hausdorff_distance(&a, &m) - 0.25).abs() < 1e-15);
        assert_eq!(hausdorff_distance(&m, &m), 0.0);
    }

    #[test]
    fn rational_spectrum_examples() {
        let free = rational_spectrum(0.0, 0, 1, 1).unwrap();
        assert_eq!(free, vec![Interval::new(-2.0, 2.0)]);
        let shifted = rational_spectrum(0.7, 0, 1, 1).unwrap();
        assert!((shifted[0].lo - (-2.0 + 1.4)).abs() < 1e-15);
        assert!((shifted[0].hi - (2.0 + 1.4)).abs() < 1e-15);
    }

    #[test]
    fn periodic_bands_match_trace_criterion() {
        let (lambda, p, q, theta) = (0.5, 3, 8, 0.013);
        let bands = periodic_bands(lambda, p, q, theta);
        assert_eq!(bands.len(), 8);
        let mut e = -3.0;
        while e <= 3.0 {
            let in_band = bands.iter().any(|b| b.contains(e));
            let tr = periodic_trace(lambda, p, q, theta, e);
            if (tr.abs() - 2.0).abs() > 1e-6 {
                assert_eq!(in_band, tr.abs() <= 2.0, "E = {e}, tr = {tr}");
            }
            e += 1e-3;
        }
        for b in &bands {
            assert!((periodic_trace(lambda, p, q, theta, b.lo).abs() - 2.0).abs() < 1e-8);
            assert!((periodic_trace(lambda, p, q, theta, b.hi).abs() - 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn csv_layout() {
        let a = golden();
        let grid = EnergyGrid::new(-3.5, 3.5, 0.5).unwrap();
        let s = spectrum_intervals(0.5, &a, &grid, &ScanConfig {
            uh: UhConfig::with_iters(500),
            ids_size: 200,
            ids_phases: 2,
            seed: 0,
            resolve_indeterminate: true,
        });
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("E,member,margin,ids"));
        assert_eq!(text.lines().count(), grid.len + 1);
        assert!(!text.contains('\r'));
        assert!(s.intervals.iter().all(|iv| iv.lo >= -3.0 && iv.hi <= 3.0));
    }
}
