//! Gap detection, gap labelling, all-labels-open reports, edge probes and
//! duality checks.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::arithmetic::{torus_distance, Frequency};
use crate::cocycle::{
    default_growth_threshold, schrodinger_rotation_number, Hyperbolicity, SchrodingerUh, UhConfig,
};
use crate::par;
use crate::spectrum::{
    hausdorff_distance, norm_bound, spectrum_intervals, EnergyGrid, IdsEstimator, Interval,
    ScanConfig, SpectrumApproximation, SpectrumError,
};

#[derive(Debug, thiserror::Error)]
pub enum GapError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("no label within {tol} of ids {ids} (best k = {k}, residual {residual})")]
    NoLabel { ids: f64, k: i64, residual: f64, tol: f64 },
    #[error("ids {ids} is ambiguous between labels {k1} and {k2}")]
    Ambiguous { ids: f64, k1: i64, k2: i64 },
    #[error("ids varies by {spread} across the gap ({e_minus}, {e_plus})")]
    Inconsistent { e_minus: f64, e_plus: f64, spread: f64 },
    #[error("label {k} assigned to two gaps")]
    DuplicateLabel { k: i64 },
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("io failed: {0}")]
    Io(#[from] std::io::Error),
}

/// A bounded component of the complement of the spectrum with its label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGap {
    pub e_minus: f64,
    pub e_plus: f64,
    pub ids_value: f64,
    pub label: i64,
    pub label_residual: f64,
}

impl SpectralGap {
    pub fn width(&self) -> f64 {
        self.e_plus - self.e_minus
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.e_minus + self.e_plus)
    }
}

/// Frac part `{kα}` in `[0, 1)`.
pub fn label_level(alpha: &Frequency, k: i64) -> f64 {
    (k as f64 * alpha.value()).rem_euclid(1.0)
}

/// The `k` with `0 < |k| ≤ k_max` minimizing `‖ids − kα‖`.
pub fn label_gap(ids: f64, alpha: &Frequency, k_max: i64, tol: f64) -> Result<(i64, f64), GapError> {
    if !(ids > 0.0 && ids < 1.0) || k_max < 1 {
        return Err(GapError::Parameter(format!(
            "label search needs 0 < ids < 1 and k_max >= 1 (got {ids}, {k_max})"
        )));
    }
    let mut best = (0i64, f64::INFINITY);
    let mut second = (0i64, f64::INFINITY);
    for k in (1..=k_max).flat_map(|k| [k, -k]) {
        let r = torus_distance(ids - k as f64 * alpha.value());
        if r < best.1 {
            second = best;
            best = (k, r);
        } else if r < second.1 {
            second = (k, r);
        }
    }
    if best.1 > tol {
        return Err(GapError::NoLabel { ids, k: best.0, residual: best.1, tol });
    }
    if second.1 - best.1 < 0.5 * tol {
        return Err(GapError::Ambiguous { ids, k1: best.0, k2: second.0 });
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapOptions {
    /// Gaps must be strictly wider than this; defaults to two grid steps.
    pub min_width: Option<f64>,
    /// Allowed spread of the IDS across a gap.
    pub ids_tolerance: f64,
    pub label_tolerance: f64,
    pub k_max: i64,
}

impl Default for GapOptions {
    fn default() -> Self {
        Self {
            min_width: None,
            ids_tolerance: 1e-3,
            label_tolerance: 1e-3,
            k_max: 30,
        }
    }
}

/// Bounded complement components of a scanned spectrum, labelled through
/// the IDS. Every returned gap has a unique label.
pub fn detect_gaps(
    spec: &SpectrumApproximation,
    ids_fn: impl Fn(f64) -> f64 + Sync,
    opts: &GapOptions,
) -> Result<Vec<SpectralGap>, GapError> {
    let step = spec.grid.step;
    let min_width = opts.min_width.unwrap_or(2.0 * step);
    let candidates: Vec<(f64, f64)> = spec
        .intervals
        .windows(2)
        .map(|w| (w[0].hi, w[1].lo))
        .filter(|(lo, hi)| hi - lo > min_width * (1.0 + 1e-9))
        .collect();

    let gaps = par::map(&candidates, |&(e_minus, e_plus)| {
        // Sample the resolvent-set grid points strictly inside the gap.
        let inner = [e_minus + step, 0.5 * (e_minus + e_plus), e_plus - step];
        let values = inner.map(&ids_fn);
        let spread = values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
            - values.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        if spread > opts.ids_tolerance {
            return Err(GapError::Inconsistent { e_minus, e_plus, spread });
        }
        let ids_value = values[1];
        let (label, label_residual) = label_gap(ids_value, &spec.alpha, opts.k_max, opts.label_tolerance)?;
        Ok(SpectralGap { e_minus, e_plus, ids_value, label, label_residual })
    });
    let gaps: Vec<SpectralGap> = gaps.into_iter().collect::<Result<_, _>>()?;

    let mut labels: Vec<i64> = gaps.iter().map(|g| g.label).collect();
    labels.sort_unstable();
    if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
        return Err(GapError::DuplicateLabel { k: w[0] });
    }
    Ok(gaps)
}

/// Settings for [`dry_martini_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DryCheckConfig {
    /// Section size of the IDS used to locate each label level.
    pub ids_size: usize,
    pub ids_phases: usize,
    /// Uniform hyperbolicity settings used to certify the gap.
    pub uh: UhConfig,
    /// Narrow gaps need long products; the product length is raised
    /// fourfold up to this bound while no certificate is found.
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for DryCheckConfig {
    fn default() -> Self {
        Self {
            ids_size: 20_000,
            ids_phases: 4,
            uh: UhConfig::with_iters(20_000),
            max_iters: 1_280_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub k: i64,
    pub found: bool,
    pub e_minus: Option<f64>,
    pub e_plus: Option<f64>,
    pub width: f64,
    pub ids: f64,
    pub residual: f64,
}

/// Are all gaps with `0 < |k| ≤ k_max` open?
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DryMartiniReport {
    pub lambda: f64,
    pub alpha: Frequency,
    pub k_max: i64,
    pub grid_step: f64,
    pub labels: Vec<LabelEntry>,
    pub all_open: bool,
    /// Explanations for labels that could not be certified.
    pub notes: Vec<String>,
}

impl DryMartiniReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), GapError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["k", "found", "e_minus", "e_plus", "width", "ids", "residual"])?;
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for l in &self.labels {
            w.write_record([
                l.k.to_string(),
                l.found.to_string(),
                opt(l.e_minus),
                opt(l.e_plus),
                l.width.to_string(),
                l.ids.to_string(),
                l.residual.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Smallest `E` in `[lo, hi]` with `pred(E)`, for a monotone predicate,
/// to absolute accuracy `tol`.
fn bisect(mut lo: f64, mut hi: f64, tol: f64, pred: impl Fn(f64) -> bool) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// For each label, locates the energy where the IDS crosses `{kα}`, certifies
/// a gap there with the uniform hyperbolicity test and measures its width by
/// bisecting on the verdict. Indeterminate verdicts count as spectrum, so the
/// reported widths are lower bounds at resolution `grid_step`. A label counts
/// as open when its certified width exceeds `min_width` (one grid step by
/// default).
pub fn dry_martini_check(
    lambda: f64,
    alpha: &Frequency,
    k_max: i64,
    grid_step: f64,
    min_width: Option<f64>,
    cfg: &DryCheckConfig,
) -> Result<DryMartiniReport, GapError> {
    if k_max < 1 || !(grid_step > 0.0) {
        return Err(GapError::Parameter(format!(
            "dry check needs k_max >= 1 and grid_step > 0 (got {k_max}, {grid_step})"
        )));
    }
    let min_width = min_width.unwrap_or(grid_step);
    let counter = IdsEstimator::new(lambda, alpha, cfg.ids_size, cfg.ids_phases, cfg.seed);
    let b = norm_bound(lambda) + 1.0;
    let eta = 2.0 / cfg.ids_size as f64;
    let fine = 1e-9 * b;

    let ks: Vec<i64> = (1..=k_max).flat_map(|k| [k, -k]).collect();
    let results = par::map(&ks, |&k| {
        let level = label_level(alpha, k);
        let left = bisect(-b, b, fine, |e| counter.at(e) >= level - eta);
        let right = bisect(-b, b, fine, |e| counter.at(e) > level + eta);
        let on_level = |e: f64| (counter.at(e) - level).abs() <= 2.0 * eta;

        // Centre candidates across the plateau bracket, midpoint first,
        // with longer products until one is certified.
        let candidates = [0.5, 0.4, 0.6, 0.3, 0.7, 0.2, 0.8, 0.1, 0.9].map(|t| left + t * (right - left));
        let mut uh = cfg.uh;
        let certified = loop {
            let probe = SchrodingerUh::new(lambda, alpha, uh);
            let hit = candidates
                .iter()
                .copied()
                .find(|&e| probe.test(e).status == Hyperbolicity::Hyperbolic);
            if let Some(c) = hit {
                break Some((c, probe));
            }
            if uh.n_iter >= cfg.max_iters {
                break None;
            }
            uh = UhConfig { growth_threshold: default_growth_threshold(4 * uh.n_iter), n_iter: 4 * uh.n_iter, ..uh };
        };
        let Some((c, probe)) = certified else {
            let ids = counter.at(0.5 * (left + right));
            return (
                LabelEntry {
                    k,
                    found: false,
                    e_minus: None,
                    e_plus: None,
                    width: 0.0,
                    ids,
                    residual: torus_distance(ids - level),
                },
                Some(format!("k = {k}: no uniformly hyperbolic energy near ids level {level:.6}")),
            );
        };

        // Inside this gap: hyperbolic with the IDS on the label level. Just
        // outside the plateau bracket the IDS is off the level, so the
        // bisection cannot run into a neighbouring gap.
        // Edges are resolved with the longest products: near an edge the
        // growth rate is small and shorter products leave it uncertified.
        let probe = if uh.n_iter < cfg.max_iters {
            let n = cfg.max_iters;
            SchrodingerUh::new(lambda, alpha, UhConfig { n_iter: n, growth_threshold: default_growth_threshold(n), ..uh })
        } else {
            probe
        };
        let in_gap = |e: f64| on_level(e) && probe.test(e).status == Hyperbolicity::Hyperbolic;
        let edge = |outside: f64| {
            let (mut a, mut z) = (c, outside);
            while (z - a).abs() > 0.25 * grid_step {
                let m = 0.5 * (a + z);
                if in_gap(m) {
                    a = m;
                } else {
                    z = m;
                }
            }
            a
        };
        let pad = grid_step + (right - left);
        let (e_minus, e_plus) = (edge(left - pad), edge(right + pad));
        let width = e_plus - e_minus;
        let ids = counter.at(c);
        let found = width > min_width;
        let note = (!found).then(|| {
            format!("k = {k}: certified width {width:.3e} is below the resolution {min_width:.3e}")
        });
        (
            LabelEntry {
                k,
                found,
                e_minus: Some(e_minus),
                e_plus: Some(e_plus),
                width,
                ids,
                residual: torus_distance(ids - level),
            },
            note,
        )
    });

    let mut labels = Vec::with_capacity(results.len());
    let mut notes = Vec::new();
    for (entry, note) in results {
        labels.push(entry);
        notes.extend(note);
    }
    if lambda == 0.0 {
        notes.push("free operator: the spectrum is [-2, 2] and has no gaps".into());
    }
    Ok(DryMartiniReport {
        lambda,
        alpha: alpha.clone(),
        k_max,
        grid_step,
        all_open: labels.iter().all(|l| l.found),
        labels,
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeSample {
    pub energy: f64,
    pub status: Hyperbolicity,
    pub margin: f64,
    pub rotation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEdgeProbe {
    /// Samples from the lower edge to the midpoint, then from the upper
    /// edge to the midpoint.
    pub from_lower: Vec<EdgeSample>,
    pub from_upper: Vec<EdgeSample>,
    pub midpoint: EdgeSample,
    /// Largest deviation of an interior rotation number from the midpoint.
    pub rotation_spread: f64,
    pub rotation_tolerance: f64,
    /// Whether the margin grows towards the midpoint on both sides
    /// (reported, not required).
    pub margin_monotone: bool,
    pub indeterminate: usize,
}

impl GapEdgeProbe {
    pub fn rotation_constant(&self) -> bool {
        self.rotation_spread <= self.rotation_tolerance
    }
}

/// Uniform hyperbolicity margin and rotation number on `n_tau` energies
/// stepping from each edge of `gap` towards its midpoint.
pub fn gap_edge_probe(
    lambda: f64,
    alpha: &Frequency,
    gap: &SpectralGap,
    n_tau: usize,
    uh: &UhConfig,
    rotation_iters: usize,
) -> Result<GapEdgeProbe, GapError> {
    if !(gap.width() > 0.0) || n_tau == 0 {
        return Err(GapError::Parameter("edge probe needs a gap of positive width and n_tau >= 1".into()));
    }
    let probe = SchrodingerUh::new(lambda, alpha, *uh);
    let a = alpha.value();
    let sample = |energy: f64| {
        let v = probe.test(energy);
        EdgeSample {
            energy,
            status: v.status,
            margin: v.margin,
            rotation: schrodinger_rotation_number(lambda, a, energy, rotation_iters).raw,
        }
    };
    let half = 0.5 * gap.width();
    let taus: Vec<f64> = (1..=n_tau).map(|j| half * j as f64 / (n_tau + 1) as f64).collect();
    let from_lower = par::map(&taus, |&t| sample(gap.e_minus + t));
    let from_upper = par::map(&taus, |&t| sample(gap.e_plus - t));
    let midpoint = sample(gap.midpoint());

    let rotation_spread = from_lower
        .iter()
        .chain(&from_upper)
        .map(|s| torus_distance(s.rotation - midpoint.rotation))
        .fold(0.0, f64::max);
    let increasing = |v: &[EdgeSample]| {
        v.windows(2).all(|w| w[1].margin >= w[0].margin) && v.last().is_none_or(|s| midpoint.margin >= s.margin)
    };
    let indeterminate = from_lower
        .iter()
        .chain(&from_upper)
        .chain([&midpoint])
        .filter(|s| s.status == Hyperbolicity::Indeterminate)
        .count();
    Ok(GapEdgeProbe {
        margin_monotone: increasing(&from_lower) && increasing(&from_upper),
        from_lower,
        from_upper,
        midpoint,
        rotation_spread,
        rotation_tolerance: 2.0 / rotation_iters as f64,
        indeterminate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub lambda: f64,
    pub grid_step: f64,
    /// Hausdorff distance between `λ·Σ_{1/λ}` and `Σ_λ`.
    pub hausdorff: f64,
    /// `sup |N_{1/λ}(E) − N_λ(λE)|` over the IDS grid.
    pub ids_discrepancy: f64,
    pub scaled_dual: Vec<Interval>,
    pub direct: Vec<Interval>,
}

/// Compares `Σ_λ` with `λ·Σ_{1/λ}` and `N_{1/λ}(E)` with `N_λ(λE)`.
///
/// The dual spectrum is scanned at step `grid_step/λ`, so both sets live on
/// grids of step `grid_step` after rescaling.
pub fn duality_check(
    lambda: f64,
    alpha: &Frequency,
    grid_step: f64,
    scan: &ScanConfig,
    ids_points: usize,
) -> Result<DualityReport, GapError> {
    if !(lambda > 1.0) {
        return Err(GapError::Parameter(format!("duality check needs lambda > 1 (got {lambda})")));
    }
    let dual_lambda = 1.0 / lambda;
    let direct = spectrum_intervals(lambda, alpha, &EnergyGrid::covering(lambda, grid_step)?, scan);
    let dual = spectrum_intervals(
        dual_lambda,
        alpha,
        &EnergyGrid::covering(dual_lambda, grid_step / lambda)?,
        scan,
    );
    let scaled_dual: Vec<Interval> = dual.intervals.iter().map(|iv| iv.scaled(lambda)).collect();
    let hausdorff = hausdorff_distance(&scaled_dual, &direct.intervals);

    let n_direct = IdsEstimator::new(lambda, alpha, scan.ids_size, scan.ids_phases, scan.seed);
    let n_dual = IdsEstimator::new(dual_lambda, alpha, scan.ids_size, scan.ids_phases, scan.seed);
    let b = norm_bound(dual_lambda) + 0.5;
    let m = ids_points.max(2);
    let es: Vec<f64> = (0..m).map(|i| -b + 2.0 * b * i as f64 / (m - 1) as f64).collect();
    let ids_discrepancy = par::map(&es, |&e| (n_dual.at(e) - n_direct.at(lambda * e)).abs())
        .into_iter()
        .fold(0.0, f64::max);

    Ok(DualityReport {
        lambda,
        grid_step,
        hausdorff,
        ids_discrepancy,
        scaled_dual,
        direct: direct.intervals,
    })
}
