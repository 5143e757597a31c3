//! Subcommand bodies. Each one returns a JSON report and a CSV table; the
//! config echo and version are attached in [`finish`].

use gapscope::cocycle::{
    lyapunov_complexified, lyapunov_exponent, schrodinger_rotation_number, Mat2,
    SchrodingerCocycle, UhConfig,
};
use gapscope::gaps::{detect_gaps, dry_martini_check, duality_check, DryCheckConfig, GapOptions};
use gapscope::kam::{contraction_sweep, KamError, SlMatSeries};
use gapscope::spectrum::{rational_spectrum, spectrum_intervals, EnergyGrid, IdsEstimator, ScanConfig};
use gapscope::{arithmetic::gcd, Frequency};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::{Artifacts, CliError};

/// Largest butterfly denominator accepted.
pub const BUTTERFLY_QMAX: i64 = 200;
const MIN_CONTRACTION_EXPONENT: f64 = 1.8;

pub fn dispatch(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let alpha = cfg.frequency()?;
    match cfg.subcommand.as_str() {
        "lyap" => lyap(cfg, alpha),
        "rot" => rot(cfg, alpha),
        "ids" => ids(cfg, &alpha),
        "spectrum" => spectrum(cfg, &alpha),
        "gaps" => gaps(cfg, &alpha),
        "dry-check" => dry_check(cfg, &alpha),
        "duality" => duality(cfg, &alpha),
        "kam-step" => kam_step(cfg, &alpha),
        "butterfly" => butterfly(cfg),
        other => Err(CliError::Usage(format!("unknown subcommand {other}"))),
    }
}

fn inconsistency(e: impl std::fmt::Display) -> CliError {
    CliError::Inconsistency(e.to_string())
}

fn finish(cfg: &RunConfig, mut report: Value, csv: String, violation: Option<String>) -> Artifacts {
    let echo = cfg.echo();
    if let Value::Object(map) = &mut report {
        map.insert(
            "meta".into(),
            json!({"tool": "gapscope", "version": env!("CARGO_PKG_VERSION"), "config": echo}),
        );
    }
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    Artifacts {
        json,
        csv: format!("# gapscope {} {}\n{csv}", env!("CARGO_PKG_VERSION"), echo),
        violation,
    }
}

/// CSV with LF line endings from a header and rows.
fn table<const N: usize>(header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

fn lyap(cfg: &RunConfig, alpha: Frequency) -> Result<Artifacts, CliError> {
    let c = SchrodingerCocycle::complexified(cfg.lambda, cfg.energy, cfg.epsilon, alpha)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let l = if cfg.epsilon == 0.0 {
        lyapunov_exponent(&c, cfg.iters, cfg.phases, cfg.seed)
    } else {
        lyapunov_complexified(&c, cfg.iters, cfg.phases, cfg.seed)
    };
    // Value the exponent takes when E lies in the spectrum.
    let on_spectrum = (cfg.epsilon.abs() + cfg.lambda.ln()).max(0.0);
    let report = json!({
        "lambda": cfg.lambda,
        "E": cfg.energy,
        "epsilon": cfg.epsilon,
        "lyapunov": l,
        "on_spectrum_value": on_spectrum,
    });
    let csv = table(
        ["lambda", "E", "epsilon", "lyapunov"],
        [[cfg.lambda, cfg.energy, cfg.epsilon, l].map(|x| x.to_string())],
    );
    Ok(finish(cfg, report, csv, None))
}

fn rot(cfg: &RunConfig, alpha: Frequency) -> Result<Artifacts, CliError> {
    let r = schrodinger_rotation_number(cfg.lambda, alpha.value(), cfg.energy, cfg.iters);
    let ids_from_rotation = 1.0 - 2.0 * r.folded;
    let report = json!({
        "lambda": cfg.lambda,
        "E": cfg.energy,
        "rotation": r,
        "ids_from_rotation": ids_from_rotation,
    });
    let csv = table(
        ["E", "raw", "folded", "window_gap", "converged", "ids_from_rotation"],
        [[
            cfg.energy.to_string(),
            r.raw.to_string(),
            r.folded.to_string(),
            r.window_gap.to_string(),
            r.converged.to_string(),
            ids_from_rotation.to_string(),
        ]],
    );
    Ok(finish(cfg, report, csv, None))
}

fn ids(cfg: &RunConfig, alpha: &Frequency) -> Result<Artifacts, CliError> {
    let grid = EnergyGrid::covering(cfg.lambda, cfg.grid).map_err(|e| CliError::Usage(e.to_string()))?;
    let counter = IdsEstimator::new(cfg.lambda, alpha, cfg.n, cfg.phases, cfg.seed);
    let energies = grid.energies();
    let values = counter.at_many(&energies);
    let points: Vec<Value> = energies.iter().zip(&values).map(|(e, n)| json!([e, n])).collect();
    let report = json!({"lambda": cfg.lambda, "alpha": alpha, "points": points});
    let csv = table(
        ["E", "ids"],
        energies.iter().zip(&values).map(|(e, n)| [e.to_string(), n.to_string()]),
    );
    Ok(finish(cfg, report, csv, None))
}

fn scan_config(cfg: &RunConfig) -> ScanConfig {
    ScanConfig {
        uh: UhConfig::with_iters(cfg.iters),
        ids_size: cfg.n,
        ids_phases: cfg.phases,
        seed: cfg.seed,
        resolve_indeterminate: true,
    }
}

fn spectrum(cfg: &RunConfig, alpha: &Frequency) -> Result<Artifacts, CliError> {
    let grid = EnergyGrid::covering(cfg.lambda, cfg.grid).map_err(|e| CliError::Usage(e.to_string()))?;
    let spec = spectrum_intervals(cfg.lambda, alpha, &grid, &scan_config(cfg));
    let indeterminate = spec.points.iter().filter(|p| p.status == gapscope::cocycle::Hyperbolicity::Indeterminate).count();
    let measure: f64 = spec.intervals.iter().map(|i| i.width()).sum();
    let report = json!({
        "lambda": cfg.lambda,
        "alpha": alpha,
        "grid": spec.grid,
        "intervals": spec.intervals_json(),
        "measure": measure,
        "indeterminate_points": indeterminate,
    });
    let mut buf = Vec::new();
    spec.write_csv(&mut buf).map_err(inconsistency)?;
    Ok(finish(cfg, report, String::from_utf8(buf).expect("utf-8 csv"), None))
}

fn gaps(cfg: &RunConfig, alpha: &Frequency) -> Result<Artifacts, CliError> {
    let grid = EnergyGrid::covering(cfg.lambda, cfg.grid).map_err(|e| CliError::Usage(e.to_string()))?;
    let scan = scan_config(cfg);
    let spec = spectrum_intervals(cfg.lambda, alpha, &grid, &scan);
    let counter = IdsEstimator::new(cfg.lambda, alpha, cfg.n, cfg.phases, cfg.seed);
    let opts = GapOptions::default();
    let found = detect_gaps(&spec, |e| counter.at(e), &opts).map_err(inconsistency)?;
    let gaps: Vec<Value> = found
        .iter()
        .map(|g| {
            json!({
                "label": g.label,
                "e_minus": g.e_minus,
                "e_plus": g.e_plus,
                "width": g.width(),
                "ids": g.ids_value,
                "residual": g.label_residual,
            })
        })
        .collect();
    let report = json!({
        "lambda": cfg.lambda,
        "alpha": alpha,
        "grid_step": cfg.grid,
        "gaps": gaps,
        "intervals": spec.intervals_json(),
    });
    let csv = table(
        ["lo", "hi"],
        spec.intervals.iter().map(|i| [i.lo.to_string(), i.hi.to_string()]),
    );
    Ok(finish(cfg, report, csv, None))
}

fn dry_check(cfg: &RunConfig, alpha: &Frequency) -> Result<Artifacts, CliError> {
    if cfg.lambda == 1.0 {
        return Err(CliError::Usage(
            "--lambda 1 is the critical coupling; the all-gaps-open statement is restricted to the \
             non-critical case lambda != 1"
                .into(),
        ));
    }
    let dc = DryCheckConfig {
        ids_size: cfg.n,
        ids_phases: cfg.phases,
        uh: UhConfig::with_iters(cfg.iters),
        seed: cfg.seed,
        ..DryCheckConfig::default()
    };
    let r = dry_martini_check(cfg.lambda, alpha, cfg.kmax, cfg.grid, None, &dc).map_err(inconsistency)?;
    let mut buf = Vec::new();
    r.write_csv(&mut buf).map_err(inconsistency)?;
    let violation = (!r.all_open).then(|| {
        let closed: Vec<String> = r.labels.iter().filter(|l| !l.found).map(|l| l.k.to_string()).collect();
        format!("gaps not certified open for labels {}", closed.join(", "))
    });
    let report = serde_json::to_value(&r).expect("report serializes");
    Ok(finish(cfg, report, String::from_utf8(buf).expect("utf-8 csv"), violation))
}

fn duality(cfg: &RunConfig, alpha: &Frequency) -> Result<Artifacts, CliError> {
    if !(cfg.lambda > 1.0) {
        return Err(CliError::Usage(format!(
            "--lambda must exceed 1 for duality (got {}); the dual coupling is 1/lambda",
            cfg.lambda
        )));
    }
    let r = duality_check(cfg.lambda, alpha, cfg.grid, &scan_config(cfg), 200).map_err(inconsistency)?;
    let hausdorff_limit = 5.0 * cfg.grid;
    let ids_limit = 0.01;
    let mut violation = Vec::new();
    if r.hausdorff >= hausdorff_limit {
        violation.push(format!("Hausdorff distance {} >= {hausdorff_limit}", r.hausdorff));
    }
    if r.ids_discrepancy >= ids_limit {
        violation.push(format!("IDS discrepancy {} >= {ids_limit}", r.ids_discrepancy));
    }
    let mut report = serde_json::to_value(&r).expect("report serializes");
    report["hausdorff_limit"] = json!(hausdorff_limit);
    report["ids_limit"] = json!(ids_limit);
    report["consistent"] = json!(violation.is_empty());
    let rows = r
        .scaled_dual
        .iter()
        .map(|i| ["scaled_dual".to_string(), i.lo.to_string(), i.hi.to_string()])
        .chain(r.direct.iter().map(|i| ["direct".to_string(), i.lo.to_string(), i.hi.to_string()]));
    let csv = table(["set", "lo", "hi"], rows);
    let violation = (!violation.is_empty()).then(|| violation.join("; "));
    Ok(finish(cfg, report, csv, violation))
}

fn kam_step(cfg: &RunConfig, alpha: &Frequency) -> Result<Artifacts, CliError> {
    if !(cfg.norm > 0.0) {
        return Err(CliError::Usage(format!("--norm must be positive (got {})", cfg.norm)));
    }
    let a = Mat2::new(1.0, cfg.d, 0.0, 1.0);
    let shape = SlMatSeries::random(&[0, 1, 2, 3], 1.0, cfg.seed);
    let norms = [cfg.norm, cfg.norm * 0.1, cfg.norm * 0.01];
    let (rows, p) = contraction_sweep(&a, &shape, alpha, cfg.qnext, &norms).map_err(|e| match e {
        KamError::Smallness { .. } => CliError::Usage(format!("--norm {} with --qnext {}: {e}", cfg.norm, cfg.qnext)),
        other => inconsistency(other),
    })?;
    let worst_residual = rows.iter().map(|r| r.homological_residual / r.norm).fold(0.0, f64::max);
    let mut violation = Vec::new();
    if p < MIN_CONTRACTION_EXPONENT {
        violation.push(format!("contraction exponent {p} < {MIN_CONTRACTION_EXPONENT}"));
    }
    if worst_residual >= 1e-12 {
        violation.push(format!("relative homological residual {worst_residual} >= 1e-12"));
    }
    let report = json!({
        "d": cfg.d,
        "q_next": cfg.qnext,
        "alpha": alpha,
        "rows": rows,
        "contraction_exponent": p,
    });
    let csv = table(
        ["norm", "remainder", "quadratic_constant", "solution_ratio", "homological_residual"],
        rows.iter().map(|r| {
            [r.norm, r.remainder, r.quadratic_constant, r.solution_ratio, r.homological_residual].map(|x| x.to_string())
        }),
    );
    let violation = (!violation.is_empty()).then(|| violation.join("; "));
    Ok(finish(cfg, report, csv, violation))
}

fn butterfly(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    if cfg.qmax < 1 || cfg.qmax > BUTTERFLY_QMAX {
        return Err(CliError::Usage(format!(
            "--qmax must lie in 1..={BUTTERFLY_QMAX} (got {})",
            cfg.qmax
        )));
    }
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for q in 1..=cfg.qmax {
        for p in 0..=q {
            if gcd(p, q) != 1 {
                continue;
            }
            let bands = rational_spectrum(cfg.lambda, p, q, cfg.phases).map_err(inconsistency)?;
            let a = p as f64 / q as f64;
            for b in &bands {
                rows.push([p.to_string(), q.to_string(), a.to_string(), b.lo.to_string(), b.hi.to_string()]);
            }
            let list: Vec<Value> = bands.iter().map(|b| json!([b.lo, b.hi])).collect();
            entries.push(json!({"p": p, "q": q, "bands": list}));
        }
    }
    let report = json!({"lambda": cfg.lambda, "q_max": cfg.qmax, "spectra": entries});
    let csv = table(["p", "q", "alpha", "lo", "hi"], rows);
    Ok(finish(cfg, report, csv, None))
}
