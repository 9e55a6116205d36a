//! Command bodies and output plumbing.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use passband::density::{check_feasibility, FeasibilityReport};
use passband::extremal::{
    decay_csv, decay_violations, envelope_table, gap_ratios, positive_alpha_decay,
    sweep as run_sweep, sweep_csv, sweep_violations,
};
use passband::kernels::{argmax_envelope, lambda_bound};
use passband::output::sig12;
use passband::parametrization::{extend as extend_density, verify_constancy_perturbed};
use passband::sampling::{random_density, seeded_rng, Region, SamplerOptions};
use passband::{Band, Density, QuadratureConfig};
use serde_json::{json, Value};

pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_PARSE: u8 = 3;
pub const EXIT_NONCONVERGENCE: u8 = 4;

pub const OUT_DIR_VAR: &str = "PASSBAND_OUT_DIR";

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(msg: &str) -> Self {
        Self {
            code: EXIT_USAGE,
            message: msg.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

pub struct Sink {
    pub format: Format,
    pub path: Option<PathBuf>,
}

impl Sink {
    /// Writes the CSV/text rendering or the JSON document, whichever the
    /// format asks for. Files are written to a temporary sibling and renamed
    /// into place, so a failed run never leaves a partial file.
    fn emit(
        &self,
        text: impl FnOnce() -> String,
        doc: impl FnOnce() -> Value,
    ) -> Result<(), Failure> {
        let body = match self.format {
            Format::Csv => text(),
            Format::Json => {
                let mut doc = doc();
                round_numbers(&mut doc);
                serde_json::to_string_pretty(&doc).expect("JSON serialises") + "\n"
            }
        };
        match &self.path {
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(body.as_bytes())
                    .and_then(|_| out.flush())
                    .map_err(|e| io_failure("standard output", e))
            }
            Some(path) => write_atomically(&resolve(path), body.as_bytes()),
        }
    }
}

fn io_failure(what: &str, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_FAIL,
        message: format!("{what}: {e}"),
    }
}

fn resolve(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_VAR) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let shown = path.display().to_string();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| io_failure(&shown, e))?;
    tmp.write_all(bytes).map_err(|e| io_failure(&shown, e))?;
    tmp.persist(path).map_err(|e| io_failure(&shown, e.error))?;
    Ok(())
}

/// Rounds every float in the document to 12 significant digits.
fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap();
            if let Some(r) = sig12(x)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
            {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

fn read_density(path: &Path) -> Result<Density, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_PARSE,
        message: format!("{}: {e}", path.display()),
    })?;
    Ok(Density::from_json(&text)?)
}

fn band_json(band: &Band) -> Value {
    json!({ "a": band.a(), "b": band.b() })
}

pub fn bound(band: &Band, samples: usize, sink: &Sink) -> Result<u8, Failure> {
    let lambda = lambda_bound(band);
    let xstar = argmax_envelope(band);
    let table = envelope_table(band, samples);
    sink.emit(
        || {
            let mut s = format!("# lambda={}\n# xstar={}\nx,envelope\n", sig12(lambda), sig12(xstar));
            for (x, e) in &table {
                let _ = writeln!(s, "{},{}", sig12(*x), sig12(*e));
            }
            s
        },
        || {
            json!({
                "band": band_json(band),
                "lambda": lambda,
                "xstar": xstar,
                "envelope": table.iter().map(|(x, e)| json!({"x": x, "value": e})).collect::<Vec<_>>(),
            })
        },
    )?;
    Ok(0)
}

fn feasibility_preamble(rep: &FeasibilityReport) -> String {
    let mut s = String::new();
    for (name, c) in [
        ("condition_one", &rep.condition_one),
        ("corollary", &rep.corollary_condition),
    ] {
        let verdict = serde_json::to_value(c.verdict).unwrap();
        let _ = write!(s, "# {name}={}", verdict.as_str().unwrap_or("?"));
        if let Some(v) = c.value {
            let _ = write!(s, " value={} err={}", sig12(v.value), sig12(v.error));
        }
        s.push('\n');
    }
    for n in &rep.notes {
        let _ = writeln!(s, "# note: {n}");
    }
    s
}

/// Feasibility first: an infeasible density exits with code 2 before any
/// extension is attempted.
fn feasible(
    v: &Density,
    band: &Band,
    cfg: &QuadratureConfig,
) -> Result<FeasibilityReport, Failure> {
    let rep = check_feasibility(v, band, cfg)?;
    if !rep.is_feasible() || !v.is_square_integrable() {
        let mut msg = String::from("density is infeasible for this band");
        for n in &rep.notes {
            msg.push_str("; ");
            msg.push_str(n);
        }
        return Err(Failure {
            code: EXIT_INFEASIBLE,
            message: msg,
        });
    }
    Ok(rep)
}

pub fn extend(
    path: &Path,
    band: &Band,
    grid: usize,
    cfg: &QuadratureConfig,
    sink: &Sink,
) -> Result<u8, Failure> {
    let v = read_density(path)?;
    let rep = feasible(&v, band, cfg)?;
    let ext = extend_density(&v, band, grid, cfg)?;
    sink.emit(
        || {
            let mut s = feasibility_preamble(&rep);
            let _ = writeln!(
                s,
                "# alpha={} err={}",
                sig12(ext.alpha),
                sig12(ext.alpha_error)
            );
            s + &ext.to_csv()
        },
        || json!({ "feasibility": rep, "extension": ext }),
    )?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
pub fn verify(
    path: &Path,
    band: &Band,
    grid: usize,
    checks: usize,
    tol: f64,
    perturb: f64,
    cfg: &QuadratureConfig,
    sink: &Sink,
) -> Result<u8, Failure> {
    let v = read_density(path)?;
    feasible(&v, band, cfg)?;
    let rep = verify_constancy_perturbed(&v, band, grid, checks, perturb, cfg)?;
    // the threshold absorbs the quadrature error estimates
    let threshold = tol * rep.alpha.abs().max(1.0) + rep.max_error + rep.alpha_error;
    let pass =
        rep.max_deviation <= threshold && (rep.alpha_measured - rep.alpha).abs() <= threshold;
    let verdict = if pass { "PASS" } else { "FAIL" };
    sink.emit(
        || {
            let rows = [
                ("alpha", rep.alpha),
                ("alpha_err", rep.alpha_error),
                ("alpha_measured", rep.alpha_measured),
                ("max_deviation", rep.max_deviation),
                ("max_error", rep.max_error),
                ("threshold", threshold),
                ("perturb", rep.perturb),
            ];
            let mut s = String::new();
            for (k, x) in rows {
                let _ = writeln!(s, "{k}={}", sig12(x));
            }
            s + &format!("result={verdict}\n")
        },
        || json!({ "report": rep, "threshold": threshold, "result": verdict }),
    )?;
    Ok(if pass { 0 } else { EXIT_FAIL })
}

fn diagnostics_failure(problems: Vec<String>) -> Result<u8, Failure> {
    if problems.is_empty() {
        return Ok(0);
    }
    for p in &problems {
        eprintln!("invariant violated: {p}");
    }
    Ok(EXIT_FAIL)
}

fn sweep_diagnostics(final_gap: f64, ratios: &[f64]) -> String {
    let ratios: Vec<String> = ratios.iter().map(|r| sig12(*r)).collect();
    format!(
        "# final_gap={}\n# gap_ratios={}\n",
        sig12(final_gap),
        ratios.join(";")
    )
}

pub fn sweep(
    eps: &[f64],
    band: &Band,
    grid: usize,
    cfg: &QuadratureConfig,
    sink: &Sink,
) -> Result<u8, Failure> {
    let recs = run_sweep(eps, band, grid, cfg)?;
    let lambda = lambda_bound(band);
    let ratios = gap_ratios(&recs);
    let final_gap = recs.last().map_or(f64::NAN, |r| r.gap);
    sink.emit(
        || {
            format!("# lambda={}\n", sig12(lambda))
                + &sweep_diagnostics(final_gap, &ratios)
                + &sweep_csv(&recs)
        },
        || {
            json!({
                "band": band_json(band),
                "lambda": lambda,
                "final_gap": final_gap,
                "gap_ratios": ratios,
                "records": recs,
            })
        },
    )?;
    diagnostics_failure(sweep_violations(&recs))
}

pub fn decay(
    radii: &[f64],
    band: &Band,
    grid: usize,
    cfg: &QuadratureConfig,
    sink: &Sink,
) -> Result<u8, Failure> {
    let recs = positive_alpha_decay(radii, band, grid, cfg)?;
    let ratios: Vec<f64> = recs
        .windows(2)
        .map(|w| w[1].sup_norm / w[0].sup_norm)
        .collect();
    sink.emit(
        || {
            let shown: Vec<String> = ratios.iter().map(|r| sig12(*r)).collect();
            format!("# sup_norm_ratios={}\n", shown.join(";")) + &decay_csv(&recs)
        },
        || json!({ "band": band_json(band), "sup_norm_ratios": ratios, "records": recs }),
    )?;
    diagnostics_failure(decay_violations(&recs))
}

pub fn audit(
    count: usize,
    seed: u64,
    tol: f64,
    band: &Band,
    grid: usize,
    cfg: &QuadratureConfig,
    sink: &Sink,
) -> Result<u8, Failure> {
    let mut rng = seeded_rng(seed);
    let opts = SamplerOptions {
        region: Region::Both,
        singular_edges: false,
        unbounded_tail: true,
    };
    let mut rows = Vec::with_capacity(count);
    for trial in 0..count {
        let v = random_density(&mut rng, band, &opts);
        let rep = verify_constancy_perturbed(&v, band, grid, 17, 1.0, cfg)?;
        let threshold = tol * rep.alpha.abs().max(1.0) + rep.max_error + rep.alpha_error;
        rows.push((trial, v, rep.clone(), rep.max_deviation <= threshold));
    }
    let all = rows.iter().all(|r| r.3);
    sink.emit(
        || {
            let mut s = String::from(
                "trial,segments,alpha,alpha_measured,max_deviation,max_error,result\n",
            );
            for (trial, v, rep, ok) in &rows {
                let _ = writeln!(
                    s,
                    "{trial},{},{},{},{},{},{}",
                    v.segments().len(),
                    sig12(rep.alpha),
                    sig12(rep.alpha_measured),
                    sig12(rep.max_deviation),
                    sig12(rep.max_error),
                    if *ok { "PASS" } else { "FAIL" }
                );
            }
            s
        },
        || {
            json!({
                "seed": seed,
                "band": band_json(band),
                "trials": rows.iter().map(|(trial, v, rep, ok)| json!({
                    "trial": trial,
                    "density": serde_json::from_str::<Value>(&v.to_json()).unwrap(),
                    "report": rep,
                    "result": if *ok { "PASS" } else { "FAIL" },
                })).collect::<Vec<_>>(),
            })
        },
    )?;
    Ok(if all { 0 } else { EXIT_FAIL })
}
