//! `passband`: batch front end for the passband library.

mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use passband::{Band, Error, QuadratureConfig};

use report::{Failure, Format, Sink};

#[derive(Parser, Debug)]
#[command(
    name = "passband",
    version,
    about = "Constant-real-part extensions of passive loss densities"
)]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Band edges `a,b` with 0 < a < b.
    #[arg(long, global = true, default_value = "1,2", value_parser = parse_band)]
    band: Band,

    /// Extension grid points on the band (default 256; 512 for `sweep`).
    #[arg(long, global = true, value_parser = parse_grid_size)]
    grid_size: Option<usize>,

    /// Emit a single JSON document instead of CSV/text.
    #[arg(long, global = true)]
    json: bool,

    /// Write to this file instead of standard output. Relative paths are
    /// resolved against $PASSBAND_OUT_DIR when it is set.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(flatten)]
    quad: QuadArgs,
}

#[derive(Args, Debug)]
struct QuadArgs {
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    #[arg(long, global = true)]
    max_subdivisions: Option<usize>,
    #[arg(long, global = true)]
    tail_cutoff_factor: Option<f64>,
    #[arg(long, global = true)]
    pv_window: Option<f64>,
}

impl QuadArgs {
    fn config(&self) -> QuadratureConfig {
        let d = QuadratureConfig::default();
        QuadratureConfig {
            rel_tol: self.rel_tol.unwrap_or(d.rel_tol),
            abs_tol: self.abs_tol.unwrap_or(d.abs_tol),
            max_subdivisions: self.max_subdivisions.unwrap_or(d.max_subdivisions),
            tail_cutoff_factor: self.tail_cutoff_factor.unwrap_or(d.tail_cutoff_factor),
            pv_window: self.pv_window.unwrap_or(d.pv_window),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the bound λ, the envelope maximizer and the sampled envelope.
    Bound,
    /// Complete a density on the band.
    Extend {
        /// Density JSON document.
        density: PathBuf,
    },
    /// Complete a density and check that its Hilbert transform is constant
    /// on the band.
    Verify {
        density: PathBuf,
        /// Relative tolerance on the deviation (scaled by max(1, |α|)).
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Scale the completion before transforming (debug: negative control).
        #[arg(long, default_value_t = 1.0)]
        perturb: f64,
        /// Number of check points inside the band.
        #[arg(long, default_value_t = 17)]
        checks: usize,
    },
    /// Near-extremal sweep over support widths ε (α = −1).
    Sweep {
        /// Comma-separated ε values; default 0.4a, 0.2a, …, 0.025a.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        eps: Option<Vec<f64>>,
    },
    /// Positive-level decay over radii R (α = +1, mass on (R, R+1)).
    Decay {
        /// Comma-separated radii; default 2b, 4b, 8b, 16b.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        radii: Option<Vec<f64>>,
    },
    /// Round-trip check on seeded random densities.
    Audit {
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
}

fn parse_band(s: &str) -> Result<Band, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b] = parts[..] else {
        return Err(format!("expected `a,b`, got `{s}`"));
    };
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Band::new(num(a)?, num(b)?).map_err(|e| e.to_string())
}

fn parse_grid_size(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|e| format!("`{s}`: {e}"))?;
    if n < 16 {
        return Err(format!("grid size must be at least 16, got {n}"));
    }
    Ok(n)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(report::EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = cli.global.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(report::EXIT_USAGE);
        }
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let g = &cli.global;
    let cfg = g.quad.config();
    cfg.validate().map_err(Failure::from)?;
    let sink = Sink {
        format: if g.json { Format::Json } else { Format::Csv },
        path: g.output.clone(),
    };
    let band = &g.band;
    let grid = g.grid_size.unwrap_or(256);
    match &cli.command {
        Command::Bound => report::bound(band, grid, &sink),
        Command::Extend { density } => report::extend(density, band, grid, &cfg, &sink),
        Command::Verify {
            density,
            tol,
            perturb,
            checks,
        } => {
            let nonneg = |x: f64| x.is_finite() && x >= 0.0;
            if *checks == 0 || !nonneg(*perturb) || !nonneg(*tol) {
                return Err(Failure::usage(
                    "--checks must be positive, --perturb and --tol >= 0",
                ));
            }
            report::verify(density, band, grid, *checks, *tol, *perturb, &cfg, &sink)
        }
        Command::Sweep { eps } => {
            let eps = match eps {
                Some(e) if e.is_empty() => return Err(Failure::usage("empty --eps schedule")),
                Some(e) => e.clone(),
                None => (0..5)
                    .map(|k| 0.4 * band.a() / f64::from(1u32 << k))
                    .collect(),
            };
            report::sweep(&eps, band, g.grid_size.unwrap_or(512), &cfg, &sink)
        }
        Command::Decay { radii } => {
            let radii = match radii {
                Some(r) if r.is_empty() => return Err(Failure::usage("empty --radii schedule")),
                Some(r) => r.clone(),
                None => (1..=4).map(|k| band.b() * f64::from(1u32 << k)).collect(),
            };
            report::decay(&radii, band, grid, &cfg, &sink)
        }
        Command::Audit { count, tol } => {
            if *count == 0 {
                return Err(Failure::usage("--count must be positive"));
            }
            report::audit(*count, g.seed, *tol, band, grid, &cfg, &sink)
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse(_) => report::EXIT_PARSE,
            Error::Infeasible(_)
            | Error::SupportOverlapsBand { .. }
            | Error::Unresolved { .. }
            | Error::InvalidDensity(_) => report::EXIT_INFEASIBLE,
            Error::NonConvergence { .. } | Error::NonFinite { .. } | Error::DecayViolation(_) => {
                report::EXIT_NONCONVERGENCE
            }
            _ => report::EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}
