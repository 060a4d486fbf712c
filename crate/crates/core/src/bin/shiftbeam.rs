//! Command-line runner for the shift-term beam solver.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use shiftbeam::asymptotics::write_components_csv;
use shiftbeam::config::RunConfig;
use shiftbeam::errors::convergence_csv;
use shiftbeam::fem::sample_points;
use shiftbeam::run;
use shiftbeam::Error;

#[derive(Parser)]
#[command(name = "shiftbeam", version, about = "Singularly perturbed beam problems with a unit shift")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Overrides applied on top of `--config` (or the defaults).
#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// ex1 or ex2.
    #[arg(long, global = true)]
    example: Option<String>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Boundary condition order (1 or 2).
    #[arg(long, global = true)]
    m: Option<u32>,
    /// Polynomial degrees, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    q: Option<Vec<usize>>,
    /// Cell counts, comma separated.
    #[arg(long = "N", global = true, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, global = true)]
    bmesh: Option<String>,
    #[arg(long, global = true)]
    imesh: Option<String>,
    #[arg(long, global = true)]
    sigma: Option<f64>,
    #[arg(long, global = true)]
    weak_exponent: Option<f64>,
    /// Constant shift coefficient replacing the example's d.
    #[arg(long, global = true)]
    d: Option<f64>,
    /// ε list for sweeps, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
    #[arg(long, global = true)]
    samples_per_cell: Option<usize>,
    #[arg(long, global = true)]
    q_ref: Option<usize>,
    #[arg(long, global = true)]
    n_ref: Option<usize>,
    /// Directory for cached reference solutions.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the effective configuration as JSON and exit.
    #[arg(long, global = true)]
    dump_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sampled solution x,u,du,w,dw for a single (q, N).
    Solve,
    /// Error table with rates over the (q, N) grid.
    Convergence {
        /// Exit with 4 if an energy rate falls below this.
        #[arg(long)]
        min_rate: Option<f64>,
    },
    /// Energy errors of the four mesh combinations side by side.
    CompareMeshes {
        #[arg(long)]
        min_rate: Option<f64>,
    },
    /// Green's function verification table.
    Greens {
        /// m1 or m2.
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        /// Exit with 4 if a row at the smallest ε exceeds this relative error.
        #[arg(long)]
        max_rel_error: Option<f64>,
    },
    /// Layer components S0, E, W, V0 against u_h, with the comparison report.
    Decompose {
        /// Add the norm scalings over the ε list.
        #[arg(long)]
        sweep: bool,
        /// Exit with 4 if the ε / (ε/10) comparison ratio falls below this.
        #[arg(long)]
        min_ratio: Option<f64>,
    },
    /// Supercloseness and postprocessed errors (σ = q + 2 unless set).
    Postprocess {
        /// Exit with 4 if a postprocessed rate falls below this.
        #[arg(long)]
        min_rate: Option<f64>,
    },
}

/// A requested check did not hold.
#[derive(Debug)]
struct CheckFailed(String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "check failed: {}", self.0)
    }
}

impl std::error::Error for CheckFailed {}

fn effective_config(c: &Common, cmd: &Command) -> anyhow::Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::from_file(p).with_context(|| format!("reading {}", p.display()))?,
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($src:expr => $dst:expr) => {
            if let Some(v) = $src.clone() {
                $dst = v;
            }
        };
    }
    set!(c.example => cfg.example);
    set!(c.epsilon => cfg.epsilon);
    set!(c.q => cfg.q);
    set!(c.n => cfg.n);
    set!(c.bmesh => cfg.bmesh);
    set!(c.imesh => cfg.imesh);
    set!(c.epsilons => cfg.epsilons);
    set!(c.samples_per_cell => cfg.samples_per_cell);
    set!(c.q_ref => cfg.reference.q_ref);
    set!(c.n_ref => cfg.reference.n_ref);
    if c.m.is_some() {
        cfg.m = c.m;
    }
    if c.sigma.is_some() {
        cfg.sigma = c.sigma;
    }
    if c.weak_exponent.is_some() {
        cfg.weak_exponent = c.weak_exponent;
    }
    if c.d.is_some() {
        cfg.shift = c.d;
    }
    if c.cache_dir.is_some() {
        cfg.reference.cache_dir = c.cache_dir.clone();
    }
    if c.out.is_some() {
        cfg.out = c.out.clone();
    }
    if let Command::Greens { variant, b, c: cc, .. } = cmd {
        set!(variant => cfg.greens.variant);
        set!(b => cfg.greens.b);
        set!(cc => cfg.greens.c);
        if let Some(d) = c.d {
            cfg.greens.d = d;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(cfg: &RunConfig, text: &str) -> anyhow::Result<()> {
    match &cfg.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn check_min(what: &str, values: &[f64], min: Option<f64>) -> anyhow::Result<()> {
    if let Some(min) = min {
        if let Some(v) = values.iter().find(|&&v| v.is_nan() || v < min) {
            return Err(CheckFailed(format!("{what} {v:.3} below {min}")).into());
        }
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = effective_config(&cli.common, &cli.command)?;
    if cli.common.dump_config {
        return emit(&cfg, &(cfg.to_json() + "\n"));
    }
    let spec = cfg.problem()?;
    match cli.command {
        Command::Solve => {
            if cfg.q.len() != 1 || cfg.n.len() != 1 {
                return Err(Error::InvalidInput("solve takes a single q and a single N".into()).into());
            }
            let uh = run::solve_on(&cfg, &spec, cfg.mesh_spec()?, cfg.q[0], cfg.n[0], None)?;
            let mut buf = Vec::new();
            uh.write_csv(&sample_points(uh.mesh(), cfg.samples_per_cell), &mut buf)?;
            emit(&cfg, std::str::from_utf8(&buf)?)
        }
        Command::Convergence { min_rate } => {
            let reference = run::reference(&cfg, &spec)?;
            let reports = run::error_grid(&cfg, &spec, &[cfg.mesh_spec()?], &reference, false)?;
            emit(&cfg, &convergence_csv(&reports))?;
            check_min("energy rate", &run::rates(&reports, |r| Some(r.energy_error)), min_rate)
        }
        Command::CompareMeshes { min_rate } => {
            let reference = run::reference(&cfg, &spec)?;
            let reports = run::error_grid(&cfg, &spec, &run::COMPARED_MESHES, &reference, false)?;
            emit(&cfg, &run::mesh_table_csv(&reports))?;
            check_min("energy rate", &run::rates(&reports, |r| Some(r.energy_error)), min_rate)
        }
        Command::Postprocess { min_rate } => {
            let reference = run::reference(&cfg, &spec)?;
            let reports = run::error_grid(&cfg, &spec, &[cfg.mesh_spec()?], &reference, true)?;
            emit(&cfg, &run::postprocess_csv(&reports))?;
            check_min("postprocessed rate", &run::rates(&reports, |r| r.postprocessed_energy), min_rate)
        }
        Command::Greens { max_rel_error, .. } => {
            let rows = run::greens_rows(&cfg)?;
            emit(&cfg, &run::check_rows_csv(&rows))?;
            if let Some(tol) = max_rel_error {
                let smallest = cfg.epsilons.iter().copied().fold(f64::INFINITY, f64::min);
                let bad: Vec<&str> = rows
                    .iter()
                    .filter(|r| r.epsilon == smallest && !(r.relative_error <= tol))
                    .map(|r| r.name.as_str())
                    .collect();
                if !bad.is_empty() {
                    return Err(CheckFailed(format!("rows above {tol} at ε = {smallest:e}: {}", bad.join("; "))).into());
                }
            }
            Ok(())
        }
        Command::Decompose { sweep, min_ratio } => {
            let s0 = run::reduced(&spec)?;
            let first = run::decompose(&cfg, &spec, s0.clone())?;
            let summary = run::decompose_summary(&cfg, &spec, s0, &first, sweep)?;
            let xs = sample_points(first.solution.mesh(), cfg.samples_per_cell);
            let mut buf = Vec::new();
            write_components_csv(&first.decomposition, Some(&first.solution), &xs, &mut buf)?;
            let text = String::from_utf8(buf)? + &run::summary_lines(&summary);
            emit(&cfg, &text)?;
            check_min("comparison ratio", &[summary.ratio], min_ratio)
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<CheckFailed>().is_some() {
        return 4;
    }
    let solver = e
        .chain()
        .any(|c| matches!(c.downcast_ref::<Error>(), Some(Error::Singular(_))));
    if solver {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
