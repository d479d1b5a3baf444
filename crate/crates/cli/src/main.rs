use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hps_cli::{run, CliError, RunConfig};

/// Spectral collocation direct solver on box partitions.
///
/// Settings come from built-in defaults, then `--config`, then flags.
#[derive(Parser, Debug)]
#[command(name = "hps", version)]
struct Args {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// poisson_green, helmholtz_green, gravity_helmholtz, curved_helmholtz,
    /// heat_manufactured or convection_diffusion.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long)]
    amplitude: Option<String>,
    #[arg(long)]
    frequency: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    /// Comma-separated lower corner of the domain.
    #[arg(long, allow_hyphen_values = true)]
    domain_lo: Option<String>,
    /// Comma-separated upper corner of the domain.
    #[arg(long, allow_hyphen_values = true)]
    domain_hi: Option<String>,
    /// Leaves per axis: `4` or `4x2x2`; a comma list for sweeps.
    #[arg(long)]
    boxes: Option<String>,
    /// Nodes per leaf side; a comma list for sweeps.
    #[arg(long)]
    p: Option<String>,
    /// auto, drop or legendre.
    #[arg(long)]
    corner_mode: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    resident_limit: Option<String>,
    /// Bytes, with optional K, M or G suffix.
    #[arg(long)]
    memory_budget: Option<String>,
    /// discard or keep.
    #[arg(long)]
    cache: Option<String>,
    /// solve, sweep, bench, timestep or oracle-check.
    #[arg(long)]
    mode: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Also compare with the dense full-system solve.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    oracle: Option<String>,
    /// Write node values as CSV.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    write_nodes: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    snapshot_stride: Option<String>,
    /// Repeat a time-stepping run this many times with dt halved.
    #[arg(long)]
    dt_halvings: Option<String>,
    #[arg(long)]
    trials: Option<String>,
}

impl Args {
    fn overrides(&self) -> Vec<(&'static str, &String)> {
        let all = [
            ("problem", &self.problem),
            ("kappa", &self.kappa),
            ("amplitude", &self.amplitude),
            ("frequency", &self.frequency),
            ("dim", &self.dim),
            ("domain_lo", &self.domain_lo),
            ("domain_hi", &self.domain_hi),
            ("boxes", &self.boxes),
            ("p", &self.p),
            ("corner_mode", &self.corner_mode),
            ("workers", &self.workers),
            ("batch_size", &self.batch_size),
            ("resident_limit", &self.resident_limit),
            ("memory_budget", &self.memory_budget),
            ("cache", &self.cache),
            ("mode", &self.mode),
            ("out", &self.out),
            ("oracle", &self.oracle),
            ("write_nodes", &self.write_nodes),
            ("dt", &self.dt),
            ("steps", &self.steps),
            ("snapshot_stride", &self.snapshot_stride),
            ("dt_halvings", &self.dt_halvings),
            ("trials", &self.trials),
        ];
        all.into_iter().filter_map(|(k, v)| v.as_ref().map(|v| (k, v))).collect()
    }
}

fn configure(args: &Args) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    for (k, v) in args.overrides() {
        cfg.set(k, v).map_err(|e| CliError::Config(format!("--{}: {e}", k.replace('_', "-"))))?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = configure(&args).and_then(|cfg| run(&cfg));
    match result {
        Ok(summary) => {
            for l in &summary.lines {
                println!("{l}");
            }
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hps: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
