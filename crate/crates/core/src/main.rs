use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use wiblock::config::{parse_raw, RawConfig, ScenarioConfig};
use wiblock::experiments::{
    render_tables, run_experiment, Engines, ExperimentName, ExperimentSpec, SweepAxis,
};

/// Witness count used when no config file is given.
const DEFAULT_WITNESSES: usize = 2;

#[derive(Parser, Debug)]
#[command(
    name = "wiblock",
    version,
    about = "Two-tier wireless blockchain model and simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Maximum per-device generation rate against the number of witnesses.
    Fig5(RunArgs),
    /// Share of transactions handled by the global blockchain and by witnesses.
    Fig6(RunArgs),
    /// Mean global confirmation time against the per-device rate.
    Fig7a(RunArgs),
    /// Ledger sizes over a fixed horizon against the block size.
    Fig7b(RunArgs),
    /// Analytic predictions against one simulated deployment.
    Validate(RunArgs),
    /// Sweep any config parameter.
    Sweep {
        #[arg(long)]
        param: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Aligned tables and a JSON index for every CSV in a directory.
    Render {
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "analytic")]
    engines: String,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Simulated horizon in seconds.
    #[arg(long)]
    horizon: Option<f64>,
    /// Override one config key, `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Comma separated sweep values replacing the default grid.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
}

fn load_base(args: &RunArgs) -> Result<ScenarioConfig> {
    let mut raw: RawConfig = match &args.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_raw(&text)?
        }
        None => {
            let mut raw = RawConfig::default();
            raw.set("num_witnesses", &DEFAULT_WITNESSES.to_string())?;
            raw
        }
    };
    for o in &args.overrides {
        raw.apply_override(o)?;
    }
    Ok(raw.resolve()?)
}

fn build_spec(
    name: ExperimentName,
    args: &RunArgs,
    param: Option<String>,
) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::new(name, load_base(args)?, &args.out);
    spec.seed = args.seed;
    spec.engines = args.engines.parse::<Engines>()?;
    spec.reps = args.reps;
    spec.horizon_s = args.horizon;
    let param = param.or(name.sweep_param().map(str::to_string));
    if let (Some(param), Some(values)) = (param, args.values.clone()) {
        spec.sweep_axis = Some(SweepAxis { param, values });
    }
    Ok(spec)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let (name, args, param) = match cli.command {
        Command::Render { out } => {
            print!("{}", render_tables(&out)?);
            return Ok(ExitCode::SUCCESS);
        }
        Command::Fig5(a) => (ExperimentName::Fig5, a, None),
        Command::Fig6(a) => (ExperimentName::Fig6, a, None),
        Command::Fig7a(a) => (ExperimentName::Fig7a, a, None),
        Command::Fig7b(a) => (ExperimentName::Fig7b, a, None),
        Command::Validate(a) => (ExperimentName::Validate, a, None),
        Command::Sweep { param, run } => (ExperimentName::Sweep, run, Some(param)),
    };
    let spec = build_spec(name, &args, param)?;
    let report = run_experiment(&spec)?;
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    if report.failures.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    for f in &report.failures {
        eprintln!("point {} failed: {}", f.point, f.error);
    }
    Ok(ExitCode::from(2))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
