use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use attitude_core::sim::{
    emit_metrics, run_scenario, write_csv, write_json, MetricsRecord, OutputFormat, ScenarioConfig, ScenarioRun,
    SimError,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

/// Attitude estimation with uncertainty ellipsoids.
#[derive(Parser)]
#[command(name = "estimate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check a config file and report the initial quadratic form.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the built-in spacecraft scenario.
    #[command(name = "demo-sectionV")]
    Demo {
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
struct OutputArgs {
    /// Seed for the sensor noise, overriding the config.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Half-open seed range `N..M`, run in parallel.
    #[arg(long, value_parser = parse_seed_range)]
    seeds: Option<Range<u64>>,
    /// Output directory; without it a single run is written to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Draw sensor noise on the boundary of its bound.
    #[arg(long)]
    boundary_noise: bool,
    /// Write every integration step instead of the initial and fused estimates.
    #[arg(long)]
    emit_predicted: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
            Format::Both => OutputFormat::Both,
        }
    }
}

fn parse_seed_range(s: &str) -> Result<Range<u64>, String> {
    let (a, b) = s.split_once("..").ok_or("expected N..M")?;
    let start: u64 = a.trim().parse().map_err(|_| format!("`{a}` is not a seed"))?;
    let end: u64 = b.trim().parse().map_err(|_| format!("`{b}` is not a seed"))?;
    if start >= end {
        return Err(format!("empty seed range {s}"));
    }
    Ok(start..end)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, output } => ScenarioConfig::load(&config).and_then(|cfg| run(cfg, &output)),
        Command::Validate { config } => validate(&config),
        Command::Demo { output } => run(ScenarioConfig::spacecraft(), &output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn validate(path: &Path) -> Result<(), SimError> {
    let cfg = ScenarioConfig::load(path)?;
    cfg.validate()?;
    println!(
        "ok: {} steps, {} measurements, x0' P0^-1 x0 = {:.4}",
        cfg.steps(),
        cfg.n_measurements,
        cfg.initial_quadratic_form()?
    );
    Ok(())
}

fn run(mut cfg: ScenarioConfig, args: &OutputArgs) -> Result<(), SimError> {
    cfg.boundary_noise |= args.boundary_noise;
    let seeds = match (&args.seeds, args.seed) {
        (Some(range), _) => range.clone(),
        (None, Some(seed)) => seed..seed + 1,
        (None, None) => cfg.seed..cfg.seed + 1,
    };
    if seeds.end - seeds.start > 1 && args.out.is_none() {
        return Err(SimError::Config("--seeds needs --out".into()));
    }
    cfg.validate()?;

    let runs = seeds
        .into_par_iter()
        .map(|seed| run_scenario(&cfg.clone().with_seed(seed)))
        .collect::<Result<Vec<_>, _>>()?;

    for run in &runs {
        report(run);
        let records = select(run, args.emit_predicted);
        match &args.out {
            Some(dir) => {
                emit_metrics(&records, run.seed, args.format.into(), dir, &format!("seed_{}", run.seed))?;
            }
            None => write_stdout(&records, run.seed, args.format)?,
        }
    }
    Ok(())
}

fn select(run: &ScenarioRun, all: bool) -> Vec<MetricsRecord> {
    if all {
        run.records.clone()
    } else {
        run.fused_records()
    }
}

fn write_stdout(records: &[MetricsRecord], seed: u64, format: Format) -> Result<(), SimError> {
    let stdout = std::io::stdout().lock();
    let io = |source| SimError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    };
    match format {
        Format::Csv => write_csv(records, stdout).map_err(io),
        Format::Json => write_json(records, seed, stdout).map_err(io),
        Format::Both => Err(SimError::Config("--format both needs --out".into())),
    }
}

fn report(run: &ScenarioRun) {
    let last = run.terminal();
    let mut err = std::io::stderr().lock();
    for d in &run.diagnostics {
        let _ = writeln!(err, "seed {}: {d:?}", run.seed);
    }
    let _ = writeln!(
        err,
        "seed {}: terminal attitude error {:.3} deg, angular velocity error {:.4}, trace P {:.4e}, contained {}",
        run.seed,
        last.zeta_norm_deg,
        last.domega_norm,
        last.trace_p,
        run.always_contained(),
    );
}
