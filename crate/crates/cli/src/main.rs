use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use dynatomo_cli::commands::{self, Overriding};
use dynatomo_cli::config::{self, ExperimentConfig};
use dynatomo_cli::report::{self, Report};
use dynatomo_cli::CliError;

#[derive(Parser)]
#[command(name = "dynatomo", version, about = "Dynamical quantum state tomography simulator")]
struct Cli {
    /// Master seed; overrides the config. Falls back to DYNATOMO_SEED.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Shots per time instant (0 = exact probabilities); overrides the config.
    #[arg(long, global = true)]
    shots: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Write only the JSON report.
    #[arg(long, global = true)]
    json_only: bool,
    /// Record wall-clock time in the report (makes it non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the protocol named in a config file.
    Run { config: PathBuf },
    /// Rebuild the nine-vector qutrit example and diff against the golden files.
    #[command(name = "example-4-8")]
    Example48,
    /// Check the Weyl–Heisenberg basis identities in dimension d.
    WhDemo {
        #[arg(long)]
        d: usize,
    },
    /// Frame operator, rank and canonical POVM of a projector family.
    IcCheck { config: PathBuf },
    /// Verify the built-in SIC fiducial and its Gram determinant.
    SicVerify {
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
        d: u8,
    },
    /// Recover SIC probabilities from a single-projector time series.
    SicSimulate { config: PathBuf },
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var("DYNATOMO_SEED") {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| CliError::Schema {
            pointer: "DYNATOMO_SEED".into(),
            message: format!("{s:?} is not a 64-bit unsigned integer"),
        }),
        Err(_) => Ok(None),
    }
}

fn load(path: &Path, expect: Option<config::ProtocolKind>) -> Result<ExperimentConfig, CliError> {
    let cfg = config::load_config(path)?;
    if let Some(p) = expect {
        if cfg.protocol != p {
            return Err(CliError::Schema {
                pointer: "/protocol".into(),
                message: format!("this subcommand needs protocol \"{p}\", found \"{}\"", cfg.protocol),
            });
        }
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(String, Option<ExperimentConfig>, Report), CliError> {
    let ov = Overriding {
        seed: cli.seed,
        shots: cli.shots,
        fallback_seed: env_seed()?,
    };
    Ok(match &cli.command {
        Command::Run { config } => {
            let cfg = load(config, None)?;
            let rep = commands::run(&cfg, ov)?;
            (cfg.protocol.to_string(), Some(cfg), rep)
        }
        Command::Example48 => {
            let rep = commands::example48(ov.bare_seed(), cli.shots.unwrap_or(0))?;
            ("example-4-8".into(), None, rep)
        }
        Command::WhDemo { d } => ("wh-demo".into(), None, commands::wh_demo(*d, ov.bare_seed())?),
        Command::IcCheck { config } => {
            let cfg = load(config, Some(config::ProtocolKind::IcCheck))?;
            let rep = commands::ic_check(&cfg, ov)?;
            ("ic-check".into(), Some(cfg), rep)
        }
        Command::SicVerify { d } => ("sic-verify".into(), None, commands::sic_verify(*d as usize, ov.bare_seed())?),
        Command::SicSimulate { config } => {
            let cfg = load(config, Some(config::ProtocolKind::SicSimulate))?;
            let rep = commands::sic_simulate(&cfg, ov)?;
            ("sic-simulate".into(), Some(cfg), rep)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = execute(&cli).and_then(|(stem, cfg, mut rep)| {
        if cli.timing {
            rep.json["wall_clock_seconds"] = start.elapsed().as_secs_f64().into();
        }
        let output = cfg.and_then(|c| c.output).unwrap_or_default();
        let json_path = cli.out_dir.join(output.json.unwrap_or_else(|| format!("{stem}.json")));
        let csv_path = cli.out_dir.join(output.csv.unwrap_or_else(|| format!("{stem}.csv")));
        let csv = (!cli.json_only).then_some(csv_path.as_path());
        for p in report::emit_report(&rep, &json_path, csv)? {
            println!("{}", p.display());
        }
        match rep.failure {
            Some(e) => Err(e),
            None => Ok(()),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
