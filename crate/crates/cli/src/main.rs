use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ioncavity::analysis::TimeSeries;
use ioncavity::config::ToolConfig;
use ioncavity::md::io::write_trajectory;
use ioncavity::optimizer::write_sweep_csv;
use ioncavity::{Error, Result};
use serde::Serialize;

mod reports;
mod table;

use reports::FitKind;
use table::Table;

/// Design calculations for an ion trap with an integrated optical cavity.
#[derive(Parser, Debug)]
#[command(name = "ioncavity", version)]
struct Cli {
    /// TOML configuration; built-in apparatus defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Print the result as JSON instead of a table.
    #[arg(long, global = true)]
    json: bool,

    /// Data file: sweep grid CSV, trajectory CSV, or the JSON result for
    /// the other commands.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Random seed for simulations (overrides md.seed).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Secular frequencies, Mathieu q and density at the [voltages] setting.
    TrapParams,
    /// Shape of the configured crystal.
    Crystal,
    /// Cavity finesse, linewidth, waist and single-ion coupling.
    Cavity,
    /// Ions in the cavity mode and collective coupling for the crystal.
    IonsInMode {
        /// Use the trap-shaped crystal even when a length is configured.
        #[arg(long)]
        model_length: bool,
    },
    /// Maximise ions in the mode over the voltage grid.
    Sweep,
    /// Molecular dynamics of the [md] crystal.
    Simulate,
    /// Straight-line fit of a `t_s,value[,sigma]` CSV file.
    Fit {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "linear")]
        kind: FitKind,
        /// Weight by 1/sigma^2 (needs the sigma column).
        #[arg(long)]
        weighted: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(reports::exit_code(&e))
        }
    }
}

fn load_config(cli: &Cli) -> Result<ToolConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ToolConfig::from_file(path)?,
        None => ToolConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.md.seed = seed;
    }
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))
}

/// Writes `report` to stdout as JSON or a table, and as JSON to `json_file`.
fn emit<R: Serialize + Table>(report: &R, json: bool, json_file: Option<&Path>) -> Result<()> {
    if let Some(path) = json_file {
        let mut f = create(path)?;
        serde_json::to_writer_pretty(&mut f, report)?;
        writeln!(f)?;
        f.flush()?;
    }
    let mut stdout = io::stdout().lock();
    if json {
        serde_json::to_writer_pretty(&mut stdout, report)?;
        writeln!(stdout)?;
    } else {
        write!(stdout, "{}", table::render(&report.lines()))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::TrapParams => emit(&reports::trap_params(&cfg)?, cli.json, out),
        Command::Crystal => emit(&reports::crystal_report(&cfg)?, cli.json, out),
        Command::Cavity => emit(&reports::cavity_summary(&cfg)?, cli.json, out),
        Command::IonsInMode { model_length } => {
            emit(&reports::ions_in_mode_report(&cfg, *model_length)?, cli.json, out)
        }
        Command::Sweep => {
            let result = reports::run_sweep(&cfg)?;
            if let Some(path) = out {
                let mut f = create(path)?;
                write_sweep_csv(&result, &mut f)?;
                f.flush()?;
            }
            emit(&result.summary(), cli.json, None)
        }
        Command::Simulate => {
            let (report, traj) = reports::simulate(&cfg)?;
            if let Some(path) = out {
                let mut f = create(path)?;
                write_trajectory(&traj, &mut f)?;
                f.flush()?;
            }
            emit(&report, cli.json, None)
        }
        Command::Fit { input, kind, weighted } => {
            let file = File::open(input).map_err(|e| Error::InvalidParameter(format!("{}: {e}", input.display())))?;
            let series = TimeSeries::from_csv(file)?;
            emit(&reports::fit_report(&series, *kind, *weighted)?, cli.json, out)
        }
    }
}
