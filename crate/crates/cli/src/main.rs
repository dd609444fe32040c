use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use optjam_cli::{parse_values, run, sweep, CliError, Overrides, SweepParam};

#[derive(Parser)]
#[command(name = "optjam", version, about = "Jamming-game experiments from JSON specs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Grid size (power of two).
    #[arg(long, global = true)]
    grid_points: Option<usize>,
    /// Grid half-width in signal units.
    #[arg(long = "grid-halfwidth", global = true)]
    grid_half_width: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use the decoder gain without the transmitter scale factor.
    #[arg(long, global = true)]
    strict_paper: bool,
    /// Output directory for the manifest and CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run { spec: PathBuf },
    /// Repeat an experiment over parameter values.
    Sweep {
        spec: PathBuf,
        /// One of beta, power_jam, power_tx, order.
        #[arg(long)]
        param: String,
        /// Comma-separated positive values.
        #[arg(long)]
        values: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        grid_points: cli.common.grid_points,
        grid_half_width: cli.common.grid_half_width,
        seed: cli.common.seed,
        strict_paper: cli.common.strict_paper,
        out: cli.common.out,
    };
    let result: Result<(), CliError> = match cli.command {
        Command::Run { spec } => run(&spec, &overrides).map(|m| {
            for (k, v) in &m.scalars {
                println!("{k} = {v}");
            }
        }),
        Command::Sweep { spec, param, values } => SweepParam::parse(&param)
            .and_then(|p| Ok((p, parse_values(&values)?)))
            .and_then(|(p, v)| sweep(&spec, p, &v, &overrides))
            .map(|csv| print!("{csv}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
