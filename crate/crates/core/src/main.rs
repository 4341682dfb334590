use clap::{Args, Parser, Subcommand};
use ksobs::commands::{self, Context};
use ksobs::config::{GridSpec, RunConfig};
use ksobs::exec::{with_jobs, Exec};
use ksobs::Result;
use std::path::PathBuf;
use std::process::ExitCode;

/// Sampled-data observer design, certification and simulation for the linear
/// Kuramoto-Sivashinsky equation.
#[derive(Parser)]
#[command(name = "ksobs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Modal data, observer gain, closed-loop spectrum and observability checks.
    Design(Common),
    /// Maximum allowable sampling period as a function of the predictor parameter.
    Masp {
        #[command(flatten)]
        common: Common,
        /// Predictor-parameter grid `lo:hi:step`, or a single value.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<GridSpec>,
    },
    /// IOS certificate for the configured period and predictor parameter.
    Certify(Common),
    /// Hybrid simulation and verification of the error estimates.
    Simulate(Common),
    /// Finite-difference cross-check of the spectral solver.
    Oracle(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, env = "KSOBS_OUT")]
    out: Option<PathBuf>,
    /// Overrides `simulation.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

impl Common {
    fn context(&self) -> Result<Context> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.set_seed(seed);
        }
        let out = commands::output_dir(self.out.as_deref(), &cfg);
        let exec = if self.jobs == 1 { Exec::Sequential } else { Exec::Parallel };
        Context::new(cfg, out, exec)
    }
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Design(c) => commands::cmd_design(&c.context()?),
        Command::Masp { common, grid } => commands::cmd_masp(&common.context()?, *grid).map(drop),
        Command::Certify(c) => commands::cmd_certify(&c.context()?).map(drop),
        Command::Simulate(c) => commands::cmd_simulate(&c.context()?).map(drop),
        Command::Oracle(c) => commands::cmd_oracle(&c.context()?).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = match &cli.command {
        Command::Design(c) | Command::Certify(c) | Command::Simulate(c) | Command::Oracle(c) => c.jobs,
        Command::Masp { common, .. } => common.jobs,
    };
    match with_jobs(jobs, || dispatch(&cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
