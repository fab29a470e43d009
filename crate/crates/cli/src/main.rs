mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ctg::integrator::StepMode;
use ctg::verify::Fault;
use ctg::CtgError;

use config::{Overrides, RunConfig};

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self { code: 2, message: msg.into() }
    }

    pub fn failure(msg: impl Into<String>) -> Self {
        Self { code: 1, message: msg.into() }
    }
}

impl From<CtgError> for CliError {
    fn from(e: CtgError) -> Self {
        match e {
            CtgError::Argument(_) | CtgError::Dimension { .. } | CtgError::Parse { .. } | CtgError::Io(_) => {
                Self::usage(e.to_string())
            }
            _ => Self::failure(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "ctg", version, about = "Continuous time Galerkin integration of linear ODE systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a problem and write its nodal values as CSV.
    Run(RunArgs),
    /// Measure temporal convergence under dyadic step refinement.
    Convergence {
        #[command(flatten)]
        run: RunArgs,
        /// Also write a JSON report.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Exit with status 1 unless the finest orders are within 0.25 of 2r and r+1.
        #[arg(long)]
        check: bool,
    },
    /// Run the self-check suite.
    Verify {
        #[arg(long, default_value_t = 8)]
        max_order: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, value_enum)]
        inject_fault: Option<FaultArg>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Tabulate Padé numerator zeros.
    PadeTable {
        #[arg(long, default_value_t = 12)]
        max_order: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the exact minor polynomials of the stiffness symbol.
    MinorTable {
        #[arg(long)]
        order: usize,
        /// Use direct cofactor expansion instead of the recurrences.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Suggest orders minimizing sequential wall time for mesh size h.
    Advise {
        #[arg(long)]
        h: f64,
        /// Spatial order of accuracy.
        #[arg(long, default_value_t = 1)]
        p: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    CorruptMinorTable,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Spectral,
    Dissipative,
    PadeForm,
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem name: random, convection-diffusion, heat, wave, mass-matrix.
    #[arg(long)]
    problem: Option<String>,
    /// Problem parameter as key=value (repeatable).
    #[arg(long = "param")]
    params: Vec<String>,
    #[arg(long, short = 'r')]
    order: Option<usize>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Number of uniform steps (initial count for convergence studies).
    #[arg(long, short = 'n')]
    steps: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    refinements: Option<usize>,
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    threads: Option<usize>,
    /// Matrix Market file for D.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Matrix Market file for the mass matrix.
    #[arg(long)]
    mass: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig, CliError> {
        let cfg = RunConfig::load(self.config.as_deref())?;
        let mode = self.mode.map(|m| match m {
            ModeArg::Spectral => StepMode::Spectral,
            ModeArg::Dissipative => StepMode::Dissipative,
            ModeArg::PadeForm => StepMode::PadeForm,
        });
        cfg.apply(Overrides {
            problem: self.problem,
            params: self.params,
            order: self.order,
            t_end: self.t_end,
            steps: self.steps,
            tau: self.tau,
            mode,
            refinements: self.refinements,
            output: self.output,
            seed: self.seed,
            threads: self.threads,
            matrix: self.matrix,
            mass: self.mass,
        })
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => commands::run(&args.resolve()?),
        Command::Convergence { run, json, check } => commands::convergence(&run.resolve()?, json.as_deref(), check),
        Command::Verify { max_order, seed, instances, inject_fault, json } => {
            let fault = inject_fault.map(|f| match f {
                FaultArg::CorruptMinorTable => Fault::CorruptMinorTable,
            });
            commands::verify(max_order, seed, instances, fault, json.as_deref())
        }
        Command::PadeTable { max_order, output } => commands::pade_table(max_order, output.as_deref()),
        Command::MinorTable { order, oracle, output } => commands::minor_table(order, oracle, output.as_deref()),
        Command::Advise { h, p } => commands::advise(h, p),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
