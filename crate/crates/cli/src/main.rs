mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CmdError, Context};
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "parallel-spectra",
    version,
    about = "Spectra, correspondence checks and parallel dynamics of Hamiltonian triples"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues of H, 𝓗 and 𝓗†.
    Spectrum(Common),
    /// Eigenvalues over a parameter range and real-to-complex transitions.
    Sweep(Common),
    /// Build ψ = φ + φ̃ for every shared real energy and check it.
    Verify(Common),
    /// Closed-form zero modes of the uniform (N = 4m+3) and SSH chains.
    ZeroModes(Common),
    /// Parallel evolution of a symmetrized Gaussian packet and its audit.
    Evolve(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
    /// Flag matched states in the spectrum and write matches.csv.
    #[arg(long = "match")]
    match_spectra: bool,
    /// Override a config field, e.g. `--set params.gamma=1.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

type Action = fn(&Context) -> Result<(), CmdError>;

fn run(command: Command) -> Result<(), CmdError> {
    let (common, action): (Common, Action) = match command {
        Command::Spectrum(c) => (c, commands::spectrum),
        Command::Sweep(c) => (c, commands::sweep),
        Command::Verify(c) => (c, commands::verify),
        Command::ZeroModes(c) => (c, commands::zero_modes),
        Command::Evolve(c) => (c, commands::evolve),
    };
    let cfg = RunConfig::load(&common.config, &common.overrides).map_err(|e| CmdError::Config(e.to_string()))?;
    let ctx = Context::new(cfg, common.output_dir, common.match_spectra)?;
    action(&ctx)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
