mod evolve;
mod spectrum;
mod sweep;
mod verify;
mod zero_modes;

use std::path::PathBuf;

use parallel_spectra::lattice::{build_triple, HamiltonianTriple};
use parallel_spectra::Error;

use crate::config::RunConfig;
use crate::output::OutputDir;

pub use evolve::run as evolve;
pub use spectrum::run as spectrum;
pub use sweep::run as sweep;
pub use verify::run as verify;
pub use zero_modes::run as zero_modes;

#[derive(Debug, thiserror::Error)]
pub enum CmdError {
    /// Exit code 2.
    #[error("{0}")]
    Config(String),
    /// Exit code 1; outputs may have been written.
    #[error("{0}")]
    Failure(String),
}

impl CmdError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CmdError::Config(_) => 2,
            CmdError::Failure(_) => 1,
        }
    }
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpec(_)
            | Error::Symmetry(_)
            | Error::Domain(_)
            | Error::Constraint(_)
            | Error::DimensionMismatch { .. } => CmdError::Config(e.to_string()),
            _ => CmdError::Failure(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Failure(format!("write failed: {e}"))
    }
}

pub struct Context {
    pub cfg: RunConfig,
    pub out: OutputDir,
    pub match_spectra: bool,
}

impl Context {
    pub fn new(cfg: RunConfig, out_dir: PathBuf, match_spectra: bool) -> Result<Self, CmdError> {
        let out = OutputDir::create(&out_dir)
            .map_err(|e| CmdError::Config(format!("cannot create {}: {e}", out_dir.display())))?;
        Ok(Context { cfg, out, match_spectra })
    }

    pub fn triple(&self) -> Result<HamiltonianTriple, CmdError> {
        Ok(build_triple(&self.cfg.model_spec(), self.cfg.coupling())?)
    }

    pub fn write_metadata(&self, command: &str) -> Result<(), CmdError> {
        self.out.write_json("run.json", &crate::output::run_metadata(command, &self.cfg))?;
        Ok(())
    }
}
