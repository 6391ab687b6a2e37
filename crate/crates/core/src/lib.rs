//! Simulation of a cw-pumped, type-II periodically poled KTP source of
//! frequency anti-correlated photon pairs at 1560 nm.

pub mod cli;
pub mod config;
pub mod dispersion;
pub mod export;
pub mod hom;
pub mod jsa;
pub mod phasematch;
pub mod shg;
pub mod units;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Dispersion(#[from] dispersion::DispersionError),
    #[error(transparent)]
    PhaseMatch(#[from] phasematch::PhaseMatchError),
    #[error(transparent)]
    Jsa(#[from] jsa::JsaError),
    #[error(transparent)]
    Hom(#[from] hom::HomError),
    #[error(transparent)]
    Shg(#[from] shg::ShgError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    /// 1 for configuration and I/O problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io { .. } => 1,
            _ => 2,
        }
    }
}
