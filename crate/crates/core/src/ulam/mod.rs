//! Ulam discretization of the averaged operator on a box grid over `Ω`.

mod assembly;
mod grid;
pub mod io;
mod matrix;
mod spectral;

use thiserror::Error;

use crate::model::ModelError;
use crate::transfer::TransferError;

pub use assembly::{
    assemble_ulam, assemble_with, strategies, Assembly, AssemblyOptions, AssemblyStrategy,
    CdfStrategy, MonteCarloStrategy, QuadratureStrategy, StrategyRegistry,
};
pub use grid::{build_grid, build_grid_limited, DensityGrid, Grid, MAX_BOXES};
pub use matrix::{StochasticMatrix, ROW_DRIFT_TOLERANCE};
pub use spectral::{
    spectral_report, stationary_density, subdominant_modulus, SpectralReport, Stationary,
    StationaryOptions, Subdominant, SubdominantOptions,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UlamError {
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
}

impl From<std::io::Error> for UlamError {
    fn from(e: std::io::Error) -> Self {
        UlamError::Io(e.to_string())
    }
}
