//! Simulation of the recurrence and statistics of its stationary regime.

mod decay;
mod ly_check;
mod marginal;
mod seminorm;
mod simulate;
mod skew;

use thiserror::Error;

use crate::model::ModelError;
use crate::transfer::TransferError;
use crate::ulam::UlamError;

pub use decay::{correlation_decay, DecayFit};
pub use ly_check::{lasota_yorke_check, LYCheckRow};
pub use marginal::{empirical_vs_stationary, marginal_density, EmpiricalComparison, Marginal1D};
pub use seminorm::{
    osc_seminorm, seminorm_nodes, small_eps_seminorm, small_eps_seminorm_from_samples,
    SeminormEstimate, SmallEpsSeminorm,
};
pub use simulate::{simulate_process, simulate_stream, Trajectory, EMBEDDING_TOLERANCE};
pub use skew::{skew_product_check, SkewCheck};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Ulam(#[from] UlamError),
}
