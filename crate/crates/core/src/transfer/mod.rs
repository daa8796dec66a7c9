//! Inverse branches of `T_θ`, the per-`θ` and averaged transfer operators,
//! and the Lasota–Yorke constants.

mod branches;
mod lasota_yorke;
mod operator;

use thiserror::Error;

use crate::expr::ExprError;
use crate::model::ModelError;
use crate::numeric::RootError;

pub use branches::{enumerate_branches, inverse_branch, Branch, FiberSolver};
pub use lasota_yorke::{eta_bar, lasota_yorke_constants, LYConstants};
pub use operator::{
    apply_transfer_averaged, apply_transfer_theta, integrate_transfer, linf_factor,
    AveragedOperator, MassCheck,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransferError {
    #[error("point outside the domain: {0}")]
    OutsideDomain(String),
    #[error("degenerate branch: {0}")]
    Degenerate(String),
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("no eps0 above 1e-12 gives eta < 1: {0}")]
    NoContraction(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Root(#[from] RootError),
}

/// A real function on `Ω`, evaluated at embedded points `u`.
pub trait Observable: Sync {
    fn at(&self, u: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64 + Sync> Observable for F {
    #[inline]
    fn at(&self, u: &[f64]) -> f64 {
        self(u)
    }
}
