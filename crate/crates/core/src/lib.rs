//! Numerics for randomly perturbed k-term recurrences
//! `X_{n+1} = Φ₀(X_{n-k+1}, …, X_n) + θ_n (mod 2L)`.
//!
//! The recurrence is embedded as a piecewise expanding map `T_θ` on a
//! box `Ω ⊂ R^k`. The crate evaluates its transfer operators, discretizes
//! the averaged operator on a box grid and extracts the invariant density,
//! the spectral gap and correlation decay, with simulation cross-checks.

pub mod expr;
pub mod model;
pub mod numeric;
pub mod stats;
pub mod transfer;
pub mod ulam;
