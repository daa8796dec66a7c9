//! Small numerical building blocks shared by the other modules.

pub mod quadrature;
pub mod roots;

pub use quadrature::CompositeRule;
pub use roots::{bisect, newton_bracketed, RootError};
