//! Exterior covariant calculus for curved Yang-Mills-Higgs gauge theory on
//! trivialized Lie algebra bundles.

pub mod error;
pub mod exprfield;
pub mod forms;
pub mod gauge;
pub mod liecore;
pub mod random;
pub mod redef;
pub mod tolerance;

pub use error::{Error, Result};
