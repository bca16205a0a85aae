//! Relative domination toolkit: cusped spaces of relatively hyperbolic groups,
//! the projection and reparametrization calculus for their geodesics, checks of
//! the relative domination inequalities for matrix representations, and
//! certified dominated splittings of matrix sequences.

pub mod cusped;
pub mod error;
pub mod gallery;
pub mod group;
pub mod lemmas;
pub mod path;
pub mod linalg;
pub mod report;
pub mod splitting;
pub mod verifier;

pub use error::{Error, Result};
