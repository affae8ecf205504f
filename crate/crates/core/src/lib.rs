//! Laplace eigenvalue bounds on flat and conformal tori.

pub mod bounds;
pub mod cli;
pub mod energy;
pub mod error;
pub mod flat_spectrum;
pub mod galerkin;
pub mod linalg;
pub mod moduli;
pub mod optimize;
pub mod scan;
pub mod sphere;
pub mod trial;
pub mod verify;
pub mod weight_expr;

pub use error::{Error, ExitCode, Result};
pub use moduli::TorusParams;
