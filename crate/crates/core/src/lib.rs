//! Variational solver and free-boundary analysis for vector Allen-Cahn
//! energies `J(u) = int 1/2 |grad u|^2 + W(u)` with subquadratic multi-well
//! potentials.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments
)]

pub mod census;
pub mod cli;
pub mod error;
pub mod exec;
pub mod grid;
pub mod interface;
pub mod minimizer;
pub mod monotonicity;
pub mod potential;
pub mod snapshot;

pub use error::{Error, Result};
pub use exec::Exec;
pub use grid::{GridSpec, InitMode, VectorField};
pub use potential::{Potential, SingularityPolicy};
