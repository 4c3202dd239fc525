//! Simulation engine for non-local, anisotropic first-order macroscopic
//! crowd dynamics.
//!
//! The crate covers three layers:
//! - constitutive laws and perception: [`fundamental`], [`perception`],
//!   [`geometry`];
//! - solvers: the 1D non-local Godunov scheme with structural coupling
//!   ([`solver1d`], [`structure`]) and the 2D push-forward transport with
//!   potential-based navigation ([`potential`], [`solver2d`]);
//! - batch tooling: scenario files, run orchestration and CSV output
//!   ([`scenario`], [`runner`], [`compare`]), consumed by the `crowdflow`
//!   binary.
//!
//! Simulations run in nondimensional form: density is scaled by the jam
//! density, speed by the free speed and lengths by the walking-area size.

pub mod compare;
pub mod diagnostics;
pub mod error;
pub mod fundamental;
pub mod geometry;
pub mod output;
pub mod perception;
pub mod potential;
pub mod runner;
pub mod scenario;
pub mod series;
pub mod solver1d;
pub mod solver2d;
pub mod structure;

pub use error::{Error, Result};
