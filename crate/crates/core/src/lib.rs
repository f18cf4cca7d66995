//! Numerics for age-structured reliability models whose boundary and initial
//! data carry Dirac masses.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line
//! and parallel drivers live in the `svtk` companion crate.
//!
//! Modules, roughly bottom-up:
//!
//! - [`rate`], [`model`], [`state`], [`convention`]: shared domain types.
//! - [`closed_form`]: exact solution of the constant-rate processing/repair model.
//! - [`transform`] and [`invert`]: Laplace-domain fields for general hazards
//!   and their numerical inversion in time.
//! - [`solver`]: characteristics solver for any [`model::TransportModel`].
//! - [`montecarlo`]: trajectory simulation of the underlying process.
//! - [`registry`]: builders for the named models.
#![no_std]
#![forbid(unsafe_code)]
// `Float` supplies the libm-backed methods; when std is anywhere in the
// build graph its inherent float methods win and the import looks unused.
#![allow(unused_imports)]

extern crate alloc;

pub mod closed_form;
pub mod convention;
pub mod error;
pub mod invert;
pub mod model;
pub mod montecarlo;
pub mod quadrature;
pub mod rate;
pub mod registry;
pub mod report;
pub mod solver;
pub mod state;
pub mod transform;

pub use convention::MassConvention;
pub use error::{Error, Result};
pub use model::{Entry, LiCaoRates, TransportModel};
pub use rate::RateFunction;
pub use state::{Atom, Grid, MeasureState};

pub use num_complex::Complex64;
