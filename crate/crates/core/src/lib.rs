//! Semi-classical self-organization of atoms in a two-mode optical cavity.
//!
//! The crate integrates the stochastic equations of motion of N atoms coupled
//! to two commensurate cavity modes (wave numbers k and 2k), either with the
//! cavity fields adiabatically eliminated ([`dynamics::adiabatic`]) or kept as
//! dynamical variables ([`dynamics::field`]). Ensembles of trajectories run
//! under configurable pump protocols ([`protocol`]) and are reduced to the
//! statistics in [`observables`]. The mean-field free energy in [`meanfield`]
//! predicts the stationary phases the dynamics relaxes to.
//!
//! All quantities use the internal unit system of [`units`].

pub mod config;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod meanfield;
pub mod model;
pub mod observables;
pub mod output;
pub mod params;
pub mod protocol;
pub mod state;
pub mod units;

pub use error::{Error, Result};
pub use params::SystemParams;
pub use protocol::{Protocol, ProtocolKind};
pub use state::{EnsembleState, FieldState};
