//! Truncated-Fock-space simulation of multimode optical fields with a catalog
//! of entanglement indicators derived from multi-qudit witnesses.
//!
//! The crate builds finite photon-number truncations of multimode bosonic
//! spaces, the Stokes / intensity-rate observables measured behind multiport
//! interferometers, analytic squeezed-vacuum families and their noise and loss
//! models, and the machinery that maps qudit-pair entanglement witnesses to
//! field indicators (and back, through Gram matrices).

pub mod channels;
pub mod error;
pub mod fock;
pub mod modes;
pub mod observables;
pub mod states;

pub use error::{Error, Result};
pub use fock::{EnsembleState, ModeIndex, OccState, Party, PartyLayout, PureState};
