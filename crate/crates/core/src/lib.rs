//! Design and verification of the DC-bus voltage loop of single-phase
//! grid-connected voltage source converters.
//!
//! The crate tunes the conventional PI loop and the PI plus first-order
//! low-pass loop (extended symmetrical optimum), predicts line-current
//! third-harmonic content and bus-voltage transients from the closed-loop
//! transfer functions, and checks those predictions against a nonlinear
//! averaged converter simulation with DFT harmonic analysis.
//!
//! Modules, bottom-up:
//!
//! - [`lti`]: polynomial transfer functions, Bode data, margins, step responses
//! - [`design`]: plant parameters and controller gain design
//! - [`performance`]: analytic metrics (third harmonic, bus-voltage excursion, ITAE, robustness)
//! - [`sim`]: time-domain converter simulation with a discrete voltage controller
//! - [`harmonics`]: DFT harmonic analysis of simulated waveforms
//! - [`scenario`]: scenario config files and the four reference design examples

// `!(x > 0.0)` style guards are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod error;
pub mod format;
pub mod harmonics;
pub mod lti;
pub mod performance;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
