use thiserror::Error;

/// Errors produced by the analysis, design and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("denominator polynomial is zero")]
    ZeroDenominator,

    #[error("transfer function is improper (numerator degree {num} > denominator degree {den})")]
    Improper { num: usize, den: usize },

    #[error("transfer function has a pole on the imaginary axis at omega = {omega} rad/s")]
    PoleOnAxis { omega: f64 },

    #[error("no gain crossover found in [{lo:e}, {hi:e}] rad/s")]
    NoCrossover { lo: f64, hi: f64 },

    #[error("step response diverged (|y| = {magnitude:e} at t = {t} s)")]
    Unstable { t: f64, magnitude: f64 },

    #[error("step response did not converge under dt refinement (last relative peak change {change:e})")]
    NoConvergence { change: f64 },

    #[error("target {target} is not bracketed: |G_vl| spans [{lo}, {hi}] over the search interval")]
    NotBracketed { target: f64, lo: f64, hi: f64 },

    #[error("simulation diverged after t = {t} s, the last valid state: {reason}")]
    Divergence { t: f64, reason: String },

    #[error("invalid analysis window: {0}")]
    Window(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
