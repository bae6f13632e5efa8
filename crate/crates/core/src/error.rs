use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of a design or model equation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The shunt-capacitor equation has a pole at Q = 2.08.
    #[error("shunt capacitor equation is singular for Q <= 2.08 (got Q = {q})")]
    Singularity { q: f64 },

    /// The load presented to the circuit is not passive.
    #[error("non-passive load: real part {re} ohm must be positive")]
    NonPassiveLoad { re: f64 },

    /// A model could not be assembled from its parameters.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Fixed-step integration grew without bound.
    #[error(
        "integration unstable after {step} steps (state norm {norm:e}); \
         increase steps_per_cycle (currently {steps_per_cycle})"
    )]
    Unstable {
        step: usize,
        norm: f64,
        steps_per_cycle: usize,
    },

    /// The cycle map diverged while searching for a periodic solution.
    #[error("periodic steady-state search diverged: {0}")]
    Divergent(String),

    /// Metrics are internally inconsistent.
    #[error("inconsistent metrics: {0}")]
    Inconsistent(String),

    /// The requested output power cannot be produced below regulator clipping.
    #[error(
        "requested {pmax_w} W needs vcon = {vcon_needed} V, above the regulator \
         headroom limit of {vcon_limit} V"
    )]
    Headroom {
        pmax_w: f64,
        vcon_needed: f64,
        vcon_limit: f64,
    },

    /// The bias network cannot null its temperature coefficient.
    #[error("no temperature-compensating r5 exists: {0}")]
    NoCompensation(String),

    /// A precondition of an operation was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Configuration text could not be parsed.
    #[error("config parse error: {0}")]
    ConfigParse(String),

    /// A configuration value failed validation.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
