use thiserror::Error;

/// Errors shared by all simulation backends.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter lies outside its physical domain (non-positive β, ω, γ, negative time, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation received a state with the wrong number of modes.
    #[error("mode-count mismatch: expected {expected} mode(s), got {got}")]
    ModeCount { expected: usize, got: usize },

    /// A covariance matrix violates the uncertainty relation.
    #[error("unphysical state: symplectic eigenvalue {nu} below 1/2")]
    Unphysical { nu: f64 },

    /// The Fock truncation is too small for the requested dynamics.
    #[error(
        "Fock truncation inadequate at dim {dim} (top-level population {population:.3e}); retry with dim >= {required}"
    )]
    Truncation {
        dim: usize,
        population: f64,
        required: usize,
    },

    /// Two matrices (or a matrix and a state) have incompatible dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A perturbative-regime constraint was violated.
    #[error("regime violation: {0}")]
    Regime(String),

    /// Two routes that must agree disagreed beyond tolerance.
    #[error("internal consistency failure: {0}")]
    Inconsistency(String),

    /// Cycle sign pattern matching no operational region (should not occur).
    #[error(
        "cycle sign pattern matches no operational region: W_out={w_out:.6e}, Q_BC={q_bc:.6e}, Q_DA={q_da:.6e}"
    )]
    InfeasibleRegion { w_out: f64, q_bc: f64, q_da: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
