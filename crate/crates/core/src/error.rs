use thiserror::Error;

use crate::material::SoilState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range user input.
    #[error("invalid input: {0}")]
    Input(String),

    /// A formula was evaluated outside its domain of definition.
    #[error("domain error: {0}")]
    Domain(String),

    /// The dilatancy rule is singular at zero stress ratio.
    #[error("flow rule undefined at stress ratio {eta}")]
    SingularFlowRule { eta: f64 },

    #[error("inversion parameter k_bar = {k_bar} is not positive (lambda = {lambda})")]
    NonPositiveKBar { k_bar: f64, lambda: f64 },

    #[error("normalized effective resistance {q_prime} is not positive")]
    NonPhysicalResistance { q_prime: f64 },

    /// Net tip resistance is zero, so `B_q` has no meaning.
    #[error("excess pore pressure ratio undefined: q_c equals p_0 ({p0} kPa)")]
    UndefinedBq { p0: f64 },

    #[error("record has no K0 and the K0 policy requires one")]
    MissingK0,

    #[error("series did not converge within {terms} terms")]
    SeriesNonConvergence { terms: usize },

    /// Stress integration gave up; carries the last accepted state.
    #[error("stress integration failed at eps_q = {eps_q}: {reason}")]
    IntegrationFailure {
        eps_q: f64,
        reason: String,
        last_state: SoilState,
    },

    #[error("bundled fixture data is corrupted: {0}")]
    Integrity(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::SingularFlowRule { .. }
                | Error::NonPositiveKBar { .. }
                | Error::NonPhysicalResistance { .. }
                | Error::SeriesNonConvergence { .. }
                | Error::IntegrationFailure { .. }
        )
    }
}
