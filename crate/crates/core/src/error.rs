use thiserror::Error;

/// Errors raised by the model, the flow integrator and the simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error in {op}: {reason}")]
    Domain { op: &'static str, reason: String },

    /// A parameter or scenario field failed validation. `key` names the field.
    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    /// The step violates v * dt <= dx.
    #[error("CFL condition violated: v * dt = {v_dt} > dx = {dx}")]
    Cfl { v_dt: f64, dx: f64 },

    /// A state invariant broke during integration or thinning.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// A trajectory inside an ensemble failed.
    #[error("sample {index}: {source}")]
    Sample {
        index: u64,
        #[source]
        source: Box<SimError>,
    },
}

impl SimError {
    pub(crate) fn domain(op: &'static str, reason: impl Into<String>) -> Self {
        SimError::Domain {
            op,
            reason: reason.into(),
        }
    }

    pub(crate) fn param(key: impl Into<String>, reason: impl Into<String>) -> Self {
        SimError::InvalidParameter {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
