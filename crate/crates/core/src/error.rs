use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("base q = {0} must lie strictly inside (0, 1)")]
    InvalidBase(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("series has no terminating numerator parameter q^-n")]
    NonTerminating,

    #[error("argument outside the domain: {0}")]
    OutOfDomain(String),

    #[error("function is not symmetric under z -> 1/z (relative defect {defect:.3e})")]
    SymmetryViolation { defect: f64 },

    #[error("symmetric limit at z = +-1 did not stabilize (spread {spread:.3e})")]
    LimitUnstable { spread: f64 },

    #[error("input is not expressible in the required form (tail {tail:.3e} > {tol:.3e})")]
    NotExpressible { tail: f64, tol: f64 },

    #[error("rescaled coefficient tail {tail_norm:.3e} exceeds tolerance {tol:.3e}")]
    ConditionFailed { tail_norm: f64, tol: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("Nystrom system is singular or ill-conditioned (cond {cond:.3e}, rank {rank} of {size})")]
    Nystrom { cond: f64, rank: usize, size: usize },

    #[error("quadrature did not converge (successive difference {diff:.3e})")]
    Quadrature { diff: f64 },

    #[error("{0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
