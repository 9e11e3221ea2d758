use thiserror::Error;

use crate::farey::Slope;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid slope {p}/{q}")]
    InvalidSlope { p: i64, q: i64 },

    #[error("integer overflow in slope arithmetic")]
    Overflow,

    #[error("slopes {0} and {1} are not Farey neighbours")]
    NotAdjacent(Slope, Slope),

    #[error("{0}, {1}, {2} do not form a Farey triangle")]
    InvalidTriangle(Slope, Slope, Slope),

    #[error("depth limit of {limit} exceeded")]
    DepthLimit { limit: usize },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix oracle unavailable: {0}")]
    OracleUnavailable(String),

    #[error("series term has a pole at trace {0}")]
    SingularTrace(num_complex::Complex64),

    #[error("series term is singular at slope {0}")]
    SingularTerm(Slope),

    #[error("mapping class is not Anosov (trace {trace})")]
    NotAnosov { trace: i64 },

    #[error("character is not fixed by the mapping class (residual {residual:e})")]
    NotFixed { residual: f64 },

    #[error("conjugation system is rank deficient (singular values {0:?})")]
    RankDeficient(Vec<f64>),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
