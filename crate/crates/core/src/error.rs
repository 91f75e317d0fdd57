use thiserror::Error;

/// Errors raised by the linear algebra, geometry, assembly and solver layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("row {row} has norm {norm:e}, at or below the rank tolerance")]
    DegenerateRow { row: usize, norm: f64 },

    #[error("linear system is singular: pivot {pivot:e} in column {column}")]
    SingularSystem { column: usize, pivot: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry at index {0}")]
    NonFinite(usize),

    #[error("point is {distance:e} m away from link {link}")]
    PointOffLink { link: usize, distance: f64 },

    #[error("obstacle center lies on link {link}; contact normal is undefined")]
    DegenerateNormal { link: usize },

    #[error("end-effector Jacobian is rank deficient (smallest singular value {sigma_min:e})")]
    SingularJacobian { sigma_min: f64 },

    #[error("iteration limit of {limit} reached")]
    IterationLimit { limit: usize },

    #[error("lexicographic pivot rule could not resolve a tie in row selection")]
    PivotBreakdown,

    #[error("{m} constraints exceed the enumeration limit of {max}")]
    TooManyConstraints { m: usize, max: usize },

    #[error("safety filter failed: {0}")]
    SolverFailure(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),
}

pub type Result<T> = std::result::Result<T, Error>;
