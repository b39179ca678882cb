use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("determinant ad - bc = {det}, expected 1")]
    Determinant { det: i128 },
    #[error("trace {trace} has |trace| <= 2, matrix is not hyperbolic")]
    NotHyperbolic { trace: i128 },
    #[error("trace {trace} <= -3 gives negative eigenvalues")]
    Orientation { trace: i128 },
    #[error("lattice parameter K must be positive")]
    InvalidLattice,
    #[error("lattice sum truncation n_max = {n_max} is below the minimum 4")]
    InvalidTruncation { n_max: u32 },
    #[error("observables live in different sectors: (N={n1}, K={k1}) vs (N={n2}, K={k2})")]
    SectorMismatch { n1: i64, k1: u32, n2: i64, k2: u32 },
    #[error("grid size {grid} must be at least {min}")]
    GridTooSmall { grid: usize, min: usize },
    #[error("grid size {0} is larger than the supported maximum 32768")]
    GridTooLarge(usize),
    #[error("series of length {len} is too short, need at least {min}")]
    TooShort { len: usize, min: usize },
    #[error("Hankel matrix has zero largest singular value")]
    IllConditioned,
    #[error("quadrature did not reach tolerance {tol:e} by order {order}")]
    QuadratureNotConverged { order: usize, tol: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
