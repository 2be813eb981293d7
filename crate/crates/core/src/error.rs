use thiserror::Error;

/// Errors raised by the symmetry-statistics routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input is not a unit vector (norm {norm:.9}, allowed deviation {tolerance:e})")]
    NotUnit { norm: f64, tolerance: f64 },

    #[error("invalid group specification `{0}`")]
    InvalidGroupSpec(String),

    #[error("group closure exceeded {cap} elements; generators do not span a finite group")]
    ClosureOverflow { cap: usize },

    #[error("representation {index} is not a homomorphism (residual {residual:e})")]
    NotHomomorphism { index: usize, residual: f64 },

    #[error("representation is not positive definite under averaging; cannot unitarize")]
    NotPositiveDefinite,

    #[error("assignment has length {got}, expected {expected}")]
    AssignmentLength { expected: usize, got: usize },

    #[error("group element index {index} out of range for group of order {order}")]
    ElementOutOfRange { index: usize, order: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("mean is undefined: resultant norm {norm:e} is below {threshold:e}")]
    DegenerateMean { norm: f64, threshold: f64 },

    #[error("Karcher mean did not converge after {iterations} iterations (last step {last_step:e})")]
    KarcherNotConverged {
        iterations: usize,
        last_step: f64,
        last_iterate: Vec<f64>,
    },

    #[error("value {value} outside the domain [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },

    #[error("problem too large: N*max(d_k) = {size} (limit {limit})")]
    ProblemTooLarge { size: usize, limit: usize },

    #[error("SDP solver did not converge in {iterations} iterations (primal {primal:e}, dual {dual:e})")]
    SolverNotConverged {
        iterations: usize,
        primal: f64,
        dual: f64,
        last: Box<crate::nug::NugSolution>,
    },

    #[error("lambda coefficients have imaginary residue {0:e}; irreducible representations are inconsistent")]
    ImaginaryResidue(f64),

    #[error("search space too large: {size} gauge-fixed assignments (limit {limit})")]
    SearchSpaceTooLarge { size: f64, limit: f64 },

    #[error("eigenvector rounding requires a cyclic group, got {0}")]
    NotCyclic(String),

    #[error("fundamental-domain baseline is only defined for cyclic groups, got {0}")]
    NoFundamentalDomain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
