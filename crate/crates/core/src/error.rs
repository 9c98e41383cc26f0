use core::fmt;

/// Errors produced by the numerical routines of this crate.
#[derive(Clone, Debug, PartialEq)]
#[non_exhaustive]
pub enum Error {
    /// A requested grade is smaller than the degree of the polynomial.
    InvalidGrade {
        /// Requested grade.
        grade: usize,
        /// Actual degree.
        degree: usize,
    },
    /// Linearization requires an odd grade.
    EvenGrade {
        /// The offending grade.
        grade: usize,
    },
    /// The Möbius matrix has zero determinant.
    SingularMobius,
    /// The operation requires a square polynomial.
    NotSquare {
        /// Row count.
        rows: usize,
        /// Column count.
        cols: usize,
    },
    /// Operand shapes are incompatible.
    DimensionMismatch {
        /// Short description of the operation.
        op: &'static str,
        /// Expected (rows, cols).
        expected: (usize, usize),
        /// Found (rows, cols).
        found: (usize, usize),
    },
    /// A polynomial or pencil fails its structure condition.
    NotStructured {
        /// Absolute residual `‖M_A[P] - P^⋆‖_F`.
        residual: f64,
    },
    /// Random structured generation kept projecting onto zero.
    ZeroProjection,
    /// A quantitative precondition of the analysis does not hold.
    Precondition {
        /// Name of the violated condition.
        what: &'static str,
        /// Measured value.
        value: f64,
        /// Bound the value had to respect.
        bound: f64,
    },
    /// `δ = σ_min(T_A) - ‖ΔT_A‖₂` is not positive.
    RankRisk {
        /// The computed gap.
        delta: f64,
    },
    /// The fixed-point iteration did not reach its tolerance.
    NonConvergence {
        /// Iterations performed.
        iterations: usize,
        /// Final residual.
        residual: f64,
    },
    /// A solve finished with a residual above tolerance.
    NumericalFailure {
        /// What was being solved.
        what: &'static str,
        /// Achieved residual.
        residual: f64,
    },
    /// The polynomial appears to be singular; use `minimal_indices` instead.
    SingularPolynomial,
    /// Two spectra being compared have different sizes.
    CardinalityMismatch {
        /// Size of the left list.
        left: usize,
        /// Size of the right list.
        right: usize,
    },
    /// The QZ iteration failed to converge.
    EigenFailure,
    /// An argument is outside its documented domain.
    InvalidArgument(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGrade { grade, degree } => {
                write!(f, "grade {grade} is smaller than degree {degree}")
            }
            Error::EvenGrade { grade } => write!(f, "odd grade required (got {grade})"),
            Error::SingularMobius => write!(f, "Möbius matrix is singular"),
            Error::NotSquare { rows, cols } => {
                write!(f, "square polynomial required (got {rows}x{cols})")
            }
            Error::DimensionMismatch { op, expected, found } => {
                write!(f, "{op}: expected {}x{}, found {}x{}", expected.0, expected.1, found.0, found.1)
            }
            Error::NotStructured { residual } => {
                write!(f, "structure condition violated (residual {residual:e})")
            }
            Error::ZeroProjection => write!(f, "structured projection vanished after retries"),
            Error::Precondition { what, value, bound } => {
                write!(f, "precondition violated: {what} = {value:e} (bound {bound:e})")
            }
            Error::RankRisk { delta } => {
                write!(f, "rank risk: sigma_min gap delta = {delta:e} is not positive")
            }
            Error::NonConvergence { iterations, residual } => {
                write!(f, "fixed point did not converge in {iterations} iterations (residual {residual:e})")
            }
            Error::NumericalFailure { what, residual } => {
                write!(f, "{what}: residual {residual:e} above tolerance")
            }
            Error::SingularPolynomial => {
                write!(f, "polynomial appears singular; eigenvalues are undefined, use minimal_indices")
            }
            Error::CardinalityMismatch { left, right } => {
                write!(f, "spectra have different sizes ({left} vs {right})")
            }
            Error::EigenFailure => write!(f, "QZ iteration failed to converge"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
