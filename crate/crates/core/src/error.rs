use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("interior angle {0} rad is outside (0, 2pi)")]
    InvalidAngle(f64),

    #[error("invalid grading parameters: {0}")]
    InvalidGrading(String),

    #[error("graded refinement needs more than {generations} bisection generations ({violators} triangles still too large)")]
    GradingNotReached {
        generations: usize,
        violators: usize,
    },

    #[error("triangle {triangle} is degenerate (signed area {area:e})")]
    DegenerateTriangle { triangle: usize, area: f64 },

    #[error("conjugate gradient stopped after {iterations} iterations with relative residual {residual:e} (target {tol:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        tol: f64,
    },

    #[error("length mismatch: expected {expected}, got {got} ({what})")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("singular function evaluated at the corner")]
    SingularPoint,

    #[error(
        "quadrature did not settle: {what} changed by {change:e} relative (target {target:e})"
    )]
    Quadrature {
        what: &'static str,
        change: f64,
        target: f64,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
