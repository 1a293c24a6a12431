use thiserror::Error;

/// Errors produced by the attitude estimation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not skew-symmetric (‖A + Aᵀ‖_F = {asymmetry:e})")]
    NotSkew { asymmetry: f64 },

    #[error("matrix is not symmetric positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotSpd { min_eigenvalue: f64 },

    #[error("matrix is singular (|det| = {det:e})")]
    Singular { det: f64 },

    #[error("matrix is not a rotation (orthogonality defect {defect:e}, det {det})")]
    NotRotation { defect: f64, det: f64 },

    #[error("invalid observations: {0}")]
    InvalidObservations(String),

    #[error("degenerate observation geometry: attitude profile matrix is singular")]
    DegenerateObservations,

    #[error("measurement sensitivity matrix is ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("implicit solve did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("every term of the ellipsoid sum is degenerate (zero trace)")]
    AllDegenerate,

    #[error("ellipsoids do not intersect (optimal scale factor {beta:e} ≤ 0)")]
    EmptyIntersection { beta: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("at step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Error {
        match self {
            e @ Error::AtStep { .. } => e,
            e => Error::AtStep {
                step,
                source: Box::new(e),
            },
        }
    }

    /// The underlying error, with any step context removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
