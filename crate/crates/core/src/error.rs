use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate moduli: |lambda* + mu*| = {0:e} is numerically zero")]
    DegenerateModuli(f64),

    #[error("incompressible limit: |1 - 2 nu*| = {0:e}")]
    IncompressibleLimit(f64),

    #[error(
        "indefinite material: Re(C*) eigenvalues span [{min:e}, {max:e}], \
         the storage part must be definite"
    )]
    IndefiniteMaterial { min: f64, max: f64 },

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("bad boundary patch: {0}")]
    BadPatch(String),

    #[error("bad mesh: {0}")]
    BadMesh(String),

    #[error("Gram matrix of element {element} is not positive definite")]
    GramNotSpd { element: usize },

    #[error(
        "solver did not converge after {iterations} iterations (relative residual {residual:e}); \
         ill-conditioning of this kind is expected close to a resonant frequency"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("global matrix is not positive definite (pivot {pivot} failed)")]
    NotPositiveDefinite { pivot: usize },

    #[error("sparse factorization failed ({0}); lower adapt.dof_budget or use solver.method = \"cg\"")]
    FactorizationFailed(String),

    #[error("bad phase: tan(delta) = {0} gives no positive cos(delta)")]
    BadPhase(f64),

    #[error("degenerate shear inversion: linear coefficient {0:e} vanishes")]
    DegenerateShear(f64),

    #[error("patch selection {0:?} contains no boundary faces")]
    EmptyPatch(Vec<String>),

    #[error("invalid measurement: {0}")]
    BadMeasurement(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Failures of the discrete solve, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::GramNotSpd { .. }
                | Error::NoConvergence { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::FactorizationFailed(_)
        )
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
