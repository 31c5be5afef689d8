use thiserror::Error;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad parameters or configuration supplied by the caller.
    Usage,
    /// The dataset itself is unusable.
    Data,
    /// A numerical stage failed (singular matrices, degenerate estimates).
    Numeric,
}

#[derive(Debug, Error)]
pub enum DdmError {
    #[error("{what} = {value} is outside its domain ({constraint})")]
    Domain {
        what: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("asymmetric boundaries are not supported: the stopping rule is |Z_t| >= b(t)")]
    AsymmetricBoundary,

    #[error("boundary at t = 0 is {0}; the process would stop immediately")]
    DegenerateBoundary(f64),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("record {index}: {reason}")]
    InvalidRecord { index: usize, reason: String },

    #[error("{censored} of {total} simulated paths did not stop before t_max = {t_max}; increase t_max")]
    ExcessiveCensoring {
        censored: usize,
        total: usize,
        t_max: f64,
    },

    #[error("non-finite value {value} while integrating at t = {t}")]
    NonFinite { t: f64, value: f64 },

    #[error("revealed boundary is undefined for zero drift")]
    UndefinedBoundary,

    #[error("Gram matrix of the spline basis is rank deficient (K = {k}); use fewer basis functions")]
    RankDeficient { k: usize },

    #[error("need at least K = {k} observations, got {n}")]
    TooFewObservations { n: usize, k: usize },

    #[error("estimated drift {0:e} is indistinguishable from zero")]
    NearZeroDrift(f64),

    #[error("difference step {step} is too large: {reason}")]
    StepTooLarge { step: f64, reason: &'static str },

    #[error("variance matrix is not positive definite (min eigenvalue {min_eigenvalue:e}, trace {trace:e}); reduce the number of moments J")]
    NotPositiveDefinite { min_eigenvalue: f64, trace: f64 },

    #[error("variance matrix condition number {0:e} exceeds 1e10; reduce the number of moments J")]
    IllConditioned(f64),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<DdmError>,
    },
}

impl DdmError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            DdmError::Domain { .. }
            | DdmError::InvalidConfig(_)
            | DdmError::AsymmetricBoundary
            | DdmError::DegenerateBoundary(_)
            | DdmError::StepTooLarge { .. } => ErrorKind::Usage,
            DdmError::EmptyDataset
            | DdmError::InvalidRecord { .. }
            | DdmError::TooFewObservations { .. } => ErrorKind::Data,
            DdmError::ExcessiveCensoring { .. }
            | DdmError::NonFinite { .. }
            | DdmError::UndefinedBoundary
            | DdmError::RankDeficient { .. }
            | DdmError::NearZeroDrift(_)
            | DdmError::NotPositiveDefinite { .. }
            | DdmError::IllConditioned(_) => ErrorKind::Numeric,
            DdmError::Stage { source, .. } => source.kind(),
        }
    }

    /// Innermost error, skipping stage labels.
    pub fn root(&self) -> &DdmError {
        match self {
            DdmError::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn at(stage: &'static str) -> impl FnOnce(DdmError) -> DdmError {
        move |e| DdmError::Stage {
            stage,
            source: Box::new(e),
        }
    }
}

pub type Result<T, E = DdmError> = std::result::Result<T, E>;
