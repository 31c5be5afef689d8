//! Drift-diffusion model identification, estimation and a simulated-moment
//! specification test for choice and decision-time data.

pub mod basis;
pub mod error;
pub mod estimator;
pub mod identification;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod simulator;
pub mod spectest;

pub use basis::SplineBasis;
pub use error::{DdmError, ErrorKind, Result};
pub use estimator::{
    default_knots, estimate, estimate_boundary, estimate_drift, fit_choice_probability, fit_time_transform,
    ChoiceProbabilityModel, DriftConvention, EstimationResult, EstimatorConfig,
};
pub use model::{
    imbalance, log_odds, Boundary, Dataset, DdmParameters, ParametricBoundary, TimeTransform, TransformFamily,
    TrialRecord,
};
pub use simulator::{simulate_dataset, simulate_model_moments, SimConfig, SimulatedDataset, DATA_STREAM, MODEL_STREAM};
pub use spectest::{
    build_moment_spec, run_test, sample_moments, DeltaStep, MomentSpec, MomentVector, TestConfig, TestReport,
    VarianceFormula,
};
