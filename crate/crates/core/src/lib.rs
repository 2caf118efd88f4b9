//! Imbalanced fraud detection: SMOTE-KMEANS resampling, base learners, stacked
//! ensembles and a cross-validated evaluation protocol.

pub mod data;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod learners;
pub mod resampling;
pub mod rng;

pub use data::{Dataset, FoldPlan, InspectionReport, MissingPolicy, SchemaMode, Standardizer};
pub use ensemble::{EnsembleSpec, StackedEnsemble};
pub use error::{Error, Result};
pub use evaluation::{Estimator, EvalReport, SamplerChoice};
pub use learners::{ClassifierSpec, Model, Scorer};
pub use resampling::{KMeansModel, Provenance, ResampleResult, SmoteConfig, SmoteKmeansConfig};
