//! ATLM: an automatically transformed linear model used as a baseline for
//! software effort estimation.
//!
//! The model picks, for every numeric variable, whichever of no transform,
//! natural log or square root leaves the training column least skewed, fits
//! ordinary least squares with treatment-contrast dummies for factors, and
//! maps predictions back to the original effort scale. It has no tuning
//! parameters and is deterministic.
//!
//! Around the model sit the pieces needed to benchmark it:
//!
//! - [`data`]: datasets, CSV ingestion, preparation recipes and splits
//! - [`transform`]: skewness-driven transform selection
//! - [`linmodel`]: design matrices and least squares
//! - [`model`]: the end-to-end pipeline and exported predictions
//! - [`metrics`]: MMRE, PRED(x), LSD, RE*, SA and aggregation
//! - [`validation`]: leave-one-out, k-fold and repeated holdout with
//!   seeded, exportable folds
//! - [`registry`] and [`report`]: built-in datasets and canned experiments
//!
//! Fold-level work runs on rayon when the `parallel` feature (on by default)
//! is enabled; results do not depend on scheduling.

pub mod data;
pub mod error;
pub mod exec;
pub mod linmodel;
pub mod metrics;
pub mod model;
mod qr;
pub mod registry;
pub mod report;
pub mod rng;
pub mod transform;
pub mod validation;

pub use data::{ColumnSchema, Dataset, Kind, PrepRecipe, Role};
pub use error::{Error, Result};
pub use exec::Execution;
pub use linmodel::{FittedLinearModel, UnseenLevelPolicy};
pub use metrics::{MetricReport, Summary};
pub use model::{atlm_fit, atlm_predict, Atlm, AtlmModel, EffortModel, MeanBaseline, PredictionSet};
pub use transform::{TransformKind, TransformTable};
pub use validation::{FoldAssignment, PlanKind, ValidationPlan};
