use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("schema: {0}")]
    Schema(String),

    #[error("recipe: {0}")]
    Recipe(String),

    #[error("split: {0}")]
    Split(String),

    #[error("column '{column}' has a missing value at row {row_id}")]
    MissingValue { column: String, row_id: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("variable '{variable}', row {row_id}: value {value} is outside the domain of the {transform} transform")]
    Domain {
        variable: String,
        row_id: usize,
        value: f64,
        transform: &'static str,
    },

    #[error("factor '{factor}', row {row_id}: level '{level}' was not seen in training")]
    UnseenLevel {
        factor: String,
        level: String,
        row_id: usize,
    },

    #[error("fit: {0}")]
    Fit(String),

    #[error("model: {0}")]
    Model(String),

    #[error("metric: {0}")]
    Metric(String),

    #[error("plan: {0}")]
    Plan(String),

    #[error("validation: {0}")]
    Validation(String),
}

impl Error {
    /// Stable short code used as the prefix of CLI error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "E_IO",
            Error::Parse { .. } => "E_PARSE",
            Error::Csv(_) => "E_CSV",
            Error::Json(_) => "E_JSON",
            Error::Schema(_) => "E_SCHEMA",
            Error::Recipe(_) => "E_RECIPE",
            Error::Split(_) => "E_SPLIT",
            Error::MissingValue { .. } => "E_MISSING",
            Error::DegenerateSample(_) => "E_DEGENERATE",
            Error::Domain { .. } => "E_DOMAIN",
            Error::UnseenLevel { .. } => "E_UNSEEN_LEVEL",
            Error::Fit(_) => "E_FIT",
            Error::Model(_) => "E_MODEL",
            Error::Metric(_) => "E_METRIC",
            Error::Plan(_) => "E_PLAN",
            Error::Validation(_) => "E_VALIDATION",
        }
    }

    /// True for errors caused by bad inputs or configuration rather than by
    /// the computation itself.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse { .. }
                | Error::Csv(_)
                | Error::Schema(_)
                | Error::Recipe(_)
                | Error::Plan(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
