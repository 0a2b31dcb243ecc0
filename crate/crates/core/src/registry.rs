//! Built-in effort datasets and resolution of user-supplied ones.
//!
//! Schemas and preparation recipes for the built-ins ship with the crate.
//! The CSV files are looked up in a data directory: `$ATLM_DATA_DIR` when
//! set, otherwise the crate's own `data/` directory.

use std::path::{Path, PathBuf};

use crate::data::{self, ColumnSchema, Dataset, PrepRecipe, Role};
use crate::error::{Error, Result};

pub const DATA_DIR_ENV: &str = "ATLM_DATA_DIR";

#[derive(Debug, Clone, Copy)]
pub struct Builtin {
    pub name: &'static str,
    pub rows_raw: usize,
    pub rows_prepared: usize,
    schema: &'static str,
    recipe: &'static str,
}

pub const BUILTINS: [Builtin; 3] = [
    Builtin {
        name: "cocomo81",
        rows_raw: 63,
        rows_prepared: 63,
        schema: include_str!("../data/cocomo81.schema"),
        recipe: include_str!("../data/cocomo81.recipe"),
    },
    Builtin {
        name: "desharnais",
        rows_raw: 81,
        rows_prepared: 74,
        schema: include_str!("../data/desharnais.schema"),
        recipe: include_str!("../data/desharnais.recipe"),
    },
    Builtin {
        name: "maxwell",
        rows_raw: 62,
        rows_prepared: 62,
        schema: include_str!("../data/maxwell.schema"),
        recipe: include_str!("../data/maxwell.recipe"),
    },
];

impl Builtin {
    pub fn find(name: &str) -> Option<&'static Builtin> {
        BUILTINS.iter().find(|b| b.name == name)
    }

    pub fn schema(&self) -> Vec<ColumnSchema> {
        data::parse_schema(self.schema).expect("bundled schema parses")
    }

    pub fn recipe(&self) -> PrepRecipe {
        PrepRecipe::parse(self.recipe).expect("bundled recipe parses")
    }

    pub fn csv_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.csv", self.name))
    }
}

pub fn default_data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data")))
}

/// A dataset ready for modelling together with how it was prepared.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dataset: Dataset,
    pub recipe: PrepRecipe,
    pub raw_rows: usize,
    pub source: PathBuf,
}

/// Where a dataset comes from. Overrides replace the built-in schema or
/// recipe; a custom CSV requires a schema.
#[derive(Debug, Clone, Default)]
pub struct DatasetSpec {
    pub dataset: String,
    pub schema: Option<PathBuf>,
    pub recipe: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,
}

impl DatasetSpec {
    pub fn builtin(name: &str) -> Self {
        Self {
            dataset: name.to_string(),
            ..Self::default()
        }
    }

    pub fn resolve(&self) -> Result<Prepared> {
        let dir = self.data_dir.clone().unwrap_or_else(default_data_dir);
        let builtin = Builtin::find(&self.dataset);
        let (csv, schema, recipe) = match builtin {
            Some(b) => (
                b.csv_path(&dir),
                match &self.schema {
                    Some(p) => data::load_schema(p)?,
                    None => b.schema(),
                },
                match &self.recipe {
                    Some(p) => PrepRecipe::load(p)?,
                    None => b.recipe(),
                },
            ),
            None => {
                let schema_path = self.schema.as_ref().ok_or_else(|| {
                    Error::Schema(format!(
                        "'{}' is not a built-in dataset ({}); pass --schema for a custom CSV",
                        self.dataset,
                        BUILTINS.map(|b| b.name).join(", ")
                    ))
                })?;
                let schema = data::load_schema(schema_path)?;
                let recipe = match &self.recipe {
                    Some(p) => PrepRecipe::load(p)?,
                    None => PrepRecipe::identity(
                        schema
                            .iter()
                            .find(|c| c.role == Role::Response)
                            .map(|c| c.name.clone())
                            .unwrap_or_default(),
                    ),
                };
                (PathBuf::from(&self.dataset), schema, recipe)
            }
        };
        let mut raw = data::load_csv(&csv, &schema)?;
        if let Some(b) = builtin {
            raw = Dataset::with_row_ids(
                b.name,
                raw.schema().to_vec(),
                raw.columns().to_vec(),
                raw.row_ids().to_vec(),
            )?;
        }
        let raw_rows = raw.n_rows();
        let dataset = recipe.apply(&raw)?;
        dataset.ensure_complete()?;
        Ok(Prepared {
            dataset,
            recipe,
            raw_rows,
            source: csv,
        })
    }
}

pub fn load_builtin(name: &str, data_dir: Option<&Path>) -> Result<Prepared> {
    DatasetSpec {
        dataset: name.to_string(),
        data_dir: data_dir.map(Path::to_path_buf),
        ..DatasetSpec::default()
    }
    .resolve()
}
