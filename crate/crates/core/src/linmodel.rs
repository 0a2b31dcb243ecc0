//! Multiple linear regression with treatment-contrast dummies for factors.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Column, Dataset, Kind};
use crate::error::{Error, Result};
use crate::qr;

/// Relative pivot tolerance below which a design column counts as aliased.
pub const RANK_TOLERANCE: f64 = 1e-7;

pub const INTERCEPT: &str = "intercept";

/// Factor name to its levels, reference level first.
pub type FactorLevels = BTreeMap<String, Vec<String>>;

/// What to do with a test row whose factor level never occurred in training.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnseenLevelPolicy {
    #[default]
    Error,
    /// Encode the row as the reference level (all dummies zero).
    AsReference,
}

impl FromStr for UnseenLevelPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" => Ok(Self::Error),
            "as-reference" => Ok(Self::AsReference),
            other => Err(Error::Plan(format!(
                "unseen-level policy must be 'error' or 'as-reference', got '{other}'"
            ))),
        }
    }
}

impl fmt::Display for UnseenLevelPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Error => "error",
            Self::AsReference => "as-reference",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    labels: Vec<String>,
    columns: Vec<Vec<f64>>,
    rows: usize,
    factor_levels: FactorLevels,
}

impl DesignMatrix {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn factor_levels(&self) -> &FactorLevels {
        &self.factor_levels
    }

    pub fn column(&self, label: &str) -> Option<&[f64]> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.columns[i].as_slice())
    }

    /// Builds a design from raw labelled columns. Used by tests and callers
    /// that assemble their own regressors.
    pub fn from_columns(labels: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if labels.len() != columns.len() || columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Fit("ragged design columns".into()));
        }
        Ok(Self {
            labels,
            columns,
            rows,
            factor_levels: FactorLevels::new(),
        })
    }
}

fn levels_in_order(values: &[Option<String>]) -> Vec<String> {
    let mut levels: Vec<String> = Vec::new();
    for v in values.iter().flatten() {
        if !levels.contains(v) {
            levels.push(v.clone());
        }
    }
    levels
}

/// Builds the design for `ds`: intercept, numeric explanatory columns in
/// schema order, then one dummy per non-reference level of each factor.
///
/// Without `levels` (training), each factor's levels are taken in order of
/// first appearance and the first is the reference. With `levels` (test),
/// the supplied dictionary is used as-is.
pub fn build_design(
    ds: &Dataset,
    levels: Option<&FactorLevels>,
    policy: UnseenLevelPolicy,
) -> Result<DesignMatrix> {
    let n = ds.n_rows();
    let mut labels = vec![INTERCEPT.to_string()];
    let mut columns = vec![vec![1.0; n]];
    let mut factor_levels = FactorLevels::new();
    let mut explanatory = 0;

    for (col, _) in ds.explanatory() {
        explanatory += 1;
        if col.kind == Kind::Numeric {
            labels.push(col.name.clone());
            columns.push(ds.numeric(&col.name)?);
        }
    }
    if explanatory == 0 {
        return Err(Error::Fit("dataset has no explanatory columns".into()));
    }

    for (col, data) in ds.explanatory() {
        let Column::Categorical(values) = data else {
            continue;
        };
        let known = match levels {
            Some(dict) => dict.get(&col.name).cloned().ok_or_else(|| {
                Error::Model(format!("no training levels recorded for factor '{}'", col.name))
            })?,
            None => levels_in_order(values),
        };
        let mut dummies = vec![vec![0.0; n]; known.len().saturating_sub(1)];
        for (row, value) in values.iter().enumerate() {
            let value = value.as_ref().ok_or_else(|| Error::MissingValue {
                column: col.name.clone(),
                row_id: ds.row_ids()[row],
            })?;
            match known.iter().position(|l| l == value) {
                Some(0) => {}
                Some(i) => dummies[i - 1][row] = 1.0,
                None if policy == UnseenLevelPolicy::AsReference => {}
                None => {
                    return Err(Error::UnseenLevel {
                        factor: col.name.clone(),
                        level: value.clone(),
                        row_id: ds.row_ids()[row],
                    })
                }
            }
        }
        for (level, dummy) in known.iter().skip(1).zip(dummies) {
            labels.push(format!("{}={}", col.name, level));
            columns.push(dummy);
        }
        factor_levels.insert(col.name.clone(), known);
    }

    Ok(DesignMatrix {
        labels,
        columns,
        rows: n,
        factor_levels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedLinearModel {
    pub response: String,
    /// Design labels in column order.
    pub design: Vec<String>,
    pub coefficients: BTreeMap<String, f64>,
    pub aliased: Vec<String>,
    pub factor_levels: FactorLevels,
    pub rank: usize,
    /// Fingerprint of the training data the model came from, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training_fingerprint: Option<String>,
}

impl FittedLinearModel {
    pub fn coefficient(&self, label: &str) -> Option<f64> {
        self.coefficients.get(label).copied()
    }

    pub fn is_aliased(&self, label: &str) -> bool {
        self.aliased.iter().any(|l| l == label)
    }

    /// Evaluates `X b` on a design built with this model's factor levels.
    pub fn evaluate(&self, design: &DesignMatrix) -> Result<Vec<f64>> {
        if design.labels != self.design {
            return Err(Error::Model(format!(
                "design columns {:?} do not match the fitted model {:?}",
                design.labels, self.design
            )));
        }
        let mut out = vec![0.0; design.rows];
        for (label, column) in design.labels.iter().zip(&design.columns) {
            if let Some(&b) = self.coefficients.get(label) {
                for (o, x) in out.iter_mut().zip(column) {
                    *o += b * x;
                }
            }
        }
        Ok(out)
    }
}

/// Least-squares fit via column-pivoted Householder QR. Columns that are
/// numerically dependent on earlier ones are reported as aliased and carry
/// no coefficient.
pub fn fit_ols(design: &DesignMatrix, y: &[f64]) -> Result<FittedLinearModel> {
    if design.rows != y.len() {
        return Err(Error::Fit(format!(
            "design has {} rows but response has {}",
            design.rows,
            y.len()
        )));
    }
    if y.len() < 2 {
        return Err(Error::Fit("at least two rows are needed".into()));
    }
    let solution = qr::least_squares(&design.columns, y, RANK_TOLERANCE)?;
    let mut coefficients = BTreeMap::new();
    let mut aliased = Vec::new();
    for (label, coef) in design.labels.iter().zip(solution.coefficients) {
        match coef {
            Some(b) => {
                coefficients.insert(label.clone(), b);
            }
            None => aliased.push(label.clone()),
        }
    }
    Ok(FittedLinearModel {
        response: String::new(),
        design: design.labels.clone(),
        coefficients,
        aliased,
        factor_levels: design.factor_levels.clone(),
        rank: solution.rank,
        training_fingerprint: None,
    })
}

/// Fits `response ~ all explanatory columns` on `ds`.
pub fn fit(ds: &Dataset) -> Result<FittedLinearModel> {
    let design = build_design(ds, None, UnseenLevelPolicy::Error)?;
    let y = ds.response()?;
    let mut model = fit_ols(&design, &y)?;
    model.response = ds.response_name().to_string();
    Ok(model)
}

pub fn predict(
    model: &FittedLinearModel,
    test: &Dataset,
    policy: UnseenLevelPolicy,
) -> Result<Vec<f64>> {
    let design = build_design(test, Some(&model.factor_levels), policy)?;
    model.evaluate(&design)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ColumnSchema;

    fn xy(x: Vec<f64>, y: Vec<f64>) -> Dataset {
        Dataset::new(
            "xy",
            vec![ColumnSchema::numeric("x"), ColumnSchema::response("y")],
            vec![Column::from(x), Column::from(y)],
        )
        .unwrap()
    }

    fn factor_ds(levels: Vec<&str>) -> Dataset {
        let n = levels.len();
        Dataset::new(
            "f",
            vec![ColumnSchema::categorical("f"), ColumnSchema::response("y")],
            vec![
                Column::from(levels),
                Column::from((0..n).map(|i| i as f64).collect::<Vec<_>>()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn treatment_contrasts() {
        let design = build_design(&factor_ds(vec!["a", "b", "a", "c"]), None, UnseenLevelPolicy::Error)
            .unwrap();
        assert_eq!(design.labels(), &["intercept", "f=b", "f=c"]);
        assert_eq!(design.column("intercept").unwrap(), &[1.0; 4]);
        assert_eq!(design.column("f=b").unwrap(), &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(design.column("f=c").unwrap(), &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(design.factor_levels()["f"], vec!["a", "b", "c"]);
    }

    #[test]
    fn numeric_only_design() {
        let design = build_design(&xy(vec![1.0, 2.0], vec![3.0, 4.0]), None, UnseenLevelPolicy::Error)
            .unwrap();
        assert_eq!(design.labels(), &["intercept", "x"]);
    }

    #[test]
    fn numeric_columns_precede_dummies() {
        let ds = Dataset::new(
            "mix",
            vec![
                ColumnSchema::categorical("mode"),
                ColumnSchema::numeric("kloc"),
                ColumnSchema::response("effort"),
            ],
            vec![
                Column::from(vec!["org", "emb", "org"]),
                Column::from(vec![1.0, 2.0, 3.0]),
                Column::from(vec![1.0, 2.0, 4.0]),
            ],
        )
        .unwrap();
        let design = build_design(&ds, None, UnseenLevelPolicy::Error).unwrap();
        assert_eq!(design.labels(), &["intercept", "kloc", "mode=emb"]);
    }

    #[test]
    fn unseen_level_is_an_error_by_default() {
        let train = factor_ds(vec!["a", "b", "a", "c"]);
        let model = fit(&train).unwrap();
        let test = factor_ds(vec!["a", "d"]);
        match predict(&model, &test, UnseenLevelPolicy::Error) {
            Err(Error::UnseenLevel {
                factor,
                level,
                row_id,
            }) => assert_eq!((factor.as_str(), level.as_str(), row_id), ("f", "d", 1)),
            other => panic!("expected unseen-level error, got {other:?}"),
        }
        let preds = predict(&model, &test, UnseenLevelPolicy::AsReference).unwrap();
        assert_eq!(preds[0], preds[1]);
    }

    #[test]
    fn exact_fit() {
        let model = fit(&xy(vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0])).unwrap();
        assert!(model.coefficient("intercept").unwrap().abs() < 1e-10);
        assert!((model.coefficient("x").unwrap() - 2.0).abs() < 1e-10);
        let preds = predict(&model, &xy(vec![10.0], vec![0.0]), UnseenLevelPolicy::Error).unwrap();
        assert!((preds[0] - 20.0).abs() < 1e-9);
    }

    #[test]
    fn duplicate_column_is_aliased_and_predictions_hold() {
        let x = vec![1.0, 2.0, 3.0];
        let y = [2.0, 4.0, 6.0];
        let base = DesignMatrix::from_columns(
            vec!["intercept".into(), "x".into()],
            vec![vec![1.0; 3], x.clone()],
        )
        .unwrap();
        let dup = DesignMatrix::from_columns(
            vec!["intercept".into(), "x".into(), "x2".into()],
            vec![vec![1.0; 3], x.clone(), x],
        )
        .unwrap();
        let a = fit_ols(&base, &y).unwrap();
        let b = fit_ols(&dup, &y).unwrap();
        assert_eq!(b.aliased, vec!["x2"]);
        assert_eq!(b.rank, 2);
        let pa = a.evaluate(&base).unwrap();
        let pb = b.evaluate(&dup).unwrap();
        for (p, q) in pa.iter().zip(&pb) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn interpolates_training_data_of_consistent_system() {
        let ds = xy(vec![1.0, 4.0, 2.0, 8.0], vec![5.0, 14.0, 8.0, 26.0]);
        let model = fit(&ds).unwrap();
        let preds = predict(&model, &ds, UnseenLevelPolicy::Error).unwrap();
        for (p, y) in preds.iter().zip(ds.response().unwrap()) {
            assert!((p - y).abs() < 1e-10);
        }
    }

    #[test]
    fn single_row_or_mismatch_is_fit_error() {
        let design = DesignMatrix::from_columns(vec!["intercept".into()], vec![vec![1.0]]).unwrap();
        assert!(matches!(fit_ols(&design, &[1.0]), Err(Error::Fit(_))));
        assert!(matches!(fit_ols(&design, &[1.0, 2.0]), Err(Error::Fit(_))));
    }

    #[test]
    fn reference_level_choice_does_not_change_predictions() {
        // same rows, different first-appearance order, so a different reference
        let a = Dataset::new(
            "a",
            vec![ColumnSchema::categorical("f"), ColumnSchema::numeric("x"), ColumnSchema::response("y")],
            vec![
                Column::from(vec!["p", "q", "r", "p", "q", "r"]),
                Column::from(vec![1.0, 2.0, 3.0, 4.0, 6.0, 5.0]),
                Column::from(vec![3.0, 7.0, 4.0, 9.0, 12.0, 8.0]),
            ],
        )
        .unwrap();
        let b = a.select(&[2, 1, 0, 5, 4, 3]);
        let ma = fit(&a).unwrap();
        let mb = fit(&b).unwrap();
        assert_ne!(ma.factor_levels["f"][0], mb.factor_levels["f"][0]);
        let pa = predict(&ma, &a, UnseenLevelPolicy::Error).unwrap();
        let pb = predict(&mb, &a, UnseenLevelPolicy::Error).unwrap();
        for (p, q) in pa.iter().zip(&pb) {
            assert!((p - q).abs() < 1e-9 * p.abs().max(1.0));
        }
    }

    #[test]
    fn model_json_roundtrip() {
        let model = fit(&factor_ds(vec!["a", "b", "a", "c"])).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        assert!(json.contains("\"factor_levels\""));
        let back: FittedLinearModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, model);
    }
}
