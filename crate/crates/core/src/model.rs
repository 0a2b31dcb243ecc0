//! The end-to-end baseline: choose transforms on the training rows, transform
//! train and test, fit least squares, predict, and map predictions back to
//! the original effort scale.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linmodel::{self, FittedLinearModel, UnseenLevelPolicy};
use crate::transform::{self, TransformKind, TransformTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlmModel {
    pub transforms: TransformTable,
    pub linear: FittedLinearModel,
    pub training_fingerprint: String,
}

impl AtlmModel {
    /// Checks that `training` is exactly the data this model was fitted on.
    pub fn verify_training(&self, training: &Dataset) -> Result<()> {
        if training.fingerprint() == self.training_fingerprint {
            Ok(())
        } else {
            Err(Error::Model("training data fingerprint mismatch".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub row_id: usize,
    pub predicted: f64,
    pub actual: f64,
}

/// Predicted and actual effort in original units, one entry per test row.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub rows: Vec<Prediction>,
    /// Predictions that were negative on a square-root response scale before
    /// squaring; a sign of extrapolation.
    #[serde(default)]
    pub negative_sqrt_predictions: usize,
}

impl PredictionSet {
    pub fn from_pairs(predicted: &[f64], actual: &[f64]) -> Self {
        let rows = predicted
            .iter()
            .zip(actual)
            .enumerate()
            .map(|(row_id, (&predicted, &actual))| Prediction {
                row_id,
                predicted,
                actual,
            })
            .collect();
        Self {
            rows,
            negative_sqrt_predictions: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn predicted(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.predicted).collect()
    }

    pub fn actual(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.actual).collect()
    }

    pub fn extend(&mut self, other: PredictionSet) {
        self.rows.extend(other.rows);
        self.negative_sqrt_predictions += other.negative_sqrt_predictions;
    }

    /// `row_id,predicted,actual` with round-trippable number formatting.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["row_id", "predicted", "actual"])?;
        for r in &self.rows {
            w.write_record([
                r.row_id.to_string(),
                r.predicted.to_string(),
                r.actual.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

pub fn atlm_fit(training: &Dataset) -> Result<AtlmModel> {
    training.ensure_complete()?;
    if training.n_rows() < 3 {
        return Err(Error::DegenerateSample(format!(
            "training needs at least 3 rows, got {}",
            training.n_rows()
        )));
    }
    let transforms = transform::calculate_transforms(training)?;
    let transformed = transform::apply_transforms(&transforms, training)?;
    let mut linear = linmodel::fit(&transformed)?;
    let training_fingerprint = training.fingerprint();
    linear.training_fingerprint = Some(training_fingerprint.clone());
    Ok(AtlmModel {
        transforms,
        linear,
        training_fingerprint,
    })
}

pub fn atlm_predict(
    model: &AtlmModel,
    test: &Dataset,
    policy: UnseenLevelPolicy,
) -> Result<PredictionSet> {
    test.ensure_complete()?;
    if test.response_name() != model.linear.response {
        return Err(Error::Model(format!(
            "test response '{}' differs from training response '{}'",
            test.response_name(),
            model.linear.response
        )));
    }
    let transformed = transform::apply_transforms(&model.transforms, test)?;
    let scaled = linmodel::predict(&model.linear, &transformed, policy)?;
    let negative_sqrt_predictions = match model.transforms.response() {
        Some(e) if e.transform == TransformKind::Sqrt => scaled.iter().filter(|&&p| p < 0.0).count(),
        _ => 0,
    };
    let predicted = transform::invert_predictions(&model.transforms, &scaled)?;
    let actual = test.response()?;
    let mut rows = Vec::with_capacity(predicted.len());
    for ((&row_id, &p), &a) in test.row_ids().iter().zip(&predicted).zip(&actual) {
        if !p.is_finite() {
            return Err(Error::Model(format!("non-finite prediction for row {row_id}")));
        }
        rows.push(Prediction {
            row_id,
            predicted: p,
            actual: a,
        });
    }
    Ok(PredictionSet {
        rows,
        negative_sqrt_predictions,
    })
}

/// A model that can be evaluated under a validation plan.
pub trait EffortModel: Sync {
    fn name(&self) -> &str;

    fn fit_predict(&self, train: &Dataset, test: &Dataset) -> Result<PredictionSet>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Atlm {
    pub unseen_levels: UnseenLevelPolicy,
}

impl EffortModel for Atlm {
    fn name(&self) -> &str {
        "ATLM"
    }

    fn fit_predict(&self, train: &Dataset, test: &Dataset) -> Result<PredictionSet> {
        let model = atlm_fit(train)?;
        atlm_predict(&model, test, self.unseen_levels)
    }
}

/// Predicts the training-response mean for every test row.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanBaseline;

impl EffortModel for MeanBaseline {
    fn name(&self) -> &str {
        "mean"
    }

    fn fit_predict(&self, train: &Dataset, test: &Dataset) -> Result<PredictionSet> {
        let y = train.response()?;
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let actual = test.response()?;
        Ok(PredictionSet {
            rows: test
                .row_ids()
                .iter()
                .zip(actual)
                .map(|(&row_id, actual)| Prediction {
                    row_id,
                    predicted: mean,
                    actual,
                })
                .collect(),
            negative_sqrt_predictions: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, ColumnSchema};

    fn xy(x: Vec<f64>, y: Vec<f64>) -> Dataset {
        Dataset::new(
            "xy",
            vec![ColumnSchema::numeric("x"), ColumnSchema::response("y")],
            vec![Column::from(x), Column::from(y)],
        )
        .unwrap()
    }

    #[test]
    fn exponential_response_selects_log_and_fits_exactly() {
        let x: Vec<f64> = vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0];
        let y: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let ds = xy(x.clone(), y.clone());
        let model = atlm_fit(&ds).unwrap();
        assert_eq!(model.transforms.response().unwrap().transform, TransformKind::Log);
        assert_eq!(model.transforms.get("x").unwrap().transform, TransformKind::None);
        let transformed = transform::apply_transforms(&model.transforms, &ds).unwrap();
        let fitted = linmodel::predict(&model.linear, &transformed, UnseenLevelPolicy::Error).unwrap();
        let residual: f64 = fitted
            .iter()
            .zip(transformed.response().unwrap())
            .map(|(f, t)| (f - t).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(residual < 1e-8, "residual norm {residual}");
    }

    #[test]
    fn factor_only_model() {
        let ds = Dataset::new(
            "f",
            vec![ColumnSchema::categorical("lang"), ColumnSchema::response("effort")],
            vec![
                Column::from(vec!["cobol", "4gl", "cobol", "4gl", "adv"]),
                Column::from(vec![10.0, 20.0, 12.0, 22.0, 15.0]),
            ],
        )
        .unwrap();
        let model = atlm_fit(&ds).unwrap();
        assert_eq!(model.transforms.get("lang").unwrap().transform, TransformKind::None);
        assert_eq!(model.linear.design, vec!["intercept", "lang=4gl", "lang=adv"]);
    }

    #[test]
    fn two_rows_is_degenerate() {
        let ds = xy(vec![1.0, 2.0], vec![3.0, 4.0]);
        assert!(matches!(atlm_fit(&ds), Err(Error::DegenerateSample(_))));
    }

    fn linear_ds() -> Dataset {
        // y = 2x with x symmetric, so no transform is chosen
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let y = x.iter().map(|v| 2.0 * v).collect();
        xy(x, y)
    }

    #[test]
    fn exact_linear_recovery() {
        let model = atlm_fit(&linear_ds()).unwrap();
        assert!(model.transforms.entries.iter().all(|e| e.transform == TransformKind::None));
        let ps = atlm_predict(&model, &xy(vec![7.0], vec![14.0]), UnseenLevelPolicy::Error).unwrap();
        assert!((ps.rows[0].predicted - 14.0).abs() < 1e-9);
        assert_eq!(ps.rows[0].actual, 14.0);
    }

    #[test]
    fn predicting_training_set_returns_actuals_and_is_deterministic() {
        let ds = linear_ds();
        let model = atlm_fit(&ds).unwrap();
        let a = atlm_predict(&model, &ds, UnseenLevelPolicy::Error).unwrap();
        let b = atlm_predict(&atlm_fit(&ds).unwrap(), &ds, UnseenLevelPolicy::Error).unwrap();
        assert_eq!(a, b);
        for r in &a.rows {
            assert!((r.predicted - r.actual).abs() < 1e-9);
        }
        model.verify_training(&ds).unwrap();
        assert!(model.verify_training(&xy(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 4.0])).is_err());
    }

    #[test]
    fn actuals_are_untransformed() {
        let x: Vec<f64> = (1..=10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| (0.3 * v).exp() * 10.0 + v).collect();
        let ds = xy(x, y.clone());
        let model = atlm_fit(&ds).unwrap();
        assert_ne!(model.transforms.response().unwrap().transform, TransformKind::None);
        let ps = atlm_predict(&model, &ds, UnseenLevelPolicy::Error).unwrap();
        assert_eq!(ps.actual(), y);
    }

    #[test]
    fn test_value_outside_training_domain_aborts() {
        let x: Vec<f64> = vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
        let y: Vec<f64> = x.iter().map(|v| v * 3.0).collect();
        let model = atlm_fit(&xy(x, y)).unwrap();
        assert_eq!(model.transforms.get("x").unwrap().transform, TransformKind::Log);
        let err = atlm_predict(&model, &xy(vec![0.0], vec![1.0]), UnseenLevelPolicy::Error);
        assert!(matches!(err, Err(Error::Domain { .. })));
    }

    #[test]
    fn prediction_csv_export() {
        let ps = PredictionSet {
            rows: vec![
                Prediction { row_id: 3, predicted: 14.5, actual: 14.0 },
                Prediction { row_id: 9, predicted: 0.1, actual: 2.0 },
            ],
            negative_sqrt_predictions: 0,
        };
        assert_eq!(
            ps.to_csv_string().unwrap(),
            "row_id,predicted,actual\n3,14.5,14\n9,0.1,2\n"
        );
    }

    #[test]
    fn mean_baseline_predicts_training_mean() {
        let ps = MeanBaseline
            .fit_predict(&linear_ds(), &xy(vec![0.0, 1.0], vec![5.0, 9.0]))
            .unwrap();
        assert_eq!(ps.predicted(), vec![6.0, 6.0]);
        assert_eq!(ps.actual(), vec![5.0, 9.0]);
    }
}
