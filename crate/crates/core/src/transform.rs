//! Per-variable choice among no transform, natural log and square root, picking
//! whichever leaves the training column least skewed.

use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{Column, Dataset, Kind, Role};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    None,
    Log,
    Sqrt,
}

impl TransformKind {
    /// Candidates in tie-break preference order.
    pub const CANDIDATES: [TransformKind; 3] =
        [TransformKind::None, TransformKind::Log, TransformKind::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            TransformKind::None => "none",
            TransformKind::Log => "log",
            TransformKind::Sqrt => "sqrt",
        }
    }

    pub fn inverse_name(self) -> &'static str {
        match self {
            TransformKind::None => "identity",
            TransformKind::Log => "exp",
            TransformKind::Sqrt => "square",
        }
    }

    pub fn admits(self, x: f64) -> bool {
        match self {
            TransformKind::None => true,
            TransformKind::Log => x > 0.0,
            TransformKind::Sqrt => x >= 0.0,
        }
    }

    pub fn forward(self, x: f64) -> f64 {
        match self {
            TransformKind::None => x,
            TransformKind::Log => x.ln(),
            TransformKind::Sqrt => x.sqrt(),
        }
    }

    /// Total on the reals; squaring loses the sign of a negative input.
    pub fn inverse(self, y: f64) -> f64 {
        match self {
            TransformKind::None => y,
            TransformKind::Log => y.exp(),
            TransformKind::Sqrt => y * y,
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sample skewness `b1 = g1 * ((n-1)/n)^(3/2)` with `g1 = m3 / m2^(3/2)` and
/// central moments taken with a `1/n` denominator.
pub fn skewness_b1(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 3 {
        return Err(Error::DegenerateSample(format!(
            "skewness needs at least 3 values, got {n}"
        )));
    }
    if values.iter().all(|&v| v == values[0]) {
        return Err(Error::DegenerateSample("constant sample".into()));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3) = (0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
    }
    m2 /= nf;
    m3 /= nf;
    if m2.is_nan() || m2 <= 0.0 {
        return Err(Error::DegenerateSample("zero variance".into()));
    }
    let g1 = m3 / m2.powf(1.5);
    Ok(g1 * ((nf - 1.0) / nf).powf(1.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SkewMarker {
    Inadmissible,
    Degenerate,
}

/// Skewness of one candidate transform, or why it has none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Skew {
    Value(f64),
    Marker(SkewMarker),
}

impl Skew {
    pub fn value(self) -> Option<f64> {
        match self {
            Skew::Value(v) => Some(v),
            Skew::Marker(_) => None,
        }
    }
}

impl fmt::Display for Skew {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Skew::Value(v) => write!(f, "{v:.6}"),
            Skew::Marker(SkewMarker::Inadmissible) => f.write_str("inadmissible"),
            Skew::Marker(SkewMarker::Degenerate) => f.write_str("degenerate"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub transform: TransformKind,
    pub skewness: Skew,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformEntry {
    pub variable: String,
    pub kind: Kind,
    pub role: Role,
    pub transform: TransformKind,
    /// Skewness after the chosen transform; `None` for factors and
    /// degenerate columns.
    pub skewness: Option<f64>,
    /// Empty for categorical variables.
    pub candidates: Vec<Candidate>,
}

impl TransformEntry {
    pub fn is_degenerate(&self) -> bool {
        self.kind == Kind::Numeric && self.skewness.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformTable {
    pub entries: Vec<TransformEntry>,
}

impl TransformTable {
    pub fn get(&self, variable: &str) -> Option<&TransformEntry> {
        self.entries.iter().find(|e| e.variable == variable)
    }

    pub fn response(&self) -> Option<&TransformEntry> {
        self.entries.iter().find(|e| e.role == Role::Response)
    }

    /// A table choosing no transform for every modelled variable of `ds`.
    pub fn identity(ds: &Dataset) -> Self {
        let entries = ds
            .modelled()
            .map(|(col, _)| TransformEntry {
                variable: col.name.clone(),
                kind: col.kind,
                role: col.role,
                transform: TransformKind::None,
                skewness: None,
                candidates: Vec::new(),
            })
            .collect();
        Self { entries }
    }

    /// Aligned plain-text report, one line per variable.
    pub fn to_text(&self) -> String {
        let width = self
            .entries
            .iter()
            .map(|e| e.variable.len())
            .max()
            .unwrap_or(8)
            .max(8);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:<11}  {:<11}  {:<6}  {:>12}  {:>12}  {:>12}",
            "variable", "kind", "role", "chosen", "none", "log", "sqrt"
        );
        for e in &self.entries {
            let cell = |k: TransformKind| {
                e.candidates
                    .iter()
                    .find(|c| c.transform == k)
                    .map_or_else(|| "-".to_string(), |c| c.skewness.to_string())
            };
            let chosen = if e.is_degenerate() {
                format!("{} (degenerate)", e.transform)
            } else {
                e.transform.to_string()
            };
            let _ = writeln!(
                out,
                "{:<width$}  {:<11}  {:<11}  {:<6}  {:>12}  {:>12}  {:>12}",
                e.variable,
                e.kind.to_string(),
                e.role.to_string(),
                chosen,
                cell(TransformKind::None),
                cell(TransformKind::Log),
                cell(TransformKind::Sqrt),
            );
        }
        out
    }
}

/// Scores every candidate on one column and picks the admissible one with
/// the smallest absolute skewness. Ties keep the earlier candidate.
fn choose(values: &[f64]) -> (TransformKind, Option<f64>, Vec<Candidate>) {
    let mut candidates = Vec::with_capacity(3);
    let mut best: Option<(TransformKind, f64)> = None;
    for kind in TransformKind::CANDIDATES {
        let skewness = if !values.iter().all(|&x| kind.admits(x)) {
            Skew::Marker(SkewMarker::Inadmissible)
        } else {
            let transformed: Vec<f64> = values.iter().map(|&x| kind.forward(x)).collect();
            match skewness_b1(&transformed) {
                Ok(s) => Skew::Value(s),
                Err(_) => Skew::Marker(SkewMarker::Degenerate),
            }
        };
        if let Skew::Value(s) = skewness {
            if best.is_none_or(|(_, b)| s.abs() < b.abs()) {
                best = Some((kind, s));
            }
        }
        candidates.push(Candidate {
            transform: kind,
            skewness,
        });
    }
    match best {
        Some((kind, s)) => (kind, Some(s), candidates),
        None => (TransformKind::None, None, candidates),
    }
}

/// Chooses a transform for every modelled variable of the training data.
/// Factors always get `none`; so do constant or too-short columns.
pub fn calculate_transforms(training: &Dataset) -> Result<TransformTable> {
    let mut entries = Vec::new();
    for (col, data) in training.modelled() {
        let entry = match data {
            Column::Categorical(_) => TransformEntry {
                variable: col.name.clone(),
                kind: col.kind,
                role: col.role,
                transform: TransformKind::None,
                skewness: None,
                candidates: Vec::new(),
            },
            Column::Numeric(_) => {
                let values = training.numeric(&col.name)?;
                let (transform, skewness, candidates) = choose(&values);
                TransformEntry {
                    variable: col.name.clone(),
                    kind: col.kind,
                    role: col.role,
                    transform,
                    skewness,
                    candidates,
                }
            }
        };
        entries.push(entry);
    }
    Ok(TransformTable { entries })
}

/// Applies the forward transforms to every numeric modelled column.
pub fn apply_transforms(table: &TransformTable, ds: &Dataset) -> Result<Dataset> {
    let mut out = ds.clone();
    for (index, col) in ds.schema().iter().enumerate() {
        if col.role == Role::Ignored || col.kind != Kind::Numeric {
            continue;
        }
        let entry = table.get(&col.name).ok_or_else(|| {
            Error::Model(format!("transform table has no entry for '{}'", col.name))
        })?;
        if entry.transform == TransformKind::None {
            continue;
        }
        let values = ds.numeric(&col.name)?;
        let mut transformed = Vec::with_capacity(values.len());
        for (row, &x) in values.iter().enumerate() {
            if !entry.transform.admits(x) {
                return Err(Error::Domain {
                    variable: col.name.clone(),
                    row_id: ds.row_ids()[row],
                    value: x,
                    transform: entry.transform.name(),
                });
            }
            transformed.push(Some(entry.transform.forward(x)));
        }
        out.replace_column(index, Column::Numeric(transformed));
    }
    Ok(out)
}

/// Maps predictions from the transformed response scale back to original
/// units.
pub fn invert_predictions(table: &TransformTable, preds: &[f64]) -> Result<Vec<f64>> {
    let entry = table
        .response()
        .ok_or_else(|| Error::Model("transform table has no response entry".into()))?;
    Ok(preds.iter().map(|&p| entry.transform.inverse(p)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ColumnSchema;
    use std::f64::consts::E;

    /// Moments summed term by term in index order, straight from the
    /// definition.
    fn b1_oracle(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mut mean = 0.0;
        for v in x {
            mean += v;
        }
        mean /= n;
        let mut m2 = 0.0;
        let mut m3 = 0.0;
        for v in x {
            m2 += (v - mean).powi(2);
            m3 += (v - mean).powi(3);
        }
        m2 /= n;
        m3 /= n;
        (m3 / m2.powf(1.5)) * ((n - 1.0) / n).powf(1.5)
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn symmetric_sample_has_zero_skew() {
        assert_eq!(skewness_b1(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn constant_and_short_samples_are_degenerate() {
        assert!(matches!(
            skewness_b1(&[1.0, 1.0, 1.0]),
            Err(Error::DegenerateSample(_))
        ));
        assert!(matches!(
            skewness_b1(&[1.0, 2.0]),
            Err(Error::DegenerateSample(_))
        ));
        assert!(skewness_b1(&[0.1, 0.1, 0.1, 0.1]).is_err());
    }

    #[test]
    fn skewed_sample_matches_definition_oracle() {
        let x = [1.0, 2.0, 3.0, 4.0, 100.0];
        // Frozen from the oracle below, computed before the implementation.
        let frozen = 1.0715500375854998;
        assert!(rel_close(b1_oracle(&x), frozen, 1e-12));
        assert!(rel_close(skewness_b1(&x).unwrap(), frozen, 1e-12));
    }

    fn one_column(values: Vec<f64>) -> Dataset {
        let n = values.len();
        Dataset::new(
            "t",
            vec![ColumnSchema::numeric("v"), ColumnSchema::response("y")],
            vec![
                Column::from(values),
                Column::from((0..n).map(|i| i as f64 + 1.0).collect::<Vec<_>>()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn log_wins_on_exponential_column() {
        let col: Vec<f64> = [1.0, 2.0, 2.0, 3.0, 9.0].iter().map(|k: &f64| E.powf(*k)).collect();
        // Oracle values: none 1.0733, log 0.9453, sqrt 1.0715.
        let skews: Vec<f64> = TransformKind::CANDIDATES
            .iter()
            .map(|k| b1_oracle(&col.iter().map(|&x| k.forward(x)).collect::<Vec<_>>()).abs())
            .collect();
        assert!(skews[1] < skews[0] && skews[1] < skews[2]);
        let table = calculate_transforms(&one_column(col)).unwrap();
        assert_eq!(table.get("v").unwrap().transform, TransformKind::Log);
    }

    #[test]
    fn zero_skew_keeps_none() {
        let table = calculate_transforms(&one_column(vec![1.0, 2.0, 3.0])).unwrap();
        assert_eq!(table.get("v").unwrap().transform, TransformKind::None);
    }

    #[test]
    fn negative_values_exclude_log_and_sqrt() {
        let table = calculate_transforms(&one_column(vec![-1.0, 2.0, 30.0, 400.0])).unwrap();
        let entry = table.get("v").unwrap();
        assert_eq!(entry.transform, TransformKind::None);
        assert_eq!(
            entry.candidates[1].skewness,
            Skew::Marker(SkewMarker::Inadmissible)
        );
        assert_eq!(
            entry.candidates[2].skewness,
            Skew::Marker(SkewMarker::Inadmissible)
        );
    }

    #[test]
    fn zero_excludes_log_only() {
        let table = calculate_transforms(&one_column(vec![0.0, 1.0, 4.0, 100.0])).unwrap();
        let entry = table.get("v").unwrap();
        assert_eq!(entry.candidates[1].skewness, Skew::Marker(SkewMarker::Inadmissible));
        assert!(entry.candidates[2].skewness.value().is_some());
    }

    #[test]
    fn constant_column_is_degenerate_not_fatal() {
        let table = calculate_transforms(&one_column(vec![5.0; 4])).unwrap();
        let entry = table.get("v").unwrap();
        assert_eq!(entry.transform, TransformKind::None);
        assert!(entry.is_degenerate());
        assert!(table.to_text().contains("degenerate"));
    }

    #[test]
    fn factors_get_none() {
        let ds = Dataset::new(
            "t",
            vec![ColumnSchema::categorical("f"), ColumnSchema::response("y")],
            vec![
                Column::from(vec!["a", "b", "a"]),
                Column::from(vec![1.0, 10.0, 100.0]),
            ],
        )
        .unwrap();
        let table = calculate_transforms(&ds).unwrap();
        let f = table.get("f").unwrap();
        assert_eq!((f.transform, f.candidates.len()), (TransformKind::None, 0));
        assert_eq!(table.response().unwrap().variable, "y");
    }

    fn table_with(variable: &str, kind: TransformKind, role: Role) -> TransformTable {
        TransformTable {
            entries: vec![TransformEntry {
                variable: variable.into(),
                kind: Kind::Numeric,
                role,
                transform: kind,
                skewness: Some(0.0),
                candidates: Vec::new(),
            }],
        }
    }

    fn response_only(values: Vec<f64>) -> Dataset {
        Dataset::new("t", vec![ColumnSchema::response("effort")], vec![Column::from(values)]).unwrap()
    }

    #[test]
    fn exact_logarithms() {
        let ds = response_only(vec![1.0, E, E * E]);
        let table = table_with("effort", TransformKind::Log, Role::Response);
        let out = apply_transforms(&table, &ds).unwrap().response().unwrap();
        assert_eq!(out[0], 0.0);
        assert!((out[1] - 1.0).abs() < 1e-15);
        assert!((out[2] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn exact_roots() {
        let ds = Dataset::new(
            "t",
            vec![ColumnSchema::numeric("size"), ColumnSchema::response("y")],
            vec![Column::from(vec![0.0, 4.0, 9.0]), Column::from(vec![1.0, 2.0, 3.0])],
        )
        .unwrap();
        let mut table = table_with("size", TransformKind::Sqrt, Role::Explanatory);
        table.entries.push(TransformEntry {
            variable: "y".into(),
            kind: Kind::Numeric,
            role: Role::Response,
            transform: TransformKind::None,
            skewness: Some(0.0),
            candidates: Vec::new(),
        });
        let out = apply_transforms(&table, &ds).unwrap();
        assert_eq!(out.numeric("size").unwrap(), vec![0.0, 2.0, 3.0]);
        assert_eq!(out.response().unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn identity_table_leaves_data_alone() {
        let ds = one_column(vec![3.0, -1.0, 8.5]);
        assert_eq!(apply_transforms(&TransformTable::identity(&ds), &ds).unwrap(), ds);
    }

    #[test]
    fn out_of_domain_test_value_names_variable_and_row() {
        let ds = response_only(vec![3.0, 0.0]);
        let table = table_with("effort", TransformKind::Log, Role::Response);
        match apply_transforms(&table, &ds) {
            Err(Error::Domain {
                variable, row_id, ..
            }) => assert_eq!((variable.as_str(), row_id), ("effort", 1)),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn inverse_predictions() {
        let none = table_with("y", TransformKind::None, Role::Response);
        assert_eq!(invert_predictions(&none, &[5.0, 7.0]).unwrap(), vec![5.0, 7.0]);
        let log = table_with("y", TransformKind::Log, Role::Response);
        assert_eq!(invert_predictions(&log, &[0.0, 1.0]).unwrap(), vec![1.0, E]);
        let sqrt = table_with("y", TransformKind::Sqrt, Role::Response);
        assert_eq!(invert_predictions(&sqrt, &[3.0, -2.0]).unwrap(), vec![9.0, 4.0]);
        let no_response = table_with("x", TransformKind::Log, Role::Explanatory);
        assert!(invert_predictions(&no_response, &[1.0]).is_err());
    }

    #[test]
    fn json_marks_inadmissible_candidates() {
        let table = calculate_transforms(&one_column(vec![-1.0, 2.0, 30.0])).unwrap();
        let json = serde_json::to_string(&table).unwrap();
        assert!(json.contains("\"inadmissible\""));
        let back: TransformTable = serde_json::from_str(&json).unwrap();
        assert_eq!(back, table);
    }
}
