//! Evaluation reports in JSON, CSV and aligned-table form, and the canned
//! benchmark experiments.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::metrics::{MeanStd, Metric, MetricReport, Summary};
use crate::model::Atlm;
use crate::registry::{self, Prepared};
use crate::validation::{self, CvRun, ValidationOutcome, ValidationPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Table,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "table" => Ok(Format::Table),
            other => Err(Error::Plan(format!("unknown format '{other}'"))),
        }
    }
}

/// Metrics shown in the results tables, in column order.
pub const TABLE_METRICS: [Metric; 4] = [Metric::Lsd, Metric::Mmre, Metric::Pred25, Metric::ReStar];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRow {
    pub index: usize,
    pub train_size: usize,
    pub test_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub model: String,
    pub plan: String,
    pub seed: u64,
    pub rows: usize,
    pub raw_rows: usize,
    pub recipe_notes: Vec<String>,
    pub folds_succeeded: usize,
    pub folds_failed: usize,
    pub negative_sqrt_predictions: usize,
    pub folds: Vec<FoldRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pooled: Option<MetricReport>,
    pub summary: Summary,
}

impl EvaluationReport {
    pub fn new(prepared: &Prepared, outcome: &ValidationOutcome) -> Self {
        Self {
            dataset: outcome.dataset.clone(),
            model: outcome.model.clone(),
            plan: outcome.plan.kind.to_string(),
            seed: outcome.plan.seed,
            rows: prepared.dataset.n_rows(),
            raw_rows: prepared.raw_rows,
            recipe_notes: prepared.recipe.notes.clone(),
            folds_succeeded: outcome.succeeded,
            folds_failed: outcome.failed,
            negative_sqrt_predictions: outcome
                .folds
                .iter()
                .filter_map(|f| f.predictions.as_ref())
                .map(|p| p.negative_sqrt_predictions)
                .sum(),
            folds: outcome
                .folds
                .iter()
                .map(|f| FoldRow {
                    index: f.index,
                    train_size: f.train_size,
                    test_size: f.test_size,
                    metrics: f.metrics,
                    error: f.error.clone(),
                })
                .collect(),
            pooled: outcome.pooled,
            summary: outcome.summary.clone(),
        }
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self)?;
                s.push('\n');
                Ok(s)
            }
            Format::Csv => Ok(self.to_csv()),
            Format::Table => Ok(self.to_table()),
        }
    }

    fn to_csv(&self) -> String {
        let mut out = String::from("fold,train_size,test_size");
        for m in Metric::ALL {
            let _ = write!(out, ",{}", metric_key(m));
        }
        out.push_str(",error\n");
        let cell = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        for f in &self.folds {
            let _ = write!(out, "{},{},{}", f.index, f.train_size, f.test_size);
            for m in Metric::ALL {
                let _ = write!(out, ",{}", cell(f.metrics.and_then(|r| r.get(m))));
            }
            let _ = writeln!(out, ",{}", csv_escape(f.error.as_deref().unwrap_or("")));
        }
        for (label, pick) in [("mean", 0), ("std", 1)] {
            let _ = write!(out, "{label},,");
            for m in Metric::ALL {
                let v = self.summary.get(m).map(|s| if pick == 0 { s.mean } else { s.std });
                let _ = write!(out, ",{}", cell(v));
            }
            out.push_str(",\n");
        }
        out
    }

    fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} | {} | plan {} | seed {} | {} of {} folds succeeded",
            self.dataset,
            self.model,
            self.plan,
            self.seed,
            self.folds_succeeded,
            self.folds_succeeded + self.folds_failed
        );
        for note in &self.recipe_notes {
            let _ = writeln!(out, "note: {note}");
        }
        out.push_str(&metrics_table(&[(self.dataset.clone(), self.summary.clone())], &Metric::ALL));
        out
    }
}

fn metric_key(m: Metric) -> &'static str {
    match m {
        Metric::Lsd => "lsd",
        Metric::Mmre => "mmre",
        Metric::Pred25 => "pred25",
        Metric::ReStar => "re_star",
        Metric::Sa => "sa",
        Metric::Mar => "mar",
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn mean_std_cell(v: Option<MeanStd>) -> String {
    match v {
        Some(s) => format!("{:.2} ± {:.2}", s.mean, s.std),
        None => "n/a".to_string(),
    }
}

/// Fixed-width `mean ± std` table, one row per dataset.
pub fn metrics_table(rows: &[(String, Summary)], metrics: &[Metric]) -> String {
    const CELL: usize = 13;
    let name_width = rows.iter().map(|(n, _)| n.chars().count()).max().unwrap_or(0).max(10);
    let mut out = String::new();
    let _ = write!(out, "{:<name_width$}", "Data Set");
    for m in metrics {
        let _ = write!(out, "  {:>CELL$}", m.label());
    }
    out.push('\n');
    for (name, summary) in rows {
        let _ = write!(out, "{name:<name_width$}");
        for &m in metrics {
            // pad by chars, the ± sign is two bytes
            let cell = mean_std_cell(summary.get(m));
            let pad = CELL.saturating_sub(cell.chars().count());
            let _ = write!(out, "  {}{}", " ".repeat(pad), cell);
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Cocomo81 and Desharnais under 30 random 10-row holdouts.
    Table1,
    /// Cocomo81 and Maxwell under one tenfold cross-validation.
    Table2,
    /// 30 tenfold cross-validations of Cocomo81.
    Figure1,
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table1" => Ok(Experiment::Table1),
            "table2" => Ok(Experiment::Table2),
            "figure1" => Ok(Experiment::Figure1),
            other => Err(Error::Plan(format!(
                "unknown experiment '{other}' (table1, table2, figure1)"
            ))),
        }
    }
}

/// Seed used by every canned experiment.
pub const REPRODUCE_SEED: u64 = 1;
pub const FIGURE1_RUNS: usize = 30;

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Table1 => "table1",
            Experiment::Table2 => "table2",
            Experiment::Figure1 => "figure1",
        }
    }

    pub fn datasets(self) -> &'static [&'static str] {
        match self {
            Experiment::Table1 => &["cocomo81", "desharnais"],
            Experiment::Table2 => &["cocomo81", "maxwell"],
            Experiment::Figure1 => &["cocomo81"],
        }
    }

    pub fn plan(self) -> ValidationPlan {
        match self {
            Experiment::Table1 => ValidationPlan::holdout(10, 30, REPRODUCE_SEED),
            Experiment::Table2 | Experiment::Figure1 => ValidationPlan::kfold(10, REPRODUCE_SEED),
        }
    }
}

/// Output files of a canned experiment, name and contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    pub files: Vec<(String, String)>,
}

impl Bundle {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, contents) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

pub fn figure1_csv(runs: &[CvRun]) -> String {
    let mut out = String::from("run,seed,mean_re_star,std_err_re_star,folds\n");
    for r in runs {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.run, r.seed, r.re_star.mean, r.re_star_std_err, r.re_star.count
        );
    }
    out
}

pub fn reproduce(experiment: Experiment, data_dir: Option<&Path>, exec: Execution) -> Result<Bundle> {
    let prepared: Vec<Prepared> = experiment
        .datasets()
        .iter()
        .map(|name| registry::load_builtin(name, data_dir))
        .collect::<Result<_>>()?;
    let model = Atlm::default();
    let stem = experiment.name();

    if experiment == Experiment::Figure1 {
        let ds = &prepared[0].dataset;
        let runs = validation::repeat_cv_experiment(ds, 10, FIGURE1_RUNS, REPRODUCE_SEED, &model, exec)?;
        let mut summary = String::new();
        let _ = writeln!(
            summary,
            "{}: {} tenfold cross-validations, seeds {}..{}",
            ds.name(),
            runs.len(),
            REPRODUCE_SEED,
            REPRODUCE_SEED + runs.len() as u64 - 1
        );
        let means: Vec<f64> = runs.iter().map(|r| r.re_star.mean).collect();
        let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(summary, "mean RE* per run ranges from {lo:.4} to {hi:.4}");
        return Ok(Bundle {
            files: vec![
                (format!("{stem}.csv"), figure1_csv(&runs)),
                (format!("{stem}.txt"), summary),
            ],
        });
    }

    let plan = experiment.plan();
    let mut reports = Vec::new();
    for p in &prepared {
        let outcome = validation::run_validation(&p.dataset, &plan, &model, exec)?;
        reports.push(EvaluationReport::new(p, &outcome));
    }
    let mut table = String::new();
    let _ = writeln!(
        table,
        "ATLM, plan {}, seed {} (mean ± std. dev. over folds)",
        plan.kind, plan.seed
    );
    let rows: Vec<(String, Summary)> = reports
        .iter()
        .map(|r| (r.dataset.clone(), r.summary.clone()))
        .collect();
    table.push_str(&metrics_table(&rows, &TABLE_METRICS));
    for r in &reports {
        let _ = writeln!(
            table,
            "{}: {} of {} folds succeeded",
            r.dataset,
            r.folds_succeeded,
            r.folds_succeeded + r.folds_failed
        );
        for note in &r.recipe_notes {
            let _ = writeln!(table, "{}: {}", r.dataset, note);
        }
    }
    let mut json = serde_json::to_string_pretty(&reports)?;
    json.push('\n');
    Ok(Bundle {
        files: vec![(format!("{stem}.txt"), table), (format!("{stem}.json"), json)],
    })
}
