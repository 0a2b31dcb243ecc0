//! Leave-one-out, k-fold and repeated random holdout evaluation with seeded,
//! exportable fold assignments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{split, Dataset};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::metrics::{self, MeanStd, MetricReport, Summary};
use crate::model::{EffortModel, PredictionSet};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum PlanKind {
    Loocv,
    KFold { k: usize },
    RepeatedHoldout { test_size: usize, repeats: usize },
}

impl fmt::Display for PlanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanKind::Loocv => f.write_str("loocv"),
            PlanKind::KFold { k } => write!(f, "kfold:{k}"),
            PlanKind::RepeatedHoldout { test_size, repeats } => {
                write!(f, "holdout:{test_size}x{repeats}")
            }
        }
    }
}

impl FromStr for PlanKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Plan(format!(
                "expected 'loocv', 'kfold:K' or 'holdout:SxR', got '{s}'"
            ))
        };
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        match s.trim().split_once(':') {
            None if s.trim() == "loocv" => Ok(PlanKind::Loocv),
            Some(("kfold", k)) => Ok(PlanKind::KFold { k: num(k)? }),
            Some(("holdout", rest)) => {
                let (size, repeats) = rest.split_once('x').ok_or_else(bad)?;
                Ok(PlanKind::RepeatedHoldout {
                    test_size: num(size)?,
                    repeats: num(repeats)?,
                })
            }
            _ => Err(bad()),
        }
    }
}

impl From<PlanKind> for String {
    fn from(kind: PlanKind) -> String {
        kind.to_string()
    }
}

impl TryFrom<String> for PlanKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationPlan {
    pub kind: PlanKind,
    pub seed: u64,
}

impl ValidationPlan {
    pub fn new(kind: PlanKind, seed: u64) -> Self {
        Self { kind, seed }
    }

    pub fn loocv() -> Self {
        Self::new(PlanKind::Loocv, 0)
    }

    pub fn kfold(k: usize, seed: u64) -> Self {
        Self::new(PlanKind::KFold { k }, seed)
    }

    pub fn holdout(test_size: usize, repeats: usize, seed: u64) -> Self {
        Self::new(PlanKind::RepeatedHoldout { test_size, repeats }, seed)
    }

    pub fn check(&self, n: usize) -> Result<()> {
        match self.kind {
            PlanKind::Loocv if n < 2 => Err(Error::Plan(format!("loocv needs 2 or more rows, got {n}"))),
            PlanKind::KFold { k } if k < 2 || k > n => {
                Err(Error::Plan(format!("kfold needs 2 <= k <= {n}, got k = {k}")))
            }
            PlanKind::RepeatedHoldout { test_size, repeats }
                if test_size == 0 || test_size >= n || repeats == 0 =>
            {
                Err(Error::Plan(format!(
                    "holdout needs 1 <= test size < {n} and at least one repeat, got {test_size}x{repeats}"
                )))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Train/test row positions for every fold of a plan. Positions index the
/// prepared dataset; `row_ids` maps them back to source rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub dataset: String,
    pub dataset_fingerprint: String,
    pub plan: ValidationPlan,
    pub n_rows: usize,
    pub row_ids: Vec<usize>,
    pub folds: Vec<Fold>,
}

impl FoldAssignment {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn complement(n: usize, test: &[usize]) -> Vec<usize> {
    let mut in_test = vec![false; n];
    for &t in test {
        in_test[t] = true;
    }
    (0..n).filter(|&i| !in_test[i]).collect()
}

/// Deterministic folds for `plan` over the rows of `ds`. Test and train
/// position lists are sorted ascending.
///
/// k-fold shuffles `0..n` once; the first `n mod k` folds take
/// `n / k + 1` consecutive shuffled positions, the rest `n / k`. Holdout
/// shuffles a fresh `0..n` per repeat from one continuing stream and takes
/// the first `test_size` positions as the test set.
pub fn generate_folds(ds: &Dataset, plan: &ValidationPlan) -> Result<FoldAssignment> {
    let n = ds.n_rows();
    plan.check(n)?;
    let mut rng = SplitMix64::new(plan.seed);
    let folds = match plan.kind {
        PlanKind::Loocv => (0..n)
            .map(|i| Fold {
                train: complement(n, &[i]),
                test: vec![i],
            })
            .collect(),
        PlanKind::KFold { k } => {
            let mut perm: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut perm);
            let (base, extra) = (n / k, n % k);
            let mut start = 0;
            (0..k)
                .map(|f| {
                    let size = base + usize::from(f < extra);
                    let mut test = perm[start..start + size].to_vec();
                    start += size;
                    test.sort_unstable();
                    Fold {
                        train: complement(n, &test),
                        test,
                    }
                })
                .collect()
        }
        PlanKind::RepeatedHoldout { test_size, repeats } => (0..repeats)
            .map(|_| {
                let mut perm: Vec<usize> = (0..n).collect();
                rng.shuffle(&mut perm);
                let mut test = perm[..test_size].to_vec();
                test.sort_unstable();
                Fold {
                    train: complement(n, &test),
                    test,
                }
            })
            .collect(),
    };
    Ok(FoldAssignment {
        dataset: ds.name().to_string(),
        dataset_fingerprint: ds.fingerprint(),
        plan: *plan,
        n_rows: n,
        row_ids: ds.row_ids().to_vec(),
        folds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub index: usize,
    pub train_size: usize,
    pub test_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predictions: Option<PredictionSet>,
    /// `CODE: message` for a fold that could not be evaluated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    random_guess_mar: Option<f64>,
}

impl FoldOutcome {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationOutcome {
    pub dataset: String,
    pub model: String,
    pub plan: ValidationPlan,
    pub folds: Vec<FoldOutcome>,
    pub succeeded: usize,
    pub failed: usize,
    /// Metrics over all held-out rows together; set for leave-one-out,
    /// where single-row folds leave most metrics undefined.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pooled: Option<MetricReport>,
    pub summary: Summary,
}

impl ValidationOutcome {
    pub fn predictions(&self) -> PredictionSet {
        let mut all = PredictionSet::default();
        for fold in &self.folds {
            if let Some(p) = &fold.predictions {
                all.extend(p.clone());
            }
        }
        all
    }
}

fn run_fold(
    ds: &Dataset,
    index: usize,
    fold: &Fold,
    model: &dyn EffortModel,
) -> FoldOutcome {
    let attempt = || -> Result<(PredictionSet, MetricReport, Option<f64>)> {
        let (train, test) = split(ds, &fold.train, &fold.test)?;
        let predictions = model.fit_predict(&train, &test)?;
        let training_response = train.response()?;
        let report = MetricReport::compute(&predictions, &training_response);
        let mar_p0 = metrics::random_guess_mar(&predictions.actual(), &training_response).ok();
        Ok((predictions, report, mar_p0))
    };
    let (metrics, predictions, error, random_guess_mar) = match attempt() {
        Ok((p, r, m)) => (Some(r), Some(p), None, m),
        Err(e) => (None, None, Some(format!("{}: {e}", e.code())), None),
    };
    FoldOutcome {
        index,
        train_size: fold.train.len(),
        test_size: fold.test.len(),
        metrics,
        predictions,
        error,
        random_guess_mar,
    }
}

/// Evaluates `model` on every fold of a precomputed assignment.
pub fn run_folds(
    ds: &Dataset,
    folds: &FoldAssignment,
    model: &dyn EffortModel,
    exec: Execution,
) -> Result<ValidationOutcome> {
    if folds.n_rows != ds.n_rows() || folds.dataset_fingerprint != ds.fingerprint() {
        return Err(Error::Validation(
            "fold assignment was generated for different data".into(),
        ));
    }
    ds.ensure_complete()?;
    let indexed: Vec<(usize, &Fold)> = folds.folds.iter().enumerate().collect();
    let outcomes = exec.map(&indexed, |&(i, fold)| run_fold(ds, i, fold, model));

    let succeeded = outcomes.iter().filter(|o| o.succeeded()).count();
    let failed = outcomes.len() - succeeded;
    if succeeded == 0 {
        let first = outcomes
            .iter()
            .find_map(|o| o.error.clone())
            .unwrap_or_default();
        return Err(Error::Validation(format!(
            "all {failed} folds failed; first: {first}"
        )));
    }

    let (pooled, summary) = if folds.plan.kind == PlanKind::Loocv {
        let mut all = PredictionSet::default();
        let mut guess = Vec::new();
        for o in outcomes.iter().filter(|o| o.succeeded()) {
            all.extend(o.predictions.clone().unwrap_or_default());
            guess.extend(o.random_guess_mar);
        }
        let mar_p0 = (guess.len() == all.len()).then(|| guess.iter().sum::<f64>() / guess.len() as f64);
        let pooled = MetricReport::with_random_guess_mar(&all, mar_p0);
        (Some(pooled), metrics::aggregate(&[pooled])?)
    } else {
        let reports: Vec<MetricReport> = outcomes.iter().filter_map(|o| o.metrics).collect();
        (None, metrics::aggregate(&reports)?)
    };

    Ok(ValidationOutcome {
        dataset: ds.name().to_string(),
        model: model.name().to_string(),
        plan: folds.plan,
        folds: outcomes,
        succeeded,
        failed,
        pooled,
        summary,
    })
}

pub fn run_validation(
    ds: &Dataset,
    plan: &ValidationPlan,
    model: &dyn EffortModel,
    exec: Execution,
) -> Result<ValidationOutcome> {
    let folds = generate_folds(ds, plan)?;
    run_folds(ds, &folds, model, exec)
}

/// Mean RE* of one k-fold run and its standard error across folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRun {
    pub run: usize,
    pub seed: u64,
    pub re_star: MeanStd,
    pub re_star_std_err: f64,
    pub summary: Summary,
    pub failed_folds: usize,
}

/// `runs` independent k-fold evaluations with seeds `base_seed + run`.
pub fn repeat_cv_experiment(
    ds: &Dataset,
    k: usize,
    runs: usize,
    base_seed: u64,
    model: &dyn EffortModel,
    exec: Execution,
) -> Result<Vec<CvRun>> {
    if runs < 2 {
        return Err(Error::Plan(format!("need at least 2 runs, got {runs}")));
    }
    ValidationPlan::kfold(k, base_seed).check(ds.n_rows())?;
    let indices: Vec<usize> = (0..runs).collect();
    exec.map(&indices, |&run| {
        let seed = base_seed.wrapping_add(run as u64);
        let outcome = run_validation(ds, &ValidationPlan::kfold(k, seed), model, Execution::Sequential)?;
        let re_star = outcome.summary.re_star.ok_or_else(|| {
            Error::Validation(format!("run {run}: RE* undefined in every fold"))
        })?;
        Ok(CvRun {
            run,
            seed,
            re_star,
            re_star_std_err: re_star.std_err(),
            summary: outcome.summary,
            failed_folds: outcome.failed,
        })
    })
    .into_iter()
    .collect()
}
