//! Error measures over a [`PredictionSet`]: MMRE, PRED(x), LSD, RE*, MAR and
//! SA, plus mean ± standard deviation aggregation across folds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PredictionSet;

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample variance with an `n - 1` denominator, two-pass.
pub fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() as f64 - 1.0)
}

fn relative_errors(ps: &PredictionSet) -> Result<Vec<f64>> {
    if ps.is_empty() {
        return Err(Error::Metric("empty prediction set".into()));
    }
    ps.rows
        .iter()
        .map(|r| {
            if r.actual > 0.0 {
                Ok((r.predicted - r.actual).abs() / r.actual)
            } else {
                Err(Error::Metric(format!(
                    "relative error undefined for row {} (actual {})",
                    r.row_id, r.actual
                )))
            }
        })
        .collect()
}

pub fn mmre(ps: &PredictionSet) -> Result<f64> {
    Ok(mean(&relative_errors(ps)?))
}

/// Fraction of rows whose relative error is at most `x` percent.
pub fn pred(ps: &PredictionSet, x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::Metric(format!("PRED threshold must be positive, got {x}")));
    }
    let limit = x / 100.0;
    let mre = relative_errors(ps)?;
    Ok(mre.iter().filter(|&&e| e <= limit).count() as f64 / mre.len() as f64)
}

/// Residual variance over measured variance.
pub fn re_star(ps: &PredictionSet) -> Result<f64> {
    if ps.len() < 2 {
        return Err(Error::Metric("RE* needs at least two rows".into()));
    }
    let actual = ps.actual();
    let var_actual = sample_variance(&actual);
    if var_actual.is_nan() || var_actual <= 0.0 {
        return Err(Error::Metric("RE* undefined for constant actuals".into()));
    }
    let residuals: Vec<f64> = ps.rows.iter().map(|r| r.predicted - r.actual).collect();
    Ok(sample_variance(&residuals) / var_actual)
}

/// Logarithmic standard deviation: with `e = ln(actual) - ln(predicted)` and
/// `s2` its sample variance, `sqrt(sum((e + s2/2)^2) / (n - 1))`.
pub fn lsd(ps: &PredictionSet) -> Result<f64> {
    if ps.len() < 2 {
        return Err(Error::Metric("LSD needs at least two rows".into()));
    }
    let mut e = Vec::with_capacity(ps.len());
    for r in &ps.rows {
        if !(r.actual > 0.0 && r.predicted > 0.0) {
            return Err(Error::Metric(format!(
                "LSD undefined for row {} (predicted {}, actual {})",
                r.row_id, r.predicted, r.actual
            )));
        }
        e.push(r.actual.ln() - r.predicted.ln());
    }
    let s2 = sample_variance(&e);
    let sum: f64 = e.iter().map(|v| (v + s2 / 2.0).powi(2)).sum();
    Ok((sum / (e.len() as f64 - 1.0)).sqrt())
}

/// Mean absolute residual.
pub fn mar(ps: &PredictionSet) -> Result<f64> {
    if ps.is_empty() {
        return Err(Error::Metric("empty prediction set".into()));
    }
    Ok(mean(
        &ps.rows
            .iter()
            .map(|r| (r.predicted - r.actual).abs())
            .collect::<Vec<_>>(),
    ))
}

/// Expected MAR of guessing a uniformly drawn training response for each
/// test row: the mean of `|actual_i - train_j|` over all pairs.
pub fn random_guess_mar(actual: &[f64], training_response: &[f64]) -> Result<f64> {
    if actual.is_empty() || training_response.is_empty() {
        return Err(Error::Metric("random-guess MAR needs test and training values".into()));
    }
    let total: f64 = actual
        .iter()
        .map(|a| training_response.iter().map(|y| (a - y).abs()).sum::<f64>())
        .sum();
    Ok(total / (actual.len() * training_response.len()) as f64)
}

fn sa_from(mar: f64, mar_p0: f64) -> Result<f64> {
    if mar_p0.is_nan() || mar_p0 <= 0.0 {
        return Err(Error::Metric("SA undefined: random-guess MAR is zero".into()));
    }
    Ok(1.0 - mar / mar_p0)
}

/// Standardized accuracy against exact random guessing from the training
/// responses.
pub fn sa(ps: &PredictionSet, training_response: &[f64]) -> Result<f64> {
    sa_from(mar(ps)?, random_guess_mar(&ps.actual(), training_response)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n: usize,
    pub mmre: Option<f64>,
    pub pred25: Option<f64>,
    pub lsd: Option<f64>,
    pub re_star: Option<f64>,
    pub sa: Option<f64>,
    pub mar: Option<f64>,
}

impl MetricReport {
    /// Every metric that is defined on `ps`; undefined ones are `None`.
    pub fn compute(ps: &PredictionSet, training_response: &[f64]) -> Self {
        let mar_p0 = random_guess_mar(&ps.actual(), training_response).ok();
        Self::with_random_guess_mar(ps, mar_p0)
    }

    /// As [`MetricReport::compute`] with the SA denominator supplied, for
    /// pooled predictions whose rows came from different training sets.
    pub fn with_random_guess_mar(ps: &PredictionSet, mar_p0: Option<f64>) -> Self {
        let mar = mar(ps).ok();
        Self {
            n: ps.len(),
            mmre: mmre(ps).ok(),
            pred25: pred(ps, 25.0).ok(),
            lsd: lsd(ps).ok(),
            re_star: re_star(ps).ok(),
            sa: mar.zip(mar_p0).and_then(|(m, p)| sa_from(m, p).ok()),
            mar,
        }
    }

    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Lsd => self.lsd,
            Metric::Mmre => self.mmre,
            Metric::Pred25 => self.pred25,
            Metric::ReStar => self.re_star,
            Metric::Sa => self.sa,
            Metric::Mar => self.mar,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Lsd,
    Mmre,
    Pred25,
    ReStar,
    Sa,
    Mar,
}

impl Metric {
    /// Column order of the published results tables, followed by SA and MAR.
    pub const ALL: [Metric; 6] = [
        Metric::Lsd,
        Metric::Mmre,
        Metric::Pred25,
        Metric::ReStar,
        Metric::Sa,
        Metric::Mar,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Lsd => "LSD",
            Metric::Mmre => "MMRE",
            Metric::Pred25 => "PRED(25)",
            Metric::ReStar => "RE*",
            Metric::Sa => "SA",
            Metric::Mar => "MAR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; zero when only one value contributed.
    pub std: f64,
    /// Number of reports in which the metric was defined.
    pub count: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        match values.len() {
            0 => None,
            1 => Some(Self {
                mean: values[0],
                std: 0.0,
                count: 1,
            }),
            n => Some(Self {
                mean: mean(values),
                std: sample_variance(values).sqrt(),
                count: n,
            }),
        }
    }

    pub fn single_sample(&self) -> bool {
        self.count == 1
    }

    pub fn std_err(&self) -> f64 {
        self.std / (self.count as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub reports: usize,
    pub lsd: Option<MeanStd>,
    pub mmre: Option<MeanStd>,
    pub pred25: Option<MeanStd>,
    pub re_star: Option<MeanStd>,
    pub sa: Option<MeanStd>,
    pub mar: Option<MeanStd>,
}

impl Summary {
    pub fn get(&self, metric: Metric) -> Option<MeanStd> {
        match metric {
            Metric::Lsd => self.lsd,
            Metric::Mmre => self.mmre,
            Metric::Pred25 => self.pred25,
            Metric::ReStar => self.re_star,
            Metric::Sa => self.sa,
            Metric::Mar => self.mar,
        }
    }
}

/// Per-metric mean and sample standard deviation. A metric undefined in some
/// reports is summarised over the reports where it is defined.
pub fn aggregate(reports: &[MetricReport]) -> Result<Summary> {
    if reports.is_empty() {
        return Err(Error::Metric("nothing to aggregate".into()));
    }
    let over = |m: Metric| {
        let values: Vec<f64> = reports.iter().filter_map(|r| r.get(m)).collect();
        MeanStd::of(&values)
    };
    Ok(Summary {
        reports: reports.len(),
        lsd: over(Metric::Lsd),
        mmre: over(Metric::Mmre),
        pred25: over(Metric::Pred25),
        re_star: over(Metric::ReStar),
        sa: over(Metric::Sa),
        mar: over(Metric::Mar),
    })
}
