//! Group comparison of session metrics: boxplot summaries and pooled
//! two-sample t-tests.
//!
//! Quartiles are Tukey hinges. The t distribution is evaluated through the
//! regularized incomplete beta function, so no statistics crate is needed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{SessionReport, Stage};
use crate::metrics::Metric;

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("need at least 2 values per group, got {0} and {1}")]
    TooFewValues(usize, usize),
    #[error("degenerate samples: pooled variance is zero")]
    Degenerate,
    #[error("group {0} empty")]
    EmptyGroup(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxplotSummary {
    pub median: f64,
    pub lower_hinge: f64,
    pub upper_hinge: f64,
    pub mean: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

fn median_sorted(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn checked(values: &[f64]) -> Result<(), StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

pub fn boxplot_summary(values: &[f64]) -> Result<BoxplotSummary, StatsError> {
    checked(values)?;
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let half = n.div_ceil(2);
    let lower_hinge = median_sorted(&xs[..half]);
    let upper_hinge = median_sorted(&xs[n - half..]);
    let iqr = upper_hinge - lower_hinge;
    let (fence_low, fence_high) = (lower_hinge - 1.5 * iqr, upper_hinge + 1.5 * iqr);
    let inside = |v: &f64| *v >= fence_low && *v <= fence_high;
    Ok(BoxplotSummary {
        median: median_sorted(&xs),
        lower_hinge,
        upper_hinge,
        mean: mean(&xs),
        whisker_low: *xs.iter().find(|v| inside(v)).expect("hinges lie inside the fences"),
        whisker_high: *xs.iter().rev().find(|v| inside(v)).expect("hinges lie inside the fences"),
        outliers: xs.iter().copied().filter(|v| !inside(v)).collect(),
    })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TTestResult {
    pub t_value: f64,
    pub df: u32,
    pub p_value: f64,
    pub group_sizes: (usize, usize),
    pub group_means: (f64, f64),
    pub group_variances: (f64, f64),
}

/// Student's two-sample t-test with pooled variance. The statistic is
/// positive when `a` has the larger mean; `p_value` is two-tailed.
pub fn t_test(a: &[f64], b: &[f64]) -> Result<TTestResult, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::TooFewValues(a.len(), b.len()));
    }
    checked(a)?;
    checked(b)?;
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (m1, m2) = (mean(a), mean(b));
    let (v1, v2) = (variance(a), variance(b));
    let df = a.len() + b.len() - 2;
    let pooled = ((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / df as f64;
    if pooled <= 0.0 {
        return Err(StatsError::Degenerate);
    }
    let se = (pooled * (n1 + n2) / (n1 * n2)).sqrt();
    let t_value = (m1 - m2) / se;
    Ok(TTestResult {
        t_value,
        df: df as u32,
        p_value: two_tailed_p(t_value, df as f64),
        group_sizes: (a.len(), b.len()),
        group_means: (m1, m2),
        group_variances: (v1, v2),
    })
}

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
pub fn two_tailed_p(t: f64, df: f64) -> f64 {
    regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
}

/// P(T <= t).
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = two_tailed_p(t, df) / 2.0;
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// ln Γ(x) for x > 0, Lanczos approximation (g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// I_x(a, b), evaluated by the modified Lentz continued fraction.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        for num in [m * (b - m) * x / ((a + m2 - 1.0) * (a + m2)), -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0))] {
            d = 1.0 + num * d;
            if d.abs() < TINY {
                d = TINY;
            }
            c = 1.0 + num / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            h *= d * c;
            if (d * c - 1.0).abs() < EPS {
                return h;
            }
        }
    }
    h
}

/// The parts of a session report needed for group statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSample {
    pub session_id: String,
    pub metrics: BTreeMap<String, Option<f64>>,
    pub verdict: VerdictSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictSummary {
    pub perspicuous: bool,
    pub stage: Stage,
}

impl SessionSample {
    pub fn from_report(report: &SessionReport) -> Self {
        SessionSample {
            session_id: report.session_id.clone(),
            metrics: Metric::ALL.iter().map(|&m| (m.key().to_string(), report.metrics.get(m).to_f64())).collect(),
            verdict: VerdictSummary { perspicuous: report.verdict.perspicuous, stage: report.verdict.stage },
        }
    }

    pub fn metric(&self, metric: Metric) -> Option<f64> {
        self.metrics.get(metric.key()).copied().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricComparison {
    pub conjecture: &'static str,
    pub metric: &'static str,
    pub perspicuous: Option<BoxplotSummary>,
    pub non_perspicuous: Option<BoxplotSummary>,
    pub t_test: Option<TTestResult>,
    pub significant: bool,
    /// Set when this metric could not be tested.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupComparison {
    pub perspicuous_sessions: usize,
    pub non_perspicuous_sessions: usize,
    pub excluded_unknown: usize,
    pub rows: Vec<MetricComparison>,
}

/// Splits sessions by verdict and tests every metric in `metrics`. The
/// t statistic is perspicuous minus non-perspicuous. Missing metric values
/// are dropped per metric. With `exclude_unknown`, sessions whose soundness
/// check hit the state cap are left out entirely.
pub fn compare_groups(samples: &[SessionSample], metrics: &[Metric], exclude_unknown: bool) -> Result<GroupComparison, StatsError> {
    let excluded = |s: &&SessionSample| exclude_unknown && s.verdict.stage == Stage::StateSpaceExceeded;
    let kept: Vec<&SessionSample> = samples.iter().filter(|s| !excluded(s)).collect();
    let (persp, non): (Vec<&SessionSample>, Vec<&SessionSample>) = kept.iter().partition(|s| s.verdict.perspicuous);
    if persp.is_empty() {
        return Err(StatsError::EmptyGroup("perspicuous"));
    }
    if non.is_empty() {
        return Err(StatsError::EmptyGroup("non-perspicuous"));
    }
    if persp.len() < 2 || non.len() < 2 {
        return Err(StatsError::TooFewValues(persp.len(), non.len()));
    }

    let rows = metrics
        .iter()
        .map(|&metric| {
            let values = |group: &[&SessionSample]| group.iter().filter_map(|s| s.metric(metric)).collect::<Vec<f64>>();
            let (a, b) = (values(&persp), values(&non));
            let test = t_test(&a, &b);
            MetricComparison {
                conjecture: metric.conjecture(),
                metric: metric.name(),
                perspicuous: boxplot_summary(&a).ok(),
                non_perspicuous: boxplot_summary(&b).ok(),
                significant: test.as_ref().is_ok_and(|t| t.p_value < SIGNIFICANCE_LEVEL),
                error: test.as_ref().err().map(|e| e.to_string()),
                t_test: test.ok(),
            }
        })
        .collect();

    Ok(GroupComparison {
        perspicuous_sessions: persp.len(),
        non_perspicuous_sessions: non.len(),
        excluded_unknown: samples.len() - kept.len(),
        rows,
    })
}

/// Plain-text table: conjecture, metric, t, df, p and a star when
/// significant at the 95% level.
pub fn format_table(comparison: &GroupComparison) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<10} {:<26} {:>9} {:>5} {:>8}", "Conjecture", "Metric", "T-value", "df", "P-value");
    for row in &comparison.rows {
        match &row.t_test {
            Some(t) => {
                let star = if row.significant { " (*)" } else { "" };
                let _ = writeln!(out, "{:<10} {:<26} {:>9.3} {:>5} {:>8.3}{}", row.conjecture, row.metric, t.t_value, t.df, t.p_value, star);
            }
            None => {
                let reason = row.error.as_deref().unwrap_or("not tested");
                let _ = writeln!(out, "{:<10} {:<26} {:>9} {:>5} {:>8}  {}", row.conjecture, row.metric, "-", "-", "-", reason);
            }
        }
    }
    out
}
