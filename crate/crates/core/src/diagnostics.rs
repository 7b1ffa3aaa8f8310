//! Outlier screening, model validation and adjusted lap-time differences.

use serde::{Deserialize, Serialize};

use crate::dataset::{LaneIndicator, UsablePair};
use crate::error::{Error, Result};
use crate::model::{self, Constraint, FitResult};
use crate::stats::{self, Bandwidth, KdeCurve, MomentScale};

pub const DEFAULT_THRESHOLD: f64 = 2.75;
pub const MIN_VALIDATION_PAIRS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Flag {
    T1,
    T2,
    T3,
}

/// Which tails of `t1` and `t2` are screened. `t3` is always two-sided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tails {
    /// Flag `|t1|` or `|t2|` above the threshold.
    #[default]
    TwoSided,
    /// Flag only slow runs, `t1` or `t2` above the threshold.
    UpperOnly,
}

impl std::str::FromStr for Tails {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "two_sided" | "two-sided" => Ok(Tails::TwoSided),
            "upper" | "upper_only" | "upper-only" => Ok(Tails::UpperOnly),
            _ => Err(format!("unknown tails {s:?} (expected two_sided or upper)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub threshold: f64,
    pub tails: Tails,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            threshold: DEFAULT_THRESHOLD,
            tails: Tails::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierRecord {
    pub name: String,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub flagged_by: Vec<Flag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub records: Vec<OutlierRecord>,
    pub threshold: f64,
    pub tails: Tails,
}

impl OutlierReport {
    pub fn flagged(&self) -> impl Iterator<Item = &OutlierRecord> {
        self.records.iter().filter(|r| !r.flagged_by.is_empty())
    }

    pub fn flagged_names(&self) -> Vec<String> {
        self.flagged().map(|r| r.name.clone()).collect()
    }
}

/// Flags for one skater's statistics.
pub fn flags(t1: f64, t2: f64, t3: f64, opts: ScanOptions) -> Vec<Flag> {
    let over = |t: f64| match opts.tails {
        Tails::TwoSided => t.abs() > opts.threshold,
        Tails::UpperOnly => t > opts.threshold,
    };
    let mut f = Vec::new();
    if over(t1) {
        f.push(Flag::T1);
    }
    if over(t2) {
        f.push(Flag::T2);
    }
    if t3.abs() >= opts.threshold {
        f.push(Flag::T3);
    }
    f
}

/// Standardized run residuals `t1`, `t2` (scale `sqrt(sigma^2 + kappa^2)`) and
/// the standardized residual difference `t3` (scale `sqrt(2) sigma`).
pub fn outlier_scan(pairs: &[UsablePair], fit: &FitResult, opts: ScanOptions) -> OutlierReport {
    let total = (fit.sigma_un.powi(2) + fit.kappa_un.powi(2)).sqrt();
    let diff = std::f64::consts::SQRT_2 * fit.sigma_un;
    let records = pairs
        .iter()
        .map(|p| {
            let (r1, r2) = model::residuals(&p.observation(), &fit.beta, fit.constraint);
            let (t1, t2, t3) = (r1 / total, r2 / total, (r2 - r1) / diff);
            OutlierRecord {
                name: p.name().to_string(),
                t1,
                t2,
                t3,
                flagged_by: flags(t1, t2, t3, opts),
            }
        })
        .collect();
    OutlierReport {
        records,
        threshold: opts.threshold,
        tails: opts.tails,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanFit {
    pub initial: FitResult,
    pub report: OutlierReport,
    pub removed: Vec<String>,
    pub kept: Vec<UsablePair>,
    pub fit: FitResult,
}

/// Fit, scan once, drop flagged skaters (marked as declared outliers) and refit.
pub fn clean_and_refit(pairs: &[UsablePair], opts: ScanOptions) -> Result<CleanFit> {
    let obs = crate::dataset::observations(pairs);
    let initial = model::fit_ml(&obs, Constraint::FreeD)?;
    let report = outlier_scan(pairs, &initial, opts);
    let removed = report.flagged_names();
    if removed.is_empty() {
        return Ok(CleanFit {
            fit: initial.clone(),
            initial,
            report,
            removed,
            kept: pairs.to_vec(),
        });
    }
    let kept: Vec<UsablePair> = pairs
        .iter()
        .zip(&report.records)
        .filter(|(_, r)| r.flagged_by.is_empty())
        .map(|(p, _)| p.clone())
        .collect();
    let fit = model::fit_ml(&crate::dataset::observations(&kept), Constraint::FreeD)?;
    Ok(CleanFit {
        initial,
        report,
        removed,
        kept,
        fit,
    })
}

impl CleanFit {
    /// All input pairs, with removed skaters marked as declared outliers.
    pub fn marked(&self, pairs: &[UsablePair]) -> Vec<UsablePair> {
        pairs
            .iter()
            .map(|p| {
                let mut p = p.clone();
                p.pair.declared_outlier = self.removed.iter().any(|n| n == p.name());
                p
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRecord {
    pub name: String,
    pub ave_star: f64,
    pub diff_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub records: Vec<ValidationRecord>,
    pub skew_diff: f64,
    pub skew_ave: f64,
    pub kurt_diff: f64,
    pub kurt_ave: f64,
    pub corr: f64,
    pub band_skew: f64,
    pub band_kurt: f64,
    pub band_corr: f64,
    pub scale: MomentScale,
    pub kde_ave: KdeCurve,
    pub kde_diff: KdeCurve,
}

impl ValidationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,ave_star,diff_star\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{:.6},{:.6}\n",
                r.name, r.ave_star, r.diff_star
            ));
        }
        out
    }
}

/// 90% bands for skewness, excess kurtosis and correlation of `n` normal draws.
pub fn bands(n: usize) -> (f64, f64, f64) {
    let z = stats::normal_quantile(0.95);
    let n = n as f64;
    (z * (6.0 / n).sqrt(), z * (24.0 / n).sqrt(), z / n.sqrt())
}

/// Standardized averages `ave*` and differences `diff*`, their shape
/// statistics and kernel density curves.
pub fn validate_model(
    pairs: &[UsablePair],
    fit: &FitResult,
    bandwidth: Bandwidth,
    scale: MomentScale,
) -> Result<ValidationReport> {
    if pairs.len() < MIN_VALIDATION_PAIRS {
        return Err(Error::InsufficientData {
            needed: MIN_VALIDATION_PAIRS,
            got: pairs.len(),
        });
    }
    let s2 = fit.sigma_un * fit.sigma_un;
    let ave_scale = (fit.kappa_un * fit.kappa_un + 0.5 * s2).sqrt();
    let diff_scale = (2.0 * s2).sqrt();
    let records: Vec<ValidationRecord> = pairs
        .iter()
        .map(|p| {
            let (r1, r2) = model::residuals(&p.observation(), &fit.beta, fit.constraint);
            ValidationRecord {
                name: p.name().to_string(),
                ave_star: 0.5 * (r1 + r2) / ave_scale,
                diff_star: (r2 - r1) / diff_scale,
            }
        })
        .collect();
    let ave: Vec<f64> = records.iter().map(|r| r.ave_star).collect();
    let diff: Vec<f64> = records.iter().map(|r| r.diff_star).collect();
    let (skew_ave, kurt_ave) = stats::shape(&ave, scale);
    let (skew_diff, kurt_diff) = stats::shape(&diff, scale);
    let (band_skew, band_kurt, band_corr) = bands(pairs.len());
    Ok(ValidationReport {
        corr: stats::pearson(&ave, &diff),
        kde_ave: stats::kde(&ave, bandwidth),
        kde_diff: stats::kde(&diff, bandwidth),
        records,
        skew_diff,
        skew_ave,
        kurt_diff,
        kurt_ave,
        band_skew,
        band_kurt,
        band_corr,
        scale,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustedRecord {
    pub name: String,
    pub w: LaneIndicator,
    pub d: f64,
    pub d_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustedDiffs {
    /// The `d = 0` refit the differences are computed from.
    pub fit: FitResult,
    pub records: Vec<AdjustedRecord>,
}

impl AdjustedDiffs {
    /// Skater counts with `w = +1/2` and `w = -1/2`.
    pub fn group_sizes(&self) -> (usize, usize) {
        let plus = self
            .records
            .iter()
            .filter(|r| r.w == LaneIndicator::PlusHalf)
            .count();
        (plus, self.records.len() - plus)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,w,D,D_star\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{:.6},{:.6}\n",
                r.name,
                r.w.value(),
                r.d,
                r.d_star
            ));
        }
        out
    }
}

/// `D = (Y2 - a2 - b x2) - (Y1 - a1 - b x1)` under the `d = 0` refit, and
/// `D* = D / (sqrt(2) sigma_un)`.
pub fn adjusted_differences(pairs: &[UsablePair]) -> Result<AdjustedDiffs> {
    let obs = crate::dataset::observations(pairs);
    let fit = model::fit_ml(&obs, Constraint::DZero)?;
    let scale = std::f64::consts::SQRT_2 * fit.sigma_un;
    let records = pairs
        .iter()
        .zip(&obs)
        .map(|(p, o)| {
            let (r1, r2) = model::residuals(o, &fit.beta, Constraint::DZero);
            let d = r2 - r1;
            AdjustedRecord {
                name: p.name().to_string(),
                w: p.w,
                d,
                d_star: if scale > 0.0 { d / scale } else { 0.0 },
            }
        })
        .collect();
    Ok(AdjustedDiffs { fit, records })
}
