//! Combining per-event lane estimates across championships.

use serde::{Deserialize, Serialize};

use crate::dataset::UsablePair;
use crate::error::{Error, Result};
use crate::model::{self, Constraint};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSummary {
    pub label: String,
    pub d_hat: f64,
    pub se: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<usize>,
}

impl EventSummary {
    pub fn new(label: impl Into<String>, d_hat: f64, se: f64) -> Self {
        EventSummary {
            label: label.into(),
            d_hat,
            se,
            n: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Heterogeneity {
    /// `sum (d_j - d)^2 / se_j^2`.
    pub t: f64,
    pub a2: f64,
    pub a4: f64,
    /// Untruncated moment estimate of `omega0^2`; may be negative.
    pub omega0_sq_raw: f64,
    pub omega0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaResult {
    pub grand_d: f64,
    pub grand_se: f64,
    pub z: f64,
    pub p_one_sided: f64,
    pub p_two_sided: f64,
    pub ci95: (f64, f64),
    pub omega0: f64,
    pub k: usize,
}

fn check(summaries: &[EventSummary]) -> Result<()> {
    if summaries.is_empty() {
        return Err(Error::Empty("no event summaries"));
    }
    for s in summaries {
        if !(s.se > 0.0 && s.se.is_finite()) || !s.d_hat.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "{}: need finite d_hat and se > 0, got {} and {}",
                s.label, s.d_hat, s.se
            )));
        }
    }
    Ok(())
}

/// Inverse-variance weighted mean with normal-tail tests.
pub fn combine(summaries: &[EventSummary]) -> Result<MetaResult> {
    check(summaries)?;
    let a2: f64 = summaries.iter().map(|s| s.se.powi(-2)).sum();
    let grand_d = summaries
        .iter()
        .map(|s| s.d_hat / (s.se * s.se))
        .sum::<f64>()
        / a2;
    let grand_se = a2.recip().sqrt();
    let z = grand_d / grand_se;
    let omega0 = if summaries.len() >= 2 {
        heterogeneity(summaries, grand_d)
            .map(|h| h.omega0)
            .unwrap_or(0.0)
    } else {
        0.0
    };
    let half = stats::normal_quantile(0.975) * grand_se;
    Ok(MetaResult {
        grand_d,
        grand_se,
        z,
        p_one_sided: stats::normal_sf(z),
        p_two_sided: 2.0 * stats::normal_sf(z.abs()),
        ci95: (grand_d - half, grand_d + half),
        omega0,
        k: summaries.len(),
    })
}

/// Moment estimator of the between-event spread of the true `d`:
/// `omega0^2 = max(0, (T - (K - 1)) / (A2 - A4 / A2))`.
pub fn heterogeneity(summaries: &[EventSummary], grand_d: f64) -> Result<Heterogeneity> {
    check(summaries)?;
    if summaries.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: summaries.len(),
        });
    }
    let t = summaries
        .iter()
        .map(|s| (s.d_hat - grand_d).powi(2) / (s.se * s.se))
        .sum::<f64>();
    let a2: f64 = summaries.iter().map(|s| s.se.powi(-2)).sum();
    let a4: f64 = summaries.iter().map(|s| s.se.powi(-4)).sum();
    let denom = a2 - a4 / a2;
    if denom.is_nan() || denom <= 0.0 {
        return Err(Error::InvalidArgument(
            "heterogeneity undefined: all weight sits on one event".into(),
        ));
    }
    let raw = (t - (summaries.len() - 1) as f64) / denom;
    Ok(Heterogeneity {
        t,
        a2,
        a4,
        omega0_sq_raw: raw,
        omega0: raw.max(0.0).sqrt(),
    })
}

/// `grand_d +/- z_{(1+coverage)/2} omega0`.
pub fn predict_range(grand_d: f64, omega0: f64, coverage: f64) -> (f64, f64) {
    let h = stats::normal_quantile(0.5 * (1.0 + coverage)) * omega0;
    (grand_d - h, grand_d + h)
}

/// Pearson correlation of two aligned columns of estimates.
pub fn cross_group_correlation(a: &[EventSummary], b: &[EventSummary]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "summary lists have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: a.len(),
        });
    }
    for (index, (x, y)) in a.iter().zip(b).enumerate() {
        if x.label != y.label {
            return Err(Error::LabelMismatch {
                index,
                left: x.label.clone(),
                right: y.label.clone(),
            });
        }
    }
    let x: Vec<f64> = a.iter().map(|s| s.d_hat).collect();
    let y: Vec<f64> = b.iter().map(|s| s.d_hat).collect();
    Ok(stats::pearson(&x, &y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSpec {
    pub sigma: f64,
    pub target_se: f64,
    pub true_d: f64,
    pub alpha: f64,
    pub n_required: u64,
    pub power: f64,
}

/// Paired runs needed for `se(d) = target_se` given `Var d ~ 2 sigma^2 / N`,
/// and the one-sided detection probability at that precision.
pub fn power_plan(sigma: f64, target_se: f64, true_d: f64, alpha: f64) -> Result<PowerSpec> {
    if !(sigma > 0.0 && target_se > 0.0 && true_d >= 0.0 && true_d.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "power plan needs sigma > 0, se > 0, d >= 0; got {sigma}, {target_se}, {true_d}"
        )));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "alpha {alpha} outside (0, 0.5)"
        )));
    }
    let ratio = 2.0 * sigma * sigma / (target_se * target_se);
    // guard against 312.5000000001-style rounding from the division
    let n_required = (ratio - 1e-9 * ratio).ceil() as u64;
    Ok(PowerSpec {
        sigma,
        target_se,
        true_d,
        alpha,
        n_required,
        power: stats::normal_cdf(true_d / target_se - stats::normal_quantile(1.0 - alpha)),
    })
}

/// Cleaned pairs of one event, labelled.
#[derive(Debug, Clone, PartialEq)]
pub struct EventPairs {
    pub label: String,
    pub pairs: Vec<UsablePair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEvent {
    pub label: String,
    pub n_best: usize,
    pub n_rest: usize,
    pub d_best: f64,
    pub se_best: f64,
    pub d_rest: f64,
    pub se_rest: f64,
}

impl SplitEvent {
    pub fn delta(&self) -> f64 {
        self.d_best - self.d_rest
    }

    pub fn se_delta(&self) -> f64 {
        self.se_best.hypot(self.se_rest)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitContrast {
    pub events: Vec<SplitEvent>,
    pub combined_delta: f64,
    pub combined_se: f64,
    pub warnings: Vec<String>,
}

/// Indices ordered fastest first by mean 500 m time, then day-1 time, then input order.
pub fn rank_by_average(pairs: &[UsablePair]) -> Vec<usize> {
    let key = |p: &UsablePair| {
        let t = |c: Option<crate::dataset::Centis>| c.map_or(i64::MAX / 4, |c| c.0);
        let (y1, y2) = (t(p.pair.day1.t500), t(p.pair.day2.t500));
        (y1 + y2, y1)
    };
    let mut idx: Vec<usize> = (0..pairs.len()).collect();
    idx.sort_by_key(|&i| key(&pairs[i]));
    idx
}

/// Fit the best `floor(n/2)` skaters and the rest of each event separately and
/// combine the per-event differences `d_best - d_rest` by inverse variance.
pub fn split_half(events: &[EventPairs]) -> Result<SplitContrast> {
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for ev in events {
        let order = rank_by_average(&ev.pairs);
        let cut = ev.pairs.len() / 2;
        let pick =
            |ids: &[usize]| -> Vec<_> { ids.iter().map(|&i| ev.pairs[i].observation()).collect() };
        let best = pick(&order[..cut]);
        let rest = pick(&order[cut..]);
        let fits = model::fit_ml(&best, Constraint::FreeD)
            .and_then(|b| model::fit_ml(&rest, Constraint::FreeD).map(|r| (b, r)));
        match fits {
            Ok((b, r)) => out.push(SplitEvent {
                label: ev.label.clone(),
                n_best: best.len(),
                n_rest: rest.len(),
                d_best: b.d(),
                se_best: b.se_d(),
                d_rest: r.d(),
                se_rest: r.se_d(),
            }),
            Err(e) => warnings.push(format!("{}: skipped ({e})", ev.label)),
        }
    }
    if out.is_empty() {
        return Err(Error::Empty(
            "no event could be split into two fittable halves",
        ));
    }
    let w: Vec<f64> = out.iter().map(|e| e.se_delta().powi(-2)).collect();
    let total: f64 = w.iter().sum();
    let combined_delta = out.iter().zip(&w).map(|(e, w)| e.delta() * w).sum::<f64>() / total;
    Ok(SplitContrast {
        events: out,
        combined_delta,
        combined_se: total.recip().sqrt(),
        warnings,
    })
}

/// Read `label,d_hat,se[,n]` rows; `#` lines and a leading header row are skipped.
pub fn read_summaries(source: &str) -> Result<Vec<EventSummary>> {
    let mut out = Vec::new();
    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = text.split(',').map(str::trim).collect();
        if out.is_empty() && f.first() == Some(&"label") {
            continue;
        }
        if f.len() != 3 && f.len() != 4 {
            return Err(Error::Parse {
                line,
                message: format!("expected label,d_hat,se[,n], found {} fields", f.len()),
            });
        }
        let num = |s: &str, what: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line,
                message: format!("{what} {s:?} is not a number"),
            })
        };
        let n = match f.get(3) {
            Some(s) if !s.is_empty() => Some(s.parse().map_err(|_| Error::Parse {
                line,
                message: format!("n {s:?} is not a count"),
            })?),
            _ => None,
        };
        out.push(EventSummary {
            label: f[0].to_string(),
            d_hat: num(f[1], "d_hat")?,
            se: num(f[2], "se")?,
            n,
        });
    }
    if out.is_empty() {
        return Err(Error::Empty("summary file has no rows"));
    }
    Ok(out)
}

pub fn write_summaries(summaries: &[EventSummary]) -> String {
    let mut out = String::from("label,d_hat,se,n\n");
    for s in summaries {
        let n = s.n.map(|n| n.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{:.6},{:.6},{}\n", s.label, s.d_hat, s.se, n));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_weights() {
        let m = combine(&[
            EventSummary::new("a", 0.1, 0.1),
            EventSummary::new("b", 0.0, 0.1),
        ])
        .unwrap();
        assert!((m.grand_d - 0.05).abs() < 1e-15);
        assert!((m.grand_se - 0.1 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn single_summary_passes_through() {
        let m = combine(&[EventSummary::new("a", 0.03, 0.02)]).unwrap();
        assert_eq!(m.grand_d, 0.03);
        assert!((m.grand_se - 0.02).abs() < 1e-15);
        assert!((m.z - 1.5).abs() < 1e-12);
        assert_eq!(m.omega0, 0.0);
    }

    #[test]
    fn rejects_empty_and_bad_se() {
        assert!(combine(&[]).is_err());
        assert!(combine(&[EventSummary::new("a", 0.0, 0.0)]).is_err());
    }

    #[test]
    fn identical_estimates_have_no_spread() {
        let s: Vec<_> = [0.02, 0.05, 0.03]
            .iter()
            .map(|&se| EventSummary::new("x", 0.04, se))
            .collect();
        let m = combine(&s).unwrap();
        assert_eq!(heterogeneity(&s, m.grand_d).unwrap().omega0, 0.0);
    }

    #[test]
    fn degenerate_range() {
        assert_eq!(predict_range(0.048, 0.0, 0.9), (0.048, 0.048));
    }

    #[test]
    fn correlation_sign_and_mismatch() {
        let a: Vec<_> = [0.1, -0.2, 0.05, 0.3]
            .iter()
            .enumerate()
            .map(|(i, &d)| EventSummary::new(format!("e{i}"), d, 0.05))
            .collect();
        let neg: Vec<_> = a
            .iter()
            .map(|s| EventSummary {
                d_hat: -s.d_hat,
                ..s.clone()
            })
            .collect();
        assert!((cross_group_correlation(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((cross_group_correlation(&a, &neg).unwrap() + 1.0).abs() < 1e-12);
        let mut bad = a.clone();
        bad[2].label = "other".into();
        assert!(matches!(
            cross_group_correlation(&a, &bad),
            Err(Error::LabelMismatch { index: 2, .. })
        ));
    }

    #[test]
    fn power_at_zero_effect_is_alpha() {
        let p = power_plan(0.25, 0.02, 0.0, 0.05).unwrap();
        assert!((p.power - 0.05).abs() < 1e-9);
        assert_eq!(p.n_required, 313);
    }

    #[test]
    fn summary_csv_round_trip() {
        let src = "label,d_hat,se\n1994 Calgary,0.010,0.043\n# note\n1993 Ikaho,0.032,0.041,29\n";
        let s = read_summaries(src).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].n, Some(29));
        let again = read_summaries(&write_summaries(&s)).unwrap();
        assert_eq!(again, s);
        assert!(read_summaries("a,b\n").is_err());
    }
}
