//! Sample moments, correlation, normal tails and kernel density curves.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Central moment `m_k = mean((x - mean)^k)`.
pub fn central_moment(x: &[f64], k: i32) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(k)).sum::<f64>() / x.len() as f64
}

/// Variance with divisor `n - 1`.
pub fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    central_moment(x, 2) * n / (n - 1.0)
}

/// `m3 / m2^(3/2)`.
pub fn skewness(x: &[f64]) -> f64 {
    central_moment(x, 3) / central_moment(x, 2).powf(1.5)
}

/// `m4 / m2^2 - 3`.
pub fn excess_kurtosis(x: &[f64]) -> f64 {
    let m2 = central_moment(x, 2);
    central_moment(x, 4) / (m2 * m2) - 3.0
}

/// How the second moment in the skewness and kurtosis denominators is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentScale {
    /// `m2`.
    Biased,
    /// `s^2 = m2 n / (n - 1)`.
    #[default]
    Unbiased,
}

pub fn shape(x: &[f64], scale: MomentScale) -> (f64, f64) {
    let v = match scale {
        MomentScale::Biased => central_moment(x, 2),
        MomentScale::Unbiased => sample_variance(x),
    };
    (
        central_moment(x, 3) / v.powf(1.5),
        central_moment(x, 4) / (v * v) - 3.0,
    )
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

pub fn normal_cdf(z: f64) -> f64 {
    std_normal().cdf(z)
}

/// Upper tail `P(Z > z)`.
pub fn normal_sf(z: f64) -> f64 {
    std_normal().sf(z)
}

pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    #[default]
    Silverman,
    Fixed(f64),
}

impl std::str::FromStr for Bandwidth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "silverman" {
            return Ok(Bandwidth::Silverman);
        }
        let v = s.strip_prefix("fixed:").unwrap_or(s);
        match v.parse::<f64>() {
            Ok(h) if h > 0.0 && h.is_finite() => Ok(Bandwidth::Fixed(h)),
            _ => Err(format!(
                "bandwidth {s:?} is neither `silverman` nor a positive number"
            )),
        }
    }
}

/// `1.06 s n^(-1/5)`, with a small positive floor for constant samples.
pub fn silverman_bandwidth(x: &[f64]) -> f64 {
    let s = sample_variance(x).sqrt();
    let h = 1.06 * s * (x.len() as f64).powf(-0.2);
    if h > 0.0 && h.is_finite() {
        h
    } else {
        1e-3 * mean(x).abs().max(1.0)
    }
}

pub const KDE_POINTS: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeCurve {
    pub bandwidth: f64,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

impl KdeCurve {
    pub fn trapezoid_area(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(g, d)| 0.5 * (g[1] - g[0]) * (d[0] + d[1]))
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,density\n");
        for (g, d) in self.grid.iter().zip(&self.density) {
            out.push_str(&format!("{g:.6},{d:.6e}\n"));
        }
        out
    }
}

/// Gaussian kernel density on `KDE_POINTS` points spanning the data range +/- 3h.
pub fn kde(x: &[f64], bw: Bandwidth) -> KdeCurve {
    let h = match bw {
        Bandwidth::Silverman => silverman_bandwidth(x),
        Bandwidth::Fixed(h) => h,
    };
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let step = (hi - lo) / (KDE_POINTS - 1) as f64;
    let norm = 1.0 / (x.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let grid: Vec<f64> = (0..KDE_POINTS).map(|k| lo + k as f64 * step).collect();
    let density = grid
        .iter()
        .map(|g| {
            norm * x
                .iter()
                .map(|v| {
                    let u = (g - v) / h;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
        })
        .collect();
    KdeCurve {
        bandwidth: h,
        grid,
        density,
    }
}
