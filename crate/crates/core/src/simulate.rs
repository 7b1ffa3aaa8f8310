//! Seeded synthetic championships drawn from the paired-run model.
//!
//! The generator is ChaCha8 seeded through `seed_from_u64`; normal variates
//! come from `rand_distr::StandardNormal` (ziggurat). Streams replicate across
//! runs of this crate bit for bit and across other implementations only in
//! distribution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{Centis, Lane, LaneIndicator, Observation, Run, SkaterPair, UsablePair};
use crate::model::{self, Constraint};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
    pub d: f64,
    pub sigma: f64,
    pub kappa: f64,
    /// Mean and spread of a skater's underlying 100 m time.
    pub x_mean: f64,
    pub x_sd: f64,
    /// Day-to-day spread of the 100 m time around the skater's own level.
    pub x_jitter: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 30,
            a1: 17.0,
            a2: 17.0,
            b: 2.0,
            d: 0.05,
            sigma: 0.15,
            kappa: 0.35,
            x_mean: 10.0,
            x_sd: 0.2,
            x_jitter: 0.05,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn z<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// One event; lanes alternate so the two groups are as balanced as possible.
pub fn simulate_event<R: Rng>(cfg: &SimConfig, rng: &mut R) -> Vec<Observation> {
    (0..cfg.n)
        .map(|i| {
            let w = if i % 2 == 0 { 0.5 } else { -0.5 };
            let level = cfg.x_mean + cfg.x_sd * z(rng);
            let x1 = level + cfg.x_jitter * z(rng);
            let x2 = level + cfg.x_jitter * z(rng);
            let c = cfg.kappa * z(rng);
            let y1 = cfg.a1 + cfg.b * x1 + cfg.d * w + c + cfg.sigma * z(rng);
            let y2 = cfg.a2 + cfg.b * x2 - cfg.d * w + c + cfg.sigma * z(rng);
            Observation { x1, y1, x2, y2, w }
        })
        .collect()
}

/// Observations rounded to centiseconds and wrapped as named pairs.
pub fn to_pairs(obs: &[Observation]) -> Vec<UsablePair> {
    obs.iter()
        .enumerate()
        .map(|(i, o)| {
            let w = if o.w > 0.0 {
                LaneIndicator::PlusHalf
            } else {
                LaneIndicator::MinusHalf
            };
            let lane1 = if o.w > 0.0 {
                Lane::OuterStart
            } else {
                Lane::InnerStart
            };
            let c = Centis::from_seconds_rounded;
            UsablePair {
                pair: SkaterPair {
                    name: format!("S{:03}", i + 1),
                    day1: Run::ok(lane1, c(o.x1), c(o.y1)),
                    day2: Run::ok(lane1.opposite(), c(o.x2), c(o.y2)),
                    note: None,
                    declared_outlier: false,
                },
                w,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub reps: usize,
    pub failures: usize,
    pub n: usize,
    pub true_d: f64,
    pub mean_d: f64,
    pub var_d: f64,
    /// `2 sigma^2 / n`.
    pub var_d_theory: f64,
    pub var_ratio: f64,
    pub mean_se_d: f64,
    pub mean_sigma2_un: f64,
    pub sigma2_ratio: f64,
    pub mean_d_simple: f64,
    pub var_d_simple: f64,
}

/// Repeated fits on independent synthetic events.
pub fn monte_carlo(cfg: &SimConfig, reps: usize, seed: u64) -> McReport {
    let mut r = rng(seed);
    let mut d = Vec::with_capacity(reps);
    let mut se = Vec::with_capacity(reps);
    let mut s2 = Vec::with_capacity(reps);
    let mut ds = Vec::with_capacity(reps);
    let mut failures = 0;
    for _ in 0..reps {
        let obs = simulate_event(cfg, &mut r);
        match model::fit_ml(&obs, Constraint::FreeD) {
            Ok(f) => {
                d.push(f.d());
                se.push(f.se_d());
                s2.push(f.sigma_un * f.sigma_un);
                if let Ok(s) = model::fit_simple(&obs) {
                    ds.push(s.d);
                }
            }
            Err(_) => failures += 1,
        }
    }
    let theory = 2.0 * cfg.sigma * cfg.sigma / cfg.n as f64;
    let var_d = stats::sample_variance(&d);
    let mean_s2 = stats::mean(&s2);
    McReport {
        reps,
        failures,
        n: cfg.n,
        true_d: cfg.d,
        mean_d: stats::mean(&d),
        var_d,
        var_d_theory: theory,
        var_ratio: var_d / theory,
        mean_se_d: stats::mean(&se),
        mean_sigma2_un: mean_s2,
        sigma2_ratio: mean_s2 / (cfg.sigma * cfg.sigma),
        mean_d_simple: stats::mean(&ds),
        var_d_simple: stats::sample_variance(&ds),
    }
}
