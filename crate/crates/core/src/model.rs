//! Bivariate mixed-effects model for two-day paired runs.
//!
//! ```text
//! Y1 = a1 + b x1 + d w + c + e1
//! Y2 = a2 + b x2 - d w + c + e2
//! ```
//!
//! with `c ~ N(0, kappa^2)` shared by the two runs of a skater and
//! `e1, e2 ~ N(0, sigma^2)` independent. The likelihood is profiled over
//! `(beta, sigma)` for fixed `rho = kappa^2 / (sigma^2 + kappa^2)`, leaving a
//! one-dimensional search in `rho`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Observation;
use crate::error::{Error, Result};
use crate::linalg::{self, Solved};
use crate::optimize;
use crate::stats;

pub const MIN_PAIRS: usize = 5;
pub const RHO_MAX: f64 = 1.0 - 1e-6;
pub const RHO_GRID_STEP: f64 = 0.005;
pub const RHO_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    #[default]
    FreeD,
    /// Drops the lane column; `d` is reported as exactly zero.
    DZero,
}

impl Constraint {
    pub fn p(self) -> usize {
        match self {
            Constraint::FreeD => 4,
            Constraint::DZero => 3,
        }
    }
}

/// Covariate rows `(1, 0, x1, w)` and `(0, 1, x2, -w)`, truncated to `p` columns.
pub fn design_rows(o: &Observation, c: Constraint) -> (DVector<f64>, DVector<f64>) {
    let r1 = [1.0, 0.0, o.x1, o.w];
    let r2 = [0.0, 1.0, o.x2, -o.w];
    let p = c.p();
    (
        DVector::from_column_slice(&r1[..p]),
        DVector::from_column_slice(&r2[..p]),
    )
}

/// Averages `M_uv = mean(x_u x_v')` and `S_uv = mean(x_u Y_v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub m11: DMatrix<f64>,
    pub m12: DMatrix<f64>,
    pub m21: DMatrix<f64>,
    pub m22: DMatrix<f64>,
    pub s11: DVector<f64>,
    pub s12: DVector<f64>,
    pub s21: DVector<f64>,
    pub s22: DVector<f64>,
    pub n: usize,
    pub constraint: Constraint,
}

impl Moments {
    /// Moments without the minimum-size check.
    pub fn compute(obs: &[Observation], constraint: Constraint) -> Self {
        let p = constraint.p();
        let mut m = Moments {
            m11: DMatrix::zeros(p, p),
            m12: DMatrix::zeros(p, p),
            m21: DMatrix::zeros(p, p),
            m22: DMatrix::zeros(p, p),
            s11: DVector::zeros(p),
            s12: DVector::zeros(p),
            s21: DVector::zeros(p),
            s22: DVector::zeros(p),
            n: obs.len(),
            constraint,
        };
        for o in obs {
            let (x1, x2) = design_rows(o, constraint);
            m.m11 += &x1 * x1.transpose();
            m.m12 += &x1 * x2.transpose();
            m.m21 += &x2 * x1.transpose();
            m.m22 += &x2 * x2.transpose();
            m.s11 += &x1 * o.y1;
            m.s12 += &x1 * o.y2;
            m.s21 += &x2 * o.y1;
            m.s22 += &x2 * o.y2;
        }
        if !obs.is_empty() {
            let inv = 1.0 / obs.len() as f64;
            for mat in [&mut m.m11, &mut m.m12, &mut m.m21, &mut m.m22] {
                *mat *= inv;
            }
            for v in [&mut m.s11, &mut m.s12, &mut m.s21, &mut m.s22] {
                *v *= inv;
            }
        }
        m
    }

    pub fn m_rho(&self, rho: f64) -> DMatrix<f64> {
        &self.m11 + &self.m22 - (&self.m12 + &self.m21) * rho
    }

    pub fn s_rho(&self, rho: f64) -> DVector<f64> {
        &self.s11 + &self.s22 - (&self.s12 + &self.s21) * rho
    }
}

pub fn build_moments(obs: &[Observation], constraint: Constraint) -> Result<Moments> {
    if obs.len() < MIN_PAIRS {
        return Err(Error::InsufficientData {
            needed: MIN_PAIRS,
            got: obs.len(),
        });
    }
    Ok(Moments::compute(obs, constraint))
}

/// GLS solve of `M_rho beta = S_rho`, with the inverse and its condition number.
pub fn gls_solve(m: &Moments, rho: f64) -> Result<Solved> {
    linalg::solve(&m.m_rho(rho), &m.s_rho(rho))
}

pub fn gls_beta(m: &Moments, rho: f64) -> Result<DVector<f64>> {
    Ok(gls_solve(m, rho)?.x)
}

/// `Q1 = sum r1^2`, `Q2 = sum r2^2`, `Q3 = sum r1 r2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QParts {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

impl QParts {
    pub fn from_residuals<I: IntoIterator<Item = (f64, f64)>>(res: I) -> Self {
        let mut q = QParts {
            q1: 0.0,
            q2: 0.0,
            q3: 0.0,
        };
        for (r1, r2) in res {
            q.q1 += r1 * r1;
            q.q2 += r2 * r2;
            q.q3 += r1 * r2;
        }
        q
    }

    pub fn q(&self, rho: f64) -> f64 {
        self.q1 + self.q2 - 2.0 * rho * self.q3
    }

    /// `2 Q3 / (Q1 + Q2)`, the value of `rho` at which the profile is stationary.
    pub fn fixed_point_rho(&self) -> f64 {
        2.0 * self.q3 / (self.q1 + self.q2)
    }
}

pub fn residuals(o: &Observation, beta: &[f64], c: Constraint) -> (f64, f64) {
    let d = if c == Constraint::FreeD { beta[3] } else { 0.0 };
    let r1 = o.y1 - (beta[0] + beta[2] * o.x1 + d * o.w);
    let r2 = o.y2 - (beta[1] + beta[2] * o.x2 - d * o.w);
    (r1, r2)
}

pub fn q_components(obs: &[Observation], beta: &[f64], c: Constraint) -> QParts {
    QParts::from_residuals(obs.iter().map(|o| residuals(o, beta, c)))
}

struct Profile<'a> {
    obs: &'a [Observation],
    moments: Moments,
}

impl Profile<'_> {
    fn new(obs: &[Observation], c: Constraint) -> Result<Profile<'_>> {
        Ok(Profile {
            obs,
            moments: build_moments(obs, c)?,
        })
    }

    fn parts(&self, rho: f64) -> Result<(Solved, QParts)> {
        let s = gls_solve(&self.moments, rho)?;
        let q = q_components(self.obs, s.x.as_slice(), self.moments.constraint);
        Ok((s, q))
    }

    fn loglik(&self, rho: f64) -> Result<f64> {
        let (_, q) = self.parts(rho)?;
        Ok(profile_value(self.obs.len(), rho, q.q(rho)))
    }
}

fn profile_value(n: usize, rho: f64, q: f64) -> f64 {
    let n = n as f64;
    n * (0.5 * (1.0 - rho * rho).ln() - (q / (2.0 * n)).ln() - 1.0)
}

/// Profile log-likelihood at `rho`, up to the additive `-n log(2 pi)` constant.
pub fn profile_loglik(obs: &[Observation], c: Constraint, rho: f64) -> Result<f64> {
    if !(0.0..=RHO_MAX).contains(&rho) {
        return Err(Error::InvalidArgument(format!(
            "rho {rho} outside [0, {RHO_MAX}]"
        )));
    }
    Profile::new(obs, c)?.loglik(rho)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// 1-norm condition number of `M_rho` at the solution.
    pub condition: f64,
    /// `|rho - 2 Q3 / (Q1 + Q2)|`.
    pub fixed_point_residual: f64,
    /// Relative gap between the two closed forms of `sigma^2(rho)`.
    pub sigma_form_gap: f64,
    pub boundary: bool,
    pub evaluations: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// `(a1, a2, b, d)`.
    pub beta: [f64; 4],
    pub rho: f64,
    pub sigma_ml: f64,
    pub sigma_un: f64,
    pub kappa_ml: f64,
    pub kappa_un: f64,
    /// Rows and columns of the lane coefficient are zero under [`Constraint::DZero`].
    pub cov_beta: [[f64; 4]; 4],
    pub loglik: f64,
    pub n: usize,
    pub p: usize,
    pub constraint: Constraint,
    pub q: QParts,
    pub diagnostics: FitDiagnostics,
}

impl FitResult {
    pub fn a1(&self) -> f64 {
        self.beta[0]
    }
    pub fn a2(&self) -> f64 {
        self.beta[1]
    }
    pub fn b(&self) -> f64 {
        self.beta[2]
    }
    pub fn d(&self) -> f64 {
        self.beta[3]
    }
    pub fn se(&self, k: usize) -> f64 {
        self.cov_beta[k][k].sqrt()
    }
    pub fn se_d(&self) -> f64 {
        self.se(3)
    }
    pub fn warnings(&self) -> &[String] {
        &self.diagnostics.warnings
    }
}

fn subject_check(obs: &[Observation], c: Constraint) -> Result<()> {
    if obs.len() < MIN_PAIRS {
        return Err(Error::InsufficientData {
            needed: MIN_PAIRS,
            got: obs.len(),
        });
    }
    if c == Constraint::FreeD {
        let plus = obs.iter().filter(|o| o.w > 0.0).count();
        if plus == 0 || plus == obs.len() {
            return Err(Error::OneLaneGroup);
        }
    }
    Ok(())
}

/// Every estimate that follows from fixing `rho`.
pub fn fit_at_rho(obs: &[Observation], c: Constraint, rho: f64) -> Result<FitResult> {
    subject_check(obs, c)?;
    if !(0.0..=RHO_MAX).contains(&rho) {
        return Err(Error::InvalidArgument(format!(
            "rho {rho} outside [0, {RHO_MAX}]"
        )));
    }
    let prof = Profile::new(obs, c)?;
    let (solved, q) = prof.parts(rho)?;
    Ok(assemble(obs.len(), c, rho, &solved, q))
}

fn assemble(n: usize, c: Constraint, rho: f64, solved: &Solved, q: QParts) -> FitResult {
    let p = c.p();
    let nf = n as f64;
    let qv = q.q(rho);
    let sigma2_ml = qv / ((1.0 + rho) * 2.0 * nf);
    let sigma2_un = qv / ((1.0 + rho) * (2.0 * nf - p as f64));
    let ratio = rho / (1.0 - rho);

    let mut beta = [0.0; 4];
    beta[..p].copy_from_slice(solved.x.as_slice());
    let mut cov = [[0.0; 4]; 4];
    let scale = sigma2_un * (1.0 + rho) / nf;
    // symmetrize away rounding in the LU inverse
    for (i, row) in cov.iter_mut().enumerate().take(p) {
        for (j, v) in row.iter_mut().enumerate().take(p) {
            *v = scale * 0.5 * (solved.inverse[(i, j)] + solved.inverse[(j, i)]);
        }
    }

    let alt = (1.0 - rho) / (1.0 + rho) * (q.q1 + q.q2 + 2.0 * q.q3) / (2.0 * nf);
    let sigma_form_gap = if sigma2_ml > 0.0 {
        ((alt - sigma2_ml) / sigma2_ml).abs()
    } else {
        0.0
    };

    FitResult {
        beta,
        rho,
        sigma_ml: sigma2_ml.sqrt(),
        sigma_un: sigma2_un.sqrt(),
        kappa_ml: (sigma2_ml * ratio).sqrt(),
        kappa_un: (sigma2_un * ratio).sqrt(),
        cov_beta: cov,
        loglik: profile_value(n, rho, qv),
        n,
        p,
        constraint: c,
        q,
        diagnostics: FitDiagnostics {
            condition: solved.condition,
            fixed_point_residual: (rho - q.fixed_point_rho()).abs(),
            sigma_form_gap,
            boundary: rho == 0.0 || rho == RHO_MAX,
            evaluations: 0,
            warnings: Vec::new(),
        },
    }
}

/// Maximum-likelihood fit: grid plus golden-section search on the profile,
/// then a bisection polish on the stationarity condition `rho = 2 Q3/(Q1+Q2)`.
pub fn fit_ml(obs: &[Observation], c: Constraint) -> Result<FitResult> {
    subject_check(obs, c)?;
    let prof = Profile::new(obs, c)?;

    let mut first_err = None;
    let max = optimize::grid_golden_max(
        |rho| match prof.loglik(rho) {
            Ok(v) => v,
            Err(e) => {
                first_err.get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        RHO_MAX,
        RHO_GRID_STEP,
        RHO_TOL,
    );
    if let Some(e @ Error::SingularDesign { .. }) = first_err {
        return Err(e);
    }
    let max = max?;

    let stationarity = |rho: f64| -> f64 {
        prof.parts(rho)
            .map(|(_, q)| q.fixed_point_rho() - rho)
            .unwrap_or(f64::NAN)
    };
    let mut rho = max.x;
    let (lo, hi) = max.bracket;
    // golden section can stop just beside the root; fall back to one grid step either side
    let wide = (
        (rho - RHO_GRID_STEP).max(0.0),
        (rho + RHO_GRID_STEP).min(RHO_MAX),
    );
    if rho > 0.0 && rho < RHO_MAX {
        let root = optimize::bisect(stationarity, lo, hi, 1e-14)
            .or_else(|| optimize::bisect(stationarity, wide.0, wide.1, 1e-14));
        if let Some(r) = root {
            if prof.loglik(r)? >= max.value - 1e-9 {
                rho = r;
            }
        }
    }

    let (solved, q) = prof.parts(rho)?;
    let mut fit = assemble(obs.len(), c, rho, &solved, q);
    fit.diagnostics.evaluations = max.evaluations;
    if rho == 0.0 {
        fit.diagnostics
            .warnings
            .push("rho at lower bound 0; kappa reported as 0".into());
    } else if rho == RHO_MAX {
        fit.diagnostics
            .warnings
            .push("rho at upper bound; days are almost perfectly correlated".into());
    }
    if fit.diagnostics.condition > 1e8 {
        fit.diagnostics.warnings.push(format!(
            "ill-conditioned design (condition {:.3e})",
            fit.diagnostics.condition
        ));
    }
    Ok(fit)
}

/// OLS of `Y2 - Y1` on `(1, x2 - x1, -2 w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimpleFit {
    /// `a2 - a1`.
    pub a0: f64,
    pub b: f64,
    pub d: f64,
    /// Per-run noise, `sqrt(RSS / (n - 3) / 2)`.
    pub sigma: f64,
    pub se_d: f64,
}

pub fn fit_simple(obs: &[Observation]) -> Result<SimpleFit> {
    let n = obs.len();
    if n < 4 {
        return Err(Error::InsufficientData { needed: 4, got: n });
    }
    let x = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => obs[i].x2 - obs[i].x1,
        _ => -2.0 * obs[i].w,
    });
    let y = DVector::from_iterator(n, obs.iter().map(|o| o.y2 - o.y1));
    let s = linalg::ols(&x, &y)?;
    let rss = (&y - &x * &s.x).norm_squared();
    let s2 = rss / (n - 3) as f64;
    Ok(SimpleFit {
        a0: s.x[0],
        b: s.x[1],
        d: s.x[2],
        sigma: (s2 / 2.0).sqrt(),
        se_d: (s2 * s.inverse[(2, 2)]).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub se_d: f64,
    /// `sqrt(2 sigma_un^2 / n)`, exact for balanced lanes and equal day means.
    pub se_d_balanced: f64,
    /// Excess kurtosis of the residual differences `r2 - r1`.
    pub kurt_diff: f64,
    /// `sigma^2 (1/2 + kurt/4) / n`.
    pub var_sigma_hat: f64,
    /// `Var b_simple / Var b`.
    pub b_precision_ratio: f64,
}

pub fn variance_report(fit: &FitResult, obs: &[Observation]) -> VarianceReport {
    let n = fit.n as f64;
    let s2 = fit.sigma_un * fit.sigma_un;
    let diffs: Vec<f64> = obs
        .iter()
        .map(|o| {
            let (r1, r2) = residuals(o, &fit.beta, fit.constraint);
            r2 - r1
        })
        .collect();
    let kurt = stats::excess_kurtosis(&diffs);
    VarianceReport {
        se_d: fit.se_d(),
        se_d_balanced: (2.0 * s2 / n).sqrt(),
        kurt_diff: kurt,
        var_sigma_hat: s2 * (0.5 + 0.25 * kurt) / n,
        b_precision_ratio: 2.0 / (1.0 + fit.rho),
    }
}
