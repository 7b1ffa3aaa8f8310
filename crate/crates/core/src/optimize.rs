//! Derivative-free maximization on a closed interval.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    /// Final bracket `[lo, hi]` containing `x`.
    pub bracket: (f64, f64),
    pub evaluations: usize,
}

/// Grid scan with spacing `step` over `[lo, hi]` followed by golden-section
/// refinement of the best cell until its width is below `tol`.
///
/// Non-finite values count as `-inf`; a function that is nowhere finite is an error.
pub fn grid_golden_max<F>(mut f: F, lo: f64, hi: f64, step: f64, tol: f64) -> Result<Maximum>
where
    F: FnMut(f64) -> f64,
{
    let positive = |x: f64| x.is_finite() && x > 0.0;
    if !positive(hi - lo) || !positive(step) || !positive(tol) {
        return Err(Error::InvalidArgument(format!(
            "bad search interval [{lo}, {hi}] step {step} tol {tol}"
        )));
    }
    let mut eval = |x: f64, count: &mut usize| {
        *count += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut count = 0;

    let cells = ((hi - lo) / step).ceil() as usize;
    let mut best = (lo, f64::NEG_INFINITY);
    let mut best_k = 0;
    for k in 0..=cells {
        let x = (lo + k as f64 * step).min(hi);
        let v = eval(x, &mut count);
        if v > best.1 {
            best = (x, v);
            best_k = k;
        }
    }
    if best.1 == f64::NEG_INFINITY {
        return Err(Error::NonConvergence(
            "objective is not finite anywhere on the search interval".into(),
        ));
    }

    let xk = |k: usize| (lo + k as f64 * step).min(hi);
    let mut a = if best_k == 0 { lo } else { xk(best_k - 1) };
    let mut b = if best_k >= cells { hi } else { xk(best_k + 1) };

    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c, &mut count);
    let mut fd = eval(d, &mut count);
    let mut iters = 0;
    while b - a > tol {
        iters += 1;
        if iters > 200 {
            return Err(Error::NonConvergence(format!(
                "golden section stalled at width {:e}",
                b - a
            )));
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c, &mut count);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d, &mut count);
        }
    }

    // Endpoints of the bracket may beat its interior when the optimum is on the boundary.
    let mut out = if fc >= fd { (c, fc) } else { (d, fd) };
    if best.1 > out.1 {
        out = best;
    }
    for edge in [lo, hi] {
        if (edge - out.0).abs() <= step {
            let v = eval(edge, &mut count);
            if v > out.1 {
                out = (edge, v);
            }
        }
    }
    Ok(Maximum {
        x: out.0,
        value: out.1,
        bracket: (a.min(out.0), b.max(out.0)),
        evaluations: count,
    })
}

/// Root of `g` on `[a, b]` by bisection, given a sign change.
pub fn bisect<F>(mut g: F, mut a: f64, mut b: f64, tol: f64) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut ga = g(a);
    let gb = g(b);
    if !(ga.is_finite() && gb.is_finite()) || ga.signum() == gb.signum() {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a <= tol {
            return Some(m);
        }
        let gm = g(m);
        if gm == 0.0 {
            return Some(m);
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_maximum() {
        let m = grid_golden_max(|x| -(x - 0.3137).powi(2), 0.0, 1.0, 0.005, 1e-9).unwrap();
        assert!((m.x - 0.3137).abs() < 1e-8);
    }

    #[test]
    fn boundary_maxima() {
        let m = grid_golden_max(|x| -x, 0.0, 1.0, 0.005, 1e-9).unwrap();
        assert_eq!(m.x, 0.0);
        let m = grid_golden_max(|x| x, 0.0, 0.999_999, 0.005, 1e-9).unwrap();
        assert_eq!(m.x, 0.999_999);
    }

    #[test]
    fn rejects_nowhere_finite() {
        assert!(grid_golden_max(|_| f64::NAN, 0.0, 1.0, 0.1, 1e-6).is_err());
    }

    #[test]
    fn bisection_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-13).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-9).is_none());
    }
}
