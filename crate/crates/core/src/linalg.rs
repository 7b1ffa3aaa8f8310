use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Conditioning above which a system is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Solution of a square system together with the inverse and its 1-norm condition number.
#[derive(Debug, Clone)]
pub struct Solved {
    pub x: DVector<f64>,
    pub inverse: DMatrix<f64>,
    pub condition: f64,
}

pub fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LU with partial pivoting. Fails when the matrix is numerically singular.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Solved> {
    let lu = a.clone().lu();
    let inverse = lu.try_inverse().ok_or(Error::SingularDesign {
        condition: f64::INFINITY,
    })?;
    let condition = norm1(a) * norm1(&inverse);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::SingularDesign { condition });
    }
    let x = lu.solve(b).ok_or(Error::SingularDesign { condition })?;
    Ok(Solved {
        x,
        inverse,
        condition,
    })
}

/// Ordinary least squares through the normal equations.
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Solved> {
    let xt = x.transpose();
    solve(&(&xt * x), &(&xt * y))
}
