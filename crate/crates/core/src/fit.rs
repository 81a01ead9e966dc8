//! Ordinary least squares on a small design matrix.

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    /// Coefficient of determination; 1 when the data have no spread.
    pub r_squared: f64,
}

/// Fits `y ≈ Σ_j c_j basis_j(x)` where `design[i]` holds the basis values at sample `i`.
pub fn least_squares(design: &[Vec<f64>], y: &[f64]) -> Result<LeastSquares> {
    let rows = design.len();
    let cols = design.first().map_or(0, Vec::len);
    if rows != y.len() || rows < cols || cols == 0 || design.iter().any(|r| r.len() != cols) {
        return Err(Error::Fit(format!(
            "cannot fit {cols} coefficients to {rows} samples with {} targets",
            y.len()
        )));
    }
    if design.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite sample".into()));
    }
    let a = Mat::<f64>::from_fn(rows, cols, |i, j| design[i][j]);
    let b = Mat::<f64>::from_fn(rows, 1, |i, _| y[i]);
    let x = a.col_piv_qr().solve_lstsq(&b);
    let coefficients: Vec<f64> = (0..cols).map(|j| x[(j, 0)]).collect();
    if coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::Fit("singular design matrix".into()));
    }
    let mean = y.iter().sum::<f64>() / rows as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = design
        .iter()
        .zip(y)
        .map(|(row, v)| {
            let pred: f64 = row.iter().zip(&coefficients).map(|(a, c)| a * c).sum();
            (v - pred).powi(2)
        })
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LeastSquares {
        coefficients,
        r_squared,
    })
}

/// Straight line `y = intercept + slope x`; returns `(intercept, slope, r²)`.
pub fn line(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let design: Vec<Vec<f64>> = x.iter().map(|&v| vec![1.0, v]).collect();
    let fit = least_squares(&design, y)?;
    Ok((fit.coefficients[0], fit.coefficients[1], fit.r_squared))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (a, b, r2) = line(&x, &y).unwrap();
        assert!((a - 2.0).abs() < 1e-12 && (b + 0.5).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_line_r_squared() {
        // Oracle: textbook closed form for simple regression.
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 2.0, 5.0];
        let (_, b, r2) = line(&x, &y).unwrap();
        assert!((b - 1.1).abs() < 1e-12);
        let sxy = 5.5_f64;
        let sxx = 5.0;
        let syy = 8.75;
        assert!((r2 - sxy * sxy / (sxx * syy)).abs() < 1e-12);
    }

    #[test]
    fn underdetermined_is_rejected() {
        assert!(least_squares(&[vec![1.0, 2.0, 3.0]], &[1.0]).is_err());
    }
}
