//! Least-squares line fits used by the growth and decay regressions.

use serde::Serialize;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination.
    pub r2: f64,
}

impl LineFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Ordinary least squares fit of `y = a + b x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(LabError::InvalidParameter("fit inputs differ in length".into()));
    }
    if x.len() < 2 {
        return Err(LabError::Empty("need at least two points for a line fit".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(LabError::InvalidParameter("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}

/// Fit of `log2 y` against `x`; all `y` must be positive.
pub fn fit_log2(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if let Some(bad) = y.iter().find(|v| !(**v > 0.0)) {
        return Err(LabError::InvalidParameter(format!("cannot take log of {bad}")));
    }
    let ly: Vec<f64> = y.iter().map(|v| v.log2()).collect();
    fit_line(x, &ly)
}

/// Fit of `ln y` against `ln x`, i.e. the exponent of a power law.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if let Some(bad) = x.iter().chain(y).find(|v| !(**v > 0.0)) {
        return Err(LabError::InvalidParameter(format!("cannot take log of {bad}")));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_line(&lx, &ly)
}

/// `(max - min) / mean` of a nonempty sample.
pub fn relative_spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (max - min) / mean
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let x = [0.0, 1.0, 2.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let fit = fit_line(&x, &y).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-14);
        assert!((fit.intercept - 3.0).abs() < 1e-14);
        assert!((fit.r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn power_law_exponent() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 5.0 * v.powf(0.5)).collect();
        assert!((fit_power_law(&x, &y).unwrap().slope - 0.5).abs() < 1e-13);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(fit_line(&[1.0], &[2.0]).is_err());
        assert!(fit_line(&[1.0, 1.0], &[2.0, 3.0]).is_err());
        assert!(fit_log2(&[1.0, 2.0], &[0.0, 3.0]).is_err());
    }

    #[test]
    fn spread_of_constant_is_zero() {
        assert_eq!(relative_spread(&[2.0, 2.0, 2.0]), 0.0);
        assert!((relative_spread(&[1.0, 3.0]) - 1.0).abs() < 1e-15);
    }
}
