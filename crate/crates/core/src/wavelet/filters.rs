//! Daubechies filters by spectral factorisation.

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::profile::binomial;

/// Largest genus with a tabulated Hölder exponent.
pub const MAX_GENUS: usize = 10;

/// Hölder exponents of the Daubechies scaling functions db1..db10.
const HOLDER: [f64; MAX_GENUS] = [0.0, 0.55, 1.08, 1.62, 1.97, 2.19, 2.46, 2.76, 3.07, 3.36];

/// Hölder exponent of `dbN`; db1 (Haar) is discontinuous and reported as 0.
pub fn holder_exponent(genus: usize) -> Option<f64> {
    HOLDER.get(genus.checked_sub(1)?).copied()
}

/// Smallest genus `N` with `N >= moments + 1` vanishing moments and a
/// Hölder exponent strictly above `smoothness`.
pub fn required_genus(smoothness: usize, moments: usize) -> Result<usize> {
    let by_moments = moments + 1;
    let by_smoothness = (2..=MAX_GENUS)
        .find(|&g| HOLDER[g - 1] > smoothness as f64)
        .ok_or_else(|| {
            LabError::InfeasibleWavelet(format!("no Daubechies filter up to db{MAX_GENUS} is C^{smoothness}"))
        })?;
    let genus = by_moments.max(by_smoothness);
    if genus > MAX_GENUS {
        return Err(LabError::InfeasibleWavelet(format!(
            "{moments} vanishing moments need db{genus}, beyond db{MAX_GENUS}"
        )));
    }
    Ok(genus)
}

/// Low-pass filter of `dbN` (length `2N`, sum `sqrt 2`, minimum phase).
pub fn daubechies(genus: usize) -> Result<Vec<f64>> {
    if genus == 0 || genus > MAX_GENUS {
        return Err(LabError::InfeasibleWavelet(format!("db{genus} not available")));
    }
    // Q(z) = sum_k C(N-1+k, k) (-1/4)^k (z-1)^{2k} z^{N-1-k}, ascending powers
    let n = genus;
    let mut q = vec![0.0; 2 * n - 1];
    for k in 0..n {
        let mut t = vec![1.0];
        for _ in 0..2 * k {
            t = poly_mul(&t, &[-1.0, 1.0]);
        }
        let scale = binomial(n - 1 + k, k) * (-0.25f64).powi(k as i32);
        for (i, c) in t.iter().enumerate() {
            q[n - 1 - k + i] += scale * c;
        }
    }
    let roots = polynomial_roots(&q)?;
    let mut h = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..n {
        h = cpoly_mul(&h, &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]);
    }
    for r in roots.into_iter().filter(|r| r.norm() < 1.0) {
        h = cpoly_mul(&h, &[-r, Complex64::new(1.0, 0.0)]);
    }
    let mut h: Vec<f64> = h.iter().map(|c| c.re).rev().collect();
    let s: f64 = h.iter().sum();
    let norm = std::f64::consts::SQRT_2 / s;
    h.iter_mut().for_each(|v| *v *= norm);
    Ok(h)
}

/// High-pass partner `g_k = (-1)^k h_{L-1-k}`.
pub fn quadrature_mirror(h: &[f64]) -> Vec<f64> {
    let len = h.len();
    (0..len)
        .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } * h[len - 1 - k])
        .collect()
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn cpoly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// All complex roots of a real polynomial (ascending coefficients) by Aberth iteration.
fn polynomial_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    let monic: Vec<Complex64> = coeffs.iter().map(|c| Complex64::new(c / lead, 0.0)).collect();
    let bound = 1.0 + monic[..deg].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| Complex64::from_polar(0.5 * bound, 2.0 * std::f64::consts::PI * k as f64 / deg as f64 + 0.4))
        .collect();
    let eval = |x: Complex64| {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for c in monic.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    };
    for _ in 0..500 {
        let mut shift = 0.0f64;
        for i in 0..deg {
            let (p, dp) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulse: Complex64 = (0..deg).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let w = ratio / (1.0 - ratio * repulse);
            z[i] -= w;
            shift = shift.max(w.norm());
        }
        if shift < 1e-14 {
            return Ok(z);
        }
    }
    let scale = |x: Complex64| monic.iter().rev().fold(0.0, |acc, c| acc * x.norm() + c.norm());
    if z.iter().all(|&r| eval(r).0.norm() < 1e-10 * scale(r)) {
        Ok(z)
    } else {
        Err(LabError::NonConvergence("polynomial root iteration did not settle".into()))
    }
}
