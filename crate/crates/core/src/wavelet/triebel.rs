//! Square-function norm of a coefficient field.

use rayon::prelude::*;
use serde::Serialize;

use super::analysis::WaveletCoeffs;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriebelEstimate {
    pub q: f64,
    /// `|| (sum |b 2^{lambda n} chi_Q|^2)^{1/2} ||_{L^q}`.
    pub value: f64,
    /// `2^{lambda n (1 - 2/q)} ||b^{lambda}||_{l^q}` for each scale.
    pub per_scale: Vec<f64>,
}

impl TriebelEstimate {
    /// Largest ratio of a per-scale quantity to the square-function value.
    pub fn calibration(&self) -> f64 {
        if self.value == 0.0 {
            return 0.0;
        }
        self.per_scale.iter().fold(0.0, |a, &p| a.max(p / self.value))
    }
}

/// Integrates the square function exactly over the cells of the finest
/// dyadic grid `2^{-lambda_max} Z^{2n}`, on which it is piecewise constant.
pub fn triebel_lq_estimate(c: &WaveletCoeffs, q: f64) -> Result<TriebelEstimate> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(LabError::InvalidExponent(q));
    }
    let n = c.dim() as i32;
    let axes = c.axes();
    let top = c.lambda_max();
    // A_lambda(mu) = sum_G |b|^2 2^{2 lambda n} on the scale-lambda cube grid
    let mut levels = Vec::new();
    for lambda in 0..=top {
        let bands: Vec<_> = c.bands().iter().filter(|b| b.lambda == lambda).collect();
        if bands.is_empty() {
            continue;
        }
        let mut lower = vec![i64::MAX; axes];
        let mut upper = vec![i64::MIN; axes];
        for b in &bands {
            for a in 0..axes {
                lower[a] = lower[a].min(b.lower()[a]);
                upper[a] = upper[a].max(b.lower()[a] + b.shape()[a] as i64 - 1);
            }
        }
        let shape: Vec<usize> = (0..axes).map(|a| (upper[a] - lower[a] + 1).max(0) as usize).collect();
        let mut acc = vec![0.0; shape.iter().product()];
        let weight = 2f64.powi(2 * lambda as i32 * n);
        for b in &bands {
            for (mu, v) in b.entries() {
                let mut idx = 0usize;
                for a in 0..axes {
                    idx = idx * shape[a] + (mu[a] - lower[a]) as usize;
                }
                acc[idx] += v.norm_sqr() * weight;
            }
        }
        levels.push((lambda, lower, shape, acc));
    }
    let mut cell_lo = vec![i64::MAX; axes];
    let mut cell_hi = vec![i64::MIN; axes];
    for (lambda, lower, shape, _) in &levels {
        let s = top - lambda;
        for a in 0..axes {
            cell_lo[a] = cell_lo[a].min(lower[a] << s);
            cell_hi[a] = cell_hi[a].max(((lower[a] + shape[a] as i64) << s) - 1);
        }
    }
    let cell_shape: Vec<usize> = (0..axes).map(|a| (cell_hi[a] - cell_lo[a] + 1).max(0) as usize).collect();
    let cells: usize = cell_shape.iter().product();
    let volume = 2f64.powi(-(top as i32) * axes as i32);
    let integral: f64 = (0..cells)
        .into_par_iter()
        .map(|flat| {
            let mut nu = vec![0i64; axes];
            let mut r = flat;
            for a in (0..axes).rev() {
                nu[a] = cell_lo[a] + (r % cell_shape[a]) as i64;
                r /= cell_shape[a];
            }
            let s2: f64 = levels
                .iter()
                .map(|(lambda, lower, shape, acc)| {
                    let s = top - lambda;
                    let mut idx = 0usize;
                    for a in 0..axes {
                        let off = (nu[a] >> s) - lower[a];
                        if off < 0 || off as usize >= shape[a] {
                            return 0.0;
                        }
                        idx = idx * shape[a] + off as usize;
                    }
                    acc[idx]
                })
                .sum();
            s2.powf(q / 2.0)
        })
        .sum();
    let value = (integral * volume).powf(1.0 / q);
    let per_scale = (0..=top)
        .map(|lambda| {
            let sum: f64 = c
                .bands()
                .iter()
                .filter(|b| b.lambda == lambda)
                .flat_map(|b| b.values().iter())
                .map(|v| v.norm().powf(q))
                .sum();
            2f64.powf(lambda as f64 * n as f64 * (1.0 - 2.0 / q)) * sum.powf(1.0 / q)
        })
        .collect();
    Ok(TriebelEstimate { q, value, per_scale })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use num_complex::Complex64;
    use proptest::prelude::*;

    use super::*;
    use crate::multiplier::Multiplier;
    use crate::profile::{BumpProfile, ProfileKind};
    use crate::wavelet::analysis::{analyze, AnalysisBox, WaveletIndex};
    use crate::wavelet::system::WaveletSystem;

    fn empty(lambda_max: u32) -> WaveletCoeffs {
        let s = Arc::new(WaveletSystem::build(0, 1, 10).unwrap());
        WaveletCoeffs::zeros(s, 1, lambda_max, AnalysisBox { half_width: 2.0 }).unwrap()
    }

    #[test]
    fn zero_field() {
        let t = triebel_lq_estimate(&empty(2), 3.0).unwrap();
        assert_eq!(t.value, 0.0);
        assert!(t.per_scale.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn single_coarse_coefficient() {
        let mut c = empty(2);
        c.set(&WaveletIndex { lambda: 0, mask: 0b10, mu: vec![-1, 0] }, Complex64::new(0.0, -2.5))
            .unwrap();
        for q in [1.0, 2.0, 3.5] {
            let t = triebel_lq_estimate(&c, q).unwrap();
            assert!((t.value - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn single_fine_coefficient() {
        // S = |b| 2^{lambda n} on a cube of volume 2^{-2 lambda n}
        let mut c = empty(2);
        c.set(&WaveletIndex { lambda: 2, mask: 0b11, mu: vec![3, -4] }, Complex64::new(1.0, 0.0))
            .unwrap();
        let t = triebel_lq_estimate(&c, 4.0).unwrap();
        assert!((t.value - 2f64.powf(2.0 * (1.0 - 0.5))).abs() < 1e-12);
        assert!((t.per_scale[2] - t.value).abs() < 1e-12);
    }

    #[test]
    fn quadratic_case_is_parseval() {
        let p = BumpProfile::new(ProfileKind::FourierCompact, 0.5, 1.5).unwrap();
        let m = Multiplier::bump_product(1, p.clone());
        let s = Arc::new(WaveletSystem::build(1, 2, 12).unwrap());
        let c = analyze(&m, s, 5, AnalysisBox { half_width: 2.0 }).unwrap();
        let t = triebel_lq_estimate(&c, 2.0).unwrap();
        let exact = p.lq_norm_pow(2.0);
        assert!((t.value / exact - 1.0).abs() < 0.05, "{} vs {exact}", t.value);
    }

    #[test]
    fn rejects_small_exponent() {
        assert!(triebel_lq_estimate(&empty(1), 0.5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn per_scale_below_square_function(
            seed in proptest::collection::vec(-1.0f64..1.0, 64),
            q in 2.0f64..6.0,
        ) {
            let mut c = empty(2);
            let mut it = seed.iter().cycle();
            for b in c.bands_mut() {
                for v in b.values_mut() {
                    *v = Complex64::new(*it.next().unwrap(), *it.next().unwrap());
                }
            }
            let t = triebel_lq_estimate(&c, q).unwrap();
            prop_assert!(t.calibration() <= 1.0 + 1e-12);
        }
    }
}
