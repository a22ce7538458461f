//! Empirical decay exponent of a multiplier along a ray, and its growth near 0.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fit::fit_power_law;
use crate::multiplier::Multiplier;

/// Probe layout along the ray `t u`, `|u| = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayProbe {
    pub direction: Vec<f64>,
    pub min_radius: f64,
    pub max_radius: f64,
    /// Geometrically spaced probe radii.
    pub points: usize,
    /// Each probe takes the maximum of `|m|` over `[t, t + window]`, which
    /// removes the zeros of an oscillating symbol.
    pub window: f64,
    pub window_samples: usize,
}

impl DecayProbe {
    /// Radii `4 .. 2^8` along the first axis of `R^{2n}`.
    pub fn along_axis(n: usize) -> Self {
        let mut direction = vec![0.0; 2 * n];
        direction[0] = 1.0;
        Self {
            direction,
            min_radius: 4.0,
            max_radius: 256.0,
            points: 13,
            window: 1.0,
            window_samples: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    /// `delta` in `|m| ~ |zeta|^{-delta}` from the envelope fit.
    pub exponent: f64,
    pub r2: f64,
    pub expected: Option<f64>,
    pub decaying: bool,
    /// `(|zeta|, |m(zeta)| / |zeta|)` for `|zeta| = 2^{-1}, ..., 2^{-20}`.
    pub near_origin: Vec<(f64, f64)>,
    /// The ratio `|m| / |zeta|` stays bounded as `zeta -> 0`.
    pub near_origin_bounded: bool,
}

impl DecayFit {
    pub fn within(&self, tol: f64) -> Option<bool> {
        self.expected.map(|e| (self.exponent - e).abs() <= tol)
    }
}

/// Smallest exponent reported as decay.
const DECAY_THRESHOLD: f64 = 0.1;

pub fn decay_check(m: &Multiplier, expected: Option<f64>, probe: &DecayProbe) -> Result<DecayFit> {
    if probe.direction.len() != 2 * m.dim() {
        return Err(LabError::InvalidParameter("probe direction has the wrong length".into()));
    }
    if !(probe.min_radius > 0.0) || probe.max_radius < 8.0 * probe.min_radius || probe.points < 4 {
        return Err(LabError::InvalidParameter(format!(
            "probe range [{}, {}] with {} points is too short for a fit",
            probe.min_radius, probe.max_radius, probe.points
        )));
    }
    let norm = probe.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    let u: Vec<f64> = probe.direction.iter().map(|v| v / norm).collect();
    let at = |t: f64| {
        let z: Vec<f64> = u.iter().map(|v| v * t).collect();
        m.eval_joint(&z).norm()
    };
    let ratio = (probe.max_radius / probe.min_radius).powf(1.0 / (probe.points - 1) as f64);
    let radii: Vec<f64> = (0..probe.points).map(|i| probe.min_radius * ratio.powi(i as i32)).collect();
    let envelope: Vec<f64> = radii
        .iter()
        .map(|&t| {
            (0..=probe.window_samples)
                .map(|s| at(t + probe.window * s as f64 / probe.window_samples as f64))
                .fold(0.0, f64::max)
        })
        .collect();
    let (exponent, r2) = if envelope.iter().all(|&e| e > 0.0) {
        let fit = fit_power_law(&radii, &envelope)?;
        (-fit.slope, fit.r2)
    } else {
        (f64::INFINITY, 1.0)
    };
    let near_origin: Vec<(f64, f64)> = (1..=20)
        .map(|j| {
            let t = 2f64.powi(-j);
            (t, at(t) / t)
        })
        .collect();
    let early = near_origin[..10].iter().map(|p| p.1).fold(0.0, f64::max);
    let late = near_origin[10..].iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(DecayFit {
        exponent,
        r2,
        expected,
        decaying: exponent >= DECAY_THRESHOLD,
        near_origin,
        near_origin_bounded: late <= 1.5 * early + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::applications::spherical::SphericalMeasure;
    use num_complex::Complex64;

    #[test]
    fn circle_measure_decays_like_root() {
        let s = SphericalMeasure::new(1).unwrap();
        let fit = decay_check(&s.sigma_multiplier(0), Some(0.5), &DecayProbe::along_axis(1)).unwrap();
        assert_eq!(fit.within(0.1), Some(true), "{}", fit.exponent);
        assert!(fit.decaying);
    }

    #[test]
    fn three_sphere_measure_decay() {
        let s = SphericalMeasure::new(2).unwrap();
        let fit = decay_check(&s.sigma_multiplier(0), Some(1.5), &DecayProbe::along_axis(2)).unwrap();
        assert_eq!(fit.within(0.2), Some(true), "{}", fit.exponent);
    }

    #[test]
    fn signed_measure_vanishes_linearly_at_origin() {
        for n in 1..=2 {
            let s = SphericalMeasure::new(n).unwrap();
            let fit = decay_check(&s.mu_multiplier(0), None, &DecayProbe::along_axis(n)).unwrap();
            assert!(fit.near_origin_bounded, "{:?}", fit.near_origin);
        }
    }

    #[test]
    fn constant_is_not_decaying() {
        let m = Multiplier::constant(1, Complex64::new(2.0, 0.0));
        let fit = decay_check(&m, Some(0.5), &DecayProbe::along_axis(1)).unwrap();
        assert!(!fit.decaying);
        assert!(!fit.near_origin_bounded);
        assert_eq!(fit.within(0.1), Some(false));
    }

    #[test]
    fn short_range_rejected() {
        let m = Multiplier::constant(1, Complex64::new(1.0, 0.0));
        let mut p = DecayProbe::along_axis(1);
        p.max_radius = 10.0;
        assert!(decay_check(&m, None, &p).is_err());
    }
}
