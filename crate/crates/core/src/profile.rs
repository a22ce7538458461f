//! Smooth compactly supported bump profiles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::quadrature::GaussLegendre;

/// Which side of the Fourier transform the profile is compactly supported on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    FourierCompact,
    SpaceCompact,
}

/// Even profile equal to 1 on `[-inner, inner]` and 0 outside `[-outer, outer]`.
///
/// The transition is the polynomial smoothstep of order `N`,
/// `1 - S_N((|x| - inner) / (outer - inner))`, which has `N` continuous
/// derivatives at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpProfile {
    kind: ProfileKind,
    inner: f64,
    outer: f64,
    order: usize,
    poly: Vec<f64>,
}

pub const DEFAULT_ORDER: usize = 8;

impl BumpProfile {
    pub fn new(kind: ProfileKind, inner: f64, outer: f64) -> Result<Self> {
        Self::with_order(kind, inner, outer, DEFAULT_ORDER)
    }

    pub fn with_order(kind: ProfileKind, inner: f64, outer: f64, order: usize) -> Result<Self> {
        if !(inner >= 0.0 && outer > inner && outer.is_finite()) {
            return Err(LabError::InvalidParameter(format!(
                "bump radii need 0 <= inner < outer, got {inner}, {outer}"
            )));
        }
        if order > 20 {
            return Err(LabError::InvalidParameter(format!("smoothstep order {order} too large")));
        }
        Ok(Self {
            kind,
            inner,
            outer,
            order,
            poly: smoothstep_coefficients(order),
        })
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn inner(&self) -> f64 {
        self.inner
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }

    /// Number of continuous derivatives.
    pub fn smoothness(&self) -> usize {
        self.order
    }

    fn width(&self) -> f64 {
        self.outer - self.inner
    }

    pub fn eval(&self, x: f64) -> f64 {
        let a = x.abs();
        if a <= self.inner {
            1.0
        } else if a >= self.outer {
            0.0
        } else {
            let t = (a - self.inner) / self.width();
            (1.0 - horner(&self.poly, t)).clamp(0.0, 1.0)
        }
    }

    /// `k`-th derivative at `x`.
    pub fn derivative(&self, x: f64, k: usize) -> f64 {
        if k == 0 {
            return self.eval(x);
        }
        let a = x.abs();
        if a <= self.inner || a >= self.outer {
            return 0.0;
        }
        let t = (a - self.inner) / self.width();
        let d = derivative_coefficients(&self.poly, k);
        let sign = if x < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
        -sign * horner(&d, t) / self.width().powi(k as i32)
    }

    /// `sup |p^(k)|` from the exact derivative polynomial.
    pub fn max_derivative(&self, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let d = derivative_coefficients(&self.poly, k);
        let samples = 8192;
        let peak = (0..=samples)
            .map(|i| horner(&d, i as f64 / samples as f64).abs())
            .fold(0.0, f64::max);
        peak / self.width().powi(k as i32)
    }

    /// `int |p|^q dx` over the real line.
    pub fn lq_norm_pow(&self, q: f64) -> f64 {
        let rule = GaussLegendre::new(32);
        let ramp = rule.composite(self.inner, self.outer, 8, |x| self.eval(x).powf(q));
        2.0 * (self.inner + ramp)
    }

    /// Inverse Fourier transform `int p(s) e^{2 pi i x s} ds`, real since `p` is even.
    pub fn inverse_transform(&self, x: f64) -> f64 {
        let flat = if x == 0.0 {
            2.0 * self.inner
        } else {
            (2.0 * PI * x * self.inner).sin() / (PI * x)
        };
        // resolve the oscillation cos(2 pi x s) on the ramp
        let cycles = (x.abs() * self.width()).ceil() as usize;
        let panels = 4 + 2 * cycles;
        let rule = GaussLegendre::new(24);
        let ramp = rule.composite(self.inner, self.outer, panels, |s| {
            self.eval(s) * (2.0 * PI * x * s).cos()
        });
        flat + 2.0 * ramp
    }
}

/// Coefficients of `S_N(x) = x^{N+1} sum_n C(N+n, n) C(2N+1, N-n) (-x)^n`.
fn smoothstep_coefficients(order: usize) -> Vec<f64> {
    let n = order;
    let mut c = vec![0.0; 2 * n + 2];
    for k in 0..=n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        c[n + 1 + k] = sign * binomial(n + k, k) * binomial(2 * n + 1, n - k);
    }
    c
}

fn derivative_coefficients(poly: &[f64], k: usize) -> Vec<f64> {
    let mut d = poly.to_vec();
    for _ in 0..k {
        if d.len() <= 1 {
            return vec![0.0];
        }
        d = d
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| i as f64 * c)
            .collect();
    }
    d
}

fn horner(poly: &[f64], x: f64) -> f64 {
    poly.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
