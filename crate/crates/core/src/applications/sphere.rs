//! Symbols on the sphere `S^{2n-1}` and the transform of its surface measure.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::quadrature::GaussLegendre;

/// Largest `|zeta|` accepted by [`surface_measure_ft`].
pub const MAX_FT_RADIUS: f64 = 1.0e4;

/// Tolerance on `int Omega d sigma`.
pub const MEAN_TOLERANCE: f64 = 1e-6;

/// `|S^{a-1}|`, the area of the unit sphere in `R^a`.
fn ambient_sphere_area(a: usize) -> f64 {
    match a {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => ambient_sphere_area(a - 2) * 2.0 * PI / (a - 2) as f64,
    }
}

/// `|S^{2n-1}| = 2 pi^n / (n-1)!`.
pub fn sphere_area(n: usize) -> f64 {
    ambient_sphere_area(2 * n)
}

/// `d sigma^(zeta) = int_{S^{2n-1}} e^{-2 pi i zeta.theta} d sigma(theta)`, reduced to
/// `|S^{2n-2}| int_0^pi cos(2 pi |zeta| cos t) sin^{2n-2} t dt`.
pub fn surface_measure_ft(n: usize, zeta: &[f64]) -> Result<f64> {
    if n == 0 || zeta.len() != 2 * n {
        return Err(LabError::InvalidParameter(format!(
            "point of length {} for the sphere in R^{}",
            zeta.len(),
            2 * n
        )));
    }
    let r = zeta.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(r <= MAX_FT_RADIUS) {
        return Err(LabError::NonConvergence(format!(
            "|zeta| = {r} beyond the quadrature limit {MAX_FT_RADIUS}"
        )));
    }
    Ok(radial_ft(n, r))
}

pub(crate) fn radial_ft(n: usize, r: f64) -> f64 {
    if r == 0.0 {
        return sphere_area(n);
    }
    let d = 2 * n;
    let rule = GaussLegendre::new(24);
    let panels = 4 + 2 * r.ceil() as usize;
    // integrand symmetric about t = pi / 2
    let half = rule.composite(0.0, 0.5 * PI, panels, |t| {
        (2.0 * PI * r * t.cos()).cos() * t.sin().powi(d as i32 - 2)
    });
    2.0 * ambient_sphere_area(d - 1) * half
}

/// Quadrature nodes on `S^{2n-1}` with weights summing to its area.
///
/// The circle uses the midpoint rule; `S^3` uses Hopf coordinates
/// `(cos a e^{ib}, sin a e^{ic})` with Gauss-Legendre in `a`.
pub(crate) fn sphere_nodes(n: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    match n {
        1 => {
            let m = 4096;
            let w = 2.0 * PI / m as f64;
            Ok((0..m)
                .map(|i| {
                    let t = (i as f64 + 0.5) * w;
                    (vec![t.cos(), t.sin()], w)
                })
                .collect())
        }
        2 => {
            let rule = GaussLegendre::new(48);
            let m = 96;
            let w = 2.0 * PI / m as f64;
            let mut out = Vec::with_capacity(48 * m * m);
            for (&x, &wa) in rule.nodes().iter().zip(rule.weights()) {
                let a = 0.25 * PI * (x + 1.0);
                let jac = a.sin() * a.cos() * 0.25 * PI * wa;
                for i in 0..m {
                    let b = (i as f64 + 0.5) * w;
                    for j in 0..m {
                        let c = (j as f64 + 0.5) * w;
                        out.push((
                            vec![a.cos() * b.cos(), a.cos() * b.sin(), a.sin() * c.cos(), a.sin() * c.sin()],
                            jac * w * w,
                        ));
                    }
                }
            }
            Ok(out)
        }
        _ => Err(LabError::InvalidParameter(format!("sphere quadrature for n = {n} not available"))),
    }
}

fn sign(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum()
    }
}

type SphereRule = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A function `Omega` on `S^{2n-1}` with vanishing integral, tagged by an exponent `r`.
#[derive(Clone)]
pub struct SphereSymbol {
    dim: usize,
    label: String,
    r: f64,
    rule: SphereRule,
}

impl fmt::Debug for SphereSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphereSymbol")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("r", &self.r)
            .finish()
    }
}

impl SphereSymbol {
    /// Rejects symbols whose integral exceeds [`MEAN_TOLERANCE`] times the area.
    pub fn new<F>(dim: usize, label: impl Into<String>, r: f64, rule: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if !(r >= 1.0) {
            return Err(LabError::InvalidExponent(r));
        }
        let s = Self {
            dim,
            label: label.into(),
            r,
            rule: Arc::new(rule),
        };
        let mean = s.integral()?;
        if mean.abs() > MEAN_TOLERANCE * sphere_area(dim) {
            return Err(LabError::InvalidParameter(format!(
                "symbol '{}' has integral {mean} over the sphere",
                s.label
            )));
        }
        Ok(s)
    }

    /// Catalogue: `zero`, `odd` (`x_1`), `cos3` (circle only), `sign` (`sgn x_1`),
    /// `rough` (`sgn x_1 |x_1|^{-1/4}`, in `L^r` for `r < 4`).
    pub fn named(name: &str, dim: usize, r: f64) -> Result<Self> {
        match name {
            "zero" => Self::new(dim, name, r, |_| 0.0),
            "odd" => Self::new(dim, name, r, |x| x[0]),
            "cos3" if dim == 1 => Self::new(dim, name, r, |x| {
                let t = x[1].atan2(x[0]);
                (3.0 * t).cos()
            }),
            "sign" => Self::new(dim, name, r, |x| sign(x[0])),
            "rough" => {
                if r >= 4.0 {
                    return Err(LabError::InvalidParameter("the rough symbol lies in L^r only for r < 4".into()));
                }
                Self::new(dim, name, r, |x| {
                    if x[0] == 0.0 {
                        0.0
                    } else {
                        sign(x[0]) * x[0].abs().powf(-0.25)
                    }
                })
            }
            _ => Err(LabError::InvalidParameter(format!("unknown sphere symbol '{name}' for n = {dim}"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Value at a unit vector of `R^{2n}`.
    pub fn eval(&self, theta: &[f64]) -> f64 {
        (self.rule)(theta)
    }

    pub fn integral(&self) -> Result<f64> {
        Ok(sphere_nodes(self.dim)?.iter().map(|(x, w)| w * self.eval(x)).sum())
    }

    /// `||Omega||_{L^p(S^{2n-1})}`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(LabError::InvalidExponent(p));
        }
        let nodes = sphere_nodes(self.dim)?;
        if p.is_infinite() {
            return Ok(nodes.iter().map(|(x, _)| self.eval(x).abs()).fold(0.0, f64::max));
        }
        let s: f64 = nodes.iter().map(|(x, w)| w * self.eval(x).abs().powf(p)).sum();
        Ok(s.powf(1.0 / p))
    }
}
