//! Multipliers `m(xi, eta)` on `R^n x R^n`, their `L^q` norms and derivative bounds.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::lattice::FreqLattice;
use crate::profile::{binomial, BumpProfile};

/// Evaluation rule on the joint variable `z = (xi, eta)` of length `2n`.
pub type Rule = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// Constants of the size conditions `|m(z)| <= C' min(|z|, |z|^{-delta})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRecord {
    pub c_prime: f64,
    pub delta: f64,
}

impl DecayRecord {
    pub fn bound(&self, radius: f64) -> f64 {
        self.c_prime * radius.min(radius.powf(-self.delta))
    }
}

/// Values on a uniform cube mesh of `R^{2n}`, multilinearly interpolated
/// and zero outside the mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub lower: Vec<f64>,
    pub step: f64,
    pub shape: Vec<usize>,
    pub values: Vec<Complex64>,
}

impl Table {
    pub fn new(lower: Vec<f64>, step: f64, shape: Vec<usize>, values: Vec<Complex64>) -> Result<Self> {
        if lower.len() != shape.len() || shape.iter().any(|&s| s < 2) {
            return Err(LabError::InvalidParameter("table needs at least 2 nodes per axis".into()));
        }
        if !(step > 0.0) {
            return Err(LabError::InvalidParameter(format!("table step {step}")));
        }
        if values.len() != shape.iter().product::<usize>() {
            return Err(LabError::InvalidParameter("table value count mismatch".into()));
        }
        Ok(Self {
            lower,
            step,
            shape,
            values,
        })
    }

    pub fn eval(&self, z: &[f64]) -> Complex64 {
        let d = self.shape.len();
        let mut base = 0usize;
        let mut frac = [0.0f64; 8];
        let mut idx = [0usize; 8];
        assert!(d <= 8, "tables above 8 dimensions are not supported");
        for a in 0..d {
            let t = (z[a] - self.lower[a]) / self.step;
            let last = (self.shape[a] - 1) as f64;
            if !(t >= -1e-12 && t <= last + 1e-12) {
                return Complex64::new(0.0, 0.0);
            }
            let t = t.clamp(0.0, last);
            let i = (t.floor() as usize).min(self.shape[a] - 2);
            idx[a] = i;
            frac[a] = t - i as f64;
        }
        for a in 0..d {
            base = base * self.shape[a] + idx[a];
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut off = 0usize;
            let mut stride = 1usize;
            for a in (0..d).rev() {
                let bit = (corner >> a) & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                off += bit * stride;
                stride *= self.shape[a];
            }
            if w != 0.0 {
                acc += self.values[base + off] * w;
            }
        }
        acc
    }
}

/// A bounded function on `R^{2n}` with optional decay and smoothness metadata.
#[derive(Clone)]
pub struct Multiplier {
    dim: usize,
    label: String,
    rule: Rule,
    table: Option<Arc<Table>>,
    decay: Option<DecayRecord>,
    derivative_bounds: Option<Vec<f64>>,
    feature_scale: Option<f64>,
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Multiplier")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("tabulated", &self.table.is_some())
            .field("decay", &self.decay)
            .field("derivative_bounds", &self.derivative_bounds)
            .finish()
    }
}

impl Multiplier {
    pub fn from_rule<F>(dim: usize, label: impl Into<String>, rule: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            dim,
            label: label.into(),
            rule: Arc::new(rule),
            table: None,
            decay: None,
            derivative_bounds: None,
            feature_scale: None,
        }
    }

    pub fn from_table(dim: usize, label: impl Into<String>, table: Table) -> Result<Self> {
        if table.shape.len() != 2 * dim {
            return Err(LabError::InvalidParameter(format!(
                "table of dimension {} for a multiplier on R^{}",
                table.shape.len(),
                2 * dim
            )));
        }
        let table = Arc::new(table);
        let t = Arc::clone(&table);
        let mut m = Self::from_rule(dim, label, move |z| t.eval(z));
        m.feature_scale = Some(table.step);
        m.table = Some(table);
        Ok(m)
    }

    pub fn constant(dim: usize, value: Complex64) -> Self {
        let mut m = Self::from_rule(dim, format!("constant {value}"), move |_| value);
        let mut bounds = vec![0.0; 33];
        bounds[0] = value.norm();
        m.derivative_bounds = Some(bounds);
        m
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(dim, Complex64::new(0.0, 0.0))
    }

    /// `m(xi, eta) = prod_j b(xi_j) b(eta_j)` with exact derivative bounds registered.
    pub fn bump_product(dim: usize, profile: BumpProfile) -> Self {
        let p = profile.clone();
        let mut m = Self::from_rule(dim, "bump product", move |z| {
            Complex64::new(z.iter().map(|&t| p.eval(t)).product(), 0.0)
        });
        let maxima: Vec<f64> = (0..=profile.smoothness()).map(|k| profile.max_derivative(k)).collect();
        m.derivative_bounds = Some(product_bounds(2 * dim, &maxima));
        m.feature_scale = Some(profile.outer() - profile.inner());
        m
    }

    pub fn with_decay(mut self, decay: DecayRecord) -> Self {
        self.decay = Some(decay);
        self
    }

    /// Registers `b[k] = max_{|alpha| = k} sup |d^alpha m|` for `k = 0..b.len()`.
    pub fn with_derivative_bounds(mut self, bounds: Vec<f64>) -> Self {
        self.derivative_bounds = Some(bounds);
        self
    }

    /// Smallest length scale on which `m` varies; used by the finite-difference mesh check.
    pub fn with_feature_scale(mut self, scale: f64) -> Self {
        self.feature_scale = Some(scale);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn decay(&self) -> Option<DecayRecord> {
        self.decay
    }

    pub fn derivative_bounds(&self) -> Option<&[f64]> {
        self.derivative_bounds.as_deref()
    }

    pub fn feature_scale(&self) -> Option<f64> {
        self.feature_scale
    }

    pub fn table(&self) -> Option<&Table> {
        self.table.as_deref()
    }

    pub fn rule(&self) -> Rule {
        Arc::clone(&self.rule)
    }

    /// Value at the joint point `z = (xi, eta)`.
    pub fn eval_joint(&self, z: &[f64]) -> Complex64 {
        debug_assert_eq!(z.len(), 2 * self.dim);
        (self.rule)(z)
    }

    pub fn eval(&self, xi: &[f64], eta: &[f64]) -> Complex64 {
        let mut z = Vec::with_capacity(2 * self.dim);
        z.extend_from_slice(xi);
        z.extend_from_slice(eta);
        self.eval_joint(&z)
    }

    /// `z -> m(s z)`, with metadata transported.
    pub fn dilate(&self, s: f64) -> Self {
        let rule = Arc::clone(&self.rule);
        let mut out = Self::from_rule(self.dim, format!("{} dilated by {s}", self.label), move |z| {
            let scaled: Vec<f64> = z.iter().map(|v| v * s).collect();
            rule(&scaled)
        });
        out.derivative_bounds = self
            .derivative_bounds
            .as_ref()
            .map(|b| b.iter().enumerate().map(|(k, v)| v * s.abs().powi(k as i32)).collect());
        out.feature_scale = self.feature_scale.map(|f| f / s.abs());
        out.decay = self.decay.map(|d| DecayRecord {
            c_prime: d.c_prime * s.abs().max(s.abs().powf(-d.delta)),
            delta: d.delta,
        });
        out
    }

    /// Indices of probe points where the registered decay record fails.
    pub fn decay_violations(&self, probes: &[Vec<f64>]) -> Vec<usize> {
        let Some(d) = self.decay else {
            return Vec::new();
        };
        probes
            .iter()
            .enumerate()
            .filter(|(_, z)| {
                let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                self.eval_joint(z).norm() > d.bound(r) * (1.0 + 1e-12)
            })
            .map(|(i, _)| i)
            .collect()
    }
}

/// `max_{|alpha| = k} prod_i maxima[alpha_i]` over `alpha` in `N^d`.
fn product_bounds(d: usize, maxima: &[f64]) -> Vec<f64> {
    let top = maxima.len() - 1;
    (0..=top)
        .map(|k| {
            let mut best = 0.0f64;
            for_each_multi_index(d, k, &mut |alpha| {
                if alpha.iter().all(|&a| a <= top) {
                    best = best.max(alpha.iter().map(|&a| maxima[a]).product());
                }
            });
            best
        })
        .collect()
}

/// Calls `f` on every multi-index in `N^d` of total order exactly `k`.
pub(crate) fn for_each_multi_index(d: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(pos: usize, left: usize, alpha: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if pos + 1 == alpha.len() {
            alpha[pos] = left;
            f(alpha);
            return;
        }
        for a in 0..=left {
            alpha[pos] = a;
            rec(pos + 1, left - a, alpha, f);
        }
    }
    let mut alpha = vec![0; d];
    rec(0, k, &mut alpha, f);
}

/// Integration domain for [`multiplier_lq_norm`].
#[derive(Debug, Clone, PartialEq)]
pub enum NormDomain {
    /// The cube `[lower, upper]^{2n}`, integrated by the cell-centred rule.
    Cube { lower: f64, upper: f64 },
    /// The product lattice, each point weighted by `h^{2n}`.
    Lattice(FreqLattice),
}

/// Result of an `L^q` quadrature with its boundary-shell share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LqEstimate {
    pub norm: f64,
    /// Fraction of `int |m|^q` carried by the outermost layer of cells.
    pub shell_fraction: f64,
    pub points: usize,
}

impl LqEstimate {
    pub const SHELL_LIMIT: f64 = 0.01;

    pub fn converged(&self) -> bool {
        self.shell_fraction <= Self::SHELL_LIMIT
    }
}

const MAX_QUADRATURE_POINTS: usize = 1 << 31;

/// Tensor rectangle-rule `||m||_{L^q}` over a cube or a lattice.
///
/// `mesh` is the requested cell width for cubes and ignored for lattices.
pub fn multiplier_lq_norm(m: &Multiplier, q: f64, domain: &NormDomain, mesh: f64) -> Result<LqEstimate> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(LabError::InvalidExponent(q));
    }
    let d = 2 * m.dim();
    let (lower, step, cells) = match domain {
        NormDomain::Cube { lower, upper } => {
            if !(mesh > 0.0) || !(upper > lower) {
                return Err(LabError::InvalidParameter(format!(
                    "cube [{lower}, {upper}] with mesh {mesh}"
                )));
            }
            let cells = ((upper - lower) / mesh).round().max(1.0) as usize;
            let step = (upper - lower) / cells as f64;
            (lower + 0.5 * step, step, cells)
        }
        NormDomain::Lattice(lat) => {
            if lat.dim() != m.dim() {
                return Err(LabError::LatticeMismatch("lattice and multiplier dimensions differ".into()));
            }
            let h = lat.spacing();
            (-(lat.radius() as f64) * h, h, lat.side())
        }
    };
    let total = cells
        .checked_pow(d as u32)
        .filter(|&t| t <= MAX_QUADRATURE_POINTS)
        .ok_or_else(|| LabError::InvalidParameter(format!("{cells}^{d} quadrature points")))?;
    let inner = cells.pow(d as u32 - 1);
    let (sum, shell) = (0..cells)
        .into_par_iter()
        .map(|first| {
            let mut z = vec![0.0; d];
            let mut s = 0.0;
            let mut sh = 0.0;
            for rest in 0..inner {
                let mut r = rest;
                let mut boundary = first == 0 || first + 1 == cells;
                for a in (1..d).rev() {
                    let i = r % cells;
                    r /= cells;
                    boundary |= i == 0 || i + 1 == cells;
                    z[a] = lower + i as f64 * step;
                }
                z[0] = lower + first as f64 * step;
                let v = m.eval_joint(&z).norm();
                if !v.is_finite() {
                    return (f64::NAN, f64::NAN);
                }
                let p = if q == 2.0 { v * v } else { v.powf(q) };
                s += p;
                if boundary {
                    sh += p;
                }
            }
            (s, sh)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    if !sum.is_finite() {
        return Err(LabError::NonFinite(vec![sum]));
    }
    let volume = step.powi(d as i32);
    Ok(LqEstimate {
        norm: (sum * volume).powf(1.0 / q),
        shell_fraction: if sum > 0.0 { shell / sum } else { 0.0 },
        points: total,
    })
}

/// Cube mesh in `R^{2n}` on which finite differences are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeGrid {
    pub lower: f64,
    pub upper: f64,
    pub step: f64,
}

/// `C_0 = max_{|alpha| <= order} sup |d^alpha m|`.
///
/// Registered bounds are used when they reach `order`; otherwise tensor
/// central differences with spacing `probe.step` are taken at every probe node.
pub fn sup_derivative_bound(m: &Multiplier, order: usize, probe: Option<&ProbeGrid>) -> Result<f64> {
    if let Some(b) = m.derivative_bounds() {
        if b.len() > order {
            return Ok(b[..=order].iter().copied().fold(0.0, f64::max));
        }
    }
    let probe = probe.ok_or_else(|| {
        LabError::InvalidParameter(format!(
            "no registered bound to order {order} and no probe mesh for '{}'",
            m.label()
        ))
    })?;
    Ok(finite_difference_bounds(m, order, probe)?
        .into_iter()
        .fold(0.0, f64::max))
}

/// `max_{|alpha| = k} sup |d^alpha m|` for `k = 0..=order`, by central differences.
pub fn finite_difference_bounds(m: &Multiplier, order: usize, probe: &ProbeGrid) -> Result<Vec<f64>> {
    let h = probe.step;
    if !(h > 0.0) || !(probe.upper > probe.lower) {
        return Err(LabError::InvalidParameter(format!("probe grid {probe:?}")));
    }
    if let Some(scale) = m.feature_scale() {
        if h * (order as f64 + 1.0) > scale / 2.0 {
            return Err(LabError::MeshTooCoarse(format!(
                "step {h} cannot resolve order-{order} differences on features of size {scale}"
            )));
        }
    }
    if let Some(t) = m.table() {
        if h < t.step * (1.0 - 1e-12) {
            return Err(LabError::MeshTooCoarse(format!(
                "difference step {h} below table spacing {}",
                t.step
            )));
        }
    }
    let d = 2 * m.dim();
    let nodes = ((probe.upper - probe.lower) / h).round() as usize + 1;
    let total = nodes
        .checked_pow(d as u32)
        .filter(|&t| t <= MAX_QUADRATURE_POINTS)
        .ok_or_else(|| LabError::InvalidParameter("probe grid too large".into()))?;
    let stencils: Vec<Vec<(f64, f64)>> = (0..=order)
        .map(|k| {
            (0..=k)
                .map(|j| {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    let offset = (k as f64 / 2.0 - j as f64) * h;
                    (offset, sign * binomial(k, j) / h.powi(k as i32))
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(order + 1);
    for k in 0..=order {
        let mut alphas = Vec::new();
        for_each_multi_index(d, k, &mut |a| alphas.push(a.to_vec()));
        let best = (0..total)
            .into_par_iter()
            .map(|node| {
                let mut x = vec![0.0; d];
                let mut r = node;
                for slot in x.iter_mut().rev() {
                    *slot = probe.lower + (r % nodes) as f64 * h;
                    r /= nodes;
                }
                alphas
                    .iter()
                    .map(|alpha| mixed_difference(m, &x, alpha, &stencils).norm())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        out.push(best);
    }
    Ok(out)
}

fn mixed_difference(m: &Multiplier, x: &[f64], alpha: &[usize], stencils: &[Vec<(f64, f64)>]) -> Complex64 {
    let d = x.len();
    let sizes: Vec<usize> = alpha.iter().map(|&a| a + 1).collect();
    let count: usize = sizes.iter().product();
    let mut z = vec![0.0; d];
    let mut acc = Complex64::new(0.0, 0.0);
    for c in 0..count {
        let mut r = c;
        let mut w = 1.0;
        for a in 0..d {
            let j = r % sizes[a];
            r /= sizes[a];
            let (off, coef) = stencils[alpha[a]][j];
            z[a] = x[a] + off;
            w *= coef;
        }
        acc += m.eval_joint(&z) * w;
    }
    acc
}

/// Radii `(inner, outer)` of the bump products in [`smooth_catalogue`].
pub const CATALOGUE_RADII: [(f64, f64); 8] = [
    (0.0, 4.0),
    (0.5, 2.5),
    (0.0, 2.0),
    (0.0, 1.0),
    (1.0, 2.0),
    (1.0, 5.0),
    (0.25, 0.75),
    (2.0, 3.0),
];

/// Smooth test multipliers: bump products `prod b(xi_j) b(eta_j)` with exact
/// derivative bounds, widest first.
pub fn smooth_catalogue(dim: usize) -> Result<Vec<Multiplier>> {
    CATALOGUE_RADII
        .iter()
        .map(|&(a, b)| {
            let p = BumpProfile::new(crate::profile::ProfileKind::FourierCompact, a, b)?;
            Ok(Multiplier::bump_product(dim, p).with_label(format!("bump ({a}, {b})")))
        })
        .collect()
}
