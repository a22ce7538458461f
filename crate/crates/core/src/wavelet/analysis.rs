//! Fast isotropic product-wavelet transform of multipliers on a cube.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::system::{Gender, WaveletSystem};
use crate::error::{LabError, Result};
use crate::multiplier::{Multiplier, Table};

/// The analysis cube `[-B, B]^{2n}`; the multiplier is taken as zero outside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalysisBox {
    pub half_width: f64,
}

/// `(lambda, G, mu)` labelling `2^{lambda n} Psi^G(2^lambda x - mu)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WaveletIndex {
    pub lambda: u32,
    /// Bit `a` set means factor `psi_M` on axis `a`.
    pub mask: u32,
    pub mu: Vec<i64>,
}

impl WaveletIndex {
    pub fn genders(&self, axes: usize) -> Vec<Gender> {
        (0..axes)
            .map(|a| if self.mask >> a & 1 == 1 { Gender::M } else { Gender::F })
            .collect()
    }

    /// Whether `(lambda, G)` belongs to the index set: all-`F` only at scale 0.
    pub fn is_admissible(&self) -> bool {
        self.lambda == 0 || self.mask != 0
    }
}

/// Dense `d`-dimensional array over an integer box.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Grid {
    pub lower: Vec<i64>,
    pub shape: Vec<usize>,
    pub data: Vec<Complex64>,
}

impl Grid {
    fn zeros(lower: Vec<i64>, shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            lower,
            shape,
            data: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    fn flat(&self, mu: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for a in 0..self.shape.len() {
            let off = mu[a] - self.lower[a];
            if off < 0 || off as usize >= self.shape[a] {
                return None;
            }
            idx = idx * self.shape[a] + off as usize;
        }
        Some(idx)
    }

    fn point(&self, mut flat: usize) -> Vec<i64> {
        let mut mu = vec![0i64; self.shape.len()];
        for a in (0..self.shape.len()).rev() {
            mu[a] = self.lower[a] + (flat % self.shape[a]) as i64;
            flat /= self.shape[a];
        }
        mu
    }

    /// Applies a banded operator along `axis`: `out[o] = sum_t w in[t]` with
    /// rows given as `(input offset, weight)` lists.
    fn apply_axis(&self, axis: usize, out_lower: i64, rows: &[Vec<(usize, f64)>]) -> Grid {
        let mut shape = self.shape.clone();
        shape[axis] = rows.len();
        let mut lower = self.lower.clone();
        lower[axis] = out_lower;
        let inner: usize = self.shape[axis + 1..].iter().product();
        let in_axis = self.shape[axis];
        let out_axis = rows.len();
        let total: usize = shape.iter().product();
        let data: Vec<Complex64> = (0..total)
            .into_par_iter()
            .map(|flat| {
                let post = flat % inner;
                let o = (flat / inner) % out_axis;
                let pre = flat / (inner * out_axis);
                let base = pre * in_axis * inner + post;
                rows[o]
                    .iter()
                    .map(|&(t, w)| self.data[base + t * inner] * w)
                    .sum()
            })
            .collect();
        Grid { lower, shape, data }
    }

    fn add_assign(&mut self, other: &Grid) {
        for (flat, v) in other.data.iter().enumerate() {
            if *v == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mu = other.point(flat);
            let idx = self.flat(&mu).expect("band outside accumulation range");
            self.data[idx] += v;
        }
    }
}

/// Coefficients of one `(lambda, G)` pair over a box of translations.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub lambda: u32,
    pub mask: u32,
    pub(crate) grid: Grid,
}

impl Band {
    /// Band from explicit values in row-major order over `lower + [0, shape)`.
    pub fn new(lambda: u32, mask: u32, lower: Vec<i64>, shape: Vec<usize>, values: Vec<Complex64>) -> Result<Self> {
        if lower.len() != shape.len() || shape.iter().product::<usize>() != values.len() {
            return Err(LabError::InvalidParameter(format!(
                "band shape {shape:?} does not match {} values",
                values.len()
            )));
        }
        Ok(Self {
            lambda,
            mask,
            grid: Grid {
                lower,
                shape,
                data: values,
            },
        })
    }

    pub fn axes(&self) -> usize {
        self.grid.shape.len()
    }

    pub fn len(&self) -> usize {
        self.grid.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.data.is_empty()
    }

    pub fn lower(&self) -> &[i64] {
        &self.grid.lower
    }

    pub fn shape(&self) -> &[usize] {
        &self.grid.shape
    }

    pub fn values(&self) -> &[Complex64] {
        &self.grid.data
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.grid.data
    }

    pub fn get(&self, mu: &[i64]) -> Complex64 {
        self.grid.flat(mu).map(|i| self.grid.data[i]).unwrap_or_default()
    }

    pub fn set(&mut self, mu: &[i64], value: Complex64) -> Result<()> {
        let i = self
            .grid
            .flat(mu)
            .ok_or_else(|| LabError::InvalidParameter(format!("translation {mu:?} outside band")))?;
        self.grid.data[i] = value;
        Ok(())
    }

    pub fn translation(&self, flat: usize) -> Vec<i64> {
        self.grid.point(flat)
    }

    /// `(mu, b)` for every stored entry.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<i64>, Complex64)> + '_ {
        self.grid.data.iter().enumerate().map(|(i, v)| (self.grid.point(i), *v))
    }

    pub fn max_abs(&self) -> f64 {
        self.grid.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn lq_norm(&self, q: f64) -> f64 {
        if q.is_infinite() {
            return self.max_abs();
        }
        self.grid.data.iter().map(|v| v.norm().powf(q)).sum::<f64>().powf(1.0 / q)
    }

    fn zeroed(&self) -> Self {
        Self {
            lambda: self.lambda,
            mask: self.mask,
            grid: Grid::zeros(self.grid.lower.clone(), self.grid.shape.clone()),
        }
    }
}

/// One exported coefficient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoeffRecord {
    pub lambda: u32,
    pub genders: String,
    pub mu: Vec<i64>,
    pub re: f64,
    pub im: f64,
}

/// `b^{lambda,G}_mu = <Psi^{lambda,G}_mu, m>` for `lambda <= lambda_max`.
#[derive(Debug, Clone)]
pub struct WaveletCoeffs {
    system: Arc<WaveletSystem>,
    dim: usize,
    lambda_max: u32,
    region: AnalysisBox,
    source: String,
    bands: Vec<Band>,
}

impl WaveletCoeffs {
    /// All-zero coefficients with the band layout `analyze` would produce.
    pub fn zeros(system: Arc<WaveletSystem>, dim: usize, lambda_max: u32, region: AnalysisBox) -> Result<Self> {
        let zero = Multiplier::zero(dim);
        let mut c = analyze(&zero, system, lambda_max, region)?;
        c.source = "injected".into();
        Ok(c)
    }

    pub fn system(&self) -> &WaveletSystem {
        &self.system
    }

    pub fn system_arc(&self) -> Arc<WaveletSystem> {
        Arc::clone(&self.system)
    }

    /// Spatial dimension `n`; coefficients live on `R^{2n}`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn axes(&self) -> usize {
        2 * self.dim
    }

    pub fn lambda_max(&self) -> u32 {
        self.lambda_max
    }

    pub fn region(&self) -> AnalysisBox {
        self.region
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn bands_mut(&mut self) -> &mut [Band] {
        &mut self.bands
    }

    pub fn band(&self, lambda: u32, mask: u32) -> Option<&Band> {
        self.bands.iter().find(|b| b.lambda == lambda && b.mask == mask)
    }

    pub fn band_mut(&mut self, lambda: u32, mask: u32) -> Option<&mut Band> {
        self.bands.iter_mut().find(|b| b.lambda == lambda && b.mask == mask)
    }

    pub fn get(&self, index: &WaveletIndex) -> Complex64 {
        self.band(index.lambda, index.mask)
            .map(|b| b.get(&index.mu))
            .unwrap_or_default()
    }

    pub fn set(&mut self, index: &WaveletIndex, value: Complex64) -> Result<()> {
        if !index.is_admissible() {
            return Err(LabError::InvalidParameter(format!("{index:?} is not in the index set")));
        }
        self.band_mut(index.lambda, index.mask)
            .ok_or_else(|| LabError::InvalidParameter(format!("no band for {index:?}")))?
            .set(&index.mu, value)
    }

    /// Copy with every coefficient set to zero.
    pub fn cleared(&self) -> Self {
        let mut c = self.clone();
        c.bands = self.bands.iter().map(Band::zeroed).collect();
        c
    }

    /// Whether the support of `Psi^{lambda,G}_mu` leaves the analysis box.
    pub fn crosses_boundary(&self, lambda: u32, mu: &[i64]) -> bool {
        let s = 2f64.powi(lambda as i32);
        let len = self.system.support_len();
        let b = self.region.half_width;
        mu.iter()
            .any(|&m| (m as f64) / s < -b || ((m + len) as f64) / s > b)
    }

    pub fn max_abs(&self) -> f64 {
        self.bands.iter().map(Band::max_abs).fold(0.0, f64::max)
    }

    /// `max |b^{lambda,G}_mu|` over `G` and interior `mu`, per scale.
    pub fn max_per_scale(&self, interior_only: bool) -> Vec<f64> {
        (0..=self.lambda_max)
            .map(|l| {
                self.bands
                    .iter()
                    .filter(|b| b.lambda == l && (l > 0 || b.mask != 0 || self.lambda_max == 0))
                    .flat_map(|b| {
                        b.entries()
                            .filter(move |(mu, _)| !interior_only || !self.crosses_boundary(l, mu))
                            .map(|(_, v)| v.norm())
                    })
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    pub fn records(&self) -> Vec<CoeffRecord> {
        let axes = self.axes();
        self.bands
            .iter()
            .flat_map(|b| {
                let genders: String = (0..axes)
                    .map(|a| if b.mask >> a & 1 == 1 { 'M' } else { 'F' })
                    .collect();
                b.entries().map(move |(mu, v)| CoeffRecord {
                    lambda: b.lambda,
                    genders: genders.clone(),
                    mu,
                    re: v.re,
                    im: v.im,
                })
            })
            .collect()
    }
}

/// `<Psi^{lambda,G}_mu, Psi^{lambda',G'}_mu'>` on `R^axes`, factor by factor.
pub fn basis_inner_product(system: &WaveletSystem, a: &WaveletIndex, b: &WaveletIndex) -> f64 {
    let axes = a.mu.len();
    let ga = a.genders(axes);
    let gb = b.genders(axes);
    (0..axes)
        .map(|k| system.scaled_inner_product((ga[k], a.lambda, a.mu[k]), (gb[k], b.lambda, b.mu[k])))
        .product()
}

/// Points per unit of the scaling function used by the initial projection.
const PROJECTION_DEPTH: usize = 2;

/// Analysis of `m` on the box down to scale `lambda_max`.
///
/// The projection onto `V_{lambda_max + 1}` uses tensor quadrature with the
/// tabulated scaling function; the remaining scales follow from the
/// non-periodic filter bank.
pub fn analyze(
    m: &Multiplier,
    system: Arc<WaveletSystem>,
    lambda_max: u32,
    region: AnalysisBox,
) -> Result<WaveletCoeffs> {
    let j_top = lambda_max as usize + 1;
    let res = j_top + PROJECTION_DEPTH;
    if PROJECTION_DEPTH > system.depth() {
        return Err(LabError::MeshTooCoarse("projection finer than tabulation".into()));
    }
    let b = region.half_width;
    if !(b > 0.0) {
        return Err(LabError::InvalidParameter(format!("box half-width {b}")));
    }
    let pmax = (b * 2f64.powi(res as i32)).round() as i64;
    if ((pmax as f64) / 2f64.powi(res as i32) - b).abs() > 1e-12 * b {
        return Err(LabError::MeshTooCoarse(format!(
            "box half-width {b} is not a multiple of the quadrature spacing 2^-{res}"
        )));
    }
    let axes = 2 * m.dim();
    let nodes = (2 * pmax + 1) as usize;
    let total = nodes
        .checked_pow(axes as u32)
        .filter(|&t| t <= 1 << 28)
        .ok_or_else(|| LabError::InvalidParameter(format!("{nodes}^{axes} quadrature nodes")))?;
    let step = 2f64.powi(-(res as i32));
    let samples: Vec<Complex64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut z = vec![0.0; axes];
            let mut r = flat;
            for slot in z.iter_mut().rev() {
                *slot = (-pmax + (r % nodes) as i64) as f64 * step;
                r /= nodes;
            }
            m.eval_joint(&z)
        })
        .collect();
    if let Some(bad) = samples.iter().find(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(LabError::NonFinite(vec![bad.re, bad.im]));
    }
    let mut grid = Grid {
        lower: vec![-pmax; axes],
        shape: vec![nodes; axes],
        data: samples,
    };
    // c_{J,k} = sum_p m(p 2^-res) 2^{-J/2} 2^{-q} phi(p 2^-q - k) per axis
    let len = system.support_len();
    let q = PROJECTION_DEPTH;
    let unit = 1i64 << q;
    let k_lo = -(pmax >> q) - len + 1;
    let k_hi = (pmax >> q) - 1 + 1;
    let weight = 2f64.powf(-(j_top as f64) / 2.0) / unit as f64;
    let rows: Vec<Vec<(usize, f64)>> = (k_lo..=k_hi)
        .map(|k| {
            (k * unit..=(k + len) * unit)
                .filter(|p| (-pmax..=pmax).contains(p))
                .map(|p| ((p + pmax) as usize, weight * system.dyadic(Gender::F, p - k * unit, q)))
                .filter(|&(_, w)| w != 0.0)
                .collect()
        })
        .collect();
    for axis in 0..axes {
        grid = grid.apply_axis(axis, k_lo, &rows);
    }
    let mut bands = Vec::new();
    let mut c = grid;
    for level in (0..j_top).rev() {
        let (low, mut details) = split_level(&c, &system, level as u32);
        bands.append(&mut details);
        c = low;
    }
    bands.push(Band {
        lambda: 0,
        mask: 0,
        grid: c,
    });
    bands.sort_by_key(|b| (b.lambda, b.mask));
    Ok(WaveletCoeffs {
        system,
        dim: m.dim(),
        lambda_max,
        region,
        source: m.label().to_string(),
        bands,
    })
}

fn decimation_rows(lower: i64, len: usize, filter: &[f64]) -> (i64, Vec<Vec<(usize, f64)>>) {
    let upper = lower + len as i64 - 1;
    let taps = filter.len() as i64;
    let lo = (lower - taps + 1).div_euclid(2) + if (lower - taps + 1).rem_euclid(2) != 0 { 1 } else { 0 };
    let hi = upper.div_euclid(2);
    let rows = (lo..=hi)
        .map(|k| {
            (0..taps)
                .filter_map(|n| {
                    let i = 2 * k + n;
                    (i >= lower && i <= upper).then(|| ((i - lower) as usize, filter[n as usize]))
                })
                .collect()
        })
        .collect();
    (lo, rows)
}

/// One level of the separable filter bank: the all-low band and `2^d - 1` detail bands.
fn split_level(c: &Grid, system: &WaveletSystem, lambda: u32) -> (Grid, Vec<Band>) {
    let axes = c.shape.len();
    let mut parts = vec![(0u32, c.clone())];
    for axis in 0..axes {
        let mut next = Vec::with_capacity(parts.len() * 2);
        for (mask, g) in parts {
            let (lo_l, rows_l) = decimation_rows(g.lower[axis], g.shape[axis], system.low_pass());
            let (lo_h, rows_h) = decimation_rows(g.lower[axis], g.shape[axis], system.high_pass());
            next.push((mask, g.apply_axis(axis, lo_l, &rows_l)));
            next.push((mask | 1 << axis, g.apply_axis(axis, lo_h, &rows_h)));
        }
        parts = next;
    }
    let mut low = None;
    let mut bands = Vec::new();
    for (mask, grid) in parts {
        if mask == 0 {
            low = Some(grid);
        } else {
            bands.push(Band { lambda, mask, grid });
        }
    }
    (low.expect("low band present"), bands)
}

fn upsampling_rows(lower: i64, len: usize, filter: &[f64], out_lower: i64, out_len: usize) -> Vec<Vec<(usize, f64)>> {
    let taps = filter.len() as i64;
    (0..out_len as i64)
        .map(|o| {
            let i = out_lower + o;
            // c_j[i] = sum_k filter[i - 2k] c_{j-1}[k]
            (0..len as i64)
                .filter_map(|t| {
                    let k = lower + t;
                    let n = i - 2 * k;
                    (n >= 0 && n < taps).then(|| (t as usize, filter[n as usize]))
                })
                .collect()
        })
        .collect()
}

/// Inverse filter bank back to scaling coefficients at level `lambda_max + 1`.
fn synthesize_scaling(c: &WaveletCoeffs) -> Grid {
    let system = c.system();
    let axes = c.axes();
    let taps = system.low_pass().len() as i64;
    let mut low = c.band(0, 0).expect("scale-0 scaling band").grid.clone();
    for level in 0..=c.lambda_max {
        let details: Vec<&Band> = c.bands.iter().filter(|b| b.lambda == level && b.mask != 0).collect();
        let mut out_lower = vec![i64::MAX; axes];
        let mut out_upper = vec![i64::MIN; axes];
        for g in std::iter::once(&low).chain(details.iter().map(|b| &b.grid)) {
            for a in 0..axes {
                out_lower[a] = out_lower[a].min(2 * g.lower[a]);
                out_upper[a] = out_upper[a].max(2 * (g.lower[a] + g.shape[a] as i64 - 1) + taps - 1);
            }
        }
        let out_shape: Vec<usize> = (0..axes).map(|a| (out_upper[a] - out_lower[a] + 1) as usize).collect();
        let mut acc = Grid::zeros(out_lower.clone(), out_shape.clone());
        let pieces = std::iter::once((0u32, &low)).chain(details.iter().map(|b| (b.mask, &b.grid)));
        for (mask, g) in pieces {
            let mut cur = g.clone();
            for a in 0..axes {
                let filter = if mask >> a & 1 == 1 { system.high_pass() } else { system.low_pass() };
                let rows = upsampling_rows(cur.lower[a], cur.shape[a], filter, out_lower[a], out_shape[a]);
                cur = cur.apply_axis(a, out_lower[a], &rows);
            }
            acc.add_assign(&cur);
        }
        low = acc;
    }
    low
}

/// Evaluates the expansion on the mesh `2^-res Z^{2n}` inside the box and returns it as a table.
pub fn reconstruct(c: &WaveletCoeffs, region: AnalysisBox, mesh: f64) -> Result<Multiplier> {
    let j_top = c.lambda_max as usize + 1;
    let res_f = -mesh.log2();
    let res = res_f.round() as usize;
    if !(mesh > 0.0) || (res_f - res as f64).abs() > 1e-9 || res < j_top {
        return Err(LabError::MeshTooCoarse(format!(
            "mesh {mesh} must be 2^-r with r >= {j_top}"
        )));
    }
    let r = res - j_top;
    if r > c.system().depth() {
        return Err(LabError::MeshTooCoarse("mesh finer than tabulation".into()));
    }
    let scaling = synthesize_scaling(c);
    let pmax = (region.half_width * 2f64.powi(res as i32)).round() as i64;
    let unit = 1i64 << r;
    let weight = 2f64.powf(j_top as f64 / 2.0);
    let system = c.system();
    let len = system.support_len();
    let axes = c.axes();
    let mut grid = scaling;
    for a in 0..axes {
        let k_lo = grid.lower[a];
        let k_n = grid.shape[a] as i64;
        let rows: Vec<Vec<(usize, f64)>> = (-pmax..=pmax)
            .map(|p| {
                // phi(p 2^-r - k) != 0 needs k in (p/2^r - len, p/2^r)
                let k_min = (p.div_euclid(unit) - len).max(k_lo);
                let k_max = p.div_euclid(unit).min(k_lo + k_n - 1);
                (k_min..=k_max)
                    .map(|k| ((k - k_lo) as usize, weight * system.dyadic(Gender::F, p - k * unit, r)))
                    .filter(|&(_, w)| w != 0.0)
                    .collect()
            })
            .collect();
        grid = grid.apply_axis(a, -pmax, &rows);
    }
    let nodes = (2 * pmax + 1) as usize;
    let table = Table::new(
        vec![-(pmax as f64) * mesh; axes],
        mesh,
        vec![nodes; axes],
        grid.data,
    )?;
    Ok(Multiplier::from_table(c.dim(), format!("reconstruction of {}", c.source()), table)?
        .with_feature_scale(mesh))
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::fit::fit_log2;
    use crate::profile::{BumpProfile, ProfileKind};

    fn sys(moments: usize) -> Arc<WaveletSystem> {
        Arc::new(WaveletSystem::build(1, moments, 12).unwrap())
    }

    fn smooth() -> Multiplier {
        let p = BumpProfile::new(ProfileKind::FourierCompact, 0.5, 2.5).unwrap();
        Multiplier::bump_product(1, p)
    }

    fn table_l2(m: &Multiplier, interior: f64) -> f64 {
        let t = m.table().unwrap();
        let d = t.shape.len();
        let mut s = 0.0;
        for (flat, v) in t.values.iter().enumerate() {
            let mut r = flat;
            let mut inside = true;
            for a in (0..d).rev() {
                let x = t.lower[a] + (r % t.shape[a]) as f64 * t.step;
                r /= t.shape[a];
                inside &= x.abs() <= interior;
            }
            if inside {
                s += v.norm_sqr();
            }
        }
        (s * t.step.powi(d as i32)).sqrt()
    }

    #[test]
    fn zero_in_zero_out() {
        let c = analyze(&Multiplier::zero(1), sys(1), 2, AnalysisBox { half_width: 4.0 }).unwrap();
        assert_eq!(c.max_abs(), 0.0);
        let r = reconstruct(&c, AnalysisBox { half_width: 4.0 }, 1.0 / 16.0).unwrap();
        assert!(r.table().unwrap().values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn constants_have_no_wavelet_content() {
        let s = sys(2);
        let one = Multiplier::constant(1, Complex64::new(1.0, 0.0));
        let c = analyze(&one, s, 2, AnalysisBox { half_width: 8.0 }).unwrap();
        let mut checked = 0;
        for b in c.bands().iter().filter(|b| b.mask != 0) {
            for (mu, v) in b.entries() {
                if !c.crosses_boundary(b.lambda, &mu) {
                    assert!(v.norm() < 1e-6, "{} {} {:?} {}", b.lambda, b.mask, mu, v);
                    checked += 1;
                }
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn band_layout_matches_index_set() {
        let c = analyze(&smooth(), sys(1), 3, AnalysisBox { half_width: 4.0 }).unwrap();
        assert_eq!(c.bands().len(), 1 + 4 * 3);
        assert!(c.band(0, 0).is_some());
        assert!(c.band(1, 0).is_none());
        for l in 0..=3 {
            for mask in 1..4 {
                assert!(c.band(l, mask).is_some());
            }
        }
    }

    #[test]
    fn parseval_on_coefficients() {
        let m = smooth();
        let c = analyze(&m, sys(2), 3, AnalysisBox { half_width: 4.0 }).unwrap();
        let energy: f64 = c.bands().iter().flat_map(|b| b.values().iter()).map(|v| v.norm_sqr()).sum();
        let p = BumpProfile::new(ProfileKind::FourierCompact, 0.5, 2.5).unwrap();
        let exact = p.lq_norm_pow(2.0).powi(2);
        assert!((energy / exact - 1.0).abs() < 1e-6, "{energy} vs {exact}");
    }

    #[test]
    fn single_coefficient_reconstructs_basis_element() {
        let region = AnalysisBox { half_width: 4.0 };
        let mut c = WaveletCoeffs::zeros(sys(3), 1, 1, region).unwrap();
        let idx = WaveletIndex { lambda: 1, mask: 0b01, mu: vec![-2, 0] };
        c.set(&idx, Complex64::new(1.0, 0.0)).unwrap();
        let r = reconstruct(&c, region, 1.0 / 256.0).unwrap();
        assert!((table_l2(&r, 4.0) - 1.0).abs() < 1e-6);
        let s = c.system();
        // Psi(x) = 2 psi_M(2 x_0 + 2) psi_F(2 x_1) at a mesh point
        let (x0, x1) = (-0.5, 0.75);
        let expect = 2.0 * s.eval(Gender::M, 2.0 * x0 + 2.0) * s.eval(Gender::F, 2.0 * x1);
        assert!((r.eval(&[x0], &[x1]).re - expect).abs() < 1e-9);
    }

    #[test]
    fn reconstruction_error_small() {
        let m = smooth();
        let region = AnalysisBox { half_width: 4.0 };
        let c = analyze(&m, sys(2), 3, region).unwrap();
        let r = reconstruct(&c, region, 1.0 / 64.0).unwrap();
        let t = r.table().unwrap();
        let mut err = 0.0;
        let mut norm = 0.0;
        let n = t.shape[0];
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (t.lower[0] + i as f64 * t.step, t.lower[1] + j as f64 * t.step);
                let exact = m.eval(&[x], &[y]);
                err += (t.values[i * n + j] - exact).norm_sqr();
                norm += exact.norm_sqr();
            }
        }
        assert!((err / norm).sqrt() < 1e-3, "{}", (err / norm).sqrt());
    }

    #[test]
    fn gram_matrix_is_identity() {
        let s = sys(2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let picks: Vec<WaveletIndex> = (0..50)
            .map(|_| {
                let lambda = rng.gen_range(0..4);
                let mask = if lambda == 0 { rng.gen_range(0..4) } else { rng.gen_range(1..4) };
                WaveletIndex { lambda, mask, mu: vec![rng.gen_range(-6..6), rng.gen_range(-6..6)] }
            })
            .collect();
        for a in &picks {
            for b in &picks {
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((basis_inner_product(&s, a, b) - e).abs() < 1e-6, "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn coefficients_decay_with_moments() {
        let p = BumpProfile::new(ProfileKind::FourierCompact, 0.0, 6.0).unwrap();
        let m = Multiplier::bump_product(1, p);
        let c = analyze(&m, Arc::new(WaveletSystem::build(1, 2, 14).unwrap()), 4, AnalysisBox { half_width: 8.0 })
            .unwrap();
        let per = c.max_per_scale(false);
        let xs: Vec<f64> = (0..per.len()).map(|l| l as f64).collect();
        let fit = fit_log2(&xs, &per).unwrap();
        assert!(fit.slope <= -3.5, "{}", fit.slope);
    }

    #[test]
    fn rejects_bad_mesh() {
        let region = AnalysisBox { half_width: 4.0 };
        let c = WaveletCoeffs::zeros(sys(1), 1, 3, region).unwrap();
        assert!(matches!(reconstruct(&c, region, 0.1), Err(LabError::MeshTooCoarse(_))));
        assert!(matches!(reconstruct(&c, region, 0.25), Err(LabError::MeshTooCoarse(_))));
        assert!(analyze(&smooth(), sys(1), 1, AnalysisBox { half_width: 1.0 / 3.0 }).is_err());
    }

    #[test]
    fn inadmissible_index_rejected() {
        let region = AnalysisBox { half_width: 2.0 };
        let mut c = WaveletCoeffs::zeros(sys(1), 1, 1, region).unwrap();
        let idx = WaveletIndex { lambda: 1, mask: 0, mu: vec![0, 0] };
        assert!(c.set(&idx, Complex64::new(1.0, 0.0)).is_err());
    }
}
