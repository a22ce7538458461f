//! Level-set and diagonal splittings of coefficient fields.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::analysis::{Band, WaveletCoeffs};
use super::system::{Gender, WaveletSystem};
use crate::bilinear::witness_norm;
use crate::error::{LabError, Result};
use crate::lattice::{FreqLattice, SpectralFunction};
use crate::multiplier::Multiplier;

/// Row index `k` and column index `l` of a slice viewed on `Z^n x Z^n`.
pub type Site = (Vec<i64>, Vec<i64>);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetSplit {
    pub r: u32,
    pub q: f64,
    pub sup_norm: f64,
    pub lq_norm: f64,
    /// Magnitude window `(lower, upper]` of `U_r`.
    pub window: (f64, f64),
    /// Row-cardinality threshold `2^{rq/2} ||b||_q^{q/2} ||b||_inf^{-q/2}`.
    pub row_threshold: f64,
    pub level: BTreeSet<Site>,
    pub dense: BTreeSet<Site>,
    pub sparse: BTreeSet<Site>,
    /// Rows of the dense part.
    pub rows: BTreeSet<Vec<i64>>,
    /// `card E / threshold`; never exceeds `2^q`.
    pub card_ratio: f64,
}

impl LevelSetSplit {
    pub fn card_rows(&self) -> usize {
        self.rows.len()
    }

    /// Whether `card E <= C 2^{rq/2} ||b||_q^{q/2} ||b||_inf^{-q/2}` holds with `C = 2^q`.
    pub fn card_bound_holds(&self) -> bool {
        self.rows.len() as f64 <= 2f64.powf(self.q) * self.row_threshold
    }
}

fn site(mu: &[i64]) -> Site {
    let n = mu.len() / 2;
    (mu[..n].to_vec(), mu[n..].to_vec())
}

/// Splits the level set `U_r` of one `(lambda, G)` slice by row cardinality.
pub fn level_split(slice: &Band, r: u32, q: f64) -> Result<LevelSetSplit> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(LabError::InvalidExponent(q));
    }
    if slice.is_empty() || slice.axes() % 2 != 0 {
        return Err(LabError::Empty("coefficient slice".into()));
    }
    let sup = slice.max_abs();
    if sup == 0.0 {
        return Err(LabError::Empty("coefficient slice is identically zero".into()));
    }
    let lq = slice.lq_norm(q);
    let upper = sup * 2f64.powi(-(r as i32));
    let lower = upper / 2.0;
    let level: BTreeSet<Site> = slice
        .entries()
        .filter(|(_, v)| {
            let a = v.norm();
            a > lower && a <= upper
        })
        .map(|(mu, _)| site(&mu))
        .collect();
    let mut counts: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    for (k, _) in &level {
        *counts.entry(k.clone()).or_default() += 1;
    }
    let threshold = 2f64.powf(r as f64 * q / 2.0) * lq.powf(q / 2.0) * sup.powf(-q / 2.0);
    let rows: BTreeSet<Vec<i64>> = counts
        .into_iter()
        .filter(|&(_, c)| c as f64 >= threshold)
        .map(|(k, _)| k)
        .collect();
    let (dense, sparse): (BTreeSet<Site>, BTreeSet<Site>) =
        level.iter().cloned().partition(|(k, _)| rows.contains(k));
    Ok(LevelSetSplit {
        r,
        q,
        sup_norm: sup,
        lq_norm: lq,
        window: (lower, upper),
        row_threshold: threshold,
        card_ratio: rows.len() as f64 / threshold,
        level,
        dense,
        sparse,
        rows,
    })
}

/// Largest `r` with a nonempty level set, so that `U_0..=U_r` cover the support.
pub fn deepest_level(slice: &Band) -> Option<u32> {
    let sup = slice.max_abs();
    slice
        .values()
        .iter()
        .map(|v| v.norm())
        .filter(|&a| a > 0.0)
        .map(|a| (sup / a).log2().floor().max(0.0) as u32)
        .max()
}

/// `sum b 2^{lambda n} Psi^G(2^lambda z - mu)` over a finite index set, evaluated pointwise.
#[derive(Debug, Clone)]
struct Expansion {
    system: Arc<WaveletSystem>,
    lambda: u32,
    genders: Vec<Gender>,
    terms: HashMap<Vec<i64>, Complex64>,
}

impl Expansion {
    fn eval(&self, z: &[f64]) -> Complex64 {
        if self.terms.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        let s = 2f64.powi(self.lambda as i32);
        let len = self.system.support_len();
        let axes = z.len();
        // candidate translations and factor values per axis
        let mut factors: Vec<Vec<(i64, f64)>> = Vec::with_capacity(axes);
        for a in 0..axes {
            let x = s * z[a];
            let hi = x.floor() as i64;
            let vals: Vec<(i64, f64)> = (hi - len..=hi)
                .map(|mu| (mu, self.system.eval(self.genders[a], x - mu as f64)))
                .filter(|&(_, v)| v != 0.0)
                .collect();
            if vals.is_empty() {
                return Complex64::new(0.0, 0.0);
            }
            factors.push(vals);
        }
        let norm = 2f64.powf(self.lambda as f64 * axes as f64 / 2.0);
        let mut total = Complex64::new(0.0, 0.0);
        let mut pick = vec![0usize; axes];
        let mut mu = vec![0i64; axes];
        loop {
            let mut w = norm;
            for a in 0..axes {
                let (m, v) = factors[a][pick[a]];
                mu[a] = m;
                w *= v;
            }
            if let Some(b) = self.terms.get(&mu) {
                total += b * w;
            }
            let mut a = axes;
            loop {
                if a == 0 {
                    return total;
                }
                a -= 1;
                pick[a] += 1;
                if pick[a] < factors[a].len() {
                    break;
                }
                pick[a] = 0;
            }
        }
    }
}

/// Multiplier `sum_{mu in sites} b_mu Psi^{lambda,G}_mu` for a slice.
pub fn slice_multiplier<'a>(
    slice: &Band,
    sites: impl IntoIterator<Item = &'a Site>,
    system: Arc<WaveletSystem>,
    label: impl Into<String>,
) -> Multiplier {
    let axes = slice.axes();
    let terms: HashMap<Vec<i64>, Complex64> = sites
        .into_iter()
        .map(|(k, l)| {
            let mu: Vec<i64> = k.iter().chain(l.iter()).copied().collect();
            let b = slice.get(&mu);
            (mu, b)
        })
        .filter(|(_, b)| *b != Complex64::new(0.0, 0.0))
        .collect();
    let genders = (0..axes)
        .map(|a| if slice.mask >> a & 1 == 1 { Gender::M } else { Gender::F })
        .collect();
    let expansion = Expansion {
        system,
        lambda: slice.lambda,
        genders,
        terms,
    };
    let scale = 2f64.powi(-(slice.lambda as i32));
    Multiplier::from_rule(axes / 2, label, move |z| expansion.eval(z)).with_feature_scale(scale)
}

/// `(m^{r,1}, m^{r,2})`: the slice expansion restricted to the dense and sparse parts of `U_r`.
pub fn assemble_split_multipliers(
    slice: &Band,
    split: &LevelSetSplit,
    system: Arc<WaveletSystem>,
) -> (Multiplier, Multiplier) {
    let r = split.r;
    let dense = slice_multiplier(slice, &split.dense, Arc::clone(&system), format!("m^{{{r},1}}"));
    let sparse = slice_multiplier(slice, &split.sparse, system, format!("m^{{{r},2}}"));
    (dense, sparse)
}

/// One level of the split-decay sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitDecayPoint {
    pub r: u32,
    pub level_size: usize,
    pub dense_size: usize,
    pub sparse_size: usize,
    pub card_ratio: f64,
    /// Witnessed `||T_{m^r}(f, g)||_1 / (||f||_2 ||g||_2)`.
    pub witnessed: f64,
    /// `2^{rq/4 - r}`.
    pub predicted_factor: f64,
}

/// Witnessed operator size of `m^r = m^{r,1} + m^{r,2}` for `r = 1..=levels` on a
/// scale-0 slice (`n = 1`) holding a unit anchor and, at level `r`, a `2^r x 2^r`
/// Hankel block `2^-r s_{k+l}` with random signs.
pub fn split_decay_sweep(system: Arc<WaveletSystem>, levels: u32, q: f64, seed: u64) -> Result<Vec<SplitDecayPoint>> {
    if levels == 0 || levels > 8 {
        return Err(LabError::InvalidParameter(format!("{levels} levels")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = system.support_len() + 1;
    let mut origins = Vec::new();
    let mut next = gap;
    for r in 1..=levels {
        origins.push(next);
        next += (1i64 << r) + gap;
    }
    let side = next as usize;
    let mut values = vec![Complex64::new(0.0, 0.0); side * side];
    values[0] = Complex64::new(1.0, 0.0);
    for (r, &o) in (1..=levels).zip(&origins) {
        let size = 1i64 << r;
        let signs: Vec<f64> = (0..2 * size).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let mag = 2f64.powi(-(r as i32));
        for k in 0..size {
            for l in 0..size {
                values[((o + k) * side as i64 + o + l) as usize] = Complex64::new(mag * signs[(k + l) as usize], 0.0);
            }
        }
    }
    let slice = Band::new(0, 0, vec![0, 0], vec![side, side], values)?;
    let radius = (side as i64 + system.support_len()) as usize;
    let lat = FreqLattice::new(1, radius, 1)?;
    let window = |lo: i64, hi: i64| -> Result<SpectralFunction> {
        let coeffs = (0..lat.len())
            .map(|i| {
                let k = lat.point(i)[0];
                if k >= lo && k <= hi { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }
            })
            .collect();
        SpectralFunction::from_coeffs(&lat, coeffs)
    };
    (1..=levels)
        .zip(&origins)
        .map(|(r, &o)| {
            let split = level_split(&slice, r, q)?;
            let (dense, sparse) = assemble_split_multipliers(&slice, &split, Arc::clone(&system));
            let m = Multiplier::from_rule(1, format!("m^{r}"), move |z| dense.eval_joint(z) + sparse.eval_joint(z));
            // block-sized windows at every offset the scaling factors reach
            let pairs = (0..=system.support_len())
                .map(|s| window(o + s, o + s + (1i64 << r) - 1).map(|f| (f.clone(), f)))
                .collect::<Result<Vec<_>>>()?;
            let report = witness_norm(&m, &pairs, None)?;
            Ok(SplitDecayPoint {
                r,
                level_size: split.level.len(),
                dense_size: split.dense.len(),
                sparse_size: split.sparse.len(),
                card_ratio: split.card_ratio,
                witnessed: report.witnessed,
                predicted_factor: 2f64.powf(r as f64 * q / 4.0 - r as f64),
            })
        })
        .collect()
}

/// Separates indices whose support meets the cone `2^-j |xi| <= |eta| <= 2^j |xi|`
/// from the rest. Returns `(diagonal, off_diagonal)`.
pub fn diagonal_split(c: &WaveletCoeffs, j: u32) -> Result<(WaveletCoeffs, WaveletCoeffs)> {
    if j == 0 {
        return Err(LabError::InvalidParameter("diagonal aperture j must be positive".into()));
    }
    let n = c.dim();
    let len = c.system().support_len() as f64;
    let aperture = 2f64.powi(j as i32);
    let mut diag = c.clone();
    let mut off = c.clone();
    for (bd, bo) in diag.bands_mut().iter_mut().zip(off.bands_mut().iter_mut()) {
        let s = 2f64.powi(-(bd.lambda as i32));
        for flat in 0..bd.len() {
            let mu = bd.translation(flat);
            let range = |axes: std::ops::Range<usize>| {
                let (mut near, mut far) = (0.0f64, 0.0f64);
                for a in axes {
                    let lo = mu[a] as f64 * s;
                    let hi = (mu[a] as f64 + len) * s;
                    let d = if lo > 0.0 { lo } else if hi < 0.0 { -hi } else { 0.0 };
                    near += d * d;
                    far += lo.abs().max(hi.abs()).powi(2);
                }
                (near.sqrt(), far.sqrt())
            };
            let (a_min, a_max) = range(0..n);
            let (b_min, b_max) = range(n..2 * n);
            let outside = b_min > aperture * a_max || b_max < a_min / aperture;
            if outside {
                bd.values_mut()[flat] = Complex64::new(0.0, 0.0);
            } else {
                bo.values_mut()[flat] = Complex64::new(0.0, 0.0);
            }
        }
    }
    Ok((diag, off))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::wavelet::analysis::{reconstruct, AnalysisBox, WaveletIndex};

    fn band(values: Vec<f64>, side: usize) -> Band {
        Band::new(
            0,
            0,
            vec![0, 0],
            vec![side, side],
            values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        )
        .unwrap()
    }

    /// Sets straight from the definitions, with no shared code.
    fn brute(values: &[f64], side: usize, r: u32, q: f64) -> (Vec<(i64, i64)>, Vec<(i64, i64)>, Vec<i64>) {
        let sup = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let lq = values.iter().map(|v| v.abs().powf(q)).sum::<f64>().powf(1.0 / q);
        let lo = 2f64.powi(-(r as i32) - 1) * sup;
        let hi = 2f64.powi(-(r as i32)) * sup;
        let t = 2f64.powf(r as f64 * q / 2.0) * lq.powf(q / 2.0) * sup.powf(-q / 2.0);
        let inside = |k: usize, l: usize| {
            let a = values[k * side + l].abs();
            lo < a && a <= hi
        };
        let mut dense = Vec::new();
        let mut sparse = Vec::new();
        let mut rows = Vec::new();
        for k in 0..side {
            let count = (0..side).filter(|&l| inside(k, l)).count();
            if count > 0 && count as f64 >= t {
                rows.push(k as i64);
            }
            for l in 0..side {
                if inside(k, l) {
                    if count as f64 >= t {
                        dense.push((k as i64, l as i64));
                    } else {
                        sparse.push((k as i64, l as i64));
                    }
                }
            }
        }
        (dense, sparse, rows)
    }

    fn flatten(set: &BTreeSet<Site>) -> Vec<(i64, i64)> {
        set.iter().map(|(k, l)| (k[0], l[0])).collect()
    }

    #[test]
    fn constant_slice() {
        let b = band(vec![-0.7; 16], 4);
        let s0 = level_split(&b, 0, 2.0).unwrap();
        assert_eq!(s0.level.len(), 16);
        for r in 1..5 {
            assert!(level_split(&b, r, 2.0).unwrap().level.is_empty());
        }
    }

    #[test]
    fn single_entry() {
        let mut v = vec![0.0; 16];
        v[6] = 3.0;
        let b = band(v, 4);
        let s = level_split(&b, 0, 3.0).unwrap();
        assert_eq!(flatten(&s.level), vec![(1, 2)]);
        // threshold = ||b||_q^{q/2} ||b||_inf^{-q/2} = 1, so the single row qualifies
        assert!((s.row_threshold - 1.0).abs() < 1e-12);
        assert_eq!(flatten(&s.dense), vec![(1, 2)]);
        assert!(s.sparse.is_empty());
    }

    #[test]
    fn boundary_value_belongs_to_upper_level() {
        let b = band(vec![1.0, 0.5, 0.25, 0.0], 2);
        assert_eq!(flatten(&level_split(&b, 0, 2.0).unwrap().level), vec![(0, 0)]);
        assert_eq!(flatten(&level_split(&b, 1, 2.0).unwrap().level), vec![(0, 1)]);
        assert_eq!(flatten(&level_split(&b, 2, 2.0).unwrap().level), vec![(1, 0)]);
    }

    #[test]
    fn empty_slice_rejected() {
        assert!(matches!(level_split(&band(vec![0.0; 4], 2), 0, 2.0), Err(LabError::Empty(_))));
        assert!(level_split(&band(vec![1.0; 4], 2), 0, 0.0).is_err());
    }

    #[test]
    fn brute_force_agreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..1000 {
            let values: Vec<f64> = (0..256)
                .map(|_| {
                    let mag = 2f64.powf(-rng.gen_range(0.0..6.0));
                    if rng.gen_bool(0.3) { 0.0 } else if rng.gen_bool(0.5) { mag } else { -mag }
                })
                .collect();
            if values.iter().all(|&v| v == 0.0) {
                continue;
            }
            let r = rng.gen_range(0..6);
            let q = [1.0, 2.0, 2.5, 3.0, 3.9][case % 5];
            let s = level_split(&band(values.clone(), 16), r, q).unwrap();
            let (dense, sparse, rows) = brute(&values, 16, r, q);
            assert_eq!(flatten(&s.dense), dense);
            assert_eq!(flatten(&s.sparse), sparse);
            assert_eq!(s.rows.iter().map(|k| k[0]).collect::<Vec<_>>(), rows);
        }
    }

    proptest! {
        #[test]
        fn split_invariants(values in proptest::collection::vec(-1.0f64..1.0, 64), r in 0u32..5, q in 1.0f64..4.0) {
            prop_assume!(values.iter().any(|&v| v != 0.0));
            let b = band(values, 8);
            let s = level_split(&b, r, q).unwrap();
            prop_assert!(s.dense.is_disjoint(&s.sparse));
            prop_assert_eq!(s.dense.len() + s.sparse.len(), s.level.len());
            for (k, l) in &s.level {
                let a = b.get(&[k[0], l[0]]).norm();
                prop_assert!(s.window.0 < a && a <= s.window.1);
            }
            prop_assert!(s.card_bound_holds());
            prop_assert!(s.card_ratio <= 2f64.powf(q));
        }
    }

    fn system() -> Arc<WaveletSystem> {
        Arc::new(WaveletSystem::build(0, 1, 12).unwrap())
    }

    #[test]
    fn empty_dense_part_gives_zero() {
        let b = band(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.9], 3);
        // threshold exceeds 1, so single-entry rows stay sparse
        let s = level_split(&b, 0, 4.0).unwrap();
        assert!(s.dense.is_empty());
        let (m1, m2) = assemble_split_multipliers(&b, &s, system());
        assert_eq!(m1.eval(&[0.8], &[1.3]), Complex64::new(0.0, 0.0));
        assert!(m2.eval(&[0.8], &[1.3]).norm() > 0.0);
    }

    #[test]
    fn partition_identity() {
        let region = AnalysisBox { half_width: 4.0 };
        let sys = system();
        let mut c = WaveletCoeffs::zeros(Arc::clone(&sys), 1, 1, region).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in -3..3 {
            for l in -3..3 {
                let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 2f64.powi(-(k + l + 6));
                c.set(&WaveletIndex { lambda: 1, mask: 0b10, mu: vec![k as i64, l as i64] }, v).unwrap();
            }
        }
        let slice = c.band(1, 0b10).unwrap().clone();
        let deepest = deepest_level(&slice).unwrap();
        let parts: Vec<(Multiplier, Multiplier)> = (0..=deepest)
            .map(|r| assemble_split_multipliers(&slice, &level_split(&slice, r, 2.5).unwrap(), Arc::clone(&sys)))
            .collect();
        let whole = reconstruct(&c, region, 1.0 / 64.0).unwrap();
        for (x, y) in [(-0.5, 0.25), (0.296875, -1.109375), (1.0, 1.0), (-1.265625, 0.609375)] {
            let sum: Complex64 = parts.iter().map(|(a, b)| a.eval(&[x], &[y]) + b.eval(&[x], &[y])).sum();
            let expect = whole.eval(&[x], &[y]);
            assert!((sum - expect).norm() < 1e-8, "{sum} vs {expect}");
        }
    }

    #[test]
    fn diagonal_split_partitions() {
        let region = AnalysisBox { half_width: 4.0 };
        let mut c = WaveletCoeffs::zeros(system(), 1, 2, region).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for b in c.bands_mut() {
            for v in b.values_mut() {
                *v = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
            }
        }
        let (d, o) = diagonal_split(&c, 1).unwrap();
        let mut off_count = 0;
        for ((b, bd), bo) in c.bands().iter().zip(d.bands()).zip(o.bands()) {
            for i in 0..b.len() {
                let (x, y, z) = (b.values()[i], bd.values()[i], bo.values()[i]);
                assert!((y == x && z == Complex64::new(0.0, 0.0)) || (z == x && y == Complex64::new(0.0, 0.0)));
                off_count += usize::from(z != Complex64::new(0.0, 0.0));
            }
        }
        assert!(off_count > 0);
        let (_, wide) = diagonal_split(&c, 12).unwrap();
        assert_eq!(wide.max_abs(), 0.0);
    }

    #[test]
    fn axis_coefficient_is_off_diagonal() {
        // support [5, 8] x [-1, 2]: |eta| <= 2 < |xi| / 2
        let region = AnalysisBox { half_width: 8.0 };
        let mut c = WaveletCoeffs::zeros(system(), 1, 0, region).unwrap();
        let idx = WaveletIndex { lambda: 0, mask: 0b01, mu: vec![5, -1] };
        c.set(&idx, Complex64::new(1.0, 0.0)).unwrap();
        let (d, o) = diagonal_split(&c, 1).unwrap();
        assert_eq!(o.get(&idx), Complex64::new(1.0, 0.0));
        assert_eq!(d.get(&idx), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn split_decay_follows_predicted_factor() {
        let pts = split_decay_sweep(system(), 6, 2.0, 9).unwrap();
        for p in &pts {
            assert_eq!(p.level_size, 1 << (2 * p.r));
        }
        let xs: Vec<f64> = pts.iter().map(|p| p.r as f64).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.witnessed).collect();
        let slope = crate::fit::fit_log2(&xs, &ys).unwrap().slope;
        assert!((slope + 0.5).abs() <= 0.15, "{slope}");
    }

    #[test]
    fn rejects_zero_aperture() {
        let c = WaveletCoeffs::zeros(system(), 1, 0, AnalysisBox { half_width: 2.0 }).unwrap();
        assert!(diagonal_split(&c, 0).is_err());
    }
}
