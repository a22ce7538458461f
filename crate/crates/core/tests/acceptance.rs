//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_DEVIATIONS` are evaluated at full tolerance and
//! reported as FAIL when they miss; only an unexpected failure fails the run.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use bilab_core::applications::{
    decay_check, dyadic_spherical_max, rough_kernel_multiplier, surface_measure_ft, Annulus, DecayProbe, KernelMesh,
    SphereSymbol, SphericalMeasure,
};
use bilab_core::bilinear::{apply_bilinear, apply_bilinear_direct, witness_norm};
use bilab_core::extremal::{
    build_thm13_family, conv_weight, counterexample_lq_partial, derivative_count_test, randomized_l1_average,
    sharpness_exponent_test, square_function_value, SignSequence, Thm12Family,
};
use bilab_core::fit::{fit_line, fit_log2, relative_spread};
use bilab_core::lattice::{FreqLattice, SpectralFunction};
use bilab_core::multiplier::{multiplier_lq_norm, smooth_catalogue, sup_derivative_bound, Multiplier, NormDomain};
use bilab_core::profile::{BumpProfile, ProfileKind};
use bilab_core::wavelet::{
    analyze, basis_inner_product, level_split, reconstruct, AnalysisBox, Band, Gender, WaveletIndex, WaveletSystem,
};
use bilab_core::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criterion 6: the ratio at r = 1/2 drifts by about 10% over N = 10..10^4.
const KNOWN_DEVIATIONS: &[u32] = &[6];

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_spectral(lat: &FreqLattice, rng: &mut ChaCha8Rng) -> SpectralFunction {
    let c = (0..lat.len())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    SpectralFunction::from_coeffs(lat, c).unwrap()
}

fn random_real(lat: &FreqLattice, rng: &mut ChaCha8Rng) -> SpectralFunction {
    let mut f = SpectralFunction::zeros(lat);
    for i in 0..lat.len() {
        let neg: Vec<i64> = lat.point(i).iter().map(|v| -v).collect();
        let j = lat.index_of(&neg).unwrap();
        if j < i {
            continue;
        }
        let c = if j == i {
            Complex64::new(rng.gen_range(-1.0..1.0), 0.0)
        } else {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        };
        f.coeffs_mut()[i] = c;
        f.coeffs_mut()[j] = c.conj();
    }
    f
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for radius in [4, 8, 16] {
        let lat = FreqLattice::new(1, radius, 2).unwrap();
        for _ in 0..100 {
            let (a, b, c, d) = (
                rng.gen_range(0.01..0.5),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-1.0..1.0),
            );
            let m = Multiplier::from_rule(1, "random smooth", move |z| {
                let r2 = z[0] * z[0] + z[1] * z[1];
                Complex64::new((-a * r2).exp() * (b * z[0] + c * z[1]).cos(), d * (z[0] * z[1] / 8.0).sin())
            });
            let (f, g) = (random_spectral(&lat, &mut rng), random_spectral(&lat, &mut rng));
            let fast = apply_bilinear(&m, &f, &g).unwrap();
            let direct = apply_bilinear_direct(&m, &f, &g).unwrap();
            let err = fast
                .samples()
                .iter()
                .zip(direct.samples())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            worst = worst.max(err / direct.max_abs());
        }
    }
    check(worst <= 1e-10, format!("max relative error {worst:.2e} over 300 triples"))
}

fn convolution_combinatorics() -> Outcome {
    let mut bad = 0usize;
    let mut checked = 0usize;
    for block in 2..=12u32 {
        let lo = 1u64 << block;
        let hi = 2 * lo - 1;
        for l in 0..=(8 * lo) {
            let w = conv_weight(l, block);
            // b_j = d_j = 2^{-N/2} on [2^N, 2^{N+1}), so the sum is a count over 2^N
            let count = (lo..=hi).filter(|&j| l >= j && (lo..=hi).contains(&(l - j))).count() as u64;
            if w != Ratio::new(count, lo) {
                bad += 1;
            }
            if (l < 2 * lo || l > 4 * lo - 2) && w != Ratio::new(0, 1) {
                bad += 1;
            }
            if (5 * (lo / 2)..=6 * (lo / 2)).contains(&l) && w < Ratio::new(1, 2) {
                bad += 1;
            }
            checked += 1;
        }
    }
    check(bad == 0, format!("{checked} (N, l) cases, {bad} mismatches"))
}

fn root_n_blow_up() -> Outcome {
    let lat = FreqLattice::new(1, 1 << 13, 1).unwrap();
    let fams: Vec<Thm12Family> = (4..=12).map(|n| Thm12Family::new(n).unwrap()).collect();
    let kappa: Vec<f64> = fams
        .iter()
        .map(|f| f.khintchine_value(&lat) / (f.block() as f64).sqrt())
        .collect();
    let spread = relative_spread(&kappa);
    let ratios: Vec<f64> = fams
        .iter()
        .map(|f| randomized_l1_average(f, &lat, 200, SignSequence::new(2024)).unwrap().ratio)
        .collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    check(
        spread <= 0.2 && lo >= 0.70 && hi <= 1.05,
        format!("kappa spread {spread:.3}; randomized/khintchine in [{lo:.3}, {hi:.3}]"),
    )
}

fn lq_threshold() -> Outcome {
    let ls: Vec<u64> = (10..=20).map(|k| 1u64 << k).collect();
    let s45: Vec<f64> = ls.iter().map(|&l| counterexample_lq_partial(4.5, l).unwrap()).collect();
    let inc: Vec<f64> = s45.windows(2).map(|w| w[1] - w[0]).collect();
    let shrinking = inc.windows(2).all(|w| w[1] < w[0]);
    let last = inc.last().unwrap() / inc[0];
    let s4: Vec<f64> = ls.iter().map(|&l| counterexample_lq_partial(4.0, l).unwrap()).collect();
    let xs: Vec<f64> = ls.iter().map(|&l| (1.0 + (l as f64).ln()).ln()).collect();
    let ys: Vec<f64> = s4.iter().map(|s| s.powi(4).ln()).collect();
    let slope = fit_line(&xs, &ys).unwrap().slope;
    check(
        shrinking && last < 0.5 && (slope - 3.0).abs() <= 0.3,
        format!("q=4.5 increments decrease, last/first {last:.3}; q=4 log-exponent {slope:.3}"),
    )
}

fn harmonic_divergence() -> Outcome {
    let ratios: Vec<f64> = (6..=10)
        .map(|d| {
            let fam = build_thm13_family(4..=d, 1, SignSequence::Ones).unwrap();
            let h: f64 = (4..=d).map(|k| 1.0 / k as f64).sum();
            square_function_value(&fam).unwrap() / h
        })
        .collect();
    let spread = relative_spread(&ratios);
    check(spread <= 0.25, format!("value / sum 1/K spread {spread:.3} for D = 6..10"))
}

fn exponent_sharpness() -> Outcome {
    let ns = [10u64, 100, 1000, 10000];
    let ratios = |r: f64| -> Vec<f64> {
        ns.iter()
            .map(|&n| sharpness_exponent_test(n, 0.1, r).unwrap().ratio)
            .collect()
    };
    let critical = relative_spread(&ratios(0.5));
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let slopes: Vec<f64> = [0.3, 0.4]
        .iter()
        .map(|&r| {
            let ys: Vec<f64> = ratios(r).iter().map(|v| v.ln()).collect();
            fit_line(&xs, &ys).unwrap().slope
        })
        .collect();
    let slopes_ok = (slopes[0] - 0.4).abs() <= 0.05 && (slopes[1] - 0.2).abs() <= 0.05;
    check(
        critical <= 0.05 && slopes_ok,
        format!(
            "r=1/2 spread {critical:.3} (limit 0.05); slopes {:.3} at r=0.3, {:.3} at r=0.4",
            slopes[0], slopes[1]
        ),
    )
}

fn derivative_count() -> Outcome {
    let recs: Vec<_> = (0..=5).map(|l| derivative_count_test(l, 2.0, 1).unwrap()).collect();
    let base = recs[0].lq_rescaled;
    let dev = recs
        .iter()
        .map(|r| (r.lq_rescaled / base - 1.0).abs())
        .fold(0.0, f64::max);
    let l1: Vec<f64> = recs.iter().map(|r| r.l1_norm).collect();
    let spread = relative_spread(&l1);
    check(
        dev <= 1e-10 && spread <= 0.10,
        format!("rescaled Lq deviation {dev:.1e}; L1 spread {spread:.2e}"),
    )
}

fn brute_split(values: &[f64], side: usize, r: u32, q: f64) -> (Vec<(i64, i64)>, Vec<(i64, i64)>) {
    let sup = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let lq = values.iter().map(|v| v.abs().powf(q)).sum::<f64>().powf(1.0 / q);
    let hi = sup / 2f64.powi(r as i32);
    let t = 2f64.powf(r as f64 * q / 2.0) * lq.powf(q / 2.0) * sup.powf(-q / 2.0);
    let inside = |k: usize, l: usize| {
        let a = values[k * side + l].abs();
        hi / 2.0 < a && a <= hi
    };
    let (mut dense, mut sparse) = (Vec::new(), Vec::new());
    for k in 0..side {
        let count = (0..side).filter(|&l| inside(k, l)).count();
        for l in (0..side).filter(|&l| inside(k, l)) {
            if count as f64 >= t {
                dense.push((k as i64, l as i64));
            } else {
                sparse.push((k as i64, l as i64));
            }
        }
    }
    (dense, sparse)
}

fn flat(set: &BTreeSet<(Vec<i64>, Vec<i64>)>) -> Vec<(i64, i64)> {
    set.iter().map(|(k, l)| (k[0], l[0])).collect()
}

fn wavelet_machinery() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let smooth = Multiplier::bump_product(1, BumpProfile::new(ProfileKind::FourierCompact, 0.0, 6.0).unwrap());
    for moments in [2usize, 3] {
        let sys = Arc::new(WaveletSystem::build(1, moments, 16).unwrap());
        let vm = (0..=moments)
            .map(|p| sys.moment(Gender::M, p).abs())
            .fold(0.0, f64::max);
        let c = analyze(&smooth, Arc::clone(&sys), 5, AnalysisBox { half_width: 8.0 }).unwrap();
        let per = c.max_per_scale(false);
        let xs: Vec<f64> = (0..per.len()).map(|l| l as f64).collect();
        let slope = fit_log2(&xs, &per).unwrap().slope;
        let target = -((moments + 2) as f64) + 0.5;
        pass &= vm <= 1e-6 && slope <= target;
        notes.push(format!("M={moments}: moments {vm:.1e}, slope {slope:.2} (<= {target})"));
    }

    let sys = Arc::new(WaveletSystem::build(1, 2, 16).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let picks: Vec<WaveletIndex> = (0..60)
        .map(|_| {
            let lambda = rng.gen_range(0..4);
            let mask = if lambda == 0 { rng.gen_range(0..4) } else { rng.gen_range(1..4) };
            WaveletIndex {
                lambda,
                mask,
                mu: vec![rng.gen_range(-6..6), rng.gen_range(-6..6)],
            }
        })
        .collect();
    let gram = picks
        .iter()
        .flat_map(|a| picks.iter().map(move |b| (a, b)))
        .map(|(a, b)| (basis_inner_product(&sys, a, b) - if a == b { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    pass &= gram <= 1e-6;
    notes.push(format!("Gram {gram:.1e}"));

    let mut mismatches = 0;
    let mut cases = 0;
    while cases < 1000 {
        let values: Vec<f64> = (0..256)
            .map(|_| {
                let mag = 2f64.powf(-rng.gen_range(0.0..6.0));
                if rng.gen_bool(0.3) {
                    0.0
                } else if rng.gen_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            })
            .collect();
        if values.iter().all(|&v| v == 0.0) {
            continue;
        }
        let r = rng.gen_range(0..6);
        let q = rng.gen_range(1.0..4.0);
        let band = Band::new(
            0,
            0,
            vec![0, 0],
            vec![16, 16],
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
        .unwrap();
        let s = level_split(&band, r, q).unwrap();
        let (dense, sparse) = brute_split(&values, 16, r, q);
        if flat(&s.dense) != dense || flat(&s.sparse) != sparse {
            mismatches += 1;
        }
        cases += 1;
    }
    pass &= mismatches == 0;
    notes.push(format!("level split {mismatches}/1000 mismatches"));

    let m = Multiplier::bump_product(1, BumpProfile::new(ProfileKind::FourierCompact, 0.5, 2.5).unwrap());
    let region = AnalysisBox { half_width: 4.0 };
    let c = analyze(&m, sys, 5, region).unwrap();
    let rec = reconstruct(&c, region, 1.0 / 64.0).unwrap();
    let t = rec.table().unwrap();
    let n = t.shape[0];
    let (mut err, mut norm) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (t.lower[0] + i as f64 * t.step, t.lower[1] + j as f64 * t.step);
            let exact = m.eval(&[x], &[y]);
            err += (t.values[i * n + j] - exact).norm_sqr();
            norm += exact.norm_sqr();
        }
    }
    let rel = (err / norm).sqrt();
    pass &= rel < 1e-3;
    notes.push(format!("reconstruction {rel:.1e}"));
    check(pass, notes.join("; "))
}

fn applications() -> Outcome {
    let mut notes = Vec::new();
    let mass = surface_measure_ft(1, &[0.0, 0.0]).unwrap();
    let mut pass = (mass - 2.0 * PI).abs() <= 1e-8;
    notes.push(format!("mass error {:.1e}", (mass - 2.0 * PI).abs()));

    let nodes = 1 << 14;
    let worst = (0..20)
        .map(|i| {
            let r = 0.1 * 1.35f64.powi(i);
            let (a, b) = (r * 0.6, r * 0.8);
            let direct: f64 = (0..nodes)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / nodes as f64;
                    (2.0 * PI * (a * t.cos() + b * t.sin())).cos()
                })
                .sum::<f64>()
                * 2.0
                * PI
                / nodes as f64;
            (surface_measure_ft(1, &[a, b]).unwrap() - direct).abs()
        })
        .fold(0.0, f64::max);
    pass &= worst <= 1e-8;
    notes.push(format!("circle quadrature {worst:.1e}"));

    let sm = SphericalMeasure::new(1).unwrap();
    let fit = decay_check(&sm.sigma_multiplier(0), Some(0.5), &DecayProbe::along_axis(1)).unwrap();
    pass &= (fit.exponent - 0.5).abs() <= 0.1;
    notes.push(format!("decay exponent {:.3}", fit.exponent));

    let lat = FreqLattice::new(1, 8, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let violations: usize = (0..20)
        .map(|_| {
            let (f, g) = (random_real(&lat, &mut rng), random_real(&lat, &mut rng));
            dyadic_spherical_max(&f, &g, &sm, -4..=2).unwrap().violations(1e-12).len()
        })
        .sum();
    pass &= violations == 0;
    notes.push(format!("domination violations {violations}"));

    let omega = SphereSymbol::named("rough", 1, 2.0).unwrap();
    let hy = rough_kernel_multiplier(&omega, &Annulus::standard(), KernelMesh::default())
        .unwrap()
        .hausdorff_young_ratio;
    pass &= hy <= 1.05;
    notes.push(format!("Hausdorff-Young {hy:.4}"));
    check(pass, notes.join("; "))
}

fn bound_consistency() -> Outcome {
    let lat = FreqLattice::new(1, 128, 2).unwrap().with_spacing(1.0 / 16.0).unwrap();
    let gauss = |centre: f64, w: f64| {
        move |x: &[f64]| Complex64::new((-PI * ((x[0] - centre) / w).powi(2)).exp(), 0.0)
    };
    let mut pairs = Vec::new();
    for c in [-3.0, -1.5, 0.0, 1.5, 3.0] {
        for w in [0.25, 0.5, 1.0, 2.0] {
            pairs.push((
                SpectralFunction::from_transform(&lat, gauss(c, w)),
                SpectralFunction::from_transform(&lat, gauss(-0.5 * c, w)),
            ));
        }
    }
    let members = smooth_catalogue(1).unwrap();
    // q = 2, n = 1: C_0 takes floor(2n / (4 - q)) + 1 = 2 derivatives
    let scaled: Vec<(f64, f64)> = members
        .iter()
        .map(|m| {
            let c0 = sup_derivative_bound(m, 2, None).unwrap();
            let cube = NormDomain::Cube { lower: -8.0, upper: 8.0 };
            let l2 = multiplier_lq_norm(m, 2.0, &cube, 1.0 / 32.0).unwrap().norm;
            let witnessed = witness_norm(m, &pairs, None).unwrap().witnessed;
            (witnessed, c0.sqrt() * l2.sqrt())
        })
        .collect();
    let c = scaled[0].0 / scaled[0].1;
    let violations = scaled.iter().filter(|(w, p)| *w > c * p * (1.0 + 1e-12)).count();
    let worst = scaled.iter().map(|(w, p)| w / (c * p)).fold(0.0, f64::max);
    check(
        violations == 0,
        format!(
            "frozen C = {c:.4}; worst witnessed/bound {worst:.3}; {violations} violations over {} multipliers",
            scaled.len()
        ),
    )
}

type Criterion = (u32, &'static str, u64, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "oracle equivalence", 60, oracle_equivalence),
        (2, "convolution combinatorics", 5, convolution_combinatorics),
        (3, "N^1/2 blow-up", 600, root_n_blow_up),
        (4, "L^q threshold", 60, lq_threshold),
        (5, "harmonic divergence", 900, harmonic_divergence),
        (6, "exponent sharpness", 5, exponent_sharpness),
        (7, "derivative-count sharpness", 300, derivative_count),
        (8, "wavelet machinery", 600, wavelet_machinery),
        (9, "applications", 600, applications),
        (10, "bound consistency", 300, bound_consistency),
    ];
    let mut unexpected = Vec::new();
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let pass = out.pass && took <= Duration::from_secs(budget);
        println!(
            "{} criterion {id:>2} {name}: {} [{:.1}s of {budget}s]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64(),
        );
        if !pass && !KNOWN_DEVIATIONS.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
