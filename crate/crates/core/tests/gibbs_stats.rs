//! Distributional checks for the free Gaussian measure: marginals, exact
//! covariance against an independent matrix route, nested-level variance
//! agreement, and the characteristic functional.

use pfield_core::exec::ExecMode;
use pfield_core::gibbs::{
    characteristic_functional, consistency_check, draw_modes, exact_covariance, pairing_draws,
    pairing_variance, sample_free, FreeMeasureSpec,
};
use pfield_core::lattice::{
    assemble_u, lizorkin_project, FieldVec, Lattice, ModelParams,
};
use pfield_core::padic::PrimeConfig;
use pfield_core::radial::{mass_ball_integral, KernelSpec};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use statrs::distribution::{ContinuousCDF, Normal};

const MODE: ExecMode = ExecMode::Sequential;

fn lattice(p: u64, n: u32, l: u32) -> Lattice {
    Lattice::build(PrimeConfig::new(p, n, l).unwrap()).unwrap()
}

fn doc_spec(lat: &Lattice) -> FreeMeasureSpec<'_> {
    let kernel = KernelSpec::new(2.0, 1.0, lat.cfg()).unwrap();
    let params = ModelParams::new(2.0, 2.0, 0.0, kernel).unwrap();
    FreeMeasureSpec::new(lat, params).unwrap()
}

/// One-sample Kolmogorov-Smirnov distance against a centered normal CDF.
fn ks_distance(mut sample: Vec<f64>, sigma: f64) -> f64 {
    let n = sample.len() as f64;
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let normal = Normal::new(0.0, sigma).unwrap();
    let mut d: f64 = 0.0;
    for (i, x) in sample.iter().enumerate() {
        let f = normal.cdf(*x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

#[test]
fn site_marginals_are_the_predicted_gaussians() {
    let lat = lattice(3, 1, 1);
    let spec = doc_spec(&lat);
    let oracle = exact_covariance(&spec);

    // the documented closed-form variance at the origin
    let g0 = oracle.value(0, 0);
    assert!((g0 - 60.0 / 91.0).abs() < 1e-12, "G(0) = {g0}");

    let n = 100_000u64;
    let batch = sample_free(&spec, 2024, n, MODE).unwrap();
    // Kolmogorov-Smirnov on the site-0 marginal at the 0.1% level
    let values: Vec<f64> = batch.fields().iter().map(|f| f.values()[0]).collect();
    let d = ks_distance(values, g0.sqrt());
    let threshold = 1.949 / (n as f64).sqrt();
    assert!(d < threshold, "KS distance {d} above {threshold}");

    // every draw lives in the mean-zero sector by construction
    for f in batch.fields().iter().take(500) {
        assert!(f.coefficient_sum().abs() < 1e-10);
    }
}

#[test]
fn mode_coordinates_have_the_advertised_sigmas() {
    let lat = lattice(3, 1, 2);
    let spec = doc_spec(&lat);
    let n = 60_000usize;
    let q_count = spec.mode_count();

    let mut sums = vec![0.0f64; q_count];
    let mut sq = vec![0.0f64; q_count];
    for i in 0..n {
        let m = draw_modes(&spec, 7, i as u64);
        for q in 0..q_count {
            // x and y carry the same variance; fold both in
            for v in [m.x[q], m.y[q]] {
                sums[q] += v;
                sq[q] += v * v;
            }
        }
    }
    let samples = (2 * n) as f64;
    for q in 0..q_count {
        let sigma2 = spec.mode_sigma(q).powi(2);
        let mean = sums[q] / samples;
        let var = sq[q] / samples - mean * mean;
        // five sigma for a Gaussian variance estimate
        let band = 5.0 * (2.0 / samples).sqrt() * sigma2;
        assert!(
            (var - sigma2).abs() < band,
            "mode {q}: variance {var} vs {sigma2} (band {band})"
        );
        assert!(mean.abs() < 5.0 * (sigma2 / samples).sqrt());
    }
}

#[test]
fn covariance_oracle_matches_the_matrix_inverse() {
    // the sampler's mode-sum covariance against a dense route: invert the
    // assembled quadratic form and remove the zero-mode block
    for (p, n, l, gamma, alpha2) in [(3, 1, 1, 2.0, 2.0), (3, 1, 2, 1.0, 1.0), (5, 1, 1, 1.3, 0.7)]
    {
        let lat = lattice(p, n, l);
        let cfg = lat.cfg();
        let kernel = KernelSpec::new(2.0, 1.0, cfg).unwrap();
        let params = ModelParams::new(gamma, alpha2, 0.0, kernel).unwrap();
        let spec = FreeMeasureSpec::new(&lat, params.clone()).unwrap();
        let oracle = exact_covariance(&spec);

        let cv = cfg.cell_volume();
        let u = assemble_u(&lat, &params, MODE);
        let m = (u.matrix() * (2.0 * cv)).try_inverse().expect("U is positive definite");
        let c0 = mass_ball_integral(i64::from(cfg.level()), &kernel, gamma, alpha2, cfg);
        let sites = lat.len() as f64;

        for a in 0..lat.len() {
            for b in 0..lat.len() {
                let dense_route = m[(a, b)] - 1.0 / (2.0 * c0) / sites;
                let direct = oracle.value(a, b);
                assert!(
                    (dense_route - direct).abs() < 1e-10 * (1.0 + direct.abs()),
                    "covariance mismatch at ({a},{b}): {dense_route} vs {direct}"
                );
                // symmetry and radiality
                assert_eq!(direct, oracle.value(b, a));
                assert!(
                    (direct - oracle.radial(lat.norm_between(a, b))).abs() < 1e-15
                );
            }
        }
        // rows of the covariance sum to zero: no mass on the constant mode
        for a in 0..lat.len() {
            let row: f64 = (0..lat.len()).map(|b| oracle.value(a, b)).sum();
            assert!(row.abs() < 1e-12);
        }
    }
}

#[test]
fn empirical_covariance_agrees_with_the_oracle() {
    let lat = lattice(3, 1, 1);
    let spec = doc_spec(&lat);
    let oracle = exact_covariance(&spec);
    let n = 40_000u64;
    let batch = sample_free(&spec, 99, n, MODE).unwrap();

    let sites = lat.len();
    let mut acc = vec![0.0f64; sites * sites];
    for f in batch.fields() {
        let v = f.values();
        for a in 0..sites {
            for b in a..sites {
                acc[a * sites + b] += v[a] * v[b];
            }
        }
    }
    let nf = n as f64;
    for a in 0..sites {
        for b in a..sites {
            let emp = acc[a * sites + b] / nf;
            let exact = oracle.value(a, b);
            // Var(phi_a phi_b) = G_aa G_bb + G_ab^2 for a Gaussian
            let var = oracle.value(a, a) * oracle.value(b, b) + exact * exact;
            let band = 5.0 * (var / nf).sqrt();
            assert!(
                (emp - exact).abs() < band,
                "covariance ({a},{b}): empirical {emp} vs exact {exact} (band {band})"
            );
        }
    }
}

#[test]
fn nested_levels_assign_one_variance_to_one_function() {
    let mut rng = ChaCha12Rng::seed_from_u64(313);
    for (p, n) in [(3u64, 1u32), (5, 1)] {
        let coarse = lattice(p, n, 1);
        let fine = lattice(p, n, 2);
        let sc = doc_spec(&coarse);
        let sf = doc_spec(&fine);

        for _ in 0..10 {
            let raw: Vec<f64> = (0..coarse.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = lizorkin_project(&FieldVec::new(raw).unwrap());
            let (v1, v2) = consistency_check(&f, &sc, &sf, MODE).unwrap();
            assert!(
                (v1 - v2).abs() <= 1e-10 * (1.0 + v1.abs()),
                "pairing variance split across levels: {v1} vs {v2}"
            );
        }

        // a biased test function is rejected up front
        let biased = FieldVec::constant(1.0, coarse.len());
        assert!(consistency_check(&biased, &sc, &sf, MODE).is_err());
        // so are mismatched couplings
        let other = FreeMeasureSpec::new(
            &fine,
            ModelParams::new(1.0, 2.0, 0.0, KernelSpec::new(2.0, 1.0, fine.cfg()).unwrap())
                .unwrap(),
        )
        .unwrap();
        let f = lizorkin_project(
            &FieldVec::new((0..coarse.len()).map(|i| i as f64).collect()).unwrap(),
        );
        assert!(consistency_check(&f, &sc, &other, MODE).is_err());
    }
}

#[test]
fn sampled_pairings_reproduce_the_analytic_variance() {
    let lat = lattice(3, 1, 2);
    let spec = doc_spec(&lat);
    let mut rng = ChaCha12Rng::seed_from_u64(77);

    for trial in 0..3 {
        let raw: Vec<f64> = (0..lat.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = lizorkin_project(&FieldVec::new(raw).unwrap());
        let analytic = pairing_variance(&spec, &f, MODE).unwrap();

        let n = 40_000u64;
        let draws = pairing_draws(&spec, &f, 1000 + trial, n, MODE).unwrap();
        let nf = n as f64;
        let mean: f64 = draws.iter().sum::<f64>() / nf;
        let var: f64 = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / nf;
        let band = 5.0 * (2.0 / nf).sqrt() * analytic;
        assert!(
            (var - analytic).abs() < band,
            "trial {trial}: sample variance {var} vs analytic {analytic} (band {band})"
        );
    }

    // the variance formula refuses biased functions
    let biased = FieldVec::constant(0.5, lat.len());
    assert!(pairing_variance(&spec, &biased, MODE).is_err());
}

#[test]
fn characteristic_functional_decays_like_a_gaussian() {
    let lat = lattice(3, 1, 1);
    let spec = doc_spec(&lat);
    let mut rng = ChaCha12Rng::seed_from_u64(555);

    for scale in [0.3, 1.0, 2.5] {
        let raw: Vec<f64> = (0..lat.len()).map(|_| rng.random_range(-scale..scale)).collect();
        let f = lizorkin_project(&FieldVec::new(raw).unwrap());
        let c = characteristic_functional(&spec, &f, 42, 30_000, MODE).unwrap();
        let var = pairing_variance(&spec, &f, MODE).unwrap();
        assert!((c.analytic - (-0.5 * var).exp()).abs() < 1e-15);
        assert!(
            (c.empirical.re - c.analytic).abs() <= 5.0 * c.stderr,
            "cosine average {} vs analytic {} (stderr {})",
            c.empirical.re,
            c.analytic,
            c.stderr
        );
        // the sine part cancels for a centered Gaussian
        assert!(c.empirical.im.abs() <= 5.0 * c.stderr);
        assert!(c.stderr.is_finite() && c.stderr > 0.0);
    }
}

#[test]
fn draw_streams_are_reproducible_and_decorrelated() {
    let lat = lattice(3, 1, 1);
    let spec = doc_spec(&lat);

    let a = sample_free(&spec, 5, 64, MODE).unwrap();
    let b = sample_free(&spec, 5, 64, MODE).unwrap();
    for (x, y) in a.fields().iter().zip(b.fields()) {
        assert_eq!(x.values(), y.values(), "same seed must replay bitwise");
    }

    let c = sample_free(&spec, 6, 64, MODE).unwrap();
    let first_differs = a
        .fields()
        .iter()
        .zip(c.fields())
        .any(|(x, y)| x.values() != y.values());
    assert!(first_differs, "different seeds must decouple");

    // fewer draws than batches cannot produce a batched standard error
    let probe = lizorkin_project(&FieldVec::new((0..lat.len()).map(|i| i as f64).collect()).unwrap());
    assert!(characteristic_functional(&spec, &probe, 5, 8, MODE).is_err());
}
