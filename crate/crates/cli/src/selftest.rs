//! The `selftest` subcommand: a fast invariant suite over every layer of
//! the library, run at fixed small configurations with fixed seeds so a
//! pass is reproducible anywhere.

use pfield_core::exec::ExecMode;
use pfield_core::gibbs::{
    draw_stream, exact_covariance, gaussian_moment, mc_moment, sample_free, wick_pairings,
    FreeMeasureSpec,
};
use pfield_core::interacting::{
    functional_derivative_check, partition_interacting, perturbative_z, wick_rotated_z,
    InteractionSpec, SourceField,
};
use pfield_core::landau::{gl_energy, minimize, ssb_scan, GLParams, MinimizeConfig};
use pfield_core::lattice::{
    assemble_u, assemble_w, dft, eigenvalues_ascending, energy_free_coord, energy_free_momentum,
    solve_free_source, FieldVec, Lattice, ModelParams,
};
use pfield_core::padic::{GridPoint, PrimeConfig};
use pfield_core::radial::{outer_tail, KernelSpec};
use rand::prelude::*;
use serde_json::json;

use crate::error::CliError;
use crate::report::Completed;

type Check = (&'static str, fn() -> Result<(), String>);

fn fail(msg: String) -> Result<(), String> {
    Err(msg)
}

fn lattice(p: u64, n: u32, l: u32) -> Lattice {
    Lattice::build(PrimeConfig::new(p, n, l).unwrap()).unwrap()
}

fn doc_model(cfg: &PrimeConfig) -> ModelParams {
    ModelParams::new(2.0, 2.0, 0.0, KernelSpec::new(2.0, 1.0, cfg).unwrap()).unwrap()
}

fn unit_model(cfg: &PrimeConfig, alpha4: f64) -> ModelParams {
    ModelParams::new(1.0, 1.0, alpha4, KernelSpec::new(2.0, 1.0, cfg).unwrap()).unwrap()
}

fn random_field(n: usize, rng: &mut StdRng) -> FieldVec {
    FieldVec::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn energy_routes_agree() -> Result<(), String> {
    let lat = lattice(3, 1, 2);
    let params = unit_model(lat.cfg(), 0.0);
    let mut rng = StdRng::seed_from_u64(101);
    for _ in 0..20 {
        let f = random_field(lat.len(), &mut rng);
        let coord = energy_free_coord(&f, &lat, &params, ExecMode::Sequential);
        let ghat = dft(&f, &lat, ExecMode::Sequential);
        let momentum = energy_free_momentum(&ghat, &lat, &params);
        let tol = 1e-10 * coord.abs().max(1.0);
        if (coord - momentum).abs() > tol {
            return fail(format!("coordinate {coord} vs momentum {momentum}"));
        }
    }
    Ok(())
}

fn operator_bridge() -> Result<(), String> {
    let lat = lattice(3, 1, 1);
    let params = unit_model(lat.cfg(), 0.0);
    let u = assemble_u(&lat, &params, ExecMode::Sequential);
    if u.symmetry_residual() > 1e-12 {
        return fail(format!("U symmetry residual {}", u.symmetry_residual()));
    }
    let eigen = eigenvalues_ascending(&u);
    let floor = params.alpha2() / 2.0 - 1e-10;
    if eigen[0] < floor {
        return fail(format!("smallest U eigenvalue {} below {floor}", eigen[0]));
    }
    let w = assemble_w(&lat, params.kernel(), ExecMode::Sequential);
    let tau = outer_tail(lat.cfg().level() as i64, params.kernel(), lat.cfg());
    for (i, row) in w.matrix().row_iter().enumerate() {
        let sum: f64 = row.iter().sum();
        if (sum + tau).abs() > 1e-12 {
            return fail(format!("W row {i} sums to {sum}, want {}", -tau));
        }
    }
    Ok(())
}

fn covariance_doc_value() -> Result<(), String> {
    let lat = lattice(3, 1, 1);
    let fm = FreeMeasureSpec::new(&lat, doc_model(lat.cfg())).map_err(|e| e.to_string())?;
    let g0 = exact_covariance(&fm).value(0, 0);
    let want = 60.0 / 91.0;
    if (g0 - want).abs() > 1e-12 {
        return fail(format!("G(0) = {g0}, want {want}"));
    }
    Ok(())
}

fn sampler_moments() -> Result<(), String> {
    let lat = lattice(3, 1, 1);
    let fm = FreeMeasureSpec::new(&lat, doc_model(lat.cfg())).map_err(|e| e.to_string())?;
    let oracle = exact_covariance(&fm);
    for pair in [[0usize, 0], [0, 1], [0, 3]] {
        let want = oracle.value(pair[0], pair[1]);
        let (got, stderr) = mc_moment(&fm, &pair, 17, 20_000, ExecMode::Parallel)
            .map_err(|e| e.to_string())?;
        if (got - want).abs() > 5.0 * stderr {
            return fail(format!(
                "moment {pair:?}: {got} +- {stderr} vs exact {want}"
            ));
        }
    }
    Ok(())
}

fn wick_isserlis() -> Result<(), String> {
    let counts = [(4u64, 3usize), (8, 105)];
    for (two_n, want) in counts {
        let got = wick_pairings(two_n).map_err(|e| e.to_string())?.len();
        if got != want {
            return fail(format!("{two_n}-point pairings: {got}, want {want}"));
        }
    }
    let lat = lattice(3, 1, 1);
    let fm = FreeMeasureSpec::new(&lat, doc_model(lat.cfg())).map_err(|e| e.to_string())?;
    let points = [0usize, 0, 1, 1];
    let exact = gaussian_moment(&exact_covariance(&fm), &points).map_err(|e| e.to_string())?;
    let (mc, stderr) =
        mc_moment(&fm, &points, 29, 20_000, ExecMode::Parallel).map_err(|e| e.to_string())?;
    if (mc - exact).abs() > 5.0 * stderr {
        return fail(format!("4-point {mc} +- {stderr} vs exact {exact}"));
    }
    Ok(())
}

fn partition_free_unity() -> Result<(), String> {
    let lat = lattice(3, 1, 1);
    let fm = FreeMeasureSpec::new(&lat, unit_model(lat.cfg(), 0.0)).map_err(|e| e.to_string())?;
    let spec = InteractionSpec::phi4(0.0).map_err(|e| e.to_string())?;
    let z = partition_interacting(&fm, &spec, 3, 1_000, ExecMode::Parallel)
        .map_err(|e| e.to_string())?;
    if z.value != 1.0 || z.stderr != 0.0 {
        return fail(format!("free Z = {} +- {}, want exactly 1 +- 0", z.value, z.stderr));
    }
    Ok(())
}

fn perturbative_anchor() -> Result<(), String> {
    let lat = lattice(3, 1, 1);
    let fm = FreeMeasureSpec::new(&lat, doc_model(lat.cfg())).map_err(|e| e.to_string())?;
    let spec = InteractionSpec::phi4(0.05).map_err(|e| e.to_string())?;
    let c0 = exact_covariance(&fm).value(0, 0);
    let expect = 1.0 - 0.05 / 4.0 * lat.cfg().cell_volume() * lat.len() as f64 * 3.0 * c0 * c0;
    let z1 = perturbative_z(&fm, &spec, 1, ExecMode::Sequential).map_err(|e| e.to_string())?;
    if (z1 - expect).abs() > 1e-12 {
        return fail(format!("first-order Z {z1}, closed form {expect}"));
    }
    let small = InteractionSpec::phi4(0.01).map_err(|e| e.to_string())?;
    let mc = partition_interacting(&fm, &small, 23, 40_000, ExecMode::Parallel)
        .map_err(|e| e.to_string())?;
    let series =
        perturbative_z(&fm, &small, 2, ExecMode::Parallel).map_err(|e| e.to_string())?;
    let tol = (5.0 * mc.stderr).max(5.0 * 0.01f64.powi(3));
    if (mc.value - series).abs() > tol {
        return fail(format!(
            "Z MC {} +- {} vs second-order series {series}",
            mc.value, mc.stderr
        ));
    }
    Ok(())
}

fn derivative_check_agrees() -> Result<(), String> {
    let lat = lattice(3, 1, 1);
    let fm = FreeMeasureSpec::new(&lat, unit_model(lat.cfg(), 0.05)).map_err(|e| e.to_string())?;
    let spec = InteractionSpec::phi4(0.05).map_err(|e| e.to_string())?;
    let mut values = vec![0.0; lat.len()];
    values[0] = 1.0;
    values[1] = -1.0;
    let direction = FieldVec::new(values).map_err(|e| e.to_string())?;
    let check = functional_derivative_check(
        &SourceField::zero(lat.len()),
        std::slice::from_ref(&direction),
        &fm,
        &spec,
        31,
        20_000,
        ExecMode::Parallel,
    )
    .map_err(|e| e.to_string())?;
    if !check.agrees {
        return fail(format!(
            "finite difference {} vs direct {} +- {} (difference {} +- {})",
            check.fd_value,
            check.direct,
            check.direct_stderr,
            check.difference,
            check.difference_stderr
        ));
    }
    Ok(())
}

fn source_solve_stationary() -> Result<(), String> {
    let lat = lattice(3, 1, 1);
    let params = unit_model(lat.cfg(), 0.0);
    let mut rng = StdRng::seed_from_u64(211);
    let j = random_field(lat.len(), &mut rng);
    let phi = solve_free_source(&j, &lat, &params, ExecMode::Sequential)
        .map_err(|e| e.to_string())?;
    let glp = GLParams::new(1.0, 0.0, 1.0, 0.0, *params.kernel()).map_err(|e| e.to_string())?;
    let grad = pfield_core::landau::gl_gradient(&phi, &j, &glp, &lat, ExecMode::Sequential);
    if grad.norm_inf() > 1e-10 {
        return fail(format!("solve residual {}", grad.norm_inf()));
    }
    Ok(())
}

fn landau_minimize() -> Result<(), String> {
    let lat = lattice(3, 1, 1);
    let kernel = KernelSpec::new(2.0, 1.0, lat.cfg()).unwrap();
    let convex = GLParams::new(1.0, 0.0, 1.0, 1.0, kernel).map_err(|e| e.to_string())?;
    let mut rng = StdRng::seed_from_u64(47);
    let start = random_field(lat.len(), &mut rng);
    let j = FieldVec::zeros(lat.len());
    let r = minimize(
        &j,
        &convex,
        &MinimizeConfig::new(start),
        &lat,
        ExecMode::Sequential,
    )
    .map_err(|e| e.to_string())?;
    if !r.converged || r.field.norm_inf() > 1e-8 {
        return fail(format!(
            "convex case: converged {} |phi| {}",
            r.converged,
            r.field.norm_inf()
        ));
    }
    let broken = GLParams::new(0.0, 0.0, 0.2, 1.0, kernel).map_err(|e| e.to_string())?;
    let rows =
        ssb_scan(&[-1.0, 1.0], &broken, &lat, ExecMode::Sequential).map_err(|e| e.to_string())?;
    let cold = &rows[0];
    let tau = outer_tail(lat.cfg().level() as i64, &kernel, lat.cfg());
    let target = 1.0 - 0.2 * tau;
    if !cold.converged
        || cold.m_plus <= 0.0
        || cold.m_minus >= 0.0
        || (cold.m_plus + cold.m_minus).abs() > 1e-8
        || (cold.m_plus * cold.m_plus - target).abs() > 1e-6
    {
        return fail(format!(
            "broken phase: m+ {} m- {} target m^2 {target}",
            cold.m_plus, cold.m_minus
        ));
    }
    let warm = &rows[1];
    if warm.m_plus.abs() > 1e-6 || warm.m_minus.abs() > 1e-6 {
        return fail(format!(
            "symmetric phase: m+ {} m- {}",
            warm.m_plus, warm.m_minus
        ));
    }
    Ok(())
}

fn symmetry_exactness() -> Result<(), String> {
    let lat = lattice(3, 1, 1);
    let kernel = KernelSpec::new(2.0, 1.0, lat.cfg()).unwrap();
    let glp = GLParams::new(-0.5, 0.0, 1.0, 0.8, kernel).map_err(|e| e.to_string())?;
    let zero = FieldVec::zeros(lat.len());
    let mut rng = StdRng::seed_from_u64(53);
    for _ in 0..5 {
        let f = random_field(lat.len(), &mut rng);
        let neg = FieldVec::new(f.values().iter().map(|v| -v).collect()).unwrap();
        let e = gl_energy(&f, &zero, &glp, &lat, ExecMode::Sequential);
        let e_neg = gl_energy(&neg, &zero, &glp, &lat, ExecMode::Sequential);
        if e.to_bits() != e_neg.to_bits() {
            return fail(format!("Z2 violated: {e} vs {e_neg}"));
        }
        let shift = lat.points()[4].clone();
        let shifted_values: Vec<f64> = (0..lat.len())
            .map(|i| {
                let coords: Vec<u64> = lat.points()[i]
                    .coords()
                    .iter()
                    .zip(shift.coords())
                    .map(|(&a, &b)| (a + b) % lat.cfg().modulus())
                    .collect();
                let target = GridPoint::new(coords, lat.cfg()).unwrap();
                f.values()[lat.index_of(&target).unwrap()]
            })
            .collect();
        let shifted = FieldVec::new(shifted_values).unwrap();
        let e_shift = gl_energy(&shifted, &zero, &glp, &lat, ExecMode::Sequential);
        if (e - e_shift).abs() > 1e-14 * e.abs().max(1.0) {
            return fail(format!("translation violated: {e} vs {e_shift}"));
        }
    }
    Ok(())
}

fn rotated_unit_free() -> Result<(), String> {
    let lat = lattice(3, 1, 1);
    let fm = FreeMeasureSpec::new(&lat, unit_model(lat.cfg(), 0.0)).map_err(|e| e.to_string())?;
    let spec = InteractionSpec::phi4(0.0).map_err(|e| e.to_string())?;
    let rot = wick_rotated_z(
        &SourceField::zero(lat.len()),
        &fm,
        &spec,
        5,
        2_000,
        ExecMode::Parallel,
    )
    .map_err(|e| e.to_string())?;
    if rot.numerator.re != 1.0 || rot.numerator.im != 0.0 {
        return fail(format!("free numerator {} (want exactly 1)", rot.numerator));
    }
    // each side averages unit-modulus terms, so both live in the unit disk
    // (the ratio need not)
    if rot.numerator.norm() > 1.0 + 1e-12 || rot.denominator.norm() > 1.0 + 1e-12 {
        return fail(format!(
            "oscillatory averages left the unit disk: |num| {} |den| {}",
            rot.numerator.norm(),
            rot.denominator.norm()
        ));
    }
    if rot.sign_problem {
        return fail("sign problem flagged in the free theory".into());
    }
    Ok(())
}

fn rng_reproducibility() -> Result<(), String> {
    let lat = lattice(3, 1, 1);
    let fm = FreeMeasureSpec::new(&lat, doc_model(lat.cfg())).map_err(|e| e.to_string())?;
    let a = sample_free(&fm, 7, 50, ExecMode::Parallel).map_err(|e| e.to_string())?;
    let b = sample_free(&fm, 7, 50, ExecMode::Sequential).map_err(|e| e.to_string())?;
    for (x, y) in a.fields().iter().zip(b.fields()) {
        for (u, v) in x.values().iter().zip(y.values()) {
            if u.to_bits() != v.to_bits() {
                return fail("same seed produced different draws".into());
            }
        }
    }
    let c = sample_free(&fm, 8, 50, ExecMode::Parallel).map_err(|e| e.to_string())?;
    if a.fields()[0].values() == c.fields()[0].values() {
        return fail("different seeds produced identical first draws".into());
    }
    let mut s1 = draw_stream(5, 0);
    let mut s2 = draw_stream(5, 1);
    if s1.random::<u64>() == s2.random::<u64>() {
        return fail("adjacent draw streams agree on their first word".into());
    }
    Ok(())
}

fn guards_trip() -> Result<(), String> {
    if PrimeConfig::new(4, 1, 1).is_ok() {
        return fail("composite p accepted".into());
    }
    let cfg = PrimeConfig::new(3, 1, 1).unwrap();
    if KernelSpec::new(1.0, 1.0, &cfg).is_ok() {
        return fail("kernel with delta <= N accepted".into());
    }
    let lat = lattice(3, 1, 1);
    let fm = FreeMeasureSpec::new(&lat, doc_model(lat.cfg())).map_err(|e| e.to_string())?;
    match sample_free(&fm, 1, u64::MAX / 2, ExecMode::Sequential) {
        Err(pfield_core::Error::TooLarge { .. }) => {}
        other => return fail(format!("oversized batch: {other:?}")),
    }
    let big = lattice(5, 1, 2);
    let fm_big =
        FreeMeasureSpec::new(&big, doc_model(big.cfg())).map_err(|e| e.to_string())?;
    let spec = InteractionSpec::phi4(0.1).map_err(|e| e.to_string())?;
    match perturbative_z(&fm_big, &spec, 1, ExecMode::Sequential) {
        Err(pfield_core::Error::TooLarge { .. }) => {}
        other => return fail(format!("perturbative loop on 625 sites: {other:?}")),
    }
    match wick_pairings(14) {
        Err(pfield_core::Error::TooLarge { .. }) => {}
        other => return fail(format!("14-point pairing request: {other:?}")),
    }
    Ok(())
}

const CHECKS: &[Check] = &[
    ("energy_routes_agree", energy_routes_agree),
    ("operator_bridge", operator_bridge),
    ("covariance_doc_value", covariance_doc_value),
    ("sampler_moments", sampler_moments),
    ("wick_isserlis", wick_isserlis),
    ("partition_free_unity", partition_free_unity),
    ("perturbative_anchor", perturbative_anchor),
    ("derivative_check_agrees", derivative_check_agrees),
    ("source_solve_stationary", source_solve_stationary),
    ("landau_minimize", landau_minimize),
    ("symmetry_exactness", symmetry_exactness),
    ("rotated_unit_free", rotated_unit_free),
    ("rng_reproducibility", rng_reproducibility),
    ("guards_trip", guards_trip),
];

/// Runs every check; prints live progress in human mode.
pub fn run(quiet: bool) -> Result<Completed, CliError> {
    let mut results = Vec::new();
    let mut passed = 0usize;
    for (name, check) in CHECKS {
        let started = std::time::Instant::now();
        let outcome = check();
        let millis = started.elapsed().as_millis() as u64;
        match &outcome {
            Ok(()) => {
                passed += 1;
                if !quiet {
                    println!("ok   {name} ({millis} ms)");
                }
            }
            Err(msg) => {
                if !quiet {
                    println!("FAIL {name}: {msg}");
                }
            }
        }
        results.push(json!({
            "name": name,
            "ok": outcome.is_ok(),
            "detail": outcome.err(),
            "ms": millis,
        }));
    }
    let total = CHECKS.len();
    if !quiet {
        println!("selftest: {passed}/{total} passed");
    }
    // the human mode already printed per-check lines; keep its trailing
    // summary short
    let summary = if quiet {
        json!({ "passed": passed, "total": total, "checks": results })
    } else {
        json!({ "passed": passed, "total": total })
    };
    let mut done = Completed::new(summary);
    if passed < total {
        done.soft_error = Some(format!("selftest: {} check(s) failed", total - passed));
    }
    Ok(done)
}
