//! One function per subcommand. Each builds its tables in memory and
//! returns them with a machine-readable summary; the driver owns all file
//! I/O.

use pfield_core::exec::ExecMode;
use pfield_core::gibbs::{exact_covariance, gaussian_moment, sample_free, FreeMeasureSpec};
use pfield_core::interacting::{
    correlation, partition_interacting, partition_residual, perturbative_correlation,
    perturbative_z, wick_rotated_z, InteractionSpec, SourceField,
};
use pfield_core::landau::{
    constant_solution_residual, minimize, ssb_scan, GLParams, MinimizeConfig,
};
use pfield_core::lattice::{
    assemble_a, assemble_u, assemble_w, eigenvalues_ascending, momentum_diagonal, FieldVec,
    Lattice, OperatorMatrix,
};
use pfield_core::Error as CoreError;
use rand::prelude::*;
use rand_distr::StandardNormal;
use serde_json::json;

use crate::config::{RunConfig, DENSE_POINT_CAP, ESTIMATOR_POINT_CAP, LATTICE_POINT_CAP};
use crate::error::CliError;
use crate::report::{cell, csv_bytes, Completed, FilePlan};

/// Cap on CSV cells for the raw sample dump.
const SAMPLE_DUMP_CAP: u64 = 2_000_000;

fn capacity(what: &str, requested: u64, cap: u64) -> CliError {
    CliError::Core(CoreError::TooLarge {
        what: what.to_string(),
        requested,
        cap,
    })
}

fn file(cfg: &RunConfig, header: &[&str], rows: Vec<Vec<String>>) -> Result<FilePlan, CliError> {
    let bytes = csv_bytes(header, &rows)?;
    Ok(FilePlan {
        path: cfg.output.clone(),
        bytes,
        rows: rows.len() as u64,
    })
}

fn parse_points(raw: &str, lat: &Lattice) -> Result<Vec<usize>, CliError> {
    let mut issues = Vec::new();
    let mut out = Vec::new();
    for part in raw.split(',') {
        match part.trim().parse::<usize>() {
            Ok(i) if i < lat.len() => out.push(i),
            Ok(i) => issues.push(format!(
                "points: site {i} outside the lattice (0..{})",
                lat.len()
            )),
            Err(_) => issues.push(format!("points: '{part}' is not a site index")),
        }
    }
    if out.is_empty() {
        issues.push("points: at least one site required".into());
    }
    if issues.is_empty() {
        Ok(out)
    } else {
        Err(CliError::Config(issues))
    }
}

fn push_matrix(kind: &str, m: &OperatorMatrix, rows: &mut Vec<Vec<String>>) -> Result<(), CliError> {
    let mat = m.matrix();
    for i in 0..mat.nrows() {
        for j in 0..mat.ncols() {
            rows.push(vec![
                kind.to_string(),
                i.to_string(),
                j.to_string(),
                cell(mat[(i, j)])?,
            ]);
        }
    }
    Ok(())
}

/// `operator`: dense dumps of the kernel matrix A, the centered W, the
/// quadratic-form U, and the momentum-space diagonal.
pub fn operator(cfg: &RunConfig, mode: ExecMode) -> Result<Completed, CliError> {
    let lat = cfg.lattice(DENSE_POINT_CAP)?;
    let prime = cfg.prime()?;
    let kernel = cfg.kernel(&prime)?;
    let params = cfg.model_params(&prime)?;
    let a = assemble_a(&lat, &kernel, mode);
    let w = assemble_w(&lat, &kernel, mode);
    let u = assemble_u(&lat, &params, mode);
    let diag = momentum_diagonal(&lat, &params);
    let mut rows = Vec::new();
    push_matrix("a", &a, &mut rows)?;
    push_matrix("w", &w, &mut rows)?;
    push_matrix("u", &u, &mut rows)?;
    for (i, &v) in diag.iter().enumerate() {
        rows.push(vec!["momentum".into(), i.to_string(), i.to_string(), cell(v)?]);
    }
    let summary = json!({
        "sites": lat.len(),
        "symmetry_residual": u.symmetry_residual(),
        "momentum_zero_mode": diag[0],
    });
    let mut done = Completed::new(summary);
    done.files.push(file(cfg, &["kind", "i", "j", "value"], rows)?);
    Ok(done)
}

/// `spectrum`: eigenvalues of U in ascending order.
pub fn spectrum(cfg: &RunConfig, mode: ExecMode) -> Result<Completed, CliError> {
    let lat = cfg.lattice(DENSE_POINT_CAP)?;
    let prime = cfg.prime()?;
    let params = cfg.model_params(&prime)?;
    let u = assemble_u(&lat, &params, mode);
    let eigen = eigenvalues_ascending(&u);
    let mut rows = Vec::new();
    for (i, &v) in eigen.iter().enumerate() {
        rows.push(vec![i.to_string(), cell(v)?]);
    }
    let summary = json!({
        "sites": lat.len(),
        "smallest": eigen.first(),
        "largest": eigen.last(),
    });
    let mut done = Completed::new(summary);
    done.files.push(file(cfg, &["index", "eigenvalue"], rows)?);
    Ok(done)
}

/// `propagator`: the radial two-point profile of the free measure.
pub fn propagator(cfg: &RunConfig, _mode: ExecMode) -> Result<Completed, CliError> {
    let lat = cfg.lattice(LATTICE_POINT_CAP)?;
    let prime = cfg.prime()?;
    let params = cfg.model_params(&prime)?;
    let fm = FreeMeasureSpec::new(&lat, params)?;
    let oracle = exact_covariance(&fm);
    let mut rows = Vec::new();
    for (norm, value) in oracle.profile() {
        let (is_zero, exponent) = match norm.exponent() {
            None => (1, 0),
            Some(k) => (0, k),
        };
        rows.push(vec![is_zero.to_string(), exponent.to_string(), cell(value)?]);
    }
    let summary = json!({
        "sites": lat.len(),
        "zero_separation": oracle.radial(pfield_core::padic::ExactNorm::Zero),
        "shells": rows.len() - 1,
    });
    let mut done = Completed::new(summary);
    done.files
        .push(file(cfg, &["is_zero", "norm_exponent", "value"], rows)?);
    Ok(done)
}

/// `sample`: raw field draws from the free measure, one row per site.
pub fn sample(cfg: &RunConfig, mode: ExecMode) -> Result<Completed, CliError> {
    let lat = cfg.lattice(ESTIMATOR_POINT_CAP)?;
    let prime = cfg.prime()?;
    let params = cfg.model_params(&prime)?;
    let fm = FreeMeasureSpec::new(&lat, params)?;
    let cells = cfg.draws.saturating_mul(lat.len() as u64);
    if cells > SAMPLE_DUMP_CAP {
        return Err(capacity("sample csv cells", cells, SAMPLE_DUMP_CAP));
    }
    let batch = sample_free(&fm, cfg.seed, cfg.draws, mode)?;
    let mut rows = Vec::new();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for (draw, field) in batch.fields().iter().enumerate() {
        for (site, &v) in field.values().iter().enumerate() {
            rows.push(vec![draw.to_string(), site.to_string(), cell(v)?]);
            sum += v;
            sum_sq += v * v;
        }
    }
    let count = rows.len() as f64;
    let summary = json!({
        "sites": lat.len(),
        "draws": cfg.draws,
        "seed": cfg.seed,
        "mean": sum / count,
        "second_moment": sum_sq / count,
    });
    let mut done = Completed::new(summary);
    done.files.push(file(cfg, &["draw", "site", "value"], rows)?);
    Ok(done)
}

/// `correlate`: Monte Carlo n-point correlation, with the exact Gaussian
/// value alongside when the interaction vanishes and the moment is small
/// enough to enumerate.
pub fn correlate(cfg: &RunConfig, points: &str, mode: ExecMode) -> Result<Completed, CliError> {
    let lat = cfg.lattice(ESTIMATOR_POINT_CAP)?;
    let prime = cfg.prime()?;
    let params = cfg.model_params(&prime)?;
    let pts = parse_points(points, &lat)?;
    let fm = FreeMeasureSpec::new(&lat, params)?;
    let ispec = InteractionSpec::new(cfg.alpha4, cfg.coefficients.clone())?;
    let est = correlation(&pts, &fm, &ispec, cfg.seed, cfg.draws, mode)?;
    let mut rows = vec![vec![
        "mc".to_string(),
        cell(est.value)?,
        cell(est.stderr)?,
        est.draws.to_string(),
        est.seed.to_string(),
    ]];
    let mut exact = None;
    if cfg.alpha4 == 0.0 && pts.len() <= 12 {
        let oracle = exact_covariance(&fm);
        let value = gaussian_moment(&oracle, &pts)?;
        exact = Some(value);
        rows.push(vec![
            "exact_free".to_string(),
            cell(value)?,
            "0".to_string(),
            "0".to_string(),
            est.seed.to_string(),
        ]);
    }
    let summary = json!({
        "points": pts,
        "mc": est.value,
        "stderr": est.stderr,
        "exact_free": exact,
    });
    let mut done = Completed::new(summary);
    done.files.push(file(
        cfg,
        &["quantity", "value", "stderr", "draws", "seed"],
        rows,
    )?);
    Ok(done)
}

/// `partition`: importance-sampled partition function; `--rotated` adds the
/// oscillatory (Wick-rotated) ratio estimate.
pub fn partition(cfg: &RunConfig, rotated: bool, mode: ExecMode) -> Result<Completed, CliError> {
    let lat = cfg.lattice(ESTIMATOR_POINT_CAP)?;
    let prime = cfg.prime()?;
    let params = cfg.model_params(&prime)?;
    let fm = FreeMeasureSpec::new(&lat, params)?;
    let ispec = InteractionSpec::new(cfg.alpha4, cfg.coefficients.clone())?;
    let est = partition_interacting(&fm, &ispec, cfg.seed, cfg.draws, mode)?;
    let mut rows = vec![vec![
        "z_mc".to_string(),
        cell(est.value)?,
        cell(est.stderr)?,
        est.draws.to_string(),
        est.seed.to_string(),
    ]];
    let mut summary = json!({
        "z_mc": est.value,
        "stderr": est.stderr,
        "draws": est.draws,
        "seed": est.seed,
    });
    let mut soft_error = None;
    if rotated {
        let j = SourceField::zero(lat.len());
        let rot = wick_rotated_z(&j, &fm, &ispec, cfg.seed, cfg.draws, mode)?;
        let named = [
            ("rotated_re", rot.value.re, rot.stderr),
            ("rotated_im", rot.value.im, rot.stderr),
            ("numerator_re", rot.numerator.re, rot.numerator_stderr),
            ("numerator_im", rot.numerator.im, rot.numerator_stderr),
            ("denominator_re", rot.denominator.re, rot.denominator_stderr),
            ("denominator_im", rot.denominator.im, rot.denominator_stderr),
            ("sign_problem", f64::from(u8::from(rot.sign_problem)), 0.0),
        ];
        for (name, value, stderr) in named {
            rows.push(vec![
                name.to_string(),
                cell(value)?,
                cell(stderr)?,
                rot.draws.to_string(),
                rot.seed.to_string(),
            ]);
        }
        summary["rotated"] = json!({
            "re": rot.value.re,
            "im": rot.value.im,
            "stderr": rot.stderr,
            "sign_problem": rot.sign_problem,
        });
        if rot.sign_problem {
            soft_error = Some(
                "sign problem: rotated denominator is statistically indistinguishable from zero"
                    .to_string(),
            );
        }
    }
    let mut done = Completed::new(summary);
    done.soft_error = soft_error;
    done.files.push(file(
        cfg,
        &["quantity", "value", "stderr", "draws", "seed"],
        rows,
    )?);
    Ok(done)
}

/// `perturb`: exact Taylor coefficients of Z against the Monte Carlo
/// residual at each order, plus the perturbative correlation when points
/// are given.
pub fn perturb(
    cfg: &RunConfig,
    order: u64,
    points: Option<&str>,
    mode: ExecMode,
) -> Result<Completed, CliError> {
    let lat = cfg.lattice(ESTIMATOR_POINT_CAP)?;
    let prime = cfg.prime()?;
    let params = cfg.model_params(&prime)?;
    let fm = FreeMeasureSpec::new(&lat, params)?;
    let ispec = InteractionSpec::new(cfg.alpha4, cfg.coefficients.clone())?;
    let mut rows = Vec::new();
    let mut z_values = Vec::new();
    for m in 0..=order {
        let z = perturbative_z(&fm, &ispec, m, mode)?;
        z_values.push(z);
        rows.push(vec![
            "z_perturbative".to_string(),
            m.to_string(),
            cell(z)?,
            "0".to_string(),
            "0".to_string(),
            cfg.seed.to_string(),
        ]);
        let res = partition_residual(&fm, &ispec, m, cfg.seed, cfg.draws, mode)?;
        rows.push(vec![
            "residual".to_string(),
            m.to_string(),
            cell(res.value)?,
            cell(res.stderr)?,
            res.draws.to_string(),
            res.seed.to_string(),
        ]);
    }
    let mut summary = json!({
        "orders": order + 1,
        "z_perturbative": z_values,
    });
    if let Some(raw) = points {
        let pts = parse_points(raw, &lat)?;
        for m in 0..=order {
            let v = perturbative_correlation(&pts, &fm, &ispec, m, mode)?;
            rows.push(vec![
                "correlation_perturbative".to_string(),
                m.to_string(),
                cell(v)?,
                "0".to_string(),
                "0".to_string(),
                cfg.seed.to_string(),
            ]);
        }
        let est = correlation(&pts, &fm, &ispec, cfg.seed, cfg.draws, mode)?;
        rows.push(vec![
            "correlation_mc".to_string(),
            "0".to_string(),
            cell(est.value)?,
            cell(est.stderr)?,
            est.draws.to_string(),
            est.seed.to_string(),
        ]);
        summary["points"] = json!(pts);
        summary["correlation_mc"] = json!(est.value);
    }
    let mut done = Completed::new(summary);
    done.files.push(file(
        cfg,
        &["quantity", "order", "value", "stderr", "draws", "seed"],
        rows,
    )?);
    Ok(done)
}

fn gl_params(cfg: &RunConfig) -> Result<GLParams, CliError> {
    let prime = cfg.prime()?;
    let kernel = cfg.kernel(&prime)?;
    Ok(GLParams::new(cfg.t, cfg.tc, cfg.gamma, cfg.alpha4, kernel)?)
}

/// `minimize`: one gradient-descent run from a seeded noisy start; writes
/// the final field.
pub fn minimize_cmd(cfg: &RunConfig, mode: ExecMode) -> Result<Completed, CliError> {
    let lat = cfg.lattice(DENSE_POINT_CAP)?;
    let glp = gl_params(cfg)?;
    let mut rng = pfield_core::gibbs::draw_stream(cfg.seed, 0);
    let initial = FieldVec::new(
        (0..lat.len())
            .map(|_| cfg.noise * rng.sample::<f64, _>(StandardNormal))
            .collect(),
    )?;
    let mut mopts = MinimizeConfig::new(initial);
    if let Some(c) = cfg.constraint {
        mopts = mopts.with_integral_constraint(c);
    }
    let j = FieldVec::zeros(lat.len());
    let result = minimize(&j, &glp, &mopts, &lat, mode)?;
    let mut rows = Vec::new();
    for (site, &v) in result.field.values().iter().enumerate() {
        rows.push(vec![site.to_string(), cell(v)?]);
    }
    let mean = result.field.mean();
    let summary = json!({
        "energy": result.energy,
        "gradient_norm": result.gradient_norm,
        "iterations": result.iterations,
        "spread": result.spread,
        "converged": result.converged,
        "mean": mean,
        "constant_residual_at_mean": constant_solution_residual(mean, &glp, &lat),
    });
    let mut done = Completed::new(summary);
    if !result.converged {
        done.soft_error = Some(format!(
            "did not converge in {} iterations (gradient norm {:.3e})",
            result.iterations, result.gradient_norm
        ));
    }
    done.files.push(file(cfg, &["site", "value"], rows)?);
    Ok(done)
}

/// `sweep`: symmetry-breaking scan over the temperature grid.
pub fn sweep(cfg: &RunConfig, mode: ExecMode) -> Result<Completed, CliError> {
    let lat = cfg.lattice(DENSE_POINT_CAP)?;
    let glp = gl_params(cfg)?;
    let scan = ssb_scan(&cfg.grid, &glp, &lat, mode)?;
    let mut rows = Vec::new();
    let mut stuck = 0u64;
    for row in &scan {
        rows.push(vec![
            cell(row.temperature)?,
            cell(row.alpha2)?,
            cell(row.m_plus)?,
            cell(row.m_minus)?,
            cell(row.energy)?,
            row.iterations.to_string(),
            u8::from(row.converged).to_string(),
        ]);
        if !row.converged {
            stuck += 1;
        }
    }
    let summary = json!({
        "temperatures": scan.len(),
        "tc": cfg.tc,
        "not_converged": stuck,
    });
    let mut done = Completed::new(summary);
    if stuck > 0 {
        done.soft_error = Some(format!("{stuck} temperature(s) did not converge"));
    }
    done.files.push(file(
        cfg,
        &[
            "T",
            "alpha2",
            "m_plus",
            "m_minus",
            "energy",
            "iterations",
            "converged",
        ],
        rows,
    )?);
    Ok(done)
}
