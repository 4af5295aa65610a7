//! Interacting theories over the free measure: polynomial interaction
//! energies, Monte Carlo partition and generating functionals, correlation
//! estimators, the exact perturbative expansion in the quartic coupling, and
//! an exploratory oscillatory (Wick-rotated) estimator.
//!
//! The interaction coupling lives in [`InteractionSpec`]; the free measure
//! that supplies draws only ever uses the quadratic couplings. All estimators
//! consume draws through the per-index streams of [`crate::gibbs`], so two
//! estimators called with the same seed see the same fields (common random
//! numbers), which is what makes ratio and difference estimates tight.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::gibbs::{
    assemble_field, draw_modes, exact_covariance, gaussian_moment, pairing_variance,
    CovarianceOracle, FreeMeasureSpec, MAX_MOMENT_ORDER,
};
use crate::lattice::{energy_free_coord, FieldVec, Lattice};
use crate::stats::{batch_means, batch_stats, BATCHES};

/// Cost guard for the exact perturbative sums.
pub const MAX_PERTURBATIVE_ORDER: u64 = 2;
/// The exact perturbative sums iterate over `#G^M` interaction vertices.
pub const MAX_PERTURBATIVE_POINTS: u64 = 100;

const MIN_DRAWS: u64 = BATCHES as u64;

/// A nonnegative interaction polynomial `P(X) = a_3 X^3 + ... + a_{2D} X^{2D}`
/// together with the quartic coupling; the interaction energy of a field is
/// `(alpha4 / 4) p^{-lN} sum_i P(phi(i))`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionSpec {
    alpha4: f64,
    /// `coefficients[k]` is `a_{k+3}`; the length is `2D - 2` for degree `2D`.
    coefficients: Vec<f64>,
}

impl InteractionSpec {
    /// Validates the coupling and checks `P >= 0` numerically: the leading
    /// coefficient must be positive and the minimum of `P` over the Cauchy
    /// root bracket must not be visibly negative.
    pub fn new(alpha4: f64, coefficients: Vec<f64>) -> Result<Self> {
        if !alpha4.is_finite() || alpha4 < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "quartic coupling must be finite and non-negative, got {alpha4}"
            )));
        }
        if coefficients.len() < 2 || coefficients.len() % 2 != 0 {
            return Err(Error::InvalidSpec(
                "polynomial must run from X^3 to an even degree 2D >= 4".into(),
            ));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSpec("polynomial has non-finite coefficients".into()));
        }
        let lead = *coefficients.last().expect("checked non-empty");
        if lead <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "leading coefficient must be positive for P >= 0, got {lead}"
            )));
        }
        let spec = Self {
            alpha4,
            coefficients,
        };
        let (x_min, p_min) = spec.numeric_minimum();
        if p_min < -1e-9 * spec.coefficient_scale() {
            return Err(Error::InvalidSpec(format!(
                "polynomial dips to {p_min} near {x_min}; the interaction must be non-negative"
            )));
        }
        Ok(spec)
    }

    /// The pure quartic theory `P(X) = X^4`.
    pub fn phi4(alpha4: f64) -> Result<Self> {
        Self::new(alpha4, vec![0.0, 1.0])
    }

    pub fn alpha4(&self) -> f64 {
        self.alpha4
    }

    /// Coefficients `a_3, ..., a_{2D}` in degree order.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() + 2
    }

    /// True for exactly `P(X) = X^4`, the case covered by the perturbative
    /// expansion.
    pub fn is_pure_quartic(&self) -> bool {
        self.coefficients.len() == 2 && self.coefficients[0] == 0.0 && self.coefficients[1] == 1.0
    }

    /// `P(x)` by Horner evaluation of `x^3 (a_3 + x(a_4 + ...))`.
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &a in self.coefficients.iter().rev() {
            acc = acc * x + a;
        }
        acc * x * x * x
    }

    fn coefficient_scale(&self) -> f64 {
        self.coefficients
            .iter()
            .fold(1.0f64, |m, c| m.max(c.abs()))
    }

    /// Grid minimum of `P` over the Cauchy bracket `|x| <= R`, refined by
    /// golden-section search in the best cell.
    fn numeric_minimum(&self) -> (f64, f64) {
        let lead = *self.coefficients.last().expect("non-empty");
        let others: f64 = self.coefficients[..self.coefficients.len() - 1]
            .iter()
            .map(|c| c.abs())
            .sum();
        let radius = 1.0 + others / lead;
        let grid = 4000usize;
        let step = 2.0 * radius / grid as f64;
        let mut best = (0.0, 0.0); // P(0) = 0 always
        for i in 0..=grid {
            let x = -radius + step * i as f64;
            let v = self.eval(x);
            if v < best.1 {
                best = (x, v);
            }
        }
        // golden-section refinement in the bracket around the best sample
        let (mut lo, mut hi) = (best.0 - step, best.0 + step);
        let inv_phi = 0.618_033_988_749_894_9_f64;
        let mut c = hi - inv_phi * (hi - lo);
        let mut d = lo + inv_phi * (hi - lo);
        let (mut fc, mut fd) = (self.eval(c), self.eval(d));
        for _ in 0..80 {
            if fc < fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - inv_phi * (hi - lo);
                fc = self.eval(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + inv_phi * (hi - lo);
                fd = self.eval(d);
            }
        }
        let x = 0.5 * (lo + hi);
        let v = self.eval(x);
        if v < best.1 {
            (x, v)
        } else {
            best
        }
    }
}

/// A mean-zero external current.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceField {
    field: FieldVec,
}

impl SourceField {
    pub fn new(field: FieldVec) -> Result<Self> {
        if !field.is_lizorkin() {
            return Err(Error::NotLizorkin {
                sum: field.coefficient_sum(),
            });
        }
        Ok(Self { field })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            field: FieldVec::zeros(n),
        }
    }

    pub fn field(&self) -> &FieldVec {
        &self.field
    }
}

/// A real Monte Carlo estimate with its batch-mean standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorResult {
    pub value: f64,
    pub stderr: f64,
    pub draws: u64,
    pub seed: u64,
    pub batches: usize,
}

/// A complex ratio estimate; `sign_problem` is raised when the denominator
/// is statistically indistinguishable from zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEstimatorResult {
    pub value: Complex64,
    pub stderr: f64,
    pub numerator: Complex64,
    pub numerator_stderr: f64,
    pub denominator: Complex64,
    pub denominator_stderr: f64,
    pub draws: u64,
    pub seed: u64,
    pub batches: usize,
    pub sign_problem: bool,
}

/// Interaction energy `(alpha4 / 4) p^{-lN} sum_i P(phi(i))`; non-negative
/// by the polynomial constraint.
pub fn e_int(f: &FieldVec, spec: &InteractionSpec, lat: &Lattice) -> f64 {
    let sum: f64 = f.values().iter().map(|&x| spec.eval(x)).sum();
    spec.alpha4() / 4.0 * lat.cfg().cell_volume() * sum
}

fn check_draw_count(n: u64) -> Result<()> {
    if n < MIN_DRAWS {
        return Err(Error::InvalidSpec(format!(
            "need at least {MIN_DRAWS} draws for a batched standard error"
        )));
    }
    Ok(())
}

/// Boltzmann weight of one draw, with the hard bound `exp(-E_int) <= 1`.
fn boltzmann(field: &FieldVec, spec: &InteractionSpec, lat: &Lattice) -> f64 {
    let e = e_int(field, spec, lat);
    let w = (-e).exp();
    assert!(
        w.is_finite() && w <= 1.0 + 1e-9,
        "interaction weight {w} escaped the unit bound"
    );
    w
}

/// Monte Carlo partition estimate `E[exp(-E_int)]`; always in `(0, 1]`.
pub fn partition_interacting(
    fm: &FreeMeasureSpec,
    spec: &InteractionSpec,
    seed: u64,
    n: u64,
    mode: ExecMode,
) -> Result<EstimatorResult> {
    check_draw_count(n)?;
    let lat = fm.lattice();
    let weights = map_indexed(mode, n as usize, |i| {
        let field = assemble_field(fm, &draw_modes(fm, seed, i as u64));
        boltzmann(&field, spec, lat)
    });
    let s = batch_stats(&weights);
    Ok(EstimatorResult {
        value: s.mean,
        stderr: s.stderr,
        draws: n,
        seed,
        batches: s.batches,
    })
}

/// Unbiased estimate of the partition remainder beyond perturbative order
/// `M`: the per-draw integrand is `exp(-E) - sum_{k<=M} (-E)^k / k!`, whose
/// mean is exactly `Z - perturbative_Z(M)` for the quartic theory. Sharing a
/// seed across couplings turns the estimate into a smooth function of
/// `alpha4`, which is what makes scaling fits meaningful.
pub fn partition_residual(
    fm: &FreeMeasureSpec,
    spec: &InteractionSpec,
    order: u64,
    seed: u64,
    n: u64,
    mode: ExecMode,
) -> Result<EstimatorResult> {
    check_draw_count(n)?;
    if order > MAX_PERTURBATIVE_ORDER {
        return Err(Error::TooLarge {
            what: "perturbative order".into(),
            requested: order,
            cap: MAX_PERTURBATIVE_ORDER,
        });
    }
    let lat = fm.lattice();
    let remainders = map_indexed(mode, n as usize, |i| {
        let field = assemble_field(fm, &draw_modes(fm, seed, i as u64));
        let e = e_int(&field, spec, lat);
        let mut taylor = 0.0;
        let mut term = 1.0;
        for k in 0..=order {
            if k > 0 {
                term *= -e / k as f64;
            }
            taylor += term;
        }
        (-e).exp() - taylor
    });
    let s = batch_stats(&remainders);
    Ok(EstimatorResult {
        value: s.mean,
        stderr: s.stderr,
        draws: n,
        seed,
        batches: s.batches,
    })
}

/// Monte Carlo generating functional `E[exp(-E_int + <phi, J>)]`.
pub fn generating_functional(
    j: &SourceField,
    fm: &FreeMeasureSpec,
    spec: &InteractionSpec,
    seed: u64,
    n: u64,
    mode: ExecMode,
) -> Result<EstimatorResult> {
    check_draw_count(n)?;
    let lat = fm.lattice();
    if j.field().values().len() != lat.len() {
        return Err(Error::InvalidSpec("source length does not match lattice".into()));
    }
    let values = map_indexed(mode, n as usize, |i| {
        let field = assemble_field(fm, &draw_modes(fm, seed, i as u64));
        let w = boltzmann(&field, spec, lat);
        w * lat.pairing(&field, j.field()).exp()
    });
    let s = batch_stats(&values);
    Ok(EstimatorResult {
        value: s.mean,
        stderr: s.stderr,
        draws: n,
        seed,
        batches: s.batches,
    })
}

/// Ratio statistics from shared draws: the estimate is the ratio of the
/// overall means, the stderr is the scatter of per-batch ratios.
fn ratio_stats(num: &[f64], den: &[f64]) -> (f64, f64, usize) {
    let num_means = batch_means(num);
    let den_means = batch_means(den);
    let value = num.iter().sum::<f64>() / den.iter().sum::<f64>();
    let b = num_means.len();
    let var = num_means
        .iter()
        .zip(&den_means)
        .map(|(nb, db)| {
            let r = nb / db;
            (r - value) * (r - value)
        })
        .sum::<f64>()
        / (b as f64 - 1.0);
    (value, (var / b as f64).sqrt(), b)
}

/// Interacting correlation `E[prod phi(x_i) e^{-E_int}] / E[e^{-E_int}]`
/// with numerator and denominator over the same draws.
pub fn correlation(
    points: &[usize],
    fm: &FreeMeasureSpec,
    spec: &InteractionSpec,
    seed: u64,
    n: u64,
    mode: ExecMode,
) -> Result<EstimatorResult> {
    check_draw_count(n)?;
    let lat = fm.lattice();
    for &x in points {
        if x >= lat.len() {
            return Err(Error::InvalidSpec(format!(
                "point index {x} outside lattice of {} points",
                lat.len()
            )));
        }
    }
    let pairs = map_indexed(mode, n as usize, |i| {
        let field = assemble_field(fm, &draw_modes(fm, seed, i as u64));
        let w = boltzmann(&field, spec, lat);
        let prod: f64 = points.iter().map(|&x| field.values()[x]).product();
        (prod * w, w)
    });
    let num: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let den: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (value, stderr, batches) = ratio_stats(&num, &den);
    Ok(EstimatorResult {
        value,
        stderr,
        draws: n,
        seed,
        batches,
    })
}

fn require_quartic(spec: &InteractionSpec) -> Result<()> {
    if !spec.is_pure_quartic() {
        return Err(Error::InvalidSpec(
            "the exact perturbative expansion is implemented for the pure quartic interaction".into(),
        ));
    }
    Ok(())
}

fn perturbative_guards(fm: &FreeMeasureSpec, spec: &InteractionSpec, order: u64) -> Result<()> {
    require_quartic(spec)?;
    if order > MAX_PERTURBATIVE_ORDER {
        return Err(Error::TooLarge {
            what: "perturbative order".into(),
            requested: order,
            cap: MAX_PERTURBATIVE_ORDER,
        });
    }
    let points = fm.lattice().len() as u64;
    if order > 0 && points > MAX_PERTURBATIVE_POINTS {
        return Err(Error::TooLarge {
            what: "lattice size for exact perturbative sums".into(),
            requested: points,
            cap: MAX_PERTURBATIVE_POINTS,
        });
    }
    Ok(())
}

/// Exact interaction-vertex sum: `sum` over `m` vertex positions of the
/// Gaussian moment with four field factors per vertex appended to `fixed`.
fn vertex_sum(
    cov: &CovarianceOracle,
    lat: &Lattice,
    fixed: &[usize],
    m: u64,
    mode: ExecMode,
) -> Result<f64> {
    let order = fixed.len() as u64 + 4 * m;
    if order > MAX_MOMENT_ORDER {
        return Err(Error::TooLarge {
            what: "Gaussian moment order in a perturbative term".into(),
            requested: order,
            cap: MAX_MOMENT_ORDER,
        });
    }
    let n = lat.len();
    match m {
        0 => gaussian_moment(cov, fixed),
        1 => {
            let terms = map_indexed(mode, n, |z| {
                let mut pts = Vec::with_capacity(fixed.len() + 4);
                pts.extend_from_slice(fixed);
                pts.extend_from_slice(&[z, z, z, z]);
                gaussian_moment(cov, &pts).expect("order checked above")
            });
            Ok(terms.iter().sum())
        }
        2 => {
            let terms = map_indexed(mode, n, |z1| {
                let mut acc = 0.0;
                for z2 in 0..n {
                    let mut pts = Vec::with_capacity(fixed.len() + 8);
                    pts.extend_from_slice(fixed);
                    pts.extend_from_slice(&[z1, z1, z1, z1, z2, z2, z2, z2]);
                    acc += gaussian_moment(cov, &pts).expect("order checked above");
                }
                acc
            });
            Ok(terms.iter().sum())
        }
        _ => unreachable!("order capped at {MAX_PERTURBATIVE_ORDER}"),
    }
}

/// Exact perturbative partition value `1 + sum_{m<=M} Z_m` for the quartic
/// theory, where `Z_m = (1/m!) (-alpha4/4)^m p^{-lNm} sum_{z_1..z_m}
/// E[prod_j phi(z_j)^4]` is an Isserlis sum.
pub fn perturbative_z(
    fm: &FreeMeasureSpec,
    spec: &InteractionSpec,
    order: u64,
    mode: ExecMode,
) -> Result<f64> {
    perturbative_guards(fm, spec, order)?;
    let lat = fm.lattice();
    let cov = exact_covariance(fm);
    let cv = lat.cfg().cell_volume();
    let mut z = 1.0;
    let mut factorial = 1.0;
    for m in 1..=order {
        factorial *= m as f64;
        let coupling = (-spec.alpha4() / 4.0 * cv).powi(m as i32);
        z += coupling / factorial * vertex_sum(&cov, lat, &[], m, mode)?;
    }
    Ok(z)
}

/// Exact perturbative correlation through order `M`, normalized by
/// `perturbative_z` at the same order.
pub fn perturbative_correlation(
    points: &[usize],
    fm: &FreeMeasureSpec,
    spec: &InteractionSpec,
    order: u64,
    mode: ExecMode,
) -> Result<f64> {
    perturbative_guards(fm, spec, order)?;
    let lat = fm.lattice();
    for &x in points {
        if x >= lat.len() {
            return Err(Error::InvalidSpec(format!(
                "point index {x} outside lattice of {} points",
                lat.len()
            )));
        }
    }
    let needed = points.len() as u64 + 4 * order;
    if needed > MAX_MOMENT_ORDER {
        return Err(Error::TooLarge {
            what: "perturbative correlation order (points + 4 * order)".into(),
            requested: needed,
            cap: MAX_MOMENT_ORDER,
        });
    }
    let cov = exact_covariance(fm);
    let cv = lat.cfg().cell_volume();
    let mut numerator = 0.0;
    let mut factorial = 1.0;
    for m in 0..=order {
        if m > 0 {
            factorial *= m as f64;
        }
        let coupling = (-spec.alpha4() / 4.0 * cv).powi(m as i32);
        numerator += coupling / factorial * vertex_sum(&cov, lat, points, m, mode)?;
    }
    Ok(numerator / perturbative_z(fm, spec, order, mode)?)
}

/// Report of a functional-derivative cross-check: central finite differences
/// of the generating functional against the direct insertion estimator, on
/// common random numbers.
#[derive(Debug, Clone)]
pub struct DerivativeCheck {
    pub order: usize,
    /// `(epsilon, finite-difference estimate)` for each step size tried.
    pub fd_by_epsilon: Vec<(f64, f64)>,
    /// Richardson extrapolation from the two smallest step sizes.
    pub fd_value: f64,
    /// Direct estimate of `E[prod <phi, theta_i> exp(-E_int + <phi, J>)]`.
    pub direct: f64,
    pub direct_stderr: f64,
    /// Batched difference `fd - direct`; near zero because both sides share
    /// draws.
    pub difference: f64,
    pub difference_stderr: f64,
    pub agrees: bool,
}

/// Compares `d^k/deps_1..deps_k` of the generating functional against the
/// direct insertion estimator for `k <= 2` directions.
pub fn functional_derivative_check(
    j: &SourceField,
    directions: &[FieldVec],
    fm: &FreeMeasureSpec,
    spec: &InteractionSpec,
    seed: u64,
    n: u64,
    mode: ExecMode,
) -> Result<DerivativeCheck> {
    check_draw_count(n)?;
    let k = directions.len();
    if k == 0 || k > 2 {
        return Err(Error::TooLarge {
            what: "functional derivative order".into(),
            requested: k as u64,
            cap: 2,
        });
    }
    let lat = fm.lattice();
    for theta in directions {
        if theta.values().len() != lat.len() {
            return Err(Error::InvalidSpec("direction length does not match lattice".into()));
        }
        if !theta.is_lizorkin() {
            return Err(Error::NotLizorkin {
                sum: theta.coefficient_sum(),
            });
        }
    }
    let epsilons = [1e-2, 1e-3, 1e-4];

    // per draw: interaction weight, source pairing, direction pairings
    let rows = map_indexed(mode, n as usize, |i| {
        let field = assemble_field(fm, &draw_modes(fm, seed, i as u64));
        let w = boltzmann(&field, spec, lat);
        let tj = lat.pairing(&field, j.field());
        let t1 = lat.pairing(&field, &directions[0]);
        let t2 = if k == 2 {
            lat.pairing(&field, &directions[1])
        } else {
            0.0
        };
        (w, tj, t1, t2)
    });

    let fd_samples = |eps: f64| -> Vec<f64> {
        rows.iter()
            .map(|&(w, tj, t1, t2)| {
                let base = w * tj.exp();
                if k == 1 {
                    base * ((eps * t1).exp() - (-eps * t1).exp()) / (2.0 * eps)
                } else {
                    base * ((eps * (t1 + t2)).exp() - (eps * (t1 - t2)).exp()
                        - (eps * (-t1 + t2)).exp()
                        + (eps * (-t1 - t2)).exp())
                        / (4.0 * eps * eps)
                }
            })
            .collect()
    };
    let direct_samples: Vec<f64> = rows
        .iter()
        .map(|&(w, tj, t1, t2)| {
            let ins = if k == 1 { t1 } else { t1 * t2 };
            ins * w * tj.exp()
        })
        .collect();

    let fd_by_epsilon: Vec<(f64, f64)> = epsilons
        .iter()
        .map(|&e| (e, batch_stats(&fd_samples(e)).mean))
        .collect();

    // Richardson on the two smallest steps removes the O(eps^2) bias
    let (ea, eb) = (epsilons[1], epsilons[2]);
    let fa = fd_samples(ea);
    let fb = fd_samples(eb);
    let wa = ea * ea / (ea * ea - eb * eb);
    let wb = -eb * eb / (ea * ea - eb * eb);
    let diffs: Vec<f64> = fb
        .iter()
        .zip(&fa)
        .zip(&direct_samples)
        .map(|((b, a), d)| wa * b + wb * a - d)
        .collect();
    let fd_value = batch_stats(&fb).mean * wa + batch_stats(&fa).mean * wb;
    let direct = batch_stats(&direct_samples);
    let diff = batch_stats(&diffs);
    let scale = direct.mean.abs().max(1.0);
    let agrees = diff.mean.abs() <= (5.0 * diff.stderr).max(1e-10 * scale);
    Ok(DerivativeCheck {
        order: k,
        fd_by_epsilon,
        fd_value,
        direct: direct.mean,
        direct_stderr: direct.stderr,
        difference: diff.mean,
        difference_stderr: diff.stderr,
        agrees,
    })
}

/// Oscillatory estimator `E[e^{i(E_int - <phi,J>)}] / E[e^{i(E_0 + E_int)}]`
/// over shared draws; the free energy `E_0` is evaluated per draw from the
/// coordinate quadratic form. Cancellation in the denominator raises
/// `sign_problem` instead of aborting.
pub fn wick_rotated_z(
    j: &SourceField,
    fm: &FreeMeasureSpec,
    spec: &InteractionSpec,
    seed: u64,
    n: u64,
    mode: ExecMode,
) -> Result<ComplexEstimatorResult> {
    check_draw_count(n)?;
    let lat = fm.lattice();
    if j.field().values().len() != lat.len() {
        return Err(Error::InvalidSpec("source length does not match lattice".into()));
    }
    let params = fm.params();
    let pairs = map_indexed(mode, n as usize, |i| {
        let field = assemble_field(fm, &draw_modes(fm, seed, i as u64));
        let e = e_int(&field, spec, lat);
        let tj = lat.pairing(&field, j.field());
        let e0 = energy_free_coord(&field, lat, params, ExecMode::Sequential);
        let num_angle = e - tj;
        let den_angle = e0 + e;
        (
            Complex64::new(num_angle.cos(), num_angle.sin()),
            Complex64::new(den_angle.cos(), den_angle.sin()),
        )
    });
    let num: Vec<Complex64> = pairs.iter().map(|p| p.0).collect();
    let den: Vec<Complex64> = pairs.iter().map(|p| p.1).collect();
    let (num_mean, num_err, batches) = crate::stats::batch_stats_complex(&num);
    let (den_mean, den_err, _) = crate::stats::batch_stats_complex(&den);
    let value = num_mean / den_mean;
    // scatter of per-batch ratios around the global ratio
    let num_batches = complex_batch_means(&num);
    let den_batches = complex_batch_means(&den);
    let var: f64 = num_batches
        .iter()
        .zip(&den_batches)
        .map(|(nb, db)| (nb / db - value).norm_sqr())
        .sum::<f64>()
        / (batches as f64 - 1.0);
    let sign_problem = den_mean.norm() < 5.0 * den_err;
    Ok(ComplexEstimatorResult {
        value,
        stderr: (var / batches as f64).sqrt(),
        numerator: num_mean,
        numerator_stderr: num_err,
        denominator: den_mean,
        denominator_stderr: den_err,
        draws: n,
        seed,
        batches,
        sign_problem,
    })
}

fn complex_batch_means(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    let size = n / BATCHES;
    (0..BATCHES)
        .map(|b| {
            let lo = b * size;
            let hi = if b + 1 == BATCHES { n } else { lo + size };
            values[lo..hi].iter().sum::<Complex64>() / (hi - lo) as f64
        })
        .collect()
}

/// Free-theory closed form of the generating functional,
/// `exp(Var<phi,J>/2)`, used as an oracle by callers and tests.
pub fn free_generating_exact(j: &SourceField, fm: &FreeMeasureSpec, mode: ExecMode) -> Result<f64> {
    Ok((0.5 * pairing_variance(fm, j.field(), mode)?).exp())
}
