//! Exact sampling of the free (Gaussian) field and its moment calculus.
//!
//! The free energy is diagonal in the character basis, so the measure
//! factorizes over conjugate mode pairs `{j, -j}`: with `B_j` the mode
//! coefficient of the quadratic form, the real and imaginary parts of the
//! transformed field on the positive half grid are independent centered
//! Gaussians of variance `p^{lN} / (4 B_j)`, and the zero mode is pinned to
//! zero. Sampling draws those coefficients directly and assembles the field
//! with the inverse transform, which makes every statistic computable both
//! in closed form and by Monte Carlo.
//!
//! Determinism: each draw index owns a dedicated counter-based RNG stream,
//! so a batch is reproducible bit for bit from `(seed, draw_index)` alone,
//! independent of thread count or execution mode.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::lattice::{dft, embed_field, mode_coefficient, FieldVec, Lattice, ModelParams};
use crate::padic::ExactNorm;
use crate::stats::{batch_stats, batch_stats_complex};

/// Identifier written into run manifests so outputs can be traced to the
/// exact sampling scheme.
pub const GENERATOR_ID: &str = "chacha12/per-draw/v1";

/// Largest supported order (number of field factors) for exact Gaussian
/// moments; `12` keeps the pairing count at `11!! = 10395`.
pub const MAX_MOMENT_ORDER: u64 = 12;

/// Cap on `draws * points` for materialized sample batches.
const MAX_BATCH_VALUES: u64 = 20_000_000;

/// Minimum draw count for any estimator that reports a standard error.
const MIN_DRAWS: u64 = crate::stats::BATCHES as u64;

/// Dedicated RNG stream for one draw: the 256-bit ChaCha key packs the run
/// seed, the draw index, and a domain tag, so distinct draws never share a
/// stream and batches can grow without reshuffling earlier draws.
pub fn draw_stream(seed: u64, draw_index: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&draw_index.to_le_bytes());
    key[16..24].copy_from_slice(b"pfldgibb");
    ChaCha12Rng::from_seed(key)
}

/// Free Gaussian measure on a lattice: positive quadratic couplings plus the
/// per-mode standard deviations derived from them.
#[derive(Debug, Clone)]
pub struct FreeMeasureSpec<'a> {
    lat: &'a Lattice,
    params: ModelParams,
    /// Quadratic mode coefficient `B_j` per lattice index (entry 0 unused:
    /// the zero mode is pinned).
    mode_b: Vec<f64>,
    /// Standard deviation per positive-half mode, aligned with
    /// `lat.plus_indices()`.
    sigma: Vec<f64>,
}

impl<'a> FreeMeasureSpec<'a> {
    /// Requires a strictly positive mass so every mode variance is finite.
    pub fn new(lat: &'a Lattice, params: ModelParams) -> Result<Self> {
        if params.alpha2() <= 0.0 {
            return Err(Error::InvalidSpec(
                "free measure needs alpha2 > 0; the zero mode is otherwise degenerate".into(),
            ));
        }
        let cfg = lat.cfg();
        let mode_b: Vec<f64> = (0..lat.len())
            .map(|i| {
                if i == 0 {
                    0.0
                } else {
                    mode_coefficient(
                        params.kernel(),
                        params.gamma(),
                        params.alpha2(),
                        lat.norm_of(i),
                        cfg,
                    )
                }
            })
            .collect();
        let scale = 1.0 / cfg.cell_volume();
        let sigma = lat
            .plus_indices()
            .iter()
            .map(|&q| (scale / (4.0 * mode_b[q])).sqrt())
            .collect();
        Ok(Self {
            lat,
            params,
            mode_b,
            sigma,
        })
    }

    pub fn lattice(&self) -> &'a Lattice {
        self.lat
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Number of independent complex modes (size of the positive half grid).
    pub fn mode_count(&self) -> usize {
        self.sigma.len()
    }

    /// Standard deviation of each real coefficient of positive-half mode `q`.
    pub fn mode_sigma(&self, q: usize) -> f64 {
        self.sigma[q]
    }

    /// Quadratic coefficient `B_j` for the lattice index `j` (zero for the
    /// pinned zero mode).
    pub fn mode_b(&self, index: usize) -> f64 {
        self.mode_b[index]
    }
}

/// Real mode coefficients of one draw: `x[q] + i y[q]` is the transformed
/// field at the `q`-th positive-half mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeDraw {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Draws the mode coefficients for one field configuration.
pub fn draw_modes(spec: &FreeMeasureSpec, seed: u64, draw_index: u64) -> ModeDraw {
    let mut rng = draw_stream(seed, draw_index);
    let m = spec.mode_count();
    let mut x = Vec::with_capacity(m);
    let mut y = Vec::with_capacity(m);
    for q in 0..m {
        let s = spec.sigma[q];
        x.push(s * rng.sample::<f64, _>(StandardNormal));
        y.push(s * rng.sample::<f64, _>(StandardNormal));
    }
    ModeDraw { x, y }
}

/// Inverse transform of a mode draw: since the field is real and the zero
/// mode vanishes, `phi(a) = 2 p^{-lN} sum_q [x_q cos(2 pi t_q(a)) + y_q
/// sin(2 pi t_q(a))]` over positive-half modes `q`.
pub fn assemble_field(spec: &FreeMeasureSpec, modes: &ModeDraw) -> FieldVec {
    let lat = spec.lat;
    let two_cv = 2.0 * lat.cfg().cell_volume();
    let plus = lat.plus_indices();
    let values: Vec<f64> = (0..lat.len())
        .map(|a| {
            let mut acc = 0.0;
            for (q, &j) in plus.iter().enumerate() {
                let root = lat.unit_root(lat.phase(j, a));
                acc += modes.x[q] * root.re + modes.y[q] * root.im;
            }
            two_cv * acc
        })
        .collect();
    FieldVec::from_raw(values)
}

/// A materialized batch of free-field draws.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    seed: u64,
    generator: &'static str,
    fields: Vec<FieldVec>,
}

impl SampleBatch {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn generator(&self) -> &'static str {
        self.generator
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn fields(&self) -> &[FieldVec] {
        &self.fields
    }
}

/// Draws `n` independent fields. Memory is bounded: use the streaming
/// estimators for large runs.
pub fn sample_free(spec: &FreeMeasureSpec, seed: u64, n: u64, mode: ExecMode) -> Result<SampleBatch> {
    let values = n.saturating_mul(spec.lat.len() as u64);
    if values > MAX_BATCH_VALUES {
        return Err(Error::TooLarge {
            what: "sample batch values (draws * points)".into(),
            requested: values,
            cap: MAX_BATCH_VALUES,
        });
    }
    let fields = map_indexed(mode, n as usize, |i| {
        assemble_field(spec, &draw_modes(spec, seed, i as u64))
    });
    Ok(SampleBatch {
        seed,
        generator: GENERATOR_ID,
        fields,
    })
}

/// Closed-form two-point function of the free measure, stored radially: the
/// covariance of `phi(a)` and `phi(b)` depends only on `|a - b|`.
#[derive(Debug, Clone)]
pub struct CovarianceOracle<'a> {
    lat: &'a Lattice,
    zero: f64,
    /// Value per norm exponent `k`, indexed by `k - (1 - l)`.
    shells: Vec<f64>,
}

impl<'a> CovarianceOracle<'a> {
    /// Covariance as a function of the separation norm.
    pub fn radial(&self, norm: ExactNorm) -> f64 {
        match norm {
            ExactNorm::Zero => self.zero,
            ExactNorm::Pow(k) => {
                let l = self.lat.cfg().level() as i64;
                self.shells[(k - (1 - l)) as usize]
            }
        }
    }

    /// Covariance of the field values at lattice indices `a` and `b`.
    pub fn value(&self, a: usize, b: usize) -> f64 {
        self.radial(self.lat.norm_between(a, b))
    }

    /// Dense covariance matrix (row/column order = lattice enumeration).
    pub fn dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.lat.len();
        nalgebra::DMatrix::from_fn(n, n, |a, b| self.value(a, b))
    }

    /// The profile as `(norm, value)` pairs, zero separation first.
    pub fn profile(&self) -> Vec<(ExactNorm, f64)> {
        let l = self.lat.cfg().level() as i64;
        let mut out = vec![(ExactNorm::Zero, self.zero)];
        for (i, &v) in self.shells.iter().enumerate() {
            out.push((ExactNorm::Pow(1 - l + i as i64), v));
        }
        out
    }
}

/// Exact covariance of the free field: for separation `d`,
/// `C(d) = p^{-lN} sum_{j != 0} cos(2 pi t_j(d)) / (2 B_j)`.
pub fn exact_covariance<'a>(spec: &FreeMeasureSpec<'a>) -> CovarianceOracle<'a> {
    let lat = spec.lat;
    let cfg = lat.cfg();
    let l = cfg.level() as i64;
    let cv = cfg.cell_volume();
    let radial_at = |d: usize| -> f64 {
        let mut acc = 0.0;
        for j in 1..lat.len() {
            let root = lat.unit_root(lat.phase(j, d));
            acc += root.re / (2.0 * spec.mode_b[j]);
        }
        cv * acc
    };
    // one representative separation per norm shell
    let shell_count = (2 * l) as usize;
    let mut reps: Vec<Option<usize>> = vec![None; shell_count];
    for i in 1..lat.len() {
        if let ExactNorm::Pow(k) = lat.norm_of(i) {
            let slot = (k - (1 - l)) as usize;
            if reps[slot].is_none() {
                reps[slot] = Some(i);
            }
        }
    }
    let shells = reps
        .into_iter()
        .map(|r| radial_at(r.expect("every norm shell is populated")))
        .collect();
    CovarianceOracle {
        lat,
        zero: radial_at(0),
        shells,
    }
}

/// Pairings `<phi, f>` for `n` draws, computed in mode space: the pairing of
/// a draw with `f` is `2 p^{-lN} sum_q [x_q Re fhat(j_q) + y_q Im fhat(j_q)]`.
/// The zero mode of `f` never couples because the field has none.
pub fn pairing_draws(
    spec: &FreeMeasureSpec,
    f: &FieldVec,
    seed: u64,
    n: u64,
    mode: ExecMode,
) -> Result<Vec<f64>> {
    let lat = spec.lat;
    if f.values().len() != lat.len() {
        return Err(Error::InvalidSpec("field length does not match lattice".into()));
    }
    let fhat = dft(f, lat, mode);
    let weights: Vec<(f64, f64)> = lat
        .plus_indices()
        .iter()
        .map(|&j| {
            let c = fhat.values()[j];
            (c.re, c.im)
        })
        .collect();
    let two_cv = 2.0 * lat.cfg().cell_volume();
    Ok(map_indexed(mode, n as usize, |i| {
        let m = draw_modes(spec, seed, i as u64);
        let mut acc = 0.0;
        for (q, &(re, im)) in weights.iter().enumerate() {
            acc += m.x[q] * re + m.y[q] * im;
        }
        two_cv * acc
    }))
}

/// Exact variance of `<phi, f>` for a mean-zero test function:
/// `p^{-lN} sum_{j != 0} |fhat(j)|^2 / (2 B_j)`.
pub fn pairing_variance(spec: &FreeMeasureSpec, f: &FieldVec, mode: ExecMode) -> Result<f64> {
    if !f.is_lizorkin() {
        return Err(Error::NotLizorkin {
            sum: f.coefficient_sum(),
        });
    }
    Ok(pairing_variance_any(spec, f, mode))
}

/// Same closed form without the mean-zero requirement; the zero mode of `f`
/// simply drops out.
pub(crate) fn pairing_variance_any(spec: &FreeMeasureSpec, f: &FieldVec, mode: ExecMode) -> f64 {
    let lat = spec.lat;
    let fhat = dft(f, lat, mode);
    let cv = lat.cfg().cell_volume();
    let mut acc = 0.0;
    for j in 1..lat.len() {
        acc += fhat.values()[j].norm_sqr() / (2.0 * spec.mode_b[j]);
    }
    cv * acc
}

/// Pairing variance of one test function under two nested discretizations.
/// The coarse function is embedded into the fine lattice (cell indicators
/// refine to sums of finer indicators), and both exact variances are
/// returned; they agree to rounding when the couplings match.
pub fn consistency_check(
    f: &FieldVec,
    coarse: &FreeMeasureSpec,
    fine: &FreeMeasureSpec,
    mode: ExecMode,
) -> Result<(f64, f64)> {
    let pc = coarse.lat.cfg();
    let pf = fine.lat.cfg();
    if pc.p() != pf.p() || pc.dim() != pf.dim() {
        return Err(Error::InvalidSpec(
            "consistency check needs matching prime and dimension".into(),
        ));
    }
    let (a, b) = (coarse.params(), fine.params());
    if a.gamma() != b.gamma()
        || a.alpha2() != b.alpha2()
        || a.kernel().delta() != b.kernel().delta()
        || a.kernel().scale() != b.kernel().scale()
    {
        return Err(Error::InvalidSpec(
            "consistency check needs identical couplings on both levels".into(),
        ));
    }
    if !f.is_lizorkin() {
        return Err(Error::NotLizorkin {
            sum: f.coefficient_sum(),
        });
    }
    let fine_f = embed_field(f, coarse.lat, fine.lat)?;
    let v_coarse = pairing_variance_any(coarse, f, mode);
    let v_fine = pairing_variance_any(fine, &fine_f, mode);
    Ok((v_coarse, v_fine))
}

/// Characteristic functional of the free measure at a mean-zero test
/// function, both in closed form and by Monte Carlo.
#[derive(Debug, Clone)]
pub struct CharacteristicFunctional {
    /// `exp(-Var<phi,f> / 2)`; the functional is real for a centered
    /// Gaussian.
    pub analytic: f64,
    /// Sample mean of `exp(i <phi, f>)`.
    pub empirical: Complex64,
    /// Batch-mean standard error of the empirical estimate.
    pub stderr: f64,
    pub draws: u64,
}

pub fn characteristic_functional(
    spec: &FreeMeasureSpec,
    f: &FieldVec,
    seed: u64,
    n: u64,
    mode: ExecMode,
) -> Result<CharacteristicFunctional> {
    if n < MIN_DRAWS {
        return Err(Error::InvalidSpec(format!(
            "need at least {MIN_DRAWS} draws for a batched standard error"
        )));
    }
    let variance = pairing_variance(spec, f, mode)?;
    let pairings = pairing_draws(spec, f, seed, n, mode)?;
    let phases: Vec<Complex64> = pairings
        .iter()
        .map(|&t| Complex64::new(t.cos(), t.sin()))
        .collect();
    let (empirical, stderr, _) = batch_stats_complex(&phases);
    Ok(CharacteristicFunctional {
        analytic: (-0.5 * variance).exp(),
        empirical,
        stderr,
        draws: n,
    })
}

/// All perfect matchings of `{0, .., two_n - 1}`, each as a sorted list of
/// pairs; there are `(two_n - 1)!!` of them. Capped at order 12.
pub fn wick_pairings(two_n: u64) -> Result<Vec<Vec<(usize, usize)>>> {
    if two_n % 2 != 0 {
        return Err(Error::InvalidSpec(format!(
            "pairings need an even number of factors, got {two_n}"
        )));
    }
    if two_n > MAX_MOMENT_ORDER {
        return Err(Error::TooLarge {
            what: "Gaussian moment order".into(),
            requested: two_n,
            cap: MAX_MOMENT_ORDER,
        });
    }
    let mut out = Vec::new();
    let mut used = vec![false; two_n as usize];
    let mut current = Vec::with_capacity(two_n as usize / 2);
    fn recurse(
        used: &mut Vec<bool>,
        current: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        let first = match used.iter().position(|&u| !u) {
            Some(i) => i,
            None => {
                out.push(current.clone());
                return;
            }
        };
        used[first] = true;
        for partner in first + 1..used.len() {
            if !used[partner] {
                used[partner] = true;
                current.push((first, partner));
                recurse(used, current, out);
                current.pop();
                used[partner] = false;
            }
        }
        used[first] = false;
    }
    recurse(&mut used, &mut current, &mut out);
    Ok(out)
}

/// Exact Gaussian moment `E[phi(x_1) ... phi(x_k)]` by summing covariance
/// products over all pairings. Odd moments vanish; repeated points are fine.
pub fn gaussian_moment(cov: &CovarianceOracle, points: &[usize]) -> Result<f64> {
    let k = points.len() as u64;
    if k % 2 != 0 {
        return Ok(0.0);
    }
    if k > MAX_MOMENT_ORDER {
        return Err(Error::TooLarge {
            what: "Gaussian moment order".into(),
            requested: k,
            cap: MAX_MOMENT_ORDER,
        });
    }
    if k == 0 {
        return Ok(1.0);
    }
    let pairings = wick_pairings(k)?;
    Ok(pairings
        .iter()
        .map(|m| {
            m.iter()
                .map(|&(a, b)| cov.value(points[a], points[b]))
                .product::<f64>()
        })
        .sum())
}

/// Monte Carlo estimate of the same moment; returns `(estimate, stderr)`.
pub fn mc_moment(
    spec: &FreeMeasureSpec,
    points: &[usize],
    seed: u64,
    n: u64,
    mode: ExecMode,
) -> Result<(f64, f64)> {
    if n < MIN_DRAWS {
        return Err(Error::InvalidSpec(format!(
            "need at least {MIN_DRAWS} draws for a batched standard error"
        )));
    }
    let lat = spec.lat;
    for &x in points {
        if x >= lat.len() {
            return Err(Error::InvalidSpec(format!(
                "point index {x} outside lattice of {} points",
                lat.len()
            )));
        }
    }
    let plus = lat.plus_indices();
    let two_cv = 2.0 * lat.cfg().cell_volume();
    let products = map_indexed(mode, n as usize, |i| {
        let m = draw_modes(spec, seed, i as u64);
        points
            .iter()
            .map(|&x| {
                let mut acc = 0.0;
                for (q, &j) in plus.iter().enumerate() {
                    let root = lat.unit_root(lat.phase(j, x));
                    acc += m.x[q] * root.re + m.y[q] * root.im;
                }
                two_cv * acc
            })
            .product::<f64>()
    });
    let s = batch_stats(&products);
    Ok((s.mean, s.stderr))
}
