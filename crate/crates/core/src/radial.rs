//! Closed-form radial calculus over `Q_p^N`.
//!
//! Every quantity here is an integral of a radial function against Haar
//! measure, so it reduces to a sum over spheres `S_k = {‖y‖ = p^k}` of
//! volume `p^{kN}(1 - p^{-N})`. For the built-in power kernel
//! `w(p^k) = c p^{k delta}` all shell series are geometric and are summed in
//! closed form; truncation appears only in the continuum propagator, where
//! it carries a rigorous geometric tail bound.
//!
//! Quantities provided:
//!  * the diagonal constant `d(l, w) = int_{‖y‖ > p^{-l}} dy / w(‖y‖)`,
//!  * the outer tail `tau_l = int_{‖y‖ > p^l} dy / w(‖y‖)`,
//!  * the symbol `A(‖kappa‖) = int (1 - chi_p(kappa.y)) / w(‖y‖) dy`,
//!  * the zero-mode mass `c_0 = int_{‖z‖ <= p^{-l}} (gamma/2 A(‖z‖) + alpha2/2) dz`,
//!  * the continuum propagator `G(x) = int chi_p(kappa.x) / (gamma/2 A(‖kappa‖) + alpha2/2) dkappa`.
//!
//! The per-shell character integral used throughout is
//! `int_{‖y‖ <= p^k} chi_p(kappa.y) dy = p^{kN}` if `‖kappa‖ <= p^{-k}`,
//! else `0`; spheres are ball differences.

use crate::error::{Error, Result};
use crate::padic::{ExactNorm, PrimeConfig};
use num_rational::Ratio;
use std::collections::BTreeMap;

/// Radial power kernel `w(r) = c r^delta` evaluated on shell radii `r = p^k`.
///
/// `delta > N` is required: it makes `1/w` integrable outside every ball and
/// the symbol comparable to `‖kappa‖^{delta-N}` from both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    delta: f64,
    scale: f64,
}

impl KernelSpec {
    pub fn new(delta: f64, scale: f64, cfg: &PrimeConfig) -> Result<Self> {
        if !delta.is_finite() || delta <= f64::from(cfg.dim()) {
            return Err(Error::InvalidSpec(format!(
                "kernel exponent delta = {delta} must exceed the dimension N = {}",
                cfg.dim()
            )));
        }
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "kernel scale must be positive, got {scale}"
            )));
        }
        Ok(Self { delta, scale })
    }

    /// Taibleson–Vladimirov normalization of order `beta > 0`: exponent
    /// `delta = beta + N` with the scale chosen so the symbol is exactly
    /// `‖kappa‖^beta`.
    pub fn taibleson(beta: f64, cfg: &PrimeConfig) -> Result<Self> {
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "Taibleson-Vladimirov order beta must be positive, got {beta}"
            )));
        }
        let n = f64::from(cfg.dim());
        let p = cfg.p() as f64;
        let scale = (1.0 - p.powf(-beta - n)) / (p.powf(beta) - 1.0);
        Self::new(beta + n, scale, cfg)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `w(p^k) = c p^{k delta}`.
    pub fn weight_exp(&self, k: i64, cfg: &PrimeConfig) -> f64 {
        self.scale * (cfg.p() as f64).powf(k as f64 * self.delta)
    }

    /// `w(r)` with `w(0) = 0` (the power-law limit; callers divide by the
    /// weight only at strictly positive radii).
    pub fn weight(&self, r: ExactNorm, cfg: &PrimeConfig) -> f64 {
        match r.exponent() {
            None => 0.0,
            Some(k) => self.weight_exp(k, cfg),
        }
    }
}

/// Exact volume of the sphere `S_k^N`, `p^{kN}(1 - p^{-N})`, as a rational.
///
/// Only intended for desk-scale `k`; panics if `p^{|k|N}` leaves `i128`.
pub fn shell_volume(k: i64, cfg: &PrimeConfig) -> Ratio<i128> {
    let pn = (cfg.p() as i128)
        .checked_pow(cfg.dim())
        .expect("p^N fits in i128");
    ball_volume(k, cfg) * Ratio::new(pn - 1, pn)
}

/// Exact volume of the ball `B_k^N`, `p^{kN}`, as a rational.
pub fn ball_volume(k: i64, cfg: &PrimeConfig) -> Ratio<i128> {
    let e = k * i64::from(cfg.dim());
    let pow = (cfg.p() as i128)
        .checked_pow(u32::try_from(e.unsigned_abs()).expect("exponent fits"))
        .expect("p^{kN} fits in i128");
    if e >= 0 {
        Ratio::from_integer(pow)
    } else {
        Ratio::new(1, pow)
    }
}

fn shell_volume_f64(k: i64, cfg: &PrimeConfig) -> f64 {
    let p = cfg.p() as f64;
    let n = f64::from(cfg.dim());
    p.powf(k as f64 * n) * (1.0 - p.powf(-n))
}

/// `d(l, w) = int_{Q_p^N \ B_{-l}^N} dy / w(‖y‖)`: the geometric series
/// over shells `k >= 1 - l`, in closed form.
pub fn d_const(l: i64, kernel: &KernelSpec, cfg: &PrimeConfig) -> f64 {
    inv_weight_tail(1 - l, kernel, cfg)
}

/// Outer tail `tau_l = int_{Q_p^N \ B_l^N} dy / w(‖y‖)`; the boundary term
/// that survives when the discrete operator acts on a constant field.
pub fn outer_tail(l: i64, kernel: &KernelSpec, cfg: &PrimeConfig) -> f64 {
    inv_weight_tail(l + 1, kernel, cfg)
}

/// `sum_{k >= k0} vol(S_k)/w(p^k) = (1-p^{-N})/c * p^{k0(N-delta)} / (1-p^{N-delta})`.
fn inv_weight_tail(k0: i64, kernel: &KernelSpec, cfg: &PrimeConfig) -> f64 {
    let p = cfg.p() as f64;
    let n = f64::from(cfg.dim());
    let gap = n - kernel.delta();
    debug_assert!(gap < 0.0, "delta > N guarantees convergence");
    (1.0 - p.powf(-n)) / kernel.scale() * p.powf(k0 as f64 * gap) / (1.0 - p.powf(gap))
}

/// Symbol `A(‖kappa‖)` of the nonlocal operator, evaluated exactly.
///
/// Shells with `p^k <= ‖kappa‖^{-1}` cancel; the shell at `p^k = p ‖kappa‖^{-1}`
/// contributes a full ball volume over the weight; everything above is the
/// geometric tail. The result collapses to a pure power law:
/// `A(p^m) = A(1) p^{m(delta - N)}`, and `A(0) = 0`.
pub fn symbol(kernel: &KernelSpec, norm_kappa: ExactNorm, cfg: &PrimeConfig) -> f64 {
    match norm_kappa.exponent() {
        None => 0.0,
        Some(m) => symbol_exp(kernel, m, cfg),
    }
}

/// `A(p^m)` by shell exponent.
pub fn symbol_exp(kernel: &KernelSpec, m: i64, cfg: &PrimeConfig) -> f64 {
    let p = cfg.p() as f64;
    let n = f64::from(cfg.dim());
    let gap = n - kernel.delta();
    let m = m as f64;
    // ball term at k = 1-m, plus the geometric tail of full shells from k = 2-m
    let ball = p.powf((1.0 - m) * gap);
    let tail = (1.0 - p.powf(-n)) * p.powf((2.0 - m) * gap) / (1.0 - p.powf(gap));
    (ball + tail) / kernel.scale()
}

/// Zero-mode mass `c_0 = int_{B_{-l}^N} (gamma/2 A(‖z‖) + alpha2/2) dz`,
/// the shell series over `k <= -l` in closed form.
pub fn mass_ball_integral(
    l: i64,
    kernel: &KernelSpec,
    gamma: f64,
    alpha2: f64,
    cfg: &PrimeConfig,
) -> f64 {
    debug_assert!(gamma > 0.0 && alpha2 >= 0.0);
    let p = cfg.p() as f64;
    let n = f64::from(cfg.dim());
    let delta = kernel.delta();
    let gap = n - delta;
    let ball = p.powf(-(l as f64) * n);
    // sum_{k <= -l} vol(S_k) A(p^k) factors through sum_{k <= -l} p^{k delta}
    let geom = p.powf(-(l as f64) * delta) / (1.0 - p.powf(-delta));
    let bracket = p.powf(gap) + (1.0 - p.powf(-n)) * p.powf(2.0 * gap) / (1.0 - p.powf(gap));
    let symbol_part = (1.0 - p.powf(-n)) / kernel.scale() * bracket * geom;
    alpha2 / 2.0 * ball + gamma / 2.0 * symbol_part
}

/// Truncation record for a shell sum: the shells actually accumulated and a
/// rigorous upper bound on everything discarded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellIndexRange {
    pub k_min: i64,
    pub k_max: i64,
    pub tail_bound: f64,
}

/// Continuum propagator `G(x)`, the radial inverse Fourier transform of
/// `1 / (gamma/2 A(‖kappa‖) + alpha2/2)`, evaluated at `‖x‖ = p^m` or `x = 0`.
///
/// For `x != 0` the character integrals leave a finite head plus a small-shell
/// correction series with ratio `p^{-delta}`; the constant part of the
/// integrand sums exactly to `(2/alpha2) p^{-mN}`. For `x = 0` the large-shell
/// side converges only when `delta > 2N`.
pub fn continuum_propagator(
    kernel: &KernelSpec,
    gamma: f64,
    alpha2: f64,
    x_norm: ExactNorm,
    cfg: &PrimeConfig,
) -> Result<f64> {
    continuum_propagator_detailed(kernel, gamma, alpha2, x_norm, cfg).map(|(g, _)| g)
}

/// As [`continuum_propagator`], also reporting the shell range and tail bound.
pub fn continuum_propagator_detailed(
    kernel: &KernelSpec,
    gamma: f64,
    alpha2: f64,
    x_norm: ExactNorm,
    cfg: &PrimeConfig,
) -> Result<(f64, ShellIndexRange)> {
    if !(gamma > 0.0) || !(alpha2 > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "propagator requires gamma > 0 and alpha2 > 0, got gamma = {gamma}, alpha2 = {alpha2}"
        )));
    }
    let p = cfg.p() as f64;
    let n = f64::from(cfg.dim());
    let delta = kernel.delta();
    let a1 = symbol_exp(kernel, 0, cfg);
    let g_of = |k: i64| 2.0 / (gamma * symbol_exp(kernel, k, cfg) + alpha2);

    match x_norm.exponent() {
        Some(m) => {
            // head: cancellation leaves -p^{-mN} g(p^{1-m}); constant part of the
            // small-shell series sums to (2/alpha2) p^{-mN} exactly
            let ball = p.powf(-(m as f64) * n);
            let mut acc = ball * (2.0 / alpha2 - g_of(1 - m));
            let range = accumulate_correction(&mut acc, -m, kernel, gamma, alpha2, cfg);
            Ok((acc, ShellIndexRange { k_max: 1 - m, ..range }))
        }
        None => {
            if delta <= 2.0 * n {
                return Err(Error::DivergentIntegral(format!(
                    "G(0) requires delta > 2N; got delta = {delta}, N = {n}: the \
                     large-shell series diverges"
                )));
            }
            // split at k = 0: ball B_0 carries the constant part exactly
            let mut acc = 2.0 / alpha2;
            let low = accumulate_correction(&mut acc, 0, kernel, gamma, alpha2, cfg);
            // large shells: g(p^k) <= 2/(gamma A(1)) p^{-k(delta-N)}, ratio p^{2N-delta}
            let ratio = p.powf(2.0 * n - delta);
            let coef = (1.0 - p.powf(-n)) * 2.0 / (gamma * a1);
            let mut k = 1i64;
            loop {
                let tail = coef * p.powf(k as f64 * (2.0 * n - delta)) / (1.0 - ratio);
                if tail <= 1e-15 * (1.0 + acc.abs()) {
                    let bound = tail + low.tail_bound;
                    return Ok((
                        acc,
                        ShellIndexRange {
                            k_min: low.k_min,
                            k_max: k - 1,
                            tail_bound: bound,
                        },
                    ));
                }
                if k - 1 > 200_000 {
                    return Err(Error::InvalidSpec(format!(
                        "propagator tail converges too slowly (delta - 2N = {})",
                        delta - 2.0 * n
                    )));
                }
                acc += shell_volume_f64(k, cfg) * g_of(k);
                k += 1;
            }
        }
    }
}

/// Adds `sum_{k <= k_start} vol(S_k)(g(p^k) - 2/alpha2)` to `acc`, descending
/// until the rigorous remainder bound drops below 1e-15 relative.
///
/// The integrand deviation obeys `|g - 2/alpha2| <= (2 gamma / alpha2^2) A`
/// (sharp for small shells, where `A -> 0`) and `|g - 2/alpha2| <= 2/alpha2`
/// (sharp for large shells); both envelopes sum to geometric series, and the
/// smaller of the two bounds the discarded remainder.
fn accumulate_correction(
    acc: &mut f64,
    k_start: i64,
    kernel: &KernelSpec,
    gamma: f64,
    alpha2: f64,
    cfg: &PrimeConfig,
) -> ShellIndexRange {
    let p = cfg.p() as f64;
    let n = f64::from(cfg.dim());
    let delta = kernel.delta();
    let a1 = symbol_exp(kernel, 0, cfg);
    let sym_coef = (1.0 - p.powf(-n)) * 2.0 * gamma * a1 / (alpha2 * alpha2) / (1.0 - p.powf(-delta));
    let remainder_below = |k: i64| -> f64 {
        let kd = k as f64;
        let sym = sym_coef * p.powf(kd * delta);
        let crude = 2.0 / alpha2 * p.powf(kd * n);
        sym.min(crude)
    };
    let mut k = k_start;
    loop {
        let g_k = 2.0 / (gamma * symbol_exp(kernel, k, cfg) + alpha2);
        *acc += shell_volume_f64(k, cfg) * (g_k - 2.0 / alpha2);
        let tail = remainder_below(k - 1);
        if tail <= 1e-15 * (1.0 + acc.abs()) || k_start - k > 4000 {
            return ShellIndexRange {
                k_min: k,
                k_max: k_start,
                tail_bound: tail,
            };
        }
        k -= 1;
    }
}

/// Radial weight defined by explicit shell values on a window plus power-law
/// tails outside it; the extension point for kernels that are not pure powers.
///
/// Inside `[k_lo, k_hi]` the weight is the tabulated value; outside, the
/// `tail` power law applies, so all closed-form tail series remain available.
#[derive(Debug, Clone)]
pub struct TabulatedKernel {
    table: BTreeMap<i64, f64>,
    tail: KernelSpec,
}

impl TabulatedKernel {
    pub fn new(table: BTreeMap<i64, f64>, tail: KernelSpec) -> Result<Self> {
        if table.values().any(|&w| !w.is_finite() || w <= 0.0) {
            return Err(Error::InvalidSpec(
                "tabulated kernel values must be positive and finite".into(),
            ));
        }
        Ok(Self { table, tail })
    }

    pub fn weight_exp(&self, k: i64, cfg: &PrimeConfig) -> f64 {
        self.table
            .get(&k)
            .copied()
            .unwrap_or_else(|| self.tail.weight_exp(k, cfg))
    }

    /// `d(l, w)`: finite sum across the tabulated window, closed-form tail above.
    pub fn d_const(&self, l: i64, cfg: &PrimeConfig) -> f64 {
        let k0 = 1 - l;
        let hi = self.table.keys().next_back().copied().unwrap_or(k0 - 1);
        let mut acc = 0.0;
        for k in k0..=hi {
            acc += shell_volume_f64(k, cfg) / self.weight_exp(k, cfg);
        }
        acc + inv_weight_tail(hi.max(k0 - 1) + 1, &self.tail, cfg)
    }

    /// `A(p^m)` with per-shell character integrals: ball term at `k = 1-m`,
    /// tabulated shells above, closed-form power tail beyond the window.
    pub fn symbol_exp(&self, m: i64, cfg: &PrimeConfig) -> f64 {
        let p = cfg.p() as f64;
        let n = f64::from(cfg.dim());
        let k_ball = 1 - m;
        let ball = p.powf(k_ball as f64 * n) / self.weight_exp(k_ball, cfg);
        let hi = self.table.keys().next_back().copied().unwrap_or(k_ball);
        let mut acc = ball;
        for k in (k_ball + 1)..=hi {
            acc += shell_volume_f64(k, cfg) / self.weight_exp(k, cfg);
        }
        acc + inv_weight_tail(hi.max(k_ball) + 1, &self.tail, cfg)
    }
}
