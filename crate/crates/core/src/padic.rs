//! Exact arithmetic on the hierarchical lattice `G_l = p^{-l}Z_p^N / p^l Z_p^N`.
//!
//! A point of `G_l` is represented per coordinate by the canonical digit
//! window `sum_{k=-l}^{l-1} x_k p^k`, encoded as a single integer
//! `u in [0, p^{2l})` whose semantic value is `u * p^{-l}`. Under this
//! encoding `G_l` is isomorphic to `(Z/p^{2l}Z)^N` and all group operations
//! are exact modular arithmetic.
//!
//! The p-adic order of a coordinate value `u * p^{-l}` with `u != 0` is
//! `v_p(u) - l`, its absolute value is `p^{-ord}`, and the norm of a point is
//! the coordinate maximum. Norms are kept as exact integer exponents; floats
//! only appear downstream when a norm enters a kernel evaluation.
//!
//! Additive characters `chi_p(y) = exp(2 pi i {y}_p)` are evaluated from the
//! exact integer phase of the pairing: for points `x`, `y` of `G_l` the
//! fractional part `{x . y}_p` equals `t / p^{2l}` with
//! `t = sum_c u_c w_c mod p^{2l}`, an integer. Working with `t` instead of a
//! floating-point fractional part makes every transform matrix bit-stable.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Default ceiling on `#G_l = p^{2lN}`; dense matrices are `#G_l^2`, so
/// larger lattices are outside the intended envelope.
pub const DEFAULT_MAX_POINTS: u64 = 1_000_000;

/// Prime, spatial dimension, and level of a lattice `G_l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeConfig {
    p: u64,
    n: u32,
    l: u32,
}

impl PrimeConfig {
    /// Validates `p` odd prime, `n >= 1`, `l >= 1`, and that the coordinate
    /// modulus `p^{2l}` stays within exact-integer range.
    pub fn new(p: u64, n: u32, l: u32) -> Result<Self> {
        if p < 3 || !is_prime(p) {
            return Err(Error::InvalidSpec(format!(
                "p must be an odd prime >= 3, got {p}"
            )));
        }
        if n < 1 {
            return Err(Error::InvalidSpec("dimension N must be >= 1".into()));
        }
        if l < 1 {
            return Err(Error::InvalidSpec("level l must be >= 1".into()));
        }
        // pairing sums need (p^{2l})^2 * N to fit in u128; 2^40 per factor is ample
        let bits = 2.0 * f64::from(l) * (p as f64).log2();
        if bits > 40.0 {
            return Err(Error::InvalidSpec(format!(
                "p^(2l) = {p}^{} exceeds the exact arithmetic range",
                2 * l
            )));
        }
        Ok(Self { p, n, l })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn dim(&self) -> u32 {
        self.n
    }

    pub fn level(&self) -> u32 {
        self.l
    }

    /// Coordinate modulus `p^{2l}`.
    pub fn modulus(&self) -> u64 {
        self.p.pow(2 * self.l)
    }

    /// Total point count `p^{2lN}` (may exceed any capacity guard).
    pub fn points_total(&self) -> u128 {
        (self.modulus() as u128).pow(self.n)
    }

    /// Haar weight of one lattice cell, `p^{-lN}`.
    pub fn cell_volume(&self) -> f64 {
        self.p_powi(-i64::from(self.l) * i64::from(self.n))
    }

    /// `p^k` as a float, for any integer exponent.
    pub fn p_powi(&self, k: i64) -> f64 {
        (self.p as f64).powi(k as i32)
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// A point of `G_l`: one representative integer `u_c in [0, p^{2l})` per
/// coordinate, lexicographically ordered by the coordinate tuple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridPoint {
    coords: Vec<u64>,
}

impl GridPoint {
    /// Builds a point after validating every coordinate against the window.
    pub fn new(coords: Vec<u64>, cfg: &PrimeConfig) -> Result<Self> {
        if coords.len() != cfg.dim() as usize {
            return Err(Error::InvalidSpec(format!(
                "expected {} coordinates, got {}",
                cfg.dim(),
                coords.len()
            )));
        }
        let m = cfg.modulus();
        if let Some(bad) = coords.iter().find(|&&u| u >= m) {
            return Err(Error::InvalidSpec(format!(
                "coordinate {bad} outside the representative window [0, {m})"
            )));
        }
        Ok(Self { coords })
    }

    pub fn zero(cfg: &PrimeConfig) -> Self {
        Self {
            coords: vec![0; cfg.dim() as usize],
        }
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&u| u == 0)
    }
}

/// An exact value of the form `p^k`, or exact zero. Ordered the way the
/// corresponding reals are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactNorm {
    Zero,
    Pow(i64),
}

impl ExactNorm {
    pub fn is_zero(self) -> bool {
        matches!(self, ExactNorm::Zero)
    }

    /// The exponent `k` of `p^k`, or `None` for zero.
    pub fn exponent(self) -> Option<i64> {
        match self {
            ExactNorm::Zero => None,
            ExactNorm::Pow(k) => Some(k),
        }
    }

    pub fn as_f64(self, cfg: &PrimeConfig) -> f64 {
        match self {
            ExactNorm::Zero => 0.0,
            ExactNorm::Pow(k) => cfg.p_powi(k),
        }
    }
}

impl PartialOrd for ExactNorm {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactNorm {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use ExactNorm::*;
        match (self, other) {
            (Zero, Zero) => std::cmp::Ordering::Equal,
            (Zero, Pow(_)) => std::cmp::Ordering::Less,
            (Pow(_), Zero) => std::cmp::Ordering::Greater,
            (Pow(a), Pow(b)) => a.cmp(b),
        }
    }
}

/// Order of the value `u * p^{-l}`: `v_p(u) - l` for `u != 0`, `None`
/// (plus infinity) for `u = 0`.
pub fn scalar_ord(u: u64, cfg: &PrimeConfig) -> Option<i64> {
    if u == 0 {
        return None;
    }
    debug_assert!(u < cfg.modulus());
    let mut v = 0i64;
    let mut rest = u;
    while rest % cfg.p() == 0 {
        rest /= cfg.p();
        v += 1;
    }
    Some(v - i64::from(cfg.level()))
}

/// Coordinate-max norm `||x||_p = max_c p^{-ord(x_c)}`.
pub fn point_norm(x: &GridPoint, cfg: &PrimeConfig) -> ExactNorm {
    let mut best: Option<i64> = None;
    for &u in x.coords() {
        if let Some(ord) = scalar_ord(u, cfg) {
            let e = -ord;
            best = Some(best.map_or(e, |b: i64| b.max(e)));
        }
    }
    match best {
        None => ExactNorm::Zero,
        Some(e) => ExactNorm::Pow(e),
    }
}

/// Group subtraction `x - y` in `G_l`, coordinate-wise mod `p^{2l}`.
pub fn sub_mod(x: &GridPoint, y: &GridPoint, cfg: &PrimeConfig) -> GridPoint {
    let m = cfg.modulus();
    GridPoint {
        coords: x
            .coords()
            .iter()
            .zip(y.coords())
            .map(|(&a, &b)| (a + m - b) % m)
            .collect(),
    }
}

/// Group addition `x + y` in `G_l`.
pub fn add_mod(x: &GridPoint, y: &GridPoint, cfg: &PrimeConfig) -> GridPoint {
    let m = cfg.modulus();
    GridPoint {
        coords: x
            .coords()
            .iter()
            .zip(y.coords())
            .map(|(&a, &b)| (a + b) % m)
            .collect(),
    }
}

/// Group negation `-x` in `G_l`.
pub fn negate(x: &GridPoint, cfg: &PrimeConfig) -> GridPoint {
    let m = cfg.modulus();
    GridPoint {
        coords: x.coords().iter().map(|&a| (m - a) % m).collect(),
    }
}

/// Integer phase `t` of the pairing: `{x . y}_p = t / p^{2l}` with
/// `t = sum_c u_c w_c mod p^{2l}`.
pub fn pairing_phase(x: &GridPoint, y: &GridPoint, cfg: &PrimeConfig) -> u64 {
    let m = cfg.modulus() as u128;
    let mut acc: u128 = 0;
    for (&a, &b) in x.coords().iter().zip(y.coords()) {
        acc = (acc + (a as u128) * (b as u128)) % m;
    }
    acc as u64
}

/// Fractional part of the pairing as the exact rational `t / p^{2l}`,
/// returned as `(t, p^{2l})`.
pub fn frac_part_pairing(x: &GridPoint, y: &GridPoint, cfg: &PrimeConfig) -> (u64, u64) {
    (pairing_phase(x, y, cfg), cfg.modulus())
}

/// Additive character `chi_p(x . y) = exp(2 pi i t / p^{2l})` from the exact
/// integer phase.
pub fn character(x: &GridPoint, y: &GridPoint, cfg: &PrimeConfig) -> Complex64 {
    let (t, m) = frac_part_pairing(x, y, cfg);
    unit_phase(t, m)
}

/// `exp(2 pi i t / m)` for an exact integer phase index.
pub fn unit_phase(t: u64, m: u64) -> Complex64 {
    let angle = std::f64::consts::TAU * (t as f64) / (m as f64);
    Complex64::new(angle.cos(), angle.sin())
}

/// All `p^{2lN}` points in lexicographic coordinate order; index 0 is zero.
pub fn enumerate_grid(cfg: &PrimeConfig) -> Result<Vec<GridPoint>> {
    enumerate_grid_capped(cfg, DEFAULT_MAX_POINTS)
}

/// As [`enumerate_grid`] with an explicit capacity guard.
pub fn enumerate_grid_capped(cfg: &PrimeConfig, max_points: u64) -> Result<Vec<GridPoint>> {
    let total = cfg.points_total();
    if total > u128::from(max_points) {
        return Err(Error::CapacityExceeded {
            points: total,
            max: max_points,
        });
    }
    let total = total as usize;
    let n = cfg.dim() as usize;
    let m = cfg.modulus();
    let mut points = Vec::with_capacity(total);
    let mut coords = vec![0u64; n];
    loop {
        points.push(GridPoint {
            coords: coords.clone(),
        });
        // lexicographic increment, least significant coordinate last
        let mut c = n;
        loop {
            if c == 0 {
                return Ok(points);
            }
            c -= 1;
            coords[c] += 1;
            if coords[c] < m {
                break;
            }
            coords[c] = 0;
        }
    }
}

/// Splits `G_l \ {0}` into `(G_plus, G_minus)` with `negate` mapping the
/// first onto the second. A nonzero point lands in `G_plus` iff its
/// coordinate tuple is lexicographically smaller than that of its negation;
/// no nonzero self-inverse exists for odd `p`.
pub fn split_plus_minus(cfg: &PrimeConfig) -> Result<(Vec<GridPoint>, Vec<GridPoint>)> {
    let pts = enumerate_grid(cfg)?;
    let mut plus = Vec::with_capacity((pts.len() - 1) / 2);
    let mut minus = Vec::with_capacity((pts.len() - 1) / 2);
    for pt in pts.into_iter().skip(1) {
        let neg = negate(&pt, cfg);
        debug_assert_ne!(pt, neg, "odd p admits no nonzero self-inverse");
        if pt < neg {
            plus.push(pt);
        } else {
            minus.push(pt);
        }
    }
    Ok((plus, minus))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(p: u64, n: u32, l: u32) -> PrimeConfig {
        PrimeConfig::new(p, n, l).unwrap()
    }

    fn pt(coords: &[u64], c: &PrimeConfig) -> GridPoint {
        GridPoint::new(coords.to_vec(), c).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(PrimeConfig::new(2, 1, 1).is_err());
        assert!(PrimeConfig::new(4, 1, 1).is_err());
        assert!(PrimeConfig::new(9, 1, 1).is_err());
        assert!(PrimeConfig::new(3, 0, 1).is_err());
        assert!(PrimeConfig::new(3, 1, 0).is_err());
        assert!(PrimeConfig::new(3, 1, 1).is_ok());
        assert!(PrimeConfig::new(5, 2, 2).is_ok());
    }

    #[test]
    fn scalar_ord_examples() {
        let c = cfg(3, 1, 1);
        assert_eq!(scalar_ord(0, &c), None);
        // value 2/3 has order -1
        assert_eq!(scalar_ord(2, &c), Some(-1));
        assert_eq!(scalar_ord(3, &c), Some(0));
        assert_eq!(scalar_ord(6, &c), Some(0));
        let c2 = cfg(3, 1, 2);
        // coordinate 27 at level 2 is the value 27/9 = 3, of order 1
        assert_eq!(scalar_ord(27, &c2), Some(1));
        assert_eq!(scalar_ord(9, &c2), Some(0));
        assert_eq!(scalar_ord(1, &c2), Some(-2));
    }

    #[test]
    fn ord_matches_repeated_division_oracle() {
        let c = cfg(5, 1, 2);
        for u in 1..c.modulus() {
            let mut v = 0i64;
            let mut r = u;
            while r % 5 == 0 {
                r /= 5;
                v += 1;
            }
            assert_eq!(scalar_ord(u, &c), Some(v - 2));
        }
    }

    #[test]
    fn point_norm_examples() {
        let c1 = cfg(3, 1, 1);
        assert_eq!(point_norm(&GridPoint::zero(&c1), &c1), ExactNorm::Zero);

        let c2 = cfg(3, 2, 1);
        // coords (3,1): |3|_3 = 1/3 scaled by p^-l -> |1|_3 = 1, |1/3|_3 = 3
        assert_eq!(point_norm(&pt(&[3, 1], &c2), &c2), ExactNorm::Pow(1));

        // every nonzero representative lands in {p^{1-l}, ..., p^l}
        for u in 1..c1.modulus() {
            let e = point_norm(&pt(&[u], &c1), &c1).exponent().unwrap();
            assert!((0..=1).contains(&e), "norm exponent {e} for u={u}");
        }
        let c3 = cfg(3, 1, 2);
        for u in 1..c3.modulus() {
            let e = point_norm(&pt(&[u], &c3), &c3).exponent().unwrap();
            assert!((-1..=2).contains(&e));
        }
    }

    #[test]
    fn sub_mod_examples() {
        let c = cfg(3, 1, 1);
        let a = pt(&[1], &c);
        let b = pt(&[2], &c);
        assert!(sub_mod(&a, &a, &c).is_zero());
        assert_eq!(sub_mod(&a, &b, &c), pt(&[8], &c));
        // norm of a difference is symmetric in its arguments
        for u in 0..9 {
            for w in 0..9 {
                let x = pt(&[u], &c);
                let y = pt(&[w], &c);
                assert_eq!(
                    point_norm(&sub_mod(&x, &y, &c), &c),
                    point_norm(&sub_mod(&y, &x, &c), &c)
                );
            }
        }
    }

    #[test]
    fn frac_part_examples() {
        let c = cfg(3, 1, 1);
        let zero = GridPoint::zero(&c);
        let one = pt(&[1], &c);
        let three = pt(&[3], &c);
        assert_eq!(frac_part_pairing(&one, &zero, &c), (0, 9));
        // (1/3)*(1/3) = 1/9
        assert_eq!(frac_part_pairing(&one, &one, &c), (1, 9));
        // (3/3)*(3/3) = 1, an integer, so the fractional part vanishes
        assert_eq!(frac_part_pairing(&three, &three, &c), (0, 9));
    }

    #[test]
    fn character_is_additive_and_unit() {
        let c = cfg(3, 1, 1);
        let pts = enumerate_grid(&c).unwrap();
        for x in &pts {
            for y in &pts {
                let lhs = character(x, y, &c) * character(y, y, &c);
                // chi(x.y) chi(y.y) = chi((x+y).y)
                let rhs = character(&add_mod(x, y, &c), y, &c);
                assert!((lhs - rhs).norm() < 1e-12);
                assert!((character(x, y, &c).norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn character_orthogonality() {
        // sum_{i in G_l} chi(i . j) = p^{2lN} [j = 0]
        for (p, n, l) in [(3, 1, 1), (3, 2, 1), (5, 1, 1)] {
            let c = cfg(p, n, l);
            let pts = enumerate_grid(&c).unwrap();
            for j in &pts {
                let s: Complex64 = pts.iter().map(|i| character(i, j, &c)).sum();
                let expect = if j.is_zero() { pts.len() as f64 } else { 0.0 };
                assert!(
                    (s - Complex64::new(expect, 0.0)).norm() < 1e-12 * pts.len() as f64,
                    "p={p} n={n} l={l} j={j:?} sum={s}"
                );
            }
        }
    }

    #[test]
    fn enumerate_counts() {
        assert_eq!(enumerate_grid(&cfg(3, 1, 1)).unwrap().len(), 9);
        assert_eq!(enumerate_grid(&cfg(3, 2, 1)).unwrap().len(), 81);
        assert_eq!(enumerate_grid(&cfg(5, 1, 2)).unwrap().len(), 625);
        let pts = enumerate_grid(&cfg(3, 1, 1)).unwrap();
        assert!(pts[0].is_zero());
        let mut sorted = pts.clone();
        sorted.sort();
        assert_eq!(pts, sorted, "enumeration is lexicographic");
    }

    #[test]
    fn capacity_guard() {
        let c = cfg(3, 1, 2);
        assert!(matches!(
            enumerate_grid_capped(&c, 80),
            Err(Error::CapacityExceeded { points: 81, .. })
        ));
    }

    #[test]
    fn split_sizes_and_involution() {
        for (p, n, l, expect) in [(3u64, 1u32, 1u32, 4usize), (3, 2, 1, 40), (5, 1, 1, 12)] {
            let c = cfg(p, n, l);
            let (plus, minus) = split_plus_minus(&c).unwrap();
            assert_eq!(plus.len(), expect);
            assert_eq!(minus.len(), expect);
            let neg_plus: std::collections::HashSet<_> =
                plus.iter().map(|x| negate(x, &c)).collect();
            let minus_set: std::collections::HashSet<_> = minus.into_iter().collect();
            assert_eq!(neg_plus, minus_set);
            for x in &plus {
                assert_eq!(negate(&negate(x, &c), &c), *x);
            }
        }
    }

    #[test]
    fn ultrametric_inequality_exhaustive() {
        let c = cfg(3, 1, 1);
        let pts = enumerate_grid(&c).unwrap();
        for x in &pts {
            for y in &pts {
                for z in &pts {
                    let xz = point_norm(&sub_mod(x, z, &c), &c);
                    let xy = point_norm(&sub_mod(x, y, &c), &c);
                    let yz = point_norm(&sub_mod(y, z, &c), &c);
                    assert!(xz <= xy.max(yz));
                }
            }
        }
    }
}
