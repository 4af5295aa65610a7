//! Fields on `G_l`, the character transform, operator matrices, and the free
//! energy functional in both coordinate and momentum representations.
//!
//! The transform matrix `M_{ji} = p^{-lN} chi_p(i.j)` is unitary, so the
//! direct `O(n^2)` summation with exact integer phases is both the simplest
//! and the most reproducible evaluation at desk scale. The discrete operator
//! is `U = (gamma/2 d + alpha2/2) I - gamma/2 A` with `A_{ij} =
//! p^{-lN}/w(‖i-j‖)` off the diagonal; conjugating `p^{-lN} U` by the
//! transform diagonalizes it with entries `p^{-lN}(gamma/2 A(‖j‖) +
//! alpha2/2)` away from the zero mode and the ball mass `c_0` on it.

use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::padic::{
    self, enumerate_grid_capped, split_plus_minus, ExactNorm, GridPoint, PrimeConfig,
    DEFAULT_MAX_POINTS,
};
use crate::radial::{self, KernelSpec};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::HashMap;

/// The enumerated lattice with precomputed norms, negation table, the
/// `G_l^+/G_l^-` split, and the root-of-unity table for characters.
#[derive(Debug, Clone)]
pub struct Lattice {
    cfg: PrimeConfig,
    points: Vec<GridPoint>,
    index_of: HashMap<GridPoint, usize>,
    norms: Vec<ExactNorm>,
    neg_index: Vec<usize>,
    plus: Vec<usize>,
    minus: Vec<usize>,
    roots: Vec<Complex64>,
}

impl Lattice {
    pub fn build(cfg: PrimeConfig) -> Result<Self> {
        Self::build_capped(cfg, DEFAULT_MAX_POINTS)
    }

    pub fn build_capped(cfg: PrimeConfig, max_points: u64) -> Result<Self> {
        let points = enumerate_grid_capped(&cfg, max_points)?;
        let index_of: HashMap<GridPoint, usize> = points
            .iter()
            .enumerate()
            .map(|(i, pt)| (pt.clone(), i))
            .collect();
        let norms = points.iter().map(|pt| padic::point_norm(pt, &cfg)).collect();
        let neg_index = points
            .iter()
            .map(|pt| index_of[&padic::negate(pt, &cfg)])
            .collect();
        let (plus_pts, minus_pts) = split_plus_minus(&cfg)?;
        let plus = plus_pts.iter().map(|pt| index_of[pt]).collect();
        let minus = minus_pts.iter().map(|pt| index_of[pt]).collect();
        let m = cfg.modulus();
        let roots = (0..m).map(|t| padic::unit_phase(t, m)).collect();
        Ok(Self {
            cfg,
            points,
            index_of,
            norms,
            neg_index,
            plus,
            minus,
            roots,
        })
    }

    pub fn cfg(&self) -> &PrimeConfig {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn index_of(&self, pt: &GridPoint) -> Option<usize> {
        self.index_of.get(pt).copied()
    }

    /// `‖points[i]‖_p`.
    pub fn norm_of(&self, i: usize) -> ExactNorm {
        self.norms[i]
    }

    /// Index of `points[i] - points[j]`, without allocating the point.
    pub fn difference_index(&self, i: usize, j: usize) -> usize {
        let m = self.cfg.modulus();
        let mut idx = 0u64;
        for (&a, &b) in self.points[i].coords().iter().zip(self.points[j].coords()) {
            idx = idx * m + (a + m - b) % m;
        }
        idx as usize
    }

    /// `‖points[i] - points[j]‖_p`; symmetric, zero exactly on the diagonal.
    pub fn norm_between(&self, i: usize, j: usize) -> ExactNorm {
        self.norms[self.difference_index(i, j)]
    }

    pub fn negate_index(&self, i: usize) -> usize {
        self.neg_index[i]
    }

    /// Indices of `G_l^+` (lexicographically below their negation).
    pub fn plus_indices(&self) -> &[usize] {
        &self.plus
    }

    pub fn minus_indices(&self) -> &[usize] {
        &self.minus
    }

    /// Exact integer phase `t` with `{points[i].points[j]}_p = t / p^{2l}`.
    pub fn phase(&self, i: usize, j: usize) -> u64 {
        padic::pairing_phase(&self.points[i], &self.points[j], &self.cfg)
    }

    /// `chi_p(points[i].points[j])` via the root table.
    pub fn character(&self, i: usize, j: usize) -> Complex64 {
        self.roots[self.phase(i, j) as usize]
    }

    /// `chi_p(-points[i].points[j])`.
    pub fn character_neg(&self, i: usize, j: usize) -> Complex64 {
        let m = self.cfg.modulus();
        self.roots[((m - self.phase(i, j)) % m) as usize]
    }

    /// `exp(2 pi i t / p^{2l})` for a raw phase index.
    pub fn unit_root(&self, t: u64) -> Complex64 {
        self.roots[(t % self.cfg.modulus()) as usize]
    }

    /// `<f, g> = p^{-lN} sum_i f(i) g(i)`.
    pub fn pairing(&self, f: &FieldVec, g: &FieldVec) -> f64 {
        let dot: f64 = f
            .values()
            .iter()
            .zip(g.values())
            .map(|(a, b)| a * b)
            .sum();
        self.cfg.cell_volume() * dot
    }
}

/// A real field given by its coefficients on the lattice points.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldVec {
    values: Vec<f64>,
}

impl FieldVec {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("field has non-finite entries".into()));
        }
        Ok(Self { values })
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn constant(t: f64, n: usize) -> Self {
        Self { values: vec![t; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn coefficient_sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.coefficient_sum() / self.values.len() as f64
        }
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Zero coefficient sum within `1e-12` relative to the field scale.
    pub fn is_lizorkin(&self) -> bool {
        self.coefficient_sum().abs() <= 1e-12 * self.norm_inf().max(1.0)
    }
}

/// A complex momentum-space field, `values[j] = phi_hat(points[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumVec {
    values: Vec<Complex64>,
}

impl MomentumVec {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidSpec(
                "momentum field has non-finite entries".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn zero_mode(&self) -> Complex64 {
        self.values[0]
    }

    /// `max_j |conj(v(j)) - v(-j)|`.
    pub fn hermitian_residual(&self, lat: &Lattice) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(j, v)| (v.conj() - self.values[lat.negate_index(j)]).norm())
            .fold(0.0, f64::max)
    }

    /// Lizorkin iff the zero mode vanishes.
    pub fn is_lizorkin(&self) -> bool {
        let scale = self.values.iter().map(|v| v.norm()).fold(1.0, f64::max);
        self.zero_mode().norm() <= 1e-12 * scale
    }
}

/// Model couplings for the free measure and the interacting estimators.
/// `alpha2 >= 0` here; energies with negative quadratic coefficient go
/// through the raw quadratic-form entry points instead of this type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    gamma: f64,
    alpha2: f64,
    alpha4: f64,
    kernel: KernelSpec,
}

impl ModelParams {
    pub fn new(gamma: f64, alpha2: f64, alpha4: f64, kernel: KernelSpec) -> Result<Self> {
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        if !alpha2.is_finite() || alpha2 < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "alpha2 must be non-negative, got {alpha2}"
            )));
        }
        if !alpha4.is_finite() || alpha4 < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "alpha4 must be non-negative, got {alpha4}"
            )));
        }
        Ok(Self {
            gamma,
            alpha2,
            alpha4,
            kernel,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    pub fn alpha4(&self) -> f64 {
        self.alpha4
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }
}

/// `gamma/2 A(‖j‖) + alpha2/2`: the momentum coefficient of a nonzero mode.
pub fn mode_coefficient(
    kernel: &KernelSpec,
    gamma: f64,
    alpha2: f64,
    norm: ExactNorm,
    cfg: &PrimeConfig,
) -> f64 {
    gamma / 2.0 * radial::symbol(kernel, norm, cfg) + alpha2 / 2.0
}

/// Discrete Fourier transform `phi_hat(j) = p^{-lN} sum_i phi(i) chi_p(i.j)`.
pub fn dft(f: &FieldVec, lat: &Lattice, mode: ExecMode) -> MomentumVec {
    assert_eq!(f.len(), lat.len());
    let w = lat.cfg().cell_volume();
    let values = map_indexed(mode, lat.len(), |j| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &v) in f.values().iter().enumerate() {
            acc += v * lat.character(i, j);
        }
        w * acc
    });
    MomentumVec { values }
}

/// Inverse transform `phi(j) = p^{-lN} sum_i phi_hat(i) chi_p(-i.j)`.
///
/// The imaginary residue of the output is discarded when it is at noise
/// level; a residue above `1e-9` (relative to the field scale) means the
/// input was not Hermitian-symmetric and is an error.
pub fn idft(g: &MomentumVec, lat: &Lattice, mode: ExecMode) -> Result<FieldVec> {
    assert_eq!(g.len(), lat.len());
    let w = lat.cfg().cell_volume();
    let complex = map_indexed(mode, lat.len(), |j| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &v) in g.values().iter().enumerate() {
            acc += v * lat.character_neg(i, j);
        }
        w * acc
    });
    let scale = complex.iter().map(|z| z.re.abs()).fold(1.0, f64::max);
    let residual = complex.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let limit = 1e-9 * scale;
    if residual > limit {
        return Err(Error::NotHermitian { residual, limit });
    }
    Ok(FieldVec::from_raw(complex.into_iter().map(|z| z.re).collect()))
}

/// Subtracts the mean: the projection onto the Lizorkin hyperplane.
pub fn lizorkin_project(f: &FieldVec) -> FieldVec {
    let m = f.mean();
    FieldVec::from_raw(f.values().iter().map(|v| v - m).collect())
}

/// Role tag of an assembled operator matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorRole {
    A,
    W,
    U,
}

/// Dense real symmetric operator on level-l fields.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    matrix: DMatrix<f64>,
    role: OperatorRole,
}

impl OperatorMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn role(&self) -> OperatorRole {
        self.role
    }

    pub fn apply(&self, f: &FieldVec) -> FieldVec {
        let x = nalgebra::DVector::from_column_slice(f.values());
        FieldVec::from_raw((&self.matrix * x).iter().copied().collect())
    }

    /// `max_{ij} |M_{ij} - M_{ji}|`.
    pub fn symmetry_residual(&self) -> f64 {
        let m = &self.matrix;
        let mut r: f64 = 0.0;
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                r = r.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        r
    }
}

/// Eigenvalues of a symmetric operator, ascending.
pub fn eigenvalues_ascending(op: &OperatorMatrix) -> Vec<f64> {
    let eig = op.matrix.clone().symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals
}

/// Builds a radial matrix: `diag` on the diagonal, `off(norm_exponent)`
/// elsewhere, rows assembled independently so the work parallelizes.
fn assemble_radial(
    lat: &Lattice,
    diag: f64,
    off: impl Fn(i64) -> f64 + Sync,
    mode: ExecMode,
) -> DMatrix<f64> {
    let n = lat.len();
    let level = i64::from(lat.cfg().level());
    // off-diagonal norms take exponents in [1-l, l]; tabulate once
    let coef: Vec<f64> = (1 - level..=level).map(&off).collect();
    let rows = map_indexed(mode, n, |i| {
        let mut row = vec![0.0; n];
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = if i == j {
                diag
            } else {
                let k = self::norm_exponent(lat, i, j);
                coef[(k - (1 - level)) as usize]
            };
        }
        row
    });
    DMatrix::from_row_slice(n, n, &rows.concat())
}

fn norm_exponent(lat: &Lattice, i: usize, j: usize) -> i64 {
    lat.norm_between(i, j)
        .exponent()
        .expect("distinct points have nonzero difference")
}

/// `A_{ij} = p^{-lN} / w(‖i-j‖)` off the diagonal, zero on it.
pub fn assemble_a(lat: &Lattice, kernel: &KernelSpec, mode: ExecMode) -> OperatorMatrix {
    let w = lat.cfg().cell_volume();
    let cfg = lat.cfg().clone();
    let k = *kernel;
    OperatorMatrix {
        matrix: assemble_radial(lat, 0.0, |e| w / k.weight_exp(e, &cfg), mode),
        role: OperatorRole::A,
    }
}

/// `W = A - d(l, w) I`; each row sums to the negative outer tail.
pub fn assemble_w(lat: &Lattice, kernel: &KernelSpec, mode: ExecMode) -> OperatorMatrix {
    let w = lat.cfg().cell_volume();
    let cfg = lat.cfg().clone();
    let d = radial::d_const(i64::from(cfg.level()), kernel, &cfg);
    let k = *kernel;
    OperatorMatrix {
        matrix: assemble_radial(lat, -d, |e| w / k.weight_exp(e, &cfg), mode),
        role: OperatorRole::W,
    }
}

/// `U = (gamma/2 d + alpha2/2) I - gamma/2 A`; positive definite when
/// `alpha2 > 0`.
pub fn assemble_u(lat: &Lattice, params: &ModelParams, mode: ExecMode) -> OperatorMatrix {
    let w = lat.cfg().cell_volume();
    let cfg = lat.cfg().clone();
    let d = radial::d_const(i64::from(cfg.level()), params.kernel(), &cfg);
    let g = params.gamma();
    let diag = g / 2.0 * d + params.alpha2() / 2.0;
    let k = *params.kernel();
    OperatorMatrix {
        matrix: assemble_radial(lat, diag, |e| -g / 2.0 * w / k.weight_exp(e, &cfg), mode),
        role: OperatorRole::U,
    }
}

/// Quadratic part of the energy for raw couplings (`alpha2` of any sign):
/// `p^{-lN}(gamma/2 d + alpha2/2) sum phi^2 - gamma/2 p^{-lN} sum_{ij} A_{ij} phi_i phi_j`.
pub fn quadratic_energy(
    f: &FieldVec,
    lat: &Lattice,
    kernel: &KernelSpec,
    gamma: f64,
    alpha2: f64,
    mode: ExecMode,
) -> f64 {
    assert_eq!(f.len(), lat.len());
    let cfg = lat.cfg();
    let w = cfg.cell_volume();
    let level = i64::from(cfg.level());
    let d = radial::d_const(level, kernel, cfg);
    let coef: Vec<f64> = (1 - level..=level)
        .map(|e| w / kernel.weight_exp(e, cfg))
        .collect();
    let vals = f.values();
    let sum_sq: f64 = vals.iter().map(|v| v * v).sum();
    // cross term sum_{ij} A_{ij} phi_i phi_j, accumulated row by row
    let rows = map_indexed(mode, lat.len(), |i| {
        let mut acc = 0.0;
        for (j, &vj) in vals.iter().enumerate() {
            if i != j {
                acc += coef[(norm_exponent(lat, i, j) - (1 - level)) as usize] * vj;
            }
        }
        vals[i] * acc
    });
    let cross: f64 = rows.iter().sum();
    w * (gamma / 2.0 * d + alpha2 / 2.0) * sum_sq - gamma / 2.0 * w * cross
}

/// Free energy `E_0(phi)` in the coordinate representation.
pub fn energy_free_coord(f: &FieldVec, lat: &Lattice, params: &ModelParams, mode: ExecMode) -> f64 {
    quadratic_energy(f, lat, params.kernel(), params.gamma(), params.alpha2(), mode)
}

/// Diagonal of the momentum representation of `p^{-lN} U`: the ball mass
/// `c_0` on the zero mode, `p^{-lN}(gamma/2 A(‖j‖) + alpha2/2)` elsewhere.
pub fn momentum_diagonal(lat: &Lattice, params: &ModelParams) -> Vec<f64> {
    let cfg = lat.cfg();
    let w = cfg.cell_volume();
    let c0 = radial::mass_ball_integral(
        i64::from(cfg.level()),
        params.kernel(),
        params.gamma(),
        params.alpha2(),
        cfg,
    );
    (0..lat.len())
        .map(|j| {
            if j == 0 {
                c0
            } else {
                w * mode_coefficient(
                    params.kernel(),
                    params.gamma(),
                    params.alpha2(),
                    lat.norm_of(j),
                    cfg,
                )
            }
        })
        .collect()
}

/// Free energy in the momentum representation:
/// `E_0 = p^{-lN} sum_{j != 0} (gamma/2 A(‖j‖) + alpha2/2) |phi_hat(j)|^2 + c_0 |phi_hat(0)|^2`.
pub fn energy_free_momentum(g: &MomentumVec, lat: &Lattice, params: &ModelParams) -> f64 {
    assert_eq!(g.len(), lat.len());
    momentum_diagonal(lat, params)
        .iter()
        .zip(g.values())
        .map(|(d, v)| d * v.norm_sqr())
        .sum()
}

/// Solves the free stationarity system `2 U phi = J` in momentum space,
/// where the transform renders the operator diagonal.
///
/// With `alpha2 = 0` the zero mode carries only the level-dependent boundary
/// mass, which vanishes in the continuum limit; a source with nonzero mean is
/// rejected as singular in that regime, and a Lizorkin source gets the
/// zero-mode-pinned solution.
pub fn solve_free_source(
    j_src: &FieldVec,
    lat: &Lattice,
    params: &ModelParams,
    mode: ExecMode,
) -> Result<FieldVec> {
    assert_eq!(j_src.len(), lat.len());
    let cfg = lat.cfg();
    let lizorkin_src = j_src.is_lizorkin();
    if params.alpha2() == 0.0 && !lizorkin_src {
        return Err(Error::SingularSystem(
            "alpha2 = 0: the zero mode is supported only by the vanishing boundary mass; \
             the source must have zero mean"
                .into(),
        ));
    }
    let j_hat = dft(j_src, lat, mode);
    let tau = radial::outer_tail(i64::from(cfg.level()), params.kernel(), cfg);
    let zero_mass = params.alpha2() + params.gamma() * tau;
    let values: Vec<Complex64> = j_hat
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| {
            if j == 0 {
                if lizorkin_src {
                    Complex64::new(0.0, 0.0)
                } else {
                    v / zero_mass
                }
            } else {
                let b = mode_coefficient(
                    params.kernel(),
                    params.gamma(),
                    params.alpha2(),
                    lat.norm_of(j),
                    cfg,
                );
                v / (2.0 * b)
            }
        })
        .collect();
    idft(&MomentumVec { values }, lat, mode)
}

/// Gradient of `E_0(phi) - <J, phi>` at `phi`: `p^{-lN} (2 U phi - J)`.
pub fn free_source_gradient(
    phi: &FieldVec,
    j_src: &FieldVec,
    lat: &Lattice,
    params: &ModelParams,
    mode: ExecMode,
) -> FieldVec {
    let u = assemble_u(lat, params, mode);
    let u_phi = u.apply(phi);
    let w = lat.cfg().cell_volume();
    FieldVec::from_raw(
        u_phi
            .values()
            .iter()
            .zip(j_src.values())
            .map(|(up, j)| w * (2.0 * up - j))
            .collect(),
    )
}

/// Re-expresses a level-l field on a finer lattice of the same `(p, N)`:
/// each source cell's value is copied to the `p^{(m-l)N}` refined points it
/// contains, and points outside the level-l ball get zero.
pub fn embed_field(f: &FieldVec, from: &Lattice, to: &Lattice) -> Result<FieldVec> {
    let (cl, cm) = (from.cfg(), to.cfg());
    if cl.p() != cm.p() || cl.dim() != cm.dim() || cm.level() < cl.level() {
        return Err(Error::InvalidSpec(
            "embedding requires the same p and N and a target level >= the source level".into(),
        ));
    }
    assert_eq!(f.len(), from.len());
    let q = cl.p().pow(cm.level() - cl.level());
    let ml = cl.modulus();
    let values = to
        .points()
        .iter()
        .map(|pt| {
            let mut idx = 0u64;
            for &u in pt.coords() {
                if u % q != 0 {
                    return 0.0;
                }
                idx = idx * ml + (u / q) % ml;
            }
            f.values()[idx as usize]
        })
        .collect();
    Ok(FieldVec::from_raw(values))
}
