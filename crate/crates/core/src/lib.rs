//! Statistical field theory on hierarchical (p-adic) lattices.
//!
//! The crate builds finite quotient lattices of the p-adic line, assembles
//! the nonlocal quadratic operators that play the role of a Laplacian there,
//! samples the free Gaussian field exactly in mode space, and estimates
//! interacting quantities (partition ratios, correlations, perturbative
//! series) by deterministic Monte Carlo. A Ginzburg-Landau layer scans
//! symmetry breaking of the quartic energy below the critical mass.
//!
//! Numerical work is data parallel over lattice points or draws via rayon
//! when the `parallel` feature (default) is enabled; `ExecMode::Sequential`
//! and builds without the feature produce bit-identical results.

pub mod error;
pub mod exec;
pub mod gibbs;
pub mod interacting;
pub mod landau;
pub mod lattice;
pub mod padic;
pub mod radial;
pub mod stats;

pub use error::{Error, Result};
