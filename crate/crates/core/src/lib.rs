//! Numerical laboratory for the Beltrami–Vekua form of planar first-order
//! elliptic systems.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure
//! computation over immutable fields; file formats, scenarios and the command
//! line live in the companion `bvlab` crate.
//!
//! Layout:
//!
//! * [`field`]: points, domains, complex fields (expression trees and uniform
//!   grids), Wirtinger calculus and masked midpoint quadrature.
//! * [`elliptic`]: the real first-order system and manufactured forcings.
//! * [`pipeline`]: the staged derivation of `(mu, A, B, F)` from a real system.
//! * [`symmetry`]: gauge action and diffeomorphism pullback.
//! * [`invariants`]: the invariant density, the mass, zero loci.
//! * [`reduction`]: Cauchy transform, uniformization and the Vekua normal form.
//! * [`corpus`]: seeded test corpora shared by the tests and the CLI.
#![no_std]
// `!(x <= tol)` is deliberate: NaN must fail every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod corpus;
pub mod elliptic;
pub mod error;
pub mod fft;
pub mod field;
pub mod invariants;
pub mod pipeline;
pub mod reduction;
pub mod rng;
pub mod symmetry;

pub use error::{Error, Result};
pub use field::{ComplexField, Domain, Expr, Grid, Point};
pub use num_complex::Complex64;

/// Ellipticity threshold on sampled minima of `a11` and the discriminant.
pub const EPS_ELLIPTIC: f64 = 1e-10;
/// Distance from the unit circle below which `|mu|` is treated as degenerate.
pub const EPS_MU: f64 = 1e-8;
/// Smallest admissible sampled modulus of a gauge.
pub const EPS_GAUGE: f64 = 1e-8;
/// Default resolution for sampled invariant checks (cells per axis).
pub const CHECK_RESOLUTION: usize = 48;
