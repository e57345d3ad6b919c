use thiserror::Error;

use crate::field::Point;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point ({}, {}) lies outside the field domain", .0.x, .0.y)]
    PointOutsideDomain(Point),
    #[error("grid has {0} nodes per axis, at least 3 are needed for derivatives")]
    GridTooCoarse(usize),
    #[error("resolution {got} is below the minimum {min}")]
    ResolutionTooSmall { got: usize, min: usize },
    #[error("invalid domain: {0}")]
    InvalidDomain(&'static str),
    #[error("coefficient {name} is not real (max |Im| = {max_imag:e})")]
    NotReal { name: &'static str, max_imag: f64 },
    #[error("ellipticity violated: min a11 = {min_a11:e}, min discriminant = {min_discriminant:e}")]
    EllipticityViolation { min_a11: f64, min_discriminant: f64 },
    #[error("|mu| reaches {max_mu} (within {eps:e} of the unit circle)")]
    MuNearUnitCircle { max_mu: f64, eps: f64 },
    #[error("gauge modulus drops to {min_modulus:e}")]
    GaugeVanishes { min_modulus: f64 },
    #[error("jacobian is not positive (min J = {min_jacobian:e})")]
    JacobianNonpositive { min_jacobian: f64 },
    #[error("pullback factor K vanishes (min |K| = {min_k:e})")]
    KVanishes { min_k: f64 },
    #[error("stated inverse does not invert the map (max |Phi(Psi(z)) - z| = {max_error:e})")]
    InverseMismatch { max_error: f64 },
    #[error("map has no inverse attached")]
    MissingInverse,
    #[error("forcing F vanishes identically")]
    FIdenticallyZero,
    #[error("evaluation point is on or outside the boundary")]
    ZOnBoundary,
    #[error("mu is not zero (max |mu| = {max_mu:e})")]
    MuNotZero { max_mu: f64 },
    #[error("mu is not constant (max deviation = {deviation:e})")]
    MuNotConstant { deviation: f64 },
    #[error("sup |mu| = {sup_mu} exceeds the solver limit {limit}")]
    MuTooLarge { sup_mu: f64, limit: f64 },
    #[error("map does not solve the Beltrami equation (residual {residual:e})")]
    NotAUniformizer { residual: f64 },
    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),
}
