//! Masked tensor-product midpoint rule on a domain's bounding box.

use alloc::vec::Vec;

use num_complex::Complex64;

use super::{ComplexField, Domain, Point};
use crate::error::{Error, Result};

/// Result of [`integrate`]: the value at `N`, at `2N`, and their difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub resolution: usize,
    pub value: Complex64,
    pub refined: Complex64,
    pub error_estimate: f64,
}

pub const MIN_RESOLUTION: usize = 4;

/// Cell centers of the `n x n` bounding-box decomposition inside `domain`,
/// and the cell area.
pub fn midpoint_nodes(domain: &Domain, n: usize) -> (Vec<Point>, f64) {
    let b = domain.bbox();
    let area = (b.width() / n as f64) * (b.height() / n as f64);
    (domain.sample_points(n), area)
}

/// Pairwise summation with a fixed split order, so results are bit-stable
/// for a given input sequence.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().fold(Complex64::new(0.0, 0.0), |a, b| a + b);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Midpoint rule at a single resolution.
pub fn midpoint(domain: &Domain, g: &ComplexField, n: usize) -> Result<Complex64> {
    if n < MIN_RESOLUTION {
        return Err(Error::ResolutionTooSmall { got: n, min: MIN_RESOLUTION });
    }
    let (nodes, area) = midpoint_nodes(domain, n);
    let values = g.eval_many(&nodes);
    Ok(pairwise_sum(&values) * area)
}

/// Integral of `g` over `domain` at `n x n` cells, recomputed at `2n x 2n`;
/// the error estimate is the absolute difference.
pub fn integrate(domain: &Domain, g: &ComplexField, n: usize) -> Result<Quadrature> {
    let value = midpoint(domain, g, n)?;
    let refined = midpoint(domain, g, 2 * n)?;
    Ok(Quadrature { resolution: n, value, refined, error_estimate: (value - refined).norm() })
}
