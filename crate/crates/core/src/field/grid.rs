//! Uniform `n x n` node grids on a rectangle with bilinear interpolation and
//! finite-difference Wirtinger derivatives.

use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use super::domain::{Point, Rect};
use crate::error::{Error, Result};

/// Node values on the `n x n` grid that includes the rectangle corners.
/// Storage is row-major with rows indexed by `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    rect: Rect,
    n: usize,
    values: Arc<Vec<Complex64>>,
}

impl Grid {
    pub fn new(rect: Rect, n: usize, values: Vec<Complex64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::ResolutionTooSmall { got: n, min: 2 });
        }
        if values.len() != n * n {
            return Err(Error::InvalidDomain("grid value count does not match n*n"));
        }
        Ok(Self { rect, n, values: Arc::new(values) })
    }

    pub fn from_fn(rect: Rect, n: usize, mut f: impl FnMut(Point) -> Complex64) -> Result<Self> {
        if n < 2 {
            return Err(Error::ResolutionTooSmall { got: n, min: 2 });
        }
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                values.push(f(node_point(&rect, n, i, j)));
            }
        }
        Ok(Self { rect, n, values: Arc::new(values) })
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn hx(&self) -> f64 {
        self.rect.width() / (self.n - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        self.rect.height() / (self.n - 1) as f64
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn node(&self, i: usize, j: usize) -> Point {
        node_point(&self.rect, self.n, i, j)
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[j * self.n + i]
    }

    pub fn same_layout(&self, other: &Grid) -> bool {
        self.n == other.n && self.rect == other.rect
    }

    pub fn map(&self, mut f: impl FnMut(Complex64) -> Complex64) -> Grid {
        Grid { rect: self.rect, n: self.n, values: Arc::new(self.values.iter().map(|v| f(*v)).collect()) }
    }

    /// Pointwise combination of two grids with the same layout.
    pub fn zip(&self, other: &Grid, mut f: impl FnMut(Complex64, Complex64) -> Complex64) -> Grid {
        debug_assert!(self.same_layout(other));
        let values = self.values.iter().zip(other.values.iter()).map(|(a, b)| f(*a, *b)).collect();
        Grid { rect: self.rect, n: self.n, values: Arc::new(values) }
    }

    /// Bilinear interpolation; `None` outside the rectangle (up to a relative
    /// tolerance of `1e-12` of the spacing).
    pub fn interpolate(&self, p: Point) -> Option<Complex64> {
        let tx = 1e-12 * self.hx();
        let ty = 1e-12 * self.hy();
        if p.x < self.rect.x0 - tx || p.x > self.rect.x1 + tx || p.y < self.rect.y0 - ty || p.y > self.rect.y1 + ty {
            return None;
        }
        Some(self.interpolate_clamped(p))
    }

    /// Bilinear interpolation with the point clamped onto the rectangle.
    pub fn interpolate_clamped(&self, p: Point) -> Complex64 {
        let n = self.n;
        let sx = ((p.x - self.rect.x0) / self.hx()).max(0.0).min((n - 1) as f64);
        let sy = ((p.y - self.rect.y0) / self.hy()).max(0.0).min((n - 1) as f64);
        if !(sx.is_finite() && sy.is_finite()) {
            return Complex64::new(f64::NAN, f64::NAN);
        }
        let i = (sx.floor() as usize).min(n - 2);
        let j = (sy.floor() as usize).min(n - 2);
        let fx = sx - i as f64;
        let fy = sy - j as f64;
        let v00 = self.at(i, j);
        let v10 = self.at(i + 1, j);
        let v01 = self.at(i, j + 1);
        let v11 = self.at(i + 1, j + 1);
        v00 * ((1.0 - fx) * (1.0 - fy)) + v10 * (fx * (1.0 - fy)) + v01 * ((1.0 - fx) * fy) + v11 * (fx * fy)
    }

    /// Partial derivatives `(f_x, f_y)`: central differences inside, first-order
    /// one-sided differences on the boundary rows and columns.
    pub fn partials(&self) -> Result<(Grid, Grid)> {
        let n = self.n;
        if n < 3 {
            return Err(Error::GridTooCoarse(n));
        }
        let (hx, hy) = (self.hx(), self.hy());
        let mut dx = Vec::with_capacity(n * n);
        let mut dy = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let gx = if i == 0 {
                    (self.at(1, j) - self.at(0, j)) / hx
                } else if i == n - 1 {
                    (self.at(n - 1, j) - self.at(n - 2, j)) / hx
                } else {
                    (self.at(i + 1, j) - self.at(i - 1, j)) / (2.0 * hx)
                };
                let gy = if j == 0 {
                    (self.at(i, 1) - self.at(i, 0)) / hy
                } else if j == n - 1 {
                    (self.at(i, n - 1) - self.at(i, n - 2)) / hy
                } else {
                    (self.at(i, j + 1) - self.at(i, j - 1)) / (2.0 * hy)
                };
                dx.push(gx);
                dy.push(gy);
            }
        }
        Ok((
            Grid { rect: self.rect, n, values: Arc::new(dx) },
            Grid { rect: self.rect, n, values: Arc::new(dy) },
        ))
    }

    /// Wirtinger derivatives `f_z = (f_x - i f_y)/2`, `f_zbar = (f_x + i f_y)/2`.
    pub fn wirtinger(&self) -> Result<(Grid, Grid)> {
        let (dx, dy) = self.partials()?;
        let i = Complex64::new(0.0, 1.0);
        Ok((dx.zip(&dy, |a, b| 0.5 * (a - i * b)), dx.zip(&dy, |a, b| 0.5 * (a + i * b))))
    }

    /// True for nodes off the boundary rows and columns.
    pub fn is_interior_node(&self, i: usize, j: usize) -> bool {
        i > 0 && j > 0 && i + 1 < self.n && j + 1 < self.n
    }
}

fn node_point(rect: &Rect, n: usize, i: usize, j: usize) -> Point {
    let hx = rect.width() / (n - 1) as f64;
    let hy = rect.height() / (n - 1) as f64;
    // Pin the last node to the upper bound exactly.
    let x = if i + 1 == n { rect.x1 } else { rect.x0 + i as f64 * hx };
    let y = if j + 1 == n { rect.y1 } else { rect.y0 + j as f64 * hy };
    Point::new(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Rect {
        Rect::new(0.0, 1.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn affine_derivatives_are_exact() {
        let g = Grid::from_fn(unit(), 65, |p| Complex64::new(p.x, 0.0)).unwrap();
        let (fz, fzb) = g.wirtinger().unwrap();
        for j in 1..64 {
            for i in 1..64 {
                assert!((fz.at(i, j) - Complex64::new(0.5, 0.0)).norm() <= 1e-10);
                assert!((fzb.at(i, j) - Complex64::new(0.5, 0.0)).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn quadratic_interior_derivative_is_exact() {
        let g = Grid::from_fn(unit(), 33, |p| Complex64::new(p.x * p.x, 0.0)).unwrap();
        let (_, fzb) = g.wirtinger().unwrap();
        for j in 1..32 {
            for i in 1..32 {
                let x = g.node(i, j).x;
                assert!((fzb.at(i, j) - Complex64::new(x, 0.0)).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn too_coarse() {
        let g = Grid::from_fn(unit(), 2, |_| Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(g.wirtinger().unwrap_err(), Error::GridTooCoarse(2));
    }

    #[test]
    fn node_interpolation_is_exact() {
        let g = Grid::from_fn(unit(), 17, |p| p.z().exp()).unwrap();
        for j in 0..17 {
            for i in 0..17 {
                let p = g.node(i, j);
                assert_eq!(g.interpolate(p).unwrap(), g.at(i, j));
            }
        }
        assert!(g.interpolate(Point::new(1.5, 0.5)).is_none());
    }

    #[test]
    fn bilinear_reproduces_bilinear_functions() {
        let f = |p: Point| Complex64::new(1.0 + 2.0 * p.x - p.y + 0.5 * p.x * p.y, p.x);
        let g = Grid::from_fn(unit(), 9, f).unwrap();
        for p in [Point::new(0.13, 0.77), Point::new(0.5, 0.01), Point::new(0.999, 0.999)] {
            assert!((g.interpolate(p).unwrap() - f(p)).norm() < 1e-14);
        }
    }
}
