use alloc::sync::Arc;
use core::f64::consts::TAU;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use super::ComplexField;
use crate::error::{Error, Result};

/// A point of the plane, `z = x + iy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn z(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn from_z(z: Complex64) -> Self {
        Self { x: z.re, y: z.im }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<Complex64> for Point {
    fn from(z: Complex64) -> Self {
        Self::from_z(z)
    }
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite()) {
            return Err(Error::InvalidDomain("rectangle bounds must be finite"));
        }
        if !(x0 < x1 && y0 < y1) {
            return Err(Error::InvalidDomain("rectangle needs x0 < x1 and y0 < y1"));
        }
        Ok(Self { x0, x1, y0, y1 })
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    fn contains_tol(&self, p: Point, tol: f64) -> bool {
        p.x >= self.x0 - tol && p.x <= self.x1 + tol && p.y >= self.y0 - tol && p.y <= self.y1 + tol
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x0 >= self.x0 && other.x1 <= self.x1 && other.y0 >= self.y0 && other.y1 <= self.y1
    }

    /// Centers of an `n x n` cell decomposition, as `(x, y)` coordinate lists.
    pub fn cell_centers(&self, n: usize) -> (alloc::vec::Vec<f64>, alloc::vec::Vec<f64>) {
        let hx = self.width() / n as f64;
        let hy = self.height() / n as f64;
        let xs = (0..n).map(|i| self.x0 + (i as f64 + 0.5) * hx).collect();
        let ys = (0..n).map(|j| self.y0 + (j as f64 + 0.5) * hy).collect();
        (xs, ys)
    }

    /// The rectangle spanned by the centers of an `n x n` cell decomposition.
    pub fn center_rect(&self, n: usize) -> Rect {
        let hx = self.width() / n as f64;
        let hy = self.height() / n as f64;
        Rect { x0: self.x0 + 0.5 * hx, x1: self.x1 - 0.5 * hx, y0: self.y0 + 0.5 * hy, y1: self.y1 - 0.5 * hy }
    }

    fn scale(&self) -> f64 {
        self.width().max(self.height()).max(self.x0.abs()).max(self.x1.abs()).max(self.y0.abs()).max(self.y1.abs())
    }
}

/// The image of a base domain under a diffeomorphism. Membership is decided by
/// pulling the point back through the inverse map.
#[derive(Debug)]
pub struct ImageDomain {
    pub base: Domain,
    pub forward: ComplexField,
    pub inverse: ComplexField,
    bbox: Rect,
}

impl ImageDomain {
    pub fn bbox(&self) -> Rect {
        self.bbox
    }
}

#[derive(Debug, Clone)]
pub enum Domain {
    Rectangle(Rect),
    Disk { center: Point, radius: f64 },
    Image(Arc<ImageDomain>),
}

const BOUNDARY_SAMPLES: usize = 4096;

impl Domain {
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        Ok(Domain::Rectangle(Rect::new(x0, x1, y0, y1)?))
    }

    pub fn disk(center: Point, radius: f64) -> Result<Self> {
        if !center.is_finite() || !radius.is_finite() {
            return Err(Error::InvalidDomain("disk parameters must be finite"));
        }
        if radius <= 0.0 {
            return Err(Error::InvalidDomain("disk radius must be positive"));
        }
        Ok(Domain::Disk { center, radius })
    }

    pub fn unit_disk() -> Self {
        Domain::Disk { center: Point::new(0.0, 0.0), radius: 1.0 }
    }

    pub fn unit_square() -> Self {
        Domain::Rectangle(Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 })
    }

    /// Image of `base` under `forward`, with `inverse` mapping back.
    ///
    /// The bounding box is taken from `bbox` when supplied, else estimated by
    /// sampling the image of the base boundary and padding it slightly.
    pub fn image(base: Domain, forward: ComplexField, inverse: ComplexField, bbox: Option<Rect>) -> Result<Self> {
        let bbox = match bbox {
            Some(b) => b,
            None => {
                let mut lo = Complex64::new(f64::INFINITY, f64::INFINITY);
                let mut hi = Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for p in base.boundary_samples(BOUNDARY_SAMPLES) {
                    let w = forward.eval_unchecked(p);
                    if !(w.re.is_finite() && w.im.is_finite()) {
                        return Err(Error::NonFinite("image domain boundary"));
                    }
                    lo = Complex64::new(lo.re.min(w.re), lo.im.min(w.im));
                    hi = Complex64::new(hi.re.max(w.re), hi.im.max(w.im));
                }
                let pad = 1e-3 * (hi.re - lo.re).max(hi.im - lo.im);
                Rect::new(lo.re - pad, hi.re + pad, lo.im - pad, hi.im + pad)?
            }
        };
        Ok(Domain::Image(Arc::new(ImageDomain { base, forward, inverse, bbox })))
    }

    pub fn bbox(&self) -> Rect {
        match self {
            Domain::Rectangle(r) => *r,
            Domain::Disk { center, radius } => Rect {
                x0: center.x - radius,
                x1: center.x + radius,
                y0: center.y - radius,
                y1: center.y + radius,
            },
            Domain::Image(img) => img.bbox,
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.contains_tol(p, 0.0)
    }

    /// Membership with the boundary inflated by `tol`.
    pub fn contains_tol(&self, p: Point, tol: f64) -> bool {
        match self {
            Domain::Rectangle(r) => r.contains_tol(p, tol),
            Domain::Disk { center, radius } => {
                let dx = p.x - center.x;
                let dy = p.y - center.y;
                let r = radius + tol;
                dx * dx + dy * dy <= r * r
            }
            Domain::Image(img) => match img.inverse.try_eval_unchecked(p) {
                Some(q) if q.re.is_finite() && q.im.is_finite() => img.base.contains_tol(Point::from_z(q), tol),
                _ => false,
            },
        }
    }

    /// True when `p` and the eight points at distance `margin` around it
    /// (axis and diagonal directions) all lie in the domain.
    pub fn contains_with_margin(&self, p: Point, margin: f64) -> bool {
        if !self.contains(p) {
            return false;
        }
        let d = margin * core::f64::consts::FRAC_1_SQRT_2;
        let offsets = [(margin, 0.0), (-margin, 0.0), (0.0, margin), (0.0, -margin), (d, d), (d, -d), (-d, d), (-d, -d)];
        offsets.iter().all(|(ox, oy)| self.contains(Point::new(p.x + ox, p.y + oy)))
    }

    /// Default interior margin: a tenth of the half-width of the bounding box.
    pub fn interior_margin(&self) -> f64 {
        let b = self.bbox();
        0.1 * 0.5 * b.width().min(b.height())
    }

    /// Tolerance used when deciding whether an evaluation point is "inside".
    pub fn eval_tolerance(&self) -> f64 {
        1e-9 * self.bbox().scale().max(1.0)
    }

    /// Points along the boundary, used for bounding-box estimates.
    pub fn boundary_samples(&self, n: usize) -> alloc::vec::Vec<Point> {
        match self {
            Domain::Disk { center, radius } => (0..n)
                .map(|k| {
                    let t = TAU * k as f64 / n as f64;
                    Point::new(center.x + radius * t.cos(), center.y + radius * t.sin())
                })
                .collect(),
            Domain::Rectangle(r) => {
                let per_side = (n / 4).max(1);
                let mut out = alloc::vec::Vec::with_capacity(4 * per_side);
                for k in 0..per_side {
                    let s = k as f64 / per_side as f64;
                    out.push(Point::new(r.x0 + s * r.width(), r.y0));
                    out.push(Point::new(r.x1, r.y0 + s * r.height()));
                    out.push(Point::new(r.x1 - s * r.width(), r.y1));
                    out.push(Point::new(r.x0, r.y1 - s * r.height()));
                }
                out
            }
            Domain::Image(img) => img
                .base
                .boundary_samples(n)
                .into_iter()
                .map(|p| Point::from_z(img.forward.eval_unchecked(p)))
                .collect(),
        }
    }

    /// Cell centers of the `n x n` decomposition of the bounding box that lie
    /// in the domain. This is the sample set used by every "sampled" check.
    pub fn sample_points(&self, n: usize) -> alloc::vec::Vec<Point> {
        let (xs, ys) = self.bbox().cell_centers(n);
        let mut out = alloc::vec::Vec::new();
        for &y in &ys {
            for &x in &xs {
                let p = Point::new(x, y);
                if self.contains(p) {
                    out.push(p);
                }
            }
        }
        out
    }

    /// Sample points that keep the default interior margin from the boundary.
    pub fn interior_sample_points(&self, n: usize) -> alloc::vec::Vec<Point> {
        let m = self.interior_margin();
        self.sample_points(n).into_iter().filter(|p| self.contains_with_margin(*p, m)).collect()
    }
}
