//! Similarity transforms, boxes and overlap metrics.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }

    /// Nearest integer pixel, halves rounded away from zero.
    pub fn round(self) -> (i64, i64) {
        (libm::round(self.x) as i64, libm::round(self.y) as i64)
    }

    /// Mean of a set of points, `None` if empty.
    pub fn centroid(points: impl IntoIterator<Item = Point>) -> Option<Point> {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for p in points {
            sx += p.x;
            sy += p.y;
            n += 1;
        }
        (n > 0).then(|| Point::new(sx / n as f64, sy / n as f64))
    }
}

/// Axis-aligned box with a real-valued top-left corner and extent.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Box {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Box {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn from_centre(c: Point, w: f64, h: f64) -> Self {
        Self::new(c.x - w / 2.0, c.y - h / 2.0, w, h)
    }

    pub fn centre(&self) -> Point {
        Point::new(self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    /// Intersection, or `None` when the boxes do not overlap with positive area.
    pub fn intersect(&self, other: &Box) -> Option<Box> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        (x1 > x0 && y1 > y0).then(|| Box::new(x0, y0, x1 - x0, y1 - y0))
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()
    }
}

/// Rotation, isotropic scale and translation; never shears or reflects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformParams {
    pub rotation: f64,
    pub scale: f64,
    pub tx: f64,
    pub ty: f64,
}

impl TransformParams {
    pub const IDENTITY: Self = Self {
        rotation: 0.0,
        scale: 1.0,
        tx: 0.0,
        ty: 0.0,
    };

    /// Maps `p` by rotating and scaling about `anchor`, then shifting by
    /// `(tx, ty)`: `anchor + t + s * R(r) * (p - anchor)`.
    #[inline]
    pub fn apply(&self, anchor: Point, p: Point) -> Point {
        let (sin, cos) = libm::sincos(self.rotation);
        let dx = p.x - anchor.x;
        let dy = p.y - anchor.y;
        Point::new(
            anchor.x + self.tx + self.scale * (cos * dx - sin * dy),
            anchor.y + self.ty + self.scale * (sin * dx + cos * dy),
        )
    }
}

/// Standard deviations of the inter-frame motion prior. Translation entries
/// are fractions of the previous box width and height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionPriors {
    pub sigma_rotation: f64,
    pub sigma_scale: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
}

impl Default for MotionPriors {
    fn default() -> Self {
        Self {
            sigma_rotation: core::f64::consts::PI / 16.0,
            sigma_scale: 0.02,
            sigma_x: 0.15,
            sigma_y: 0.1,
        }
    }
}

impl MotionPriors {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.sigma_rotation,
            self.sigma_scale,
            self.sigma_x,
            self.sigma_y,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidParameter("motion priors must be positive and finite"))
        }
    }
}

/// Draws one candidate transform relative to the previous object location:
/// Gaussian rotation and scale, Laplace translation with scales proportional
/// to the previous box size.
pub fn sample_transform<R: Rng + ?Sized>(
    priors: &MotionPriors,
    prev_box: &Box,
    rng: &mut R,
) -> TransformParams {
    let rotation = gaussian(0.0, priors.sigma_rotation, rng);
    let scale = loop {
        let s = gaussian(1.0, priors.sigma_scale, rng);
        if s > 0.0 {
            break s;
        }
    };
    let tx = laplace(prev_box.w * priors.sigma_x, rng);
    let ty = laplace(prev_box.h * priors.sigma_y, rng);
    TransformParams {
        rotation,
        scale,
        tx,
        ty,
    }
}

fn gaussian<R: Rng + ?Sized>(mean: f64, std: f64, rng: &mut R) -> f64 {
    match Normal::new(mean, std) {
        Ok(n) => n.sample(rng),
        Err(_) => mean,
    }
}

/// Zero-mean Laplace variate with scale `b` by CDF inversion.
fn laplace<R: Rng + ?Sized>(b: f64, rng: &mut R) -> f64 {
    // u in (-0.5, 0.5); the open lower end keeps ln() finite.
    let u: f64 = loop {
        let u = rng.random::<f64>() - 0.5;
        if u > -0.5 {
            break u;
        }
    };
    -b * u.signum() * libm::log(1.0 - 2.0 * u.abs())
}

/// Smallest box containing every `patch_w` x `patch_h` rectangle centred on
/// `centres`.
pub fn enclosing_aabb(centres: &[Point], patch_w: f64, patch_h: f64) -> Result<Box> {
    let first = centres.first().ok_or(Error::Empty("patch centres"))?;
    let (mut x0, mut y0, mut x1, mut y1) = (first.x, first.y, first.x, first.y);
    for p in &centres[1..] {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    Ok(Box::new(
        x0 - patch_w / 2.0,
        y0 - patch_h / 2.0,
        x1 - x0 + patch_w,
        y1 - y0 + patch_h,
    ))
}

/// Grows width and height by `(1 + factor)` about the box centre.
pub fn expand_box(b: &Box, factor: f64) -> Box {
    Box::from_centre(b.centre(), b.w * (1.0 + factor), b.h * (1.0 + factor))
}

/// Intersection over union; 0 when the union is empty.
pub fn iou(a: &Box, b: &Box) -> f64 {
    let inter = a.intersect(b).map_or(0.0, |i| i.area());
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

/// Distance between box centres.
pub fn centre_error(a: &Box, b: &Box) -> f64 {
    a.centre().dist(b.centre())
}
