//! Default object segmenter.
//!
//! Colour-sample models are built from an inner core of the box (object
//! prior) and from a ring around it (background prior). A box pixel is kept
//! when it matches the object model and its object share of the two
//! normalised match densities, after mean filtering, exceeds `tau`.

use alloc::vec::Vec;

use rand::Rng;

use super::{ObjectMask, PixelRegion};
use crate::colour_model::PatchModel;
use crate::error::{Error, Result};
use crate::geometry::{Box, Point};
use crate::image::{Image, Rgb};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmenterConfig {
    /// Shrink factor of the object prior region.
    pub rho_inner: f64,
    /// Grow factor of the outer edge of the background ring.
    pub rho_outer: f64,
    /// Object-share threshold.
    pub tau: f64,
    /// Smoothing weight; the score field is mean filtered `ceil(1 / (100 lambda))` times.
    pub lambda: f64,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self {
            rho_inner: 0.8,
            rho_outer: 1.2,
            tau: 0.85,
            lambda: 1e-2,
        }
    }
}

impl SegmenterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_inner > 0.0 && self.rho_inner <= 1.0 && self.rho_outer >= 1.0) {
            return Err(Error::InvalidParameter("segmenter needs 0 < rho- <= 1 <= rho+"));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidParameter("segmenter tau must lie in (0, 1)"));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidParameter("segmenter lambda must be non-negative"));
        }
        Ok(())
    }

    fn smoothing_passes(&self) -> usize {
        const MAX_PASSES: usize = 50;
        if self.lambda <= 0.0 {
            return MAX_PASSES;
        }
        (libm::ceil(1.0 / (100.0 * self.lambda)) as usize).min(MAX_PASSES)
    }
}

/// Minimum fraction of object pixels below which the mask falls back to the
/// whole box.
const MIN_OBJECT_FRACTION: f64 = 0.05;

// Larger than the tracker's radius would blur nearby object/background
// colours together; the tracker's own default is used.
const SEGMENT_RADIUS: f64 = 20.0;

pub fn segment_object<R: Rng + ?Sized>(
    image: &Image,
    bbox: &Box,
    cfg: &SegmenterConfig,
    rng: &mut R,
) -> Result<ObjectMask> {
    let region = PixelRegion::from_box(bbox, image.width(), image.height())?;
    if bbox.w < 3.0 || bbox.h < 3.0 {
        return Ok(ObjectMask::all_true(region));
    }

    let c = bbox.centre();
    let inner = Box::from_centre(c, bbox.w * cfg.rho_inner, bbox.h * cfg.rho_inner);
    let outer = Box::from_centre(c, bbox.w * cfg.rho_outer, bbox.h * cfg.rho_outer);

    let object_px = pixels_where(image, &inner, |_, _| true);
    let background_px = pixels_where(image, &outer, |x, y| !contains_pixel(bbox, x, y));
    if object_px.is_empty() {
        return Ok(ObjectMask::all_true(region));
    }

    let object = prior_model(&object_px, rng)?;
    let background = match background_px.is_empty() {
        true => None,
        false => Some(prior_model(&background_px, rng)?),
    };
    let density = |m: &PatchModel, px: Rgb| -> Option<f64> {
        m.nearest(px).map(|s| m.pairs()[s].count / m.area() as f64)
    };

    let mut score = alloc::vec![0.0f64; region.len()];
    let mut matchable = alloc::vec![false; region.len()];
    for y in 0..region.h {
        for x in 0..region.w {
            let px = image.get(region.x0 + x, region.y0 + y);
            let i = region.index(x, y);
            if let Some(o) = density(&object, px) {
                matchable[i] = true;
                let b = background
                    .as_ref()
                    .and_then(|m| density(m, px))
                    .unwrap_or(0.0);
                score[i] = o / (o + b);
            }
        }
    }

    for _ in 0..cfg.smoothing_passes() {
        score = mean_filter_3x3(&score, region.w, region.h);
    }

    let data: Vec<bool> = score
        .iter()
        .zip(&matchable)
        .map(|(&s, &m)| m && s > cfg.tau)
        .collect();
    let mask = ObjectMask { region, data };
    if (mask.count() as f64) < MIN_OBJECT_FRACTION * region.len() as f64 {
        return Ok(ObjectMask::all_true(region));
    }
    Ok(mask)
}

/// A prior model is a patch model covering the whole sample set, with no cap
/// on the number of centres.
fn prior_model<R: Rng + ?Sized>(pixels: &[Rgb], rng: &mut R) -> Result<PatchModel> {
    PatchModel::init(
        pixels,
        Point::default(),
        pixels.len(),
        1,
        SEGMENT_RADIUS,
        usize::MAX,
        rng,
    )
}

fn contains_pixel(b: &Box, x: usize, y: usize) -> bool {
    let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
    px > b.x && px < b.right() && py > b.y && py < b.bottom()
}

fn pixels_where(image: &Image, b: &Box, keep: impl Fn(usize, usize) -> bool) -> Vec<Rgb> {
    let Ok(r) = PixelRegion::from_box(b, image.width(), image.height()) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for y in r.y0..r.y0 + r.h {
        for x in r.x0..r.x0 + r.w {
            if keep(x, y) {
                out.push(image.get(x, y));
            }
        }
    }
    out
}

/// 3x3 box filter; border pixels average over their in-bounds neighbours.
fn mean_filter_3x3(src: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut out = alloc::vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            let (mut sum, mut n) = (0.0, 0u32);
            for ny in y.saturating_sub(1)..(y + 2).min(h) {
                for nx in x.saturating_sub(1)..(x + 2).min(w) {
                    sum += src[ny * w + nx];
                    n += 1;
                }
            }
            out[y * w + x] = sum / n as f64;
        }
    }
    out
}
