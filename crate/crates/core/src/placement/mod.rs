//! Frame-one patch placement: segment the likely object pixels inside the
//! initial box, superpixel them, and drop patches on superpixel centroids.

mod segment;
mod slico;

use alloc::vec::Vec;

pub use segment::{segment_object, SegmenterConfig};
pub use slico::{slico_superpixels, srgb_to_lab, SLICO_ITERATIONS};

use crate::error::{Error, Result};
use crate::geometry::{Box, Point};

/// Integer pixel rectangle inside a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRegion {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl PixelRegion {
    /// Pixels whose centres fall inside `b`, clipped to the frame.
    pub fn from_box(b: &Box, frame_w: usize, frame_h: usize) -> Result<Self> {
        if !b.is_finite() {
            return Err(Error::InvalidParameter("bounding box is not finite"));
        }
        let x0 = libm::floor(b.x).max(0.0);
        let y0 = libm::floor(b.y).max(0.0);
        let x1 = libm::ceil(b.right()).min(frame_w as f64);
        let y1 = libm::ceil(b.bottom()).min(frame_h as f64);
        if x1 <= x0 || y1 <= y0 {
            return Err(Error::BoxOutsideFrame);
        }
        Ok(Self {
            x0: x0 as usize,
            y0: y0 as usize,
            w: (x1 - x0) as usize,
            h: (y1 - y0) as usize,
        })
    }

    pub fn len(&self) -> usize {
        self.w * self.h
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.w + x
    }
}

/// Binary likely-object mask over a [`PixelRegion`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectMask {
    pub region: PixelRegion,
    pub data: Vec<bool>,
}

impl ObjectMask {
    pub fn all_true(region: PixelRegion) -> Self {
        Self {
            region,
            data: alloc::vec![true; region.len()],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[self.region.index(x, y)]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&m| m).count()
    }
}

/// Superpixel label raster; `None` marks pixels outside the object mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperpixelLabels {
    pub region: PixelRegion,
    pub frame_w: usize,
    pub frame_h: usize,
    pub labels: Vec<Option<u32>>,
    pub count: usize,
}

impl SuperpixelLabels {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<u32> {
        self.labels[self.region.index(x, y)]
    }

    /// Pixel count of every label.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0usize; self.count];
        for l in self.labels.iter().flatten() {
            sizes[*l as usize] += 1;
        }
        sizes
    }

    /// Mean pixel coordinate of every label, in frame coordinates.
    pub fn centroids(&self) -> Vec<Point> {
        let mut sum = alloc::vec![(0.0f64, 0.0f64, 0usize); self.count];
        for y in 0..self.region.h {
            for x in 0..self.region.w {
                if let Some(l) = self.get(x, y) {
                    let s = &mut sum[l as usize];
                    s.0 += (self.region.x0 + x) as f64;
                    s.1 += (self.region.y0 + y) as f64;
                    s.2 += 1;
                }
            }
        }
        sum.into_iter()
            .map(|(sx, sy, n)| Point::new(sx / n.max(1) as f64, sy / n.max(1) as f64))
            .collect()
    }
}

/// Area shared by two equal `w` x `h` rectangles centred on `a` and `b`.
pub fn patch_overlap(a: Point, b: Point, w: f64, h: f64) -> f64 {
    let ox = (w - libm::fabs(a.x - b.x)).max(0.0);
    let oy = (h - libm::fabs(a.y - b.y)).max(0.0);
    ox * oy
}

/// Greedy placement on superpixel centroids, largest superpixel first.
///
/// A centroid is accepted only if its patch overlaps every accepted patch by
/// less than `gamma` of one patch's area. Stops after `max_patches` or when
/// the superpixels run out.
pub fn place_patches(
    labels: &SuperpixelLabels,
    max_patches: usize,
    patch_w: usize,
    patch_h: usize,
    gamma: f64,
) -> Vec<Point> {
    let sizes = labels.sizes();
    let centroids = labels.centroids();
    let mut order: Vec<usize> = (0..labels.count).filter(|&l| sizes[l] > 0).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));

    let (w, h) = (patch_w as f64, patch_h as f64);
    let limit = gamma * w * h;
    let mut accepted: Vec<Point> = Vec::new();
    for l in order {
        if accepted.len() >= max_patches {
            break;
        }
        let c = clamp_centre(centroids[l], labels.frame_w, labels.frame_h, patch_w, patch_h);
        if accepted
            .iter()
            .all(|&a| patch_overlap(a, c, w, h) < limit)
        {
            accepted.push(c);
        }
    }
    accepted
}

/// Rounds to the nearest pixel and keeps the whole patch inside the frame
/// where the frame is large enough.
pub(crate) fn clamp_centre(
    c: Point,
    frame_w: usize,
    frame_h: usize,
    patch_w: usize,
    patch_h: usize,
) -> Point {
    let clamp_axis = |v: f64, extent: usize, patch: usize| {
        let lo = ((patch - 1) / 2) as f64;
        let hi = extent as f64 - 1.0 - (patch / 2) as f64;
        let v = libm::round(v);
        if lo <= hi {
            v.clamp(lo, hi)
        } else {
            v.clamp(0.0, (extent.max(1) - 1) as f64)
        }
    };
    Point::new(
        clamp_axis(c.x, frame_w, patch_w),
        clamp_axis(c.y, frame_h, patch_h),
    )
}
