//! The tracking loop: place and model patches on frame one, then localise
//! and update on every following frame.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::colour_model::PatchModel;
use crate::config::TrackerConfig;
use crate::error::{Error, Result};
use crate::geometry::{Box, Point};
use crate::image::Image;
use crate::localisation::{extract_patch_pixels, localise, Localisation};
use crate::placement::{
    clamp_centre, place_patches, segment_object, slico_superpixels, ObjectMask, PixelRegion,
    SuperpixelLabels,
};

/// Independent random streams, one per pipeline stage, all derived from the
/// master seed. Disabling one stage never shifts another stage's draws.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStreams {
    pub segmentation: ChaCha8Rng,
    pub placement: ChaCha8Rng,
    pub model: ChaCha8Rng,
    pub transform: ChaCha8Rng,
    pub tie: ChaCha8Rng,
}

impl RngStreams {
    pub const COUNT: usize = 5;

    pub fn from_seed(seed: u64) -> Self {
        let stream = |id: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id);
            rng
        };
        Self {
            segmentation: stream(0),
            placement: stream(1),
            model: stream(2),
            transform: stream(3),
            tie: stream(4),
        }
    }

    pub fn as_array(&self) -> [&ChaCha8Rng; Self::COUNT] {
        [
            &self.segmentation,
            &self.placement,
            &self.model,
            &self.transform,
            &self.tie,
        ]
    }

    pub fn from_array(streams: [ChaCha8Rng; Self::COUNT]) -> Self {
        let [segmentation, placement, model, transform, tie] = streams;
        Self {
            segmentation,
            placement,
            model,
            transform,
            tie,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerState {
    pub patches: Vec<PatchModel>,
    pub prev_box: Box,
    pub frame_index: u64,
    pub rng: RngStreams,
}

/// Intermediate products of initialisation, for inspection and debug dumps.
#[derive(Debug, Clone, PartialEq)]
pub struct InitDiagnostics {
    /// The initial box clipped to the frame.
    pub bbox: Box,
    pub mask: ObjectMask,
    /// `None` under uniform placement.
    pub labels: Option<SuperpixelLabels>,
    pub centres: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub predicted: Box,
    pub qualities: Vec<f64>,
    /// Mean patch quality of the reported layout.
    pub quality: f64,
    pub localisation: Localisation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tracker {
    cfg: TrackerConfig,
    state: TrackerState,
}

impl Tracker {
    pub fn init(frame: &Image, bbox: &Box, cfg: &TrackerConfig, seed: u64) -> Result<Self> {
        Self::init_with_diagnostics(frame, bbox, cfg, seed).map(|(t, _)| t)
    }

    pub fn init_with_diagnostics(
        frame: &Image,
        bbox: &Box,
        cfg: &TrackerConfig,
        seed: u64,
    ) -> Result<(Self, InitDiagnostics)> {
        cfg.validate()?;
        if frame.is_empty() {
            return Err(Error::Empty("frame"));
        }
        let frame_box = Box::new(0.0, 0.0, frame.width() as f64, frame.height() as f64);
        let bbox = bbox.intersect(&frame_box).ok_or(Error::BoxOutsideFrame)?;
        let region = PixelRegion::from_box(&bbox, frame.width(), frame.height())?;
        let mut rng = RngStreams::from_seed(seed);

        let mask = if cfg.ablation.no_segmentation {
            ObjectMask::all_true(region)
        } else {
            segment_object(frame, &bbox, &cfg.segmenter, &mut rng.segmentation)?
        };

        let (labels, mut centres) = if cfg.ablation.uniform_placement {
            (None, uniform_grid(&bbox, frame, cfg))
        } else {
            let labels = slico_superpixels(frame, &mask, cfg.patches, &mut rng.placement)?;
            let centres = place_patches(&labels, cfg.patches, cfg.patch_w, cfg.patch_h, cfg.gamma);
            (Some(labels), centres)
        };
        if centres.is_empty() {
            centres.push(clamp_centre(
                bbox.centre(),
                frame.width(),
                frame.height(),
                cfg.patch_w,
                cfg.patch_h,
            ));
        }

        let mut patches = Vec::with_capacity(centres.len());
        for &c in &centres {
            let px = extract_patch_pixels(frame, c, cfg.patch_w, cfg.patch_h);
            if px.is_empty() {
                continue;
            }
            patches.push(PatchModel::init(
                &px,
                c,
                cfg.patch_w,
                cfg.patch_h,
                cfg.radius,
                cfg.s_max,
                &mut rng.model,
            )?);
        }
        if patches.is_empty() {
            return Err(Error::Empty("placeable patches"));
        }

        let tracker = Self {
            cfg: *cfg,
            state: TrackerState {
                patches,
                prev_box: bbox,
                frame_index: 0,
                rng,
            },
        };
        let diagnostics = InitDiagnostics {
            bbox,
            mask,
            labels,
            centres,
        };
        Ok((tracker, diagnostics))
    }

    /// Tracks the object into the next frame.
    pub fn step(&mut self, frame: &Image) -> Result<StepOutput> {
        let cfg = &self.cfg;
        let state = &mut self.state;
        let loc = localise(
            frame,
            &state.patches,
            &state.prev_box,
            cfg,
            &mut state.rng.transform,
            &mut state.rng.tie,
        )?;

        for (patch, &c) in state.patches.iter_mut().zip(&loc.best.patch_centres) {
            patch.location = c;
        }
        if !cfg.ablation.no_update {
            for patch in &mut state.patches {
                let px = extract_patch_pixels(frame, patch.location, patch.patch_w, patch.patch_h);
                // Patches mostly off-frame would learn from too few pixels.
                if 2 * px.len() >= patch.area() {
                    patch.update(&px, cfg.beta_c, cfg.beta_s, &mut state.rng.model);
                }
            }
        }
        state.prev_box = loc.predicted;
        state.frame_index += 1;

        Ok(StepOutput {
            predicted: loc.predicted,
            qualities: loc.best.patch_qualities.clone(),
            quality: loc.best.quality,
            localisation: loc,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn state(&self) -> &TrackerState {
        &self.state
    }

    pub fn patch_centres(&self) -> Vec<Point> {
        self.state.patches.iter().map(|p| p.location).collect()
    }

    pub(crate) fn from_parts(cfg: TrackerConfig, state: TrackerState) -> Self {
        Self { cfg, state }
    }
}

/// `ceil(sqrt(P))^2` cell centres over the box, row-major, first `P` kept.
fn uniform_grid(bbox: &Box, frame: &Image, cfg: &TrackerConfig) -> Vec<Point> {
    let n = libm::ceil(libm::sqrt(cfg.patches as f64)) as usize;
    let (cw, ch) = (bbox.w / n as f64, bbox.h / n as f64);
    (0..n)
        .flat_map(|gy| (0..n).map(move |gx| (gx, gy)))
        .take(cfg.patches)
        .map(|(gx, gy)| {
            let c = Point::new(
                bbox.x + (gx as f64 + 0.5) * cw,
                bbox.y + (gy as f64 + 0.5) * ch,
            );
            clamp_centre(c, frame.width(), frame.height(), cfg.patch_w, cfg.patch_h)
        })
        .collect()
}
