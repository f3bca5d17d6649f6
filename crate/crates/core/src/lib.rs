//! Part-based single-object tracking with sparse colour-sample patch models.
//!
//! The object is represented by a set of small patches, each carrying a
//! sample-based colour histogram. Every frame, the patch layout is moved by
//! randomly sampled similarity transforms, the best layouts are refined patch
//! by patch, and the models are updated at the new locations.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. The `parallel` feature spreads the per-patch scoring over a rayon
//! pool without changing any result.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod colour_model;
pub mod config;
pub mod error;
pub mod geometry;
pub mod image;
pub mod localisation;
pub mod placement;
pub mod snapshot;
pub mod tracker;

pub use colour_model::{
    bhattacharyya_coefficient, mbd, object_quality, patch_quality, CentreCount, ColourCentre,
    MatchHistogram, PatchModel,
};
pub use config::{Ablation, TrackerConfig};
pub use error::{Error, Result};
pub use geometry::{
    centre_error, enclosing_aabb, expand_box, iou, sample_transform, Box, MotionPriors, Point,
    TransformParams,
};
pub use image::{Image, Rgb};
pub use localisation::{extract_patch_pixels, localise, CandidateSet, Localisation};
pub use placement::{
    place_patches, segment_object, slico_superpixels, ObjectMask, PixelRegion, SegmenterConfig,
    SuperpixelLabels,
};
pub use snapshot::{restore, snapshot};
pub use tracker::{InitDiagnostics, RngStreams, StepOutput, Tracker, TrackerState};
