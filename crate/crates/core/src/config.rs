use crate::error::{Error, Result};
use crate::geometry::MotionPriors;
use crate::placement::SegmenterConfig;

/// Stage switches for ablation runs. Each one disables exactly one stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Ablation {
    /// Skip the per-patch window search (equivalent to `L = 0`).
    pub no_local_opt: bool,
    /// Keep the frame-one models for the whole sequence.
    pub no_update: bool,
    /// Treat the whole initial box as object.
    pub no_segmentation: bool,
    /// Lay patches on a regular grid over the initial box.
    pub uniform_placement: bool,
    /// Use `b = 1/2`, the plain Bhattacharyya (Hellinger) distance.
    pub default_mbd: bool,
}

impl Ablation {
    pub const SWITCHES: [&'static str; 5] = [
        "no_local_opt",
        "no_update",
        "no_segmentation",
        "uniform_placement",
        "default_mbd",
    ];

    /// Turns on a switch by name.
    pub fn enable(&mut self, name: &str) -> Result<()> {
        *self.switch_mut(name)? = true;
        Ok(())
    }

    pub fn switch_mut(&mut self, name: &str) -> Result<&mut bool> {
        Ok(match name {
            "no_local_opt" => &mut self.no_local_opt,
            "no_update" => &mut self.no_update,
            "no_segmentation" => &mut self.no_segmentation,
            "uniform_placement" => &mut self.uniform_placement,
            "default_mbd" => &mut self.default_mbd,
            _ => return Err(Error::InvalidParameter("unknown ablation switch")),
        })
    }

    pub fn get(&self, name: &str) -> Option<bool> {
        Some(match name {
            "no_local_opt" => self.no_local_opt,
            "no_update" => self.no_update,
            "no_segmentation" => self.no_segmentation,
            "uniform_placement" => self.uniform_placement,
            "default_mbd" => self.default_mbd,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    /// Maximum number of patches `P`.
    pub patches: usize,
    pub patch_w: usize,
    pub patch_h: usize,
    /// RGB matching radius `R`.
    pub radius: f64,
    /// MBD exponent `b`.
    pub mbd_exponent: f64,
    /// Count update rate.
    pub beta_c: f64,
    /// Centre update rate.
    pub beta_s: f64,
    /// Maximum overlap between placed patches, as a fraction of patch area.
    pub gamma: f64,
    /// Pairs kept per model at initialisation.
    pub s_max: usize,
    /// Global transform candidates per frame `G`.
    pub candidates: usize,
    /// Candidates refined by window search `L`.
    pub refined: usize,
    /// Side of the square local search window `W` (odd).
    pub window: usize,
    /// Growth applied to the patches' enclosing box when reporting.
    pub expand: f64,
    pub priors: MotionPriors,
    pub segmenter: SegmenterConfig,
    pub ablation: Ablation,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            patches: 35,
            patch_w: 5,
            patch_h: 5,
            radius: 20.0,
            mbd_exponent: 1.4,
            beta_c: 0.05,
            beta_s: 1.7,
            gamma: 0.25,
            s_max: 10,
            candidates: 1000,
            refined: 100,
            window: 5,
            expand: 0.2,
            priors: MotionPriors::default(),
            segmenter: SegmenterConfig::default(),
            ablation: Ablation::default(),
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patches == 0 {
            return Err(Error::InvalidParameter("patches must be at least 1"));
        }
        if self.patch_w == 0 || self.patch_h == 0 {
            return Err(Error::InvalidParameter("patch size must be positive"));
        }
        if !(self.radius > 0.0) {
            return Err(Error::InvalidParameter("radius must be positive"));
        }
        if !(self.mbd_exponent >= 0.0) {
            return Err(Error::InvalidParameter("mbd_exponent must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.beta_c) {
            return Err(Error::InvalidParameter("beta_c must lie in [0, 1]"));
        }
        if !(self.beta_s >= 0.0) {
            return Err(Error::InvalidParameter("beta_s must be non-negative"));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidParameter("gamma must be positive"));
        }
        if self.s_max == 0 {
            return Err(Error::InvalidParameter("s_max must be at least 1"));
        }
        if self.candidates == 0 {
            return Err(Error::InvalidParameter("candidates must be at least 1"));
        }
        if self.window % 2 == 0 {
            return Err(Error::InvalidParameter("window must be odd"));
        }
        if !(self.expand >= 0.0) {
            return Err(Error::InvalidParameter("expand must be non-negative"));
        }
        self.priors.validate()?;
        self.segmenter.validate()
    }

    /// MBD exponent after the `default_mbd` switch.
    pub fn effective_exponent(&self) -> f64 {
        if self.ablation.default_mbd {
            0.5
        } else {
            self.mbd_exponent
        }
    }

    /// Refined candidate count after the `no_local_opt` switch.
    pub fn effective_refined(&self) -> usize {
        if self.ablation.no_local_opt {
            0
        } else {
            self.refined.min(self.candidates)
        }
    }
}
