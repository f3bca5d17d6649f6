//! Plain-text configuration.
//!
//! One `key = value` per line; `#` starts a comment. Keys are the
//! [`TrackerConfig`] field names, with nested structs written as
//! `priors.sigma_x`, `segmenter.tau` and `ablation.no_update`. `reinit_skip`
//! sets the harness re-initialisation delay. Unknown keys are rejected.

use std::fmt::Write as _;
use std::path::Path;

use pbts_core::{Ablation, TrackerConfig};

use crate::error::{Error, Result};

/// Frames between a failure and the re-initialisation in supervised runs.
pub const DEFAULT_REINIT_SKIP: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub tracker: TrackerConfig,
    pub reinit_skip: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tracker: TrackerConfig::default(),
            reinit_skip: DEFAULT_REINIT_SKIP,
        }
    }
}

macro_rules! stringify_key {
    ($k:literal) => {
        $k
    };
    ($k:ident) => {
        stringify!($k)
    };
}

macro_rules! fields {
    ($m:ident) => {
        $m!(
            patches: usize = tracker.patches,
            patch_w: usize = tracker.patch_w,
            patch_h: usize = tracker.patch_h,
            radius: f64 = tracker.radius,
            mbd_exponent: f64 = tracker.mbd_exponent,
            beta_c: f64 = tracker.beta_c,
            beta_s: f64 = tracker.beta_s,
            gamma: f64 = tracker.gamma,
            s_max: usize = tracker.s_max,
            candidates: usize = tracker.candidates,
            refined: usize = tracker.refined,
            window: usize = tracker.window,
            expand: f64 = tracker.expand,
            "priors.sigma_rotation": f64 = tracker.priors.sigma_rotation,
            "priors.sigma_scale": f64 = tracker.priors.sigma_scale,
            "priors.sigma_x": f64 = tracker.priors.sigma_x,
            "priors.sigma_y": f64 = tracker.priors.sigma_y,
            "segmenter.rho_inner": f64 = tracker.segmenter.rho_inner,
            "segmenter.rho_outer": f64 = tracker.segmenter.rho_outer,
            "segmenter.tau": f64 = tracker.segmenter.tau,
            "segmenter.lambda": f64 = tracker.segmenter.lambda,
            reinit_skip: usize = reinit_skip,
        )
    };
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse("config", i + 1, "expected `key = value`"))?;
            s.set(key.trim(), value.trim())
                .map_err(|msg| Error::parse("config", i + 1, msg))?;
        }
        s.tracker.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        Self::parse(&text)
    }

    /// Sets one field by its config key.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        macro_rules! set_field {
            ($($k:tt : $t:ty = $($f:ident).+),* $(,)?) => {
                match key {
                    $(k if k == stringify_key!($k) => {
                        self.$($f).+ = value
                            .parse::<$t>()
                            .map_err(|e| format!("{key}: {e}"))?;
                        return Ok(());
                    })*
                    _ => {}
                }
            };
        }
        fields!(set_field);

        if let Some(name) = key.strip_prefix("ablation.") {
            let flag = parse_bool(value).ok_or_else(|| format!("{key}: expected true or false"))?;
            let slot = self
                .tracker
                .ablation
                .switch_mut(name)
                .map_err(|_| format!("unknown ablation switch `{name}`"))?;
            *slot = flag;
            return Ok(());
        }
        Err(format!("unknown key `{key}`"))
    }

    /// Renders every field; `parse` of the output gives back `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        macro_rules! write_field {
            ($($k:tt : $t:ty = $($f:ident).+),* $(,)?) => {
                $(writeln!(out, "{} = {}", stringify_key!($k), self.$($f).+).unwrap();)*
            };
        }
        fields!(write_field);
        for name in Ablation::SWITCHES {
            let on = self.tracker.ablation.get(name).unwrap_or(false);
            writeln!(out, "ablation.{name} = {on}").unwrap();
        }
        out
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}
