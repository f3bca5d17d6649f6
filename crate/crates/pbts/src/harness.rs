//! Evaluation protocols.
//!
//! *Supervised*: the tracker starts from the first ground-truth box. A frame
//! whose prediction does not overlap the ground truth at all is a failure;
//! the tracker then sits out until `reinit_skip` frames after the failure and
//! restarts from the ground truth there.
//!
//! *One-pass*: a single initialisation and no restarts. Zero-overlap frames
//! are still marked as failures, but tracking simply continues.
//!
//! Scoring uses every frame that was actually tracked (failures included);
//! initialisation and skipped frames are excluded. The average overlap (AO)
//! is the mean IoU over tracked frames that did not fail.

use std::time::Instant;

use pbts_core::{centre_error, iou, Box, Image, InitDiagnostics, Tracker, TrackerConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::Sequence;

pub const SUCCESS_THRESHOLDS: usize = 21;
pub const PRECISION_THRESHOLDS: usize = 51;
/// Centre-error threshold reported as the precision summary.
pub const PRECISION_SUMMARY_PX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub bbox: Box,
    pub quality: f64,
}

/// Anything that can be run through the protocols.
pub trait FrameTracker {
    /// Starts (or restarts) tracking at `frame_index` from `bbox`.
    fn init(&mut self, frame: &Image, bbox: &Box, frame_index: usize) -> Result<()>;
    fn track(&mut self, frame: &Image, frame_index: usize) -> Result<Prediction>;
}

/// The part-based tracker behind [`FrameTracker`].
///
/// Restarts reseed from `(seed, frame index)` so that a run is reproducible
/// no matter where failures happen.
pub struct PbtsTracker {
    cfg: TrackerConfig,
    seed: u64,
    inner: Option<Tracker>,
    /// Segmentation and superpixels of the first initialisation.
    pub first_init: Option<InitDiagnostics>,
}

impl PbtsTracker {
    pub fn new(cfg: TrackerConfig, seed: u64) -> Self {
        Self {
            cfg,
            seed,
            inner: None,
            first_init: None,
        }
    }

    pub fn tracker(&self) -> Option<&Tracker> {
        self.inner.as_ref()
    }

    fn seed_for(&self, frame_index: usize) -> u64 {
        if frame_index == 0 {
            self.seed
        } else {
            self.seed ^ (frame_index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        }
    }
}

impl FrameTracker for PbtsTracker {
    fn init(&mut self, frame: &Image, bbox: &Box, frame_index: usize) -> Result<()> {
        let (t, diag) =
            Tracker::init_with_diagnostics(frame, bbox, &self.cfg, self.seed_for(frame_index))?;
        self.inner = Some(t);
        if self.first_init.is_none() {
            self.first_init = Some(diag);
        }
        Ok(())
    }

    fn track(&mut self, frame: &Image, _frame_index: usize) -> Result<Prediction> {
        let t = self
            .inner
            .as_mut()
            .ok_or_else(|| Error::Invalid("track called before init".into()))?;
        let out = t.step(frame)?;
        Ok(Prediction {
            bbox: out.predicted,
            quality: out.quality,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Supervised,
    OnePass,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "supervised" => Ok(Mode::Supervised),
            "onepass" => Ok(Mode::OnePass),
            _ => Err(Error::Invalid(format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameState {
    Init,
    Tracked,
    Failure,
    Skipped,
}

impl FrameState {
    pub fn as_str(self) -> &'static str {
        match self {
            FrameState::Init => "init",
            FrameState::Tracked => "tracked",
            FrameState::Failure => "failure",
            FrameState::Skipped => "skipped",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "init" => FrameState::Init,
            "tracked" => FrameState::Tracked,
            "failure" => FrameState::Failure,
            "skipped" => FrameState::Skipped,
            _ => return None,
        })
    }

    /// Whether the frame counts towards the metrics.
    pub fn is_scored(self) -> bool {
        matches!(self, FrameState::Tracked | FrameState::Failure)
    }
}

/// One row of the per-frame results. Missing values are `None`: init frames
/// carry only the box, skipped frames carry nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameRecord {
    pub frame: usize,
    pub state: FrameState,
    pub bbox: Option<Box>,
    pub iou: Option<f64>,
    pub centre_error: Option<f64>,
    pub quality: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub sequence: String,
    pub mode: Mode,
    pub records: Vec<FrameRecord>,
    /// Wall time spent inside `track` calls only.
    pub track_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveData {
    /// `(IoU threshold, fraction of frames with IoU above it)`.
    pub success: Vec<(f64, f64)>,
    /// `(pixel threshold, fraction of frames with centre error at most it)`.
    pub precision: Vec<(f64, f64)>,
}

impl CurveData {
    pub fn from_records(records: &[FrameRecord]) -> Self {
        let scored: Vec<&FrameRecord> = records.iter().filter(|r| r.state.is_scored()).collect();
        let n = scored.len().max(1) as f64;
        let success = (0..SUCCESS_THRESHOLDS)
            .map(|i| {
                let t = i as f64 / (SUCCESS_THRESHOLDS - 1) as f64;
                let k = scored.iter().filter(|r| r.iou.unwrap_or(0.0) > t).count();
                (t, k as f64 / n)
            })
            .collect();
        let precision = (0..PRECISION_THRESHOLDS)
            .map(|i| {
                let t = i as f64;
                let k = scored
                    .iter()
                    .filter(|r| r.centre_error.is_some_and(|e| e <= t))
                    .count();
                (t, k as f64 / n)
            })
            .collect();
        Self { success, precision }
    }

    /// Area under the success curve, as the mean over thresholds.
    pub fn auc(&self) -> f64 {
        self.success.iter().map(|s| s.1).sum::<f64>() / self.success.len() as f64
    }

    pub fn precision_at_20(&self) -> f64 {
        self.precision[PRECISION_SUMMARY_PX].1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub sequence: String,
    pub mode: Mode,
    pub frames: usize,
    pub scored_frames: usize,
    #[serde(rename = "AO")]
    pub ao: f64,
    pub failures: usize,
    /// Failures per video.
    pub robustness: f64,
    #[serde(rename = "AUC")]
    pub auc: f64,
    pub precision_20: f64,
    /// Frames per second over `track` calls; `None` when recomputed from files.
    pub fps: Option<f64>,
}

impl RunResult {
    pub fn failures(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.state == FrameState::Failure)
            .count()
    }

    pub fn failure_frames(&self) -> Vec<usize> {
        self.frames_in(FrameState::Failure)
    }

    pub fn init_frames(&self) -> Vec<usize> {
        self.frames_in(FrameState::Init)
    }

    fn frames_in(&self, state: FrameState) -> Vec<usize> {
        self.records
            .iter()
            .filter(|r| r.state == state)
            .map(|r| r.frame)
            .collect()
    }

    pub fn curves(&self) -> CurveData {
        CurveData::from_records(&self.records)
    }

    pub fn summary(&self) -> Summary {
        let mut s = summarise(&self.sequence, self.mode, &self.records);
        let tracked = self.records.iter().filter(|r| r.state.is_scored()).count();
        s.fps = (self.track_seconds > 0.0).then(|| tracked as f64 / self.track_seconds);
        s
    }
}

/// Metrics that depend only on the per-frame records.
pub fn summarise(sequence: &str, mode: Mode, records: &[FrameRecord]) -> Summary {
    let good: Vec<f64> = records
        .iter()
        .filter(|r| r.state == FrameState::Tracked)
        .filter_map(|r| r.iou)
        .collect();
    let ao = if good.is_empty() {
        0.0
    } else {
        good.iter().sum::<f64>() / good.len() as f64
    };
    let failures = records
        .iter()
        .filter(|r| r.state == FrameState::Failure)
        .count();
    let curves = CurveData::from_records(records);
    Summary {
        sequence: sequence.to_owned(),
        mode,
        frames: records.len(),
        scored_frames: records.iter().filter(|r| r.state.is_scored()).count(),
        ao,
        failures,
        robustness: failures as f64,
        auc: curves.auc(),
        precision_20: curves.precision_at_20(),
        fps: None,
    }
}

/// Averages per-video summaries; robustness becomes failures per video.
pub fn mean_summary(name: &str, summaries: &[Summary]) -> Option<Summary> {
    let first = summaries.first()?;
    let n = summaries.len() as f64;
    let mean = |f: fn(&Summary) -> f64| summaries.iter().map(f).sum::<f64>() / n;
    let fps: Option<Vec<f64>> = summaries.iter().map(|s| s.fps).collect();
    Some(Summary {
        sequence: name.to_owned(),
        mode: first.mode,
        frames: summaries.iter().map(|s| s.frames).sum(),
        scored_frames: summaries.iter().map(|s| s.scored_frames).sum(),
        ao: mean(|s| s.ao),
        failures: summaries.iter().map(|s| s.failures).sum(),
        robustness: mean(|s| s.failures as f64),
        auc: mean(|s| s.auc),
        precision_20: mean(|s| s.precision_20),
        fps: fps.map(|v| v.iter().sum::<f64>() / n),
    })
}

fn scored(frame: usize, state: FrameState, p: &Prediction, gt: &Box) -> FrameRecord {
    FrameRecord {
        frame,
        state,
        bbox: Some(p.bbox),
        iou: Some(iou(&p.bbox, gt)),
        centre_error: Some(centre_error(&p.bbox, gt)),
        quality: Some(p.quality),
    }
}

/// Runs `tracker` over `seq` under `mode`. Frame decode time is not counted.
pub fn run(
    seq: &Sequence,
    tracker: &mut dyn FrameTracker,
    mode: Mode,
    reinit_skip: usize,
) -> Result<RunResult> {
    if reinit_skip == 0 {
        return Err(Error::Invalid("reinit_skip must be at least 1".into()));
    }
    let boxes = seq.boxes();
    let mut records = Vec::with_capacity(seq.len());
    let mut seconds = 0.0;
    let mut pending_init = Some(0usize);

    for (f, gt) in boxes.iter().enumerate() {
        let blank = FrameRecord {
            frame: f,
            state: FrameState::Skipped,
            bbox: None,
            iou: None,
            centre_error: None,
            quality: None,
        };
        match pending_init {
            Some(at) if at > f => records.push(blank),
            Some(_) => {
                let frame = seq.frame(f)?;
                match tracker.init(&frame, gt, f) {
                    Ok(()) => {
                        pending_init = None;
                        records.push(FrameRecord {
                            state: FrameState::Init,
                            bbox: Some(*gt),
                            ..blank
                        });
                    }
                    Err(e) if f == 0 => return Err(e),
                    // The target is not initialisable here (e.g. off-frame); retry next frame.
                    Err(_) => {
                        pending_init = Some(f + 1);
                        records.push(blank);
                    }
                }
            }
            None => {
                let frame = seq.frame(f)?;
                let start = Instant::now();
                let p = tracker.track(&frame, f)?;
                seconds += start.elapsed().as_secs_f64();
                let overlap = iou(&p.bbox, gt);
                let state = if overlap > 0.0 {
                    FrameState::Tracked
                } else {
                    if mode == Mode::Supervised {
                        pending_init = Some(f + reinit_skip);
                    }
                    FrameState::Failure
                };
                records.push(scored(f, state, &p, gt));
            }
        }
    }
    Ok(RunResult {
        sequence: seq.name.clone(),
        mode,
        records,
        track_seconds: seconds,
    })
}

pub fn run_supervised(
    seq: &Sequence,
    tracker: &mut dyn FrameTracker,
    reinit_skip: usize,
) -> Result<RunResult> {
    run(seq, tracker, Mode::Supervised, reinit_skip)
}

pub fn run_one_pass(seq: &Sequence, tracker: &mut dyn FrameTracker) -> Result<(RunResult, CurveData)> {
    let r = run(seq, tracker, Mode::OnePass, 1)?;
    let c = r.curves();
    Ok((r, c))
}

/// Runs every sequence with its own tracker, in parallel; results keep the
/// input order.
pub fn run_suite<T, F>(
    seqs: &[Sequence],
    make_tracker: F,
    mode: Mode,
    reinit_skip: usize,
) -> Vec<Result<RunResult>>
where
    T: FrameTracker,
    F: Fn(&Sequence) -> T + Sync,
{
    seqs.par_iter()
        .map(|s| run(s, &mut make_tracker(s), mode, reinit_skip))
        .collect()
}
