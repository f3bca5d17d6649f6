//! File formats, evaluation protocols and the `track` command line around the
//! [`pbts_core`] tracker.

pub mod config;
pub mod error;
pub mod export;
pub mod harness;
pub mod sequence;
pub mod synth;

pub use config::Settings;
pub use error::{Error, Result};
pub use harness::{
    run, run_one_pass, run_suite, run_supervised, CurveData, FrameRecord, FrameState,
    FrameTracker, Mode, PbtsTracker, Prediction, RunResult, Summary,
};
pub use sequence::{load_sequence, parse_ground_truth, Frames, GroundTruth, Sequence};
pub use synth::SyntheticSpec;
