use thiserror::Error;

/// Errors raised by the tracking core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("bounding box does not intersect the frame")]
    BoxOutsideFrame,
    #[error("snapshot version {found} is not supported (expected {expected})")]
    SnapshotVersion { found: u32, expected: u32 },
    #[error("snapshot was taken with a different tracker configuration")]
    SnapshotConfigMismatch,
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
