//! Image sequences and ground truth.

use std::borrow::Cow;
use std::path::{Path, PathBuf};

use pbts_core::{Box, Image, Point};

use crate::error::{Error, Result};

pub const GROUND_TRUTH_FILE: &str = "groundtruth.txt";
const FRAME_EXTENSIONS: [&str; 5] = ["png", "jpg", "jpeg", "ppm", "pnm"];

/// One annotation: an axis-aligned rectangle or a four-corner polygon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroundTruth {
    Rect(Box),
    Polygon([Point; 4]),
}

impl GroundTruth {
    /// Box used for scoring. Polygons are reduced to their bounding box.
    pub fn aabb(&self) -> Box {
        match self {
            GroundTruth::Rect(b) => *b,
            GroundTruth::Polygon(p) => {
                let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
                let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                for q in p {
                    x0 = x0.min(q.x);
                    y0 = y0.min(q.y);
                    x1 = x1.max(q.x);
                    y1 = y1.max(q.y);
                }
                Box::new(x0, y0, x1 - x0, y1 - y0)
            }
        }
    }

    /// Comma-separated form accepted by [`parse_ground_truth`].
    pub fn to_line(&self) -> String {
        match self {
            GroundTruth::Rect(b) => format!("{},{},{},{}", b.x, b.y, b.w, b.h),
            GroundTruth::Polygon(p) => p
                .iter()
                .map(|q| format!("{},{}", q.x, q.y))
                .collect::<Vec<_>>()
                .join(","),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Frames {
    Files(Vec<PathBuf>),
    Memory(Vec<Image>),
}

#[derive(Debug, Clone)]
pub struct Sequence {
    pub name: String,
    pub frames: Frames,
    pub ground_truth: Vec<GroundTruth>,
}

impl Sequence {
    pub fn new(name: impl Into<String>, frames: Frames, ground_truth: Vec<GroundTruth>) -> Result<Self> {
        let seq = Self {
            name: name.into(),
            frames,
            ground_truth,
        };
        if seq.len() < 2 {
            return Err(Error::Invalid(format!("{}: need at least 2 frames", seq.name)));
        }
        if seq.ground_truth.len() != seq.len() {
            return Err(Error::Invalid(format!(
                "{}: {} frames but {} ground-truth lines",
                seq.name,
                seq.len(),
                seq.ground_truth.len()
            )));
        }
        Ok(seq)
    }

    pub fn len(&self) -> usize {
        match &self.frames {
            Frames::Files(f) => f.len(),
            Frames::Memory(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Decodes (or borrows) frame `i`.
    pub fn frame(&self, i: usize) -> Result<Cow<'_, Image>> {
        match &self.frames {
            Frames::Files(f) => load_image(&f[i]).map(Cow::Owned),
            Frames::Memory(f) => Ok(Cow::Borrowed(&f[i])),
        }
    }

    pub fn boxes(&self) -> Vec<Box> {
        self.ground_truth.iter().map(GroundTruth::aabb).collect()
    }
}

pub fn load_image(path: &Path) -> Result<Image> {
    let img = image::open(path)
        .map_err(|source| Error::Image {
            path: path.to_owned(),
            source,
        })?
        .into_rgb8();
    let (w, h) = img.dimensions();
    Ok(Image::from_raw(w as usize, h as usize, img.as_raw()).expect("rgb8 buffer size"))
}

pub fn save_image(img: &Image, path: &Path) -> Result<()> {
    image::save_buffer(
        path,
        &img.to_raw(),
        img.width() as u32,
        img.height() as u32,
        image::ExtendedColorType::Rgb8,
    )
    .map_err(|source| Error::Image {
        path: path.to_owned(),
        source,
    })
}

/// Parses one annotation per line: 4 values (`x,y,w,h`) or 8 (polygon corners).
/// Values may be separated by commas, tabs or spaces. Blank lines are skipped.
pub fn parse_ground_truth(text: &str) -> Result<Vec<GroundTruth>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let values = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse("ground truth", i + 1, format!("bad number `{t}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let gt = match values[..] {
            [x, y, w, h] => GroundTruth::Rect(Box::new(x, y, w, h)),
            [a, b, c, d, e, f, g, h] => GroundTruth::Polygon([
                Point::new(a, b),
                Point::new(c, d),
                Point::new(e, f),
                Point::new(g, h),
            ]),
            _ => {
                return Err(Error::parse(
                    "ground truth",
                    i + 1,
                    format!("expected 4 or 8 values, found {}", values.len()),
                ))
            }
        };
        out.push(gt);
    }
    Ok(out)
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<GroundTruth>> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    parse_ground_truth(&text)
}

/// Loads a sequence from a frame directory or from a manifest file.
///
/// A directory contributes its image files in lexicographic order. A manifest
/// lists one frame path per line, relative to the manifest's directory.
/// Ground truth comes from `gt`, or else from `groundtruth.txt` next to the
/// frames.
pub fn load_sequence(path: &Path, gt: Option<&Path>) -> Result<Sequence> {
    let (frames, base) = if path.is_dir() {
        let mut frames = Vec::new();
        for entry in std::fs::read_dir(path).map_err(Error::io(path))? {
            let p = entry.map_err(Error::io(path))?.path();
            let ext = p
                .extension()
                .and_then(|e| e.to_str())
                .map(str::to_ascii_lowercase);
            if p.is_file() && ext.is_some_and(|e| FRAME_EXTENSIONS.contains(&e.as_str())) {
                frames.push(p);
            }
        }
        frames.sort();
        (frames, path.to_owned())
    } else {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_owned();
        let frames = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| base.join(l))
            .collect();
        (frames, base)
    };
    let gt_path = gt.map(Path::to_owned).unwrap_or_else(|| base.join(GROUND_TRUTH_FILE));
    let ground_truth = read_ground_truth(&gt_path)?;
    let name = path
        .file_stem()
        .and_then(|n| n.to_str())
        .unwrap_or("sequence")
        .to_owned();
    Sequence::new(name, Frames::Files(frames), ground_truth)
}
