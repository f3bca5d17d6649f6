//! Result files.
//!
//! ```text
//! <out>/frames.csv      frame,state,x,y,w,h,iou,centre_error,quality
//! <out>/summary.json
//! <out>/success.csv     threshold,success      (21 rows)
//! <out>/precision.csv   threshold,precision    (51 rows)
//! <out>/annotated/      frames with predicted (red) and true (green) boxes
//! <out>/placement/      mask.png and labels.png of the first initialisation
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so re-reading a CSV gives
//! back the exact values. Missing values are empty fields.

use std::fmt::Write as _;
use std::path::Path;

use pbts_core::{Box, Image, InitDiagnostics, Point, Rgb};

use crate::error::{Error, Result};
use crate::harness::{CurveData, FrameRecord, FrameState, RunResult, Summary};
use crate::sequence::{save_image, GroundTruth, Sequence};

pub const FRAMES_CSV: &str = "frames.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const SUCCESS_CSV: &str = "success.csv";
pub const PRECISION_CSV: &str = "precision.csv";
const HEADER: &str = "frame,state,x,y,w,h,iou,centre_error,quality";

fn opt(out: &mut String, v: Option<f64>) {
    out.push(',');
    if let Some(v) = v {
        write!(out, "{v}").unwrap();
    }
}

pub fn frames_csv(records: &[FrameRecord]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in records {
        write!(out, "{},{}", r.frame, r.state.as_str()).unwrap();
        for v in [r.bbox.map(|b| b.x), r.bbox.map(|b| b.y), r.bbox.map(|b| b.w), r.bbox.map(|b| b.h)] {
            opt(&mut out, v);
        }
        opt(&mut out, r.iou);
        opt(&mut out, r.centre_error);
        opt(&mut out, r.quality);
        out.push('\n');
    }
    out
}

pub fn parse_frames_csv(text: &str) -> Result<Vec<FrameRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        _ => return Err(Error::parse("frames csv", 1, "missing header")),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::parse("frames csv", i + 1, msg);
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(bad("expected 9 fields"));
        }
        let num = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad("bad number"))
            }
        };
        let frame = fields[0].parse().map_err(|_| bad("bad frame index"))?;
        let state = FrameState::parse(fields[1]).ok_or_else(|| bad("bad state"))?;
        let b = [num(fields[2])?, num(fields[3])?, num(fields[4])?, num(fields[5])?];
        let bbox = match b {
            [Some(x), Some(y), Some(w), Some(h)] => Some(Box::new(x, y, w, h)),
            [None, None, None, None] => None,
            _ => return Err(bad("partial box")),
        };
        out.push(FrameRecord {
            frame,
            state,
            bbox,
            iou: num(fields[6])?,
            centre_error: num(fields[7])?,
            quality: num(fields[8])?,
        });
    }
    Ok(out)
}

pub fn curve_csv(header: &str, rows: &[(f64, f64)]) -> String {
    let mut out = format!("{header}\n");
    for (t, v) in rows {
        writeln!(out, "{t},{v}").unwrap();
    }
    out
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(Error::io(path))
}

pub fn write_summary(dir: &Path, summary: &Summary) -> Result<()> {
    write(&dir.join(SUMMARY_JSON), &serde_json::to_string_pretty(summary)?)
}

pub fn write_curves(dir: &Path, curves: &CurveData) -> Result<()> {
    write(&dir.join(SUCCESS_CSV), &curve_csv("threshold,success", &curves.success))?;
    write(&dir.join(PRECISION_CSV), &curve_csv("threshold,precision", &curves.precision))
}

/// Writes the CSVs and summary of one run into `dir`.
pub fn write_run(dir: &Path, run: &RunResult) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    write(&dir.join(FRAMES_CSV), &frames_csv(&run.records))?;
    write_summary(dir, &run.summary())?;
    write_curves(dir, &run.curves())
}

/// Recomputes summary and curves from `dir/frames.csv`. The frame rate is
/// carried over from an existing summary, since the CSV has no timings.
pub fn reevaluate(dir: &Path) -> Result<Summary> {
    let path = dir.join(FRAMES_CSV);
    let text = std::fs::read_to_string(&path).map_err(Error::io(&path))?;
    let records = parse_frames_csv(&text)?;
    let old: Option<Summary> = std::fs::read_to_string(dir.join(SUMMARY_JSON))
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok());
    let name = old.as_ref().map(|s| s.sequence.clone()).unwrap_or_else(|| {
        dir.file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("results")
            .to_owned()
    });
    let mode = old.as_ref().map_or(crate::harness::Mode::Supervised, |s| s.mode);
    let mut summary = crate::harness::summarise(&name, mode, &records);
    summary.fps = old.and_then(|s| s.fps);
    write_summary(dir, &summary)?;
    write_curves(dir, &CurveData::from_records(&records))?;
    Ok(summary)
}

const RED: Rgb = [230, 30, 30];
const GREEN: Rgb = [30, 220, 60];

fn draw_line(img: &mut Image, a: Point, b: Point, colour: Rgb) {
    let steps = (a.dist(b).ceil() as usize).max(1);
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let (x, y) = (a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
        let (x, y) = (x.floor() as i64, y.floor() as i64);
        if img.get_checked(x, y).is_some() {
            img.put(x as usize, y as usize, colour);
        }
    }
}

fn draw_polygon(img: &mut Image, corners: &[Point], colour: Rgb) {
    for (i, &a) in corners.iter().enumerate() {
        draw_line(img, a, corners[(i + 1) % corners.len()], colour);
    }
}

fn box_corners(b: &Box) -> [Point; 4] {
    [
        Point::new(b.x, b.y),
        Point::new(b.right(), b.y),
        Point::new(b.right(), b.bottom()),
        Point::new(b.x, b.bottom()),
    ]
}

pub fn annotate(frame: &Image, gt: &GroundTruth, predicted: Option<&Box>) -> Image {
    let mut img = frame.clone();
    match gt {
        GroundTruth::Rect(b) => draw_polygon(&mut img, &box_corners(b), GREEN),
        GroundTruth::Polygon(p) => draw_polygon(&mut img, p, GREEN),
    }
    if let Some(b) = predicted {
        draw_polygon(&mut img, &box_corners(b), RED);
    }
    img
}

/// Writes one annotated PNG per frame into `dir`.
pub fn write_annotated(dir: &Path, seq: &Sequence, run: &RunResult) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    for r in &run.records {
        let frame = seq.frame(r.frame)?;
        let img = annotate(&frame, &seq.ground_truth[r.frame], r.bbox.as_ref());
        save_image(&img, &dir.join(format!("{:08}.png", r.frame + 1)))?;
    }
    Ok(())
}

/// Distinct, stable colour per label.
fn palette(label: u32) -> Rgb {
    let h = (label as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let b = h.to_le_bytes();
    [64 | b[5], 64 | b[6], 64 | b[7]]
}

/// Mask (white object on black) and superpixel labels over the initial box.
pub fn write_placement(dir: &Path, diag: &InitDiagnostics) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let r = diag.mask.region;
    let mask = Image::from_fn(r.w, r.h, |x, y| {
        if diag.mask.get(x, y) {
            [255; 3]
        } else {
            [0; 3]
        }
    });
    save_image(&mask, &dir.join("mask.png"))?;
    if let Some(labels) = &diag.labels {
        let mut img = Image::from_fn(r.w, r.h, |x, y| labels.get(x, y).map_or([0; 3], palette));
        for c in &diag.centres {
            let (x, y) = (c.x as i64 - r.x0 as i64, c.y as i64 - r.y0 as i64);
            if img.get_checked(x, y).is_some() {
                img.put(x as usize, y as usize, [255; 3]);
            }
        }
        save_image(&img, &dir.join("labels.png"))?;
    }
    Ok(())
}
