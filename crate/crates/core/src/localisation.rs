//! Per-frame localisation.
//!
//! `G` similarity transforms of the previous patch layout are scored as
//! wholes, the best `L` are refined by moving each patch independently to the
//! best position in a `W x W` window, and the refined layout with the highest
//! mean patch quality wins.
//!
//! Patch quality depends only on the patch model and the integer pixel the
//! patch is centred on, so each patch memoises its scores for the frame. The
//! global and local stages share that memo.

use alloc::vec::Vec;

use hashbrown::HashMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::colour_model::PatchModel;
use crate::config::TrackerConfig;
use crate::error::{Error, Result};
use crate::geometry::{enclosing_aabb, expand_box, sample_transform, Box, Point, TransformParams};
use crate::image::{Image, Rgb};

/// One scored layout of the object's patches.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub transform: TransformParams,
    pub patch_centres: Vec<Point>,
    pub patch_qualities: Vec<f64>,
    pub quality: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Localisation {
    /// Centroid of the previous layout; rotation and scale act about it.
    pub anchor: Point,
    /// Winning layout after local refinement.
    pub best: CandidateSet,
    /// Top-ranked global candidates before refinement, best first.
    pub kept: Vec<CandidateSet>,
    /// The same candidates after refinement, in the same order.
    pub refined: Vec<CandidateSet>,
    pub predicted: Box,
}

/// Pixels of the `w x h` block centred on the rounded `centre`, row-major,
/// skipping anything outside the frame.
pub fn extract_patch_pixels(frame: &Image, centre: Point, w: usize, h: usize) -> Vec<Rgb> {
    let mut out = Vec::with_capacity(w * h);
    extract_into(frame, centre.round(), w, h, &mut out);
    out
}

fn extract_into(frame: &Image, (cx, cy): (i64, i64), w: usize, h: usize, out: &mut Vec<Rgb>) {
    out.clear();
    let x0 = cx - ((w as i64 - 1) / 2);
    let y0 = cy - ((h as i64 - 1) / 2);
    let fw = frame.width() as i64;
    let fh = frame.height() as i64;
    let xs = x0.max(0)..(x0 + w as i64).min(fw);
    let ys = y0.max(0)..(y0 + h as i64).min(fh);
    for y in ys {
        for x in xs.clone() {
            out.push(frame.get(x as usize, y as usize));
        }
    }
}

/// Memoised quality of one patch over integer centre positions.
struct PatchScorer<'a> {
    model: &'a PatchModel,
    frame: &'a Image,
    exponent: f64,
    memo: HashMap<(i64, i64), f64>,
    buf: Vec<Rgb>,
}

impl<'a> PatchScorer<'a> {
    fn new(model: &'a PatchModel, frame: &'a Image, exponent: f64) -> Self {
        Self {
            model,
            frame,
            exponent,
            memo: HashMap::new(),
            buf: Vec::with_capacity(model.area()),
        }
    }

    fn quality_at(&mut self, pos: (i64, i64)) -> f64 {
        if let Some(&q) = self.memo.get(&pos) {
            return q;
        }
        extract_into(
            self.frame,
            pos,
            self.model.patch_w,
            self.model.patch_h,
            &mut self.buf,
        );
        let q = self.model.quality(&self.buf, self.exponent);
        self.memo.insert(pos, q);
        q
    }

    /// Best position in the window around `centre`. Ties go to the offset
    /// nearest the window centre, then to `rng`.
    fn refine(&mut self, centre: Point, half: i64, rng_seed: u64, stream: u64) -> (Point, f64) {
        let base = centre.round();
        let mut best_q = f64::NEG_INFINITY;
        let mut best_d = i64::MAX;
        let mut tied: Vec<(i64, i64)> = Vec::new();
        for dy in -half..=half {
            for dx in -half..=half {
                let q = self.quality_at((base.0 + dx, base.1 + dy));
                let d = dx * dx + dy * dy;
                if q > best_q || (q == best_q && d < best_d) {
                    best_q = q;
                    best_d = d;
                    tied.clear();
                    tied.push((dx, dy));
                } else if q == best_q && d == best_d {
                    tied.push((dx, dy));
                }
            }
        }
        let (dx, dy) = if tied.len() == 1 {
            tied[0]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rng.set_stream(stream);
            tied[rng.random_range(0..tied.len())]
        };
        (Point::new(centre.x + dx as f64, centre.y + dy as f64), best_q)
    }
}

#[cfg(feature = "parallel")]
fn map_patches<'a, T: Send>(
    scorers: &mut [PatchScorer<'a>],
    f: impl Fn(usize, &mut PatchScorer<'a>) -> T + Sync + Send,
) -> Vec<T> {
    use rayon::prelude::*;
    scorers
        .par_iter_mut()
        .enumerate()
        .map(|(i, s)| f(i, s))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn map_patches<'a, T>(
    scorers: &mut [PatchScorer<'a>],
    f: impl Fn(usize, &mut PatchScorer<'a>) -> T,
) -> Vec<T> {
    scorers.iter_mut().enumerate().map(|(i, s)| f(i, s)).collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Locates the object in `frame`.
///
/// `transform_rng` drives candidate sampling; `tie_rng` orders equal-quality
/// candidates at the top-`L` cut and seeds the per-patch tie breaks. Results
/// do not depend on how many worker threads are used.
pub fn localise<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    frame: &Image,
    patches: &[PatchModel],
    prev_box: &Box,
    cfg: &TrackerConfig,
    transform_rng: &mut R1,
    tie_rng: &mut R2,
) -> Result<Localisation> {
    if patches.is_empty() {
        return Err(Error::Empty("patch set"));
    }
    if frame.is_empty() {
        return Err(Error::Empty("frame"));
    }
    if cfg.candidates == 0 {
        return Err(Error::InvalidParameter("candidates must be at least 1"));
    }
    let exponent = cfg.effective_exponent();
    let anchor = Point::centroid(patches.iter().map(|p| p.location)).expect("non-empty");

    let transforms: Vec<TransformParams> = (0..cfg.candidates)
        .map(|_| sample_transform(&cfg.priors, prev_box, transform_rng))
        .collect();
    let layout = |t: &TransformParams| -> Vec<Point> {
        patches.iter().map(|p| t.apply(anchor, p.location)).collect()
    };

    let mut scorers: Vec<PatchScorer> = patches
        .iter()
        .map(|m| PatchScorer::new(m, frame, exponent))
        .collect();

    // Global stage: per patch, the quality under every transform.
    let per_patch: Vec<Vec<f64>> = map_patches(&mut scorers, |p, s| {
        transforms
            .iter()
            .map(|t| s.quality_at(t.apply(anchor, patches[p].location).round()))
            .collect()
    });
    let global_quality: Vec<f64> = (0..transforms.len())
        .map(|g| mean(per_patch.iter().map(|q| q[g])))
        .collect();

    let keys: Vec<u64> = (0..transforms.len()).map(|_| tie_rng.next_u64()).collect();
    let mut order: Vec<usize> = (0..transforms.len()).collect();
    order.sort_by(|&a, &b| {
        global_quality[b]
            .total_cmp(&global_quality[a])
            .then(keys[a].cmp(&keys[b]))
    });

    let refine_count = cfg.effective_refined();
    let kept_idx = &order[..refine_count.max(1)];
    let kept: Vec<CandidateSet> = kept_idx
        .iter()
        .map(|&g| CandidateSet {
            transform: transforms[g],
            patch_centres: layout(&transforms[g]),
            patch_qualities: per_patch.iter().map(|q| q[g]).collect(),
            quality: global_quality[g],
        })
        .collect();

    let refined = if refine_count == 0 {
        kept.clone()
    } else {
        let seeds: Vec<u64> = kept.iter().map(|_| tie_rng.next_u64()).collect();
        let half = (cfg.window / 2) as i64;
        let moved: Vec<Vec<(Point, f64)>> = map_patches(&mut scorers, |p, s| {
            kept.iter()
                .zip(&seeds)
                .map(|(c, &seed)| s.refine(c.patch_centres[p], half, seed, p as u64))
                .collect()
        });
        kept.iter()
            .enumerate()
            .map(|(k, c)| {
                let patch_centres: Vec<Point> = moved.iter().map(|m| m[k].0).collect();
                let patch_qualities: Vec<f64> = moved.iter().map(|m| m[k].1).collect();
                CandidateSet {
                    transform: c.transform,
                    quality: mean(patch_qualities.iter().copied()),
                    patch_centres,
                    patch_qualities,
                }
            })
            .collect::<Vec<_>>()
    };

    let mut best = 0;
    for (i, c) in refined.iter().enumerate() {
        if c.quality > refined[best].quality {
            best = i;
        }
    }
    let best = refined[best].clone();
    let aabb = enclosing_aabb(
        &best.patch_centres,
        patches[0].patch_w as f64,
        patches[0].patch_h as f64,
    )?;
    Ok(Localisation {
        anchor,
        predicted: expand_box(&aabb, cfg.expand),
        best,
        kept,
        refined,
    })
}
