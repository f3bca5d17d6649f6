//! Synthetic sequences with exact ground truth.
//!
//! A textured rectangle or ellipse moves over a static background. The
//! texture lives in object coordinates, so it translates, rotates and scales
//! with the object. Ground truth is a rectangle, or the rotated corner polygon
//! once the object turns.

use std::f64::consts::TAU;
use std::path::Path;

use pbts_core::{Box, Image, Point, Rgb};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::{save_image, Frames, GroundTruth, Sequence, GROUND_TRUTH_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Rect,
    Ellipse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Background {
    /// Flat colour with per-pixel noise.
    Noise,
    /// Blocks coloured from a small random palette.
    Clutter,
}

const CLUTTER_COLOURS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Motion {
    /// Pixels per frame.
    pub translation: [f64; 2],
    /// Radians per frame.
    pub rotation: f64,
    /// Relative size change per frame.
    pub scale: f64,
}

impl Default for Motion {
    fn default() -> Self {
        Self {
            translation: [0.0, 0.0],
            rotation: 0.0,
            scale: 0.0,
        }
    }
}

/// Vertical bar drawn over frames `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Occluder {
    pub x: f64,
    pub width: f64,
    pub start: usize,
    pub end: usize,
    #[serde(default)]
    pub colour: Rgb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub shape: Shape,
    /// Object centre on the first frame.
    pub centre: [f64; 2],
    /// Object width and height on the first frame.
    pub size: [f64; 2],
    pub motion: Motion,
    /// Brightness added per frame to every pixel.
    pub illumination: f64,
    pub occluder: Option<Occluder>,
    pub background: Background,
    /// Amplitude of the background noise.
    pub noise: u8,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            width: 200,
            height: 150,
            frames: 100,
            shape: Shape::Rect,
            centre: [60.0, 75.0],
            size: [50.0, 40.0],
            motion: Motion::default(),
            illumination: 0.0,
            occluder: None,
            background: Background::Noise,
            noise: 12,
            seed: 0,
        }
    }
}

/// Object pose on one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub centre: Point,
    pub angle: f64,
    pub scale: f64,
}

/// Three plane waves, one per channel, with seeded directions and phases.
struct Texture {
    waves: [(f64, f64, f64); 3],
}

impl Texture {
    fn new(rng: &mut impl Rng) -> Self {
        let waves = std::array::from_fn(|_| {
            let period = rng.random_range(9.0..16.0);
            let dir = rng.random_range(0.0..TAU);
            let (s, c) = f64::sin_cos(dir);
            (c / period, s / period, rng.random_range(0.0..TAU))
        });
        Self { waves }
    }

    fn at(&self, u: f64, v: f64) -> [f64; 3] {
        self.waves
            .map(|(fx, fy, phase)| 140.0 + 105.0 * (TAU * (fx * u + fy * v) + phase).sin())
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.width > 0
            && self.height > 0
            && self.frames >= 2
            && self.size.iter().all(|&s| s > 0.0 && s.is_finite())
            && self.centre.iter().all(|c| c.is_finite())
            && self.motion.scale > -1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("{}: bad synthetic spec", self.name)))
        }
    }

    pub fn pose(&self, t: usize) -> Pose {
        let t = t as f64;
        Pose {
            centre: Point::new(
                self.centre[0] + t * self.motion.translation[0],
                self.centre[1] + t * self.motion.translation[1],
            ),
            angle: t * self.motion.rotation,
            scale: (1.0 + self.motion.scale).powf(t),
        }
    }

    pub fn ground_truth(&self, t: usize) -> GroundTruth {
        let p = self.pose(t);
        let (hw, hh) = (0.5 * self.size[0] * p.scale, 0.5 * self.size[1] * p.scale);
        if self.motion.rotation == 0.0 {
            return GroundTruth::Rect(Box::from_centre(p.centre, 2.0 * hw, 2.0 * hh));
        }
        let (s, c) = p.angle.sin_cos();
        let corner = |u: f64, v: f64| Point::new(p.centre.x + c * u - s * v, p.centre.y + s * u + c * v);
        GroundTruth::Polygon([
            corner(-hw, -hh),
            corner(hw, -hh),
            corner(hw, hh),
            corner(-hw, hh),
        ])
    }

    fn background(&self, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
        let base = [90.0, 100.0, 120.0];
        let n = self.noise as i32;
        let noise = |rng: &mut ChaCha8Rng| rng.random_range(-n..=n) as f64;
        match self.background {
            Background::Noise => (0..self.width * self.height)
                .map(|_| {
                    let d = noise(rng);
                    base.map(|b| b + d)
                })
                .collect(),
            Background::Clutter => {
                const BLOCK: usize = 8;
                let (bw, bh) = (self.width.div_ceil(BLOCK), self.height.div_ceil(BLOCK));
                let palette: Vec<[f64; 3]> = (0..CLUTTER_COLOURS)
                    .map(|_| std::array::from_fn(|_| rng.random_range(30.0..250.0)))
                    .collect();
                let colours: Vec<[f64; 3]> = (0..bw * bh)
                    .map(|_| palette[rng.random_range(0..CLUTTER_COLOURS)])
                    .collect();
                (0..self.width * self.height)
                    .map(|i| {
                        let (x, y) = (i % self.width, i / self.width);
                        let d = noise(rng);
                        colours[(y / BLOCK) * bw + x / BLOCK].map(|c| c + d)
                    })
                    .collect()
            }
        }
    }

    /// Renders all frames in memory.
    pub fn render(&self) -> Result<Sequence> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let texture = Texture::new(&mut rng);
        let background = self.background(&mut rng);
        let (hw, hh) = (0.5 * self.size[0], 0.5 * self.size[1]);

        let mut frames = Vec::with_capacity(self.frames);
        let mut gt = Vec::with_capacity(self.frames);
        for t in 0..self.frames {
            let pose = self.pose(t);
            let (s, c) = pose.angle.sin_cos();
            let light = t as f64 * self.illumination;
            let occluder = self.occluder.filter(|o| (o.start..o.end).contains(&t));
            let frame = Image::from_fn(self.width, self.height, |x, y| {
                let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                if let Some(o) = occluder {
                    if px >= o.x && px < o.x + o.width {
                        return o.colour;
                    }
                }
                // Object coordinates of the pixel centre.
                let (dx, dy) = (px - pose.centre.x, py - pose.centre.y);
                let u = (c * dx + s * dy) / pose.scale;
                let v = (-s * dx + c * dy) / pose.scale;
                let inside = match self.shape {
                    Shape::Rect => u.abs() < hw && v.abs() < hh,
                    Shape::Ellipse => (u / hw).powi(2) + (v / hh).powi(2) < 1.0,
                };
                let colour = if inside {
                    texture.at(u, v)
                } else {
                    background[y * self.width + x]
                };
                colour.map(|ch| (ch + light).round().clamp(0.0, 255.0) as u8)
            });
            frames.push(frame);
            gt.push(self.ground_truth(t));
        }
        Sequence::new(self.name.clone(), Frames::Memory(frames), gt)
    }

    /// Renders and writes `00000001.png`... plus `groundtruth.txt` into `dir`.
    pub fn materialise(&self, dir: &Path) -> Result<Sequence> {
        let seq = self.render()?;
        std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
        let Frames::Memory(frames) = &seq.frames else {
            unreachable!()
        };
        let mut paths = Vec::with_capacity(frames.len());
        for (i, f) in frames.iter().enumerate() {
            let p = dir.join(format!("{:08}.png", i + 1));
            save_image(f, &p)?;
            paths.push(p);
        }
        let text: String = seq.ground_truth.iter().map(|g| g.to_line() + "\n").collect();
        let gt_path = dir.join(GROUND_TRUTH_FILE);
        std::fs::write(&gt_path, text).map_err(Error::io(&gt_path))?;
        Sequence::new(seq.name, Frames::Files(paths), seq.ground_truth)
    }
}

pub fn read_spec(path: &Path) -> Result<SyntheticSpec> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    Ok(serde_json::from_str(&text)?)
}
