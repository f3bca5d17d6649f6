#![allow(dead_code)]

use pbts_core::{Box, Image, Rgb};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BACKGROUND: Rgb = [90, 100, 120];

/// Colour texture that changes by more than the matching radius within a few
/// pixels, so a patch's position is observable.
pub fn texture(xi: i64, yi: i64) -> Rgb {
    use std::f64::consts::TAU;
    let (x, y) = (xi as f64, yi as f64);
    [
        (150.0 + 100.0 * (TAU * x / 13.0).sin()) as u8,
        (130.0 + 110.0 * (TAU * y / 11.0).sin()) as u8,
        (140.0 + 100.0 * (TAU * (x + y) / 17.0).cos()) as u8,
    ]
}

fn noise_at(seed: u64, x: i64, y: i64) -> i32 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((x as u64) << 20) ^ (y as u64).wrapping_mul(0x9e37));
    rng.random_range(-12..=12)
}

/// Noisy background with a textured `obj_w x obj_h` object at `(ox, oy)`.
/// The whole world, background noise included, is shifted by `(sx, sy)`.
pub fn world(
    width: usize,
    height: usize,
    (ox, oy, obj_w, obj_h): (i64, i64, i64, i64),
    (sx, sy): (i64, i64),
) -> Image {
    Image::from_fn(width, height, |x, y| {
        let (wx, wy) = (x as i64 - sx, y as i64 - sy);
        let (xi, yi) = (wx - ox, wy - oy);
        if xi >= 0 && yi >= 0 && xi < obj_w && yi < obj_h {
            texture(xi, yi)
        } else {
            let n = noise_at(7, wx, wy);
            BACKGROUND.map(|c| (c as i32 + n).clamp(0, 255) as u8)
        }
    })
}

/// Scene with the object at `(ox, oy)` over a fixed background.
pub fn scene(width: usize, height: usize, ox: i64, oy: i64, obj_w: i64, obj_h: i64) -> Image {
    world(width, height, (ox, oy, obj_w, obj_h), (0, 0))
}

/// Noise-free object of uniform 10x10 tiles on a flat background.
pub fn tiles(width: usize, height: usize, ox: i64, oy: i64, obj_w: i64, obj_h: i64) -> Image {
    const COLOURS: [Rgb; 6] = [
        [220, 40, 40],
        [40, 200, 60],
        [250, 220, 30],
        [200, 60, 220],
        [30, 200, 220],
        [250, 140, 20],
    ];
    Image::from_fn(width, height, |x, y| {
        let (xi, yi) = (x as i64 - ox, y as i64 - oy);
        if xi >= 0 && yi >= 0 && xi < obj_w && yi < obj_h {
            COLOURS[((xi / 10) + 2 * (yi / 10)) as usize % COLOURS.len()]
        } else {
            BACKGROUND
        }
    })
}

pub fn object_box(ox: i64, oy: i64, obj_w: i64, obj_h: i64) -> Box {
    Box::new(ox as f64, oy as f64, obj_w as f64, obj_h as f64)
}
