//! Zero-parameter SLIC (SLICO) restricted to a pixel mask.
//!
//! Clustering runs in joint CIELAB + image-plane space. Every cluster carries
//! its own colour normaliser, the largest squared colour distance it saw in
//! the previous iteration, so no global compactness has to be chosen.

use alloc::vec::Vec;

use rand::Rng;

use super::{ObjectMask, SuperpixelLabels};
use crate::error::{Error, Result};
use crate::image::{Image, Rgb};

pub const SLICO_ITERATIONS: usize = 10;

/// Initial per-cluster colour normaliser (squared), as in the reference SLICO.
const INITIAL_MAX_LAB: f64 = 10.0 * 10.0;

/// sRGB (D65) to CIELAB.
pub fn srgb_to_lab(px: Rgb) -> [f64; 3] {
    fn linear(c: u8) -> f64 {
        let c = c as f64 / 255.0;
        if c <= 0.04045 {
            c / 12.92
        } else {
            libm::pow((c + 0.055) / 1.055, 2.4)
        }
    }
    fn f(t: f64) -> f64 {
        const EPS: f64 = 216.0 / 24389.0;
        const KAPPA: f64 = 24389.0 / 27.0;
        if t > EPS {
            libm::cbrt(t)
        } else {
            (KAPPA * t + 16.0) / 116.0
        }
    }
    let (r, g, b) = (linear(px[0]), linear(px[1]), linear(px[2]));
    let x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
    let (fx, fy, fz) = (f(x), f(y), f(z));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

#[derive(Debug, Clone, Copy)]
struct Cluster {
    lab: [f64; 3],
    x: f64,
    y: f64,
}

#[inline]
fn lab_dist_sq(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    let d2 = a[2] - b[2];
    d0 * d0 + d1 * d1 + d2 * d2
}

/// Segments the masked pixels into roughly `target_k` 4-connected superpixels.
///
/// `rng` breaks ties between equally flat seed positions.
pub fn slico_superpixels<R: Rng + ?Sized>(
    image: &Image,
    mask: &ObjectMask,
    target_k: usize,
    rng: &mut R,
) -> Result<SuperpixelLabels> {
    let region = mask.region;
    let area = mask.count();
    if area == 0 {
        return Err(Error::Empty("object mask"));
    }
    if target_k == 0 {
        return Err(Error::InvalidParameter("superpixel count must be at least 1"));
    }
    let (w, h) = (region.w, region.h);
    let lab: Vec<[f64; 3]> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| srgb_to_lab(image.get(region.x0 + x, region.y0 + y)))
        .collect();

    let k = target_k.min(area);
    let step = libm::sqrt(area as f64 / k as f64);
    let mut clusters = seed_clusters(mask, &lab, step, rng);

    let mut labels: Vec<Option<u32>> = alloc::vec![None; w * h];
    let mut max_lab = alloc::vec![INITIAL_MAX_LAB; clusters.len()];
    let inv_xy = 1.0 / (step * step);
    let reach = libm::ceil(step) as i64;
    let mut best = alloc::vec![f64::INFINITY; w * h];
    let mut colour_dist = alloc::vec![0.0f64; w * h];

    for _ in 0..SLICO_ITERATIONS {
        best.fill(f64::INFINITY);
        for (ci, c) in clusters.iter().enumerate() {
            let cx = libm::round(c.x) as i64;
            let cy = libm::round(c.y) as i64;
            let y0 = (cy - reach).max(0) as usize;
            let y1 = ((cy + reach + 1).max(0) as usize).min(h);
            let x0 = (cx - reach).max(0) as usize;
            let x1 = ((cx + reach + 1).max(0) as usize).min(w);
            for y in y0..y1 {
                for x in x0..x1 {
                    let i = y * w + x;
                    if !mask.data[i] {
                        continue;
                    }
                    let dc = lab_dist_sq(&lab[i], &c.lab);
                    let dx = x as f64 - c.x;
                    let dy = y as f64 - c.y;
                    let d = dc / max_lab[ci] + (dx * dx + dy * dy) * inv_xy;
                    if d < best[i] {
                        best[i] = d;
                        labels[i] = Some(ci as u32);
                        colour_dist[i] = dc;
                    }
                }
            }
        }
        assign_stragglers(mask, &mut labels, &clusters, &lab, &mut colour_dist);

        max_lab.fill(1.0);
        let mut sums = alloc::vec![([0.0f64; 3], 0.0f64, 0.0f64, 0usize); clusters.len()];
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if let Some(l) = labels[i] {
                    let l = l as usize;
                    let s = &mut sums[l];
                    for (a, v) in s.0.iter_mut().zip(&lab[i]) {
                        *a += v;
                    }
                    s.1 += x as f64;
                    s.2 += y as f64;
                    s.3 += 1;
                    if colour_dist[i] > max_lab[l] {
                        max_lab[l] = colour_dist[i];
                    }
                }
            }
        }
        for (c, s) in clusters.iter_mut().zip(&sums) {
            if s.3 > 0 {
                let n = s.3 as f64;
                c.lab = [s.0[0] / n, s.0[1] / n, s.0[2] / n];
                c.x = s.1 / n;
                c.y = s.2 / n;
            }
        }
    }

    let (labels, count) = enforce_connectivity(&labels, w, h);
    Ok(SuperpixelLabels {
        region,
        frame_w: image.width(),
        frame_h: image.height(),
        labels,
        count,
    })
}

/// Grid seeds over the mask's bounding box, snapped onto the mask and moved to
/// the flattest pixel of their 3x3 neighbourhood.
fn seed_clusters<R: Rng + ?Sized>(
    mask: &ObjectMask,
    lab: &[[f64; 3]],
    step: f64,
    rng: &mut R,
) -> Vec<Cluster> {
    let (w, h) = (mask.region.w, mask.region.h);
    let (mut bx0, mut by0, mut bx1, mut by1) = (w, h, 0, 0);
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                bx0 = bx0.min(x);
                by0 = by0.min(y);
                bx1 = bx1.max(x + 1);
                by1 = by1.max(y + 1);
            }
        }
    }
    let (bw, bh) = ((bx1 - bx0) as f64, (by1 - by0) as f64);
    let nx = (libm::round(bw / step) as usize).max(1);
    let ny = (libm::round(bh / step) as usize).max(1);
    let (cell_w, cell_h) = (bw / nx as f64, bh / ny as f64);

    let gradient = |x: usize, y: usize| -> f64 {
        let at = |xx: usize, yy: usize| {
            if mask.get(xx, yy) {
                lab[yy * w + xx]
            } else {
                lab[y * w + x]
            }
        };
        let l = at(x.saturating_sub(1), y);
        let r = at((x + 1).min(w - 1), y);
        let u = at(x, y.saturating_sub(1));
        let d = at(x, (y + 1).min(h - 1));
        lab_dist_sq(&l, &r) + lab_dist_sq(&u, &d)
    };

    let mut seeds: Vec<(usize, usize)> = Vec::new();
    for gy in 0..ny {
        for gx in 0..nx {
            let cx0 = bx0 as f64 + gx as f64 * cell_w;
            let cy0 = by0 as f64 + gy as f64 * cell_h;
            let centre = (cx0 + cell_w / 2.0, cy0 + cell_h / 2.0);
            let Some((sx, sy)) = nearest_masked_in_cell(mask, centre, cx0, cy0, cell_w, cell_h)
            else {
                continue;
            };

            let mut lowest = f64::INFINITY;
            let mut flat: Vec<(usize, usize)> = Vec::new();
            for ny_ in sy.saturating_sub(1)..(sy + 2).min(h) {
                for nx_ in sx.saturating_sub(1)..(sx + 2).min(w) {
                    if !mask.get(nx_, ny_) {
                        continue;
                    }
                    let g = gradient(nx_, ny_);
                    if g < lowest {
                        lowest = g;
                        flat.clear();
                    }
                    if g == lowest {
                        flat.push((nx_, ny_));
                    }
                }
            }
            let pick = flat[rng.random_range(0..flat.len())];
            if !seeds.contains(&pick) {
                seeds.push(pick);
            }
        }
    }

    seeds
        .into_iter()
        .map(|(x, y)| Cluster {
            lab: lab[y * w + x],
            x: x as f64,
            y: y as f64,
        })
        .collect()
}

fn nearest_masked_in_cell(
    mask: &ObjectMask,
    centre: (f64, f64),
    x0: f64,
    y0: f64,
    cw: f64,
    ch: f64,
) -> Option<(usize, usize)> {
    let xs = libm::floor(x0) as usize..(libm::ceil(x0 + cw) as usize).min(mask.region.w);
    let ys = libm::floor(y0) as usize..(libm::ceil(y0 + ch) as usize).min(mask.region.h);
    let mut best: Option<((usize, usize), f64)> = None;
    for y in ys {
        for x in xs.clone() {
            if !mask.get(x, y) {
                continue;
            }
            let (dx, dy) = (x as f64 - centre.0, y as f64 - centre.1);
            let d = dx * dx + dy * dy;
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some(((x, y), d));
            }
        }
    }
    best.map(|(p, _)| p)
}

/// Masked pixels outside every cluster's search window go to the spatially
/// nearest cluster.
fn assign_stragglers(
    mask: &ObjectMask,
    labels: &mut [Option<u32>],
    clusters: &[Cluster],
    lab: &[[f64; 3]],
    colour_dist: &mut [f64],
) {
    let w = mask.region.w;
    for (i, l) in labels.iter_mut().enumerate() {
        if !mask.data[i] || l.is_some() {
            continue;
        }
        let (x, y) = ((i % w) as f64, (i / w) as f64);
        let (ci, _) = clusters
            .iter()
            .enumerate()
            .map(|(ci, c)| (ci, (c.x - x) * (c.x - x) + (c.y - y) * (c.y - y)))
            .fold((0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
        *l = Some(ci as u32);
        colour_dist[i] = lab_dist_sq(&lab[i], &clusters[ci].lab);
    }
}

/// Makes every label 4-connected. Each label keeps its largest component;
/// the other pieces merge into their largest adjacent surviving superpixel,
/// or become superpixels of their own when nothing surviving touches them.
/// Labels are renumbered compactly in raster order.
fn enforce_connectivity(labels: &[Option<u32>], w: usize, h: usize) -> (Vec<Option<u32>>, usize) {
    let (comp, comp_label, comp_size) = components(labels, w, h);
    let ncomp = comp_size.len();

    // Main component of each label.
    let nlabels = comp_label.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let mut main: Vec<Option<usize>> = alloc::vec![None; nlabels];
    for c in 0..ncomp {
        let l = comp_label[c] as usize;
        if main[l].is_none_or(|m| comp_size[c] > comp_size[m]) {
            main[l] = Some(c);
        }
    }

    // Adjacency between components.
    let mut adjacent: Vec<Vec<usize>> = alloc::vec![Vec::new(); ncomp];
    for y in 0..h {
        for x in 0..w {
            let Some(a) = comp[y * w + x] else { continue };
            let mut link = |b: Option<usize>| {
                if let Some(b) = b {
                    if a != b {
                        if !adjacent[a].contains(&b) {
                            adjacent[a].push(b);
                        }
                        if !adjacent[b].contains(&a) {
                            adjacent[b].push(a);
                        }
                    }
                }
            };
            if x + 1 < w {
                link(comp[y * w + x + 1]);
            }
            if y + 1 < h {
                link(comp[(y + 1) * w + x]);
            }
        }
    }

    // Every component resolves to a root component that survives.
    let mut root: Vec<Option<usize>> = alloc::vec![None; ncomp];
    let mut size = comp_size.clone();
    for l in main.iter().flatten() {
        root[*l] = Some(*l);
    }
    let mut orphans: Vec<usize> = (0..ncomp).filter(|&c| root[c].is_none()).collect();
    orphans.sort_by_key(|&c| (comp_size[c], c));
    while !orphans.is_empty() {
        let mut progressed = false;
        let mut pending = Vec::new();
        for &o in &orphans {
            let target = adjacent[o]
                .iter()
                .filter_map(|&n| root[n])
                .max_by(|&a, &b| size[a].cmp(&size[b]).then(b.cmp(&a)));
            match target {
                Some(t) => {
                    root[o] = Some(t);
                    size[t] += comp_size[o];
                    progressed = true;
                }
                None if adjacent[o].is_empty() => {
                    root[o] = Some(o);
                    progressed = true;
                }
                None => pending.push(o),
            }
        }
        if !progressed {
            // Only orphans touch each other: promote the largest.
            let promote = *pending
                .iter()
                .max_by_key(|&&c| (comp_size[c], core::cmp::Reverse(c)))
                .expect("pending orphans");
            root[promote] = Some(promote);
            pending.retain(|&c| c != promote);
        }
        orphans = pending;
    }

    let mut renumber: Vec<Option<u32>> = alloc::vec![None; ncomp];
    let mut next = 0u32;
    let out = comp
        .iter()
        .map(|c| {
            c.map(|c| {
                let r = root[c].expect("resolved");
                *renumber[r].get_or_insert_with(|| {
                    next += 1;
                    next - 1
                })
            })
        })
        .collect();
    (out, next as usize)
}

/// 4-connected components of equal labels: per-pixel component id, each
/// component's label, and its size.
fn components(labels: &[Option<u32>], w: usize, h: usize) -> (Vec<Option<usize>>, Vec<u32>, Vec<usize>) {
    let mut comp: Vec<Option<usize>> = alloc::vec![None; labels.len()];
    let mut comp_label = Vec::new();
    let mut comp_size = Vec::new();
    let mut stack = Vec::new();
    for start in 0..labels.len() {
        let Some(l) = labels[start] else { continue };
        if comp[start].is_some() {
            continue;
        }
        let id = comp_label.len();
        comp_label.push(l);
        let mut n = 0;
        comp[start] = Some(id);
        stack.push(start);
        while let Some(i) = stack.pop() {
            n += 1;
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if comp[j].is_none() && labels[j] == Some(l) {
                    comp[j] = Some(id);
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        comp_size.push(n);
    }
    (comp, comp_label, comp_size)
}

#[cfg(test)]
mod tests {
    use super::super::PixelRegion;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lab_reference_values() {
        let white = srgb_to_lab([255, 255, 255]);
        assert!((white[0] - 100.0).abs() < 1e-3 && white[1].abs() < 1e-3 && white[2].abs() < 1e-3);
        assert_eq!(srgb_to_lab([0, 0, 0]), [0.0, 0.0, 0.0]);
        // sRGB red is about (53.24, 80.09, 67.20).
        let red = srgb_to_lab([255, 0, 0]);
        assert!((red[0] - 53.24).abs() < 0.01);
        assert!((red[1] - 80.09).abs() < 0.01);
        assert!((red[2] - 67.20).abs() < 0.01);
    }

    #[test]
    fn connectivity_merges_orphans() {
        // label 0 has a stray pixel inside label 1's territory.
        let raw = [
            0, 0, 1, 1, 1, //
            0, 0, 1, 0, 1, //
            0, 0, 1, 1, 1,
        ];
        let labels: Vec<Option<u32>> = raw.iter().map(|&l| Some(l)).collect();
        let (out, k) = enforce_connectivity(&labels, 5, 3);
        assert_eq!(k, 2);
        assert_eq!(out[8], out[7]);
        assert_ne!(out[0], out[7]);
    }

    #[test]
    fn disconnected_mask_islands_get_own_labels() {
        let mut labels = alloc::vec![None; 7];
        labels[0] = Some(0);
        labels[1] = Some(0);
        labels[5] = Some(0);
        labels[6] = Some(0);
        let (out, k) = enforce_connectivity(&labels, 7, 1);
        assert_eq!(k, 2);
        assert_eq!(out[0], Some(0));
        assert_eq!(out[6], Some(1));
        assert_eq!(out[3], None);
    }

    #[test]
    fn empty_mask_is_error() {
        let region = PixelRegion { x0: 0, y0: 0, w: 4, h: 4 };
        let mask = ObjectMask { region, data: alloc::vec![false; 16] };
        let img = Image::new(4, 4, [0, 0, 0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(slico_superpixels(&img, &mask, 3, &mut rng).is_err());
    }
}
