//! Sparse colour-sample patch models.
//!
//! A patch model is a small set of `(centre, count)` pairs where every centre
//! is an RGB sample drawn from the patch itself and the count records how many
//! patch pixels fall within the matching radius of that centre. The model acts
//! as a histogram whose bins are the samples, so there are no empty bins.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::image::Rgb;

/// A colour centre stored as reals so that drift updates are not quantised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColourCentre(pub [f64; 3]);

impl ColourCentre {
    #[inline]
    pub fn from_rgb(px: Rgb) -> Self {
        Self([px[0] as f64, px[1] as f64, px[2] as f64])
    }

    #[inline]
    pub fn dist_sq(&self, px: Rgb) -> f64 {
        let dr = px[0] as f64 - self.0[0];
        let dg = px[1] as f64 - self.0[1];
        let db = px[2] as f64 - self.0[2];
        dr * dr + dg * dg + db * db
    }

    fn clamp(mut self) -> Self {
        for c in &mut self.0 {
            *c = c.clamp(0.0, 255.0);
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentreCount {
    pub centre: ColourCentre,
    pub count: f64,
}

/// Per-centre match counts of a candidate region, divided by the patch area.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchHistogram {
    pub counts: Vec<f64>,
}

impl MatchHistogram {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// Colour model of one patch together with its location.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchModel {
    pub location: Point,
    pub patch_w: usize,
    pub patch_h: usize,
    radius: f64,
    pairs: Vec<CentreCount>,
}

impl PatchModel {
    /// Builds a model by visiting `pixels` once in a random order, clustering
    /// them greedily by radius, and then trimming to the `s_max` most
    /// populated pairs.
    pub fn init<R: Rng + ?Sized>(
        pixels: &[Rgb],
        location: Point,
        patch_w: usize,
        patch_h: usize,
        radius: f64,
        s_max: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if pixels.is_empty() {
            return Err(Error::Empty("patch pixels"));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter("matching radius must be positive"));
        }
        if s_max == 0 {
            return Err(Error::InvalidParameter("S_max must be at least 1"));
        }
        if patch_w == 0 || patch_h == 0 {
            return Err(Error::InvalidParameter("patch size must be positive"));
        }
        let mut model = Self {
            location,
            patch_w,
            patch_h,
            radius,
            pairs: sample_pairs(pixels, radius, rng),
        };
        model.prune_to(s_max, rng);
        Ok(model)
    }

    /// Reassembles a model from stored parts (snapshot restore).
    pub fn from_parts(
        location: Point,
        patch_w: usize,
        patch_h: usize,
        radius: f64,
        pairs: Vec<CentreCount>,
    ) -> Self {
        Self {
            location,
            patch_w,
            patch_h,
            radius,
            pairs,
        }
    }

    pub fn pairs(&self) -> &[CentreCount] {
        &self.pairs
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Number of pixels in the patch; the normaliser of every histogram.
    pub fn area(&self) -> usize {
        self.patch_w * self.patch_h
    }

    /// The model's own counts, normalised by the patch area.
    pub fn histogram(&self) -> MatchHistogram {
        let n = self.area() as f64;
        MatchHistogram {
            counts: self.pairs.iter().map(|p| p.count / n).collect(),
        }
    }

    /// Index of the closest centre strictly within the radius. Exact distance
    /// ties go to the lowest index.
    #[inline]
    pub fn nearest(&self, px: Rgb) -> Option<usize> {
        nearest_in(&self.pairs, px, self.radius * self.radius)
    }

    pub fn match_counts(&self, pixels: &[Rgb]) -> MatchHistogram {
        let mut counts = alloc::vec![0.0; self.pairs.len()];
        for &px in pixels {
            if let Some(s) = self.nearest(px) {
                counts[s] += 1.0;
            }
        }
        let n = self.area() as f64;
        for c in &mut counts {
            *c /= n;
        }
        MatchHistogram { counts }
    }

    /// Match quality `1 - MBD(h, h~)` of a candidate region.
    pub fn quality(&self, candidate: &[Rgb], b: f64) -> f64 {
        if self.pairs.is_empty() {
            return 0.0;
        }
        // Fused form of match_counts + bhattacharyya_coefficient; avoids the
        // allocation in the hot localisation loop.
        let mut matched = [0u32; 64];
        let mut spill: Vec<u32>;
        let counts: &mut [u32] = if self.pairs.len() <= matched.len() {
            &mut matched[..self.pairs.len()]
        } else {
            spill = alloc::vec![0; self.pairs.len()];
            &mut spill
        };
        for &px in candidate {
            if let Some(s) = self.nearest(px) {
                counts[s] += 1;
            }
        }
        let n = self.area() as f64;
        let bc: f64 = self
            .pairs
            .iter()
            .zip(counts.iter())
            .map(|(p, &c)| libm::sqrt((p.count / n) * (c as f64 / n)))
            .sum();
        1.0 - modified_distance(bc, b)
    }

    /// Dual-rate update from the pixels observed at the patch's new location.
    ///
    /// Counts are interpolated towards the new match counts at rate `beta_c`,
    /// matched centres move towards (or past, for `beta_s > 1`) the mean of
    /// their matches at rate `beta_s`, unmatched pixels seed new pairs whose
    /// counts are scaled by `beta_c`, and finally every pair with a count below
    /// `beta_c` is dropped.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        pixels: &[Rgb],
        beta_c: f64,
        beta_s: f64,
        rng: &mut R,
    ) {
        let r_sq = self.radius * self.radius;
        let mut sums = alloc::vec![[0.0f64; 3]; self.pairs.len()];
        let mut hits = alloc::vec![0usize; self.pairs.len()];
        let mut unmatched = Vec::new();
        for &px in pixels {
            match nearest_in(&self.pairs, px, r_sq) {
                Some(s) => {
                    hits[s] += 1;
                    for (acc, v) in sums[s].iter_mut().zip(px) {
                        *acc += v as f64;
                    }
                }
                None => unmatched.push(px),
            }
        }

        for ((pair, &n), sum) in self.pairs.iter_mut().zip(&hits).zip(&sums) {
            pair.count = beta_c * n as f64 + (1.0 - beta_c) * pair.count;
            if n > 0 {
                let mut c = pair.centre.0;
                for (ch, s) in c.iter_mut().zip(sum) {
                    let mean = s / n as f64;
                    *ch = beta_s * mean + (1.0 - beta_s) * *ch;
                }
                pair.centre = ColourCentre(c).clamp();
            }
        }

        // A zero rate would give born pairs a zero count, which is never stored.
        if !unmatched.is_empty() && beta_c > 0.0 {
            let born = sample_pairs(&unmatched, self.radius, rng);
            self.pairs.extend(born.into_iter().map(|p| CentreCount {
                centre: p.centre,
                count: p.count * beta_c,
            }));
        }

        self.pairs.retain(|p| p.count >= beta_c);
    }

    fn prune_to<R: Rng + ?Sized>(&mut self, s_max: usize, rng: &mut R) {
        while self.pairs.len() > s_max {
            let min = self
                .pairs
                .iter()
                .map(|p| p.count)
                .fold(f64::INFINITY, f64::min);
            let tied: Vec<usize> = (0..self.pairs.len())
                .filter(|&i| self.pairs[i].count == min)
                .collect();
            let victim = tied[rng.random_range(0..tied.len())];
            self.pairs.remove(victim);
        }
    }
}

#[inline]
fn nearest_in(pairs: &[CentreCount], px: Rgb, r_sq: f64) -> Option<usize> {
    let mut best = None;
    let mut best_d = r_sq;
    for (i, p) in pairs.iter().enumerate() {
        let d = p.centre.dist_sq(px);
        if d < best_d {
            best_d = d;
            best = Some(i);
        }
    }
    best
}

/// The random-order sampling loop shared by initialisation and centre birth.
fn sample_pairs<R: Rng + ?Sized>(pixels: &[Rgb], radius: f64, rng: &mut R) -> Vec<CentreCount> {
    let mut order: Vec<usize> = (0..pixels.len()).collect();
    order.shuffle(rng);
    let r_sq = radius * radius;
    let mut pairs: Vec<CentreCount> = Vec::new();
    for i in order {
        let px = pixels[i];
        match nearest_in(&pairs, px, r_sq) {
            Some(s) => pairs[s].count += 1.0,
            None => pairs.push(CentreCount {
                centre: ColourCentre::from_rgb(px),
                count: 1.0,
            }),
        }
    }
    pairs
}

/// Bhattacharyya coefficient `sum_j sqrt(p_j q_j)`.
pub fn bhattacharyya_coefficient(p: &MatchHistogram, q: &MatchHistogram) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(p
        .counts
        .iter()
        .zip(&q.counts)
        .map(|(a, b)| libm::sqrt(a * b))
        .sum())
}

/// `(1 - bc)^b`, with the base clamped at zero against rounding above 1.
#[inline]
pub fn modified_distance(bc: f64, b: f64) -> f64 {
    libm::pow((1.0 - bc).max(0.0), b)
}

/// Modified Bhattacharyya distance. `b = 0.5` gives the Hellinger distance;
/// larger `b` favours good matches.
pub fn mbd(p: &MatchHistogram, q: &MatchHistogram, b: f64) -> Result<f64> {
    if !(b >= 0.0) {
        return Err(Error::InvalidParameter("MBD exponent must be non-negative"));
    }
    Ok(modified_distance(bhattacharyya_coefficient(p, q)?, b))
}

/// Patch quality against a candidate pixel set. Equivalent to
/// [`PatchModel::quality`] but built from the explicit histograms.
pub fn patch_quality(model: &PatchModel, candidate: &[Rgb], b: f64) -> Result<f64> {
    let h = model.histogram();
    let h_tilde = model.match_counts(candidate);
    Ok(1.0 - mbd(&h, &h_tilde, b)?)
}

/// Mean of per-patch qualities.
pub fn object_quality(qualities: &[f64]) -> Result<f64> {
    if qualities.is_empty() {
        return Err(Error::Empty("patch qualities"));
    }
    Ok(qualities.iter().sum::<f64>() / qualities.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn hist(v: &[f64]) -> MatchHistogram {
        MatchHistogram { counts: v.to_vec() }
    }

    fn model_with(centres: &[[f64; 3]], counts: &[f64], radius: f64) -> PatchModel {
        let pairs = centres
            .iter()
            .zip(counts)
            .map(|(&c, &h)| CentreCount {
                centre: ColourCentre(c),
                count: h,
            })
            .collect();
        PatchModel::from_parts(Point::new(0.0, 0.0), 5, 5, radius, pairs)
    }

    #[test]
    fn init_uniform_patch_is_one_pair() {
        let px = [[100, 150, 200]; 25];
        let m = PatchModel::init(&px, Point::new(2.0, 2.0), 5, 5, 20.0, 10, &mut rng(1)).unwrap();
        assert_eq!(m.pairs().len(), 1);
        assert_eq!(m.pairs()[0].centre, ColourCentre([100.0, 150.0, 200.0]));
        assert_eq!(m.pairs()[0].count, 25.0);
    }

    #[test]
    fn init_black_and_white() {
        let mut px = [[0, 0, 0]; 25];
        for p in px.iter_mut().skip(13) {
            *p = [255, 255, 255];
        }
        let m = PatchModel::init(&px, Point::new(2.0, 2.0), 5, 5, 20.0, 10, &mut rng(7)).unwrap();
        let mut counts: Vec<f64> = m.pairs().iter().map(|p| p.count).collect();
        counts.sort_by(f64::total_cmp);
        assert_eq!(counts, [12.0, 13.0]);
    }

    #[test]
    fn init_rejects_bad_input() {
        let mut r = rng(0);
        let loc = Point::new(0.0, 0.0);
        assert!(PatchModel::init(&[], loc, 5, 5, 20.0, 10, &mut r).is_err());
        assert!(PatchModel::init(&[[0, 0, 0]], loc, 5, 5, 0.0, 10, &mut r).is_err());
        assert!(PatchModel::init(&[[0, 0, 0]], loc, 5, 5, 20.0, 0, &mut r).is_err());
    }

    #[test]
    fn closest_centre_wins() {
        let m = model_with(&[[0.0, 0.0, 0.0], [30.0, 0.0, 0.0]], &[1.0, 1.0], 20.0);
        let h = m.match_counts(&[[14, 0, 0]]);
        assert_eq!(h.counts, [1.0 / 25.0, 0.0]);
    }

    #[test]
    fn exact_tie_goes_to_lowest_index() {
        let m = model_with(&[[0.0, 0.0, 0.0], [20.0, 0.0, 0.0]], &[1.0, 1.0], 20.0);
        assert_eq!(m.nearest([10, 0, 0]), Some(0));
    }

    #[test]
    fn radius_is_strict() {
        let m = model_with(&[[0.0, 0.0, 0.0]], &[25.0], 20.0);
        assert_eq!(m.nearest([20, 0, 0]), None);
        assert_eq!(m.nearest([19, 0, 0]), Some(0));
    }

    #[test]
    fn far_pixels_match_nothing() {
        let m = model_with(&[[0.0, 0.0, 0.0]], &[25.0], 20.0);
        assert_eq!(m.match_counts(&[[200, 200, 200]; 25]).counts, [0.0]);
        assert_eq!(m.match_counts(&[]).counts, [0.0]);
    }

    #[test]
    fn bc_examples() {
        let bc = |p: &[f64], q: &[f64]| bhattacharyya_coefficient(&hist(p), &hist(q)).unwrap();
        assert_eq!(bc(&[0.5, 0.5], &[0.5, 0.5]), 1.0);
        assert_eq!(bc(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert!((bc(&[1.0, 0.0], &[0.5, 0.5]) - 0.70711).abs() < 1e-5);
        assert!(matches!(
            bhattacharyya_coefficient(&hist(&[1.0]), &hist(&[0.5, 0.5])),
            Err(Error::LengthMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn mbd_examples() {
        let p = hist(&[1.0, 0.0]);
        let q = hist(&[0.5, 0.5]);
        assert!((mbd(&p, &q, 0.5).unwrap() - 0.54120).abs() < 1e-4);
        assert!((mbd(&p, &q, 1.4).unwrap() - 0.17920).abs() < 1e-4);
        for b in [0.1, 0.5, 1.4, 3.0] {
            assert_eq!(mbd(&q, &q, b).unwrap(), 0.0);
        }
        assert!(mbd(&p, &q, -1.0).is_err());
    }

    #[test]
    fn quality_examples() {
        let px = [[10, 20, 30]; 25];
        let m = PatchModel::init(&px, Point::new(2.0, 2.0), 5, 5, 20.0, 10, &mut rng(3)).unwrap();
        assert_eq!(patch_quality(&m, &px, 1.4).unwrap(), 1.0);
        assert_eq!(m.quality(&px, 1.4), 1.0);

        let none = [[200, 200, 200]; 25];
        assert_eq!(patch_quality(&m, &none, 1.4).unwrap(), 0.0);

        // h = [1.0], candidate half matching (12.5 of 25 is not integral, so
        // use a 4x4 normaliser with 8 matches).
        let m = model_with(&[[10.0, 20.0, 30.0]], &[16.0], 20.0);
        let m = PatchModel::from_parts(m.location, 4, 4, 20.0, m.pairs().to_vec());
        let mut cand = [[200, 200, 200]; 16];
        cand[..8].fill([10, 20, 30]);
        let q = patch_quality(&m, &cand, 1.4).unwrap();
        assert!((q - 0.82080).abs() < 1e-4, "{q}");
        assert!((m.quality(&cand, 1.4) - q).abs() < 1e-15);
    }

    #[test]
    fn object_quality_is_mean() {
        assert_eq!(object_quality(&[1.0]).unwrap(), 1.0);
        assert_eq!(object_quality(&[0.0, 1.0]).unwrap(), 0.5);
        assert!((object_quality(&[0.2, 0.4, 0.9]).unwrap() - 0.5).abs() < 1e-15);
        assert!(object_quality(&[]).is_err());
    }

    #[test]
    fn update_worked_example() {
        let mut m = model_with(&[[100.0, 100.0, 100.0]], &[10.0], 20.0);
        // 20 pixels with mean (110, 100, 100), all within R of the centre.
        let mut px = Vec::new();
        for _ in 0..10 {
            px.push([105, 100, 100]);
            px.push([115, 100, 100]);
        }
        m.update(&px, 0.05, 1.7, &mut rng(0));
        let p = m.pairs()[0];
        assert!((p.count - 10.5).abs() < 1e-12);
        assert!((p.centre.0[0] - 117.0).abs() < 1e-9);
        assert_eq!(&p.centre.0[1..], &[100.0, 100.0]);
    }

    #[test]
    fn update_prunes_faded_pairs() {
        let mut m = model_with(&[[0.0, 0.0, 0.0], [200.0, 0.0, 0.0]], &[0.04, 5.0], 20.0);
        m.update(&[], 0.05, 1.7, &mut rng(0));
        assert_eq!(m.pairs().len(), 1);
        assert!((m.pairs()[0].count - 4.75).abs() < 1e-12);
    }

    #[test]
    fn update_disabled_is_identity() {
        let mut m = model_with(&[[1.0, 2.0, 3.0], [90.0, 90.0, 90.0]], &[20.0, 5.0], 20.0);
        let before = m.clone();
        let mut px = [[1, 2, 3]; 25];
        px[..10].fill([200, 10, 10]);
        m.update(&px, 0.0, 0.0, &mut rng(0));
        assert_eq!(m, before);
    }

    #[test]
    fn birth_pairs_scaled_by_beta_c() {
        let mut m = model_with(&[[0.0, 0.0, 0.0]], &[25.0], 20.0);
        let mut px = [[0, 0, 0]; 25];
        px[..5].fill([200, 200, 200]);
        px[5] = [100, 100, 100];
        m.update(&px, 0.05, 1.7, &mut rng(0));
        assert_eq!(m.pairs().len(), 3);
        let born: Vec<f64> = m.pairs()[1..].iter().map(|p| p.count).collect();
        assert!(born.contains(&0.25));
        assert!(born.contains(&0.05));
    }

    #[test]
    fn centre_drift_is_clamped() {
        let mut m = model_with(&[[250.0, 5.0, 100.0]], &[25.0], 20.0);
        m.update(&[[255, 0, 100]; 25], 0.05, 1.7, &mut rng(0));
        assert_eq!(m.pairs()[0].centre.0, [255.0, 0.0, 100.0]);
    }
}
