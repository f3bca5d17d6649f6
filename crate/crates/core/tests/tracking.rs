mod common;

use common::{object_box, scene};
use pbts_core::{
    extract_patch_pixels, patch_quality, restore, snapshot, Box, Error, MotionPriors, Point,
    Tracker, TrackerConfig,
};

fn centroid(ps: &[Point]) -> Point {
    Point::centroid(ps.iter().copied()).unwrap()
}

fn still_priors() -> MotionPriors {
    MotionPriors {
        sigma_rotation: 1e-9,
        sigma_scale: 1e-9,
        sigma_x: 1e-9,
        sigma_y: 1e-9,
    }
}

#[test]
fn static_scene_stays_put() {
    // Noise-free tiles bigger than a patch: every model reproduces itself
    // exactly, so staying put scores a perfect 1.
    let img = common::tiles(120, 100, 30, 25, 50, 40);
    let cfg = TrackerConfig {
        priors: still_priors(),
        ..Default::default()
    };
    let mut t = Tracker::init(&img, &object_box(30, 25, 50, 40), &cfg, 3).unwrap();
    let before = t.patch_centres();
    let self_quality: Vec<f64> = t
        .state()
        .patches
        .iter()
        .map(|p| patch_quality(p, &extract_patch_pixels(&img, p.location, 5, 5), 1.4).unwrap())
        .collect();

    let cfg_no_update = TrackerConfig {
        ablation: pbts_core::Ablation {
            no_update: true,
            ..Default::default()
        },
        ..cfg
    };
    let mut frozen = Tracker::init(&img, &object_box(30, 25, 50, 40), &cfg_no_update, 3).unwrap();

    assert!(self_quality.iter().all(|&q| q == 1.0));
    let first = t.step(&img).unwrap();
    for (a, b) in t.patch_centres().iter().zip(&before) {
        assert!(a.dist(*b) < 1e-6, "{a:?} vs {b:?}");
    }
    for (q, s) in first.qualities.iter().zip(&self_quality) {
        assert!((q - s).abs() < 1e-12);
    }
    let second = t.step(&img).unwrap();
    let (a, b) = (first.predicted, second.predicted);
    assert!((a.x - b.x).abs() < 1e-6 && (a.y - b.y).abs() < 1e-6);
    assert!((a.w - b.w).abs() < 1e-6 && (a.h - b.h).abs() < 1e-6);

    let models = frozen.state().patches.clone();
    for _ in 0..3 {
        frozen.step(&img).unwrap();
        assert_eq!(frozen.state().patches.len(), models.len());
        for (a, b) in frozen.state().patches.iter().zip(&models) {
            assert_eq!(a.pairs(), b.pairs());
        }
    }
}

#[test]
fn translation_is_recovered() {
    let (w, h) = (160, 120);
    let object = (40, 35, 50, 40);
    let frame0 = common::world(w, h, object, (0, 0));
    let frame1 = common::world(w, h, object, (7, 3));
    let bbox = object_box(40, 35, 50, 40);
    let cfg = TrackerConfig::default();
    let mut hits = 0;
    for seed in 0..100 {
        let mut t = Tracker::init(&frame0, &bbox, &cfg, seed).unwrap();
        let c0 = centroid(&t.patch_centres());
        t.step(&frame1).unwrap();
        let c1 = centroid(&t.patch_centres());
        if (c1.x - c0.x - 7.0).abs() <= 1.0 && (c1.y - c0.y - 3.0).abs() <= 1.0 {
            hits += 1;
        }
    }
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn refinement_and_selection_invariants() {
    let frame0 = scene(140, 110, 40, 35, 50, 40);
    let frame1 = scene(140, 110, 44, 33, 50, 40);
    let cfg = TrackerConfig {
        candidates: 200,
        refined: 20,
        ..Default::default()
    };
    let mut t = Tracker::init(&frame0, &object_box(40, 35, 50, 40), &cfg, 11).unwrap();
    let models = t.state().patches.clone();
    let out = t.step(&frame1).unwrap();
    let loc = &out.localisation;
    assert_eq!(loc.kept.len(), 20);
    assert_eq!(loc.refined.len(), 20);

    let best_q = loc.refined.iter().map(|c| c.quality).fold(f64::MIN, f64::max);
    assert_eq!(loc.best.quality, best_q);
    for (k, r) in loc.kept.iter().zip(&loc.refined) {
        assert!(r.quality >= k.quality);
    }

    // Recheck every patch's window choice from scratch.
    for (k, r) in loc.kept.iter().zip(&loc.refined) {
        for (p, model) in models.iter().enumerate() {
            let base = k.patch_centres[p];
            let chosen = r.patch_centres[p];
            let (ox, oy) = ((chosen.x - base.x).round() as i64, (chosen.y - base.y).round() as i64);
            let mut best = f64::MIN;
            let mut scores = vec![];
            for dy in -2..=2i64 {
                for dx in -2..=2i64 {
                    let c = Point::new(base.x + dx as f64, base.y + dy as f64);
                    let q = patch_quality(model, &extract_patch_pixels(&frame1, c, 5, 5), 1.4)
                        .unwrap();
                    best = best.max(q);
                    scores.push((dx, dy, q));
                }
            }
            let q_chosen = scores.iter().find(|s| s.0 == ox && s.1 == oy).unwrap().2;
            assert!((q_chosen - best).abs() < 1e-12);
            assert!((r.patch_qualities[p] - best).abs() < 1e-12);
            let min_d = scores
                .iter()
                .filter(|s| (s.2 - best).abs() < 1e-12)
                .map(|s| s.0 * s.0 + s.1 * s.1)
                .min()
                .unwrap();
            assert_eq!(ox * ox + oy * oy, min_d);
        }
    }
}

#[test]
fn single_candidate_without_refinement() {
    let img = scene(120, 100, 30, 25, 50, 40);
    let cfg = TrackerConfig {
        candidates: 1,
        refined: 0,
        ..Default::default()
    };
    let mut t = Tracker::init(&img, &object_box(30, 25, 50, 40), &cfg, 5).unwrap();
    let out = t.step(&img).unwrap();
    assert_eq!(out.localisation.kept.len(), 1);
    assert_eq!(out.localisation.kept, out.localisation.refined);
    assert_eq!(out.localisation.best, out.localisation.kept[0]);
}

#[test]
fn counts_stay_above_floor() {
    let img = scene(120, 100, 30, 25, 50, 40);
    let cfg = TrackerConfig::default();
    let mut t = Tracker::init(&img, &object_box(30, 25, 50, 40), &cfg, 6).unwrap();
    t.step(&img).unwrap();
    for p in &t.state().patches {
        assert!(p.pairs().iter().all(|c| c.count >= cfg.beta_c));
    }
}

#[test]
fn snapshot_round_trip_continues_identically() {
    let frames: Vec<_> = (0..4).map(|i| scene(120, 100, 30 + 2 * i, 25 + i, 50, 40)).collect();
    let cfg = TrackerConfig {
        candidates: 300,
        refined: 30,
        ..Default::default()
    };
    let mut t = Tracker::init(&frames[0], &object_box(30, 25, 50, 40), &cfg, 21).unwrap();
    t.step(&frames[1]).unwrap();
    let bytes = snapshot(&t);
    let mut r = restore(&bytes, &cfg).unwrap();
    assert_eq!(r, t);
    for f in &frames[2..] {
        assert_eq!(t.step(f).unwrap(), r.step(f).unwrap());
    }
    assert_eq!(snapshot(&t), snapshot(&r));

    assert!(matches!(
        restore(&bytes[..bytes.len() - 3], &cfg),
        Err(Error::CorruptSnapshot(_))
    ));
    assert!(matches!(restore(&bytes[..2], &cfg), Err(Error::CorruptSnapshot(_))));
    let other = TrackerConfig {
        patches: 20,
        ..cfg
    };
    assert_eq!(restore(&bytes, &other), Err(Error::SnapshotConfigMismatch));
    let mut bumped = bytes.clone();
    bumped[4] = 9;
    assert!(matches!(restore(&bumped, &cfg), Err(Error::SnapshotVersion { found: 9, .. })));
}

#[test]
fn same_seed_same_trajectory() {
    let frames: Vec<_> = (0..5).map(|i| scene(120, 100, 30 + 3 * i, 25, 50, 40)).collect();
    let run = |seed| {
        let mut t =
            Tracker::init(&frames[0], &object_box(30, 25, 50, 40), &TrackerConfig::default(), seed)
                .unwrap();
        frames[1..]
            .iter()
            .map(|f| t.step(f).unwrap().predicted)
            .collect::<Vec<Box>>()
    };
    assert_eq!(run(4), run(4));
}

#[test]
fn ablation_switches_touch_only_their_stage() {
    let frame0 = scene(120, 100, 30, 25, 50, 40);
    let frame1 = scene(120, 100, 33, 26, 50, 40);
    let bbox = object_box(30, 25, 50, 40);
    let base = TrackerConfig {
        candidates: 300,
        refined: 30,
        ..Default::default()
    };
    let with = |f: fn(&mut pbts_core::Ablation)| {
        let mut c = base;
        f(&mut c.ablation);
        c
    };
    let (full, full_diag) = Tracker::init_with_diagnostics(&frame0, &bbox, &base, 9).unwrap();
    let full_step = full.clone().step(&frame1).unwrap();

    // Model update happens after localisation.
    let mut t = Tracker::init(&frame0, &bbox, &with(|a| a.no_update = true), 9).unwrap();
    assert_eq!(t.state().patches, full.state().patches);
    assert_eq!(t.step(&frame1).unwrap().localisation, full_step.localisation);

    // The MBD exponent only enters scoring.
    let t = Tracker::init(&frame0, &bbox, &with(|a| a.default_mbd = true), 9).unwrap();
    assert_eq!(t.state().patches, full.state().patches);

    // Uniform placement keeps the segmentation.
    let (_, d) =
        Tracker::init_with_diagnostics(&frame0, &bbox, &with(|a| a.uniform_placement = true), 9)
            .unwrap();
    assert_eq!(d.mask, full_diag.mask);
    assert_eq!(d.centres.len(), 35);

    // Dropping refinement leaves the global ranking alone.
    let mut t = Tracker::init(&frame0, &bbox, &with(|a| a.no_local_opt = true), 9).unwrap();
    let s = t.step(&frame1).unwrap();
    assert_eq!(s.localisation.kept[0], full_step.localisation.kept[0]);
    assert_eq!(s.localisation.best, full_step.localisation.kept[0]);

    // Skipping segmentation gives an all-object mask over the same region.
    let (_, d) =
        Tracker::init_with_diagnostics(&frame0, &bbox, &with(|a| a.no_segmentation = true), 9)
            .unwrap();
    assert_eq!(d.mask.region, full_diag.mask.region);
    assert!(d.mask.data.iter().all(|&m| m));
}

#[test]
fn init_places_patches_on_large_object() {
    let (ox, oy, ow, oh) = (40, 30, 80, 60);
    let img = scene(180, 140, ox, oy, ow, oh);
    let (t, d) = Tracker::init_with_diagnostics(
        &img,
        &object_box(ox, oy, ow, oh),
        &TrackerConfig::default(),
        1,
    )
    .unwrap();
    let n = t.state().patches.len();
    assert!((28..=35).contains(&n), "{n}");
    assert!(n <= d.labels.as_ref().unwrap().count);
    for c in t.patch_centres() {
        let (x, y) = (c.x as i64, c.y as i64);
        assert!(x >= ox && x < ox + ow && y >= oy && y < oy + oh, "{c:?}");
    }
}

#[test]
fn init_rejects_box_outside_frame() {
    let img = scene(60, 60, 10, 10, 20, 20);
    assert_eq!(
        Tracker::init(&img, &Box::new(100.0, 100.0, 10.0, 10.0), &TrackerConfig::default(), 0),
        Err(Error::BoxOutsideFrame)
    );
    // A box hanging over the edge is clipped.
    let t = Tracker::init(&img, &Box::new(-5.0, -5.0, 30.0, 30.0), &TrackerConfig::default(), 0)
        .unwrap();
    assert_eq!(t.state().prev_box, Box::new(0.0, 0.0, 25.0, 25.0));
}

#[cfg(feature = "parallel")]
#[test]
fn thread_count_does_not_change_results() {
    let frames: Vec<_> = (0..4).map(|i| scene(120, 100, 30 + 3 * i, 25 + i, 50, 40)).collect();
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut t = Tracker::init(
                &frames[0],
                &object_box(30, 25, 50, 40),
                &TrackerConfig::default(),
                17,
            )
            .unwrap();
            frames[1..].iter().map(|f| t.step(f).unwrap()).collect::<Vec<_>>()
        })
    };
    assert_eq!(run(1), run(8));
}
