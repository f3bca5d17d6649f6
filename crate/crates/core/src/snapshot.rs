//! Binary tracker snapshots.
//!
//! Layout: the magic `PBTS`, a little-endian `u32` format version, then a
//! sequence of sections, each a 4-byte tag, a little-endian `u32` payload
//! length and the payload. Sections, in order:
//!
//! * `CONF`: the tracker configuration; restore refuses a different one.
//! * `STAT`: frame index and previous box.
//! * `RNGS`: seed, stream and word position of every stage stream.
//! * `PTCH`: every patch model.
//!
//! All numbers are little-endian; reals are IEEE-754 `f64` bit patterns, so a
//! restored tracker continues bit-identically.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::colour_model::{CentreCount, ColourCentre, PatchModel};
use crate::config::TrackerConfig;
use crate::error::{Error, Result};
use crate::geometry::{Box, Point};
use crate::tracker::{RngStreams, Tracker, TrackerState};

pub const MAGIC: &[u8; 4] = b"PBTS";
pub const VERSION: u32 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }
    fn section(&mut self, tag: &[u8; 4], body: impl FnOnce(&mut Writer)) {
        let mut inner = Writer(Vec::new());
        body(&mut inner);
        self.0.extend_from_slice(tag);
        self.u32(inner.0.len() as u32);
        self.0.extend_from_slice(&inner.0);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::CorruptSnapshot("truncated payload"));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }
    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::CorruptSnapshot("length overflow"))
    }
    fn section(&mut self, tag: &[u8; 4]) -> Result<Reader<'a>> {
        if &self.array::<4>()? != tag {
            return Err(Error::CorruptSnapshot("unexpected section"));
        }
        let len = self.u32()? as usize;
        Ok(Reader {
            buf: self.take(len)?,
        })
    }
    fn finish(&self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(Error::CorruptSnapshot("trailing bytes"))
        }
    }
}

fn write_config(w: &mut Writer, c: &TrackerConfig) {
    for v in [c.patches, c.patch_w, c.patch_h, c.s_max, c.candidates, c.refined, c.window] {
        w.usize(v);
    }
    let p = &c.priors;
    let s = &c.segmenter;
    for v in [
        c.radius,
        c.mbd_exponent,
        c.beta_c,
        c.beta_s,
        c.gamma,
        c.expand,
        p.sigma_rotation,
        p.sigma_scale,
        p.sigma_x,
        p.sigma_y,
        s.rho_inner,
        s.rho_outer,
        s.tau,
        s.lambda,
    ] {
        w.f64(v);
    }
    let a = &c.ablation;
    let flags = [
        a.no_local_opt,
        a.no_update,
        a.no_segmentation,
        a.uniform_placement,
        a.default_mbd,
    ]
    .iter()
    .enumerate()
    .fold(0u32, |acc, (i, &on)| acc | ((on as u32) << i));
    w.u32(flags);
}

fn config_bytes(c: &TrackerConfig) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    write_config(&mut w, c);
    w.0
}

pub fn snapshot(tracker: &Tracker) -> Vec<u8> {
    let state = tracker.state();
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.section(b"CONF", |w| write_config(w, tracker.config()));
    w.section(b"STAT", |w| {
        w.u64(state.frame_index);
        let b = state.prev_box;
        for v in [b.x, b.y, b.w, b.h] {
            w.f64(v);
        }
    });
    w.section(b"RNGS", |w| {
        for rng in state.rng.as_array() {
            w.0.extend_from_slice(&rng.get_seed());
            w.u64(rng.get_stream());
            w.0.extend_from_slice(&rng.get_word_pos().to_le_bytes());
        }
    });
    w.section(b"PTCH", |w| {
        w.usize(state.patches.len());
        for p in &state.patches {
            w.f64(p.location.x);
            w.f64(p.location.y);
            w.usize(p.patch_w);
            w.usize(p.patch_h);
            w.f64(p.radius());
            w.usize(p.pairs().len());
            for pair in p.pairs() {
                for v in pair.centre.0 {
                    w.f64(v);
                }
                w.f64(pair.count);
            }
        }
    });
    w.0
}

/// Rebuilds a tracker from [`snapshot`] bytes. `cfg` must equal the
/// configuration the snapshot was taken with.
pub fn restore(bytes: &[u8], cfg: &TrackerConfig) -> Result<Tracker> {
    let mut r = Reader { buf: bytes };
    if &r.array::<4>()? != MAGIC {
        return Err(Error::CorruptSnapshot("bad magic"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::SnapshotVersion {
            found: version,
            expected: VERSION,
        });
    }

    let conf = r.section(b"CONF")?;
    if conf.buf != config_bytes(cfg).as_slice() {
        return Err(Error::SnapshotConfigMismatch);
    }

    let mut stat = r.section(b"STAT")?;
    let frame_index = stat.u64()?;
    let prev_box = Box::new(stat.f64()?, stat.f64()?, stat.f64()?, stat.f64()?);
    stat.finish()?;

    let mut rngs = r.section(b"RNGS")?;
    let mut streams = Vec::with_capacity(RngStreams::COUNT);
    for _ in 0..RngStreams::COUNT {
        let mut rng = ChaCha8Rng::from_seed(rngs.array::<32>()?);
        rng.set_stream(rngs.u64()?);
        rng.set_word_pos(u128::from_le_bytes(rngs.array::<16>()?));
        streams.push(rng);
    }
    rngs.finish()?;
    let streams: [ChaCha8Rng; RngStreams::COUNT] =
        streams.try_into().expect("exactly COUNT streams");

    let mut ptch = r.section(b"PTCH")?;
    let n = ptch.usize()?;
    if n == 0 || n > ptch.buf.len() {
        return Err(Error::CorruptSnapshot("bad patch count"));
    }
    let mut patches = Vec::with_capacity(n);
    for _ in 0..n {
        let location = Point::new(ptch.f64()?, ptch.f64()?);
        let patch_w = ptch.usize()?;
        let patch_h = ptch.usize()?;
        let radius = ptch.f64()?;
        let npairs = ptch.usize()?;
        if npairs > ptch.buf.len() / 32 {
            return Err(Error::CorruptSnapshot("bad pair count"));
        }
        let mut pairs = Vec::with_capacity(npairs);
        for _ in 0..npairs {
            let centre = ColourCentre([ptch.f64()?, ptch.f64()?, ptch.f64()?]);
            pairs.push(CentreCount {
                centre,
                count: ptch.f64()?,
            });
        }
        if patch_w != cfg.patch_w || patch_h != cfg.patch_h {
            return Err(Error::CorruptSnapshot("patch size disagrees with configuration"));
        }
        patches.push(PatchModel::from_parts(location, patch_w, patch_h, radius, pairs));
    }
    ptch.finish()?;
    r.finish()?;

    Ok(Tracker::from_parts(
        *cfg,
        TrackerState {
            patches,
            prev_box,
            frame_index,
            rng: RngStreams::from_array(streams),
        },
    ))
}
