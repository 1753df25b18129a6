//! Deterministic synthetic scenarios: ground truth, corrupted detections,
//! appearance embeddings, regression proposals, and camera warps.
//!
//! Targets move with constant image-space velocity and reflect off the arena
//! walls. A camera drift of `d` px/frame is folded into the image-space
//! velocity and reported as a per-frame warp translating by `-d`.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{AffineWarp, BBox};
use crate::tracktor::{Embedding, EmbeddingTable, WarpTable};
use crate::types::{Detection, Sequence, Trajectory};

/// Inclusive frame window for one identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Window {
    pub id: u32,
    pub start: u32,
    pub end: u32,
}

impl Window {
    pub fn contains(&self, id: u32, frame: u32) -> bool {
        self.id == id && (self.start..=self.end).contains(&frame)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SynthConfig {
    pub n_objects: u32,
    pub n_frames: u32,
    /// `(width, height)` in px.
    pub arena: (f64, f64),
    /// Box width range in px.
    pub width_range: (f64, f64),
    /// Height / width range.
    pub aspect_range: (f64, f64),
    /// Speed range in px/frame.
    pub speed_range: (f64, f64),
    /// Per-frame probability that a target picks a new heading.
    pub turn_rate: f64,
    /// Probability a visible target yields no detection.
    pub fn_rate: f64,
    /// Expected false boxes per frame.
    pub fp_rate: f64,
    /// Std of the Gaussian corner jitter, px.
    pub jitter_sigma: f64,
    /// Windows in which a target is hidden: no ground truth, detection, or proposal.
    pub occlusions: Vec<Window>,
    /// Windows in which only the detector misses a visible target.
    pub dropouts: Vec<Window>,
    /// Camera translation in px/frame.
    pub camera_drift: Option<(f64, f64)>,
    pub embedding_dim: usize,
    pub embedding_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_objects: 8,
            n_frames: 60,
            arena: (640.0, 480.0),
            width_range: (20.0, 40.0),
            aspect_range: (2.0, 2.5),
            speed_range: (1.0, 4.0),
            turn_rate: 0.0,
            fn_rate: 0.0,
            fp_rate: 0.0,
            jitter_sigma: 0.0,
            occlusions: Vec::new(),
            dropouts: Vec::new(),
            camera_drift: None,
            embedding_dim: 16,
            embedding_noise: 0.05,
            seed: 42,
        }
    }
}

fn valid_range(r: (f64, f64)) -> bool {
    r.0.is_finite() && r.1.is_finite() && r.0 <= r.1
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_frames < 1 {
            return Err(Error::Config("n_frames must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.fn_rate) || !(0.0..=1.0).contains(&self.turn_rate) {
            return Err(Error::Config("probabilities must lie in [0, 1]"));
        }
        if !(self.fp_rate >= 0.0 && self.fp_rate.is_finite()) {
            return Err(Error::Config("fp_rate must be a finite nonnegative rate"));
        }
        if !(self.jitter_sigma >= 0.0) || !(self.embedding_noise >= 0.0) {
            return Err(Error::Config("noise levels must be nonnegative"));
        }
        if !valid_range(self.width_range)
            || !valid_range(self.aspect_range)
            || !valid_range(self.speed_range)
            || self.width_range.0 <= 0.0
            || self.aspect_range.0 <= 0.0
            || self.speed_range.0 < 0.0
        {
            return Err(Error::Config("ranges must be ordered and positive"));
        }
        let max_h = self.width_range.1 * self.aspect_range.1;
        if !(self.width_range.1 < self.arena.0 && max_h < self.arena.1) {
            return Err(Error::Config("objects do not fit in the arena"));
        }
        if self.embedding_dim == 0 {
            return Err(Error::Config("embedding_dim must be at least 1"));
        }
        let windows_ok = self.occlusions.iter().chain(&self.dropouts).all(|w| {
            w.id >= 1
                && w.id <= self.n_objects
                && w.start >= 1
                && w.start <= w.end
                && w.end <= self.n_frames
        });
        if !windows_ok {
            return Err(Error::Config("occlusion or dropout window out of range"));
        }
        if let Some((dx, dy)) = self.camera_drift {
            if !(dx.is_finite() && dy.is_finite()) {
                return Err(Error::Config("camera drift must be finite"));
            }
        }
        Ok(())
    }

    fn occluded(&self, id: u32, frame: u32) -> bool {
        self.occlusions.iter().any(|w| w.contains(id, frame))
    }

    fn dropped(&self, id: u32, frame: u32) -> bool {
        self.dropouts.iter().any(|w| w.contains(id, frame))
    }
}

/// Everything one scenario produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub gt: Vec<Trajectory>,
    pub detections: Sequence,
    pub warps: WarpTable,
    pub embeddings: EmbeddingTable,
    /// Jittered boxes of every visible target, independent of detector misses.
    pub proposals: Sequence,
}

struct Target {
    bbox: BBox,
    vx: f64,
    vy: f64,
    speed: f64,
    anchor: Vec<f64>,
}

fn uniform(rng: &mut ChaCha8Rng, r: (f64, f64)) -> f64 {
    if r.0 == r.1 {
        r.0
    } else {
        rng.random_range(r.0..r.1)
    }
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        if n > 1e-9 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn jitter(rng: &mut ChaCha8Rng, noise: &Normal<f64>, b: &BBox) -> BBox {
    let (dl, dt, dr, db) = (
        noise.sample(rng),
        noise.sample(rng),
        noise.sample(rng),
        noise.sample(rng),
    );
    let width = (b.width + dr - dl).max(1.0);
    let height = (b.height + db - dt).max(1.0);
    BBox::new(b.left + dl, b.top + dt, width, height)
}

fn reflect(pos: &mut f64, vel: &mut f64, lo: f64, hi: f64) {
    if *pos < lo {
        *pos = 2.0 * lo - *pos;
        *vel = -*vel;
    } else if *pos > hi {
        *pos = 2.0 * hi - *pos;
        *vel = -*vel;
    }
    *pos = pos.clamp(lo, hi);
}

/// Generates a scenario; a pure function of `cfg` (including its seed).
pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut emb_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut prop_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xc2b2_ae3d_27d4_eb4f);
    let jitter_noise =
        Normal::new(0.0, cfg.jitter_sigma).map_err(|_| Error::Config("bad jitter"))?;
    let emb_noise =
        Normal::new(0.0, cfg.embedding_noise).map_err(|_| Error::Config("bad noise"))?;
    let clutter = if cfg.fp_rate > 0.0 {
        Some(Poisson::new(cfg.fp_rate).map_err(|_| Error::Config("bad fp_rate"))?)
    } else {
        None
    };
    let (drift_x, drift_y) = cfg.camera_drift.unwrap_or((0.0, 0.0));
    let (aw, ah) = cfg.arena;

    let mut targets: Vec<Target> = (0..cfg.n_objects)
        .map(|_| {
            let w = uniform(&mut rng, cfg.width_range);
            let h = w * uniform(&mut rng, cfg.aspect_range);
            let left = uniform(&mut rng, (0.0, aw - w));
            let top = uniform(&mut rng, (0.0, ah - h));
            let speed = uniform(&mut rng, cfg.speed_range);
            let heading = uniform(&mut rng, (0.0, 2.0 * PI));
            Target {
                bbox: BBox::new(left, top, w, h),
                vx: speed * libm::cos(heading) - drift_x,
                vy: speed * libm::sin(heading) - drift_y,
                speed,
                anchor: random_unit(&mut emb_rng, cfg.embedding_dim),
            }
        })
        .collect();

    let mut gt: Vec<Trajectory> = (1..=cfg.n_objects).map(Trajectory::new).collect();
    let mut detections = Sequence::new(cfg.n_frames);
    let mut proposals = Sequence::new(cfg.n_frames);
    let mut embeddings = EmbeddingTable::new();
    let mut warps = WarpTable::new();

    for frame in 1..=cfg.n_frames {
        if frame > 1 {
            if let Some((dx, dy)) = cfg.camera_drift {
                warps.insert(frame, AffineWarp::translation(-dx, -dy));
            }
        }
        let mut frame_dets: Vec<(Detection, Vec<f64>)> = Vec::new();
        for (k, t) in targets.iter().enumerate() {
            let id = k as u32 + 1;
            if cfg.occluded(id, frame) {
                continue;
            }
            gt[k].boxes.insert(frame, t.bbox);
            proposals.push(Detection::new(
                frame,
                jitter(&mut prop_rng, &jitter_noise, &t.bbox),
                0.9,
            ));
            let missed = rng.random::<f64>() < cfg.fn_rate;
            if missed || cfg.dropped(id, frame) {
                continue;
            }
            let b = jitter(&mut rng, &jitter_noise, &t.bbox);
            let conf = rng.random_range(0.7..1.0);
            let emb = t
                .anchor
                .iter()
                .map(|a| a + emb_noise.sample(&mut emb_rng))
                .collect();
            frame_dets.push((Detection::new(frame, b, conf), emb));
        }
        if let Some(p) = &clutter {
            let n = p.sample(&mut rng) as usize;
            for _ in 0..n {
                let w = uniform(&mut rng, cfg.width_range);
                let h = w * uniform(&mut rng, cfg.aspect_range);
                let b = BBox::new(
                    uniform(&mut rng, (0.0, aw - w)),
                    uniform(&mut rng, (0.0, ah - h)),
                    w,
                    h,
                );
                let conf = rng.random_range(0.3..0.9);
                frame_dets.push((
                    Detection::new(frame, b, conf),
                    random_unit(&mut emb_rng, cfg.embedding_dim),
                ));
            }
        }
        frame_dets.shuffle(&mut rng);
        for (idx, (mut d, emb)) in frame_dets.into_iter().enumerate() {
            let key = (frame, idx as u32);
            d.embedding_key = Some(key);
            embeddings.insert(key, Embedding::new(emb)?);
            detections.push(d);
        }

        for t in &mut targets {
            if cfg.turn_rate > 0.0 && rng.random::<f64>() < cfg.turn_rate {
                let heading = uniform(&mut rng, (0.0, 2.0 * PI));
                t.vx = t.speed * libm::cos(heading) - drift_x;
                t.vy = t.speed * libm::sin(heading) - drift_y;
            }
            let mut left = t.bbox.left + t.vx;
            let mut top = t.bbox.top + t.vy;
            reflect(&mut left, &mut t.vx, 0.0, aw - t.bbox.width);
            reflect(&mut top, &mut t.vy, 0.0, ah - t.bbox.height);
            t.bbox = BBox::new(left, top, t.bbox.width, t.bbox.height);
        }
    }
    gt.retain(|t| !t.is_empty());
    Ok(SynthOutput {
        gt,
        detections,
        warps,
        embeddings,
        proposals,
    })
}

/// A named scenario instantiated for a list of seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub configs: Vec<SynthConfig>,
}

pub const SCENARIO_NAMES: [&str; 5] = [
    "clean",
    "missed-detections",
    "clutter",
    "occlusion-heavy",
    "moving-camera",
];
pub const EXTRA_SCENARIOS: [&str; 1] = ["direction-change"];
pub const SUITE_SEEDS: core::ops::RangeInclusive<u64> = 1..=10;

/// One or two occlusion windows per target, 3–8 frames long, away from the sequence ends.
fn occlusion_windows(n_objects: u32, n_frames: u32, seed: u64) -> Vec<Window> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ 0x0cc1);
    let mut out = Vec::new();
    for id in 1..=n_objects {
        let count = if rng.random::<f64>() < 0.5 { 1 } else { 2 };
        let segment = (n_frames - 10) / count;
        for k in 0..count {
            let len = rng.random_range(3..=8u32);
            let lo = 6 + k * segment;
            let hi = (lo + segment).saturating_sub(len + 4).max(lo);
            let start = rng.random_range(lo..=hi);
            out.push(Window {
                id,
                start,
                end: (start + len - 1).min(n_frames),
            });
        }
    }
    out
}

/// Config for a named scenario and seed.
pub fn scenario_config(name: &str, seed: u64) -> Option<SynthConfig> {
    let base = SynthConfig {
        seed,
        jitter_sigma: 1.0,
        ..SynthConfig::default()
    };
    Some(match name {
        "clean" => SynthConfig {
            jitter_sigma: 0.5,
            ..base
        },
        "missed-detections" => SynthConfig {
            fn_rate: 0.2,
            ..base
        },
        "clutter" => SynthConfig {
            fp_rate: 2.0,
            ..base
        },
        "occlusion-heavy" => SynthConfig {
            fn_rate: 0.05,
            fp_rate: 0.2,
            occlusions: occlusion_windows(base.n_objects, base.n_frames, seed),
            ..base
        },
        "moving-camera" => SynthConfig {
            fn_rate: 0.05,
            camera_drift: Some((3.0, 0.0)),
            ..base
        },
        "direction-change" => SynthConfig {
            turn_rate: 0.1,
            speed_range: (2.0, 5.0),
            ..base
        },
        _ => return None,
    })
}

/// The five canonical scenarios with seeds 1–10 each.
pub fn benchmark_suite() -> Vec<Scenario> {
    SCENARIO_NAMES
        .iter()
        .map(|&name| Scenario {
            name: name.into(),
            configs: SUITE_SEEDS
                .map(|s| scenario_config(name, s).expect("known name"))
                .collect(),
        })
        .collect()
}
