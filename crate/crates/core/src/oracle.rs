//! Dense Monte Carlo ground truth.
//!
//! Whole target trajectories are drawn from the probabilistic curve (one
//! draw of every control point per trajectory) and checked for footprint
//! overlap with the ego on a uniform time grid. The colliding fraction is
//! the reference probability.
//!
//! Sample `i` uses ChaCha stream `i` of the configured seed, so any subset
//! of samples can be recomputed in any order with identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rects_intersect, Pose2};
use crate::glr::GlrConfig;
use crate::trajectory::{BezierCurve, ProbBezierCurve};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub sample_count: usize,
    pub time_steps: usize,
    pub seed: u64,
    pub horizon: f64,
    pub car_length: f64,
    pub car_width: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        let glr = GlrConfig::default();
        Self {
            sample_count: 2000,
            time_steps: 128,
            seed: 0,
            horizon: glr.horizon,
            car_length: glr.car_length,
            car_width: glr.car_width,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0
            || self.time_steps < 2
            || !(self.horizon > 0.0 && self.car_length > 0.0 && self.car_width > 0.0)
        {
            return Err(Error::Config(format!("invalid oracle configuration: {self:?}")));
        }
        Ok(())
    }

    /// Stable FNV-1a hash of every field that affects the result, used to
    /// key cached ground truth.
    pub fn config_hash(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write(&(self.sample_count as u64).to_le_bytes());
        h.write(&(self.time_steps as u64).to_le_bytes());
        h.write(&self.seed.to_le_bytes());
        h.write(&self.horizon.to_bits().to_le_bytes());
        h.write(&self.car_length.to_bits().to_le_bytes());
        h.write(&self.car_width.to_bits().to_le_bytes());
        h.finish()
    }

    /// Uniform grid over `[0, horizon]` including both ends.
    pub fn grid(&self) -> Vec<f64> {
        uniform_grid(self.horizon, self.time_steps)
    }
}

/// `steps` equally spaced times covering `[0, horizon]`.
pub fn uniform_grid(horizon: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![0.0];
    }
    (0..steps)
        .map(|k| horizon * k as f64 / (steps - 1) as f64)
        .collect()
}

/// 64-bit FNV-1a.
#[derive(Debug, Clone, Copy)]
pub struct Fnv1a(u64);

impl Fnv1a {
    pub fn new() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }

    pub fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv1a {
    fn default() -> Self {
        Self::new()
    }
}

/// Derives a per-scenario seed from a base seed and a scenario id.
pub fn scenario_seed(base: u64, scenario_id: &str) -> u64 {
    let mut h = Fnv1a::new();
    h.write(&base.to_le_bytes());
    h.write(scenario_id.as_bytes());
    h.finish()
}

/// RNG for sample `index` under `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub probability: f64,
    pub colliding_count: usize,
    pub sample_count: usize,
    pub binomial_std_error: f64,
    /// Count of colliding samples by index of their first colliding grid time.
    pub first_collision_times: Vec<usize>,
}

impl OracleResult {
    fn from_counts(first_collision_times: Vec<usize>, sample_count: usize) -> Self {
        let colliding_count: usize = first_collision_times.iter().sum();
        let p = colliding_count as f64 / sample_count as f64;
        Self {
            probability: p,
            colliding_count,
            sample_count,
            binomial_std_error: (p * (1.0 - p) / sample_count as f64).sqrt(),
            first_collision_times,
        }
    }
}

/// Precomputed ego footprints on the grid; shared across samples.
struct EgoTrack {
    poses: Vec<Pose2>,
}

impl EgoTrack {
    fn new(ego: &BezierCurve, grid: &[f64]) -> Result<Self> {
        let poses = grid
            .iter()
            .map(|&t| Ok(Pose2::new(ego.evaluate(t)?, ego.heading(t)?)))
            .collect::<Result<_>>()?;
        Ok(Self { poses })
    }
}

/// First grid index at which `sample` overlaps the ego, if any.
fn first_collision(
    ego: &EgoTrack,
    sample: &BezierCurve,
    grid: &[f64],
    cfg: &OracleConfig,
) -> Result<Option<usize>> {
    for (k, (&t, ego_pose)) in grid.iter().zip(&ego.poses).enumerate() {
        let ego_rect = crate::geometry::OrientedRect::new(*ego_pose, cfg.car_length, cfg.car_width)?;
        let pose = Pose2::new(sample.evaluate(t)?, sample.heading(t)?);
        let rect = crate::geometry::OrientedRect::new(pose, cfg.car_length, cfg.car_width)?;
        if rects_intersect(&ego_rect, &rect) {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// Whether sample `index` collides, and at which grid step first.
pub fn sample_first_collision(
    ego: &BezierCurve,
    target: &ProbBezierCurve,
    cfg: &OracleConfig,
    index: u64,
) -> Result<Option<usize>> {
    let grid = cfg.grid();
    let track = EgoTrack::new(ego, &grid)?;
    let sample = target.sample_trajectory(&mut sample_rng(cfg.seed, index));
    first_collision(&track, &sample, &grid, cfg)
}

pub fn ground_truth(
    ego: &BezierCurve,
    target: &ProbBezierCurve,
    cfg: &OracleConfig,
) -> Result<OracleResult> {
    cfg.validate()?;
    for (h, what) in [(ego.horizon(), "ego"), (target.horizon(), "target")] {
        if h + 1e-9 < cfg.horizon {
            return Err(Error::InvalidArgument(format!(
                "{what} horizon {h} s does not cover the oracle grid ({} s)",
                cfg.horizon
            )));
        }
    }
    let grid = cfg.grid();
    let track = EgoTrack::new(ego, &grid)?;
    let mut hist = vec![0usize; cfg.time_steps];
    for i in 0..cfg.sample_count {
        let sample = target.sample_trajectory(&mut sample_rng(cfg.seed, i as u64));
        if let Some(k) = first_collision(&track, &sample, &grid, cfg)? {
            hist[k] += 1;
        }
    }
    Ok(OracleResult::from_counts(hist, cfg.sample_count))
}
