//! Comparison estimators.
//!
//! These are minimal reconstructions of the estimator families GLR is
//! benchmarked against. All of them read the same fitted curves and the
//! same target marginals as GLR, so score differences come from the
//! estimation method alone. Vehicle dimensions and the horizon come from
//! [`GlrConfig`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rects_intersect, OrientedRect, Pose2};
use crate::glr::{hazard, GlrConfig, GlrEstimator, RiskBreakdown};
use crate::oracle::uniform_grid;
use crate::probability::{integral_over_disk, DISK_ORDER};
use crate::trajectory::{BezierCurve, ProbBezierCurve};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    /// Size of the uniform time grid over the horizon.
    pub time_steps: usize,
    /// Per-step discount of Discounted BIUB.
    pub discount: f64,
    /// VS-PF particles per grid time.
    pub particles: usize,
    /// Sampled trajectories for QMLGL.
    pub qmlgl_samples: usize,
    /// Vehicle circle radius, m. Defaults to the rectangle half-diagonal.
    pub circle_radius: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self::for_vehicle(&GlrConfig::default())
    }
}

impl BaselineConfig {
    /// Defaults with the circle radius bounding the configured rectangle.
    pub fn for_vehicle(glr: &GlrConfig) -> Self {
        Self {
            time_steps: 128,
            discount: 0.95,
            particles: 500,
            qmlgl_samples: 2000,
            circle_radius: 0.5 * glr.car_length.hypot(glr.car_width),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.time_steps >= 1
            && self.discount > 0.0
            && self.discount <= 1.0
            && self.particles >= 1
            && self.qmlgl_samples >= 1
            && self.circle_radius > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid baseline configuration: {self:?}")))
        }
    }
}

fn grid(glr: &GlrConfig, cfg: &BaselineConfig) -> Vec<f64> {
    uniform_grid(glr.horizon, cfg.time_steps)
}

/// Probability that the two vehicle circles overlap at `t`, with the target
/// centroid distributed as its marginal.
pub fn circle_pcol(
    ego: &BezierCurve,
    target: &ProbBezierCurve,
    cfg: &BaselineConfig,
    t: f64,
) -> Result<f64> {
    let marginal = target.marginal_at(t)?;
    integral_over_disk(
        &marginal,
        ego.evaluate(t)?,
        2.0 * cfg.circle_radius,
        DISK_ORDER,
        DISK_ORDER,
    )
}

fn circle_series(
    ego: &BezierCurve,
    target: &ProbBezierCurve,
    glr: &GlrConfig,
    cfg: &BaselineConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    grid(glr, cfg)
        .into_iter()
        .map(|t| circle_pcol(ego, target, cfg, t))
        .collect()
}

/// Maximum circle-overlap probability over the grid.
pub fn max_circle(
    ego: &BezierCurve,
    target: &ProbBezierCurve,
    glr: &GlrConfig,
    cfg: &BaselineConfig,
) -> Result<f64> {
    Ok(circle_series(ego, target, glr, cfg)?
        .into_iter()
        .fold(0.0, f64::max))
}

/// Maximum over the grid of the target density at the ego position times
/// the circle area, clipped to 1.
pub fn risk_density(
    ego: &BezierCurve,
    target: &ProbBezierCurve,
    glr: &GlrConfig,
    cfg: &BaselineConfig,
) -> Result<f64> {
    cfg.validate()?;
    let area = std::f64::consts::PI * cfg.circle_radius * cfg.circle_radius;
    let mut best: f64 = 0.0;
    for t in grid(glr, cfg) {
        let rho = (target.marginal_at(t)?.pdf(ego.evaluate(t)?) * area).clamp(0.0, 1.0);
        best = best.max(rho);
    }
    Ok(best)
}

/// `min(1, sum_k gamma^k P_circ(t_k))`.
pub fn discounted_biub(
    ego: &BezierCurve,
    target: &ProbBezierCurve,
    glr: &GlrConfig,
    cfg: &BaselineConfig,
) -> Result<f64> {
    let series = circle_series(ego, target, glr, cfg)?;
    let mut weight = 1.0;
    let mut sum = 0.0;
    for p in series {
        sum += weight * p;
        weight *= cfg.discount;
    }
    Ok(sum.min(1.0))
}

/// Ego rectangle grown by the target's dimensions: a target centroid inside
/// it approximates footprint overlap, ignoring relative rotation.
pub fn inflated_ego_rect(ego: &BezierCurve, glr: &GlrConfig, t: f64) -> Result<OrientedRect> {
    let pose = Pose2::new(ego.evaluate(t)?, ego.heading(t)?);
    OrientedRect::new(pose, 2.0 * glr.car_length, 2.0 * glr.car_width)
}

/// Particle estimate: per grid time, the colliding fraction of centroid
/// particles; the total is the capped sum over the grid.
pub fn vs_pf<R: Rng + ?Sized>(
    ego: &BezierCurve,
    target: &ProbBezierCurve,
    glr: &GlrConfig,
    cfg: &BaselineConfig,
    rng: &mut R,
) -> Result<f64> {
    cfg.validate()?;
    let mut sum = 0.0;
    for t in grid(glr, cfg) {
        let region = inflated_ego_rect(ego, glr, t)?;
        let marginal = target.marginal_at(t)?;
        let hits = (0..cfg.particles)
            .filter(|_| region.contains(marginal.sample(rng)))
            .count();
        sum += hits as f64 / cfg.particles as f64;
    }
    Ok(sum.min(1.0))
}

/// Instantaneous GLR probabilities on the uniform grid.
pub fn grid_pcol(
    ego: &BezierCurve,
    target: &ProbBezierCurve,
    glr: &GlrConfig,
    cfg: &BaselineConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let est = GlrEstimator::new(*glr)?;
    let mean = target.mean_curve();
    grid(glr, cfg)
        .into_iter()
        .map(|t| est.pcol_at(ego, target, &mean, t))
        .collect()
}

/// `1 - prod_k (1 - P_col(t_k))` with GLR's instantaneous probability.
pub fn mutual_independence(
    ego: &BezierCurve,
    target: &ProbBezierCurve,
    glr: &GlrConfig,
    cfg: &BaselineConfig,
) -> Result<f64> {
    let survive: f64 = grid_pcol(ego, target, glr, cfg)?
        .into_iter()
        .map(|p| 1.0 - p)
        .product();
    Ok((1.0 - survive).clamp(0.0, 1.0))
}

/// GLR with Stage 1 replaced by trajectory sampling at the Stage-2 nodes.
pub fn qmlgl<R: Rng + ?Sized>(
    ego: &BezierCurve,
    target: &ProbBezierCurve,
    glr: &GlrConfig,
    cfg: &BaselineConfig,
    rng: &mut R,
) -> Result<RiskBreakdown> {
    cfg.validate()?;
    let est = GlrEstimator::new(*glr)?;
    let times = est.node_times();
    let ego_rects = times
        .iter()
        .map(|&t| est.ego_rect(ego, t))
        .collect::<Result<Vec<_>>>()?;
    let mut hits = vec![0usize; times.len()];
    for _ in 0..cfg.qmlgl_samples {
        let sample = target.sample_trajectory(rng);
        for ((&t, ego_rect), h) in times.iter().zip(&ego_rects).zip(hits.iter_mut()) {
            let pose = Pose2::new(sample.evaluate(t)?, sample.heading(t)?);
            if rects_intersect(ego_rect, &glr.footprint(pose)) {
                *h += 1;
            }
        }
    }
    let n = cfg.qmlgl_samples as f64;
    let node_pcol: Vec<f64> = hits.iter().map(|&h| h as f64 / n).collect();
    let saturated = node_pcol.iter().any(|&p| p >= glr.pcol_clip);
    let node_hazard = node_pcol.iter().map(|&p| hazard(p, glr.pcol_clip)).collect();
    Ok(RiskBreakdown::from_nodes(
        glr.horizon,
        est.stage2_rule().weights(),
        times,
        node_pcol,
        node_hazard,
        saturated,
    ))
}
