//! The Gauss-Legendre Rectangle estimator.
//!
//! Stage 1: at a fixed time the target footprint is approximated by five
//! Gaussians sharing the target marginal's covariance, centered on the
//! footprint's four corners and centroid. Each one's mass over the ego
//! rectangle comes from Gauss-Legendre cubature and the instantaneous
//! collision probability is `1 - prod_k (1 - m_k)`.
//!
//! Stage 2: the hazard `lambda = p / (1 - p)` is integrated over the horizon
//! with Gauss-Legendre quadrature and the total collision probability of the
//! resulting non-homogeneous Poisson process is `1 - exp(-int lambda)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{OrientedRect, Pose2};
use crate::probability::{integral_over_rect, Gaussian2};
use crate::quadrature::{gauss_legendre_rule, Interval, QuadRule};
use crate::trajectory::{BezierCurve, ProbBezierCurve};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlrConfig {
    /// Stage-1 cubature order per axis.
    pub n1: usize,
    /// Stage-2 quadrature order.
    pub n2: usize,
    /// Prediction horizon, s.
    pub horizon: f64,
    /// Vehicle length along heading, m.
    pub car_length: f64,
    /// Vehicle width across heading, m.
    pub car_width: f64,
    /// Instantaneous probabilities are clipped here before the hazard
    /// transform; reaching it saturates the total to 1.
    pub pcol_clip: f64,
}

impl Default for GlrConfig {
    fn default() -> Self {
        Self {
            n1: 12,
            n2: 24,
            horizon: 6.0,
            car_length: 5.2,
            car_width: 2.0,
            pcol_clip: 1.0 - 1e-9,
        }
    }
}

impl GlrConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.n1 >= 1
            && self.n2 >= 1
            && self.horizon > 0.0
            && self.car_length > 0.0
            && self.car_width > 0.0
            && self.pcol_clip > 0.0
            && self.pcol_clip < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid GLR configuration: {self:?}")))
        }
    }

    /// Footprint at a pose with the configured dimensions.
    pub fn footprint(&self, pose: Pose2) -> OrientedRect {
        OrientedRect::new(pose, self.car_length, self.car_width)
            .expect("validated car dimensions")
    }
}

/// Per-node diagnostics of one estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskBreakdown {
    pub total_probability: f64,
    pub hazard_integral: f64,
    pub node_times: Vec<f64>,
    pub node_pcol: Vec<f64>,
    pub node_hazard: Vec<f64>,
    pub saturated: bool,
}

impl RiskBreakdown {
    /// Stage 2 over precomputed node values. `weights` are the raw rule
    /// weights; `pcol_clip` decides saturation.
    pub(crate) fn from_nodes(
        horizon: f64,
        weights: &[f64],
        node_times: Vec<f64>,
        node_pcol: Vec<f64>,
        node_hazard: Vec<f64>,
        saturated: bool,
    ) -> Self {
        let weighted: f64 = weights.iter().zip(&node_hazard).map(|(w, l)| w * l).sum();
        let hazard_integral = 0.5 * horizon * weighted;
        let total_probability = if saturated {
            1.0
        } else {
            -(-hazard_integral).exp_m1()
        };
        Self {
            total_probability,
            hazard_integral,
            node_times,
            node_pcol,
            node_hazard,
            saturated,
        }
    }
}

/// `p / (1 - p)` with `p` clipped to `[0, clip]`.
pub fn hazard(pcol: f64, clip: f64) -> f64 {
    let p = pcol.clamp(0.0, clip);
    p / (1.0 - p)
}

/// Centroid first, then the four corners.
fn footprint_points(rect: &OrientedRect) -> [crate::geometry::Vec2; 5] {
    let c = rect.corners();
    [rect.center(), c[0], c[1], c[2], c[3]]
}

/// Stage 1 at a single instant.
pub fn instantaneous_pcol(
    ego_rect: &OrientedRect,
    target_marginal: &Gaussian2,
    target_heading: f64,
    config: &GlrConfig,
    rule1: &QuadRule,
) -> f64 {
    let target_rect = config.footprint(Pose2::new(target_marginal.mean(), target_heading));
    let no_collision: f64 = footprint_points(&target_rect)
        .iter()
        .map(|&m| 1.0 - integral_over_rect(&target_marginal.with_mean(m), ego_rect, rule1))
        .product();
    (1.0 - no_collision).clamp(0.0, 1.0)
}

/// Stateless estimator holding the configuration and its cached rules.
#[derive(Debug, Clone, Copy)]
pub struct GlrEstimator {
    config: GlrConfig,
    rule1: &'static QuadRule,
    rule2: &'static QuadRule,
}

impl GlrEstimator {
    pub fn new(config: GlrConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            rule1: gauss_legendre_rule(config.n1)?,
            rule2: gauss_legendre_rule(config.n2)?,
        })
    }

    pub fn config(&self) -> &GlrConfig {
        &self.config
    }

    pub fn stage1_rule(&self) -> &'static QuadRule {
        self.rule1
    }

    pub fn stage2_rule(&self) -> &'static QuadRule {
        self.rule2
    }

    /// Stage-2 node times on `[0, horizon]`.
    pub fn node_times(&self) -> Vec<f64> {
        let dom = Interval::new(0.0, self.config.horizon).expect("positive horizon");
        self.rule2.mapped_nodes(dom).map(|(t, _)| t).collect()
    }

    /// Ego footprint at `t` from the curve position and hodograph heading.
    pub fn ego_rect(&self, ego: &BezierCurve, t: f64) -> Result<OrientedRect> {
        Ok(self
            .config
            .footprint(Pose2::new(ego.evaluate(t)?, ego.heading(t)?)))
    }

    /// Instantaneous collision probability at `t`. `target_mean` is the
    /// target's mean curve, which supplies the footprint heading.
    pub fn pcol_at(
        &self,
        ego: &BezierCurve,
        target: &ProbBezierCurve,
        target_mean: &BezierCurve,
        t: f64,
    ) -> Result<f64> {
        let ego_rect = self.ego_rect(ego, t)?;
        let marginal = target.marginal_at(t)?;
        let heading = target_mean.heading(t)?;
        Ok(instantaneous_pcol(
            &ego_rect,
            &marginal,
            heading,
            &self.config,
            self.rule1,
        ))
    }

    fn check_horizon(&self, h: f64, what: &str) -> Result<()> {
        if h + 1e-9 < self.config.horizon {
            return Err(Error::InvalidArgument(format!(
                "{what} horizon {h} s shorter than estimation horizon {} s",
                self.config.horizon
            )));
        }
        Ok(())
    }

    pub fn estimate(&self, ego: &BezierCurve, target: &ProbBezierCurve) -> Result<RiskBreakdown> {
        self.estimate_multi(ego, std::slice::from_ref(target))
    }

    /// Opponents are treated as conditionally independent: node hazards add.
    pub fn estimate_multi(
        &self,
        ego: &BezierCurve,
        targets: &[ProbBezierCurve],
    ) -> Result<RiskBreakdown> {
        if targets.is_empty() {
            return Err(Error::InvalidArgument("no opponents given".into()));
        }
        self.check_horizon(ego.horizon(), "ego")?;
        for t in targets {
            self.check_horizon(t.horizon(), "target")?;
        }
        let means: Vec<BezierCurve> = targets.iter().map(|t| t.mean_curve()).collect();
        let clip = self.config.pcol_clip;
        let times = self.node_times();
        let mut node_pcol = Vec::with_capacity(times.len());
        let mut node_hazard = Vec::with_capacity(times.len());
        let mut saturated = false;
        for &t in &times {
            let mut combined: Option<f64> = None;
            let mut lambda = 0.0;
            for (target, mean) in targets.iter().zip(&means) {
                let p = self.pcol_at(ego, target, mean, t)?;
                saturated |= p >= clip;
                lambda += hazard(p, clip);
                combined = Some(match combined {
                    None => p,
                    Some(q) => 1.0 - (1.0 - q) * (1.0 - p),
                });
            }
            node_pcol.push(combined.unwrap_or(0.0));
            node_hazard.push(lambda);
        }
        Ok(RiskBreakdown::from_nodes(
            self.config.horizon,
            self.rule2.weights(),
            times,
            node_pcol,
            node_hazard,
            saturated,
        ))
    }
}

pub fn estimate(
    ego: &BezierCurve,
    target: &ProbBezierCurve,
    config: &GlrConfig,
) -> Result<RiskBreakdown> {
    GlrEstimator::new(*config)?.estimate(ego, target)
}

pub fn estimate_multi(
    ego: &BezierCurve,
    targets: &[ProbBezierCurve],
    config: &GlrConfig,
) -> Result<RiskBreakdown> {
    GlrEstimator::new(*config)?.estimate_multi(ego, targets)
}
