//! Instantaneous probability and hazard curves for one scenario.

use std::io::Write;
use std::path::Path;

use glr_core::glr::{hazard, GlrEstimator, RiskBreakdown};
use glr_core::oracle::uniform_grid;
use glr_core::quadrature::Interval;
use glr_core::scenario::FittedScenario;
use serde::Serialize;

use crate::{BenchConfig, Result};

/// Points on the dense uniform grid.
pub const DENSE_POINTS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Node,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub grid: GridKind,
    pub t: f64,
    pub pcol: f64,
    pub hazard: f64,
    /// Integral of the hazard over `[0, t]`; infinite from the first
    /// saturated evaluation onwards.
    pub cumulative_hazard: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub scenario_id: String,
    pub breakdown: RiskBreakdown,
    pub rows: Vec<CurveRow>,
}

impl Curve {
    pub fn saturated(&self) -> bool {
        self.breakdown.saturated || self.rows.iter().any(|r| r.cumulative_hazard.is_infinite())
    }
}

/// GLR curves at the Stage-2 nodes and on a dense uniform grid.
pub fn glr_curve(sc: &FittedScenario, cfg: &BenchConfig) -> Result<Curve> {
    let est = GlrEstimator::new(cfg.glr)?;
    let clip = cfg.glr.pcol_clip;
    let mean = sc.target.mean_curve();
    let pcol = |t: f64| est.pcol_at(&sc.ego, &sc.target, &mean, t);
    let breakdown = est.estimate(&sc.ego, &sc.target)?;

    let dense = uniform_grid(cfg.glr.horizon, DENSE_POINTS);
    let dense_pcol = dense.iter().map(|&t| pcol(t)).collect::<glr_core::Result<Vec<_>>>()?;
    let first_saturation = breakdown
        .node_times
        .iter()
        .zip(&breakdown.node_pcol)
        .chain(dense.iter().zip(&dense_pcol))
        .filter(|(_, &p)| p >= clip)
        .map(|(&t, _)| t)
        .fold(f64::INFINITY, f64::min);

    let rule = est.stage2_rule();
    let cumulative = |t: f64| -> Result<f64> {
        if t >= first_saturation {
            return Ok(f64::INFINITY);
        }
        let Ok(dom) = Interval::new(0.0, t) else {
            return Ok(0.0);
        };
        let mut sum = 0.0;
        for (s, w) in rule.mapped_nodes(dom) {
            sum += w * hazard(pcol(s)?, clip);
        }
        Ok(0.5 * t * sum)
    };

    let mut rows = Vec::with_capacity(breakdown.node_times.len() + DENSE_POINTS);
    for (k, &t) in breakdown.node_times.iter().enumerate() {
        rows.push(CurveRow {
            grid: GridKind::Node,
            t,
            pcol: breakdown.node_pcol[k],
            hazard: breakdown.node_hazard[k],
            cumulative_hazard: cumulative(t)?,
        });
    }
    for (&t, &p) in dense.iter().zip(&dense_pcol) {
        rows.push(CurveRow {
            grid: GridKind::Dense,
            t,
            pcol: p,
            hazard: hazard(p, clip),
            cumulative_hazard: cumulative(t)?,
        });
    }
    Ok(Curve {
        scenario_id: sc.id.clone(),
        breakdown,
        rows,
    })
}

/// CSV preceded by one `#` line carrying the totals and saturation flag.
pub fn write_curve(curve: &Curve, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        file,
        "# scenario={} method=glr saturated={} total_probability={} hazard_integral={}",
        curve.scenario_id,
        curve.saturated(),
        curve.breakdown.total_probability,
        curve.breakdown.hazard_integral
    )?;
    let mut w = csv::Writer::from_writer(file);
    for r in &curve.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
