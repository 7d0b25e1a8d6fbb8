//! Benchmark report: per-method summary derived from a per-scenario matrix.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{BenchConfig, BenchError, Method, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: Method,
    pub mae: f64,
    /// Population standard deviation of the absolute errors.
    pub mae_std: f64,
    pub mean_runtime_us: f64,
    pub p99_runtime_us: f64,
    pub loop_rate_hz: f64,
    pub saturation_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub scenario_id: String,
    pub ground_truth: f64,
    /// One per method, in report method order.
    pub estimates: Vec<f64>,
    pub saturated: Vec<bool>,
    pub runtime_us: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub summary: Vec<MethodRow>,
    pub scenarios: Vec<ScenarioRow>,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Nearest-rank percentile.
fn percentile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}

fn summarize(k: usize, method: Method, rows: &[ScenarioRow]) -> MethodRow {
    let errs: Vec<f64> = rows.iter().map(|r| (r.estimates[k] - r.ground_truth).abs()).collect();
    let times: Vec<f64> = rows.iter().map(|r| r.runtime_us[k]).collect();
    let mae = mean(&errs);
    let var = mean(&errs.iter().map(|e| (e - mae).powi(2)).collect::<Vec<_>>());
    let mean_runtime_us = mean(&times);
    MethodRow {
        method,
        mae,
        mae_std: var.sqrt(),
        mean_runtime_us,
        p99_runtime_us: percentile(&times, 99.0),
        loop_rate_hz: 1e6 / mean_runtime_us,
        saturation_count: rows.iter().filter(|r| r.saturated[k]).count(),
    }
}

impl BenchReport {
    pub fn new(config: BenchConfig, seed: u64, methods: Vec<Method>, scenarios: Vec<ScenarioRow>) -> Self {
        let summary = methods
            .iter()
            .enumerate()
            .map(|(k, &m)| summarize(k, m, &scenarios))
            .collect();
        Self {
            config,
            seed,
            methods,
            summary,
            scenarios,
        }
    }

    pub fn row(&self, method: Method) -> Option<&MethodRow> {
        self.summary.iter().find(|r| r.method == method)
    }

    /// Per-scenario estimates of one method, in scenario order.
    pub fn column(&self, method: Method) -> Option<Vec<f64>> {
        let k = self.methods.iter().position(|&m| m == method)?;
        Some(self.scenarios.iter().map(|r| r.estimates[k]).collect())
    }

    /// The summary must be exactly what the matrix implies.
    pub fn check(&self) -> Result<()> {
        for r in &self.scenarios {
            let n = self.methods.len();
            if r.estimates.len() != n || r.saturated.len() != n || r.runtime_us.len() != n {
                return Err(BenchError::Internal(format!("ragged row {}", r.scenario_id)));
            }
        }
        for (k, &m) in self.methods.iter().enumerate() {
            let expect = summarize(k, m, &self.scenarios);
            let got = &self.summary[k];
            let same = |a: f64, b: f64| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan());
            if got.method != expect.method
                || !same(got.mae, expect.mae)
                || !same(got.mae_std, expect.mae_std)
                || got.saturation_count != expect.saturation_count
            {
                return Err(BenchError::Internal(format!("summary for {m} disagrees with the matrix")));
            }
        }
        Ok(())
    }

    /// Summary CSV with the fixed column set.
    pub fn write_summary_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "method",
            "mae",
            "mae_std",
            "mean_runtime_us",
            "p99_runtime_us",
            "loop_rate_hz",
            "saturation_count",
        ])?;
        for r in &self.summary {
            w.write_record([
                r.method.name().to_string(),
                r.mae.to_string(),
                r.mae_std.to_string(),
                r.mean_runtime_us.to_string(),
                r.p99_runtime_us.to_string(),
                r.loop_rate_hz.to_string(),
                r.saturation_count.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Scenario by method matrix of estimates; deterministic for fixed seeds.
    pub fn write_matrix_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["scenario_id".to_string(), "ground_truth".to_string()];
        header.extend(self.methods.iter().map(|m| m.name().to_string()));
        w.write_record(&header)?;
        for r in &self.scenarios {
            let mut rec = vec![r.scenario_id.clone(), r.ground_truth.to_string()];
            rec.extend(r.estimates.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<out>` (summary), `<stem>_scenarios.csv` and `<stem>.json`
    /// (everything, including the effective config). Returns the paths.
    pub fn write_all(&self, out: &Path) -> Result<Vec<PathBuf>> {
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let stem = out.with_extension("");
        let stem = stem.to_string_lossy();
        let matrix = PathBuf::from(format!("{stem}_scenarios.csv"));
        let json = PathBuf::from(format!("{stem}.json"));
        self.write_summary_csv(out)?;
        self.write_matrix_csv(&matrix)?;
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| BenchError::Internal(format!("serializing report: {e}")))?;
        std::fs::write(&json, text + "\n")?;
        Ok(vec![out.to_path_buf(), matrix, json])
    }

    /// Fixed-width table for the terminal.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<12} {:>14} {:>12} {:>12} {:>12} {:>6}",
            "method", "MAE +- sd", "mean us", "p99 us", "rate Hz", "sat"
        );
        for r in &self.summary {
            let _ = writeln!(
                s,
                "{:<12} {:>6.3} +- {:<5.3} {:>12.1} {:>12.1} {:>12.1} {:>6}",
                r.method.name(),
                r.mae,
                r.mae_std,
                r.mean_runtime_us,
                r.p99_runtime_us,
                r.loop_rate_hz,
                r.saturation_count
            );
        }
        let _ = writeln!(s, "{} scenarios, seed {}", self.scenarios.len(), self.seed);
        s
    }
}
