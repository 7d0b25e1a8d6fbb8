//! Benchmark harness: scenario generation, cached Monte Carlo ground truth,
//! estimator evaluation with timing, and diagnostic curve export.

pub mod cli;
pub mod inspect;
pub mod report;
pub mod run;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use glr_core::baselines::BaselineConfig;
use glr_core::glr::GlrConfig;
use glr_core::oracle::{scenario_seed, OracleConfig};
use glr_core::scenario::FitParams;
use serde::{Deserialize, Serialize};

pub use report::{BenchReport, MethodRow, ScenarioRow};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl BenchError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_) => 1,
            BenchError::Data(_) => 2,
            BenchError::Internal(_) => 3,
        }
    }
}

impl From<glr_core::Error> for BenchError {
    fn from(e: glr_core::Error) -> Self {
        use glr_core::Error as E;
        match e {
            E::Config(_) | E::InvalidArgument(_) => BenchError::Usage(e.to_string()),
            E::InvalidDistribution(_) => BenchError::Internal(e.to_string()),
            _ => BenchError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Data(e.to_string())
    }
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Data(e.to_string())
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Glr,
    Qmlgl,
    Vspf,
    RiskDensity,
    Dbiub,
    Mi,
    MaxCircle,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Glr,
        Method::Qmlgl,
        Method::Vspf,
        Method::RiskDensity,
        Method::Dbiub,
        Method::Mi,
        Method::MaxCircle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Glr => "glr",
            Method::Qmlgl => "qmlgl",
            Method::Vspf => "vspf",
            Method::RiskDensity => "riskdensity",
            Method::Dbiub => "dbiub",
            Method::Mi => "mi",
            Method::MaxCircle => "maxcircle",
        }
    }

    /// Whether the method draws random numbers.
    pub fn is_stochastic(self) -> bool {
        matches!(self, Method::Qmlgl | Method::Vspf)
    }

    /// Parses `glr,qmlgl,...`; duplicates are dropped, order kept.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let m: Method = part.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(BenchError::Usage("empty method list".into()));
        }
        Ok(out)
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                BenchError::Usage(format!("unknown method {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Oracle sampling settings; geometry and horizon come from the GLR block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleSettings {
    pub sample_count: usize,
    pub time_steps: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        let d = OracleConfig::default();
        Self {
            sample_count: d.sample_count,
            time_steps: d.time_steps,
        }
    }
}

/// Every tunable of a benchmark run. Embedded in reports as run provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub glr: GlrConfig,
    pub baselines: BaselineConfig,
    pub oracle: OracleSettings,
    pub fit: FitParams,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let glr = GlrConfig::default();
        Self {
            glr,
            baselines: BaselineConfig::for_vehicle(&glr),
            oracle: OracleSettings::default(),
            fit: FitParams::default(),
        }
    }
}

impl BenchConfig {
    /// Reads a JSON config; omitted fields keep their defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| BenchError::Usage(format!("bad config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.glr.validate()?;
        self.baselines.validate()?;
        self.oracle_for(0).validate()?;
        if self.fit.degree < 1 || !(self.fit.sigma0 > 0.0 && self.fit.sigma0 <= self.fit.sigma1) {
            return Err(BenchError::Usage(format!("invalid fit settings: {:?}", self.fit)));
        }
        Ok(())
    }

    /// Oracle configuration with the given seed.
    pub fn oracle_for(&self, seed: u64) -> OracleConfig {
        OracleConfig {
            sample_count: self.oracle.sample_count,
            time_steps: self.oracle.time_steps,
            seed,
            horizon: self.glr.horizon,
            car_length: self.glr.car_length,
            car_width: self.glr.car_width,
        }
    }

    /// Oracle configuration for a scenario under a base seed.
    pub fn oracle_for_scenario(&self, base_seed: u64, scenario_id: &str) -> OracleConfig {
        self.oracle_for(scenario_seed(base_seed, scenario_id))
    }
}
