//! Oracle and estimator runs over a scenario set.

use std::time::Instant;

use glr_core::baselines::{self, BaselineConfig};
use glr_core::glr::GlrEstimator;
use glr_core::oracle::{ground_truth, scenario_seed};
use glr_core::scenario::{CacheEntry, FittedScenario, GroundTruthCache, Scenario};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::report::{BenchReport, ScenarioRow};
use crate::{BenchConfig, BenchError, Method, Result};

/// Runs `f` on a pool of `jobs` threads (0 means rayon's default).
pub fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| BenchError::Internal(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Fits every scenario, preserving order.
pub fn fit_all(scenarios: &[Scenario], cfg: &BenchConfig) -> Result<Vec<FittedScenario>> {
    scenarios
        .par_iter()
        .map(|s| {
            s.fit(&cfg.fit)
                .map_err(|e| BenchError::Data(format!("fitting {}: {e}", s.id)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub id: String,
    pub entry: CacheEntry,
    /// False when the entry came from the cache.
    pub computed: bool,
}

/// Fills `cache` for every scenario, reusing entries whose config hash and
/// seed match. Rows come back in scenario order.
pub fn run_oracle(
    scenarios: &[Scenario],
    cfg: &BenchConfig,
    base_seed: u64,
    cache: &mut GroundTruthCache,
) -> Result<Vec<OracleRow>> {
    let todo: Vec<(usize, &Scenario)> = scenarios
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            let oc = cfg.oracle_for_scenario(base_seed, &s.id);
            cache.lookup(&s.id, oc.config_hash(), oc.seed).is_none()
        })
        .collect();
    let fresh: Vec<(usize, CacheEntry)> = todo
        .par_iter()
        .map(|&(i, s)| {
            let oc = cfg.oracle_for_scenario(base_seed, &s.id);
            let fitted = s
                .fit(&cfg.fit)
                .map_err(|e| BenchError::Data(format!("fitting {}: {e}", s.id)))?;
            let r = ground_truth(&fitted.ego, &fitted.target, &oc)?;
            Ok((i, CacheEntry::new(&r, oc.seed, oc.config_hash())))
        })
        .collect::<Result<_>>()?;
    let mut computed = vec![false; scenarios.len()];
    for (i, entry) in fresh {
        computed[i] = true;
        cache.insert(scenarios[i].id.clone(), entry);
    }
    Ok(scenarios
        .iter()
        .zip(computed)
        .map(|(s, computed)| OracleRow {
            id: s.id.clone(),
            entry: cache.entries[&s.id].clone(),
            computed,
        })
        .collect())
}

/// Runs `f` and returns its result with the elapsed wall time in
/// microseconds. Only the call itself is inside the clock.
pub fn time_call<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1e6)
}

/// One method's output on one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub probability: f64,
    pub saturated: bool,
    pub runtime_us: f64,
}

/// RNG for a stochastic method on a scenario; independent of worker
/// assignment.
pub fn method_rng(base_seed: u64, scenario_id: &str, method: Method) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario_seed(base_seed, scenario_id));
    rng.set_stream(1 + method as u64);
    rng
}

/// Prepared state shared by every call; nothing here is timed.
#[derive(Debug, Clone, Copy)]
pub struct Runner {
    glr: GlrEstimator,
    cfg_baselines: BaselineConfig,
}

impl Runner {
    pub fn new(cfg: &BenchConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            glr: GlrEstimator::new(cfg.glr)?,
            cfg_baselines: cfg.baselines,
        })
    }

    /// Runs `method`, timing only the estimator call. Values at or above 1
    /// count as saturated for methods without a saturation flag.
    pub fn estimate(&self, method: Method, sc: &FittedScenario, base_seed: u64) -> Result<Estimate> {
        let glr_cfg = self.glr.config();
        let b = &self.cfg_baselines;
        let mut rng = method_rng(base_seed, &sc.id, method);
        let (ego, target) = (&sc.ego, &sc.target);
        let (out, runtime_us) = time_call(|| match method {
            Method::Glr => self.glr.estimate(ego, target).map(|r| (r.total_probability, r.saturated)),
            Method::Qmlgl => baselines::qmlgl(ego, target, glr_cfg, b, &mut rng)
                .map(|r| (r.total_probability, r.saturated)),
            Method::Vspf => baselines::vs_pf(ego, target, glr_cfg, b, &mut rng).map(|p| (p, p >= 1.0)),
            Method::RiskDensity => baselines::risk_density(ego, target, glr_cfg, b).map(|p| (p, p >= 1.0)),
            Method::Dbiub => baselines::discounted_biub(ego, target, glr_cfg, b).map(|p| (p, p >= 1.0)),
            Method::Mi => baselines::mutual_independence(ego, target, glr_cfg, b).map(|p| (p, p >= 1.0)),
            Method::MaxCircle => baselines::max_circle(ego, target, glr_cfg, b).map(|p| (p, p >= 1.0)),
        });
        let (probability, saturated) =
            out.map_err(|e| BenchError::Data(format!("{method} on {}: {e}", sc.id)))?;
        if !(0.0..=1.0).contains(&probability) {
            return Err(BenchError::Internal(format!(
                "{method} on {} returned {probability}",
                sc.id
            )));
        }
        Ok(Estimate {
            probability,
            saturated,
            runtime_us,
        })
    }
}

/// Evaluates `methods` on every scenario against cached ground truth.
/// Scenario rows keep the input order.
pub fn evaluate(
    scenarios: &[FittedScenario],
    cache: &GroundTruthCache,
    methods: &[Method],
    cfg: &BenchConfig,
    base_seed: u64,
) -> Result<BenchReport> {
    let missing: Vec<&str> = scenarios
        .iter()
        .filter(|s| {
            let oc = cfg.oracle_for_scenario(base_seed, &s.id);
            cache.lookup(&s.id, oc.config_hash(), oc.seed).is_none()
        })
        .map(|s| s.id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(BenchError::Data(format!(
            "no ground truth for this config and seed: {}",
            missing.join(", ")
        )));
    }
    let runner = Runner::new(cfg)?;
    let rows = scenarios
        .par_iter()
        .map(|sc| {
            let estimates = methods
                .iter()
                .map(|&m| runner.estimate(m, sc, base_seed))
                .collect::<Result<Vec<_>>>()?;
            Ok(ScenarioRow {
                scenario_id: sc.id.clone(),
                ground_truth: cache.entries[&sc.id].probability,
                estimates: estimates.iter().map(|e| e.probability).collect(),
                saturated: estimates.iter().map(|e| e.saturated).collect(),
                runtime_us: estimates.iter().map(|e| e.runtime_us).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = BenchReport::new(cfg.clone(), base_seed, methods.to_vec(), rows);
    report.check()?;
    Ok(report)
}
