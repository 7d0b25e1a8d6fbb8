//! Scenario files, the synthetic overtaking generator and the ground-truth
//! cache.
//!
//! A scenario holds the ego and target tracks as `[t, x, y, vx, vy]` rows
//! sampled on a shared uniform clock from 0 to the horizon. Files are JSON,
//! one scenario each, with one row per line so that diagnostics point at
//! something readable.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::oracle::OracleResult;
use crate::trajectory::{fit_bezier, fit_prob_bezier, BezierCurve, ProbBezierCurve, SampledTrack};

/// Allowed disagreement between ego and target timestamps, s.
pub const ALIGN_TOL: f64 = 1e-9;

fn js<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

/// One `[t, x, y, vx, vy]` sample.
pub type Row = [f64; 5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub track_tag: String,
    pub sample_rate_hz: f64,
    pub horizon_s: f64,
    pub ego: Vec<Row>,
    pub target: Vec<Row>,
}

fn track_of(rows: &[Row]) -> Result<SampledTrack> {
    SampledTrack::new(
        rows.iter().map(|r| r[0]).collect(),
        rows.iter().map(|r| Vec2::new(r[1], r[2])).collect(),
    )
}

fn check_rows(rows: &[Row], which: &str, rate: f64, horizon: f64) -> std::result::Result<(), String> {
    if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.iter().any(|v| !v.is_finite())) {
        return Err(format!("{which}[{i}] has a non-finite value"));
    }
    if rows.len() < 2 {
        return Err(format!("{which} has {} samples, need at least 2", rows.len()));
    }
    if let Some(i) = (1..rows.len()).find(|&i| !(rows[i][0] > rows[i - 1][0])) {
        return Err(format!(
            "{which} timestamps not strictly increasing at index {i} ({} after {})",
            rows[i][0],
            rows[i - 1][0]
        ));
    }
    let first = rows[0][0];
    let last = rows[rows.len() - 1][0];
    if first.abs() > ALIGN_TOL || (last - horizon).abs() > ALIGN_TOL {
        return Err(format!(
            "{which} spans [{first}, {last}] but the horizon is [0, {horizon}]"
        ));
    }
    let expected = (horizon * rate).round() as usize + 1;
    if rows.len() != expected || ((rows.len() - 1) as f64 / horizon - rate).abs() > 1e-6 * rate {
        return Err(format!(
            "{which} has {} samples; {rate} Hz over {horizon} s needs {expected}",
            rows.len()
        ));
    }
    Ok(())
}

impl Scenario {
    /// Checks the structural invariants; the message names the first one
    /// violated.
    pub fn check(&self) -> std::result::Result<(), String> {
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(format!("sample_rate_hz must be positive, got {}", self.sample_rate_hz));
        }
        if !(self.horizon_s > 0.0 && self.horizon_s.is_finite()) {
            return Err(format!("horizon_s must be positive, got {}", self.horizon_s));
        }
        check_rows(&self.ego, "ego", self.sample_rate_hz, self.horizon_s)?;
        check_rows(&self.target, "target", self.sample_rate_hz, self.horizon_s)?;
        if let Some(i) = self
            .ego
            .iter()
            .zip(&self.target)
            .position(|(a, b)| (a[0] - b[0]).abs() > ALIGN_TOL)
        {
            return Err(format!(
                "ego and target timestamps disagree at index {i} ({} vs {})",
                self.ego[i][0], self.target[i][0]
            ));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|message| Error::Validation {
            path: PathBuf::from(&self.id),
            message,
        })
    }

    pub fn ego_track(&self) -> Result<SampledTrack> {
        track_of(&self.ego)
    }

    pub fn target_track(&self) -> Result<SampledTrack> {
        track_of(&self.target)
    }

    /// Fits the ego curve and the target probabilistic curve.
    pub fn fit(&self, params: &FitParams) -> Result<FittedScenario> {
        let ego = fit_bezier(&self.ego_track()?, params.degree)?.curve;
        let target = fit_prob_bezier(&self.target_track()?, params.degree, params.sigma0, params.sigma1)?;
        Ok(FittedScenario {
            id: self.id.clone(),
            ego,
            target,
        })
    }

    /// JSON text with one sample row per line.
    pub fn to_json(&self) -> String {
        let mut s = String::new();
        s.push_str("{\n");
        let _ = writeln!(s, "  \"id\": {},", js(&self.id));
        let _ = writeln!(s, "  \"track_tag\": {},", js(&self.track_tag));
        let _ = writeln!(s, "  \"sample_rate_hz\": {},", js(&self.sample_rate_hz));
        let _ = writeln!(s, "  \"horizon_s\": {},", js(&self.horizon_s));
        for (name, rows, last) in [("ego", &self.ego, false), ("target", &self.target, true)] {
            let _ = writeln!(s, "  \"{name}\": [");
            for (i, r) in rows.iter().enumerate() {
                let sep = if i + 1 == rows.len() { "" } else { "," };
                let _ = writeln!(s, "    {}{sep}", js(r));
            }
            let _ = writeln!(s, "  ]{}", if last { "" } else { "," });
        }
        s.push_str("}\n");
        s
    }

    /// Parses and validates; `path` only labels errors.
    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        sc.check().map_err(|message| Error::Validation {
            path: path.to_path_buf(),
            message,
        })?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?, path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    /// File name used by [`save_all`].
    pub fn file_name(&self) -> String {
        format!("{}.json", self.id)
    }
}

/// Loads every `*.json` file in `dir`, sorted by file name. Files that fail
/// are returned separately with their error.
pub fn load_dir(dir: &Path) -> Result<(Vec<Scenario>, Vec<(PathBuf, Error)>)> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for p in paths {
        match Scenario::load(&p) {
            Ok(s) => ok.push(s),
            Err(e) => failed.push((p, e)),
        }
    }
    ok.sort_by(|a, b| a.id.cmp(&b.id));
    Ok((ok, failed))
}

pub fn save_all(scenarios: &[Scenario], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    scenarios
        .iter()
        .map(|s| {
            let p = dir.join(s.file_name());
            s.save(&p)?;
            Ok(p)
        })
        .collect()
}

/// Curve fitting settings shared by every estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitParams {
    pub degree: usize,
    pub sigma0: f64,
    pub sigma1: f64,
}

impl Default for FitParams {
    fn default() -> Self {
        Self {
            degree: 7,
            sigma0: 0.1,
            sigma1: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedScenario {
    pub id: String,
    pub ego: BezierCurve,
    pub target: ProbBezierCurve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    StraightOvertake,
    LaneChangeCut,
    ArcOvertake,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::StraightOvertake, Family::LaneChangeCut, Family::ArcOvertake];

    pub fn name(self) -> &'static str {
        match self {
            Family::StraightOvertake => "straight_overtake",
            Family::LaneChangeCut => "lane_change_cut",
            Family::ArcOvertake => "arc_overtake",
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "straight" | "straight_overtake" => Ok(Family::StraightOvertake),
            "lane_change" | "lane_change_cut" | "cut" => Ok(Family::LaneChangeCut),
            "arc" | "arc_overtake" => Ok(Family::ArcOvertake),
            _ => Err(Error::Config(format!(
                "unknown family {s:?}; expected straight, lane_change or arc"
            ))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Closed interval `[lo, hi]` to draw from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: Family,
    pub count: usize,
    pub seed: u64,
    /// Target speed, m/s.
    pub speed_range: Range,
    /// Lateral gap between the two lines at the pass, m. For lane changes
    /// this is the target's starting offset.
    pub lateral_offset_range: Range,
    /// Ego speed minus target speed, m/s.
    pub closing_rate_range: Range,
    /// Lane changes only: the target's final offset from the ego line, m.
    pub final_offset_range: Range,
    /// Time at which the ego draws level with the target, s.
    pub pass_time_range: Range,
    /// Arcs only: radius of the ego line, m.
    pub radius_range: Range,
    pub sample_rate_hz: f64,
    pub horizon_s: f64,
}

impl GeneratorSpec {
    /// Defaults for a family; ranges are plausible racing values.
    pub fn new(family: Family, count: usize, seed: u64) -> Self {
        let lateral = match family {
            Family::LaneChangeCut => Range::new(3.0, 6.0),
            _ => Range::new(1.5, 6.0),
        };
        Self {
            family,
            count,
            seed,
            speed_range: Range::new(60.0, 90.0),
            lateral_offset_range: lateral,
            closing_rate_range: Range::new(2.0, 15.0),
            final_offset_range: Range::new(-2.0, 3.0),
            pass_time_range: Range::new(1.0, 5.0),
            radius_range: Range::new(200.0, 600.0),
            sample_rate_hz: 100.0,
            horizon_s: 6.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ranges = [
            ("speed_range", self.speed_range),
            ("lateral_offset_range", self.lateral_offset_range),
            ("closing_rate_range", self.closing_rate_range),
            ("final_offset_range", self.final_offset_range),
            ("pass_time_range", self.pass_time_range),
            ("radius_range", self.radius_range),
        ];
        if let Some((name, r)) = ranges.iter().find(|(_, r)| !r.valid()) {
            return Err(Error::Config(format!("{name} [{}, {}] is empty or not finite", r.lo, r.hi)));
        }
        if self.count == 0 {
            return Err(Error::Config("count must be positive".into()));
        }
        if !(self.sample_rate_hz > 0.0 && self.horizon_s > 0.0) {
            return Err(Error::Config("sample rate and horizon must be positive".into()));
        }
        let steps = self.horizon_s * self.sample_rate_hz;
        if (steps - steps.round()).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "{} s at {} Hz is not a whole number of samples",
                self.horizon_s, self.sample_rate_hz
            )));
        }
        if self.speed_range.lo <= 0.0 {
            return Err(Error::Config("speeds must be positive".into()));
        }
        if self.family == Family::ArcOvertake
            && self.radius_range.lo <= self.lateral_offset_range.hi.abs()
        {
            return Err(Error::Config("arc radius must exceed the lateral offset".into()));
        }
        Ok(())
    }
}

/// Local-frame motion: position and velocity at `t`.
type Motion = dyn Fn(f64) -> (Vec2, Vec2);

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Samples both vehicles on the spec's clock, then places the scene at a
/// random world pose.
fn sample_scene(
    spec: &GeneratorSpec,
    id: String,
    ego: &Motion,
    target: &Motion,
    rotation: f64,
    offset: Vec2,
) -> Scenario {
    let n = (spec.horizon_s * spec.sample_rate_hz).round() as usize;
    let (s, c) = rotation.sin_cos();
    let rot = |v: Vec2| Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y);
    let rows = |m: &Motion| -> Vec<Row> {
        (0..=n)
            .map(|i| {
                let t = if i == n { spec.horizon_s } else { i as f64 / spec.sample_rate_hz };
                let (p, v) = m(t);
                let p = rot(p) + offset;
                let v = rot(v);
                [t, p.x, p.y, v.x, v.y]
            })
            .collect()
    };
    Scenario {
        id,
        track_tag: spec.family.name().to_string(),
        sample_rate_hz: spec.sample_rate_hz,
        horizon_s: spec.horizon_s,
        ego: rows(ego),
        target: rows(target),
    }
}

/// Seed-deterministic scenarios of one family. Ids are `<family>-<seed>-<index>`.
pub fn generate(spec: &GeneratorSpec) -> Result<Vec<Scenario>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.count);
    for i in 0..spec.count {
        let v_target = spec.speed_range.draw(&mut rng);
        let v_ego = v_target + spec.closing_rate_range.draw(&mut rng);
        let gap = spec.lateral_offset_range.draw(&mut rng);
        let t_pass = spec.pass_time_range.draw(&mut rng);
        let rotation = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let offset = Vec2::new(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0));
        // longitudinal head start so the two are level at t_pass
        let lead = (v_ego - v_target) * t_pass;
        let id = format!("{}-{}-{:04}", spec.family.name(), spec.seed, i);
        let scene = match spec.family {
            Family::StraightOvertake => {
                let ego = move |t: f64| (Vec2::new(v_ego * t, 0.0), Vec2::new(v_ego, 0.0));
                let target =
                    move |t: f64| (Vec2::new(lead + v_target * t, gap), Vec2::new(v_target, 0.0));
                sample_scene(spec, id, &ego, &target, rotation, offset)
            }
            Family::LaneChangeCut => {
                let y1 = spec.final_offset_range.draw(&mut rng);
                // the cut is centred near the pass and takes roughly 2 s
                let tc = t_pass + rng.random_range(-0.5..0.5);
                let w = rng.random_range(0.25..0.5);
                let ego = move |t: f64| (Vec2::new(v_ego * t, 0.0), Vec2::new(v_ego, 0.0));
                let target = move |t: f64| {
                    let s = logistic((t - tc) / w);
                    let y = gap + (y1 - gap) * s;
                    let vy = (y1 - gap) * s * (1.0 - s) / w;
                    (Vec2::new(lead + v_target * t, y), Vec2::new(v_target, vy))
                };
                sample_scene(spec, id, &ego, &target, rotation, offset)
            }
            Family::ArcOvertake => {
                let r_ego = spec.radius_range.draw(&mut rng);
                let r_target = r_ego + gap;
                // left-hand turn about (0, r_ego); both start near the origin
                let arc = move |r: f64, s0: f64, v: f64| {
                    move |t: f64| {
                        let phi = (s0 + v * t) / r;
                        let center = Vec2::new(0.0, r_ego);
                        let p = center + Vec2::new(r * phi.sin(), -r * phi.cos());
                        let vel = Vec2::new(v * phi.cos(), v * phi.sin());
                        (p, vel)
                    }
                };
                // level at t_pass means equal polar angle
                let w_ego = v_ego / r_ego;
                let w_target = v_target / r_target;
                let s0_target = (w_ego - w_target) * t_pass * r_target;
                let ego = arc(r_ego, 0.0, v_ego);
                let target = arc(r_target, s0_target, v_target);
                sample_scene(spec, id, &ego, &target, rotation, offset)
            }
        };
        out.push(scene);
    }
    Ok(out)
}

/// Scenarios per family in the default suite.
pub const SUITE_PER_FAMILY: usize = 50;

/// The default 150-scenario suite: 50 of each family.
pub fn default_suite(seed: u64) -> Result<Vec<Scenario>> {
    let mut all = Vec::new();
    for (k, family) in Family::ALL.into_iter().enumerate() {
        let spec = GeneratorSpec::new(family, SUITE_PER_FAMILY, seed.wrapping_add(k as u64));
        all.extend(generate(&spec)?);
    }
    Ok(all)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub probability: f64,
    pub colliding_count: usize,
    pub sample_count: usize,
    pub seed: u64,
    pub config_hash: u64,
}

impl CacheEntry {
    pub fn new(result: &OracleResult, seed: u64, config_hash: u64) -> Self {
        Self {
            probability: result.probability,
            colliding_count: result.colliding_count,
            sample_count: result.sample_count,
            seed,
            config_hash,
        }
    }

    pub fn binomial_std_error(&self) -> f64 {
        let p = self.probability;
        (p * (1.0 - p) / self.sample_count as f64).sqrt()
    }
}

/// Scenario id to oracle result, kept sorted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroundTruthCache {
    pub entries: BTreeMap<String, CacheEntry>,
}

impl GroundTruthCache {
    /// A missing file is an empty cache.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Ok(Self::default());
        }
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut text = serde_json::to_string_pretty(self).expect("plain data serializes");
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    /// Entry for `id` if it was computed under `config_hash` and `seed`.
    pub fn lookup(&self, id: &str, config_hash: u64, seed: u64) -> Option<&CacheEntry> {
        self.entries
            .get(id)
            .filter(|e| e.config_hash == config_hash && e.seed == seed)
    }

    pub fn insert(&mut self, id: String, entry: CacheEntry) {
        self.entries.insert(id, entry);
    }
}
