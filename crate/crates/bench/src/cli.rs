//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use glr_core::scenario::{self, default_suite, generate, Family, GeneratorSpec, GroundTruthCache, Scenario};

use crate::inspect::{glr_curve, write_curve};
use crate::run::{evaluate, fit_all, run_oracle, with_pool};
use crate::{BenchConfig, BenchError, Method, Result};

#[derive(Debug, Parser)]
#[command(name = "glr-bench", version, about = "Collision-risk estimator benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic scenarios.
    Generate(GenerateArgs),
    /// Compute or refresh Monte Carlo ground truth.
    Oracle(OracleArgs),
    /// Score estimators against ground truth.
    Evaluate(EvaluateArgs),
    /// Export GLR probability and hazard curves for one scenario.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct Shared {
    /// JSON config overriding the defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

impl Shared {
    fn config(&self) -> Result<BenchConfig> {
        match &self.config {
            Some(p) => BenchConfig::load(p),
            None => Ok(BenchConfig::default()),
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// straight, lane_change, arc, or all for the default suite.
    #[arg(long, default_value = "all")]
    pub family: String,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON generator spec; --family, --count and --seed override it.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub scenarios: PathBuf,
    /// Cache file; defaults to ground_truth.json in the scenario directory.
    #[arg(long)]
    pub ground_truth: Option<PathBuf>,
    #[command(flatten)]
    pub shared: Shared,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub scenarios: PathBuf,
    #[arg(long)]
    pub ground_truth: Option<PathBuf>,
    /// Comma-separated subset of glr,qmlgl,vspf,riskdensity,dbiub,mi,maxcircle.
    #[arg(long, default_value = "glr,qmlgl,vspf,riskdensity,dbiub,mi,maxcircle")]
    pub methods: String,
    /// Summary CSV; the matrix and JSON report go next to it.
    #[arg(long, default_value = "report.csv")]
    pub out: PathBuf,
    #[command(flatten)]
    pub shared: Shared,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value = "glr")]
    pub methods: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn cache_path(scenarios: &Path, given: &Option<PathBuf>) -> PathBuf {
    given.clone().unwrap_or_else(|| scenarios.join("ground_truth.json"))
}

/// Loads a scenario directory, ignoring the cache file if it lives there.
fn load_scenarios(dir: &Path, cache: &Path) -> Result<(Vec<Scenario>, Vec<String>)> {
    if !dir.is_dir() {
        return Err(BenchError::Data(format!("{} is not a directory", dir.display())));
    }
    let (ok, failed) = scenario::load_dir(dir)?;
    let failed = failed
        .into_iter()
        .filter(|(p, _)| p != cache && p.file_name() != Some("ground_truth.json".as_ref()))
        .map(|(p, e)| format!("{}: {e}", p.display()))
        .collect();
    Ok((ok, failed))
}

fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let scenarios = match (&a.spec, a.family.as_str()) {
        (None, "all") => {
            if a.count.is_some() {
                return Err(BenchError::Usage("--count needs a single --family".into()));
            }
            default_suite(a.seed)?
        }
        (spec_file, family) => {
            let mut spec = match spec_file {
                Some(p) => {
                    let text = std::fs::read_to_string(p)
                        .map_err(|e| BenchError::Usage(format!("cannot read {}: {e}", p.display())))?;
                    serde_json::from_str::<GeneratorSpec>(&text)
                        .map_err(|e| BenchError::Usage(format!("bad spec {}: {e}", p.display())))?
                }
                None => GeneratorSpec::new(family.parse::<Family>()?, 50, a.seed),
            };
            if spec_file.is_some() && family != "all" {
                spec.family = family.parse()?;
            }
            if let Some(c) = a.count {
                spec.count = c;
            }
            spec.seed = a.seed;
            generate(&spec)?
        }
    };
    scenario::save_all(&scenarios, &a.out)?;
    writeln!(out, "wrote {} scenarios to {} (seed {})", scenarios.len(), a.out.display(), a.seed)?;
    Ok(())
}

fn cmd_oracle(a: &OracleArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = a.shared.config()?;
    let path = cache_path(&a.scenarios, &a.ground_truth);
    let (scenarios, failed) = load_scenarios(&a.scenarios, &path)?;
    let mut cache = GroundTruthCache::load(&path)?;
    let start = Instant::now();
    let rows = with_pool(a.shared.jobs, || run_oracle(&scenarios, &cfg, a.shared.seed, &mut cache))??;
    cache.save(&path)?;
    for r in &rows {
        writeln!(
            out,
            "{:<32} p={:.4} se={:.4}{}",
            r.id,
            r.entry.probability,
            r.entry.binomial_std_error(),
            if r.computed { "" } else { " (cached)" }
        )?;
    }
    let computed = rows.iter().filter(|r| r.computed).count();
    writeln!(
        out,
        "{} scenarios, {computed} computed, {} cached, {:.2} s; cache {}",
        rows.len(),
        rows.len() - computed,
        start.elapsed().as_secs_f64(),
        path.display()
    )?;
    if !failed.is_empty() {
        for f in &failed {
            writeln!(out, "skipped {f}")?;
        }
        return Err(BenchError::Data(format!("{} scenario files could not be loaded", failed.len())));
    }
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = a.shared.config()?;
    let methods = Method::parse_list(&a.methods)?;
    let path = cache_path(&a.scenarios, &a.ground_truth);
    let (scenarios, failed) = load_scenarios(&a.scenarios, &path)?;
    if !failed.is_empty() {
        return Err(BenchError::Data(format!("unreadable scenarios: {}", failed.join("; "))));
    }
    if !path.exists() {
        return Err(BenchError::Data(format!("ground truth file {} not found", path.display())));
    }
    let cache = GroundTruthCache::load(&path)?;
    let report = with_pool(a.shared.jobs, || -> Result<_> {
        let fitted = fit_all(&scenarios, &cfg)?;
        evaluate(&fitted, &cache, &methods, &cfg, a.shared.seed)
    })??;
    let written = report.write_all(&a.out)?;
    write!(out, "{}", report.table())?;
    for p in written {
        writeln!(out, "wrote {}", p.display())?;
    }
    Ok(())
}

fn cmd_inspect(a: &InspectArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = match &a.config {
        Some(p) => BenchConfig::load(p)?,
        None => BenchConfig::default(),
    };
    let methods = Method::parse_list(&a.methods)?;
    if methods != [Method::Glr] {
        return Err(BenchError::Usage("inspect supports --methods glr only".into()));
    }
    let sc = Scenario::load(&a.scenario)?;
    let fitted = sc.fit(&cfg.fit)?;
    let curve = glr_curve(&fitted, &cfg)?;
    write_curve(&curve, &a.out)?;
    writeln!(
        out,
        "{}: total {:.6}, saturated={}, {} rows to {}",
        sc.id,
        curve.breakdown.total_probability,
        curve.saturated(),
        curve.rows.len(),
        a.out.display()
    )?;
    Ok(())
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a, out),
        Command::Oracle(a) => cmd_oracle(a, out),
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Inspect(a) => cmd_inspect(a, out),
    }
}

/// Parses `args`, runs the command and returns the exit status. Normal
/// output goes to `out`, diagnostics to `err`.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match run(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
