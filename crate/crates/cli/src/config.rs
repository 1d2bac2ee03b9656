//! Experiment configuration: the JSON document accepted by `--config`, the
//! subcommand parameter structs shared with the argument parser, and the
//! parsers for the compact string forms used in both.

use std::collections::BTreeMap;

use clap::{Args, FromArgMatches, Subcommand};
use serde::{Deserialize, Serialize};
use weylscope::covers::{BasePoint, CosphereSet, ResolutionForm, ResolutionFunction, Submanifold};
use weylscope::manifolds::{ManifoldConfig, ManifoldKind};
use weylscope::numerics::linspace;
use weylscope::spectra::SolverOptions;
use weylscope::weyl::{RemainderModel, Site};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifold: Option<ManifoldConfig>,
    pub task: Task,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    pub format: Format,
    /// Spectrum cache directory; defaults to `<dir>/spectra-cache`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Subcommand parameters, tagged by `command` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Subcommand)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Task {
    /// Eigenvalue listing (lambda, multiplicity, m, k).
    Spectrum(SpectrumTask),
    /// Counting function N, Weyl main term and remainder E.
    Count(CountTask),
    /// Counting function localized to a band.
    LocalizedCount(LocalizedCountTask),
    /// Projector kernel against the Bessel comparison.
    Kernel(KernelTask),
    /// Kuznecov sums and the smoothed comparison E^t0.
    Kuznecov(KuznecovTask),
    /// Fit of the remainder against a model on a window.
    RemainderFit(RemainderFitTask),
    /// Tabulated smoothing against direct convolution.
    SmoothCompare(SmoothCompareTask),
    /// Rotation increments on a grid of turning latitudes.
    RotationNumber(RotationTask),
    /// Periodic / aperiodic classification of invariant tori.
    Classify(ClassifyTask),
    /// Near-periodic set measures.
    NonperiodicMeasure(NonperiodicTask),
    /// Looping set measures for a pair of submanifolds.
    NonloopMeasure(NonloopTask),
    /// Non-recurrence check at a fiber or conormal circle.
    RecurrenceCheck(RecurrenceTask),
    /// Good-cover construction and audits.
    CoverAudit(CoverAuditTask),
    /// Verification scenarios.
    Scenario(ScenarioTask),
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Spectrum(_) => "spectrum",
            Task::Count(_) => "count",
            Task::LocalizedCount(_) => "localized-count",
            Task::Kernel(_) => "kernel",
            Task::Kuznecov(_) => "kuznecov",
            Task::RemainderFit(_) => "remainder-fit",
            Task::SmoothCompare(_) => "smooth-compare",
            Task::RotationNumber(_) => "rotation-number",
            Task::Classify(_) => "classify",
            Task::NonperiodicMeasure(_) => "nonperiodic-measure",
            Task::NonloopMeasure(_) => "nonloop-measure",
            Task::RecurrenceCheck(_) => "recurrence-check",
            Task::CoverAudit(_) => "cover-audit",
            Task::Scenario(_) => "scenario",
        }
    }

    /// Whether the task draws random samples and so needs a seed.
    pub fn is_random(&self) -> bool {
        matches!(
            self,
            Task::SmoothCompare(_)
                | Task::NonperiodicMeasure(_)
                | Task::NonloopMeasure(_)
                | Task::CoverAudit(_)
                | Task::Scenario(_)
        )
    }
}

/// Defaults of an argument struct, taken from its `#[arg]` attributes.
pub fn arg_defaults<T: Args + FromArgMatches>() -> T {
    let cmd = T::augment_args(clap::Command::new("defaults").no_binary_name(true));
    let m = cmd.try_get_matches_from(Vec::<String>::new()).expect("argument defaults parse");
    T::from_arg_matches(&m).expect("argument defaults bind")
}

macro_rules! arg_default {
    ($($t:ty),*) => {$(
        impl Default for $t {
            fn default() -> Self {
                arg_defaults()
            }
        }
    )*};
}

arg_default!(
    SpectrumTask,
    CountTask,
    LocalizedCountTask,
    KernelTask,
    KuznecovTask,
    RemainderFitTask,
    SmoothCompareTask,
    RotationTask,
    ClassifyTask,
    NonperiodicTask,
    NonloopTask,
    RecurrenceTask,
    CoverAuditTask,
    ScenarioTask
);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumTask {
    #[arg(long, default_value_t = 20.0)]
    pub lambda_max: f64,
    /// Largest angular mode for surfaces of revolution.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_max: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct CountTask {
    /// `start:stop:count`.
    #[arg(long, default_value = "10:50:401")]
    pub grid: String,
    /// Evaluate at both one-sided limits of every jump inside the grid range.
    #[arg(long)]
    pub jumps: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizedCountTask {
    #[arg(long, default_value = "band:-0.5,0.5")]
    pub band: String,
    #[arg(long, default_value = "10:40:301")]
    pub grid: String,
    #[arg(long)]
    pub jumps: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct KernelTask {
    #[arg(long, default_value = "point:0.3,0")]
    pub x: String,
    #[arg(long, default_value = "point:0.3,0")]
    pub y: String,
    #[arg(long, default_value = "5:30:26")]
    pub grid: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct KuznecovTask {
    #[arg(long, default_value = "point:0.3,0")]
    pub h1: String,
    #[arg(long, default_value = "point:0.3,0")]
    pub h2: String,
    #[arg(long, default_value_t = 1.0)]
    pub t0: f64,
    #[arg(long, default_value = "10:40:301")]
    pub grid: String,
    /// Spectrum extent; defaults to the grid end plus the smoothing margin.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct RemainderFitTask {
    /// `standard`, `log-gain` or `power`.
    #[arg(long, default_value = "standard")]
    pub model: String,
    /// `lo:hi`.
    #[arg(long, default_value = "20:200")]
    pub window: String,
    /// Fit the localized remainder of this band instead of the full count.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothCompareTask {
    #[arg(long, default_value_t = 10.0)]
    pub sigma: f64,
    /// `lo:hi` range of the random evaluation points.
    #[arg(long, default_value = "20:60")]
    pub window: String,
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct RotationTask {
    #[arg(long, default_value = "0.1:1.45:20")]
    pub grid: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyTask {
    #[arg(long, default_value = "0.05:1.52:50")]
    pub grid: String,
    #[arg(long, default_value_t = 50)]
    pub qmax: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub rational_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub deriv_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct NonperiodicTask {
    /// `full`, `band:s0,s1` or `clairaut:c_lo,c_hi`.
    #[arg(long, default_value = "full")]
    pub set: String,
    #[arg(long, default_value_t = 1.0)]
    pub t0: f64,
    /// Resolution function giving `T = 𝐓(R)`.
    #[arg(long, default_value = "log:0.1")]
    pub resolution: String,
    /// Comma-separated radii.
    #[arg(long, default_value = "0.05,0.02,0.01,0.005")]
    pub radii: String,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct NonloopTask {
    #[arg(long, default_value = "point:0.3,0")]
    pub h1: String,
    #[arg(long, default_value = "point:0.3,0")]
    pub h2: String,
    #[arg(long, default_value_t = 1.0)]
    pub t0: f64,
    #[arg(long, default_value = "log:0.1")]
    pub resolution: String,
    #[arg(long, default_value = "0.05,0.02,0.01")]
    pub radii: String,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct RecurrenceTask {
    /// `point:a,b` or `latitude:s0` (conormal sign from `--sign`).
    #[arg(long, default_value = "point:0.3,0")]
    pub h: String,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub sign: f64,
    /// Fiber angle of the center `ρ`.
    #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
    pub center: f64,
    #[arg(long, default_value_t = 0.2)]
    pub r0: f64,
    #[arg(long, default_value = "const:1")]
    pub t_small: String,
    #[arg(long, default_value = "log:5")]
    pub t_big: String,
    #[arg(long, default_value_t = 0.01)]
    pub r: f64,
    #[arg(long, default_value_t = 0.05)]
    pub big_r: f64,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    #[arg(long, default_value_t = 4000)]
    pub max_grid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct CoverAuditTask {
    /// `point:a,b` or `latitude:s0`.
    #[arg(long, default_value = "point:0.3,0")]
    pub target: String,
    #[arg(long, default_value_t = 0.25)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.02)]
    pub r: f64,
    #[arg(long, default_value_t = 32)]
    pub budget: usize,
    #[arg(long, default_value_t = 10_000)]
    pub probes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioTask {
    /// Scenario name; omit with `--list`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[arg(long)]
    pub list: bool,
    /// Overrides of the scenario's default parameters.
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
}

fn path_error<E: std::fmt::Display>(prefix: &str, e: serde_path_to_error::Error<E>) -> CliError {
    let path = e.path().to_string();
    let field = match (prefix, path.as_str()) {
        ("", ".") => "<root>".to_string(),
        (p, ".") => p.trim_end_matches('.').to_string(),
        (p, q) => format!("{p}{q}"),
    };
    CliError::config(field, e.inner().to_string())
}

fn typed<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> CliResult<T> {
    serde_path_to_error::deserialize(v).map_err(|e| path_error("task.", e))
}

/// The task object, parsed per command so that errors keep their field path.
fn task_from_value(v: serde_json::Value) -> CliResult<Task> {
    let serde_json::Value::Object(mut obj) = v else {
        return Err(CliError::config("task", "must be an object"));
    };
    let cmd = match obj.remove("command") {
        Some(serde_json::Value::String(c)) => c,
        _ => return Err(CliError::config("task.command", "missing or not a string")),
    };
    let rest = serde_json::Value::Object(obj);
    Ok(match cmd.as_str() {
        "spectrum" => Task::Spectrum(typed(rest)?),
        "count" => Task::Count(typed(rest)?),
        "localized-count" => Task::LocalizedCount(typed(rest)?),
        "kernel" => Task::Kernel(typed(rest)?),
        "kuznecov" => Task::Kuznecov(typed(rest)?),
        "remainder-fit" => Task::RemainderFit(typed(rest)?),
        "smooth-compare" => Task::SmoothCompare(typed(rest)?),
        "rotation-number" => Task::RotationNumber(typed(rest)?),
        "classify" => Task::Classify(typed(rest)?),
        "nonperiodic-measure" => Task::NonperiodicMeasure(typed(rest)?),
        "nonloop-measure" => Task::NonloopMeasure(typed(rest)?),
        "recurrence-check" => Task::RecurrenceCheck(typed(rest)?),
        "cover-audit" => Task::CoverAudit(typed(rest)?),
        "scenario" => Task::Scenario(typed(rest)?),
        other => return Err(CliError::config("task.command", format!("unknown command `{other}`"))),
    })
}

/// Parse a config document, naming the offending field on failure.
pub fn parse_config(text: &str) -> CliResult<ExperimentConfig> {
    let mut doc: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::config("<root>", e.to_string()))?;
    let task = match doc.as_object_mut().and_then(|o| o.remove("task")) {
        Some(t) => task_from_value(t)?,
        None => return Err(CliError::config("task", "missing field `task`")),
    };
    if let Some(o) = doc.as_object_mut() {
        o.insert("task".into(), serde_json::json!({"command": "scenario", "list": true}));
    }
    let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(doc).map_err(|e| path_error("", e))?;
    cfg.task = task;
    cfg.validate()?;
    Ok(cfg)
}

pub const TOLERANCE_KEYS: &[&str] = &[
    "solver.pole_offset",
    "solver.rtol",
    "solver.atol",
    "solver.lambda_tol",
    "solver.merge_tol",
    "smoothing.tail_tol",
];

impl ExperimentConfig {
    pub fn new(task: Task) -> Self {
        Self {
            manifold: None,
            task,
            seeds: Vec::new(),
            tolerances: BTreeMap::new(),
            output: OutputConfig::default(),
        }
    }

    /// Schema checks beyond what deserialization enforces.
    pub fn validate(&self) -> CliResult<()> {
        for (k, v) in &self.tolerances {
            if !TOLERANCE_KEYS.contains(&k.as_str()) {
                return Err(CliError::config(
                    format!("tolerances.{k}"),
                    format!("unknown tolerance; expected one of {TOLERANCE_KEYS:?}"),
                ));
            }
            if !(*v > 0.0 && v.is_finite()) {
                return Err(CliError::config(format!("tolerances.{k}"), "must be positive"));
            }
        }
        if let Some(m) = &self.manifold {
            m.build()
                .map_err(|e| CliError::config("manifold", e.to_string()))?;
        }
        Ok(())
    }

    pub fn manifold(&self) -> ManifoldConfig {
        self.manifold
            .clone()
            .unwrap_or_else(|| ManifoldConfig::of_kind(ManifoldKind::RoundSphere))
    }

    /// First seed; tasks that sample require one when `CI` is set.
    pub fn seed(&self) -> CliResult<u64> {
        match self.seeds.first() {
            Some(s) => Ok(*s),
            None if self.task.is_random() && std::env::var_os("CI").is_some() => {
                Err(CliError::config("seeds", "an explicit --seed is required in CI mode"))
            }
            None => Ok(0),
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        let mut so = SolverOptions::default();
        let t = &self.tolerances;
        let set = |k: &str, v: &mut f64| {
            if let Some(x) = t.get(k) {
                *v = *x;
            }
        };
        set("solver.pole_offset", &mut so.pole_offset);
        set("solver.rtol", &mut so.rtol);
        set("solver.atol", &mut so.atol);
        set("solver.lambda_tol", &mut so.lambda_tol);
        set("solver.merge_tol", &mut so.merge_tol);
        so
    }

    pub fn tail_tol(&self) -> f64 {
        self.tolerances
            .get("smoothing.tail_tol")
            .copied()
            .unwrap_or(weylscope::weyl::TAIL_TOL)
    }

    /// Canonical JSON with the output location removed, the input to the config hash.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.output.dir = None;
        c.output.cache_dir = None;
        serde_json::to_string(&c).expect("config serializes")
    }
}

fn numbers(field: &str, s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(field, format!("`{v}` is not a number")))
        })
        .collect()
}

fn number_list(field: &str, s: &str, n: usize) -> CliResult<Vec<f64>> {
    let v = numbers(field, s)?;
    if v.len() != n {
        return Err(CliError::config(field, format!("expected {n} numbers, got `{s}`")));
    }
    Ok(v)
}

/// `start:stop:count` → evenly spaced grid.
pub fn parse_grid(field: &str, s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::config(field, format!("expected start:stop:count, got `{s}`")));
    }
    let a = numbers(field, parts[0])?[0];
    let b = numbers(field, parts[1])?[0];
    let n: usize = parts[2]
        .parse()
        .map_err(|_| CliError::config(field, format!("count `{}` is not an integer", parts[2])))?;
    if n < 2 || !(b > a) {
        return Err(CliError::config(field, "need stop > start and count ≥ 2"));
    }
    Ok(linspace(a, b, n))
}

/// `lo:hi`.
pub fn parse_window(field: &str, s: &str) -> CliResult<(f64, f64)> {
    let v: Vec<&str> = s.split(':').collect();
    if v.len() != 2 {
        return Err(CliError::config(field, format!("expected lo:hi, got `{s}`")));
    }
    let (lo, hi) = (numbers(field, v[0])?[0], numbers(field, v[1])?[0]);
    if !(hi > lo) {
        return Err(CliError::config(field, "need hi > lo"));
    }
    Ok((lo, hi))
}

pub fn parse_radii(field: &str, s: &str) -> CliResult<Vec<f64>> {
    let v = numbers(field, s)?;
    if v.iter().any(|r| !(*r > 0.0)) {
        return Err(CliError::config(field, "radii must be positive"));
    }
    Ok(v)
}

fn split_kind<'a>(field: &str, s: &'a str) -> CliResult<(&'a str, &'a str)> {
    Ok(s.split_once(':').unwrap_or((s, "")))
        .and_then(|(k, v)| if k.is_empty() { Err(CliError::config(field, "empty")) } else { Ok((k, v)) })
}

/// `point:a,b,…`, `latitude:s0` or `band:s0,s1`.
pub fn parse_site(field: &str, s: &str) -> CliResult<Site> {
    let (kind, rest) = split_kind(field, s)?;
    match kind {
        "point" => Ok(Site::Point(numbers(field, rest)?)),
        "latitude" => Ok(Site::Latitude(number_list(field, rest, 1)?[0])),
        "band" => {
            let v = number_list(field, rest, 2)?;
            Ok(Site::Band(v[0], v[1]))
        }
        _ => Err(CliError::config(field, format!("unknown site `{kind}`; use point, latitude or band"))),
    }
}

pub fn parse_band(field: &str, s: &str) -> CliResult<(f64, f64)> {
    match parse_site(field, s)? {
        Site::Band(a, b) if a < b => Ok((a, b)),
        _ => Err(CliError::config(field, format!("expected band:s0,s1 with s0 < s1, got `{s}`"))),
    }
}

pub fn parse_submanifold(field: &str, s: &str) -> CliResult<Submanifold> {
    match parse_site(field, s)? {
        Site::Point(v) if v.len() == 2 => Ok(Submanifold::Point {
            x: BasePoint::new(v[0], v[1]),
        }),
        Site::Latitude(s0) => Ok(Submanifold::Latitude { s0 }),
        _ => Err(CliError::config(field, format!("expected point:a,b or latitude:s0, got `{s}`"))),
    }
}

pub fn parse_cosphere_set(field: &str, s: &str) -> CliResult<CosphereSet> {
    let (kind, rest) = split_kind(field, s)?;
    match kind {
        "full" if rest.is_empty() => Ok(CosphereSet::Full),
        "band" => {
            let v = number_list(field, rest, 2)?;
            Ok(CosphereSet::Band { s0: v[0], s1: v[1] })
        }
        "clairaut" => {
            let v = number_list(field, rest, 2)?;
            Ok(CosphereSet::ClairautBand { c_lo: v[0], c_hi: v[1] })
        }
        _ => Err(CliError::config(field, format!("expected full, band:s0,s1 or clairaut:c_lo,c_hi, got `{s}`"))),
    }
}

/// `log:c`, `affine-log:a,c`, `log-power:c,beta`, `const:c` or `power:c,p`.
pub fn parse_resolution(field: &str, s: &str) -> CliResult<ResolutionFunction> {
    let (kind, rest) = split_kind(field, s)?;
    let form = match kind {
        "log" => ResolutionForm::Log {
            c: number_list(field, rest, 1)?[0],
        },
        "affine-log" => {
            let v = number_list(field, rest, 2)?;
            ResolutionForm::AffineLog { a: v[0], c: v[1] }
        }
        "log-power" => {
            let v = number_list(field, rest, 2)?;
            ResolutionForm::LogPower { c: v[0], beta: v[1] }
        }
        "const" => ResolutionForm::Constant {
            c: number_list(field, rest, 1)?[0],
        },
        "power" => {
            let v = number_list(field, rest, 2)?;
            ResolutionForm::Power { c: v[0], p: v[1] }
        }
        _ => return Err(CliError::config(field, format!("unknown resolution function `{kind}`"))),
    };
    Ok(ResolutionFunction::new(form))
}

pub fn parse_model(field: &str, s: &str) -> CliResult<RemainderModel> {
    match s {
        "standard" => Ok(RemainderModel::Standard),
        "log-gain" => Ok(RemainderModel::LogGain),
        "power" => Ok(RemainderModel::Power),
        _ => Err(CliError::config(field, format!("unknown model `{s}`; use standard, log-gain or power"))),
    }
}

/// Manifold presets `round-sphere`, `perturbed[:ε,a,b]`, `pendulum:E`,
/// `sphere:n`, `torus:L1,L2,…`, `s2xs1`, inline JSON, or `@path` to a JSON file.
pub fn parse_manifold(s: &str) -> CliResult<ManifoldConfig> {
    let field = "manifold";
    let s = s.trim();
    let cfg = if let Some(path) = s.strip_prefix('@') {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(field, format!("reading {path}: {e}")))?;
        manifold_json(&text)?
    } else if s.starts_with('{') {
        manifold_json(s)?
    } else {
        let (kind, rest) = split_kind(field, s)?;
        match kind {
            "round-sphere" => ManifoldConfig::of_kind(ManifoldKind::RoundSphere),
            "perturbed" if rest.is_empty() => ManifoldConfig::perturbed(0.01, 0.5, 1.0),
            "perturbed" => {
                let v = number_list(field, rest, 3)?;
                ManifoldConfig::perturbed(v[0], v[1], v[2])
            }
            "pendulum" => ManifoldConfig::pendulum(number_list(field, rest, 1)?[0]),
            "sphere" => {
                let n: u32 = rest
                    .parse()
                    .map_err(|_| CliError::config(field, format!("sphere dimension `{rest}`")))?;
                ManifoldConfig::sphere(n)
            }
            "torus" => ManifoldConfig::torus(numbers(field, rest)?),
            "s2xs1" => ManifoldConfig::product(
                ManifoldConfig::sphere(2),
                ManifoldConfig::torus(vec![2.0 * std::f64::consts::PI]),
            ),
            _ => return Err(CliError::config(field, format!("unknown manifold preset `{kind}`"))),
        }
    };
    cfg.build().map_err(|e| CliError::config(field, e.to_string()))?;
    Ok(cfg)
}

fn manifold_json(text: &str) -> CliResult<ManifoldConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let p = e.path().to_string();
        let field = if p == "." { "manifold".to_string() } else { format!("manifold.{p}") };
        CliError::config(field, e.inner().to_string())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_come_from_arg_attributes() {
        let c = ClassifyTask::default();
        assert_eq!(c.qmax, 50);
        assert_eq!(c.deriv_floor, 1e-6);
        assert_eq!(KuznecovTask::default().t0, 1.0);
    }

    #[test]
    fn config_round_trips() {
        let mut cfg = ExperimentConfig::new(Task::Classify(ClassifyTask::default()));
        cfg.manifold = Some(ManifoldConfig::perturbed(0.01, 0.5, 1.0));
        cfg.seeds = vec![7];
        cfg.tolerances.insert("solver.rtol".into(), 1e-11);
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = r#"{"task": {"command": "count", "grid": 3}}"#;
        match parse_config(bad) {
            Err(CliError::Config { field, .. }) => assert_eq!(field, "task.grid"),
            other => panic!("{other:?}"),
        }
        let bad = r#"{"task": {"command": "count"}, "tolerances": {"nope": 1.0}}"#;
        match parse_config(bad) {
            Err(CliError::Config { field, .. }) => assert_eq!(field, "tolerances.nope"),
            other => panic!("{other:?}"),
        }
        assert!(parse_grid("task.grid", "1:2").is_err());
        assert!(parse_site("x", "ring:1").is_err());
    }

    #[test]
    fn presets() {
        assert_eq!(parse_manifold("perturbed").unwrap(), ManifoldConfig::perturbed(0.01, 0.5, 1.0));
        assert_eq!(parse_manifold("torus:1,2").unwrap(), ManifoldConfig::torus(vec![1.0, 2.0]));
        let j = parse_manifold(r#"{"kind": "pendulum", "E": 4.0}"#).unwrap();
        assert_eq!(j, ManifoldConfig::pendulum(4.0));
        assert!(parse_manifold("torus:-1").is_err());
        assert_eq!(parse_grid("g", "0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
    }
}
