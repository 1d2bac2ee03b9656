//! Dispatch of an [`ExperimentConfig`] to the library and artifact writing.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use weylscope::covers::{
    build_good_cover, looping_pair_measure, near_periodic_measure, recurrence_measure, FiberCircle, PhaseSpace,
    RecurrenceParams, Submanifold,
};
use weylscope::geoflow::{classify_tori, d_rotation_number, rotation_number, ClassifyOptions, DerivativeMethod};
use weylscope::manifolds::{ManifoldKind, ModelManifold, ProfileCurve};
use weylscope::numerics::lowdisc::ScrambledHalton;
use weylscope::spectra::{cached_surface_spectrum, closed_form_spectrum, sphere_spectrum, Spectrum, SpectrumCache, SurfaceSpectrum};
use weylscope::weyl::{
    build_smoothing_kernel, counting, direct_convolution, fit_remainder, jump_grid, kuznecov, localized_counting,
    localized_jumps, projector_kernel, smoothed_series_with, CountingSeries, Jumps, SpectralModel,
};

use crate::config::*;
use crate::error::{CliError, CliResult, StageExt};
use crate::output::*;
use crate::scenarios::{self, classification_csv, ScenarioContext};

pub const OUT_DIR_ENV: &str = "WEYLSCOPE_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "weylscope-out";

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub artifacts: Vec<PathBuf>,
    pub verdict: Option<Verdict>,
    /// Lines for the terminal.
    pub lines: Vec<String>,
}

impl Report {
    /// 0 unless a verdict has a failing claim.
    pub fn exit_code(&self) -> i32 {
        match &self.verdict {
            Some(v) if !v.pass() => 2,
            _ => 0,
        }
    }
}

/// `--out-dir`, then the config, then the environment, then the default.
pub fn resolve_out_dir(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    out: PathBuf,
    header: Header,
    report: Report,
}

impl Run<'_> {
    fn cache(&self) -> SpectrumCache {
        let dir = self
            .cfg
            .output
            .cache_dir
            .as_ref()
            .map(PathBuf::from)
            .unwrap_or_else(|| self.out.join("spectra-cache"));
        SpectrumCache::new(dir)
    }

    fn write_csv(&mut self, name: &str, t: &Csv) -> CliResult<()> {
        let p = self.out.join(name);
        write_atomic(&p, t.render(&self.header).as_bytes())?;
        self.report.artifacts.push(p);
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, body: &T) -> CliResult<()> {
        let p = self.out.join(name);
        write_atomic(&p, json_document(&self.header, body).as_bytes())?;
        self.report.artifacts.push(p);
        Ok(())
    }

    /// Series go to `<command>.csv` or `<command>.json` according to the format.
    fn series<T: Serialize>(&mut self, t: &Csv, body: &T) -> CliResult<()> {
        let stem = self.header.command.clone();
        match self.cfg.output.format {
            Format::Csv => self.write_csv(&format!("{stem}.csv"), t),
            Format::Json => self.write_json(&format!("{stem}.json"), body),
        }
    }

    fn verdict(&mut self, scenario: &str, claims: Vec<Claim>, file: &str) -> CliResult<()> {
        let v = Verdict {
            scenario: scenario.to_string(),
            claims,
            provenance: Provenance {
                config_hash: self.header.config_hash.clone(),
                version: VERSION.to_string(),
            },
        };
        self.write_json(file, &v)?;
        self.report.lines.extend(v.summary_lines());
        self.report.verdict = Some(v);
        Ok(())
    }

    fn manifold(&self) -> CliResult<ModelManifold> {
        self.cfg.manifold().build().map_err(|e| CliError::config("manifold", e.to_string()))
    }

    fn profile(&self) -> CliResult<ProfileCurve> {
        match self.manifold()? {
            ModelManifold::SurfaceOfRevolution(p) => Ok(p),
            m => Err(CliError::config(
                "manifold",
                format!("{} needs a surface of revolution, got {}", self.header.command, m.label()),
            )),
        }
    }

    fn phase_space(&self) -> CliResult<PhaseSpace> {
        PhaseSpace::of_manifold(&self.manifold()?).map_err(|e| CliError::config("manifold", e.to_string()))
    }

    fn surface(&self, p: &ProfileCurve, lambda: f64, m_max: Option<i64>, efs: bool) -> CliResult<SurfaceSpectrum> {
        let mut so = self.cfg.solver_options();
        if !efs {
            so.grid_points = 0;
        }
        cached_surface_spectrum(Some(&self.cache()), p, lambda, m_max, so).stage("surface spectrum")
    }

    fn spectrum(&self, lambda: f64, efs: bool) -> CliResult<Loaded> {
        if self.cfg.manifold().kind == ManifoldKind::RoundSphere {
            return Ok(Loaded::Sphere(sphere_spectrum(2, lambda)));
        }
        match self.manifold()? {
            ModelManifold::SurfaceOfRevolution(p) => {
                let s = self.surface(&p, lambda, None, efs)?;
                Ok(Loaded::Surface(p, s))
            }
            m @ ModelManifold::RoundSphere(2) => Ok(Loaded::Sphere(closed_form_spectrum(&m, lambda).stage("spectrum")?)),
            ModelManifold::FlatTorus(periods) => {
                let s = closed_form_spectrum(&ModelManifold::FlatTorus(periods.clone()), lambda).stage("spectrum")?;
                Ok(Loaded::Torus(periods, s))
            }
            m => Ok(Loaded::Other(closed_form_spectrum(&m, lambda).stage("spectrum")?)),
        }
    }
}

enum Loaded {
    Surface(ProfileCurve, SurfaceSpectrum),
    Sphere(Spectrum),
    Torus(Vec<f64>, Spectrum),
    Other(Spectrum),
}

impl Loaded {
    fn spectrum(&self) -> &Spectrum {
        match self {
            Loaded::Surface(_, s) => &s.spectrum,
            Loaded::Sphere(s) | Loaded::Torus(_, s) | Loaded::Other(s) => s,
        }
    }

    fn model(&self) -> CliResult<SpectralModel<'_>> {
        match self {
            Loaded::Surface(p, s) => Ok(SpectralModel::Surface { profile: p, spectrum: s }),
            Loaded::Sphere(s) => Ok(SpectralModel::Sphere(s)),
            Loaded::Torus(p, s) => Ok(SpectralModel::Torus { periods: p, spectrum: s }),
            Loaded::Other(s) => Err(CliError::config(
                "manifold",
                format!("eigenfunction evaluation is not available on {}", s.manifold),
            )),
        }
    }
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

fn count_table(c: &CountingSeries) -> Csv {
    let mut t = Csv::new(&["lambda", "N", "main", "E"]);
    for i in 0..c.lambdas.len() {
        t.push(vec![num(c.lambdas[i]), num(c.n[i]), num(c.main[i]), num(c.e[i])]);
    }
    t
}

/// Execute `cfg`, writing artifacts under `out`.
pub fn run(cfg: &ExperimentConfig, out: PathBuf) -> CliResult<Report> {
    cfg.validate()?;
    let hash = config_hash(&cfg.canonical_json());
    let mut r = Run {
        cfg,
        out,
        header: Header::new(cfg.task.name(), &hash),
        report: Report::default(),
    };
    let seed = cfg.seed()?;
    match &cfg.task {
        Task::Spectrum(t) => spectrum_cmd(&mut r, t)?,
        Task::Count(t) => count_cmd(&mut r, t)?,
        Task::LocalizedCount(t) => localized_cmd(&mut r, t)?,
        Task::Kernel(t) => kernel_cmd(&mut r, t)?,
        Task::Kuznecov(t) => kuznecov_cmd(&mut r, t)?,
        Task::RemainderFit(t) => remainder_cmd(&mut r, t)?,
        Task::SmoothCompare(t) => smooth_cmd(&mut r, t, seed)?,
        Task::RotationNumber(t) => rotation_cmd(&mut r, t)?,
        Task::Classify(t) => classify_cmd(&mut r, t)?,
        Task::NonperiodicMeasure(t) => nonperiodic_cmd(&mut r, t, seed)?,
        Task::NonloopMeasure(t) => nonloop_cmd(&mut r, t, seed)?,
        Task::RecurrenceCheck(t) => recurrence_cmd(&mut r, t)?,
        Task::CoverAudit(t) => cover_cmd(&mut r, t, seed)?,
        Task::Scenario(t) => scenario_cmd(&mut r, t, seed)?,
    }
    Ok(r.report)
}

fn spectrum_cmd(r: &mut Run, t: &SpectrumTask) -> CliResult<()> {
    if !(t.lambda_max > 0.0) {
        return Err(CliError::config("task.lambda_max", "must be positive"));
    }
    let spec = match r.manifold()? {
        ModelManifold::SurfaceOfRevolution(p) if t.m_max.is_some() => {
            r.surface(&p, t.lambda_max, t.m_max, false)?.spectrum
        }
        _ => r.spectrum(t.lambda_max, false)?.spectrum().clone(),
    };
    let mut csv = Csv::new(&["lambda", "multiplicity", "m", "k"]);
    for e in &spec.entries {
        let join = |f: &dyn Fn(&(i64, usize)) -> String| e.modes.iter().map(f).collect::<Vec<_>>().join(";");
        csv.push(vec![
            num(e.lambda),
            e.multiplicity.to_string(),
            join(&|x| x.0.to_string()),
            join(&|x| x.1.to_string()),
        ]);
    }
    r.series(&csv, &spec)?;
    r.report.lines.push(format!(
        "{} levels, total multiplicity {}, complete to {}",
        spec.len(),
        spec.total_multiplicity(),
        spec.lambda_max
    ));
    Ok(())
}

fn grid_of(field: &str, s: &str, jumps: bool, levels: impl Fn(f64) -> CliResult<Vec<f64>>) -> CliResult<Vec<f64>> {
    let g = parse_grid(field, s)?;
    if jumps {
        let (lo, hi) = (g[0], *g.last().unwrap());
        Ok(jump_grid(&levels(hi)?, lo, hi))
    } else {
        Ok(g)
    }
}

fn count_cmd(r: &mut Run, t: &CountTask) -> CliResult<()> {
    let g = parse_grid("task.grid", &t.grid)?;
    let loaded = r.spectrum(max_of(&g), false)?;
    let spec = loaded.spectrum();
    let grid = grid_of("task.grid", &t.grid, t.jumps, |_| Ok(spec.entries.iter().map(|e| e.lambda).collect()))?;
    let c = counting(spec, &grid).stage("counting")?;
    r.series(&count_table(&c), &c)
}

fn localized_cmd(r: &mut Run, t: &LocalizedCountTask) -> CliResult<()> {
    let band = parse_band("task.band", &t.band)?;
    let p = r.profile()?;
    let g = parse_grid("task.grid", &t.grid)?;
    let s = r.surface(&p, max_of(&g), None, true)?;
    let grid = grid_of("task.grid", &t.grid, t.jumps, |_| {
        Ok(localized_jumps(&p, &s, band).stage("localized jumps")?.lambdas)
    })?;
    let c = localized_counting(&p, &s, band, &grid).stage("localized counting")?;
    r.series(&count_table(&c), &c)
}

fn point(field: &str, s: &str) -> CliResult<Vec<f64>> {
    match parse_site(field, s)? {
        weylscope::weyl::Site::Point(v) => Ok(v),
        _ => Err(CliError::config(field, "expected point:…")),
    }
}

fn kernel_cmd(r: &mut Run, t: &KernelTask) -> CliResult<()> {
    let x = point("task.x", &t.x)?;
    let y = point("task.y", &t.y)?;
    let grid = parse_grid("task.grid", &t.grid)?;
    let loaded = r.spectrum(max_of(&grid), true)?;
    let model = loaded.model()?;
    let vals = grid
        .par_iter()
        .map(|&l| projector_kernel(&model, &x, &y, l))
        .collect::<weylscope::Result<Vec<_>>>()
        .stage("projector kernel")?;
    let mut csv = Csv::new(&["lambda", "Pi", "comparison", "E0", "distance"]);
    for v in &vals {
        csv.push(vec![num(v.lambda), num(v.pi), num(v.comparison), num(v.e0), num(v.distance)]);
    }
    r.series(&csv, &vals)
}

fn kuznecov_cmd(r: &mut Run, t: &KuznecovTask) -> CliResult<()> {
    let h1 = parse_site("task.h1", &t.h1)?;
    let h2 = parse_site("task.h2", &t.h2)?;
    if !(t.t0 > 0.0) {
        return Err(CliError::config("task.t0", "must be positive"));
    }
    let grid = parse_grid("task.grid", &t.grid)?;
    let kernel = build_smoothing_kernel(1.0).stage("smoothing kernel")?;
    let extent = t
        .lambda_max
        .unwrap_or_else(|| (max_of(&grid) + kernel.margin(weylscope::weyl::TAIL_TOL) / t.t0).ceil() + 1.0);
    let loaded = r.spectrum(extent, true)?;
    let ks = kuznecov(&loaded.model()?, &h1, &h2, &grid, t.t0, &kernel).stage("kuznecov")?;
    let mut csv = Csv::new(&["lambda", "Pi", "smoothed", "E_t0", "bound"]);
    for i in 0..grid.len() {
        csv.push(vec![num(grid[i]), num(ks.values[i]), num(ks.smoothed[i]), num(ks.e_t0[i]), num(ks.bound[i])]);
    }
    r.series(&csv, &ks)
}

fn remainder_cmd(r: &mut Run, t: &RemainderFitTask) -> CliResult<()> {
    let model = parse_model("task.model", &t.model)?;
    let window = parse_window("task.window", &t.window)?;
    let (grid, e, dim) = match &t.band {
        Some(b) => {
            let band = parse_band("task.band", b)?;
            let p = r.profile()?;
            let s = r.surface(&p, window.1, None, true)?;
            let j = localized_jumps(&p, &s, band).stage("localized jumps")?;
            let grid = jump_grid(&j.lambdas, window.0, window.1);
            let c = localized_counting(&p, &s, band, &grid).stage("localized counting")?;
            (grid, c.e, 2)
        }
        None => {
            let loaded = r.spectrum(window.1, false)?;
            let spec = loaded.spectrum();
            let grid = jump_grid(&spec.entries.iter().map(|e| e.lambda).collect::<Vec<_>>(), window.0, window.1);
            let c = counting(spec, &grid).stage("counting")?;
            (grid, c.e, spec.dim)
        }
    };
    let fit = fit_remainder(&grid, &e, dim, model, window).stage("remainder fit")?;
    r.write_json("remainder-fit.json", &fit)?;
    r.report.lines.push(format!(
        "{:?}: constant {:.6e}, gamma {}, trend {:.4} on [{}, {}]",
        fit.model,
        fit.constant,
        fit.gamma.map(|g| format!("{g:.4}")).unwrap_or_else(|| "-".into()),
        fit.trend,
        window.0,
        window.1
    ));
    Ok(())
}

fn smooth_cmd(r: &mut Run, t: &SmoothCompareTask, seed: u64) -> CliResult<()> {
    let (lo, hi) = parse_window("task.window", &t.window)?;
    if !(t.sigma > 0.0) || t.points == 0 {
        return Err(CliError::config("task.sigma", "need sigma > 0 and points > 0"));
    }
    let kernel = build_smoothing_kernel(1.0).stage("smoothing kernel")?;
    let tol = r.cfg.tail_tol();
    let extent = t
        .lambda_max
        .unwrap_or_else(|| (hi + kernel.margin(tol) / t.sigma).ceil() + 1.0);
    let loaded = r.spectrum(extent, false)?;
    let j = Jumps::from_spectrum(loaded.spectrum());
    let hal = ScrambledHalton::new(1, seed);
    let pts: Vec<f64> = (0..t.points as u64).map(|i| lo + (hi - lo) * hal.coord(i, 0)).collect();
    let sm = smoothed_series_with(&j, &kernel, t.sigma, &pts, tol).stage("smoothed series")?;
    let direct: Vec<f64> = pts.par_iter().map(|&l| direct_convolution(&j, &kernel, t.sigma, l)).collect();
    let mut csv = Csv::new(&["lambda", "table", "direct", "difference", "bound"]);
    let mut worst: f64 = 0.0;
    for i in 0..pts.len() {
        let d = (sm.values[i] - direct[i]).abs();
        worst = worst.max(d / sm.bound[i]);
        csv.push(vec![num(pts[i]), num(sm.values[i]), num(direct[i]), num(d), num(sm.bound[i])]);
    }
    r.write_csv("smooth-compare.csv", &csv)?;
    let claim = Claim::new(
        "tauberian-smoothing",
        "max |table − direct| / reported bound",
        worst,
        Threshold::AtMost(1.0),
    );
    r.verdict("smooth-compare", vec![claim], "smooth-compare-verdict.json")
}

fn rotation_cmd(r: &mut Run, t: &RotationTask) -> CliResult<()> {
    let p = r.profile()?;
    let grid = parse_grid("task.grid", &t.grid)?;
    let rows = grid
        .par_iter()
        .map(|&s| -> weylscope::Result<[f64; 5]> {
            let o = rotation_number(s, &p)?;
            let d = match d_rotation_number(s, &p, DerivativeMethod::Formula) {
                Err(weylscope::Error::DegenerateInput(_)) => d_rotation_number(s, &p, DerivativeMethod::FiniteDifference)?,
                d => d?,
            };
            Ok([s, o.c, o.theta0, d, o.return_time])
        })
        .collect::<weylscope::Result<Vec<_>>>()
        .stage("rotation numbers")?;
    let mut csv = Csv::new(&["s_plus", "c", "Theta0", "dTheta0", "return_time", "status", "p", "q"]);
    for x in &rows {
        let mut row: Vec<String> = x.iter().map(|v| num(*v)).collect();
        row.extend([String::new(), String::new(), String::new()]);
        csv.push(row);
    }
    r.series(&csv, &rows)
}

fn classify_cmd(r: &mut Run, t: &ClassifyTask) -> CliResult<()> {
    let p = r.profile()?;
    let grid = parse_grid("task.grid", &t.grid)?;
    if t.qmax == 0 {
        return Err(CliError::config("task.qmax", "must be at least 1"));
    }
    let opts = ClassifyOptions {
        q_max: t.qmax,
        rational_tol: t.rational_tol,
        deriv_floor: t.deriv_floor,
        ..ClassifyOptions::default()
    };
    let rows = classify_tori(&p, &grid, &opts).stage("classification")?;
    r.series(&classification_csv(&rows), &rows)
}

fn nonperiodic_cmd(r: &mut Run, t: &NonperiodicTask, seed: u64) -> CliResult<()> {
    let ps = r.phase_space()?;
    let set = parse_cosphere_set("task.set", &t.set)?;
    let res = parse_resolution("task.resolution", &t.resolution)?;
    let radii = parse_radii("task.radii", &t.radii)?;
    let mut csv = Csv::new(&["R", "T", "estimate", "half_width", "brute_force", "product_with_T"]);
    let mut rows = Vec::new();
    for &rad in &radii {
        let big_t = res.eval(rad);
        let e = near_periodic_measure(&ps, &set, t.t0, big_t, rad, t.samples, seed).stage("near-periodic measure")?;
        csv.push(vec![num(rad), num(big_t), num(e.value), num(e.half_width), opt(e.brute_force), num(e.value * big_t)]);
        rows.push((rad, big_t, e));
    }
    r.series(&csv, &rows)
}

fn nonloop_cmd(r: &mut Run, t: &NonloopTask, seed: u64) -> CliResult<()> {
    let ps = r.phase_space()?;
    let h1 = parse_submanifold("task.h1", &t.h1)?;
    let h2 = parse_submanifold("task.h2", &t.h2)?;
    let res = parse_resolution("task.resolution", &t.resolution)?;
    let radii = parse_radii("task.radii", &t.radii)?;
    let mut csv = Csv::new(&[
        "R",
        "T",
        "estimate",
        "half_width",
        "brute_force",
        "backward",
        "backward_half_width",
        "product_with_T",
    ]);
    let mut rows = Vec::new();
    for &rad in &radii {
        let big_t = res.eval(rad);
        let e = looping_pair_measure(&ps, &h1, &h2, t.t0, big_t, rad, t.samples, seed).stage("looping measure")?;
        csv.push(vec![
            num(rad),
            num(big_t),
            num(e.forward.value),
            num(e.forward.half_width),
            opt(e.forward.brute_force),
            num(e.backward.value),
            num(e.backward.half_width),
            num(e.product_t2),
        ]);
        rows.push((rad, big_t, e));
    }
    r.series(&csv, &rows)
}

fn circle(ps: &PhaseSpace, sub: Submanifold, sign: f64, field: &str) -> CliResult<FiberCircle> {
    match sub {
        Submanifold::Point { x } => Ok(FiberCircle::point(x)),
        Submanifold::Latitude { s0 } => {
            FiberCircle::latitude(ps, s0, sign).map_err(|e| CliError::config(field, e.to_string()))
        }
    }
}

fn recurrence_cmd(r: &mut Run, t: &RecurrenceTask) -> CliResult<()> {
    let ps = r.phase_space()?;
    let sub = parse_submanifold("task.h", &t.h)?;
    let c = circle(&ps, sub, t.sign, "task.h")?;
    let params = RecurrenceParams {
        r0: t.r0,
        t_small: parse_resolution("task.t_small", &t.t_small)?,
        t_big: parse_resolution("task.t_big", &t.t_big)?,
        r: t.r,
        big_r: t.big_r,
        eps: t.eps,
        levels: t.levels,
        max_grid: t.max_grid,
    };
    let rep = recurrence_measure(&ps, &c, t.center, &params).stage("recurrence check")?;
    r.write_json("recurrence-check.json", &rep)?;
    let mut claim = Claim::new(
        "non-recurrence",
        "failing (A, ε) pairs for the best sign",
        rep.failing.len() as f64,
        Threshold::AtMost(0.0),
    );
    claim.pass = rep.pass;
    if rep.vacuous {
        claim = claim.note("vacuous: empty time window");
    }
    r.verdict("recurrence-check", vec![claim], "recurrence-verdict.json")
}

fn cover_cmd(r: &mut Run, t: &CoverAuditTask, seed: u64) -> CliResult<()> {
    let ps = r.phase_space()?;
    let sub = parse_submanifold("task.target", &t.target)?;
    let target = circle(&ps, sub, 1.0, "task.target")?;
    let cover = build_good_cover(&ps, &target, t.tau, t.r, t.budget).stage("good cover")?;
    let pairs = cover.audit_disjointness_with(&ps).stage("disjointness audit")?;
    let reach = cover.audit_coverage(&ps, t.probes, seed);
    let mut csv = Csv::new(&["tube", "phi", "family"]);
    let mut family = vec![0usize; cover.len()];
    for (f, members) in cover.families.iter().enumerate() {
        for &j in members {
            family[j] = f;
        }
    }
    for (j, tube) in cover.tubes.iter().enumerate() {
        csv.push(vec![j.to_string(), num(tube.phi), family[j].to_string()]);
    }
    r.write_csv("cover-audit.csv", &csv)?;
    let claims = vec![
        Claim::new("cover-family-budget", "number of 3r-disjoint families", cover.d as f64, Threshold::AtMost(t.budget as f64)),
        Claim::new(
            "cover-coverage",
            "max distance from a probe near the circle to its nearest center, over r",
            reach / t.r,
            Threshold::LessThan(1.0),
        )
        .note(format!("{} tubes, {pairs} same-family pairs certified", cover.len())),
    ];
    r.verdict("cover-audit", claims, "cover-audit-verdict.json")
}

fn scenario_cmd(r: &mut Run, t: &ScenarioTask, seed: u64) -> CliResult<()> {
    if t.list {
        for s in scenarios::list_scenarios() {
            r.report
                .lines
                .push(format!("{:<28} {:<70} {}", s.name, s.tags.join(","), s.summary));
        }
        return Ok(());
    }
    let name = t
        .name
        .as_deref()
        .ok_or_else(|| CliError::config("task.name", "scenario name required (or --list)"))?;
    let mut ctx = ScenarioContext::new(Some(r.cache()), seed);
    ctx.solver = r.cfg.solver_options();
    ctx.tail_tol = r.cfg.tail_tol();
    let run = scenarios::run_scenario(name, t.params.as_ref(), &ctx)?;
    r.out = r.out.join(name);
    r.header.command = format!("scenario {name}");
    for (file, csv) in &run.series {
        r.write_csv(file, csv)?;
    }
    r.write_json("params.json", &run.params)?;
    r.report.lines.push(format!("{name}: {:.2} s", run.elapsed_s));
    r.verdict(name, run.claims, "verdict.json")
}
