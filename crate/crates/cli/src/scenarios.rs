//! Verification scenarios. Each has a parameter struct whose `Default` is the
//! runnable default config, and produces claims plus plot-ready series.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use weylscope::covers::{near_periodic_measure, CosphereSet, PhaseSpace};
use weylscope::geoflow::{
    classify_tori, conservation, d_rotation_number, eps_derivative, integrate_geodesic, return_map, rotation_number,
    ClassifyOptions, DerivativeMethod, PhasePoint, TorusStatus,
};
use weylscope::manifolds::{
    make_pendulum_profile, make_perturbed_sphere, make_round_sphere, PerturbationSpec, ProfileCurve,
};
use weylscope::numerics::lowdisc::ScrambledHalton;
use weylscope::numerics::ode::OdeOptions;
use weylscope::numerics::quad::composite_gauss;
use weylscope::numerics::{linspace, logspace};
use weylscope::spectra::{
    cached_surface_spectrum, product_spectrum, radial_eigenpairs, sphere_spectrum, torus_spectrum, SolverOptions,
    Spectrum, SpectrumCache, SurfaceSpectrum,
};
use weylscope::weyl::{
    build_smoothing_kernel, counting, direct_convolution, fit_remainder, jump_grid, kuznecov, kuznecov_values,
    localized_counting, localized_jumps, projector_kernel, smoothed_series_with, Jumps, RemainderModel, Site,
    SpectralModel,
};

use crate::error::{CliError, CliResult, StageExt};
use crate::output::{num, Claim, Csv, Threshold};

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioInfo {
    pub name: &'static str,
    /// Tags of the statements the claims test.
    pub tags: &'static [&'static str],
    pub summary: &'static str,
    pub runtime_limit_s: f64,
}

pub const CATALOG: &[ScenarioInfo] = &[
    ScenarioInfo {
        name: "sphere-sharpness",
        tags: &["sharp-standard-remainder", "sharp-standard-trend"],
        summary: "round S² remainder is of exact order λ",
        runtime_limit_s: 5.0,
    },
    ScenarioInfo {
        name: "product-log-gain",
        tags: &["log-improved-remainder", "log-improved-trend"],
        summary: "S²×S¹ remainder constant against λ/log λ does not drift",
        runtime_limit_s: 60.0,
    },
    ScenarioInfo {
        name: "torus-remainder",
        tags: &["gauss-circle-exponent", "torus-log-gain-trend"],
        summary: "flat torus remainder exponent and log-gain trend",
        runtime_limit_s: 30.0,
    },
    ScenarioInfo {
        name: "clairaut-cross-validation",
        tags: &["clairaut-quadrature-vs-flow", "clairaut-conservation"],
        summary: "rotation increments by quadrature and by the flow agree",
        runtime_limit_s: 20.0,
    },
    ScenarioInfo {
        name: "perturbation-formula",
        tags: &["perturbation-derivative-formula", "perturbation-derivative-positive"],
        summary: "ε-derivative of the twist matches finite differences and is positive",
        runtime_limit_s: 30.0,
    },
    ScenarioInfo {
        name: "figure1-classification",
        tags: &["periodic-orange-region", "aperiodic-green-region"],
        summary: "tori below a are periodic, tori above b aperiodic",
        runtime_limit_s: 60.0,
    },
    ScenarioInfo {
        name: "pendulum-rotation",
        tags: &["pendulum-twist-positive", "pendulum-twist-stable", "pendulum-small-amplitude"],
        summary: "spherical pendulum twist condition at E = 4",
        runtime_limit_s: 60.0,
    },
    ScenarioInfo {
        name: "sturm-liouville-oracle",
        tags: &["sturm-eigenvalues", "prufer-count"],
        summary: "radial solver reproduces l(l+1) with exact counts",
        runtime_limit_s: 30.0,
    },
    ScenarioInfo {
        name: "measure-estimator-oracle",
        tags: &["measure-oracle-agreement"],
        summary: "Monte-Carlo near-periodic measure agrees with the lattice value",
        runtime_limit_s: 120.0,
    },
    ScenarioInfo {
        name: "nonperiodicity-trend",
        tags: &["nonperiodic-set-decay"],
        summary: "μ(B(𝒫ᴿ, R))·R^{-1/3} bounded on the aperiodic band",
        runtime_limit_s: 600.0,
    },
    ScenarioInfo {
        name: "localized-weyl-contrast",
        tags: &["localized-log-contrast", "localized-standard-bounded"],
        summary: "localized remainders on an aperiodic band and a periodic strip",
        runtime_limit_s: 900.0,
    },
    ScenarioInfo {
        name: "kuznecov-structure",
        tags: &["latitude-periods-vanish", "kuznecov-diagonal", "smoothed-kuznecov-trend"],
        summary: "period integrals, diagonal consistency and the smoothed comparison",
        runtime_limit_s: 120.0,
    },
    ScenarioInfo {
        name: "tauberian-consistency",
        tags: &["tauberian-smoothing"],
        summary: "tabulated smoothing equals direct convolution within its bound",
        runtime_limit_s: 30.0,
    },
];

pub fn list_scenarios() -> &'static [ScenarioInfo] {
    CATALOG
}

pub fn info(name: &str) -> Option<&'static ScenarioInfo> {
    CATALOG.iter().find(|s| s.name == name)
}

/// Shared resources for scenario runs.
#[derive(Debug, Clone)]
pub struct ScenarioContext {
    pub cache: Option<SpectrumCache>,
    pub seed: u64,
    pub solver: SolverOptions,
    pub tail_tol: f64,
}

impl ScenarioContext {
    pub fn new(cache: Option<SpectrumCache>, seed: u64) -> Self {
        Self {
            cache,
            seed,
            solver: SolverOptions::default(),
            tail_tol: weylscope::weyl::TAIL_TOL,
        }
    }

    fn surface(&self, profile: &ProfileCurve, lambda: f64, eigenfunctions: bool) -> CliResult<SurfaceSpectrum> {
        let mut so = self.solver;
        if !eigenfunctions {
            so.grid_points = 0;
        }
        cached_surface_spectrum(self.cache.as_ref(), profile, lambda, None, so).stage("surface spectrum")
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub name: String,
    /// Effective parameters after overrides.
    pub params: serde_json::Value,
    pub claims: Vec<Claim>,
    pub series: Vec<(String, Csv)>,
    pub elapsed_s: f64,
}

fn resolve<P: Default + Serialize + DeserializeOwned>(over: Option<&serde_json::Value>) -> CliResult<(P, serde_json::Value)> {
    let mut v = serde_json::to_value(P::default()).expect("params serialize");
    match over {
        None | Some(serde_json::Value::Null) => {}
        Some(serde_json::Value::Object(m)) => {
            let obj = v.as_object_mut().expect("params are objects");
            for (k, x) in m {
                if !obj.contains_key(k) {
                    return Err(CliError::config(format!("task.params.{k}"), "unknown parameter"));
                }
                obj.insert(k.clone(), x.clone());
            }
        }
        Some(_) => return Err(CliError::config("task.params", "expected an object")),
    }
    let p: P = serde_path_to_error::deserialize(v.clone())
        .map_err(|e| CliError::config(format!("task.params.{}", e.path()), e.inner().to_string()))?;
    Ok((p, v))
}

/// Default parameters of a scenario as JSON.
pub fn default_params(name: &str) -> Option<serde_json::Value> {
    macro_rules! d {
        ($t:ty) => {
            serde_json::to_value(<$t>::default()).ok()
        };
    }
    match name {
        "sphere-sharpness" => d!(SphereSharpness),
        "product-log-gain" => d!(ProductLogGain),
        "torus-remainder" => d!(TorusRemainder),
        "clairaut-cross-validation" => d!(ClairautCrossValidation),
        "perturbation-formula" => d!(PerturbationFormula),
        "figure1-classification" => d!(Figure1Classification),
        "pendulum-rotation" => d!(PendulumRotation),
        "sturm-liouville-oracle" => d!(SturmOracle),
        "measure-estimator-oracle" => d!(MeasureOracle),
        "nonperiodicity-trend" => d!(NonperiodicityTrend),
        "localized-weyl-contrast" => d!(LocalizedContrast),
        "kuznecov-structure" => d!(KuznecovStructure),
        "tauberian-consistency" => d!(Tauberian),
        _ => None,
    }
}

pub fn run_scenario(name: &str, over: Option<&serde_json::Value>, ctx: &ScenarioContext) -> CliResult<ScenarioRun> {
    let start = Instant::now();
    macro_rules! go {
        ($t:ty, $f:ident) => {{
            let (p, v) = resolve::<$t>(over)?;
            let (claims, series) = $f(&p, ctx)?;
            (v, claims, series)
        }};
    }
    let (params, claims, series) = match name {
        "sphere-sharpness" => go!(SphereSharpness, sphere_sharpness),
        "product-log-gain" => go!(ProductLogGain, product_log_gain),
        "torus-remainder" => go!(TorusRemainder, torus_remainder),
        "clairaut-cross-validation" => go!(ClairautCrossValidation, clairaut_cross_validation),
        "perturbation-formula" => go!(PerturbationFormula, perturbation_formula),
        "figure1-classification" => go!(Figure1Classification, figure1_classification),
        "pendulum-rotation" => go!(PendulumRotation, pendulum_rotation),
        "sturm-liouville-oracle" => go!(SturmOracle, sturm_oracle),
        "measure-estimator-oracle" => go!(MeasureOracle, measure_oracle),
        "nonperiodicity-trend" => go!(NonperiodicityTrend, nonperiodicity_trend),
        "localized-weyl-contrast" => go!(LocalizedContrast, localized_contrast),
        "kuznecov-structure" => go!(KuznecovStructure, kuznecov_structure),
        "tauberian-consistency" => go!(Tauberian, tauberian),
        _ => {
            return Err(CliError::config(
                "task.name",
                format!("unknown scenario `{name}`; see `scenario --list`"),
            ))
        }
    };
    Ok(ScenarioRun {
        name: name.to_string(),
        params,
        claims,
        series,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

type Outcome = CliResult<(Vec<Claim>, Vec<(String, Csv)>)>;

fn count_csv(lambdas: &[f64], n: &[f64], main: &[f64], e: &[f64]) -> Csv {
    let mut t = Csv::new(&["lambda", "N", "main", "E"]);
    for i in 0..lambdas.len() {
        t.push(vec![num(lambdas[i]), num(n[i]), num(main[i]), num(e[i])]);
    }
    t
}

fn levels(s: &Spectrum) -> Vec<f64> {
    s.entries.iter().map(|e| e.lambda).collect()
}

fn perturbed(epsilon: f64, a: f64, b: f64) -> CliResult<ProfileCurve> {
    make_perturbed_sphere(PerturbationSpec::new(epsilon, a, b)).stage("perturbed profile")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SphereSharpness {
    pub lambda_max: f64,
    pub window: (f64, f64),
    pub constant_bracket: (f64, f64),
    pub trend_bracket: (f64, f64),
}

impl Default for SphereSharpness {
    fn default() -> Self {
        Self {
            lambda_max: 200.0,
            window: (20.0, 200.0),
            constant_bracket: (0.5, 4.0),
            trend_bracket: (0.8, 1.25),
        }
    }
}

fn sphere_sharpness(p: &SphereSharpness, _ctx: &ScenarioContext) -> Outcome {
    let s = sphere_spectrum(2, p.lambda_max);
    let grid = jump_grid(&levels(&s), p.window.0, p.window.1);
    let c = counting(&s, &grid).stage("counting")?;
    let fit = fit_remainder(&grid, &c.e, 2, RemainderModel::Standard, p.window).stage("remainder fit")?;
    let claims = vec![
        Claim::new(
            "sharp-standard-remainder",
            "sup |E(λ)|/λ over the window",
            fit.constant,
            Threshold::Within(p.constant_bracket.0, p.constant_bracket.1),
        ),
        Claim::new(
            "sharp-standard-trend",
            "ratio of sup |E|/λ on the upper and lower dyadic halves",
            fit.trend,
            Threshold::Within(p.trend_bracket.0, p.trend_bracket.1),
        ),
    ];
    Ok((claims, vec![("count.csv".into(), count_csv(&grid, &c.n, &c.main, &c.e))]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProductLogGain {
    pub lambda_max: f64,
    pub circle_length: f64,
    pub lo: f64,
    pub mid: f64,
    pub hi: f64,
    pub max_change: f64,
}

impl Default for ProductLogGain {
    fn default() -> Self {
        Self {
            lambda_max: 150.0,
            circle_length: 2.0 * PI,
            lo: 50.0,
            mid: 75.0,
            hi: 150.0,
            max_change: 0.1,
        }
    }
}

fn product_log_gain(p: &ProductLogGain, _ctx: &ScenarioContext) -> Outcome {
    let l = p.lambda_max;
    let s = product_spectrum(&sphere_spectrum(2, l), &torus_spectrum(&[p.circle_length], l), l).stage("product spectrum")?;
    let grid = jump_grid(&levels(&s), p.lo, p.hi);
    let c = counting(&s, &grid).stage("counting")?;
    let short = fit_remainder(&grid, &c.e, 3, RemainderModel::LogGain, (p.lo, p.mid)).stage("remainder fit")?;
    let long = fit_remainder(&grid, &c.e, 3, RemainderModel::LogGain, (p.lo, p.hi)).stage("remainder fit")?;
    let change = (long.constant / short.constant - 1.0).abs();
    let claims = vec![
        Claim::new(
            "log-improved-remainder",
            "relative change of sup |E| log λ/λ² when the window end doubles",
            change,
            Threshold::LessThan(p.max_change),
        )
        .note(format!("C[{}, {}] = {:.6}, C[{}, {}] = {:.6}", p.lo, p.mid, short.constant, p.lo, p.hi, long.constant)),
        Claim::new(
            "log-improved-trend",
            "upper over lower dyadic constant against λ²/log λ",
            long.trend,
            Threshold::AtMost(1.0 + p.max_change),
        ),
    ];
    Ok((claims, vec![("count.csv".into(), count_csv(&grid, &c.n, &c.main, &c.e))]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TorusRemainder {
    pub periods: Vec<f64>,
    pub lambda_max: f64,
    pub window: (f64, f64),
    pub gamma_max: f64,
}

impl Default for TorusRemainder {
    fn default() -> Self {
        Self {
            periods: vec![2.0 * PI, 2.0 * PI],
            lambda_max: 500.0,
            window: (20.0, 500.0),
            gamma_max: 0.75,
        }
    }
}

fn torus_remainder(p: &TorusRemainder, _ctx: &ScenarioContext) -> Outcome {
    if p.periods.len() != 2 {
        return Err(CliError::config("task.params.periods", "need two periods"));
    }
    let s = torus_spectrum(&p.periods, p.lambda_max);
    let grid = jump_grid(&levels(&s), p.window.0, p.window.1);
    let c = counting(&s, &grid).stage("counting")?;
    let pow = fit_remainder(&grid, &c.e, 2, RemainderModel::Power, p.window).stage("remainder fit")?;
    let lg = fit_remainder(&grid, &c.e, 2, RemainderModel::LogGain, p.window).stage("remainder fit")?;
    let gamma = pow.gamma.unwrap_or(f64::NAN);
    let claims = vec![
        Claim::new(
            "gauss-circle-exponent",
            "least-squares exponent of the windowed envelope of |E|",
            gamma,
            Threshold::AtMost(p.gamma_max),
        )
        .note(format!("rms residual {:.3}", pow.residual.unwrap_or(f64::NAN))),
        Claim::new(
            "torus-log-gain-trend",
            "upper over lower dyadic sup of |E| log λ/λ",
            lg.trend,
            Threshold::LessThan(1.0),
        ),
    ];
    Ok((claims, vec![("count.csv".into(), count_csv(&grid, &c.n, &c.main, &c.e))]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClairautCrossValidation {
    pub epsilon: f64,
    pub a: f64,
    pub b: f64,
    pub s_lo: f64,
    pub s_hi: f64,
    pub count: usize,
    pub return_map_rtol: f64,
    pub flow_time: f64,
    pub samples: usize,
    pub theta_tol: f64,
    pub drift_tol: f64,
}

impl Default for ClairautCrossValidation {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            a: 0.5,
            b: 1.0,
            s_lo: 0.1,
            s_hi: 1.45,
            count: 20,
            return_map_rtol: 1e-12,
            flow_time: 50.0,
            samples: 2000,
            theta_tol: 1e-6,
            drift_tol: 1e-8,
        }
    }
}

fn clairaut_cross_validation(p: &ClairautCrossValidation, _ctx: &ScenarioContext) -> Outcome {
    let prof = perturbed(p.epsilon, p.a, p.b)?;
    let grid = linspace(p.s_lo, p.s_hi, p.count);
    let ode = OdeOptions {
        rtol: p.return_map_rtol,
        atol: p.return_map_rtol,
        ..OdeOptions::default()
    };
    let rows: Vec<[f64; 4]> = grid
        .par_iter()
        .map(|&s| -> weylscope::Result<[f64; 4]> {
            let o = rotation_number(s, &prof)?;
            let (theta, _) = return_map(s, &prof, ode)?;
            let psi = (o.c / prof.alpha(0.0)).min(1.0).asin();
            let p0 = PhasePoint::from_angle(&prof, 0.0, 0.0, psi);
            let traj = integrate_geodesic(p0, p.flow_time, &prof, OdeOptions::default())?;
            let (_, drift) = conservation(&traj, &prof, p.samples);
            Ok([o.theta0, theta, (o.theta0 - theta).abs(), drift / p.flow_time])
        })
        .collect::<weylscope::Result<_>>()
        .stage("rotation numbers")?;
    let worst_theta = rows.iter().map(|r| r[2]).fold(0.0, f64::max);
    let worst_drift = rows.iter().map(|r| r[3]).fold(0.0, f64::max);
    let mut t = Csv::new(&["s_plus", "Theta0_quadrature", "Theta0_flow", "difference", "drift_per_time"]);
    for (s, r) in grid.iter().zip(&rows) {
        t.push(vec![num(*s), num(r[0]), num(r[1]), num(r[2]), num(r[3])]);
    }
    let claims = vec![
        Claim::new(
            "clairaut-quadrature-vs-flow",
            "max |Θ₀(quadrature) − Θ₀(return map)|",
            worst_theta,
            Threshold::LessThan(p.theta_tol),
        ),
        Claim::new(
            "clairaut-conservation",
            "max Clairaut-constant drift per unit time",
            worst_drift,
            Threshold::LessThan(p.drift_tol),
        ),
    ];
    Ok((claims, vec![("rotation.csv".into(), t)]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationFormula {
    pub a: f64,
    pub b: f64,
    pub count: usize,
    /// Grid ends at `π/2 − top_gap`.
    pub top_gap: f64,
    pub step: f64,
    pub rel_tol: f64,
}

impl Default for PerturbationFormula {
    fn default() -> Self {
        Self {
            a: 0.5,
            b: 1.0,
            count: 10,
            top_gap: 0.05,
            step: 1e-4,
            rel_tol: 1e-3,
        }
    }
}

fn perturbation_formula(p: &PerturbationFormula, _ctx: &ScenarioContext) -> Outcome {
    let grid = linspace(p.b, FRAC_PI_2 - p.top_gap, p.count);
    let plus = perturbed(p.step, p.a, p.b)?;
    let minus = perturbed(-p.step, p.a, p.b)?;
    let spec = PerturbationSpec::new(0.0, p.a, p.b);
    let rows: Vec<[f64; 3]> = grid
        .par_iter()
        .map(|&s| -> weylscope::Result<[f64; 3]> {
            let formula = eps_derivative(s, &spec)?;
            let dp = d_rotation_number(s, &plus, DerivativeMethod::Formula)?;
            let dm = d_rotation_number(s, &minus, DerivativeMethod::Formula)?;
            let fd = (dp - dm) / (2.0 * p.step);
            Ok([formula, fd, ((formula - fd) / fd).abs()])
        })
        .collect::<weylscope::Result<_>>()
        .stage("ε-derivatives")?;
    let worst = rows.iter().map(|r| r[2]).fold(0.0, f64::max);
    let least = rows.iter().map(|r| r[0]).fold(f64::INFINITY, f64::min);
    let mut t = Csv::new(&["s_plus", "formula", "finite_difference", "relative_difference"]);
    for (s, r) in grid.iter().zip(&rows) {
        t.push(vec![num(*s), num(r[0]), num(r[1]), num(r[2])]);
    }
    let claims = vec![
        Claim::new(
            "perturbation-derivative-formula",
            "max relative difference between the ε-derivative integral and central differences",
            worst,
            Threshold::LessThan(p.rel_tol),
        ),
        Claim::new(
            "perturbation-derivative-positive",
            "min of ∂_ε∂_{s₊}Θ₀ over s₊ ≥ b",
            least,
            Threshold::GreaterThan(0.0),
        ),
    ];
    Ok((claims, vec![("eps_derivative.csv".into(), t)]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Figure1Classification {
    pub epsilon: f64,
    pub a: f64,
    pub b: f64,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub count: usize,
    pub deriv_floor: f64,
}

impl Default for Figure1Classification {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            a: 0.5,
            b: 1.0,
            grid_lo: 0.05,
            grid_hi: 1.52,
            count: 50,
            deriv_floor: 1e-6,
        }
    }
}

pub fn classification_csv(rows: &[weylscope::geoflow::TorusClassification]) -> Csv {
    let mut t = Csv::new(&["s_plus", "c", "Theta0", "dTheta0", "return_time", "status", "p", "q"]);
    for r in rows {
        let (status, pq) = match r.status {
            TorusStatus::Periodic(p, q) => ("periodic", Some((p, q))),
            TorusStatus::Aperiodic => ("aperiodic", None),
            TorusStatus::Uncertain => ("uncertain", None),
        };
        t.push(vec![
            num(r.s_plus),
            num(r.c),
            num(r.theta0),
            num(r.d_theta0),
            num(r.return_time),
            status.into(),
            pq.map(|x| x.0.to_string()).unwrap_or_default(),
            pq.map(|x| x.1.to_string()).unwrap_or_default(),
        ]);
    }
    t
}

fn figure1_classification(p: &Figure1Classification, _ctx: &ScenarioContext) -> Outcome {
    let prof = perturbed(p.epsilon, p.a, p.b)?;
    let grid = linspace(p.grid_lo, p.grid_hi, p.count);
    let opts = ClassifyOptions {
        deriv_floor: p.deriv_floor,
        ..ClassifyOptions::default()
    };
    let rows = classify_tori(&prof, &grid, &opts).stage("classification")?;
    let below: Vec<_> = rows.iter().filter(|r| r.s_plus < p.a).collect();
    let above: Vec<_> = rows.iter().filter(|r| r.s_plus >= p.b).collect();
    let bad_below = below.iter().filter(|r| r.status != TorusStatus::Periodic(1, 1)).count();
    let bad_above = above.iter().filter(|r| r.status != TorusStatus::Aperiodic).count();
    let claims = vec![
        Claim::new(
            "periodic-orange-region",
            "grid tori with s₊ < a not classified Periodic(1,1)",
            bad_below as f64,
            Threshold::AtMost(0.0),
        )
        .note(format!("{} grid points below a", below.len())),
        Claim::new(
            "aperiodic-green-region",
            "grid tori with s₊ ≥ b not classified Aperiodic",
            bad_above as f64,
            Threshold::AtMost(0.0),
        )
        .note(format!("{} grid points at or above b", above.len())),
    ];
    Ok((claims, vec![("classify.csv".into(), classification_csv(&rows))]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PendulumRotation {
    pub energy: f64,
    pub lo: f64,
    /// Grid ends at `π/2 − top_gap`.
    pub top_gap: f64,
    pub points: usize,
    pub stability: f64,
    pub small: (f64, f64),
    pub small_points: usize,
}

impl Default for PendulumRotation {
    fn default() -> Self {
        Self {
            energy: 4.0,
            lo: 0.05,
            top_gap: 0.05,
            points: 100,
            stability: 0.1,
            small: (1e-4, 1e-2),
            small_points: 12,
        }
    }
}

fn min_twist(prof: &ProfileCurve, grid: &[f64]) -> CliResult<Vec<f64>> {
    grid.par_iter()
        .map(|&s| d_rotation_number(s, prof, DerivativeMethod::Formula))
        .collect::<weylscope::Result<_>>()
        .stage("pendulum twist")
}

fn pendulum_rotation(p: &PendulumRotation, _ctx: &ScenarioContext) -> Outcome {
    let prof = make_pendulum_profile(p.energy).stage("pendulum profile")?;
    let hi = FRAC_PI_2 - p.top_gap;
    let coarse = linspace(p.lo, hi, p.points);
    let fine = linspace(p.lo, hi, 2 * p.points);
    let dc = min_twist(&prof, &coarse)?;
    let df = min_twist(&prof, &fine)?;
    let mc = dc.iter().map(|d| d.abs()).fold(f64::INFINITY, f64::min);
    let mf = df.iter().map(|d| d.abs()).fold(f64::INFINITY, f64::min);
    let small = logspace(p.small.0, p.small.1, p.small_points);
    let ratios: Vec<f64> = small
        .par_iter()
        .map(|&s| rotation_number(s, &prof).map(|o| o.theta0.abs() / s.sqrt()))
        .collect::<weylscope::Result<_>>()
        .stage("pendulum rotation")?;
    let least = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut t = Csv::new(&["s_plus", "dTheta0"]);
    for (s, d) in fine.iter().zip(&df) {
        t.push(vec![num(*s), num(*d)]);
    }
    let claims = vec![
        Claim::new(
            "pendulum-twist-positive",
            "min |∂Θ₀/∂s₊| on the fine grid",
            mf,
            Threshold::GreaterThan(0.0),
        ),
        Claim::new(
            "pendulum-twist-stable",
            "relative change of min |∂Θ₀/∂s₊| under grid doubling",
            (mc / mf - 1.0).abs(),
            Threshold::LessThan(p.stability),
        )
        .note(format!("{} points: {mc:.6e}, {} points: {mf:.6e}", p.points, 2 * p.points)),
        Claim::new(
            "pendulum-small-amplitude",
            "min |Θ₀(s₊)|/√s₊ near the equator",
            least,
            Threshold::GreaterThan(0.0),
        ),
    ];
    Ok((claims, vec![("twist.csv".into(), t)]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SturmOracle {
    pub m_max: i64,
    pub levels: usize,
    pub lambda_max: f64,
    pub rel_tol: f64,
}

impl Default for SturmOracle {
    fn default() -> Self {
        Self {
            m_max: 5,
            levels: 10,
            lambda_max: 14.6,
            rel_tol: 1e-6,
        }
    }
}

fn sturm_oracle(p: &SturmOracle, ctx: &ScenarioContext) -> Outcome {
    let prof = make_round_sphere();
    let so = SolverOptions {
        grid_points: 0,
        ..ctx.solver
    };
    let mut worst: f64 = 0.0;
    let mut miscounts = 0usize;
    let mut t = Csv::new(&["m", "k", "lambda_squared", "exact", "relative_error"]);
    for m in 0..=p.m_max {
        let (count, efs) = radial_eigenpairs(&prof, m, p.lambda_max, so).stage("radial solver")?;
        let exact = (m..).take_while(|l| (l * (l + 1)) as f64 <= p.lambda_max * p.lambda_max).count();
        if count.winding != count.computed || count.computed != exact || efs.len() < p.levels {
            miscounts += 1;
        }
        for (k, e) in efs.iter().take(p.levels).enumerate() {
            let l = m + k as i64;
            let want = (l * (l + 1)) as f64;
            let err = ((e.lambda * e.lambda - want) / want).abs();
            worst = worst.max(err);
            t.push(vec![m.to_string(), k.to_string(), num(e.lambda * e.lambda), num(want), num(err)]);
        }
    }
    let claims = vec![
        Claim::new(
            "sturm-eigenvalues",
            "max relative error of the first eigenvalues against l(l+1)",
            worst,
            Threshold::LessThan(p.rel_tol),
        ),
        Claim::new(
            "prufer-count",
            "modes whose Prüfer winding, computed and exact counts disagree",
            miscounts as f64,
            Threshold::AtMost(0.0),
        ),
    ];
    Ok((claims, vec![("eigenvalues.csv".into(), t)]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureOracle {
    pub periods: [f64; 2],
    pub t0: f64,
    pub t1: f64,
    pub radius: f64,
    pub samples: usize,
    pub repetitions: usize,
    pub widths: f64,
    pub min_agree: usize,
}

impl Default for MeasureOracle {
    fn default() -> Self {
        Self {
            periods: [2.0 * PI, 2.0 * PI],
            t0: 1.0,
            t1: 10.0,
            radius: 0.01,
            samples: 100_000,
            repetitions: 100,
            widths: 3.0,
            min_agree: 99,
        }
    }
}

fn measure_oracle(p: &MeasureOracle, ctx: &ScenarioContext) -> Outcome {
    let ps = PhaseSpace::torus(p.periods);
    let mut t = Csv::new(&["seed", "estimate", "half_width", "brute_force", "agrees"]);
    let mut agree = 0;
    for i in 0..p.repetitions as u64 {
        let seed = ctx.seed.wrapping_add(i);
        let e = near_periodic_measure(&ps, &CosphereSet::Full, p.t0, p.t1, p.radius, p.samples, seed)
            .stage("near-periodic measure")?;
        let ok = e.agrees(p.widths).unwrap_or(false);
        agree += ok as usize;
        t.push(vec![
            seed.to_string(),
            num(e.value),
            num(e.half_width),
            e.brute_force.map(num).unwrap_or_default(),
            ok.to_string(),
        ]);
    }
    let claims = vec![Claim::new(
        "measure-oracle-agreement",
        "repetitions within the Hoeffding multiple of the lattice value",
        agree as f64,
        Threshold::AtLeast(p.min_agree as f64),
    )
    .note(format!("{} repetitions", p.repetitions))];
    Ok((claims, vec![("repetitions.csv".into(), t)]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonperiodicityTrend {
    pub epsilon: f64,
    pub a: f64,
    pub b: f64,
    pub band: (f64, f64),
    pub t0: f64,
    /// `𝐓(R) = R^{-exponent}`.
    pub exponent: f64,
    pub radii: Vec<f64>,
    pub samples: usize,
    pub max_variation: f64,
}

impl Default for NonperiodicityTrend {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            a: 0.5,
            b: 1.0,
            band: (1.0, FRAC_PI_2),
            t0: 1.0,
            exponent: 1.0 / 3.0,
            radii: vec![0.05, 0.02, 0.01, 0.005],
            samples: 100_000,
            max_variation: 2.0,
        }
    }
}

fn nonperiodicity_trend(p: &NonperiodicityTrend, ctx: &ScenarioContext) -> Outcome {
    let prof = perturbed(p.epsilon, p.a, p.b)?;
    let ps = PhaseSpace::surface(prof);
    let set = CosphereSet::Band {
        s0: p.band.0,
        s1: p.band.1,
    };
    let mut t = Csv::new(&["R", "T", "estimate", "half_width", "brute_force", "product_with_T"]);
    let mut prods = Vec::new();
    let mut widest: f64 = 0.0;
    for &r in &p.radii {
        let big_t = r.powf(-p.exponent);
        let e = near_periodic_measure(&ps, &set, p.t0, big_t, r, p.samples, ctx.seed).stage("near-periodic measure")?;
        prods.push(e.value * big_t);
        widest = widest.max(e.half_width * big_t);
        t.push(vec![num(r), num(big_t), num(e.value), num(e.half_width), String::new(), num(e.value * big_t)]);
    }
    let hi = prods.iter().cloned().fold(0.0, f64::max);
    let lo = prods.iter().cloned().fold(f64::INFINITY, f64::min);
    let (variation, note) = if hi == 0.0 {
        (
            1.0,
            format!(
                "vacuous: every estimate is 0 (T(R) ≤ {:.3} is shorter than the return times); largest Hoeffding bound on the product {widest:.3e}",
                p.radii.iter().cloned().fold(f64::INFINITY, f64::min).powf(-p.exponent)
            ),
        )
    } else if lo == 0.0 {
        (f64::INFINITY, "some estimates vanish and others do not".to_string())
    } else {
        (hi / lo, String::new())
    };
    let claims = vec![Claim::new(
        "nonperiodic-set-decay",
        "max/min of μ(B(𝒫ᴿ, R))·𝐓(R) over the radii",
        variation,
        Threshold::LessThan(p.max_variation),
    )
    .note(note)];
    Ok((claims, vec![("nonperiodic.csv".into(), t)]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizedContrast {
    pub epsilon: f64,
    pub a: f64,
    pub b: f64,
    pub lambda_max: f64,
    pub window: (f64, f64),
    pub green: (f64, f64),
    pub orange: (f64, f64),
    pub min_ratio: f64,
    pub standard_trend_max: f64,
}

impl Default for LocalizedContrast {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            a: 0.5,
            b: 1.0,
            lambda_max: 60.0,
            window: (20.0, 60.0),
            green: (1.0, FRAC_PI_2),
            orange: (-0.5, 0.5),
            min_ratio: 2.0,
            standard_trend_max: 1.25,
        }
    }
}

struct BandFit {
    volume: f64,
    log_gain: f64,
    standard: f64,
    standard_trend: f64,
    csv: Csv,
}

fn band_fit(prof: &ProfileCurve, spec: &SurfaceSpectrum, band: (f64, f64), window: (f64, f64)) -> CliResult<BandFit> {
    let j = localized_jumps(prof, spec, band).stage("localized jumps")?;
    let grid = jump_grid(&j.lambdas, window.0, window.1);
    let c = localized_counting(prof, spec, band, &grid).stage("localized counting")?;
    let lg = fit_remainder(&grid, &c.e, 2, RemainderModel::LogGain, window).stage("remainder fit")?;
    let st = fit_remainder(&grid, &c.e, 2, RemainderModel::Standard, window).stage("remainder fit")?;
    Ok(BandFit {
        volume: 2.0 * PI * prof.integral(band.0, band.1),
        log_gain: lg.constant,
        standard: st.constant,
        standard_trend: st.trend,
        csv: count_csv(&grid, &c.n, &c.main, &c.e),
    })
}

fn localized_contrast(p: &LocalizedContrast, ctx: &ScenarioContext) -> Outcome {
    let prof = perturbed(p.epsilon, p.a, p.b)?;
    let spec = ctx.surface(&prof, p.lambda_max, true)?;
    let g = band_fit(&prof, &spec, p.green, p.window)?;
    let o = band_fit(&prof, &spec, p.orange, p.window)?;
    let ratio = (o.log_gain / o.volume) / (g.log_gain / g.volume);
    let claims = vec![
        Claim::new(
            "localized-log-contrast",
            "orange over green sup |E_W| log λ/λ, each per unit area of W",
            ratio,
            Threshold::AtLeast(p.min_ratio),
        )
        .note(format!(
            "raw constants green {:.4} (area {:.4}), orange {:.4} (area {:.4}), raw ratio {:.3}",
            g.log_gain,
            g.volume,
            o.log_gain,
            o.volume,
            o.log_gain / g.log_gain
        )),
        Claim::new(
            "localized-standard-bounded",
            "orange upper over lower dyadic sup |E_W|/λ",
            o.standard_trend,
            Threshold::AtMost(p.standard_trend_max),
        )
        .note(format!("sup |E_W|/λ = {:.4}", o.standard)),
    ];
    Ok((claims, vec![("green.csv".into(), g.csv), ("orange.csv".into(), o.csv)]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KuznecovStructure {
    pub epsilon: f64,
    pub a: f64,
    pub b: f64,
    pub surface_lambda: f64,
    pub latitude: f64,
    pub point_s: f64,
    pub diagonal_grid: (f64, f64, usize),
    pub periods: [f64; 2],
    pub torus_point: [f64; 2],
    pub torus_lambda: f64,
    pub t0: f64,
    pub grid: (f64, f64, usize),
    pub period_tol: f64,
    pub diagonal_tol: f64,
}

impl Default for KuznecovStructure {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            a: 0.5,
            b: 1.0,
            surface_lambda: 60.0,
            latitude: 0.3,
            point_s: 0.3,
            diagonal_grid: (5.0, 40.0, 36),
            periods: [2.0 * PI, 2.0 * PI],
            torus_point: [1.0, 2.0],
            torus_lambda: 920.0,
            t0: 1.0,
            grid: (50.0, 500.0, 901),
            period_tol: 1e-10,
            diagonal_tol: 1e-8,
        }
    }
}

fn kuznecov_structure(p: &KuznecovStructure, ctx: &ScenarioContext) -> Outcome {
    let prof = perturbed(p.epsilon, p.a, p.b)?;
    let spec = ctx.surface(&prof, p.surface_lambda, true)?;

    // Latitude periods ∫ u(s₀) cos(mθ) α(s₀) dθ, by quadrature in θ.
    let s0 = p.latitude;
    let w = prof.alpha(s0);
    let worst_period = spec
        .store
        .modes
        .par_iter()
        .enumerate()
        .filter(|(_, e)| e.m != 0)
        .map(|(i, e)| {
            let u = spec.store.eval(i, s0);
            let m = e.m as f64;
            let panels = 2 * e.m.unsigned_abs() as usize + 2;
            let c = composite_gauss(|t| w * u * (m * t).cos(), 0.0, 2.0 * PI, 20, panels);
            let s = composite_gauss(|t| w * u * (m * t).sin(), 0.0, 2.0 * PI, 20, panels);
            c.abs().max(s.abs())
        })
        .reduce(|| 0.0, f64::max);

    let (lo, hi, n) = p.diagonal_grid;
    let dgrid = linspace(lo, hi, n);
    let x = vec![p.point_s, 0.0];
    let site = Site::Point(x.clone());
    let sphere = sphere_spectrum(2, p.surface_lambda);
    let models = [
        SpectralModel::Surface {
            profile: &prof,
            spectrum: &spec,
        },
        SpectralModel::Sphere(&sphere),
    ];
    let mut worst_diag: f64 = 0.0;
    for model in &models {
        let k = kuznecov_values(model, &site, &site, &dgrid).stage("kuznecov sums")?;
        for (l, v) in dgrid.iter().zip(&k) {
            let pi = projector_kernel(model, &x, &x, *l).stage("projector kernel")?.pi;
            worst_diag = worst_diag.max((v - pi).abs());
        }
    }

    let torus = torus_spectrum(&p.periods, p.torus_lambda);
    let model = SpectralModel::Torus {
        periods: &p.periods,
        spectrum: &torus,
    };
    let kernel = build_smoothing_kernel(1.0).stage("smoothing kernel")?;
    let tp = Site::Point(p.torus_point.to_vec());
    let grid = linspace(p.grid.0, p.grid.1, p.grid.2);
    let ks = kuznecov(&model, &tp, &tp, &grid, p.t0, &kernel).stage("smoothed kuznecov")?;
    let fit = fit_remainder(&grid, &ks.e_t0, 2, RemainderModel::LogGain, (p.grid.0, p.grid.1)).stage("remainder fit")?;
    let max_bound = ks.bound.iter().cloned().fold(0.0, f64::max);
    let mut t = Csv::new(&["lambda", "Pi", "smoothed", "E_t0", "bound"]);
    for i in 0..grid.len() {
        t.push(vec![num(grid[i]), num(ks.values[i]), num(ks.smoothed[i]), num(ks.e_t0[i]), num(ks.bound[i])]);
    }
    let claims = vec![
        Claim::new(
            "latitude-periods-vanish",
            "max |∫ over the latitude circle| of m ≠ 0 eigenfunctions",
            worst_period,
            Threshold::AtMost(p.period_tol),
        ),
        Claim::new(
            "kuznecov-diagonal",
            "max |Π_{x,x}(λ) − Π_λ(x,x)| on the perturbed and round spheres",
            worst_diag,
            Threshold::AtMost(p.diagonal_tol),
        ),
        Claim::new(
            "smoothed-kuznecov-trend",
            "upper over lower dyadic sup |E^{t₀}_λ(x,x)| log λ/λ on the torus",
            fit.trend,
            Threshold::LessThan(1.0),
        )
        .note(format!("constant {:.4e}, max truncation bound {max_bound:.2e}", fit.constant)),
    ];
    Ok((claims, vec![("kuznecov.csv".into(), t)]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tauberian {
    pub sigma: f64,
    pub points: usize,
    pub sphere: (f64, f64, f64),
    pub torus: (f64, f64, f64),
    pub product: (f64, f64, f64),
}

impl Default for Tauberian {
    fn default() -> Self {
        // (spectrum extent, grid lo, grid hi)
        Self {
            sigma: 10.0,
            points: 20,
            sphere: (110.0, 20.0, 60.0),
            torus: (110.0, 20.0, 60.0),
            product: (90.0, 20.0, 45.0),
        }
    }
}

fn tauberian(p: &Tauberian, ctx: &ScenarioContext) -> Outcome {
    let kernel = build_smoothing_kernel(1.0).stage("smoothing kernel")?;
    let cases = [
        ("S2", sphere_spectrum(2, p.sphere.0), p.sphere),
        ("T2", torus_spectrum(&[2.0 * PI, 2.0 * PI], p.torus.0), p.torus),
        (
            "S2xS1",
            product_spectrum(&sphere_spectrum(2, p.product.0), &torus_spectrum(&[2.0 * PI], p.product.0), p.product.0)
                .stage("product spectrum")?,
            p.product,
        ),
    ];
    let hal = ScrambledHalton::new(1, ctx.seed);
    let mut claims = Vec::new();
    let mut t = Csv::new(&["spectrum", "lambda", "table", "direct", "difference", "bound"]);
    for (name, s, (_, lo, hi)) in &cases {
        let j = Jumps::from_spectrum(s);
        let pts: Vec<f64> = (0..p.points as u64).map(|i| lo + (hi - lo) * hal.coord(i, 0)).collect();
        let sm = smoothed_series_with(&j, &kernel, p.sigma, &pts, ctx.tail_tol).stage("smoothed series")?;
        let direct: Vec<f64> = pts.par_iter().map(|&l| direct_convolution(&j, &kernel, p.sigma, l)).collect();
        let mut worst: f64 = 0.0;
        for i in 0..pts.len() {
            let d = (sm.values[i] - direct[i]).abs();
            worst = worst.max(d / sm.bound[i]);
            t.push(vec![name.to_string(), num(pts[i]), num(sm.values[i]), num(direct[i]), num(d), num(sm.bound[i])]);
        }
        claims.push(
            Claim::new(
                "tauberian-smoothing",
                &format!("{name}: max |table − direct| / reported bound"),
                worst,
                Threshold::AtMost(1.0),
            )
            .note(format!("{} points, σ = {}", p.points, p.sigma)),
        );
    }
    Ok((claims, vec![("smoothing.csv".into(), t)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_entries_have_defaults() {
        for s in CATALOG {
            assert!(default_params(s.name).is_some(), "{}", s.name);
            assert!(!s.tags.is_empty());
        }
        assert!(info("figure1-classification").is_some());
        assert!(info("pendulum-rotation").is_some());
    }

    #[test]
    fn overrides_are_checked() {
        let v = serde_json::json!({"lambda_max": 50.0});
        let (p, _) = resolve::<SphereSharpness>(Some(&v)).unwrap();
        assert_eq!(p.lambda_max, 50.0);
        let bad = serde_json::json!({"lambda": 50.0});
        assert!(matches!(resolve::<SphereSharpness>(Some(&bad)), Err(CliError::Config { .. })));
        let bad = serde_json::json!({"lambda_max": "x"});
        match resolve::<SphereSharpness>(Some(&bad)) {
            Err(CliError::Config { field, .. }) => assert_eq!(field, "task.params.lambda_max"),
            other => panic!("{other:?}"),
        }
    }
}
