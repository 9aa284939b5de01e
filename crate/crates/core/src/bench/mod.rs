//! Experiment harness: problem recipes, parallel solver runs, rate fits and summaries.

mod fit;
mod problems;

pub use fit::{fit_rate, fit_series, Quantity, RateFit, Window, MIN_FIT_POINTS};
pub use problems::{
    closest_point_in_triangle, dirichlet_weights, gen_lasso, gen_rankdef, gen_triangle, gen_triangle_with_target,
    LassoInstance, RankDefInstance, TriangleInstance, LASSO_RADIUS, NOISE_MODEL, TRIANGLE_TARGET,
    TRIANGLE_TARGET_OUTSIDE,
};

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FwError, Result};
use crate::geometry::{rate_constant, RateConstants};
use crate::iterate::StepKind;
use crate::objectives::{read_matrix_csv, Objective, QuadraticObjective};
use crate::oracles::PolytopeSpec;
use crate::solvers::{solve, SolverConfig, Start, Status, Variant};
use crate::trace::RunTrace;

/// Gap target and iteration budget of the reference run that estimates `f(x*)`.
pub const REFERENCE_EPSILON: f64 = 1e-13;
pub const REFERENCE_MAX_ITER: usize = 5000;

fn default_epsilon() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    10_000
}
fn default_noise() -> f64 {
    0.1
}
fn default_radius() -> f64 {
    LASSO_RADIUS
}
fn default_starts() -> usize {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemConfig {
    Lasso {
        m: usize,
        n: usize,
        k: usize,
        #[serde(default = "default_noise")]
        noise: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    Triangle {
        thetas: Vec<f64>,
        #[serde(default = "default_starts")]
        n_starts: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        target: Option<[f64; 2]>,
    },
    Rankdef {
        d: usize,
        rank: usize,
        #[serde(default)]
        seed: u64,
    },
    Custom {
        objective: ObjectiveConfig,
        /// A polytope description as accepted by [`PolytopeSpec::from_json_value`].
        domain: serde_json::Value,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveConfig {
    /// `½‖x − center‖²`.
    SquaredDistance { center: Vec<f64> },
    /// `½ xᵀQx + bᵀx + c`, with `Q` inline or in a headerless CSV file.
    Quadratic {
        #[serde(default)]
        q: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        q_file: Option<String>,
        b: Vec<f64>,
        #[serde(default)]
        c: f64,
    },
    /// `‖Ax − y‖²`.
    LeastSquares {
        #[serde(default)]
        a: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        a_file: Option<String>,
        y: Vec<f64>,
    },
}

fn load_matrix(inline: &Option<Vec<Vec<f64>>>, file: &Option<String>, base: Option<&Path>, what: &str) -> Result<DMatrix<f64>> {
    match (inline, file) {
        (Some(rows), None) => {
            let r = rows.len();
            let c = rows.first().map_or(0, |row| row.len());
            if r == 0 || rows.iter().any(|row| row.len() != c) {
                return Err(FwError::InvalidObjective(format!("{what} rows are ragged or empty")));
            }
            Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
        }
        (None, Some(path)) => {
            let p = base.map_or_else(|| PathBuf::from(path), |b| b.join(path));
            read_matrix_csv(fs::File::open(&p)?)
        }
        _ => Err(FwError::InvalidObjective(format!(
            "give exactly one of {what} and {what}_file"
        ))),
    }
}

impl ObjectiveConfig {
    pub fn build(&self, base: Option<&Path>) -> Result<QuadraticObjective> {
        match self {
            ObjectiveConfig::SquaredDistance { center } => QuadraticObjective::squared_distance(center),
            ObjectiveConfig::Quadratic { q, q_file, b, c } => {
                QuadraticObjective::new(load_matrix(q, q_file, base, "q")?, b.clone(), *c)
            }
            ObjectiveConfig::LeastSquares { a, a_file, y } => {
                QuadraticObjective::from_least_squares(&load_matrix(a, a_file, base, "a")?, y)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitTarget {
    /// `f(x_t) − f(x*)` when `f(x*)` is known, the FW gap otherwise.
    Auto,
    FGap,
    FwGap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: ProblemConfig,
    pub variants: Vec<Variant>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub correction_epsilon: Option<f64>,
    #[serde(default)]
    pub window: Window,
    #[serde(default = "default_fit_target")]
    pub fit: FitTarget,
    /// Directory that relative file paths in the problem are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_fit_target() -> FitTarget {
    FitTarget::Auto
}

impl ExperimentConfig {
    /// A 200×500 Lasso with 50 nonzeros and radius 20.
    pub fn large_lasso(variants: Vec<Variant>) -> Self {
        Self::new(
            "lasso_large",
            ProblemConfig::Lasso {
                m: 200,
                n: 500,
                k: 50,
                noise: 0.1,
                seed: 42,
                radius: LASSO_RADIUS,
            },
            variants,
        )
    }

    /// A 50×120 Lasso with 12 nonzeros. The radius is scaled with the sparsity
    /// (`20 · 12/50`) so that the constraint stays active, as it is for
    /// [`ExperimentConfig::large_lasso`].
    pub fn desk_lasso(variants: Vec<Variant>) -> Self {
        let mut c = Self::new(
            "lasso_desk",
            ProblemConfig::Lasso {
                m: 50,
                n: 120,
                k: 12,
                noise: 0.1,
                seed: 7,
                radius: LASSO_RADIUS * 12.0 / 50.0,
            },
            variants,
        );
        c.epsilon = 1e-8;
        c.max_iter = 2000;
        c
    }

    pub fn new(name: &str, problem: ProblemConfig, variants: Vec<Variant>) -> Self {
        Self {
            name: name.to_string(),
            problem,
            variants,
            epsilon: default_epsilon(),
            max_iter: default_max_iter(),
            correction_epsilon: None,
            window: Window::default(),
            fit: FitTarget::Auto,
            base_dir: None,
        }
    }

    pub fn from_json_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text)?;
        cfg.base_dir = base_dir.map(Path::to_path_buf);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json_str(&text, path.parent())
    }

    pub fn set_seed(&mut self, new_seed: u64) {
        match &mut self.problem {
            ProblemConfig::Lasso { seed, .. }
            | ProblemConfig::Triangle { seed, .. }
            | ProblemConfig::Rankdef { seed, .. } => *seed = new_seed,
            ProblemConfig::Custom { .. } => {}
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(FwError::InvalidConfig("variant list is empty".into()));
        }
        self.window.validate()?;
        self.solver_config(self.variants[0]).validate()?;
        match &self.problem {
            ProblemConfig::Lasso { m, n, k, noise, radius, .. } => {
                if *m == 0 || *n == 0 || k > n {
                    return Err(FwError::InvalidConfig("lasso needs m, n ≥ 1 and k ≤ n".into()));
                }
                if !(*noise >= 0.0) || !(*radius > 0.0) {
                    return Err(FwError::InvalidConfig("lasso needs noise ≥ 0 and radius > 0".into()));
                }
            }
            ProblemConfig::Triangle { thetas, n_starts, .. } => {
                if thetas.is_empty() || *n_starts == 0 {
                    return Err(FwError::InvalidConfig("triangle needs angles and at least one start".into()));
                }
                if let Some(t) = thetas.iter().find(|t| !(**t > 0.0 && **t < std::f64::consts::FRAC_PI_2)) {
                    return Err(FwError::InvalidConfig(format!("theta {t} must lie in (0, pi/2)")));
                }
            }
            ProblemConfig::Rankdef { d, rank, .. } => {
                if *rank == 0 || rank >= d {
                    return Err(FwError::InvalidConfig("rankdef needs 1 ≤ rank < d".into()));
                }
            }
            ProblemConfig::Custom { .. } => {}
        }
        Ok(())
    }

    fn solver_config(&self, variant: Variant) -> SolverConfig {
        let mut c = SolverConfig::new(variant)
            .with_epsilon(self.epsilon)
            .with_max_iter(self.max_iter);
        c.correction_epsilon = self.correction_epsilon.unwrap_or(self.epsilon);
        c
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub key: String,
    pub variant: Variant,
    pub theta: Option<f64>,
    pub start: Option<usize>,
    pub status: String,
    pub message: Option<String>,
    pub iterations: usize,
    pub final_gap: Option<f64>,
    pub final_value: Option<f64>,
    pub tallies: BTreeMap<String, usize>,
    /// The first step was a drop step; such runs are left out of the ratio table.
    pub drop_start: bool,
    pub fit: Option<RateFit>,
    pub fit_error: Option<String>,
    pub theoretical_rho: Option<f64>,
    pub ratio: Option<f64>,
    pub trace_file: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioRow {
    pub theta: f64,
    pub variant: Variant,
    pub runs: usize,
    pub excluded_drop_starts: usize,
    pub median_ratio: Option<f64>,
    pub min_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    pub theoretical_rho: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub config: serde_json::Value,
    pub noise_model: Option<String>,
    pub f_star: Option<f64>,
    pub runs: Vec<RunSummary>,
    pub ratio_table: Vec<RatioRow>,
    pub all_ok: bool,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub summary: ExperimentSummary,
    /// Traces keyed by run key; errored runs have no entry.
    pub traces: BTreeMap<String, RunTrace>,
}

struct Prepared {
    obj: Arc<dyn Objective>,
    spec: PolytopeSpec,
    f_star: Option<f64>,
    rates: Option<RateConstants>,
    theta: Option<f64>,
}

struct RunSpec {
    key: String,
    variant: Variant,
    problem: usize,
    start_index: Option<usize>,
    start: Start,
}

fn theoretical(rates: &Option<RateConstants>, v: Variant) -> Option<f64> {
    let r = rates.as_ref()?;
    let rho = match v {
        Variant::AFW | Variant::FCFW => r.rho_afw,
        Variant::PFW | Variant::MNP => r.rho_pfw,
        Variant::FW => return None,
    };
    (rho > 0.0).then_some(rho)
}

fn prepare(cfg: &ExperimentConfig) -> Result<(Vec<Prepared>, Vec<RunSpec>)> {
    let mut problems = Vec::new();
    let mut runs = Vec::new();
    let simple = |problems: &mut Vec<Prepared>, runs: &mut Vec<RunSpec>, p: Prepared| {
        problems.push(p);
        for &v in &cfg.variants {
            runs.push(RunSpec {
                key: v.as_str().to_string(),
                variant: v,
                problem: 0,
                start_index: None,
                start: Start::Default,
            });
        }
    };
    match &cfg.problem {
        ProblemConfig::Lasso { m, n, k, noise, seed, radius } => {
            let inst = gen_lasso(*m, *n, *k, *noise, *seed, *radius)?;
            let p = Prepared {
                obj: Arc::new(inst.obj),
                spec: inst.spec,
                f_star: None,
                rates: None,
                theta: None,
            };
            simple(&mut problems, &mut runs, p);
        }
        ProblemConfig::Rankdef { d, rank, seed } => {
            let inst = gen_rankdef(*d, *rank, *seed)?;
            let p = Prepared {
                obj: Arc::new(inst.obj),
                spec: inst.spec,
                f_star: Some(0.0),
                rates: None,
                theta: None,
            };
            simple(&mut problems, &mut runs, p);
        }
        ProblemConfig::Custom { objective, domain } => {
            let base = cfg.base_dir.as_deref();
            let obj = objective.build(base)?;
            let spec = PolytopeSpec::from_json_value(domain.clone(), base)?;
            let rates = rate_constant(&obj, &spec).ok().filter(|r| r.mu > 0.0);
            let p = Prepared {
                obj: Arc::new(obj),
                spec,
                f_star: None,
                rates,
                theta: None,
            };
            simple(&mut problems, &mut runs, p);
        }
        ProblemConfig::Triangle {
            thetas,
            n_starts,
            seed,
            target,
        } => {
            for (ti, &theta) in thetas.iter().enumerate() {
                let inst = gen_triangle_with_target(theta, target.unwrap_or(TRIANGLE_TARGET))?;
                let rates = RateConstants::from_parts(1.0, 1.0, inst.delta, inst.diameter)?;
                for j in 0..*n_starts {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9) ^ ((ti as u64) << 32 | j as u64));
                    let w = dirichlet_weights(3, &mut rng);
                    let start: Vec<(Vec<f64>, f64)> = inst.vertices.iter().cloned().zip(w).collect();
                    for &v in &cfg.variants {
                        runs.push(RunSpec {
                            key: format!("theta{ti}_start{j:02}_{}", v.as_str()),
                            variant: v,
                            problem: problems.len(),
                            start_index: Some(j),
                            start: Start::Weights(start.clone()),
                        });
                    }
                }
                problems.push(Prepared {
                    obj: Arc::new(inst.obj),
                    spec: inst.spec,
                    f_star: Some(inst.f_star),
                    rates: Some(rates),
                    theta: Some(theta),
                });
            }
        }
    }
    Ok((problems, runs))
}

struct RunResult {
    trace: Option<RunTrace>,
    status: std::result::Result<Status, String>,
    best_value: Option<f64>,
}

fn execute(cfg: &ExperimentConfig, p: &Prepared, run: &RunSpec) -> RunResult {
    match solve(p.obj.as_ref(), &p.spec, &cfg.solver_config(run.variant), run.start.clone()) {
        Ok(sol) => {
            let best = sol.trace.records.iter().map(|r| r.f_value).filter(|v| v.is_finite()).reduce(f64::min);
            RunResult {
                trace: Some(sol.trace),
                status: Ok(sol.status),
                best_value: best,
            }
        }
        Err(e) => RunResult {
            trace: None,
            status: Err(e.to_string()),
            best_value: None,
        },
    }
}

/// Smallest value reached by a fully-corrective reference run at a tight gap target.
fn reference_value(p: &Prepared) -> Option<f64> {
    let cfg = SolverConfig::new(Variant::FCFW)
        .with_epsilon(REFERENCE_EPSILON)
        .with_max_iter(REFERENCE_MAX_ITER);
    let sol = solve(p.obj.as_ref(), &p.spec, &cfg, Start::Default).ok()?;
    sol.trace.records.iter().map(|r| r.f_value).filter(|v| v.is_finite()).reduce(f64::min)
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Runs every (variant, start) pair of the experiment in parallel. When `out_dir`
/// is given, each trace is written to `<key>.csv` and the summary to `summary.json`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let (mut problems, runs) = prepare(cfg)?;

    let results: Vec<RunResult> = runs
        .par_iter()
        .map(|r| execute(cfg, &problems[r.problem], r))
        .collect();

    if problems.len() == 1 && problems[0].f_star.is_none() {
        let reference = reference_value(&problems[0]);
        problems[0].f_star = results
            .iter()
            .filter_map(|r| r.best_value)
            .chain(reference)
            .reduce(f64::min);
    }

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
    }

    let mut summaries = Vec::with_capacity(runs.len());
    let mut traces = BTreeMap::new();
    let mut all_ok = true;
    for (run, res) in runs.iter().zip(results) {
        let p = &problems[run.problem];
        let theoretical_rho = theoretical(&p.rates, run.variant);
        let (status, message) = match &res.status {
            Ok(s) => {
                all_ok &= s.is_ok();
                let msg = match s {
                    Status::Stalled(m) => Some(m.clone()),
                    _ => None,
                };
                (s.label().to_string(), msg)
            }
            Err(e) => {
                all_ok = false;
                ("error".to_string(), Some(e.clone()))
            }
        };
        let mut summary = RunSummary {
            key: run.key.clone(),
            variant: run.variant,
            theta: p.theta,
            start: run.start_index,
            status,
            message,
            iterations: 0,
            final_gap: None,
            final_value: None,
            tallies: BTreeMap::new(),
            drop_start: false,
            fit: None,
            fit_error: None,
            theoretical_rho,
            ratio: None,
            trace_file: None,
        };
        if let Some(trace) = res.trace {
            summary.iterations = trace.steps().count();
            summary.final_gap = trace.final_gap();
            summary.final_value = trace.final_value();
            summary.tallies = trace.tallies();
            summary.drop_start = trace.records.get(1).is_some_and(|r| r.kind == StepKind::Drop);
            let quantity = match (cfg.fit, p.f_star) {
                (FitTarget::FwGap, _) | (FitTarget::Auto, None) => Quantity::FwGap,
                (_, Some(f_star)) => Quantity::FGapToOpt { f_star },
                (FitTarget::FGap, None) => Quantity::FwGap,
            };
            let exclude = matches!(run.variant, Variant::AFW | Variant::MNP) && matches!(quantity, Quantity::FGapToOpt { .. });
            match fit_rate(&trace, quantity, cfg.window, exclude) {
                Ok(mut f) => {
                    f.theoretical_rho = theoretical_rho;
                    summary.ratio = theoretical_rho.map(|t| f.rho_hat / t);
                    summary.fit = Some(f);
                }
                Err(e) => summary.fit_error = Some(e.to_string()),
            }
            if let Some(dir) = out_dir {
                let name = format!("{}.csv", run.key);
                trace.write_csv(fs::File::create(dir.join(&name))?)?;
                summary.trace_file = Some(name);
            }
            traces.insert(run.key.clone(), trace);
        }
        summaries.push(summary);
    }
    summaries.sort_by(|a, b| a.key.cmp(&b.key));

    let mut ratio_table = Vec::new();
    if let ProblemConfig::Triangle { thetas, .. } = &cfg.problem {
        for &theta in thetas {
            for &v in &cfg.variants {
                let Some(rho) = problems
                    .iter()
                    .find(|p| p.theta == Some(theta))
                    .and_then(|p| theoretical(&p.rates, v))
                else {
                    continue;
                };
                let rows: Vec<&RunSummary> = summaries
                    .iter()
                    .filter(|s| s.theta == Some(theta) && s.variant == v)
                    .collect();
                let excluded = rows.iter().filter(|s| s.drop_start).count();
                let mut ratios: Vec<f64> = rows.iter().filter(|s| !s.drop_start).filter_map(|s| s.ratio).collect();
                let min_ratio = ratios.iter().copied().reduce(f64::min);
                let max_ratio = ratios.iter().copied().reduce(f64::max);
                ratio_table.push(RatioRow {
                    theta,
                    variant: v,
                    runs: rows.len() - excluded,
                    excluded_drop_starts: excluded,
                    median_ratio: median(&mut ratios),
                    min_ratio,
                    max_ratio,
                    theoretical_rho: rho,
                });
            }
        }
    }

    let summary = ExperimentSummary {
        name: cfg.name.clone(),
        config: serde_json::to_value(cfg)?,
        noise_model: matches!(cfg.problem, ProblemConfig::Lasso { .. }).then(|| NOISE_MODEL.to_string()),
        f_star: if problems.len() == 1 { problems[0].f_star } else { None },
        runs: summaries,
        ratio_table,
        all_ok,
    };
    if let Some(dir) = out_dir {
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    }
    Ok(ExperimentOutput { summary, traces })
}
