//! Frank-Wolfe solvers: vanilla, away-steps, pairwise, fully-corrective and min-norm-point.

pub mod correction;
pub mod direction;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::atoms::{Atom, AtomStore};
use crate::error::{FwError, Result};
use crate::iterate::{ActiveIterate, StepKind};
use crate::linalg::{dot, sub};
use crate::objectives::Objective;
use crate::oracles::PolytopeSpec;
use crate::trace::{RunTrace, StepRecord};

pub use correction::{away_gap, fcfw_correction, mnp_correction, CorrectionResult, MNP_AWAY_TOLERANCE};
pub use direction::{afw_choose_direction, pfw_step, Direction, DirectionKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    FW,
    AFW,
    PFW,
    FCFW,
    MNP,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::FW, Variant::AFW, Variant::PFW, Variant::FCFW, Variant::MNP];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::FW => "FW",
            Variant::AFW => "AFW",
            Variant::PFW => "PFW",
            Variant::FCFW => "FCFW",
            Variant::MNP => "MNP",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = FwError;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| FwError::InvalidConfig(format!("unknown solver variant {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub variant: Variant,
    pub epsilon: f64,
    pub max_iter: usize,
    pub correction_epsilon: f64,
    pub rng_seed: u64,
}

impl SolverConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            epsilon: 1e-10,
            max_iter: 10_000,
            correction_epsilon: 1e-10,
            rng_seed: 0,
        }
    }

    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.epsilon = eps;
        self.correction_epsilon = self.correction_epsilon.min(eps);
        self
    }

    pub fn with_max_iter(mut self, n: usize) -> Self {
        self.max_iter = n;
        self
    }

    pub fn with_correction_epsilon(mut self, eps: f64) -> Self {
        self.correction_epsilon = eps;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(FwError::InvalidConfig(format!("epsilon {} must be positive", self.epsilon)));
        }
        if self.max_iter == 0 {
            return Err(FwError::InvalidConfig("max_iter must be at least 1".into()));
        }
        if !(self.correction_epsilon > 0.0 && self.correction_epsilon <= self.epsilon) {
            return Err(FwError::InvalidConfig(format!(
                "correction_epsilon {} must lie in (0, epsilon]",
                self.correction_epsilon
            )));
        }
        Ok(())
    }
}

/// How the first iterate is chosen.
#[derive(Clone, Debug, Default)]
pub enum Start {
    /// `lmo(u)` with `u` all-ones, perturbed by the seed when it is nonzero.
    #[default]
    Default,
    /// A given atom.
    Atom(Vec<f64>),
    /// An explicit convex combination of atoms.
    Weights(Vec<(Vec<f64>, f64)>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converged,
    MaxIter,
    Stalled(String),
    NonFinite,
}

impl Status {
    pub fn is_ok(&self) -> bool {
        matches!(self, Status::Converged | Status::MaxIter)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIter => "max_iter",
            Status::Stalled(_) => "stalled",
            Status::NonFinite => "non_finite",
        }
    }
}

/// Post-conditions observed for one correction (FCFW or MNP outer iteration).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrectionReport {
    pub iteration: usize,
    pub away_gap: f64,
    pub local_fw_gap: f64,
    pub value: f64,
    pub fw_line_value: f64,
    pub inner_steps: usize,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub trace: RunTrace,
    pub iterate: ActiveIterate,
    pub status: Status,
    pub corrections: Vec<CorrectionReport>,
    pub atoms: AtomStore,
}

impl Solution {
    pub fn x(&self) -> &[f64] {
        self.iterate.x()
    }
}

struct State {
    f: f64,
    g: Vec<f64>,
    s: Atom,
    fw_gap: f64,
    v: Atom,
    away_gap: f64,
}

fn evaluate(obj: &dyn Objective, spec: &PolytopeSpec, store: &mut AtomStore, it: &ActiveIterate) -> Result<State> {
    let (f, g) = obj.value_and_gradient(it.x())?;
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(FwError::NonFiniteInput("objective value or gradient".into()));
    }
    let s = spec.lmo(store, &g)?;
    let gx = dot(&g, it.x());
    let fw_gap = (gx - dot(&g, &s.point)).max(0.0);
    let (v, _) = it.away_atom(&g);
    let away_gap = (dot(&g, &v.point) - gx).max(0.0);
    Ok(State {
        f,
        g,
        s,
        fw_gap,
        v,
        away_gap,
    })
}

fn initial_iterate(spec: &PolytopeSpec, config: &SolverConfig, start: &Start, store: &mut AtomStore) -> Result<ActiveIterate> {
    let d = spec.dim();
    let check = |p: &[f64]| -> Result<()> {
        if p.len() != d {
            return Err(FwError::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(FwError::NonFiniteInput("start atom".into()));
        }
        Ok(())
    };
    match start {
        Start::Default => {
            let mut u = vec![1.0; d];
            if config.rng_seed != 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
                for ui in &mut u {
                    *ui += rng.sample::<f64, _>(StandardNormal);
                }
            }
            Ok(ActiveIterate::from_atom(&spec.lmo(store, &u)?))
        }
        Start::Atom(p) => {
            check(p)?;
            Ok(ActiveIterate::from_atom(&store.intern(p)))
        }
        Start::Weights(ws) => {
            let mut pairs = Vec::with_capacity(ws.len());
            for (p, w) in ws {
                check(p)?;
                pairs.push((store.intern(p), *w));
            }
            ActiveIterate::from_weights(&pairs)
        }
    }
}

fn record(iteration: usize, kind: StepKind, gamma: f64, gamma_max: f64, st: &State, size: usize) -> StepRecord {
    StepRecord {
        iteration,
        kind,
        gamma,
        gamma_max,
        fw_gap: st.fw_gap,
        away_gap: st.away_gap,
        f_value: st.f,
        active_size: size,
    }
}

enum Outcome {
    Step {
        iterate: ActiveIterate,
        kind: StepKind,
        gamma: f64,
        gamma_max: f64,
    },
    Stall(String),
}

/// Runs one solver to an FW gap `≤ epsilon` or `max_iter` steps.
///
/// The trace starts with an `INIT` record for `x^(0)`; record `t ≥ 1` describes the
/// step from `x^(t−1)` and the gaps, value and active-set size at `x^(t)`.
pub fn solve(obj: &dyn Objective, spec: &PolytopeSpec, config: &SolverConfig, start: Start) -> Result<Solution> {
    config.validate()?;
    if obj.dim() != spec.dim() {
        return Err(FwError::DimensionMismatch {
            expected: spec.dim(),
            got: obj.dim(),
        });
    }
    let quad = match config.variant {
        Variant::MNP => Some(obj.as_quadratic().ok_or(FwError::NotQuadratic("MNP"))?),
        _ => None,
    };
    let clock = Instant::now();
    let mut store = AtomStore::new();
    let mut it = initial_iterate(spec, config, &start, &mut store)?;
    let mut trace = RunTrace::new(serde_json::json!({
        "solver": config,
        "objective": obj.describe(),
        "domain": spec.describe(),
    }));
    let mut corrections = Vec::new();
    let mut correction_set: Vec<Atom> = it.atoms().collect();

    let mut st = match evaluate(obj, spec, &mut store, &it) {
        Ok(s) => s,
        Err(FwError::NonFiniteInput(_)) => {
            return Ok(non_finite_solution(trace, it, store, 0, clock));
        }
        Err(e) => return Err(e),
    };
    trace.records.push(record(0, StepKind::Init, 0.0, 0.0, &st, it.len()));

    let mut t = 0usize;
    let status = loop {
        if st.fw_gap <= config.epsilon {
            break Status::Converged;
        }
        if t >= config.max_iter {
            break Status::MaxIter;
        }
        let outcome = match config.variant {
            Variant::FW => {
                let d = sub(&st.s.point, it.x());
                let ls = obj.line_search(it.x(), &d, 1.0)?;
                if ls.non_descent || ls.gamma == 0.0 {
                    Outcome::Stall("FW line search made no progress".into())
                } else {
                    let r = it.apply_fw_step(&st.s, ls.gamma)?;
                    Outcome::Step {
                        iterate: r.iterate,
                        kind: r.kind,
                        gamma: r.gamma,
                        gamma_max: 1.0,
                    }
                }
            }
            Variant::AFW => {
                let dir = afw_choose_direction(&it, &st.g, &st.s, st.v.id)?;
                let ls = obj.line_search(it.x(), &dir.d, dir.gamma_max)?;
                if ls.non_descent || ls.gamma == 0.0 {
                    Outcome::Stall("AFW line search made no progress".into())
                } else {
                    let r = match dir.kind {
                        DirectionKind::Away => it.apply_away_step(st.v.id, ls.gamma, dir.gamma_max)?,
                        _ => it.apply_fw_step(&st.s, ls.gamma)?,
                    };
                    Outcome::Step {
                        iterate: r.iterate,
                        kind: r.kind,
                        gamma: r.gamma,
                        gamma_max: dir.gamma_max,
                    }
                }
            }
            Variant::PFW => match pfw_step(&it, &st.g, &st.s, st.v.id) {
                Err(FwError::DegenerateDirection) => Outcome::Stall("FW atom equals away atom".into()),
                Err(e) => return Err(e),
                Ok(dir) if dir.slope <= 0.0 => Outcome::Stall("pairwise gap is not positive".into()),
                Ok(dir) => {
                    let ls = obj.line_search(it.x(), &dir.d, dir.gamma_max)?;
                    if ls.non_descent || ls.gamma == 0.0 {
                        Outcome::Stall("PFW line search made no progress".into())
                    } else {
                        let r = it.apply_pairwise_step(st.v.id, &st.s, ls.gamma)?;
                        Outcome::Step {
                            iterate: r.iterate,
                            kind: r.kind,
                            gamma: r.gamma,
                            gamma_max: dir.gamma_max,
                        }
                    }
                }
            },
            Variant::FCFW => match fcfw_correction(obj, &it, &correction_set, &st.s, config.correction_epsilon) {
                Err(FwError::CorrectionStall { steps, .. }) => {
                    Outcome::Stall(format!("correction stalled after {steps} inner steps"))
                }
                Err(e) => return Err(e),
                Ok(c) => {
                    corrections.push(CorrectionReport {
                        iteration: t + 1,
                        away_gap: c.away_gap,
                        local_fw_gap: c.local_fw_gap,
                        value: c.value,
                        fw_line_value: c.fw_line_value,
                        inner_steps: c.inner_steps,
                    });
                    correction_set = correction::retain_correction_atoms(c.correction_atoms, &c.iterate);
                    Outcome::Step {
                        iterate: c.iterate,
                        kind: StepKind::Correction,
                        gamma: c.fw_gamma,
                        gamma_max: 1.0,
                    }
                }
            },
            Variant::MNP => {
                let q = quad.expect("checked above");
                let c = mnp_correction(q, &it, &st.s)?;
                let progressed = c.value < st.f || c.iterate.contains(st.s.id);
                if !progressed {
                    Outcome::Stall("minor cycle made no progress".into())
                } else {
                    corrections.push(CorrectionReport {
                        iteration: t + 1,
                        away_gap: c.away_gap,
                        local_fw_gap: c.local_fw_gap,
                        value: c.value,
                        fw_line_value: c.fw_line_value,
                        inner_steps: c.inner_steps,
                    });
                    let shrank = c.iterate.len() < it.len();
                    let gamma = c.iterate.weight(st.s.id).unwrap_or(0.0);
                    Outcome::Step {
                        kind: if shrank { StepKind::Drop } else { StepKind::Correction },
                        gamma: if shrank { 1.0 } else { gamma },
                        gamma_max: 1.0,
                        iterate: c.iterate,
                    }
                }
            }
        };
        match outcome {
            Outcome::Stall(msg) => break Status::Stalled(msg),
            Outcome::Step {
                iterate,
                kind,
                gamma,
                gamma_max,
            } => {
                it = iterate;
                t += 1;
                st = match evaluate(obj, spec, &mut store, &it) {
                    Ok(s) => s,
                    Err(FwError::NonFiniteInput(_)) => {
                        let mut sol = non_finite_solution(trace, it, store, t, clock);
                        sol.corrections = corrections;
                        return Ok(sol);
                    }
                    Err(e) => return Err(e),
                };
                trace.records.push(record(t, kind, gamma, gamma_max, &st, it.len()));
            }
        }
    };
    trace.wall_time = clock.elapsed().as_secs_f64();
    Ok(Solution {
        trace,
        iterate: it,
        status,
        corrections,
        atoms: store,
    })
}

fn non_finite_solution(mut trace: RunTrace, it: ActiveIterate, store: AtomStore, t: usize, clock: Instant) -> Solution {
    trace.records.push(StepRecord {
        iteration: t,
        kind: if t == 0 { StepKind::Init } else { StepKind::Fw },
        gamma: 0.0,
        gamma_max: 0.0,
        fw_gap: f64::NAN,
        away_gap: f64::NAN,
        f_value: f64::NAN,
        active_size: it.len(),
    });
    trace.wall_time = clock.elapsed().as_secs_f64();
    Solution {
        trace,
        iterate: it,
        status: Status::NonFinite,
        corrections: Vec::new(),
        atoms: store,
    }
}
