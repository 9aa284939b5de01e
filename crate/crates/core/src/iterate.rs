//! The current iterate as an explicit convex combination of atoms, and the three
//! elementary weight updates (FW, away, pairwise) that all solvers are built from.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::atoms::{Atom, AtomId};
use crate::error::{FwError, Result};
use crate::linalg::{axpy, dot, norm_inf};

/// Weights below this are treated as exact zeros.
pub const ZERO_WEIGHT: f64 = 1e-14;
/// Incremental `x` is rebuilt from the expansion at least this often.
pub const RESYNC_EVERY: usize = 100;
const SUM_TOLERANCE: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StepKind {
    #[serde(rename = "FW")]
    Fw,
    #[serde(rename = "AWAY")]
    Away,
    #[serde(rename = "PAIRWISE")]
    Pairwise,
    #[serde(rename = "DROP")]
    Drop,
    #[serde(rename = "SWAP")]
    Swap,
    #[serde(rename = "CORRECTION")]
    Correction,
    /// Initial record of a trace: state at `x^(0)`, no step taken.
    #[serde(rename = "INIT")]
    Init,
}

impl StepKind {
    pub fn token(self) -> &'static str {
        match self {
            StepKind::Fw => "FW",
            StepKind::Away => "AWAY",
            StepKind::Pairwise => "PAIRWISE",
            StepKind::Drop => "DROP",
            StepKind::Swap => "SWAP",
            StepKind::Correction => "CORRECTION",
            StepKind::Init => "INIT",
        }
    }

    pub const ALL: [StepKind; 7] = [
        StepKind::Fw,
        StepKind::Away,
        StepKind::Pairwise,
        StepKind::Drop,
        StepKind::Swap,
        StepKind::Correction,
        StepKind::Init,
    ];
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for StepKind {
    type Err = FwError;

    fn from_str(s: &str) -> Result<Self> {
        StepKind::ALL
            .into_iter()
            .find(|k| k.token().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| FwError::Parse(format!("unknown step kind {s:?}")))
    }
}

#[derive(Clone, Debug)]
struct Entry {
    weight: f64,
    point: Arc<[f64]>,
}

/// `x = Σ α_v v` over the active set, with `x` kept incrementally.
#[derive(Clone, Debug)]
pub struct ActiveIterate {
    entries: BTreeMap<AtomId, Entry>,
    x: Vec<f64>,
    since_sync: usize,
}

/// Outcome of one weight update. `gamma` is the step size actually applied, which
/// is snapped to `gamma_max` when the update would otherwise leave a residue weight.
#[derive(Clone, Debug)]
pub struct StepResult {
    pub iterate: ActiveIterate,
    pub kind: StepKind,
    pub gamma: f64,
}

impl StepResult {
    pub fn became_drop(&self) -> bool {
        self.kind == StepKind::Drop
    }
}

impl ActiveIterate {
    pub fn from_atom(atom: &Atom) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(
            atom.id,
            Entry {
                weight: 1.0,
                point: atom.point.clone(),
            },
        );
        Self {
            entries,
            x: atom.point.to_vec(),
            since_sync: 0,
        }
    }

    /// Builds an iterate from an explicit expansion. Weights must be positive and sum
    /// to one within 1e-9; they are renormalized exactly.
    pub fn from_weights(pairs: &[(Atom, f64)]) -> Result<Self> {
        let first = pairs
            .first()
            .ok_or_else(|| FwError::ContractViolation("empty expansion".into()))?;
        let dim = first.0.dim();
        let mut entries: BTreeMap<AtomId, Entry> = BTreeMap::new();
        for (atom, w) in pairs {
            if atom.dim() != dim {
                return Err(FwError::DimensionMismatch {
                    expected: dim,
                    got: atom.dim(),
                });
            }
            if !w.is_finite() || *w < 0.0 {
                return Err(FwError::ContractViolation(format!("invalid weight {w}")));
            }
            if *w == 0.0 {
                continue;
            }
            entries
                .entry(atom.id)
                .and_modify(|e| e.weight += w)
                .or_insert(Entry {
                    weight: *w,
                    point: atom.point.clone(),
                });
        }
        let sum: f64 = entries.values().map(|e| e.weight).sum();
        if entries.is_empty() || (sum - 1.0).abs() > 1e-9 {
            return Err(FwError::ContractViolation(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        let mut it = Self {
            entries,
            x: vec![0.0; dim],
            since_sync: 0,
        };
        it.normalize();
        it.resync();
        Ok(it)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Number of active atoms.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: AtomId) -> bool {
        self.entries.contains_key(&id)
    }

    pub fn weight(&self, id: AtomId) -> Option<f64> {
        self.entries.get(&id).map(|e| e.weight)
    }

    pub fn weights(&self) -> impl Iterator<Item = (AtomId, f64)> + '_ {
        self.entries.iter().map(|(id, e)| (*id, e.weight))
    }

    pub fn weight_sum(&self) -> f64 {
        self.entries.values().map(|e| e.weight).sum()
    }

    pub fn atom(&self, id: AtomId) -> Option<Atom> {
        self.entries.get(&id).map(|e| Atom {
            id,
            point: e.point.clone(),
        })
    }

    pub fn atoms(&self) -> impl Iterator<Item = Atom> + '_ {
        self.entries.iter().map(|(id, e)| Atom {
            id: *id,
            point: e.point.clone(),
        })
    }

    /// `Σ α_v v` computed from scratch.
    pub fn resynthesize(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for e in self.entries.values() {
            axpy(e.weight, &e.point, &mut x);
        }
        x
    }

    /// ∞-norm distance between the incremental `x` and its re-synthesis.
    pub fn drift(&self) -> f64 {
        let y = self.resynthesize();
        self.x
            .iter()
            .zip(&y)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn check_invariants(&self) -> Result<()> {
        if let Some((id, e)) = self.entries.iter().find(|(_, e)| !(e.weight > 0.0)) {
            return Err(FwError::ContractViolation(format!(
                "non-positive weight {} on {id}",
                e.weight
            )));
        }
        let sum = self.weight_sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(FwError::ContractViolation(format!("weights sum to {sum}")));
        }
        let drift = self.drift();
        if drift > 1e-9 {
            return Err(FwError::ContractViolation(format!("x drifted by {drift}")));
        }
        Ok(())
    }

    /// The away atom `argmax_{v ∈ S} ⟨grad, v⟩`; ties go to the heavier atom, then
    /// to the smaller id.
    pub fn away_atom(&self, grad: &[f64]) -> (Atom, f64) {
        let mut best: Option<(AtomId, f64, f64)> = None;
        for (id, e) in &self.entries {
            let score = dot(grad, &e.point);
            let better = match best {
                None => true,
                Some((_, bs, bw)) => score > bs || (score == bs && e.weight > bw),
            };
            if better {
                best = Some((*id, score, e.weight));
            }
        }
        let (id, _, w) = best.expect("active set is never empty");
        (self.atom(id).unwrap(), w)
    }

    fn normalize(&mut self) {
        let sum = self.weight_sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            for e in self.entries.values_mut() {
                e.weight /= sum;
            }
        }
    }

    fn resync(&mut self) {
        self.x = self.resynthesize();
        self.since_sync = 0;
    }

    /// Removes residue weights, renormalizes, and re-synthesizes `x` when due.
    fn tidy(&mut self, removed: bool) {
        let before = self.entries.len();
        self.entries.retain(|_, e| e.weight >= ZERO_WEIGHT);
        let removed = removed || self.entries.len() != before;
        self.normalize();
        self.since_sync += 1;
        if removed || self.since_sync >= RESYNC_EVERY {
            self.resync();
        }
    }

    pub fn apply_fw_step(&self, s: &Atom, gamma: f64) -> Result<StepResult> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(FwError::ContractViolation(format!(
                "FW step size {gamma} outside [0, 1]"
            )));
        }
        self.check_dim(s)?;
        let mut next = self.clone();
        if gamma == 0.0 {
            return Ok(StepResult {
                iterate: next,
                kind: StepKind::Fw,
                gamma,
            });
        }
        if gamma == 1.0 {
            return Ok(StepResult {
                iterate: ActiveIterate::from_atom(s),
                kind: StepKind::Fw,
                gamma,
            });
        }
        for e in next.entries.values_mut() {
            e.weight *= 1.0 - gamma;
        }
        next.entries
            .entry(s.id)
            .or_insert(Entry {
                weight: 0.0,
                point: s.point.clone(),
            })
            .weight += gamma;
        for (xi, si) in next.x.iter_mut().zip(s.point.iter()) {
            *xi = (1.0 - gamma) * *xi + gamma * si;
        }
        next.tidy(false);
        Ok(StepResult {
            iterate: next,
            kind: StepKind::Fw,
            gamma,
        })
    }

    /// Away step `x ← x + γ (x − v)` with `γ_max = α_v / (1 − α_v)`.
    pub fn apply_away_step(&self, v: AtomId, gamma: f64, gamma_max: f64) -> Result<StepResult> {
        let alpha = self
            .weight(v)
            .ok_or(FwError::InactiveAtom(v.0))?;
        if self.entries.len() == 1 || alpha >= 1.0 {
            return Err(FwError::AwayFromFullWeight);
        }
        let expected_max = alpha / (1.0 - alpha);
        if (gamma_max - expected_max).abs() > 1e-9 * expected_max.max(1.0) {
            return Err(FwError::ContractViolation(format!(
                "gamma_max {gamma_max} inconsistent with weight {alpha} (expected {expected_max})"
            )));
        }
        if !(gamma >= 0.0 && gamma <= gamma_max * (1.0 + 1e-12)) {
            return Err(FwError::ContractViolation(format!(
                "away step size {gamma} outside [0, {gamma_max}]"
            )));
        }
        let mut next = self.clone();
        if gamma == 0.0 {
            return Ok(StepResult {
                iterate: next,
                kind: StepKind::Away,
                gamma,
            });
        }
        let residue = (1.0 + gamma) * alpha - gamma;
        if gamma >= gamma_max || residue < ZERO_WEIGHT {
            // drop: v leaves exactly, the rest scales by 1 / (1 - α_v)
            next.entries.remove(&v);
            for e in next.entries.values_mut() {
                e.weight /= 1.0 - alpha;
            }
            next.tidy(true);
            return Ok(StepResult {
                iterate: next,
                kind: StepKind::Drop,
                gamma: gamma_max,
            });
        }
        let vpoint = next.entries[&v].point.clone();
        for (id, e) in next.entries.iter_mut() {
            e.weight = if *id == v { residue } else { (1.0 + gamma) * e.weight };
        }
        for (xi, vi) in next.x.iter_mut().zip(vpoint.iter()) {
            *xi = (1.0 + gamma) * *xi - gamma * vi;
        }
        next.tidy(false);
        Ok(StepResult {
            iterate: next,
            kind: StepKind::Away,
            gamma,
        })
    }

    /// Pairwise step moving `γ` of mass from `v` to `s`; `γ_max = α_v`.
    pub fn apply_pairwise_step(&self, v: AtomId, s: &Atom, gamma: f64) -> Result<StepResult> {
        if v == s.id {
            return Err(FwError::DegenerateDirection);
        }
        self.check_dim(s)?;
        let alpha = self.weight(v).ok_or(FwError::InactiveAtom(v.0))?;
        if !(gamma >= 0.0 && gamma <= alpha * (1.0 + 1e-12)) {
            return Err(FwError::ContractViolation(format!(
                "pairwise step size {gamma} outside [0, {alpha}]"
            )));
        }
        let mut next = self.clone();
        if gamma == 0.0 {
            return Ok(StepResult {
                iterate: next,
                kind: StepKind::Pairwise,
                gamma,
            });
        }
        let s_was_active = next.entries.contains_key(&s.id);
        let full = gamma >= alpha || alpha - gamma < ZERO_WEIGHT;
        let gamma = if full { alpha } else { gamma };
        let vpoint = next.entries[&v].point.clone();
        if full {
            next.entries.remove(&v);
        } else {
            next.entries.get_mut(&v).unwrap().weight = alpha - gamma;
        }
        next.entries
            .entry(s.id)
            .or_insert(Entry {
                weight: 0.0,
                point: s.point.clone(),
            })
            .weight += gamma;
        for ((xi, si), vi) in next.x.iter_mut().zip(s.point.iter()).zip(vpoint.iter()) {
            *xi += gamma * (si - vi);
        }
        next.since_sync += 1;
        if full || next.since_sync >= RESYNC_EVERY {
            next.resync();
        }
        let kind = match (full, s_was_active) {
            (false, _) => StepKind::Pairwise,
            (true, true) => StepKind::Drop,
            (true, false) => StepKind::Swap,
        };
        Ok(StepResult {
            iterate: next,
            kind,
            gamma,
        })
    }

    fn check_dim(&self, s: &Atom) -> Result<()> {
        if s.dim() != self.dim() {
            return Err(FwError::DimensionMismatch {
                expected: self.dim(),
                got: s.dim(),
            });
        }
        if s.point.iter().any(|v| !v.is_finite()) {
            return Err(FwError::NonFiniteInput("atom coordinates".into()));
        }
        Ok(())
    }

    /// Largest coordinate of the incremental `x` in absolute value.
    pub fn x_scale(&self) -> f64 {
        norm_inf(&self.x)
    }
}
