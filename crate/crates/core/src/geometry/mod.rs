//! Directional and pyramidal widths, eccentricity, linear rate constants and sampled
//! affine-invariant curvature constants.

mod faces;
mod width;

pub use faces::{enumerate_faces, Face, FaceLattice, MAX_LOCAL_DIM};
pub use width::{pwidth, pwidth_seeded, sphere_directions, WidthReport, WidthWitness, DEFAULT_DIRECTIONS, MAX_ATOMS};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{FwError, Result};
use crate::linalg::{barycentric, dot, norm, sub, AffineFrame, Combinations};
use crate::objectives::{exact_constants, CurvatureEstimates, Objective};
use crate::oracles::PolytopeSpec;

/// Barycentric coordinates count as strictly positive above this threshold.
pub const PROPER_WEIGHT: f64 = 1e-10;

fn check_direction(r: &[f64]) -> Result<f64> {
    if r.iter().any(|v| !v.is_finite()) {
        return Err(FwError::NonFiniteInput("direction".into()));
    }
    let n = norm(r);
    if n == 0.0 {
        return Err(FwError::ContractViolation("zero direction".into()));
    }
    Ok(n)
}

fn check_dims(atoms: &[Vec<f64>], d: usize) -> Result<()> {
    if atoms.is_empty() {
        return Err(FwError::InvalidPolytope("no atoms".into()));
    }
    for a in atoms {
        if a.len() != d {
            return Err(FwError::DimensionMismatch { expected: d, got: a.len() });
        }
    }
    Ok(())
}

/// `max_{s,v} ⟨r/‖r‖, s − v⟩` over the atoms.
pub fn dirw(atoms: &[Vec<f64>], r: &[f64]) -> Result<f64> {
    check_dims(atoms, r.len())?;
    let rn = check_direction(r)?;
    let vals: Vec<f64> = atoms.iter().map(|a| dot(r, a) / rn).collect();
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(hi - lo)
}

/// Affinely independent atom subsets having `x` as a proper convex combination
/// (every barycentric weight above [`PROPER_WEIGHT`]), in order of size and then
/// lexicographically. Larger sets are never needed: any proper representation
/// contains an affinely independent one for the same point.
pub fn proper_active_sets(atoms: &[Vec<f64>], x: &[f64]) -> Result<Vec<Vec<usize>>> {
    check_dims(atoms, x.len())?;
    if atoms.len() > MAX_ATOMS {
        return Err(FwError::PdirwInfeasible(format!(
            "{} atoms exceeds the cap of {MAX_ATOMS}",
            atoms.len()
        )));
    }
    let refs: Vec<&[f64]> = atoms.iter().map(|a| a.as_slice()).collect();
    let frame = AffineFrame::new(&refs);
    let local: Vec<Vec<f64>> = atoms.iter().map(|a| frame.to_local(a)).collect();
    let xl = frame.to_local(x);
    let back = frame.direction_to_ambient(&xl);
    let resid: f64 = back
        .iter()
        .zip(x.iter().zip(&frame.anchor))
        .map(|(b, (xi, ai))| (b - (xi - ai)).abs())
        .fold(0.0, f64::max);
    let scale = 1.0 + atoms.iter().flatten().chain(x).fold(0.0f64, |m, v| m.max(v.abs()));
    if resid > 1e-9 * scale {
        return Err(FwError::OutsideHull);
    }
    let mut out = Vec::new();
    for size in 1..=(frame.dim() + 1).min(atoms.len()) {
        for subset in Combinations::new(atoms.len(), size) {
            let pts: Vec<&[f64]> = subset.iter().map(|&i| local[i].as_slice()).collect();
            if let Some(lam) = barycentric(&pts, &xl) {
                if lam.iter().all(|l| *l > PROPER_WEIGHT) {
                    out.push(subset);
                }
            }
        }
    }
    if out.is_empty() {
        return Err(FwError::OutsideHull);
    }
    Ok(out)
}

/// Pyramidal directional width: the smallest, over proper active sets `S` of `x`, of
/// `max_{s ∈ atoms, v ∈ S} ⟨r/‖r‖, s − v⟩`.
pub fn pdirw(atoms: &[Vec<f64>], r: &[f64], x: &[f64]) -> Result<f64> {
    check_dims(atoms, r.len())?;
    let rn = check_direction(r)?;
    let sets = proper_active_sets(atoms, x)?;
    let vals: Vec<f64> = atoms.iter().map(|a| dot(r, a) / rn).collect();
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let best = sets
        .iter()
        .map(|s| hi - s.iter().map(|&i| vals[i]).fold(f64::INFINITY, f64::min))
        .fold(f64::INFINITY, f64::min);
    Ok(best)
}

/// Closed-form pyramidal width where one is known: `2/√d` (even `d`) or
/// `2/√(d − 1/d)` (odd `d`) for the probability simplex, `1/√d` for the unit cube.
pub fn analytic_pwidth(spec: &PolytopeSpec) -> Option<f64> {
    match spec {
        PolytopeSpec::Simplex { dim } if *dim >= 2 => {
            let d = *dim as f64;
            Some(if dim % 2 == 0 { 2.0 / d.sqrt() } else { 2.0 / (d - 1.0 / d).sqrt() })
        }
        PolytopeSpec::Cube { dim } => Some(1.0 / (*dim as f64).sqrt()),
        _ => None,
    }
}

/// Analytic width when available, otherwise the estimate from [`pwidth`] over the
/// enumerated atoms.
pub fn pyramidal_width(spec: &PolytopeSpec, n_directions: usize) -> Result<f64> {
    if let Some(w) = analytic_pwidth(spec) {
        return Ok(w);
    }
    let atoms = match spec.enumerate_atoms() {
        Ok(a) if a.len() <= MAX_ATOMS => a,
        _ => return Err(FwError::WidthUnavailable),
    };
    Ok(pwidth(&atoms, n_directions)?.pwidth_estimate)
}

/// `(M/δ)²` with `M` the diameter and `δ` the pyramidal width.
pub fn eccentricity(spec: &PolytopeSpec) -> Result<f64> {
    let m = spec.diameter()?;
    let delta = pyramidal_width(spec, DEFAULT_DIRECTIONS)?;
    Ok((m / delta).powi(2))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateConstants {
    /// `μ/(4L) (δ/M)²`, the rate for the away-step and fully-corrective variants.
    pub rho_afw: f64,
    /// `min{½, μδ²/(L M²)}`, the rate surrogate used for pairwise and min-norm-point.
    pub rho_pfw: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub mu: f64,
    pub delta: f64,
    #[serde(rename = "M")]
    pub m: f64,
}

impl RateConstants {
    pub fn from_parts(l: f64, mu: f64, delta: f64, m: f64) -> Result<Self> {
        if !(l > 0.0 && mu >= 0.0 && delta > 0.0 && m > 0.0) || ![l, mu, delta, m].iter().all(|v| v.is_finite()) {
            return Err(FwError::InvalidConfig(format!(
                "rate constants need L > 0, μ ≥ 0, δ > 0, M > 0 (got L={l}, μ={mu}, δ={delta}, M={m})"
            )));
        }
        let ratio = mu / l * (delta / m).powi(2);
        Ok(Self {
            rho_afw: ratio / 4.0,
            rho_pfw: ratio.min(0.5),
            l,
            mu,
            delta,
            m,
        })
    }
}

pub fn rate_constant(obj: &dyn Objective, spec: &PolytopeSpec) -> Result<RateConstants> {
    let c = exact_constants(obj, spec)?;
    let delta = pyramidal_width(spec, DEFAULT_DIRECTIONS)?;
    RateConstants::from_parts(c.l, c.mu, delta, c.m)
}

fn random_point(atoms: &[Vec<f64>], max_support: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = atoms.len();
    let k = rng.random_range(1..=max_support.min(n));
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    let w: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1) + 1e-3).collect();
    let total: f64 = w.iter().sum();
    let mut x = vec![0.0; atoms[0].len()];
    for (wi, &i) in w.iter().zip(&idx[..k]) {
        for (xj, aj) in x.iter_mut().zip(&atoms[i]) {
            *xj += wi / total * aj;
        }
    }
    x
}

fn curvature_quotient(obj: &dyn Objective, x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    let (fx, g) = obj.value_and_gradient(x)?;
    let fy = obj.value(y)?;
    Ok(2.0 / (gamma * gamma) * (fy - fx - dot(&g, &sub(y, x))))
}

/// Sampled `C_f`, `C_f^A` (maxima of their defining quotients, so lower bounds) and
/// `μ_f^A` (a minimum, so an upper bound).
///
/// Every pair and triple of atoms is included at `γ = 1`, and every non-optimal atom
/// `x` is paired with `x* = s_f(x)`. For such a pair `γ^A = 1` and the `μ_f^A`
/// quotient coincides with a `C_f` quotient, hence `mu_fa_hat ≤ c_f_hat`.
pub fn estimate_affine_constants(
    obj: &dyn Objective,
    spec: &PolytopeSpec,
    n_samples: usize,
    seed: u64,
) -> Result<CurvatureEstimates> {
    let q = obj.as_quadratic().ok_or(FwError::NotQuadratic("estimate_affine_constants"))?;
    if n_samples < 100 {
        return Err(FwError::InvalidConfig("n_samples must be at least 100".into()));
    }
    if obj.dim() != spec.dim() {
        return Err(FwError::DimensionMismatch {
            expected: spec.dim(),
            got: obj.dim(),
        });
    }
    let atoms = spec.enumerate_atoms()?;
    if atoms.len() > MAX_ATOMS {
        return Err(FwError::CapExceeded(format!(
            "affine constants need at most {MAX_ATOMS} atoms, got {}",
            atoms.len()
        )));
    }
    let n = atoms.len();
    let max_support = obj.dim() + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut c_f = 0.0f64;
    for x in &atoms {
        for s in &atoms {
            c_f = c_f.max(curvature_quotient(obj, x, s, 1.0)?);
        }
    }
    for _ in 0..n_samples {
        let x = random_point(&atoms, max_support, &mut rng);
        let s = &atoms[rng.random_range(0..n)];
        let gamma = rng.random_range(0.01..=1.0);
        let y: Vec<f64> = x.iter().zip(s).map(|(xi, si)| xi + gamma * (si - xi)).collect();
        c_f = c_f.max(curvature_quotient(obj, &x, &y, gamma)?);
    }

    let mut c_fa = 0.0f64;
    for x in &atoms {
        for s in &atoms {
            for v in &atoms {
                let y: Vec<f64> = x.iter().zip(s.iter().zip(v)).map(|(xi, (si, vi))| xi + si - vi).collect();
                c_fa = c_fa.max(curvature_quotient(obj, x, &y, 1.0)?);
            }
        }
    }
    for _ in 0..n_samples {
        let x = random_point(&atoms, max_support, &mut rng);
        let s = &atoms[rng.random_range(0..n)];
        let v = &atoms[rng.random_range(0..n)];
        let gamma = rng.random_range(0.01..=1.0);
        let y: Vec<f64> = x.iter().zip(s.iter().zip(v)).map(|(xi, (si, vi))| xi + gamma * (si - vi)).collect();
        c_fa = c_fa.max(curvature_quotient(obj, &x, &y, gamma)?);
    }

    let mut mu_fa = f64::INFINITY;
    let mut consider = |x: &[f64], x_star: &[f64]| -> Result<()> {
        let (fx, g) = obj.value_and_gradient(x)?;
        let dir = sub(x_star, x);
        let slope = dot(&g, &dir);
        let gscale = norm(&g) * (1.0 + norm(&dir));
        if slope >= -1e-12 * gscale.max(1e-300) {
            return Ok(());
        }
        let vals: Vec<f64> = atoms.iter().map(|a| dot(&g, a)).collect();
        let s_val = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let v_val = proper_active_sets(&atoms, x)?
            .iter()
            .map(|set| set.iter().map(|&i| vals[i]).fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::INFINITY, f64::min);
        let gamma_a = -slope / (v_val - s_val);
        let quot = 2.0 / (gamma_a * gamma_a) * (obj.value(x_star)? - fx - slope);
        mu_fa = mu_fa.min(quot);
        Ok(())
    };
    for x in &atoms {
        let g = obj.gradient(x)?;
        let s = atoms
            .iter()
            .min_by(|a, b| dot(&g, a).total_cmp(&dot(&g, b)))
            .expect("nonempty");
        consider(x, s)?;
    }
    for _ in 0..n_samples {
        let x = random_point(&atoms, max_support, &mut rng);
        let x_star = random_point(&atoms, max_support, &mut rng);
        consider(&x, &x_star)?;
        let target = &atoms[rng.random_range(0..n)];
        consider(&x, target)?;
    }
    if !mu_fa.is_finite() {
        return Err(FwError::InsufficientData(
            "no sampled pair had a strict descent direction".into(),
        ));
    }

    Ok(CurvatureEstimates {
        l: q.lambda_max(),
        mu: q.lambda_min().max(0.0),
        c_f_hat: c_f,
        c_fa_hat: c_fa,
        mu_fa_hat: mu_fa,
    })
}
