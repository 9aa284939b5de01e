//! Pyramidal width of a finite atom set.
//!
//! For every face `K` of dimension ≥ 1 and every affinely independent active set
//! `S ⊆ K`, the feasible directions form the cone
//! `C(K, S) = {r ∈ lin(K − K) : ⟨n_F, r⟩ ≤ 0 for the facets F of K containing S}`.
//! The smallest width over unit `r ∈ C(K, S)` equals `1 / max ‖r‖` over the polytope
//! `{r ∈ C(K, S) : ⟨r, s − v⟩ ≤ 1 for s ∈ K, v ∈ S}`, whose vertices are enumerated
//! exactly. Quasi-random sphere directions are evaluated as well, and the smaller of
//! the two values is kept.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::faces::{enumerate_faces, hyperplane_normal};
use crate::error::{FwError, Result};
use crate::linalg::{binomial, dot, norm, AffineFrame, Combinations};

pub const MAX_ATOMS: usize = 16;
pub const DEFAULT_DIRECTIONS: usize = 2000;
const MAX_VERTEX_COMBINATIONS: f64 = 2e6;
const CONE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthWitness {
    pub face: Vec<Vec<f64>>,
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub active_set: Vec<Vec<f64>>,
    pub s: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthReport {
    pub pwidth_estimate: f64,
    /// Sampled sphere directions that passed the cone test, summed over all
    /// (face, active set) pairs.
    pub directions_sampled: usize,
    /// Faces of dimension at least one.
    pub faces_enumerated: usize,
    /// Whether the vertex enumeration completed for every (face, active set) pair.
    pub exact: bool,
    pub witness: WidthWitness,
}

pub fn pwidth(atoms: &[Vec<f64>], n_directions: usize) -> Result<WidthReport> {
    pwidth_seeded(atoms, n_directions, 0)
}

struct Job {
    face: usize,
    /// Indices into the face's atom list.
    active: Vec<usize>,
    cone: Vec<Vec<f64>>,
}

struct FaceCtx {
    atoms: Vec<usize>,
    frame: AffineFrame,
    local: Vec<Vec<f64>>,
}

struct JobResult {
    value: f64,
    r: Vec<f64>,
    exact: bool,
    sampled: usize,
}

pub fn pwidth_seeded(atoms: &[Vec<f64>], n_directions: usize, seed: u64) -> Result<WidthReport> {
    if atoms.is_empty() {
        return Err(FwError::InvalidPolytope("no atoms".into()));
    }
    if n_directions == 0 {
        return Err(FwError::InvalidConfig("n_directions must be at least 1".into()));
    }
    let d = atoms[0].len();
    for a in atoms {
        if a.len() != d {
            return Err(FwError::DimensionMismatch { expected: d, got: a.len() });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(FwError::NonFiniteInput("atom coordinates".into()));
        }
    }
    let mut pts: Vec<Vec<f64>> = Vec::new();
    for a in atoms {
        if !pts.contains(a) {
            pts.push(a.clone());
        }
    }
    if pts.len() > MAX_ATOMS {
        return Err(FwError::CapExceeded(format!(
            "pyramidal width supports at most {MAX_ATOMS} atoms, got {}",
            pts.len()
        )));
    }
    if pts.len() == 1 {
        return Err(FwError::WidthUnavailable);
    }
    let lattice = enumerate_faces(&pts)?;

    let mut ctxs: Vec<FaceCtx> = Vec::new();
    let mut jobs: Vec<Job> = Vec::new();
    for (fi, face) in lattice.faces.iter().enumerate() {
        if face.dim == 0 {
            continue;
        }
        let amb: Vec<&[f64]> = face.atoms.iter().map(|&i| pts[i].as_slice()).collect();
        let frame = AffineFrame::new(&amb);
        let local: Vec<Vec<f64>> = amb.iter().map(|p| frame.to_local(p)).collect();
        let k = face.dim;

        let mut facets: Vec<(Vec<usize>, Vec<f64>)> = Vec::new();
        for gi in lattice.facets_of(fi) {
            let g = &lattice.faces[gi].atoms;
            let pos: Vec<usize> = g.iter().map(|a| face.atoms.binary_search(a).unwrap()).collect();
            let gp: Vec<&[f64]> = pos.iter().map(|&i| local[i].as_slice()).collect();
            let mut n = hyperplane_normal(&gp, k).ok_or_else(|| {
                FwError::DegenerateActiveSet("facet does not span a hyperplane".into())
            })?;
            let mut extreme = 0.0f64;
            for (i, y) in local.iter().enumerate() {
                if pos.contains(&i) {
                    continue;
                }
                let v: f64 = n.iter().zip(y.iter().zip(gp[0])).map(|(a, (p, q))| a * (p - q)).sum();
                if v.abs() > extreme.abs() {
                    extreme = v;
                }
            }
            if extreme > 0.0 {
                n.iter_mut().for_each(|v| *v = -*v);
            }
            facets.push((pos, n));
        }

        let ctx_idx = ctxs.len();
        for size in 1..=(k + 1).min(face.atoms.len()) {
            for active in Combinations::new(face.atoms.len(), size) {
                let sp: Vec<&[f64]> = active.iter().map(|&i| local[i].as_slice()).collect();
                if size > 1 && AffineFrame::new(&sp).dim() != size - 1 {
                    continue;
                }
                let cone = facets
                    .iter()
                    .filter(|(pos, _)| active.iter().all(|a| pos.contains(a)))
                    .map(|(_, n)| n.clone())
                    .collect();
                jobs.push(Job {
                    face: ctx_idx,
                    active,
                    cone,
                });
            }
        }
        ctxs.push(FaceCtx {
            atoms: face.atoms.clone(),
            frame,
            local,
        });
    }
    let faces_enumerated = ctxs.len();

    let max_k = lattice.dim();
    let dirs: Vec<Vec<Vec<f64>>> = (0..=max_k).map(|k| sphere_directions(k, n_directions, seed)).collect();

    let results: Vec<JobResult> = jobs
        .par_iter()
        .map(|job| {
            let ctx = &ctxs[job.face];
            let k = ctx.frame.dim();
            solve_job(&ctx.local, &job.active, &job.cone, &dirs[k])
        })
        .collect();

    let mut best = 0usize;
    for (i, r) in results.iter().enumerate() {
        if r.value < results[best].value {
            best = i;
        }
    }
    let exact = results.iter().all(|r| r.exact);
    let directions_sampled = results.iter().map(|r| r.sampled).sum();
    let job = &jobs[best];
    let ctx = &ctxs[job.face];

    let face: Vec<Vec<f64>> = ctx.atoms.iter().map(|&i| pts[i].clone()).collect();
    let active_set: Vec<Vec<f64>> = job.active.iter().map(|&i| face[i].clone()).collect();
    let mut x = vec![0.0; d];
    for v in &active_set {
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi += vi / active_set.len() as f64;
        }
    }
    let mut r = ctx.frame.direction_to_ambient(&results[best].r);
    let rn = norm(&r);
    r.iter_mut().for_each(|v| *v /= rn);
    let (s_idx, s_val) = face
        .iter()
        .map(|a| dot(&r, a))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let v_min = active_set.iter().map(|v| dot(&r, v)).fold(f64::INFINITY, f64::min);
    let s = face[s_idx].clone();

    Ok(WidthReport {
        pwidth_estimate: s_val - v_min,
        directions_sampled,
        faces_enumerated,
        exact,
        witness: WidthWitness {
            face,
            x,
            r,
            active_set,
            s,
        },
    })
}

fn width_local(local: &[Vec<f64>], active: &[usize], r: &[f64]) -> f64 {
    let smax = local.iter().map(|p| dot(r, p)).fold(f64::NEG_INFINITY, f64::max);
    let vmin = active.iter().map(|&i| dot(r, &local[i])).fold(f64::INFINITY, f64::min);
    smax - vmin
}

fn solve_job(local: &[Vec<f64>], active: &[usize], cone: &[Vec<f64>], dirs: &[Vec<f64>]) -> JobResult {
    let k = local[0].len();
    let mut best_val = f64::INFINITY;
    let mut best_r = vec![0.0; k];

    let mut sampled = 0;
    for r in dirs {
        if cone.iter().any(|n| dot(n, r) > CONE_TOL) {
            continue;
        }
        sampled += 1;
        let w = width_local(local, active, r);
        if w < best_val {
            best_val = w;
            best_r.clone_from(r);
        }
    }

    // Rows (a, b) of {a·r ≤ b}, deduplicated after normalization.
    let mut rows: Vec<(Vec<f64>, f64)> = cone.iter().map(|n| (n.clone(), 0.0)).collect();
    let mut keys: BTreeSet<Vec<i64>> = BTreeSet::new();
    for (i, s) in local.iter().enumerate() {
        for &v in active {
            if v == i {
                continue;
            }
            let a: Vec<f64> = s.iter().zip(&local[v]).map(|(p, q)| p - q).collect();
            let an = norm(&a);
            if an == 0.0 {
                continue;
            }
            let a: Vec<f64> = a.iter().map(|x| x / an).collect();
            let b = 1.0 / an;
            let mut key: Vec<i64> = a.iter().map(|x| (x * 1e9).round() as i64).collect();
            key.push((b * 1e9).round() as i64);
            if keys.insert(key) {
                rows.push((a, b));
            }
        }
    }

    let mut exact = binomial(rows.len(), k) <= MAX_VERTEX_COMBINATIONS;
    if exact {
        let mut far: Option<(f64, Vec<f64>)> = None;
        for combo in Combinations::new(rows.len(), k) {
            let Some(r) = solve_square(&rows, &combo, k) else {
                continue;
            };
            let scale = 1.0 + r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if rows.iter().any(|(a, b)| dot(a, &r) > b + 1e-9 * scale) {
                continue;
            }
            let n2 = dot(&r, &r);
            if far.as_ref().is_none_or(|(m, _)| n2 > *m) {
                far = Some((n2, r));
            }
        }
        match far {
            Some((n2, r)) if n2 > 0.0 => {
                let rn = n2.sqrt();
                let unit: Vec<f64> = r.iter().map(|v| v / rn).collect();
                let w = width_local(local, active, &unit);
                if w < best_val {
                    best_val = w;
                    best_r = unit;
                }
            }
            _ => exact = false,
        }
    }

    JobResult {
        value: best_val,
        r: best_r,
        exact,
        sampled,
    }
}

/// Solves the square system formed by the selected rows with partial pivoting.
fn solve_square(rows: &[(Vec<f64>, f64)], combo: &[usize], k: usize) -> Option<Vec<f64>> {
    let mut m = [[0.0f64; 7]; 6];
    for (i, &ri) in combo.iter().enumerate() {
        m[i][..k].copy_from_slice(&rows[ri].0);
        m[i][k] = rows[ri].1;
    }
    for col in 0..k {
        let piv = (col..k).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, piv);
        for row in col + 1..k {
            let f = m[row][col] / m[col][col];
            for c in col..=k {
                m[row][c] -= f * m[col][c];
            }
        }
    }
    let mut r = vec![0.0; k];
    for row in (0..k).rev() {
        let mut acc = m[row][k];
        for c in row + 1..k {
            acc -= m[row][c] * r[c];
        }
        r[row] = acc / m[row][row];
    }
    Some(r)
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut out = 0.0;
    while i > 0 {
        f /= base as f64;
        out += f * (i % base) as f64;
        i /= base;
    }
    out
}

/// Unit directions in `R^k` from a Halton sequence pushed through Box–Muller.
/// The seed shifts the starting index of the sequence.
pub fn sphere_directions(k: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];
    if k == 0 {
        return Vec::new();
    }
    let pairs = k.div_ceil(2);
    let offset = 1 + seed.wrapping_mul(7919) % 1_000_003;
    let mut out = Vec::with_capacity(n);
    let mut idx = offset;
    while out.len() < n {
        let mut g = Vec::with_capacity(2 * pairs);
        for p in 0..pairs {
            let u1 = radical_inverse(idx, PRIMES[2 * p]).max(1e-300);
            let u2 = radical_inverse(idx, PRIMES[2 * p + 1]);
            let rad = (-2.0 * u1.ln()).sqrt();
            let ang = 2.0 * std::f64::consts::PI * u2;
            g.push(rad * ang.cos());
            g.push(rad * ang.sin());
        }
        g.truncate(k);
        idx += 1;
        let gn = norm(&g);
        if gn > 1e-12 {
            out.push(g.iter().map(|v| v / gn).collect());
        }
    }
    out
}
