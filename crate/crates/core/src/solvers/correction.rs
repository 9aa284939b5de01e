//! Correction steps: approximate full correction by inner away-steps FW over the
//! correction polytope, and the min-norm-point minor cycle.

use nalgebra::{DMatrix, DVector};

use crate::atoms::Atom;
use crate::error::{FwError, Result};
use crate::iterate::{ActiveIterate, ZERO_WEIGHT};
use crate::linalg::{dot, sub};
use crate::objectives::{Objective, QuadraticObjective};

use super::direction::{afw_choose_direction, DirectionKind};

/// Away gap tolerance asserted at the end of every min-norm-point minor cycle.
pub const MNP_AWAY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct CorrectionResult {
    pub iterate: ActiveIterate,
    /// The correction atom set kept for the next outer iteration; contains the active set.
    pub correction_atoms: Vec<Atom>,
    pub inner_steps: usize,
    /// Away gap over the returned active set.
    pub away_gap: f64,
    /// FW gap over the correction polytope (FCFW only; 0 for MNP).
    pub local_fw_gap: f64,
    /// Objective after the correction.
    pub value: f64,
    /// Objective at the best point of the FW line search from the pre-correction iterate.
    pub fw_line_value: f64,
    /// Step size of that FW line search.
    pub fw_gamma: f64,
}

/// `max_{v ∈ S} ⟨g, v⟩ − ⟨g, x⟩`, clamped at zero.
pub fn away_gap(it: &ActiveIterate, g: &[f64]) -> f64 {
    let gx = dot(g, it.x());
    it.atoms()
        .map(|a| dot(g, &a.point) - gx)
        .fold(0.0f64, f64::max)
}

fn pool_argmin<'a>(pool: &'a [Atom], g: &[f64]) -> &'a Atom {
    let mut best = (0usize, f64::INFINITY);
    for (i, a) in pool.iter().enumerate() {
        let v = dot(g, &a.point);
        if v < best.1 {
            best = (i, v);
        }
    }
    &pool[best.0]
}

/// Approximate correction: a FW line-search step toward `s`, then away-steps FW
/// restricted to `conv(V ∪ {s})` until both its FW gap and away gap are ≤ `eps`.
///
/// Asserts both post-conditions before returning.
pub fn fcfw_correction(
    obj: &dyn Objective,
    x_t: &ActiveIterate,
    v_t: &[Atom],
    s: &Atom,
    eps: f64,
) -> Result<CorrectionResult> {
    if !(eps > 0.0) {
        return Err(FwError::InvalidConfig(format!("correction epsilon {eps} must be positive")));
    }
    let mut pool: Vec<Atom> = Vec::with_capacity(v_t.len() + 1);
    for a in v_t.iter().chain(x_t.atoms().collect::<Vec<_>>().iter()).chain(std::iter::once(s)) {
        if !pool.iter().any(|p| p.id == a.id) {
            pool.push(a.clone());
        }
    }
    let cap = 1000 + 100 * pool.len().pow(2);

    // FW line search from x_t toward s
    let d = sub(&s.point, x_t.x());
    let (f0, _) = obj.value_and_gradient(x_t.x())?;
    let mut y = x_t.clone();
    let mut fw_gamma = 0.0;
    let mut fw_line_value = f0;
    if d.iter().any(|v| *v != 0.0) {
        let ls = obj.line_search(x_t.x(), &d, 1.0)?;
        if ls.gamma > 0.0 {
            let cand = x_t.apply_fw_step(s, ls.gamma)?.iterate;
            let fc = obj.value(cand.x())?;
            if fc <= f0 {
                fw_gamma = ls.gamma;
                fw_line_value = fc;
                y = cand;
            }
        }
    }

    let mut steps = 0usize;
    let (value, local_fw_gap, aw) = loop {
        let (f, g) = obj.value_and_gradient(y.x())?;
        let gx = dot(&g, y.x());
        let s_loc = pool_argmin(&pool, &g);
        let fw_gap = (gx - dot(&g, &s_loc.point)).max(0.0);
        let (v, _) = y.away_atom(&g);
        let aw = (dot(&g, &v.point) - gx).max(0.0);
        if fw_gap <= eps && aw <= eps {
            break (f, fw_gap, aw);
        }
        if steps >= cap {
            return Err(FwError::CorrectionStall {
                steps,
                partial: Box::new(y),
            });
        }
        let dir = afw_choose_direction(&y, &g, s_loc, v.id)?;
        let ls = obj.line_search(y.x(), &dir.d, dir.gamma_max)?;
        if ls.non_descent || ls.gamma == 0.0 {
            return Err(FwError::CorrectionStall {
                steps,
                partial: Box::new(y),
            });
        }
        y = match dir.kind {
            DirectionKind::Away => y.apply_away_step(v.id, ls.gamma, dir.gamma_max)?.iterate,
            _ => y.apply_fw_step(s_loc, ls.gamma)?.iterate,
        };
        steps += 1;
    };

    if aw > eps {
        return Err(FwError::ContractViolation(format!(
            "correction away gap {aw} exceeds {eps}"
        )));
    }
    if value > fw_line_value + 1e-12 * fw_line_value.abs().max(1.0) {
        return Err(FwError::ContractViolation(format!(
            "correction value {value} worse than FW line search value {fw_line_value}"
        )));
    }
    Ok(CorrectionResult {
        iterate: y,
        correction_atoms: pool,
        inner_steps: steps,
        away_gap: aw,
        local_fw_gap,
        value,
        fw_line_value,
        fw_gamma,
    })
}

/// Trims the correction set to at most `4·|S|` atoms, keeping every active atom and
/// evicting inactive ones oldest-first. `pool` must be in insertion order.
pub fn retain_correction_atoms(pool: Vec<Atom>, active: &ActiveIterate) -> Vec<Atom> {
    let cap = 4 * active.len();
    let inactive = pool.iter().filter(|a| !active.contains(a.id)).count();
    let mut evict = (active.len() + inactive).saturating_sub(cap);
    pool.into_iter()
        .filter(|a| {
            if active.contains(a.id) {
                true
            } else if evict > 0 {
                evict -= 1;
                false
            } else {
                true
            }
        })
        .collect()
}

/// Solves `min f` over `aff{atoms}` starting from barycentric weights `z`; returns the
/// minimizer's barycentric coordinates, or `None` when the reduced Hessian is singular.
fn affine_minimizer(q: &QuadraticObjective, atoms: &[Atom], z: &[f64]) -> Option<Vec<f64>> {
    let k = atoms.len();
    if k == 1 {
        return Some(vec![1.0]);
    }
    let dim = atoms[0].dim();
    let mut x = vec![0.0; dim];
    for (a, w) in atoms.iter().zip(z) {
        crate::linalg::axpy(*w, &a.point, &mut x);
    }
    let g: Vec<f64> = q.q_times(&x).iter().zip(q.b()).map(|(a, b)| a + b).collect();
    let a0 = &atoms[0].point;
    let w = DMatrix::from_fn(dim, k - 1, |i, j| atoms[j + 1].point[i] - a0[i]);
    let h = w.transpose() * q.q() * &w;
    let eig = h.clone().symmetric_eigen();
    let (emin, emax) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    if !(emin > 1e-12 * emax.max(1e-300)) {
        return None;
    }
    let rhs = -(w.transpose() * DVector::from_column_slice(&g));
    let delta = h.cholesky()?.solve(&rhs);
    let mut lam = z.to_vec();
    for i in 1..k {
        lam[i] += delta[i - 1];
    }
    lam[0] = z[0] - delta.sum();
    Some(lam)
}

/// Removes one atom by moving along an affine dependence of `atoms` while keeping the
/// generated point fixed. The atom at `protect` (if any) is kept when possible.
fn caratheodory_reduce(atoms: &mut Vec<Atom>, z: &mut Vec<f64>, protect: Option<usize>) -> Result<()> {
    let k = atoms.len();
    let dim = atoms[0].dim();
    let m = DMatrix::from_fn(dim + 1, k, |i, j| if i < dim { atoms[j].point[i] } else { 1.0 });
    let scale = m.amax().max(1.0);
    let (c, smin) = if k > dim + 1 {
        // more columns than rows: a null vector always exists
        let svd = (m.transpose() * &m).symmetric_eigen();
        let j = svd.eigenvalues.imin();
        (svd.eigenvectors.column(j).clone_owned(), svd.eigenvalues[j].max(0.0).sqrt())
    } else {
        let svd = m.clone().svd(false, true);
        let vt = svd.v_t.expect("svd v");
        let j = svd.singular_values.imin();
        (vt.row(j).transpose(), svd.singular_values[j])
    };
    if smin > 1e-8 * scale {
        return Err(FwError::DegenerateActiveSet(
            "affine minimizer is not unique on the active hull (objective not strongly convex there)".into(),
        ));
    }
    let mut c: Vec<f64> = c.iter().copied().collect();
    if let Some(p) = protect {
        if c[p] > 0.0 {
            c.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let mut best: Option<(usize, f64)> = None;
    for i in 0..k {
        if c[i] > 0.0 && Some(i) != protect {
            let t = z[i] / c[i];
            if best.is_none_or(|(_, bt)| t < bt) {
                best = Some((i, t));
            }
        }
    }
    let (i, t) = best.ok_or_else(|| FwError::DegenerateActiveSet("no reducible atom".into()))?;
    for j in 0..k {
        z[j] = (z[j] - t * c[j]).max(0.0);
    }
    atoms.remove(i);
    z.remove(i);
    let sum: f64 = z.iter().sum();
    z.iter_mut().for_each(|v| *v /= sum);
    Ok(())
}

/// One min-norm-point correction: add `s` to the active set and run the minor cycle of
/// affine minimizations and boundary line searches until the affine minimizer lies in
/// the relative interior, then check that the away gap is ≤ 1e-9.
pub fn mnp_correction(q: &QuadraticObjective, x_t: &ActiveIterate, s: &Atom) -> Result<CorrectionResult> {
    let mut atoms: Vec<Atom> = x_t.atoms().collect();
    atoms.sort_by_key(|a| a.id);
    let mut z: Vec<f64> = atoms.iter().map(|a| x_t.weight(a.id).unwrap()).collect();
    if !atoms.iter().any(|a| a.id == s.id) {
        atoms.push(s.clone());
        z.push(0.0);
    }
    let s_index = |atoms: &[Atom]| atoms.iter().position(|a| a.id == s.id);
    let f_start = q.value(x_t.x())?;

    let max_cycles = 20 * (atoms.len() + 2);
    let mut reductions = 0usize;
    let mut inner = 0usize;
    loop {
        if inner > max_cycles {
            return Err(FwError::DegenerateActiveSet(format!(
                "minor cycle did not terminate after {inner} steps"
            )));
        }
        inner += 1;
        let lam = match affine_minimizer(q, &atoms, &z) {
            Some(l) => l,
            None => {
                reductions += 1;
                if reductions > atoms.len() + 1 || atoms.len() == 1 {
                    return Err(FwError::DegenerateActiveSet("persistent singular affine system".into()));
                }
                let p = s_index(&atoms);
                caratheodory_reduce(&mut atoms, &mut z, p)?;
                continue;
            }
        };
        if lam.iter().all(|l| *l > ZERO_WEIGHT) {
            let it = ActiveIterate::from_weights(
                &atoms.iter().cloned().zip(lam.iter().copied()).collect::<Vec<_>>(),
            )?;
            let g = q.gradient(it.x())?;
            let aw = away_gap(&it, &g);
            if aw <= MNP_AWAY_TOLERANCE {
                let value = q.value(it.x())?;
                if value > f_start + 1e-12 * f_start.abs().max(1.0) {
                    return Err(FwError::ContractViolation(format!(
                        "minor cycle increased f from {f_start} to {value}"
                    )));
                }
                return Ok(CorrectionResult {
                    correction_atoms: it.atoms().collect(),
                    iterate: it,
                    inner_steps: inner,
                    away_gap: aw,
                    local_fw_gap: 0.0,
                    value,
                    fw_line_value: f_start,
                    fw_gamma: 0.0,
                });
            }
            // refine from the rounded minimizer
            z = lam;
            continue;
        }
        // boundary step toward the affine minimizer; weights that are nonnegative but
        // below ZERO_WEIGHT are reached at theta = 1 and pruned below
        let mut theta = 1.0f64;
        let mut hit = None;
        for i in 0..atoms.len() {
            if lam[i] < 0.0 {
                let t = if z[i] - lam[i] > 0.0 { z[i] / (z[i] - lam[i]) } else { 0.0 };
                if t < theta {
                    theta = t;
                    hit = Some(i);
                }
            }
        }
        for i in 0..atoms.len() {
            z[i] = (1.0 - theta) * z[i] + theta * lam[i];
        }
        if let Some(h) = hit {
            z[h] = 0.0;
        }
        let mut i = 0;
        while i < atoms.len() {
            if z[i] < ZERO_WEIGHT {
                atoms.remove(i);
                z.remove(i);
            } else {
                i += 1;
            }
        }
        let sum: f64 = z.iter().sum();
        z.iter_mut().for_each(|v| *v /= sum);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::AtomStore;

    #[test]
    fn mnp_keeps_atoms_when_minimizer_lies_on_a_facet() {
        // the minimizer (−0.5, 0) sits on the edge opposite the apex, whose affine
        // weight then rounds to a tiny positive value
        let mut st = AtomStore::new();
        let a = st.intern(&[-1.0, 0.0]);
        let apex = st.intern(&[(std::f64::consts::PI / 8.0).cos(), (std::f64::consts::PI / 8.0).sin()]);
        let b = st.intern(&[0.0, 0.0]);
        let f = QuadraticObjective::squared_distance(&[-0.5, 0.0]).unwrap();
        let x = ActiveIterate::from_weights(&[(a, 0.75), (apex, 0.25)]).unwrap();
        let r = mnp_correction(&f, &x, &b).unwrap();
        assert!(r.value < 1e-20, "{}", r.value);
        assert_eq!(r.iterate.len(), 2);
    }

    #[test]
    fn fcfw_segment_correction() {
        let mut st = AtomStore::new();
        let e1 = st.intern(&[1.0, 0.0]);
        let e2 = st.intern(&[0.0, 1.0]);
        let f = QuadraticObjective::squared_distance(&[0.25, 0.75]).unwrap();
        let x0 = ActiveIterate::from_atom(&e1);
        let r = fcfw_correction(&f, &x0, &[e1.clone()], &e2, 1e-12).unwrap();
        assert!((r.iterate.x()[0] - 0.25).abs() < 1e-12);
        assert!((r.iterate.x()[1] - 0.75).abs() < 1e-12);
        assert!(r.away_gap <= 1e-12);

        // already optimal over the correction polytope
        let again = fcfw_correction(&f, &r.iterate, &r.correction_atoms, &e2, 1e-12).unwrap();
        assert_eq!(again.inner_steps, 0);
        assert_eq!(again.iterate.x(), r.iterate.x());
    }

    #[test]
    fn mnp_interior_segment() {
        let mut st = AtomStore::new();
        let a = st.intern(&[0.0, 0.0]);
        let b = st.intern(&[1.0, 0.0]);
        let f = QuadraticObjective::squared_distance(&[0.3, 5.0]).unwrap();
        let r = mnp_correction(&f, &ActiveIterate::from_atom(&a), &b).unwrap();
        assert!((r.iterate.x()[0] - 0.3).abs() < 1e-14);
        assert_eq!(r.iterate.len(), 2);
    }

    #[test]
    fn mnp_clipped_segment_drops_one() {
        let mut st = AtomStore::new();
        let a = st.intern(&[0.0, 0.0]);
        let b = st.intern(&[1.0, 0.0]);
        let f = QuadraticObjective::squared_distance(&[2.0, 1.0]).unwrap();
        let r = mnp_correction(&f, &ActiveIterate::from_atom(&a), &b).unwrap();
        assert_eq!(r.iterate.len(), 1);
        assert!(r.iterate.contains(b.id));
        assert_eq!(r.iterate.x(), &[1.0, 0.0]);
    }

    #[test]
    fn retention_policy_keeps_active_and_newest() {
        let mut st = AtomStore::new();
        let atoms: Vec<Atom> = (0..6).map(|i| st.intern(&[i as f64])).collect();
        let it = ActiveIterate::from_atom(&atoms[2]);
        let kept = retain_correction_atoms(atoms.clone(), &it);
        let ids: Vec<u64> = kept.iter().map(|a| a.id.0).collect();
        assert_eq!(ids, vec![2, 3, 4, 5]);
    }
}
