//! Direction selection for the away-step and pairwise variants.

use crate::atoms::{Atom, AtomId};
use crate::error::{FwError, Result};
use crate::iterate::ActiveIterate;
use crate::linalg::{dot, sub};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DirectionKind {
    Fw,
    Away,
    Pairwise,
}

#[derive(Clone, Debug)]
pub struct Direction {
    pub d: Vec<f64>,
    pub gamma_max: f64,
    pub kind: DirectionKind,
    /// `⟨−grad, d⟩` for the chosen direction.
    pub slope: f64,
}

/// Chooses between the FW direction `s − x` and the away direction `x − v`.
///
/// The FW branch wins ties and is forced when the active set is a single atom, since
/// the away step is undefined there.
pub fn afw_choose_direction(it: &ActiveIterate, grad: &[f64], s: &Atom, v: AtomId) -> Result<Direction> {
    let alpha = it.weight(v).ok_or(FwError::InactiveAtom(v.0))?;
    let x = it.x();
    let d_fw = sub(&s.point, x);
    let fw = -dot(grad, &d_fw);
    if it.len() == 1 {
        return Ok(Direction {
            d: d_fw,
            gamma_max: 1.0,
            kind: DirectionKind::Fw,
            slope: fw,
        });
    }
    let vpoint = it.atom(v).unwrap().point;
    let d_a = sub(x, &vpoint);
    let away = -dot(grad, &d_a);
    if fw >= away {
        Ok(Direction {
            d: d_fw,
            gamma_max: 1.0,
            kind: DirectionKind::Fw,
            slope: fw,
        })
    } else {
        Ok(Direction {
            d: d_a,
            gamma_max: alpha / (1.0 - alpha),
            kind: DirectionKind::Away,
            slope: away,
        })
    }
}

/// The pairwise direction `s − v` with `γ_max = α_v`.
pub fn pfw_step(it: &ActiveIterate, grad: &[f64], s: &Atom, v: AtomId) -> Result<Direction> {
    if s.id == v {
        return Err(FwError::DegenerateDirection);
    }
    let alpha = it.weight(v).ok_or(FwError::InactiveAtom(v.0))?;
    let vpoint = it.atom(v).unwrap().point;
    let d = sub(&s.point, &vpoint);
    let slope = -dot(grad, &d);
    Ok(Direction {
        d,
        gamma_max: alpha,
        kind: DirectionKind::Pairwise,
        slope,
    })
}
