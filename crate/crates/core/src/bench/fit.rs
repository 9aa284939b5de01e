//! Log-linear rate fits on solver traces.

use serde::{Deserialize, Serialize};

use crate::error::{FwError, Result};
use crate::iterate::StepKind;
use crate::trace::RunTrace;

pub const MIN_FIT_POINTS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Quantity {
    FwGap,
    FGapToOpt { f_star: f64 },
}

/// Fractions of the usable iteration range that bound the fit window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Default for Window {
    fn default() -> Self {
        Self { start: 0.2, end: 0.8 }
    }
}

impl Window {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.start && self.start < self.end && self.end <= 1.0) {
            return Err(FwError::InvalidConfig(format!(
                "fit window [{}, {}] must satisfy 0 <= start < end <= 1",
                self.start, self.end
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rho_hat: f64,
    pub r_squared: f64,
    /// First and last iteration included in the fit.
    pub window: (usize, usize),
    pub points: usize,
    pub theoretical_rho: Option<f64>,
}

/// Least-squares fit of `log y` against `t`. Returns the negated slope and `r²`; a
/// series with no variation in `log y` has `r² = 1`.
pub fn fit_series(t: &[f64], y: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let tm = t.iter().sum::<f64>() / n;
    let ym = ly.iter().sum::<f64>() / n;
    let stt: f64 = t.iter().map(|v| (v - tm).powi(2)).sum();
    let sty: f64 = t.iter().zip(&ly).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let syy: f64 = ly.iter().map(|v| (v - ym).powi(2)).sum();
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    let ss_res: f64 = t
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - ym - slope * (a - tm)).powi(2))
        .sum();
    let tol = 1e-24 * (1.0 + ym * ym) * n;
    let r2 = if syy <= tol { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    (-slope + 0.0, r2)
}

/// Fits `q_t ≈ q_0 exp(−ρ t)` on a window of the trace.
///
/// The series is truncated before its first non-positive value. The window is
/// taken as fractions of the remaining iteration range. With `exclude_drops`, the
/// values recorded after drop steps are left out.
pub fn fit_rate(trace: &RunTrace, quantity: Quantity, window: Window, exclude_drops: bool) -> Result<RateFit> {
    window.validate()?;
    let mut series: Vec<(usize, f64, StepKind)> = Vec::new();
    for r in &trace.records {
        let v = match quantity {
            Quantity::FwGap => r.fw_gap,
            Quantity::FGapToOpt { f_star } => r.f_value - f_star,
        };
        if !(v > 0.0 && v.is_finite()) {
            break;
        }
        series.push((r.iteration, v, r.kind));
    }
    if series.is_empty() {
        return Err(FwError::InsufficientData("no positive values to fit".into()));
    }
    let first = series[0].0 as f64;
    let last = series[series.len() - 1].0 as f64;
    let span = last - first;
    let lo = (first + window.start * span).floor() as usize;
    let hi = (first + window.end * span).ceil() as usize;
    let (t, y): (Vec<f64>, Vec<f64>) = series
        .iter()
        .filter(|(it, _, kind)| *it >= lo && *it <= hi && !(exclude_drops && *kind == StepKind::Drop))
        .map(|(it, v, _)| (*it as f64, *v))
        .unzip();
    if t.len() < MIN_FIT_POINTS {
        return Err(FwError::InsufficientData(format!(
            "fit window holds {} points, need at least {MIN_FIT_POINTS}",
            t.len()
        )));
    }
    let (rho_hat, r_squared) = fit_series(&t, &y);
    Ok(RateFit {
        rho_hat,
        r_squared,
        window: (t[0] as usize, t[t.len() - 1] as usize),
        points: t.len(),
        theoretical_rho: None,
    })
}
