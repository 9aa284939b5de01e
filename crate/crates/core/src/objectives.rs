//! Smooth convex objectives, line search and curvature constants.

use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FwError, Result};
use crate::linalg::dot;
use crate::oracles::PolytopeSpec;

/// Result of a one-dimensional search along a direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSearch {
    pub gamma: f64,
    /// Set when `⟨−∇f(x), d⟩ ≤ 0`, i.e. `d` is not a descent direction.
    pub non_descent: bool,
}

pub trait Objective: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)>;

    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.value_and_gradient(x)?.0)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.value_and_gradient(x)?.1)
    }

    /// `argmin_{γ ∈ [0, γ_max]} f(x + γ d)`. The default is golden-section search down to
    /// an interval of width `1e-12·γ_max`.
    fn line_search(&self, x: &[f64], d: &[f64], gamma_max: f64) -> Result<LineSearch> {
        check_search_args(self.dim(), x, d, gamma_max)?;
        let g = self.gradient(x)?;
        let slope = dot(&g, d);
        if slope >= 0.0 {
            return Ok(LineSearch {
                gamma: 0.0,
                non_descent: true,
            });
        }
        let phi = |t: f64| -> Result<f64> {
            let p: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + t * b).collect();
            self.value(&p)
        };
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (0.0, gamma_max);
        let mut c = hi - inv_phi * (hi - lo);
        let mut e = lo + inv_phi * (hi - lo);
        let mut fc = phi(c)?;
        let mut fe = phi(e)?;
        while hi - lo > 1e-12 * gamma_max {
            if fc <= fe {
                hi = e;
                e = c;
                fe = fc;
                c = hi - inv_phi * (hi - lo);
                fc = phi(c)?;
            } else {
                lo = c;
                c = e;
                fc = fe;
                e = lo + inv_phi * (hi - lo);
                fe = phi(e)?;
            }
        }
        let mid = 0.5 * (lo + hi);
        let mut best = (mid, phi(mid)?);
        for t in [0.0, gamma_max] {
            let v = phi(t)?;
            if v < best.1 {
                best = (t, v);
            }
        }
        Ok(LineSearch {
            gamma: best.0,
            non_descent: false,
        })
    }

    fn as_quadratic(&self) -> Option<&QuadraticObjective> {
        None
    }

    /// Known Lipschitz constant of the gradient and strong convexity constant.
    fn curvature(&self) -> (Option<f64>, Option<f64>) {
        (None, None)
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "kind": "custom", "dim": self.dim() })
    }
}

fn check_search_args(dim: usize, x: &[f64], d: &[f64], gamma_max: f64) -> Result<()> {
    check_dim(dim, x)?;
    check_dim(dim, d)?;
    if !(gamma_max > 0.0 && gamma_max.is_finite()) {
        return Err(FwError::ContractViolation(format!(
            "gamma_max must be positive, got {gamma_max}"
        )));
    }
    if d.iter().all(|v| *v == 0.0) {
        return Err(FwError::ContractViolation("zero search direction".into()));
    }
    Ok(())
}

fn check_dim(dim: usize, x: &[f64]) -> Result<()> {
    if x.len() != dim {
        return Err(FwError::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    Ok(())
}

/// `f(x) = ½ xᵀQx + bᵀx + c` with `Q` symmetric positive semidefinite.
#[derive(Clone, Debug)]
pub struct QuadraticObjective {
    q: DMatrix<f64>,
    b: Vec<f64>,
    c: f64,
    lambda_max: f64,
    lambda_min: f64,
}

impl QuadraticObjective {
    pub fn new(q: DMatrix<f64>, b: Vec<f64>, c: f64) -> Result<Self> {
        let d = q.nrows();
        if d == 0 || q.ncols() != d {
            return Err(FwError::InvalidObjective(format!(
                "Q must be square and nonempty, got {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        check_dim(d, &b)?;
        if q.iter().chain(b.iter()).any(|v| !v.is_finite()) || !c.is_finite() {
            return Err(FwError::NonFiniteInput("quadratic coefficients".into()));
        }
        let scale = q.amax().max(1.0);
        let asym = (&q - q.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(FwError::InvalidObjective(format!("Q is not symmetric (max |Q-Qᵀ| = {asym})")));
        }
        let q = (&q + q.transpose()) * 0.5;
        let eig = q.clone().symmetric_eigen();
        let lambda_max = eig.eigenvalues.max();
        let lambda_min = eig.eigenvalues.min();
        if lambda_min < -1e-10 * lambda_max.abs().max(1.0) {
            return Err(FwError::InvalidObjective(format!(
                "Q is not positive semidefinite (λ_min = {lambda_min})"
            )));
        }
        Ok(Self {
            q,
            b,
            c,
            lambda_max,
            lambda_min,
        })
    }

    /// `f(x) = ½‖x − center‖²`.
    /// Like [`QuadraticObjective::new`] with `Q` given as `dim × dim` row-major values.
    pub fn from_row_major(dim: usize, q: &[f64], b: Vec<f64>, c: f64) -> Result<Self> {
        if q.len() != dim * dim {
            return Err(FwError::DimensionMismatch {
                expected: dim * dim,
                got: q.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, q), b, c)
    }

    pub fn squared_distance(center: &[f64]) -> Result<Self> {
        let d = center.len();
        let c = 0.5 * dot(center, center);
        Self::new(DMatrix::identity(d, d), center.iter().map(|v| -v).collect(), c)
    }

    /// `f(x) = ‖Ax − y‖²`, i.e. `Q = 2AᵀA`, `b = −2Aᵀy`, `c = ‖y‖²`.
    pub fn from_least_squares(a: &DMatrix<f64>, y: &[f64]) -> Result<Self> {
        if a.nrows() != y.len() {
            return Err(FwError::DimensionMismatch {
                expected: a.nrows(),
                got: y.len(),
            });
        }
        let yv = DVector::from_column_slice(y);
        let q = a.transpose() * a * 2.0;
        let b = (a.transpose() * &yv * -2.0).iter().copied().collect();
        Self::new(q, b, yv.norm_squared())
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn q_times(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut out = vec![0.0; n];
        // column-major storage: accumulate columns
        for (j, xj) in x.iter().enumerate() {
            if *xj == 0.0 {
                continue;
            }
            let col = self.q.column(j);
            for i in 0..n {
                out[i] += col[i] * xj;
            }
        }
        out
    }

    /// Exact clipped minimizer along `d`.
    pub fn exact_line_search(&self, g: &[f64], d: &[f64], gamma_max: f64) -> LineSearch {
        let num = -dot(g, d);
        let den = dot(d, &self.q_times(d));
        if den <= 0.0 {
            return if num > 0.0 {
                LineSearch {
                    gamma: gamma_max,
                    non_descent: false,
                }
            } else {
                LineSearch {
                    gamma: 0.0,
                    non_descent: true,
                }
            };
        }
        LineSearch {
            gamma: (num / den).clamp(0.0, gamma_max),
            non_descent: num <= 0.0,
        }
    }
}

impl Objective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_dim(self.dim(), x)?;
        let qx = self.q_times(x);
        let f = 0.5 * dot(x, &qx) + dot(&self.b, x) + self.c;
        let g = qx.iter().zip(&self.b).map(|(a, b)| a + b).collect();
        Ok((f, g))
    }

    fn line_search(&self, x: &[f64], d: &[f64], gamma_max: f64) -> Result<LineSearch> {
        check_search_args(self.dim(), x, d, gamma_max)?;
        let g = self.gradient(x)?;
        Ok(self.exact_line_search(&g, d, gamma_max))
    }

    fn as_quadratic(&self) -> Option<&QuadraticObjective> {
        Some(self)
    }

    fn curvature(&self) -> (Option<f64>, Option<f64>) {
        (Some(self.lambda_max), Some(self.lambda_min.max(0.0)))
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": "quadratic",
            "dim": self.dim(),
            "lambda_max": self.lambda_max,
            "lambda_min": self.lambda_min,
        })
    }
}

/// Closure-backed objective for non-quadratic experiments; uses golden-section search.
#[derive(Clone)]
pub struct FnObjective {
    dim: usize,
    f: Arc<dyn Fn(&[f64]) -> (f64, Vec<f64>) + Send + Sync>,
    lipschitz: Option<f64>,
}

impl FnObjective {
    pub fn new(
        dim: usize,
        f: impl Fn(&[f64]) -> (f64, Vec<f64>) + Send + Sync + 'static,
        lipschitz: Option<f64>,
    ) -> Self {
        Self {
            dim,
            f: Arc::new(f),
            lipschitz,
        }
    }
}

impl fmt::Debug for FnObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnObjective").field("dim", &self.dim).finish()
    }
}

impl Objective for FnObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_dim(self.dim, x)?;
        Ok((self.f)(x))
    }

    fn curvature(&self) -> (Option<f64>, Option<f64>) {
        (self.lipschitz, None)
    }
}

/// `L = λ_max(Q)`, `μ = λ_min(Q)` (clamped at 0) and `M = diam(conv 𝒜)`.
///
/// For quadratics `λ_max(Q)` is a global Lipschitz constant, so the requirement that
/// `∇f` be Lipschitz on the enlarged domain `ℳ + ℳ − ℳ` needs no adjustment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactConstants {
    #[serde(rename = "L")]
    pub l: f64,
    pub mu: f64,
    #[serde(rename = "M")]
    pub m: f64,
}

pub fn exact_constants(obj: &dyn Objective, spec: &PolytopeSpec) -> Result<ExactConstants> {
    let q = obj.as_quadratic().ok_or(FwError::NotQuadratic("exact_constants"))?;
    if q.dim() != spec.dim() {
        return Err(FwError::DimensionMismatch {
            expected: spec.dim(),
            got: q.dim(),
        });
    }
    Ok(ExactConstants {
        l: q.lambda_max,
        mu: q.lambda_min.max(0.0),
        m: spec.diameter()?,
    })
}

/// Sampled affine-invariant constants alongside the exact `L` and `μ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureEstimates {
    #[serde(rename = "L")]
    pub l: f64,
    pub mu: f64,
    pub c_f_hat: f64,
    pub c_fa_hat: f64,
    pub mu_fa_hat: f64,
}

/// Reads a dense matrix from CSV (no header, one row per line).
pub fn read_matrix_csv<R: Read>(r: R) -> Result<DMatrix<f64>> {
    let rows = crate::oracles::read_vertex_csv(r)?;
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.is_empty() || ncols == 0 {
        return Err(FwError::Parse("empty matrix".into()));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(FwError::DimensionMismatch {
            expected: ncols,
            got: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for i in 0..m.nrows() {
        wtr.write_record(m.row(i).iter().map(|v| v.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}
