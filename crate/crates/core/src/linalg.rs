//! Small dense-vector helpers shared across modules.

use nalgebra::{DMatrix, DVector};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn scale(alpha: f64, a: &[f64]) -> Vec<f64> {
    a.iter().map(|v| alpha * v).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Orthonormal basis of the affine hull of `points`, as columns of a `dim × k` matrix,
/// together with the anchor (first point) the coordinates are taken relative to.
pub struct AffineFrame {
    pub anchor: Vec<f64>,
    pub basis: DMatrix<f64>,
}

impl AffineFrame {
    pub fn new(points: &[&[f64]]) -> Self {
        let dim = points[0].len();
        let anchor = points[0].to_vec();
        if points.len() == 1 {
            return Self {
                anchor,
                basis: DMatrix::zeros(dim, 0),
            };
        }
        let diffs = DMatrix::from_fn(dim, points.len() - 1, |i, j| points[j + 1][i] - anchor[i]);
        let scale = diffs.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let svd = diffs.clone().svd(true, false);
        let u = svd.u.expect("svd u");
        let cols: Vec<usize> = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, s)| **s > 1e-10 * scale)
            .map(|(i, _)| i)
            .collect();
        let basis = DMatrix::from_fn(dim, cols.len(), |i, j| u[(i, cols[j])]);
        Self { anchor, basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn to_local(&self, p: &[f64]) -> Vec<f64> {
        let d = DVector::from_iterator(p.len(), p.iter().zip(&self.anchor).map(|(a, b)| a - b));
        (self.basis.transpose() * d).iter().copied().collect()
    }

    /// Maps a local direction (not a point) back to ambient coordinates.
    pub fn direction_to_ambient(&self, r: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(r);
        (&self.basis * v).iter().copied().collect()
    }
}

/// Barycentric coordinates of `x` with respect to `points`, when the points are
/// affinely independent and `x` lies in their affine hull. Returns `None` otherwise.
pub fn barycentric(points: &[&[f64]], x: &[f64]) -> Option<Vec<f64>> {
    let k = points.len();
    let dim = x.len();
    if k == 1 {
        let scale = 1.0 + norm_inf(points[0]).max(norm_inf(x));
        return (dist(points[0], x) <= 1e-9 * scale).then(|| vec![1.0]);
    }
    let v0 = points[0];
    let w = DMatrix::from_fn(dim, k - 1, |i, j| points[j + 1][i] - v0[i]);
    let rhs = DVector::from_iterator(dim, x.iter().zip(v0).map(|(a, b)| a - b));
    let gram = w.transpose() * &w;
    let scale = gram.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let eig = gram.clone().symmetric_eigen();
    let min_eig = eig.eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if min_eig <= 1e-12 * scale {
        return None;
    }
    let mu = gram.cholesky()?.solve(&(w.transpose() * &rhs));
    let resid = &w * &mu - &rhs;
    let xscale = 1.0 + points.iter().map(|p| norm_inf(p)).fold(norm_inf(x), f64::max);
    if resid.amax() > 1e-9 * xscale {
        return None;
    }
    let mut lam = Vec::with_capacity(k);
    lam.push(1.0 - mu.sum());
    lam.extend(mu.iter().copied());
    Some(lam)
}

/// Whether `points` are affinely independent.
pub fn affinely_independent(points: &[&[f64]]) -> bool {
    if points.len() <= 1 {
        return true;
    }
    AffineFrame::new(points).dim() == points.len() - 1
}

/// Iterator over all index subsets of `0..n` of size `k`, in lexicographic order.
pub struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            idx: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
