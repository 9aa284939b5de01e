//! Problem generators for the benchmark experiments.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{FwError, Result};
use crate::linalg::{dot, norm};
use crate::objectives::QuadraticObjective;
use crate::oracles::PolytopeSpec;

pub const LASSO_RADIUS: f64 = 20.0;
/// Midpoint of the edge from `(−1,0)` to `(0,0)`; the optimum lies on that edge.
pub const TRIANGLE_TARGET: [f64; 2] = [-0.5, 0.0];
/// Alternative target `(−0.5, 1)`, which lies outside every triangle of the family.
pub const TRIANGLE_TARGET_OUTSIDE: [f64; 2] = [-0.5, 1.0];

pub const NOISE_MODEL: &str =
    "b = A x_true + noise * ||A x_true||_2 / sqrt(m) * g, g ~ N(0, I_m); objective ||Ax - b||^2";

#[derive(Clone, Debug)]
pub struct LassoInstance {
    pub obj: QuadraticObjective,
    pub spec: PolytopeSpec,
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
    pub x_true: Vec<f64>,
}

/// Gaussian design `A ∈ R^{m×n}`, a `k`-sparse `±1` signal and additive Gaussian noise,
/// minimized over the L1 ball of the given radius.
pub fn gen_lasso(m: usize, n: usize, k: usize, noise: f64, seed: u64, radius: f64) -> Result<LassoInstance> {
    if m == 0 || n == 0 {
        return Err(FwError::InvalidConfig("lasso dimensions must be positive".into()));
    }
    if k > n {
        return Err(FwError::InvalidConfig(format!("sparsity {k} exceeds n = {n}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(FwError::InvalidConfig(format!("noise level {noise} must be non-negative")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    let mut x_true = vec![0.0; n];
    for &i in &idx[..k] {
        x_true[i] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    }
    let clean: Vec<f64> = (&a * nalgebra::DVector::from_column_slice(&x_true)).iter().copied().collect();
    let sigma = noise * norm(&clean) / (m as f64).sqrt();
    let b: Vec<f64> = clean
        .iter()
        .map(|v| v + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let obj = QuadraticObjective::from_least_squares(&a, &b)?;
    let spec = PolytopeSpec::l1_ball(n, radius)?;
    Ok(LassoInstance {
        obj,
        spec,
        a,
        b,
        x_true,
    })
}

#[derive(Clone, Debug)]
pub struct TriangleInstance {
    pub theta: f64,
    pub obj: QuadraticObjective,
    pub spec: PolytopeSpec,
    pub vertices: Vec<Vec<f64>>,
    /// Pyramidal width `sin(θ/2)`.
    pub delta: f64,
    /// Diameter `2 cos(θ/2)`.
    pub diameter: f64,
    /// Exact optimal value over the triangle.
    pub f_star: f64,
}

/// Triangle with corners `(−1,0)`, `(0,0)`, `(cos θ, sin θ)` and `f = ½‖x − x*‖²` with
/// `x* =` [`TRIANGLE_TARGET`].
pub fn gen_triangle(theta: f64) -> Result<TriangleInstance> {
    gen_triangle_with_target(theta, TRIANGLE_TARGET)
}

pub fn gen_triangle_with_target(theta: f64, target: [f64; 2]) -> Result<TriangleInstance> {
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
        return Err(FwError::InvalidConfig(format!("theta {theta} must lie in (0, pi/2)")));
    }
    let vertices = vec![vec![-1.0, 0.0], vec![0.0, 0.0], vec![theta.cos(), theta.sin()]];
    let obj = QuadraticObjective::squared_distance(&target)?;
    let spec = PolytopeSpec::vertex_list(vertices.clone())?;
    let p = closest_point_in_triangle(&vertices, &target);
    let diff = [p[0] - target[0], p[1] - target[1]];
    let f_star = 0.5 * dot(&diff, &diff);
    Ok(TriangleInstance {
        theta,
        obj,
        spec,
        vertices,
        delta: (theta / 2.0).sin(),
        diameter: 2.0 * (theta / 2.0).cos(),
        f_star,
    })
}

/// Euclidean projection of `y` onto a planar triangle.
pub fn closest_point_in_triangle(v: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let cross = |o: &[f64], a: &[f64], b: &[f64]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let orient = cross(&v[0], &v[1], &v[2]).signum();
    let inside = (0..3).all(|i| orient * cross(&v[i], &v[(i + 1) % 3], y) >= 0.0);
    if inside {
        return y.to_vec();
    }
    let mut best = v[0].clone();
    let mut best_d = f64::INFINITY;
    for i in 0..3 {
        let (a, b) = (&v[i], &v[(i + 1) % 3]);
        let ab = [b[0] - a[0], b[1] - a[1]];
        let t = ((y[0] - a[0]) * ab[0] + (y[1] - a[1]) * ab[1]) / dot(&ab, &ab);
        let t = t.clamp(0.0, 1.0);
        let p = vec![a[0] + t * ab[0], a[1] + t * ab[1]];
        let d = (p[0] - y[0]).powi(2) + (p[1] - y[1]).powi(2);
        if d < best_d {
            best_d = d;
            best = p;
        }
    }
    best
}

#[derive(Clone, Debug)]
pub struct RankDefInstance {
    pub obj: QuadraticObjective,
    pub spec: PolytopeSpec,
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
    /// The simplex point used to build `b`; it attains `f = 0`.
    pub x_ref: Vec<f64>,
}

/// `f(x) = ‖Ax − b‖²` over `Simplex(d)` with `A ∈ R^{rank×d}` Gaussian and
/// `b = A u` for a uniformly random simplex point `u`.
pub fn gen_rankdef(d: usize, rank: usize, seed: u64) -> Result<RankDefInstance> {
    if rank == 0 || rank >= d {
        return Err(FwError::InvalidConfig(format!("rank {rank} must lie in 1..{d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(rank, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let e: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = e.iter().sum();
    let x_ref: Vec<f64> = e.iter().map(|v| v / total).collect();
    let b: Vec<f64> = (&a * nalgebra::DVector::from_column_slice(&x_ref)).iter().copied().collect();
    let obj = QuadraticObjective::from_least_squares(&a, &b)?;
    let spec = PolytopeSpec::simplex(d)?;
    Ok(RankDefInstance { obj, spec, a, b, x_ref })
}

/// Random convex weights over `n` atoms drawn from a flat Dirichlet distribution.
pub fn dirichlet_weights(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = e.iter().sum();
    e.iter().map(|v| v / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::Objective;

    #[test]
    fn lasso_shapes_and_signal() {
        let inst = gen_lasso(50, 120, 12, 0.1, 7, LASSO_RADIUS).unwrap();
        assert_eq!(inst.a.shape(), (50, 120));
        assert_eq!(inst.x_true.iter().filter(|v| **v != 0.0).count(), 12);
        assert!(inst.x_true.iter().all(|v| [0.0, 1.0, -1.0].contains(v)));
        assert_eq!(inst.spec.dim(), 120);
        let again = gen_lasso(50, 120, 12, 0.1, 7, LASSO_RADIUS).unwrap();
        assert_eq!(inst.b, again.b);
        assert!(gen_lasso(5, 4, 5, 0.1, 0, 1.0).is_err());
    }

    #[test]
    fn noiseless_lasso_has_zero_residual_at_truth() {
        let inst = gen_lasso(30, 40, 4, 0.0, 1, LASSO_RADIUS).unwrap();
        assert!(inst.obj.value(&inst.x_true).unwrap().abs() < 1e-9);
    }

    #[test]
    fn triangle_constants() {
        let t = gen_triangle(std::f64::consts::FRAC_PI_2 - 1e-12).unwrap();
        assert!((t.delta - 0.5f64.sqrt()).abs() < 1e-9);
        let t = gen_triangle(std::f64::consts::FRAC_PI_4).unwrap();
        assert!((t.diameter - 2.0 * (std::f64::consts::PI / 8.0).cos()).abs() < 1e-15);
        assert_eq!(t.f_star, 0.0);
        let t = gen_triangle_with_target(std::f64::consts::FRAC_PI_4, TRIANGLE_TARGET_OUTSIDE).unwrap();
        assert!(t.f_star > 0.0);
        assert!(gen_triangle(0.0).is_err());
        assert!(gen_triangle(2.0).is_err());
    }

    #[test]
    fn projection_onto_triangle() {
        let v = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(closest_point_in_triangle(&v, &[0.2, 0.2]), vec![0.2, 0.2]);
        assert_eq!(closest_point_in_triangle(&v, &[-1.0, -1.0]), vec![0.0, 0.0]);
        let p = closest_point_in_triangle(&v, &[1.0, 1.0]);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        // brute force over a grid
        let y = [-0.3, 1.7];
        let p = closest_point_in_triangle(&v, &y);
        let dp = (p[0] - y[0]).powi(2) + (p[1] - y[1]).powi(2);
        for i in 0..=100 {
            for j in 0..=(100 - i) {
                let q = [i as f64 / 100.0, j as f64 / 100.0];
                assert!((q[0] - y[0]).powi(2) + (q[1] - y[1]).powi(2) >= dp - 1e-12);
            }
        }
    }

    #[test]
    fn rankdef_is_singular() {
        let r = gen_rankdef(10, 4, 3).unwrap();
        assert!(r.obj.lambda_min() < 1e-10);
        assert!(r.obj.value(&r.x_ref).unwrap().abs() < 1e-12);
        assert!(gen_rankdef(4, 4, 0).is_err());
    }
}
