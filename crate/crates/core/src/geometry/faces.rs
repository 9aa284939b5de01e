//! Face lattice of the convex hull of a small point set.
//!
//! Facets are found by brute force over affinely spanning subsets; every other face
//! is an intersection of facets.

use std::collections::{BTreeSet, VecDeque};

use nalgebra::DMatrix;

use crate::error::{FwError, Result};
use crate::linalg::{AffineFrame, Combinations};

pub const MAX_LOCAL_DIM: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Face {
    /// Sorted indices of the points lying on the face.
    pub atoms: Vec<usize>,
    pub dim: usize,
}

#[derive(Clone, Debug)]
pub struct FaceLattice {
    /// Coordinates of each point in an orthonormal frame of the affine hull.
    pub local: Vec<Vec<f64>>,
    /// All faces, ordered by decreasing dimension and then by atom list. The first
    /// entry is the polytope itself.
    pub faces: Vec<Face>,
}

impl FaceLattice {
    pub fn dim(&self) -> usize {
        self.faces.first().map_or(0, |f| f.dim)
    }

    /// Faces of `self.faces[k]` with one dimension less.
    pub fn facets_of(&self, k: usize) -> Vec<usize> {
        let face = &self.faces[k];
        if face.dim == 0 {
            return Vec::new();
        }
        self.faces
            .iter()
            .enumerate()
            .filter(|(_, g)| g.dim + 1 == face.dim && is_subset(&g.atoms, &face.atoms))
            .map(|(i, _)| i)
            .collect()
    }
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.binary_search(x).is_ok()).collect()
}

/// Unit normal of the hyperplane through `pts` in `R^n` (`pts.len() ≥ n`), or `None`
/// when the points do not span a hyperplane.
pub(crate) fn hyperplane_normal(pts: &[&[f64]], n: usize) -> Option<Vec<f64>> {
    if n == 1 {
        return Some(vec![1.0]);
    }
    let m = pts.len() - 1;
    let d = DMatrix::from_fn(n, m, |i, j| pts[j + 1][i] - pts[0][i]);
    let gram = &d * d.transpose();
    let scale = gram.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    if eig.eigenvalues[order[0]] > 1e-10 * scale || eig.eigenvalues[order[1]] <= 1e-10 * scale {
        return None;
    }
    let v = eig.eigenvectors.column(order[0]);
    Some(v.iter().copied().collect())
}

/// Enumerates the faces of `conv(points)`. Duplicate points are allowed and are
/// reported on the same faces.
pub fn enumerate_faces(points: &[Vec<f64>]) -> Result<FaceLattice> {
    if points.is_empty() {
        return Err(FwError::InvalidPolytope("no points".into()));
    }
    let refs: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
    let frame = AffineFrame::new(&refs);
    let n = frame.dim();
    if n > MAX_LOCAL_DIM {
        return Err(FwError::CapExceeded(format!(
            "face enumeration supports affine dimension ≤ {MAX_LOCAL_DIM}, got {n}"
        )));
    }
    let local: Vec<Vec<f64>> = points.iter().map(|p| frame.to_local(p)).collect();
    let all: Vec<usize> = (0..points.len()).collect();
    if n == 0 {
        return Ok(FaceLattice {
            local,
            faces: vec![Face { atoms: all, dim: 0 }],
        });
    }
    let scale = 1.0 + local.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * scale;

    let mut facets: BTreeSet<Vec<usize>> = BTreeSet::new();
    for subset in Combinations::new(points.len(), n) {
        let pts: Vec<&[f64]> = subset.iter().map(|&i| local[i].as_slice()).collect();
        let Some(normal) = hyperplane_normal(&pts, n) else {
            continue;
        };
        let off: f64 = normal.iter().zip(pts[0]).map(|(a, b)| a * b).sum();
        let vals: Vec<f64> = local
            .iter()
            .map(|p| normal.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() - off)
            .collect();
        let below = vals.iter().all(|v| *v <= tol);
        let above = vals.iter().all(|v| *v >= -tol);
        if below || above {
            let on: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].abs() <= tol).collect();
            facets.insert(on);
        }
    }

    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    seen.insert(all.clone());
    let mut queue: VecDeque<Vec<usize>> = VecDeque::new();
    for f in &facets {
        if seen.insert(f.clone()) {
            queue.push_back(f.clone());
        }
    }
    while let Some(face) = queue.pop_front() {
        for f in &facets {
            let g = intersect(&face, f);
            if !g.is_empty() && seen.insert(g.clone()) {
                queue.push_back(g);
            }
        }
    }

    let mut faces: Vec<Face> = seen
        .into_iter()
        .map(|atoms| {
            let pts: Vec<&[f64]> = atoms.iter().map(|&i| local[i].as_slice()).collect();
            let dim = AffineFrame::new(&pts).dim();
            Face { atoms, dim }
        })
        .collect();
    faces.sort_by(|a, b| b.dim.cmp(&a.dim).then_with(|| a.atoms.cmp(&b.atoms)));
    Ok(FaceLattice { local, faces })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count_by_dim(l: &FaceLattice) -> Vec<usize> {
        let mut c = vec![0; l.dim() + 1];
        for f in &l.faces {
            c[f.dim] += 1;
        }
        c
    }

    #[test]
    fn cube_face_counts() {
        let pts: Vec<Vec<f64>> = (0..8)
            .map(|b| (0..3).map(|i| ((b >> (2 - i)) & 1) as f64).collect())
            .collect();
        let l = enumerate_faces(&pts).unwrap();
        assert_eq!(count_by_dim(&l), vec![8, 12, 6, 1]);
        assert_eq!(l.faces[0].atoms.len(), 8);
        assert_eq!(l.facets_of(0).len(), 6);
    }

    #[test]
    fn simplex_in_higher_ambient_space() {
        let pts: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let l = enumerate_faces(&pts).unwrap();
        assert_eq!(count_by_dim(&l), vec![4, 6, 4, 1]);
    }

    #[test]
    fn interior_point_is_not_a_vertex() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![2.0, 0.0],
            vec![0.0, 2.0],
            vec![0.5, 0.5],
            vec![1.0, 0.0],
        ];
        let l = enumerate_faces(&pts).unwrap();
        assert_eq!(count_by_dim(&l), vec![3, 3, 1]);
        // the edge midpoint lies on the bottom edge
        assert!(l.faces.iter().any(|f| f.atoms == vec![0, 1, 4]));
        assert!(l.faces.iter().all(|f| f.dim == 2 || !f.atoms.contains(&3)));
    }

    #[test]
    fn segment_and_point() {
        let l = enumerate_faces(&[vec![0.0, 1.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(count_by_dim(&l), vec![2, 1]);
        let l = enumerate_faces(&[vec![3.0, 3.0]]).unwrap();
        assert_eq!(l.faces.len(), 1);
        assert_eq!(l.faces[0].dim, 0);
    }
}
