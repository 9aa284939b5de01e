//! Linear minimization oracles `argmin_{a ∈ 𝒜} ⟨r, a⟩` over structured atom sets.

pub mod flow;
pub mod submodular;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::atoms::{Atom, AtomStore};
use crate::error::{FwError, Result};
use crate::linalg::{dist, dot};

pub use flow::FlowDag;
pub use submodular::{greedy_vertex, BuiltinSubmodular, SubmodularFunction};

/// Maximum number of atoms `enumerate_atoms` will materialize.
pub const ENUMERATION_CAP: usize = 20_000;
/// Base polytopes are enumerated through all `n!` greedy orders; beyond this `n` that
/// is refused even if the number of distinct vertices would be small.
pub const BASE_POLYTOPE_ENUM_MAX_N: usize = 8;

#[derive(Clone, Debug)]
pub enum PolytopeSpec {
    Simplex { dim: usize },
    L1Ball { dim: usize, radius: f64 },
    /// The unit cube `{0,1}^d`.
    Cube { dim: usize },
    VertexList { vertices: Arc<Vec<Vec<f64>>> },
    FlowDag(Arc<FlowDag>),
    BasePolytope(Arc<dyn SubmodularFunction>),
}

impl PolytopeSpec {
    pub fn simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(FwError::InvalidPolytope("dimension must be positive".into()));
        }
        Ok(PolytopeSpec::Simplex { dim })
    }

    pub fn l1_ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(FwError::InvalidPolytope("dimension must be positive".into()));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(FwError::InvalidPolytope(format!("radius {radius} must be positive")));
        }
        Ok(PolytopeSpec::L1Ball { dim, radius })
    }

    pub fn cube(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(FwError::InvalidPolytope("dimension must be positive".into()));
        }
        Ok(PolytopeSpec::Cube { dim })
    }

    pub fn vertex_list(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let d = vertices
            .first()
            .map(|v| v.len())
            .ok_or_else(|| FwError::InvalidPolytope("vertex list is empty".into()))?;
        if d == 0 {
            return Err(FwError::InvalidPolytope("vertices have dimension 0".into()));
        }
        for v in &vertices {
            if v.len() != d {
                return Err(FwError::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(FwError::NonFiniteInput("vertex coordinates".into()));
            }
        }
        Ok(PolytopeSpec::VertexList {
            vertices: Arc::new(vertices),
        })
    }

    pub fn flow_dag(dag: FlowDag) -> Self {
        PolytopeSpec::FlowDag(Arc::new(dag))
    }

    /// Checks `F(∅) = 0` with a single evaluation.
    pub fn base_polytope(f: Arc<dyn SubmodularFunction>) -> Result<Self> {
        let n = f.ground_size();
        if n == 0 {
            return Err(FwError::InvalidPolytope("empty ground set".into()));
        }
        let empty = f.eval(&vec![false; n]);
        if empty != 0.0 {
            return Err(FwError::InvalidPolytope(format!("F(∅) = {empty}, expected 0")));
        }
        Ok(PolytopeSpec::BasePolytope(f))
    }

    pub fn dim(&self) -> usize {
        match self {
            PolytopeSpec::Simplex { dim }
            | PolytopeSpec::L1Ball { dim, .. }
            | PolytopeSpec::Cube { dim } => *dim,
            PolytopeSpec::VertexList { vertices } => vertices[0].len(),
            PolytopeSpec::FlowDag(g) => g.num_arcs(),
            PolytopeSpec::BasePolytope(f) => f.ground_size(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolytopeSpec::Simplex { .. } => "simplex",
            PolytopeSpec::L1Ball { .. } => "l1ball",
            PolytopeSpec::Cube { .. } => "cube",
            PolytopeSpec::VertexList { .. } => "vertices",
            PolytopeSpec::FlowDag(_) => "flowdag",
            PolytopeSpec::BasePolytope(_) => "basepoly",
        }
    }

    /// Short JSON description used in config echoes.
    pub fn describe(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            PolytopeSpec::Simplex { dim } => json!({"variant": "simplex", "dim": dim}),
            PolytopeSpec::L1Ball { dim, radius } => {
                json!({"variant": "l1ball", "dim": dim, "radius": radius})
            }
            PolytopeSpec::Cube { dim } => json!({"variant": "cube", "dim": dim}),
            PolytopeSpec::VertexList { vertices } => {
                json!({"variant": "vertices", "vertices": vertices.as_ref()})
            }
            PolytopeSpec::FlowDag(g) => json!({
                "variant": "flowdag",
                "nodes": g.nodes().len(),
                "arcs": g.num_arcs(),
            }),
            PolytopeSpec::BasePolytope(f) => json!({"variant": "basepoly", "function": f.describe()}),
        }
    }

    fn check_direction(&self, r: &[f64]) -> Result<()> {
        if r.len() != self.dim() {
            return Err(FwError::DimensionMismatch {
                expected: self.dim(),
                got: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(FwError::NonFiniteInput("LMO direction".into()));
        }
        Ok(())
    }

    /// The coordinates of an exact minimizer of `⟨r, ·⟩` over the atoms.
    pub fn lmo_point(&self, r: &[f64]) -> Result<Vec<f64>> {
        self.check_direction(r)?;
        Ok(match self {
            PolytopeSpec::Simplex { dim } => {
                let i = argmin(r.iter().copied());
                unit(*dim, i, 1.0)
            }
            PolytopeSpec::L1Ball { dim, radius } => {
                let mut best = 0;
                for (i, v) in r.iter().enumerate() {
                    if v.abs() > r[best].abs() {
                        best = i;
                    }
                }
                let sign = if r[best] >= 0.0 { -1.0 } else { 1.0 };
                unit(*dim, best, sign * radius)
            }
            PolytopeSpec::Cube { .. } => r.iter().map(|&v| if v < 0.0 { 1.0 } else { 0.0 }).collect(),
            PolytopeSpec::VertexList { vertices } => {
                let i = argmin(vertices.iter().map(|v| dot(r, v)));
                vertices[i].clone()
            }
            PolytopeSpec::FlowDag(g) => g.shortest_path(r),
            PolytopeSpec::BasePolytope(f) => greedy_vertex(f.as_ref(), r),
        })
    }

    /// LMO answer interned into `store`.
    pub fn lmo(&self, store: &mut AtomStore, r: &[f64]) -> Result<Atom> {
        let p = self.lmo_point(r)?;
        Ok(store.intern(&p))
    }

    /// Upper bound on the number of atoms, when cheap to compute.
    pub fn atom_count_hint(&self) -> Option<usize> {
        match self {
            PolytopeSpec::Simplex { dim } => Some(*dim),
            PolytopeSpec::L1Ball { dim, .. } => Some(2 * dim),
            PolytopeSpec::Cube { dim } => 1usize.checked_shl(*dim as u32).filter(|_| *dim < 64),
            PolytopeSpec::VertexList { vertices } => Some(vertices.len()),
            PolytopeSpec::FlowDag(_) => None,
            PolytopeSpec::BasePolytope(f) => {
                let n = f.ground_size();
                (1..=n).try_fold(1usize, |acc, k| acc.checked_mul(k))
            }
        }
    }

    pub fn enumerate_atoms(&self) -> Result<Vec<Vec<f64>>> {
        let cap = ENUMERATION_CAP;
        let too_many = |count: usize| FwError::EnumerationInfeasible { count, cap };
        match self {
            PolytopeSpec::Simplex { dim } => Ok((0..*dim).map(|i| unit(*dim, i, 1.0)).collect()),
            PolytopeSpec::L1Ball { dim, radius } => Ok((0..*dim)
                .flat_map(|i| [unit(*dim, i, *radius), unit(*dim, i, -radius)])
                .collect()),
            PolytopeSpec::Cube { dim } => {
                let count = self.atom_count_hint().unwrap_or(usize::MAX);
                if count > cap {
                    return Err(too_many(count));
                }
                Ok((0..count)
                    .map(|m| {
                        (0..*dim)
                            .map(|i| ((m >> (dim - 1 - i)) & 1) as f64)
                            .collect()
                    })
                    .collect())
            }
            PolytopeSpec::VertexList { vertices } => {
                if vertices.len() > cap {
                    return Err(too_many(vertices.len()));
                }
                Ok(vertices.as_ref().clone())
            }
            PolytopeSpec::FlowDag(g) => g.enumerate_paths(cap),
            PolytopeSpec::BasePolytope(f) => {
                let n = f.ground_size();
                if n > BASE_POLYTOPE_ENUM_MAX_N {
                    return Err(too_many(self.atom_count_hint().unwrap_or(usize::MAX)));
                }
                let mut seen = AtomStore::new();
                let mut out = Vec::new();
                let mut perm: Vec<usize> = (0..n).collect();
                loop {
                    let v = f.marginals(&perm);
                    let before = seen.len();
                    seen.intern(&v);
                    if seen.len() > before {
                        if out.len() >= cap {
                            return Err(too_many(out.len() + 1));
                        }
                        out.push(v);
                    }
                    if !next_permutation(&mut perm) {
                        break;
                    }
                }
                Ok(out)
            }
        }
    }

    /// `diam(conv 𝒜)`: analytic for simplex, cube and L1 ball, otherwise the maximum
    /// pairwise distance over the enumerated atoms.
    pub fn diameter(&self) -> Result<f64> {
        match self {
            PolytopeSpec::Simplex { dim } => Ok(if *dim >= 2 { 2f64.sqrt() } else { 0.0 }),
            PolytopeSpec::Cube { dim } => Ok((*dim as f64).sqrt()),
            PolytopeSpec::L1Ball { radius, .. } => Ok(2.0 * radius),
            _ => {
                let atoms = self.enumerate_atoms().map_err(|e| match e {
                    FwError::EnumerationInfeasible { .. } => FwError::DiameterUnavailable,
                    other => other,
                })?;
                Ok(max_pairwise_distance(&atoms))
            }
        }
    }

    /// Parses the JSON document form; relative file paths resolve against `base_dir`.
    pub fn from_json_value(value: serde_json::Value, base_dir: Option<&Path>) -> Result<Self> {
        let raw: RawSpec = serde_json::from_value(value)?;
        raw.build(base_dir)
    }

    pub fn from_json_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        Self::from_json_value(serde_json::from_str(text)?, base_dir)
    }
}

pub fn max_pairwise_distance(atoms: &[Vec<f64>]) -> f64 {
    let mut m = 0.0f64;
    for i in 0..atoms.len() {
        for j in i + 1..atoms.len() {
            m = m.max(dist(&atoms[i], &atoms[j]));
        }
    }
    m
}

/// Reads a vertex CSV (one atom per row, no header; `#` comment lines allowed).
pub fn read_vertex_csv<R: std::io::Read>(r: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> = rec.iter().map(|f| f.parse::<f64>()).collect();
        out.push(row.map_err(|e| FwError::Parse(format!("vertex row {}: {e}", i + 1)))?);
    }
    Ok(out)
}

fn unit(dim: usize, i: usize, value: f64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[i] = value;
    v
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ArcField {
    Text(String),
    Lines(Vec<String>),
    Pairs(Vec<(String, String)>),
}

#[derive(Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase", deny_unknown_fields)]
enum RawSpec {
    Simplex {
        dim: usize,
    },
    L1ball {
        dim: usize,
        radius: f64,
    },
    Cube {
        dim: usize,
    },
    Vertices {
        vertices: Option<Vec<Vec<f64>>>,
        file: Option<PathBuf>,
    },
    Flowdag {
        arcs: Option<ArcField>,
        file: Option<PathBuf>,
        source: Option<String>,
        sink: Option<String>,
    },
    Basepoly {
        function: BuiltinSubmodular,
    },
}

fn resolve(base: Option<&Path>, p: &Path) -> PathBuf {
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    }
}

impl RawSpec {
    fn build(self, base: Option<&Path>) -> Result<PolytopeSpec> {
        match self {
            RawSpec::Simplex { dim } => PolytopeSpec::simplex(dim),
            RawSpec::L1ball { dim, radius } => PolytopeSpec::l1_ball(dim, radius),
            RawSpec::Cube { dim } => PolytopeSpec::cube(dim),
            RawSpec::Vertices { vertices, file } => {
                let v = match (vertices, file) {
                    (Some(v), None) => v,
                    (None, Some(f)) => read_vertex_csv(std::fs::File::open(resolve(base, &f))?)?,
                    _ => {
                        return Err(FwError::InvalidPolytope(
                            "vertices needs exactly one of \"vertices\" or \"file\"".into(),
                        ))
                    }
                };
                PolytopeSpec::vertex_list(v)
            }
            RawSpec::Flowdag {
                arcs,
                file,
                source,
                sink,
            } => {
                let named = match (arcs, file) {
                    (Some(ArcField::Text(t)), None) => FlowDag::parse_arc_list(&t)?,
                    (Some(ArcField::Lines(l)), None) => FlowDag::parse_arc_list(&l.join("\n"))?,
                    (Some(ArcField::Pairs(p)), None) => p,
                    (None, Some(f)) => {
                        FlowDag::parse_arc_list(&std::fs::read_to_string(resolve(base, &f))?)?
                    }
                    _ => {
                        return Err(FwError::InvalidPolytope(
                            "flowdag needs exactly one of \"arcs\" or \"file\"".into(),
                        ))
                    }
                };
                let g = FlowDag::from_named_arcs(&named, source.as_deref(), sink.as_deref())?;
                Ok(PolytopeSpec::flow_dag(g))
            }
            RawSpec::Basepoly { function } => {
                function.validate()?;
                PolytopeSpec::base_polytope(Arc::new(function))
            }
        }
    }
}
