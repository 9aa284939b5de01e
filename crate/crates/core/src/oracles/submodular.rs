//! Submodular set functions and the greedy vertex of their base polytope.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{FwError, Result};

/// A set function on `{0, .., n-1}` with `F(∅) = 0`. Sets are passed as membership masks.
///
/// Implementations must be re-entrant: the oracle may call them from several threads.
pub trait SubmodularFunction: Send + Sync + fmt::Debug {
    fn ground_size(&self) -> usize;

    fn eval(&self, set: &[bool]) -> f64;

    /// Marginal gains `F(o_0..o_k) − F(o_0..o_{k−1})` along `order`, indexed by element.
    fn marginals(&self, order: &[usize]) -> Vec<f64> {
        let n = self.ground_size();
        let mut mask = vec![false; n];
        let mut out = vec![0.0; n];
        let mut prev = self.eval(&mask);
        for &e in order {
            mask[e] = true;
            let cur = self.eval(&mask);
            out[e] = cur - prev;
            prev = cur;
        }
        out
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "kind": "custom", "n": self.ground_size() })
    }
}

/// Built-in submodular functions, constructible from JSON.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BuiltinSubmodular {
    /// `F(S) = min(|S|, k)`.
    CappedCardinality { n: usize, k: usize },
    /// Weighted undirected cut `F(S) = Σ_{i∈S, j∉S} w_ij`.
    Cut {
        n: usize,
        edges: Vec<(usize, usize, f64)>,
    },
    /// `F(S) = (Σ_{i∈S} w_i)^p` with `w ≥ 0`, `0 < p ≤ 1`.
    ConcaveWeights { weights: Vec<f64>, exponent: f64 },
}

impl BuiltinSubmodular {
    pub fn validate(&self) -> Result<()> {
        match self {
            BuiltinSubmodular::CappedCardinality { n, .. } if *n == 0 => {
                Err(FwError::InvalidPolytope("empty ground set".into()))
            }
            BuiltinSubmodular::Cut { n, edges } => {
                if *n == 0 {
                    return Err(FwError::InvalidPolytope("empty ground set".into()));
                }
                for &(i, j, w) in edges {
                    if i >= *n || j >= *n || !w.is_finite() || w < 0.0 {
                        return Err(FwError::InvalidPolytope(format!(
                            "bad cut edge ({i}, {j}, {w})"
                        )));
                    }
                }
                Ok(())
            }
            BuiltinSubmodular::ConcaveWeights { weights, exponent } => {
                if weights.is_empty() {
                    return Err(FwError::InvalidPolytope("empty ground set".into()));
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(FwError::InvalidPolytope("weights must be nonnegative".into()));
                }
                if !(*exponent > 0.0 && *exponent <= 1.0) {
                    return Err(FwError::InvalidPolytope(format!(
                        "exponent {exponent} outside (0, 1]"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

impl SubmodularFunction for BuiltinSubmodular {
    fn ground_size(&self) -> usize {
        match self {
            BuiltinSubmodular::CappedCardinality { n, .. } | BuiltinSubmodular::Cut { n, .. } => *n,
            BuiltinSubmodular::ConcaveWeights { weights, .. } => weights.len(),
        }
    }

    fn eval(&self, set: &[bool]) -> f64 {
        match self {
            BuiltinSubmodular::CappedCardinality { k, .. } => {
                set.iter().filter(|b| **b).count().min(*k) as f64
            }
            BuiltinSubmodular::Cut { edges, .. } => edges
                .iter()
                .filter(|(i, j, _)| set[*i] != set[*j])
                .map(|e| e.2)
                .sum(),
            BuiltinSubmodular::ConcaveWeights { weights, exponent } => {
                let s: f64 = weights
                    .iter()
                    .zip(set)
                    .filter(|(_, b)| **b)
                    .map(|(w, _)| *w)
                    .sum();
                s.powf(*exponent)
            }
        }
    }

    fn marginals(&self, order: &[usize]) -> Vec<f64> {
        let n = self.ground_size();
        let mut out = vec![0.0; n];
        match self {
            BuiltinSubmodular::CappedCardinality { k, .. } => {
                for (pos, &e) in order.iter().enumerate() {
                    out[e] = if pos < *k { 1.0 } else { 0.0 };
                }
            }
            BuiltinSubmodular::Cut { edges, .. } => {
                let mut adj = vec![Vec::new(); n];
                for &(i, j, w) in edges {
                    if i != j {
                        adj[i].push((j, w));
                        adj[j].push((i, w));
                    }
                }
                let mut mask = vec![false; n];
                for &e in order {
                    out[e] = adj[e]
                        .iter()
                        .map(|&(j, w)| if mask[j] { -w } else { w })
                        .sum();
                    mask[e] = true;
                }
            }
            BuiltinSubmodular::ConcaveWeights { weights, exponent } => {
                let mut acc = 0.0f64;
                let mut prev = 0.0f64;
                for &e in order {
                    acc += weights[e];
                    let cur = acc.powf(*exponent);
                    out[e] = cur - prev;
                    prev = cur;
                }
            }
        }
        out
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

/// Edmonds' greedy vertex for minimizing `⟨r, x⟩` over the base polytope: sort `r`
/// ascending (stable, so ties keep index order) and assign marginal gains.
pub fn greedy_vertex(f: &dyn SubmodularFunction, r: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..r.len()).collect();
    order.sort_by(|&a, &b| r[a].total_cmp(&r[b]));
    f.marginals(&order)
}
