//! Unit source-to-sink flows on a DAG. Coordinates are arcs; atoms are path indicators.

use std::collections::HashMap;

use crate::error::{FwError, Result};

#[derive(Clone, Debug)]
pub struct FlowDag {
    nodes: Vec<String>,
    arcs: Vec<(usize, usize)>,
    source: usize,
    sink: usize,
    out_arcs: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl FlowDag {
    /// Builds the DAG from named arcs. When `source`/`sink` are omitted the unique node
    /// without incoming (resp. outgoing) arcs is used.
    pub fn from_named_arcs(
        arcs: &[(String, String)],
        source: Option<&str>,
        sink: Option<&str>,
    ) -> Result<Self> {
        if arcs.is_empty() {
            return Err(FwError::InvalidPolytope("flow graph has no arcs".into()));
        }
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut nodes = Vec::new();
        let mut id = |name: &str, nodes: &mut Vec<String>| -> usize {
            *index.entry(name.to_string()).or_insert_with(|| {
                nodes.push(name.to_string());
                nodes.len() - 1
            })
        };
        let mut idx_arcs = Vec::with_capacity(arcs.len());
        for (u, v) in arcs {
            let a = id(u, &mut nodes);
            let b = id(v, &mut nodes);
            idx_arcs.push((a, b));
        }
        let find = |name: Option<&str>, nodes: &[String], want_in: bool| -> Result<usize> {
            if let Some(n) = name {
                return nodes
                    .iter()
                    .position(|x| x == n)
                    .ok_or_else(|| FwError::InvalidPolytope(format!("unknown node {n:?}")));
            }
            let cands: Vec<usize> = (0..nodes.len())
                .filter(|&i| {
                    !idx_arcs
                        .iter()
                        .any(|&(a, b)| if want_in { b == i } else { a == i })
                })
                .collect();
            match cands.as_slice() {
                [one] => Ok(*one),
                _ => Err(FwError::InvalidPolytope(format!(
                    "cannot infer {}: {} candidates",
                    if want_in { "source" } else { "sink" },
                    cands.len()
                ))),
            }
        };
        let s = find(source, &nodes, true)?;
        let t = find(sink, &nodes, false)?;
        Self::new(nodes, idx_arcs, s, t)
    }

    pub fn new(nodes: Vec<String>, arcs: Vec<(usize, usize)>, source: usize, sink: usize) -> Result<Self> {
        let n = nodes.len();
        if source >= n || sink >= n || source == sink {
            return Err(FwError::InvalidPolytope("bad source/sink".into()));
        }
        let mut out_arcs = vec![Vec::new(); n];
        let mut indeg = vec![0usize; n];
        for (k, &(u, v)) in arcs.iter().enumerate() {
            if u >= n || v >= n {
                return Err(FwError::InvalidPolytope(format!("arc {k} references a missing node")));
            }
            out_arcs[u].push(k);
            indeg[v] += 1;
        }
        // Kahn's algorithm, lowest node index first for a deterministic order
        let mut ready: std::collections::BTreeSet<usize> =
            (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(u) = ready.pop_first() {
            topo.push(u);
            for &k in &out_arcs[u] {
                let v = arcs[k].1;
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    ready.insert(v);
                }
            }
        }
        if topo.len() != n {
            return Err(FwError::InvalidPolytope("flow graph has a cycle".into()));
        }
        let mut from_source = vec![false; n];
        from_source[source] = true;
        for &u in &topo {
            if from_source[u] {
                for &k in &out_arcs[u] {
                    from_source[arcs[k].1] = true;
                }
            }
        }
        let mut to_sink = vec![false; n];
        to_sink[sink] = true;
        for &u in topo.iter().rev() {
            if out_arcs[u].iter().any(|&k| to_sink[arcs[k].1]) {
                to_sink[u] = true;
            }
        }
        if let Some(bad) = (0..n).find(|&i| !(from_source[i] && to_sink[i])) {
            return Err(FwError::InvalidPolytope(format!(
                "node {:?} is not on a source-to-sink path",
                nodes[bad]
            )));
        }
        Ok(Self {
            nodes,
            arcs,
            source,
            sink,
            out_arcs,
            topo,
        })
    }

    /// Parses "u v" lines (blank lines and `#` comments ignored).
    pub fn parse_arc_list(text: &str) -> Result<Vec<(String, String)>> {
        let mut arcs = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(FwError::Parse(format!(
                    "arc list line {}: expected \"u v\", got {line:?}",
                    ln + 1
                )));
            }
            arcs.push((parts[0].to_string(), parts[1].to_string()));
        }
        Ok(arcs)
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    /// Indicator of the cheapest source-to-sink path under arc costs `r`; among equal
    /// costs the path whose arc-index sequence is lexicographically smallest wins.
    pub fn shortest_path(&self, r: &[f64]) -> Vec<f64> {
        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        dist[self.sink] = 0.0;
        for &u in self.topo.iter().rev() {
            if u == self.sink {
                continue;
            }
            for &k in &self.out_arcs[u] {
                let c = r[k] + dist[self.arcs[k].1];
                if c < dist[u] {
                    dist[u] = c;
                }
            }
        }
        let mut x = vec![0.0; self.arcs.len()];
        let mut u = self.source;
        while u != self.sink {
            let mut best: Option<(usize, f64)> = None;
            // out_arcs is in ascending arc index
            for &k in &self.out_arcs[u] {
                let c = r[k] + dist[self.arcs[k].1];
                if best.is_none_or(|(_, b)| c < b) {
                    best = Some((k, c));
                }
            }
            let (k, _) = best.expect("every node reaches the sink");
            x[k] = 1.0;
            u = self.arcs[k].1;
        }
        x
    }

    /// All path indicators in lexicographic arc order, or an error past `cap`.
    pub fn enumerate_paths(&self, cap: usize) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::new();
        let mut stack: Vec<usize> = Vec::new();
        self.dfs(self.source, &mut stack, &mut out, cap)?;
        Ok(out)
    }

    fn dfs(&self, u: usize, stack: &mut Vec<usize>, out: &mut Vec<Vec<f64>>, cap: usize) -> Result<()> {
        if u == self.sink {
            if out.len() >= cap {
                return Err(FwError::EnumerationInfeasible {
                    count: out.len() + 1,
                    cap,
                });
            }
            let mut x = vec![0.0; self.arcs.len()];
            for &k in stack.iter() {
                x[k] = 1.0;
            }
            out.push(x);
            return Ok(());
        }
        for &k in &self.out_arcs[u] {
            stack.push(k);
            self.dfs(self.arcs[k].1, stack, out, cap)?;
            stack.pop();
        }
        Ok(())
    }
}
