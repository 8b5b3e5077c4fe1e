use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{AreaEstimate, DelaunayGraph, RegionKey};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutRecord {
    pub edge: (usize, usize),
    pub area: f64,
}

/// Delaunay graph after area-based cutting and restoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutGraph {
    pub base: DelaunayGraph,
    /// Sorted `(i, j)` pairs with `i < j`.
    pub kept_edges: Vec<(usize, usize)>,
    /// Every removal, in the order it happened.
    pub cut_log: Vec<CutRecord>,
    /// Edges put back by the restore pass, in order.
    pub restored: Vec<(usize, usize)>,
    pub delta_ec: usize,
}

impl CutGraph {
    pub fn n_vertices(&self) -> usize {
        self.base.n_vertices
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_vertices()];
        for &(a, b) in &self.kept_edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// Edges removed and never restored.
    pub fn cut_edges(&self) -> Vec<(usize, usize)> {
        let kept: BTreeSet<_> = self.kept_edges.iter().copied().collect();
        let mut out: Vec<_> = self
            .cut_log
            .iter()
            .map(|r| r.edge)
            .filter(|e| !kept.contains(e))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Area-based edge cutting followed by the restore pass.
pub fn edge_cut(graph: &DelaunayGraph, areas: &AreaEstimate, delta_ec: usize) -> Result<CutGraph> {
    edge_cut_by(graph, |k| areas.area(&k), delta_ec)
}

/// [`edge_cut`] with an arbitrary area function.
///
/// Cut pass: vertices in index order; while a vertex has more than `delta_ec`
/// kept edges, drop its incident edge with the smallest area (ties: smaller
/// `(i, j)`). Restore pass: vertices in index order; while a vertex has fewer
/// than `delta_ec` edges, re-add logged cut edges incident to it in
/// descending area order, skipping any whose other endpoint is already full.
pub fn edge_cut_by<F>(graph: &DelaunayGraph, area: F, delta_ec: usize) -> Result<CutGraph>
where
    F: Fn(RegionKey) -> f64,
{
    if delta_ec < 1 {
        return invalid("delta_ec must be at least 1");
    }
    let n = graph.n_vertices;
    let edge_area = |a: usize, b: usize| area(RegionKey::new(a, b).expect("simple graph"));
    let mut adj: Vec<BTreeSet<usize>> = graph
        .adjacency
        .iter()
        .map(|nb| nb.iter().copied().collect())
        .collect();

    let mut cut_log = Vec::new();
    for v in 0..n {
        while adj[v].len() > delta_ec {
            let w = *adj[v]
                .iter()
                .min_by(|&&x, &&y| {
                    edge_area(v, x)
                        .total_cmp(&edge_area(v, y))
                        .then((v.min(x), v.max(x)).cmp(&(v.min(y), v.max(y))))
                })
                .expect("degree above delta_ec");
            adj[v].remove(&w);
            adj[w].remove(&v);
            let edge = (v.min(w), v.max(w));
            cut_log.push(CutRecord {
                edge,
                area: edge_area(v, w),
            });
        }
    }

    let mut restored = Vec::new();
    for v in 0..n {
        if adj[v].len() >= delta_ec {
            continue;
        }
        let mut candidates: Vec<&CutRecord> = cut_log
            .iter()
            .filter(|r| r.edge.0 == v || r.edge.1 == v)
            .collect();
        candidates.sort_by(|x, y| y.area.total_cmp(&x.area).then(x.edge.cmp(&y.edge)));
        for r in candidates {
            if adj[v].len() >= delta_ec {
                break;
            }
            let w = if r.edge.0 == v { r.edge.1 } else { r.edge.0 };
            if adj[v].contains(&w) || adj[w].len() >= delta_ec {
                continue;
            }
            adj[v].insert(w);
            adj[w].insert(v);
            restored.push(r.edge);
        }
    }

    let mut kept_edges: Vec<(usize, usize)> = adj
        .iter()
        .enumerate()
        .flat_map(|(v, nb)| nb.iter().filter(move |&&w| w > v).map(move |&w| (v, w)))
        .collect();
    kept_edges.sort_unstable();
    Ok(CutGraph {
        base: graph.clone(),
        kept_edges,
        cut_log,
        restored,
        delta_ec,
    })
}
