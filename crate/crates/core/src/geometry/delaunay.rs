use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::predicates::{incircle_perturbed, orient};
use crate::error::{invalid, Error, Result};
use crate::topology::{Point2D, Topology};

const GHOST: usize = usize::MAX;

/// Delaunay graph over BS indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelaunayGraph {
    pub n_vertices: usize,
    /// Unordered pairs stored as `(i, j)` with `i < j`, sorted.
    pub edges: Vec<(usize, usize)>,
    /// Sorted neighbor lists.
    pub adjacency: Vec<Vec<usize>>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
}

impl DelaunayGraph {
    pub fn from_edges(n_vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut set: Vec<(usize, usize)> = edges
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        set.sort_unstable();
        set.dedup();
        let mut adjacency = vec![Vec::new(); n_vertices];
        for &(a, b) in &set {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for nb in &mut adjacency {
            nb.sort_unstable();
        }
        Self {
            n_vertices,
            edges: set,
            adjacency,
            triangles: Vec::new(),
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency
            .get(i)
            .is_some_and(|nb| nb.binary_search(&j).is_ok())
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// Text dump, one `i j` edge per line.
    pub fn edge_list_text(&self) -> String {
        let mut out = String::new();
        for (a, b) in &self.edges {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }
}

fn strictly_between(a: &Point2D, b: &Point2D, p: &Point2D) -> bool {
    // Caller guarantees collinearity.
    if a.x != b.x {
        (a.x < p.x && p.x < b.x) || (b.x < p.x && p.x < a.x)
    } else {
        (a.y < p.y && p.y < b.y) || (b.y < p.y && p.y < a.y)
    }
}

fn in_conflict(pts: &[Point2D], tri: &[usize; 3], p: usize) -> bool {
    if tri[2] == GHOST {
        let (a, b) = (&pts[tri[0]], &pts[tri[1]]);
        match orient(a, b, &pts[p]) {
            Ordering::Greater => true,
            Ordering::Equal => strictly_between(a, b, &pts[p]),
            Ordering::Less => false,
        }
    } else {
        incircle_perturbed(pts, [tri[0], tri[1], tri[2], p]) == Ordering::Greater
    }
}

/// Incremental Bowyer–Watson over exact predicates, with ghost triangles
/// closing the convex hull. Quadratic in the number of sites, which is ample
/// for network-scale inputs.
pub fn triangulate(pts: &[Point2D]) -> Result<DelaunayGraph> {
    let n = pts.len();
    if n < 3 {
        return invalid(format!("triangulation needs at least 3 sites, got {n}"));
    }
    let third = (2..n)
        .find(|&k| orient(&pts[0], &pts[1], &pts[k]) != Ordering::Equal)
        .ok_or_else(|| Error::Degenerate("all sites are collinear".into()))?;
    let (a, b, c) = if orient(&pts[0], &pts[1], &pts[third]) == Ordering::Greater {
        (0, 1, third)
    } else {
        (1, 0, third)
    };
    let mut tris: Vec<[usize; 3]> = vec![[a, b, c], [b, a, GHOST], [c, b, GHOST], [a, c, GHOST]];

    let mut directed: HashSet<(usize, usize)> = HashSet::new();
    for p in (2..n).filter(|&k| k != third) {
        let (conflict, keep): (Vec<[usize; 3]>, Vec<[usize; 3]>) =
            tris.into_iter().partition(|t| in_conflict(pts, t, p));
        debug_assert!(!conflict.is_empty());
        directed.clear();
        for t in &conflict {
            for k in 0..3 {
                directed.insert((t[k], t[(k + 1) % 3]));
            }
        }
        tris = keep;
        for t in &conflict {
            for k in 0..3 {
                let (u, v) = (t[k], t[(k + 1) % 3]);
                if directed.contains(&(v, u)) {
                    continue;
                }
                // (u, v, p) rotated so the ghost sits last.
                let new = if u == GHOST {
                    [v, p, GHOST]
                } else if v == GHOST {
                    [p, u, GHOST]
                } else {
                    debug_assert_eq!(orient(&pts[u], &pts[v], &pts[p]), Ordering::Greater);
                    [u, v, p]
                };
                tris.push(new);
            }
        }
    }

    let triangles: Vec<[usize; 3]> = tris.into_iter().filter(|t| t[2] != GHOST).collect();
    let edges = triangles
        .iter()
        .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])]);
    let mut graph = DelaunayGraph::from_edges(n, edges);
    graph.triangles = triangles;
    Ok(graph)
}

pub fn delaunay(topology: &Topology) -> Result<DelaunayGraph> {
    triangulate(&topology.bs_positions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::generate_perturbed_grid;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> Point2D {
        Point2D::new(x, y)
    }

    /// Independent certificate: every triangle is counter-clockwise and has
    /// no other site inside its (perturbed) circumcircle, every site is a
    /// vertex, and V − E + F = 2 with the outer face counted.
    fn check_certificate(pts: &[Point2D], g: &DelaunayGraph) {
        for t in &g.triangles {
            assert_eq!(orient(&pts[t[0]], &pts[t[1]], &pts[t[2]]), Ordering::Greater);
            for q in 0..pts.len() {
                if t.contains(&q) {
                    continue;
                }
                assert_ne!(
                    incircle_perturbed(pts, [t[0], t[1], t[2], q]),
                    Ordering::Greater,
                    "site {q} inside circumcircle of {t:?}"
                );
            }
        }
        assert!(g.adjacency.iter().all(|nb| !nb.is_empty()));
        let (v, e, f) = (pts.len() as i64, g.edges.len() as i64, g.triangles.len() as i64 + 1);
        assert_eq!(v - e + f, 2);
    }

    #[test]
    fn single_triangle() {
        let pts = [p(0., 0.), p(4., 0.), p(1., 3.)];
        let g = triangulate(&pts).unwrap();
        assert_eq!(g.triangles.len(), 1);
        assert_eq!(g.edges, vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn cocircular_square_takes_diagonal_at_lowest_index() {
        let pts = [p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)];
        let g = triangulate(&pts).unwrap();
        assert_eq!(g.edges.len(), 5);
        assert!(g.has_edge(0, 2));
        assert!(!g.has_edge(1, 3));
        // Same square, different labels: the diagonal still touches site 0.
        let pts = [p(1., 1.), p(1., 0.), p(0., 0.), p(0., 1.)];
        let g = triangulate(&pts).unwrap();
        assert!(g.has_edge(0, 2));
    }

    #[test]
    fn collinear_input_rejected() {
        let pts = [p(0., 0.), p(1., 1.), p(2., 2.), p(3., 3.)];
        assert!(matches!(triangulate(&pts), Err(Error::Degenerate(_))));
        assert!(triangulate(&pts[..2]).is_err());
    }

    #[test]
    fn collinear_prefix_then_offline_site() {
        let pts = [p(0., 0.), p(1., 0.), p(2., 0.), p(3., 0.), p(1.5, 1.)];
        let g = triangulate(&pts).unwrap();
        check_certificate(&pts, &g);
        assert_eq!(g.triangles.len(), 3);
    }

    #[test]
    fn regular_grid_is_fully_degenerate_but_valid() {
        let t = generate_perturbed_grid(7, 7, 200.0, 0.0, 0).unwrap();
        let g = delaunay(&t).unwrap();
        check_certificate(&t.bs_positions, &g);
        // 36 squares, each split by the diagonal through its lowest-index corner.
        assert_eq!(g.triangles.len(), 72);
        assert!(g.has_edge(0, 8));
        assert!(!g.has_edge(1, 7));
        assert_eq!(g.max_degree(), 6);
    }

    #[test]
    fn perturbed_grid_euler_relation() {
        for seed in 0..5 {
            let t = generate_perturbed_grid(7, 7, 200.0, 200.0, seed).unwrap();
            let g = delaunay(&t).unwrap();
            check_certificate(&t.bs_positions, &g);
        }
    }

    #[test]
    fn edge_list_dump() {
        let pts = [p(0., 0.), p(4., 0.), p(1., 3.)];
        let g = triangulate(&pts).unwrap();
        assert_eq!(g.edge_list_text(), "0 1\n0 2\n1 2\n");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn integer_lattice_subsets(raw in prop::collection::btree_set((0i32..12, 0i32..12), 3..40),
                                   dx in -1000i32..1000, dy in -1000i32..1000) {
            let pts: Vec<Point2D> = raw.iter().map(|&(x, y)| p(x as f64, y as f64)).collect();
            let collinear = (2..pts.len()).all(|k| orient(&pts[0], &pts[1], &pts[k]) == Ordering::Equal);
            prop_assume!(!collinear);
            let g = triangulate(&pts).unwrap();
            check_certificate(&pts, &g);
            // Integer translations are exact in f64, so the graph must not move.
            let moved: Vec<Point2D> = pts.iter().map(|q| q.translate(dx as f64, dy as f64)).collect();
            let h = triangulate(&moved).unwrap();
            prop_assert_eq!(g.edges, h.edges);
        }
    }
}
