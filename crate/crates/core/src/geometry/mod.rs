//! Delaunay triangulation, nearest-pair queries, 2nd-order Voronoi membership
//! and sampling-based region areas.
//!
//! 2nd-order Voronoi regions are never built as polygons. Membership is
//! decided by the nearest-two query, and areas are estimated by dropping
//! uniform dummy points in the analysis window and counting which pair each
//! lands in.

mod delaunay;
pub mod predicates;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use delaunay::{delaunay, triangulate, DelaunayGraph};

use crate::error::{invalid, Result};
use crate::rng::{self, purpose};
use crate::topology::{Point2D, Topology};

/// Unordered BS pair `{a, b}` naming the region `V₂(d_a, d_b)`; stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RegionKey {
    a: usize,
    b: usize,
}

impl RegionKey {
    pub fn new(i: usize, j: usize) -> Result<Self> {
        if i == j {
            return invalid(format!("region key needs two distinct BSs, got {{{i}, {i}}}"));
        }
        Ok(Self {
            a: i.min(j),
            b: i.max(j),
        })
    }

    pub fn pair(&self) -> (usize, usize) {
        (self.a, self.b)
    }

    pub fn contains(&self, v: usize) -> bool {
        self.a == v || self.b == v
    }

    /// The other endpoint, if `v` is one of them.
    pub fn other(&self, v: usize) -> Option<usize> {
        if v == self.a {
            Some(self.b)
        } else if v == self.b {
            Some(self.a)
        } else {
            None
        }
    }
}

impl fmt::Display for RegionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.a, self.b)
    }
}

/// Nearest and second-nearest site with their distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestTwo {
    pub first: usize,
    pub second: usize,
    pub d_first: f64,
    pub d_second: f64,
}

impl NearestTwo {
    pub fn key(&self) -> RegionKey {
        RegionKey {
            a: self.first.min(self.second),
            b: self.first.max(self.second),
        }
    }
}

/// Nearest two sites to `q`; distance ties go to the smaller index.
pub fn nearest_two_of(sites: &[Point2D], q: &Point2D) -> Result<NearestTwo> {
    if sites.len() < 2 {
        return invalid(format!("nearest-two query needs at least 2 sites, got {}", sites.len()));
    }
    let mut best = (f64::INFINITY, usize::MAX);
    let mut second = (f64::INFINITY, usize::MAX);
    for (i, s) in sites.iter().enumerate() {
        let d = q.dist2(s);
        // Strict comparisons keep the earlier (smaller) index on ties.
        if d < best.0 {
            second = best;
            best = (d, i);
        } else if d < second.0 {
            second = (d, i);
        }
    }
    Ok(NearestTwo {
        first: best.1,
        second: second.1,
        d_first: best.0.sqrt(),
        d_second: second.0.sqrt(),
    })
}

/// Ordered `(nearest, second nearest)` BS indices.
pub fn nearest_two(topology: &Topology, q: &Point2D) -> Result<(usize, usize)> {
    nearest_two_of(&topology.bs_positions, q).map(|n| (n.first, n.second))
}

pub fn in_second_order_region(topology: &Topology, q: &Point2D, key: RegionKey) -> bool {
    nearest_two_of(&topology.bs_positions, q)
        .map(|n| n.key() == key)
        .unwrap_or(false)
}

/// Dummy-point counts per 2nd-order region inside the analysis window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaEstimate {
    pub counts: BTreeMap<RegionKey, usize>,
    pub total_dummies: usize,
    /// Area of the sampled window (m²).
    pub window_area: f64,
}

impl AreaEstimate {
    pub fn count(&self, key: &RegionKey) -> usize {
        self.counts.get(key).copied().unwrap_or(0)
    }

    /// Estimated area in m².
    pub fn area(&self, key: &RegionKey) -> f64 {
        self.count(key) as f64 / self.total_dummies as f64 * self.window_area
    }
}

pub fn estimate_region_areas(topology: &Topology, n_dummies: usize, seed: u64) -> Result<AreaEstimate> {
    if n_dummies == 0 {
        return invalid("n_dummies must be positive");
    }
    let window = topology.analysis_window;
    let mut rng = rng::stream(seed, purpose::DUMMIES, 0);
    let mut counts = BTreeMap::new();
    for _ in 0..n_dummies {
        let q = window.sample(&mut rng);
        let key = nearest_two_of(&topology.bs_positions, &q)?.key();
        *counts.entry(key).or_insert(0) += 1;
    }
    Ok(AreaEstimate {
        counts,
        total_dummies: n_dummies,
        window_area: window.area(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{generate_perturbed_grid, Rect};
    use rand::Rng as _;

    fn p(x: f64, y: f64) -> Point2D {
        Point2D::new(x, y)
    }

    fn explicit(pts: Vec<Point2D>) -> Topology {
        Topology::explicit(pts, None).unwrap()
    }

    #[test]
    fn nearest_two_basic() {
        let t = explicit(vec![p(0., 0.), p(10., 0.)]);
        assert_eq!(nearest_two(&t, &p(1., 0.)).unwrap(), (0, 1));
        let t = explicit(vec![p(0., 0.), p(1., 0.), p(0.5, 1.)]);
        let (i, j) = nearest_two(&t, &p(0.5, 0.1)).unwrap();
        // Brute force: distances² are 0.26, 0.26, 0.81.
        assert_eq!((i, j), (0, 1));
    }

    #[test]
    fn nearest_two_tie_break_by_index() {
        // q = origin; BS 2 at distance 1, BSs 3 and 5 both at distance 2.
        let t = explicit(vec![
            p(9., 9.),
            p(-9., 9.),
            p(1., 0.),
            p(0., 2.),
            p(9., -9.),
            p(-2., 0.),
        ]);
        assert_eq!(nearest_two(&t, &p(0., 0.)).unwrap(), (2, 3));
        let t = explicit(vec![p(0., 1.), p(0., -1.), p(5., 5.)]);
        assert_eq!(nearest_two(&t, &p(0., 0.)).unwrap(), (0, 1));
        assert!(nearest_two(&explicit(vec![p(0., 0.)]), &p(1., 1.)).is_err());
    }

    #[test]
    fn region_membership() {
        let t = explicit(vec![p(0., 0.), p(10., 0.)]);
        let only = RegionKey::new(0, 1).unwrap();
        let mut rng = rng::stream(1, "test", 0);
        for _ in 0..100 {
            let q = t.window.sample(&mut rng);
            assert!(in_second_order_region(&t, &q, only));
        }
        let t = explicit(vec![p(0., 0.), p(1., 0.), p(0.5, 1.)]);
        assert!(in_second_order_region(&t, &p(0.5, 0.1), RegionKey::new(0, 1).unwrap()));
        assert!(!in_second_order_region(&t, &p(0.5, 0.1), RegionKey::new(0, 2).unwrap()));
        assert!(RegionKey::new(3, 3).is_err());
    }

    #[test]
    fn region_partition_uses_delaunay_keys() {
        let t = generate_perturbed_grid(7, 7, 200.0, 200.0, 17).unwrap();
        let g = delaunay(&t).unwrap();
        let mut rng = rng::stream(2, "test", 0);
        for _ in 0..2000 {
            let q = t.window.sample(&mut rng);
            let n = nearest_two_of(&t.bs_positions, &q).unwrap();
            assert!(g.has_edge(n.first, n.second));
            let hits = g
                .edges
                .iter()
                .filter(|&&(a, b)| in_second_order_region(&t, &q, RegionKey::new(a, b).unwrap()))
                .count();
            assert_eq!(hits, 1);
        }
    }

    #[test]
    fn two_sites_take_every_dummy() {
        let t = explicit(vec![p(0., 0.), p(10., 0.)]);
        let est = estimate_region_areas(&t, 500, 3).unwrap();
        assert_eq!(est.counts.len(), 1);
        assert_eq!(est.count(&RegionKey::new(0, 1).unwrap()), 500);
        assert!((est.area(&RegionKey::new(0, 1).unwrap()) - t.analysis_window.area()).abs() < 1e-9);
        assert!(estimate_region_areas(&t, 0, 3).is_err());
    }

    #[test]
    fn symmetric_square_splits_evenly() {
        // Square of side 2 centered in a 6×6 window; diagonal pairs have
        // measure-zero regions, the four side pairs share the plane equally.
        let w = Rect::new(-3.0, -3.0, 3.0, 3.0).unwrap();
        let t = Topology::explicit(vec![p(-1., -1.), p(1., -1.), p(1., 1.), p(-1., 1.)], Some(w)).unwrap();
        let n = 40_000usize;
        let est = estimate_region_areas(&t, n, 8).unwrap();
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        for (a, b) in [(0, 1), (1, 2), (2, 3), (0, 3)] {
            let c = est.count(&RegionKey::new(a, b).unwrap()) as f64;
            assert!((c - 0.25 * n as f64).abs() < 3.0 * sigma, "pair {a}-{b}: {c}");
        }
        assert_eq!(est.counts.values().sum::<usize>(), n);
    }

    #[test]
    fn delaunay_edges_have_positive_area_inside_window() {
        // Sample the window densely; every Delaunay pair whose region is hit
        // by the dense sample must also be hit by the area estimator.
        let t = generate_perturbed_grid(7, 7, 200.0, 200.0, 23).unwrap();
        let g = delaunay(&t).unwrap();
        let est = estimate_region_areas(&t, 100_000, 4).unwrap();
        for key in est.counts.keys() {
            let (a, b) = key.pair();
            assert!(g.has_edge(a, b), "non-Delaunay pair {a}-{b} received dummies");
        }
        let mut rng = rng::stream(5, "test", 0);
        let w = t.analysis_window;
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..50_000 {
            let q = p(w.x_min + rng.random::<f64>() * w.width(), w.y_min + rng.random::<f64>() * w.height());
            seen.insert(nearest_two_of(&t.bs_positions, &q).unwrap().key());
        }
        for key in seen {
            assert!(est.count(&key) > 0, "region {key} intersects the window but got no dummies");
        }
    }
}
