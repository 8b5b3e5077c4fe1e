//! Proper edge coloring: Misra–Gries (at most Δ + 1 colors), then a bounded
//! Kempe-chain pass that tries to empty the extra color.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeColoring {
    /// Edge `(i, j)` with `i < j` → color in `1..=l`.
    pub color: BTreeMap<(usize, usize), usize>,
    pub l: usize,
}

impl EdgeColoring {
    /// Checks that no two edges sharing a vertex have the same color.
    pub fn is_proper(&self) -> bool {
        let mut seen: BTreeMap<(usize, usize), ()> = BTreeMap::new();
        for (&(a, b), &c) in &self.color {
            if c == 0 || c > self.l {
                return false;
            }
            if seen.insert((a, c), ()).is_some() || seen.insert((b, c), ()).is_some() {
                return false;
            }
        }
        true
    }
}

struct Colorer {
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<(usize, usize)>>,
    color: Vec<Option<usize>>,
    /// `at[v][c]` is the edge of color `c` at `v`.
    at: Vec<Vec<Option<usize>>>,
}

impl Colorer {
    fn new(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for (e, &(a, b)) in edges.iter().enumerate() {
            adj[a].push((b, e));
            adj[b].push((a, e));
        }
        let delta = adj.iter().map(Vec::len).max().unwrap_or(0);
        Self {
            edges: edges.to_vec(),
            adj,
            color: vec![None; edges.len()],
            at: vec![vec![None; delta + 1]; n],
        }
    }

    fn other(&self, e: usize, v: usize) -> usize {
        let (a, b) = self.edges[e];
        if a == v {
            b
        } else {
            a
        }
    }

    fn is_free(&self, v: usize, c: usize) -> bool {
        self.at[v][c].is_none()
    }

    fn free_color(&self, v: usize, limit: usize) -> Option<usize> {
        (0..limit).find(|&c| self.is_free(v, c))
    }

    fn set(&mut self, e: usize, c: Option<usize>) {
        let (a, b) = self.edges[e];
        if let Some(old) = self.color[e] {
            self.at[a][old] = None;
            self.at[b][old] = None;
        }
        if let Some(new) = c {
            debug_assert!(self.at[a][new].is_none() && self.at[b][new].is_none());
            self.at[a][new] = Some(e);
            self.at[b][new] = Some(e);
        }
        self.color[e] = c;
    }

    /// Edges of the maximal path leaving `start` along colors `first`,
    /// `second`, `first`, …, plus its far endpoint.
    fn alternating_path(&self, start: usize, first: usize, second: usize) -> (Vec<usize>, usize) {
        let mut path = Vec::new();
        let (mut v, mut c) = (start, first);
        while let Some(e) = self.at[v][c] {
            path.push(e);
            v = self.other(e, v);
            c = if c == first { second } else { first };
            if path.len() > self.edges.len() {
                break;
            }
        }
        (path, v)
    }

    /// Exchanges colors `a` and `b` on the given edges.
    fn swap(&mut self, path: &[usize], a: usize, b: usize) {
        let old: Vec<Option<usize>> = path.iter().map(|&e| self.color[e]).collect();
        for &e in path {
            self.set(e, None);
        }
        for (&e, c) in path.iter().zip(old) {
            let flipped = match c {
                Some(x) if x == a => b,
                Some(_) => a,
                None => unreachable!("path edges are colored"),
            };
            self.set(e, Some(flipped));
        }
    }

    fn misra_gries(&mut self) {
        let ncol = self.at.first().map_or(0, Vec::len);
        for e in 0..self.edges.len() {
            let (u, v) = self.edges[e];
            let mut fan = vec![(v, e)];
            loop {
                let last = fan.last().expect("non-empty fan").0;
                let next = self.adj[u].iter().copied().find(|&(w, f)| {
                    self.color[f].is_some_and(|c| self.is_free(last, c))
                        && !fan.iter().any(|&(x, _)| x == w)
                });
                match next {
                    Some(item) => fan.push(item),
                    None => break,
                }
            }
            let c = self.free_color(u, ncol).expect("Δ+1 colors leave one free");
            let tip = fan.last().expect("non-empty fan").0;
            let d = self.free_color(tip, ncol).expect("Δ+1 colors leave one free");
            if !self.is_free(u, d) {
                let (path, _) = self.alternating_path(u, d, c);
                self.swap(&path, c, d);
            }
            let w = fan
                .iter()
                .position(|&(x, _)| self.is_free(x, d))
                .expect("some fan vertex has d free");
            let shifted: Vec<Option<usize>> = (0..w).map(|i| self.color[fan[i + 1].1]).collect();
            for &(_, f) in &fan[..=w] {
                self.set(f, None);
            }
            for (i, c) in shifted.into_iter().enumerate() {
                self.set(fan[i].1, c);
            }
            self.set(fan[w].1, Some(d));
        }
    }

    /// Tries to recolor uncolored edge `e` inside `0..limit`.
    fn recolor_within(&mut self, e: usize, limit: usize, budget: &mut usize) -> bool {
        let (u, v) = self.edges[e];
        let free_u: Vec<usize> = (0..limit).filter(|&c| self.is_free(u, c)).collect();
        let free_v: Vec<usize> = (0..limit).filter(|&c| self.is_free(v, c)).collect();
        if let Some(&c) = free_u.iter().find(|c| free_v.contains(c)) {
            self.set(e, Some(c));
            return true;
        }
        for &a in &free_u {
            for &b in &free_v {
                if *budget == 0 {
                    return false;
                }
                *budget -= 1;
                // a is used at v and b is free there, so v ends an a/b path.
                let (path, end) = self.alternating_path(v, a, b);
                if end == u {
                    continue;
                }
                self.swap(&path, a, b);
                self.set(e, Some(a));
                return true;
            }
        }
        false
    }

    /// Swaps colors `a` and `b` on the whole `{a, b}` component around `start`.
    fn swap_component(&mut self, start: usize, a: usize, b: usize) {
        let mut seen_v = vec![false; self.adj.len()];
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen_v[start] = true;
        while let Some(x) = queue.pop_front() {
            for c in [a, b] {
                if let Some(e) = self.at[x][c] {
                    if !comp.contains(&e) {
                        comp.push(e);
                    }
                    let y = self.other(e, x);
                    if !seen_v[y] {
                        seen_v[y] = true;
                        queue.push_back(y);
                    }
                }
            }
        }
        self.swap(&comp, a, b);
    }

    fn reduce_extra_color(&mut self, delta: usize, mut budget: usize) {
        if delta < 2 {
            return;
        }
        let extra = delta;
        let mut rng = rng::stream(0, "edge-recolor", 0);
        while budget > 0 {
            let Some(e) = (0..self.edges.len()).find(|&e| self.color[e] == Some(extra)) else {
                break;
            };
            self.set(e, None);
            if self.recolor_within(e, extra, &mut budget) {
                continue;
            }
            self.set(e, Some(extra));
            if budget == 0 {
                break;
            }
            budget -= 1;
            let (u, v) = self.edges[e];
            let pivot = if rng.random::<bool>() { u } else { v };
            let x = rng.random_range(0..extra);
            let mut y = rng.random_range(0..extra - 1);
            if y >= x {
                y += 1;
            }
            self.swap_component(pivot, x, y);
        }
    }
}

/// Colors `edges` (pairs over `0..n`, no loops or duplicates). The result is
/// proper with at most Δ + 1 colors; up to `recolor_budget` Kempe-chain
/// attempts are spent trying to bring it down to Δ. Colors are relabeled
/// `1..=l` in order of first use by the Δ + 1 palette.
pub fn color_edges(n: usize, edges: &[(usize, usize)], recolor_budget: usize) -> EdgeColoring {
    let mut colorer = Colorer::new(n, edges);
    let delta = colorer.adj.iter().map(Vec::len).max().unwrap_or(0);
    colorer.misra_gries();
    colorer.reduce_extra_color(delta, recolor_budget);

    let mut used: Vec<usize> = colorer.color.iter().map(|c| c.expect("all edges colored")).collect();
    used.sort_unstable();
    used.dedup();
    let relabel: BTreeMap<usize, usize> = used.iter().enumerate().map(|(i, &c)| (c, i + 1)).collect();
    let color = edges
        .iter()
        .zip(&colorer.color)
        .map(|(&(a, b), c)| ((a.min(b), a.max(b)), relabel[&c.expect("colored")]))
        .collect();
    EdgeColoring {
        color,
        l: used.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_degree(n: usize, edges: &[(usize, usize)]) -> usize {
        let mut d = vec![0; n];
        for &(a, b) in edges {
            d[a] += 1;
            d[b] += 1;
        }
        d.into_iter().max().unwrap_or(0)
    }

    #[test]
    fn complete_four_uses_three_colors() {
        let edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let c = color_edges(4, &edges, 60);
        assert!(c.is_proper());
        assert_eq!(c.l, 3);
    }

    #[test]
    fn triangle_needs_three() {
        let c = color_edges(3, &[(0, 1), (1, 2), (0, 2)], 30);
        assert!(c.is_proper());
        assert_eq!(c.l, 3);
    }

    #[test]
    fn triangular_torus_is_six_colorable() {
        // 6-regular triangular lattice on a 6×6 torus.
        let m = 6;
        let id = |i: usize, j: usize| (i % m) * m + (j % m);
        let mut edges = Vec::new();
        for i in 0..m {
            for j in 0..m {
                edges.push((id(i, j), id(i + 1, j)));
                edges.push((id(i, j), id(i, j + 1)));
                edges.push((id(i, j), id(i + 1, j + 1)));
            }
        }
        let edges: Vec<_> = edges.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        assert_eq!(max_degree(m * m, &edges), 6);
        let c = color_edges(m * m, &edges, 10 * edges.len());
        assert!(c.is_proper());
        assert_eq!(c.l, 6);
    }

    #[test]
    fn zero_budget_still_within_vizing_bound() {
        let edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let c = color_edges(4, &edges, 0);
        assert!(c.is_proper());
        assert!(c.l <= 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn random_graphs_proper_within_delta_plus_one(
            n in 2usize..25,
            raw in prop::collection::vec((0usize..25, 0usize..25), 0..120),
            budget in 0usize..500,
        ) {
            let mut edges: Vec<(usize, usize)> = raw
                .into_iter()
                .map(|(a, b)| (a % n, b % n))
                .filter(|(a, b)| a != b)
                .map(|(a, b)| (a.min(b), a.max(b)))
                .collect();
            edges.sort_unstable();
            edges.dedup();
            let c = color_edges(n, &edges, budget);
            prop_assert!(c.is_proper());
            prop_assert_eq!(c.color.len(), edges.len());
            let delta = max_degree(n, &edges);
            prop_assert!(c.l <= delta + 1);
            prop_assert!(c.l >= delta);
        }
    }
}
