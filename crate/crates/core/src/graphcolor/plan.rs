use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::coloring::{color_edges, EdgeColoring};
use super::edge_cut::{edge_cut, CutGraph};
use crate::error::{Error, Result};
use crate::geometry::{delaunay, AreaEstimate, RegionKey};
use crate::topology::Topology;

/// Default number of Kempe-chain attempts per edge when reducing Δ + 1 to Δ.
pub const RECOLOR_ATTEMPTS_PER_EDGE: usize = 10;

/// Colors the kept edges with the default recoloring budget of 10·|E|.
pub fn edge_color(graph: &CutGraph) -> EdgeColoring {
    edge_color_with_budget(graph, RECOLOR_ATTEMPTS_PER_EDGE * graph.kept_edges.len())
}

pub fn edge_color_with_budget(graph: &CutGraph, budget: usize) -> EdgeColoring {
    color_edges(graph.n_vertices(), &graph.kept_edges, budget)
}

/// Patterns `P_1..P_L`: pairs sharing one time-frequency resource.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPlan {
    /// `patterns[ℓ - 1]` holds the sorted pairs of color ℓ.
    pub patterns: Vec<Vec<RegionKey>>,
    /// Regions removed by edge cutting and never restored.
    pub cut_regions: Vec<RegionKey>,
    pub l: usize,
    pub cut_graph: CutGraph,
    pub coloring: EdgeColoring,
}

impl ClusterPlan {
    /// 1-based pattern of a region, or `None` for cut and non-Delaunay pairs.
    pub fn pattern_of(&self, key: RegionKey) -> Option<usize> {
        self.coloring.color.get(&key.pair()).copied()
    }

    pub fn is_cut(&self, key: RegionKey) -> bool {
        self.cut_regions.binary_search(&key).is_ok()
    }

    /// BSs active in pattern ℓ (1-based).
    pub fn pattern_bs(&self, l: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.patterns[l - 1]
            .iter()
            .flat_map(|k| {
                let (a, b) = k.pair();
                [a, b]
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// No BS appears twice in any pattern.
    pub fn patterns_bs_disjoint(&self) -> bool {
        (1..=self.l).all(|l| {
            let bs = self.pattern_bs(l);
            bs.windows(2).all(|w| w[0] != w[1])
        })
    }

    /// Maximum degree of the uncut Delaunay graph.
    pub fn delta(&self) -> usize {
        self.cut_graph.base.max_degree()
    }

    pub fn to_text(&self) -> String {
        PlanText {
            patterns: self.patterns.clone(),
            cut: self.cut_regions.clone(),
        }
        .to_string()
    }

    /// Multi-line summary with Δ, Δ_EC, L and the number of cut regions.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "bs = {}", self.cut_graph.n_vertices());
        let _ = writeln!(s, "delaunay_edges = {}", self.cut_graph.base.edges.len());
        let _ = writeln!(s, "delta = {}", self.delta());
        let _ = writeln!(s, "delta_ec = {}", self.cut_graph.delta_ec);
        let _ = writeln!(s, "cut_max_degree = {}", self.cut_graph.max_degree());
        let _ = writeln!(s, "l = {}", self.l);
        let _ = writeln!(s, "cut_regions = {}", self.cut_regions.len());
        let _ = writeln!(s, "restored = {}", self.cut_graph.restored.len());
        s
    }
}

/// Builds patterns from an already cut graph.
pub fn plan_from_cut(cut_graph: CutGraph) -> ClusterPlan {
    let coloring = edge_color(&cut_graph);
    let mut patterns = vec![Vec::new(); coloring.l];
    for (&(a, b), &c) in &coloring.color {
        patterns[c - 1].push(RegionKey::new(a, b).expect("simple graph"));
    }
    for p in &mut patterns {
        p.sort_unstable();
    }
    let cut_regions = cut_graph
        .cut_edges()
        .into_iter()
        .map(|(a, b)| RegionKey::new(a, b).expect("simple graph"))
        .collect();
    ClusterPlan {
        patterns,
        cut_regions,
        l: coloring.l,
        cut_graph,
        coloring,
    }
}

/// Delaunay graph, then edge cutting, then edge coloring.
pub fn build_cluster_plan(topology: &Topology, areas: &AreaEstimate, delta_ec: usize) -> Result<ClusterPlan> {
    let graph = delaunay(topology)?;
    let cut = edge_cut(&graph, areas, delta_ec)?;
    Ok(plan_from_cut(cut))
}

/// Pattern file contents: `pattern ℓ:` sections of `i j` lines, then `cut:`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanText {
    pub patterns: Vec<Vec<RegionKey>>,
    pub cut: Vec<RegionKey>,
}

impl std::fmt::Display for PlanText {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, p) in self.patterns.iter().enumerate() {
            writeln!(f, "pattern {}:", i + 1)?;
            for k in p {
                writeln!(f, "{k}")?;
            }
        }
        writeln!(f, "cut:")?;
        for k in &self.cut {
            writeln!(f, "{k}")?;
        }
        Ok(())
    }
}

pub fn parse_plan_text(text: &str) -> Result<PlanText> {
    enum Section {
        None,
        Pattern(usize),
        Cut,
    }
    let err = |line: usize, msg: String| Error::Parse { line, msg };
    let mut patterns: BTreeMap<usize, Vec<RegionKey>> = BTreeMap::new();
    let mut cut = Vec::new();
    let mut section = Section::None;
    for (no, raw) in text.lines().enumerate() {
        let line_no = no + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(head) = line.strip_suffix(':') {
            let head = head.trim();
            if head == "cut" {
                section = Section::Cut;
            } else if let Some(num) = head.strip_prefix("pattern") {
                let l: usize = num
                    .trim()
                    .parse()
                    .map_err(|_| err(line_no, format!("bad pattern header `{line}`")))?;
                if l == 0 || patterns.contains_key(&l) {
                    return Err(err(line_no, format!("pattern {l} is zero or repeated")));
                }
                patterns.insert(l, Vec::new());
                section = Section::Pattern(l);
            } else {
                return Err(err(line_no, format!("unknown section `{head}`")));
            }
            continue;
        }
        let mut it = line.split_whitespace().map(str::parse::<usize>);
        let (Some(Ok(i)), Some(Ok(j)), None) = (it.next(), it.next(), it.next()) else {
            return Err(err(line_no, format!("expected `i j`, got `{line}`")));
        };
        let key = RegionKey::new(i, j).map_err(|e| err(line_no, e.to_string()))?;
        match section {
            Section::None => return Err(err(line_no, "pair outside any section".into())),
            Section::Pattern(l) => patterns.get_mut(&l).expect("opened").push(key),
            Section::Cut => cut.push(key),
        }
    }
    let n = patterns.len();
    if patterns.keys().copied().ne(1..=n) {
        return Err(err(0, "pattern numbers must run 1..L".into()));
    }
    Ok(PlanText {
        patterns: patterns.into_values().collect(),
        cut,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{estimate_region_areas, DelaunayGraph};
    use crate::graphcolor::edge_cut_by;
    use crate::topology::{generate_perturbed_grid, Point2D};

    fn assert_plan_valid(plan: &ClusterPlan) {
        assert!(plan.coloring.is_proper());
        assert!(plan.patterns_bs_disjoint());
        let mut union: Vec<(usize, usize)> = plan.patterns.iter().flatten().map(|k| k.pair()).collect();
        union.sort_unstable();
        let before = union.len();
        union.dedup();
        assert_eq!(before, union.len(), "patterns overlap");
        assert_eq!(union, plan.cut_graph.kept_edges);
        assert!(plan.patterns.iter().all(|p| !p.is_empty()));
    }

    #[test]
    fn four_bs_give_three_patterns() {
        // A triangle with a site inside it: the Delaunay graph is K4.
        let pts = vec![
            Point2D::new(0., 0.),
            Point2D::new(10., 0.),
            Point2D::new(5., 9.),
            Point2D::new(5., 3.),
        ];
        let t = Topology::explicit(pts, None).unwrap();
        let areas = estimate_region_areas(&t, 2000, 1).unwrap();
        let plan = build_cluster_plan(&t, &areas, 3).unwrap();
        assert_eq!(plan.l, 3);
        assert!(plan.cut_regions.is_empty());
        assert_plan_valid(&plan);
        for p in &plan.patterns {
            assert_eq!(p.len(), 2);
        }
    }

    #[test]
    fn asymmetric_graph_patterns_are_bs_disjoint() {
        for seed in 0..10 {
            let t = generate_perturbed_grid(5, 5, 200.0, 200.0, seed).unwrap();
            let areas = estimate_region_areas(&t, 3000, seed).unwrap();
            let plan = build_cluster_plan(&t, &areas, 5).unwrap();
            assert_plan_valid(&plan);
        }
    }

    #[test]
    fn seeded_49_bs_with_delta_ec_4() {
        let t = generate_perturbed_grid(7, 7, 200.0, 100.0, 2024).unwrap();
        let areas = estimate_region_areas(&t, 5000, 2024).unwrap();
        let plan = build_cluster_plan(&t, &areas, 4).unwrap();
        assert_plan_valid(&plan);
        assert_eq!(plan.cut_graph.max_degree(), 4);
        assert!(plan.l == 4 || plan.l == 5, "L = {}", plan.l);
    }

    #[test]
    fn min_degree_cut_bounds_every_vertex() {
        for seed in 0..5 {
            let t = generate_perturbed_grid(7, 7, 200.0, 200.0, seed).unwrap();
            let g = delaunay(&t).unwrap();
            let areas = estimate_region_areas(&t, 5000, seed).unwrap();
            let dmin = g.min_degree();
            let plan = build_cluster_plan(&t, &areas, dmin).unwrap();
            assert!(plan.cut_graph.degrees().iter().all(|&d| d <= dmin));
            assert_plan_valid(&plan);
        }
    }

    #[test]
    fn lattice_patch_colors_with_six() {
        // Central part of a triangular lattice: interior sites have degree 6.
        let mut pts = Vec::new();
        for r in 0..7 {
            for c in 0..7 {
                let x = c as f64 + if r % 2 == 1 { 0.5 } else { 0.0 };
                pts.push(Point2D::new(x * 100.0, r as f64 * 100.0 * 3f64.sqrt() / 2.0));
            }
        }
        let t = Topology::explicit(pts, None).unwrap();
        let g = delaunay(&t).unwrap();
        assert_eq!(g.max_degree(), 6);
        let cut = edge_cut_by(&g, |_| 1.0, 6).unwrap();
        let plan = plan_from_cut(cut);
        assert_plan_valid(&plan);
        assert_eq!(plan.l, 6);
    }

    #[test]
    fn deterministic() {
        let t = generate_perturbed_grid(7, 7, 200.0, 200.0, 9).unwrap();
        let areas = estimate_region_areas(&t, 5000, 9).unwrap();
        let a = build_cluster_plan(&t, &areas, 4).unwrap();
        let b = build_cluster_plan(&t, &areas, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn text_round_trip() {
        let g = DelaunayGraph::from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5), (0, 3)]);
        let cut = edge_cut_by(&g, |k| k.pair().0 as f64 + 1.0, 2).unwrap();
        let plan = plan_from_cut(cut);
        let text = plan.to_text();
        assert!(text.starts_with("pattern 1:\n"));
        assert!(text.contains("cut:\n"));
        let parsed = parse_plan_text(&text).unwrap();
        assert_eq!(parsed.patterns, plan.patterns);
        assert_eq!(parsed.cut, plan.cut_regions);
        assert!(parse_plan_text("0 1\n").is_err());
        assert!(parse_plan_text("pattern 2:\n0 1\ncut:\n").is_err());
        assert!(parse_plan_text("pattern 1:\n0 0\n").is_err());
    }
}
