//! Area-based edge cutting of the Delaunay graph and its edge coloring into
//! cluster patterns.

mod coloring;
mod edge_cut;
mod plan;

pub use coloring::{color_edges, EdgeColoring};
pub use edge_cut::{edge_cut, edge_cut_by, CutGraph, CutRecord};
pub use plan::{
    build_cluster_plan, edge_color, edge_color_with_budget, parse_plan_text, plan_from_cut, ClusterPlan,
    PlanText,
};
