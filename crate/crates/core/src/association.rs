//! User selection for the pattern-based plan and for the dynamic, static and
//! single-cell baselines.

use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{delaunay, nearest_two_of, NearestTwo, RegionKey};
use crate::graphcolor::ClusterPlan;
use crate::rng::{self, purpose};
use crate::topology::{Topology, UserSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Proposed,
    Dynamic,
    Static,
    SingleCell,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Dynamic => "dynamic",
            Method::Static => "static",
            Method::SingleCell => "single_cell",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Method::Proposed),
            "dynamic" => Ok(Method::Dynamic),
            "static" => Ok(Method::Static),
            "single_cell" => Ok(Method::SingleCell),
            other => invalid(format!("unknown method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServedUser {
    pub user: usize,
    pub serving: usize,
    pub partner: Option<usize>,
    /// 1-based pattern for the proposed plan.
    pub pattern: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceAssignment {
    pub method: Method,
    pub served: Vec<ServedUser>,
    pub unserved: Vec<usize>,
}

impl ServiceAssignment {
    fn finish(method: Method, mut served: Vec<ServedUser>, n_users: usize) -> Self {
        served.sort_by_key(|s| s.user);
        let mut is_served = vec![false; n_users];
        for s in &served {
            is_served[s.user] = true;
        }
        let unserved = (0..n_users).filter(|&u| !is_served[u]).collect();
        Self {
            method,
            served,
            unserved,
        }
    }

    /// BSs sending data on the given pattern (proposed) or in the shared slot
    /// (`None`, baselines).
    pub fn transmitting(&self, pattern: Option<usize>) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .served
            .iter()
            .filter(|s| s.pattern == pattern)
            .flat_map(|s| std::iter::once(s.serving).chain(s.partner))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Users served by each BS within one pattern or slot.
    pub fn load(&self, pattern: Option<usize>) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for s in self.served.iter().filter(|s| s.pattern == pattern) {
            *m.entry(s.serving).or_insert(0) += 1;
        }
        m
    }
}

/// Nearest-two record of every user.
pub fn user_geometry(topology: &Topology, users: &UserSet) -> Result<Vec<NearestTwo>> {
    users
        .user_positions
        .iter()
        .map(|u| nearest_two_of(&topology.bs_positions, u))
        .collect()
}

/// Each uncut region serves `K` uniformly chosen users from either side,
/// or nobody if a side has fewer than `K`.
pub fn associate_proposed(
    users: &UserSet,
    plan: &ClusterPlan,
    topology: &Topology,
    k: usize,
    seed: u64,
) -> Result<ServiceAssignment> {
    if k == 0 {
        return invalid("K must be at least 1");
    }
    let geo = user_geometry(topology, users)?;
    let mut by_region: BTreeMap<RegionKey, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (u, g) in geo.iter().enumerate() {
        let key = g.key();
        let entry = by_region.entry(key).or_default();
        if g.first == key.pair().0 {
            entry.0.push(u);
        } else {
            entry.1.push(u);
        }
    }
    let mut rng = rng::stream(seed, purpose::SCHEDULER, 0);
    let mut served = Vec::new();
    for (l, pattern) in plan.patterns.iter().enumerate() {
        for key in pattern {
            let Some((side_a, side_b)) = by_region.get(key) else {
                continue;
            };
            if side_a.len() < k || side_b.len() < k {
                continue;
            }
            let (a, b) = key.pair();
            for (side, bs, other) in [(side_a, a, b), (side_b, b, a)] {
                for i in index::sample(&mut rng, side.len(), k) {
                    served.push(ServedUser {
                        user: side[i],
                        serving: bs,
                        partner: Some(other),
                        pattern: Some(l + 1),
                    });
                }
            }
        }
    }
    Ok(ServiceAssignment::finish(Method::Proposed, served, geo.len()))
}

/// Greedy pair claiming in a random user order (one user per BS). The
/// second user of a new pair is drawn from the same region when possible,
/// else from the partner BS cell; leftover BSs serve a random own-cell user.
pub fn schedule_dynamic(users: &UserSet, topology: &Topology, k: usize, seed: u64) -> Result<ServiceAssignment> {
    if k != 1 {
        return invalid(format!("dynamic clustering is defined for K = 1 only, got K = {k}"));
    }
    let geo = user_geometry(topology, users)?;
    let n_bs = topology.len();
    let mut rng = rng::stream(seed, purpose::SCHEDULER, 1);
    let mut order: Vec<usize> = (0..geo.len()).collect();
    order.shuffle(&mut rng);

    let mut claimed = vec![false; n_bs];
    let mut taken = vec![false; geo.len()];
    let mut served = Vec::new();
    let pick = |taken: &[bool], rng: &mut rng::Rng, b: usize, filter: &dyn Fn(usize) -> bool| {
        let pool: Vec<usize> = (0..geo.len())
            .filter(|&w| !taken[w] && geo[w].first == b && filter(w))
            .collect();
        (!pool.is_empty()).then(|| pool[rng.random_range(0..pool.len())])
    };
    for &u in &order {
        if taken[u] {
            continue;
        }
        let (a, b) = (geo[u].first, geo[u].second);
        if claimed[a] || claimed[b] {
            continue;
        }
        claimed[a] = true;
        claimed[b] = true;
        taken[u] = true;
        served.push(ServedUser {
            user: u,
            serving: a,
            partner: Some(b),
            pattern: None,
        });
        let key = geo[u].key();
        let partner_user = pick(&taken, &mut rng, b, &|w| geo[w].key() == key)
            .or_else(|| pick(&taken, &mut rng, b, &|_| true));
        if let Some(w) = partner_user {
            taken[w] = true;
            served.push(ServedUser {
                user: w,
                serving: b,
                partner: Some(a),
                pattern: None,
            });
        }
    }
    for b in 0..n_bs {
        if claimed[b] {
            continue;
        }
        if let Some(w) = pick(&taken, &mut rng, b, &|_| true) {
            taken[w] = true;
            served.push(ServedUser {
                user: w,
                serving: b,
                partner: None,
                pattern: None,
            });
        }
    }
    Ok(ServiceAssignment::finish(Method::Dynamic, served, geo.len()))
}

/// Random pairing of Delaunay neighbors, then `K` uniform users per BS cell.
pub fn assign_static(topology: &Topology, users: &UserSet, k: usize, seed: u64) -> Result<ServiceAssignment> {
    if k == 0 {
        return invalid("K must be at least 1");
    }
    let graph = delaunay(topology)?;
    let n_bs = topology.len();
    let mut rng = rng::stream(seed, purpose::SCHEDULER, 2);
    let mut order: Vec<usize> = (0..n_bs).collect();
    order.shuffle(&mut rng);
    let mut partner: Vec<Option<usize>> = vec![None; n_bs];
    let mut paired = vec![false; n_bs];
    for &v in &order {
        if paired[v] {
            continue;
        }
        let free: Vec<usize> = graph.adjacency[v].iter().copied().filter(|&w| !paired[w]).collect();
        if free.is_empty() {
            continue;
        }
        let w = free[rng.random_range(0..free.len())];
        paired[v] = true;
        paired[w] = true;
        partner[v] = Some(w);
        partner[w] = Some(v);
    }
    let served = pick_per_cell(topology, users, k, &mut rng, |b| partner[b])?;
    Ok(ServiceAssignment::finish(Method::Static, served, users.user_positions.len()))
}

/// Every BS serves up to `K` uniform users of its own cell without coordination.
pub fn assign_single_cell(topology: &Topology, users: &UserSet, k: usize, seed: u64) -> Result<ServiceAssignment> {
    if k == 0 {
        return invalid("K must be at least 1");
    }
    let mut rng = rng::stream(seed, purpose::SCHEDULER, 3);
    let served = pick_per_cell(topology, users, k, &mut rng, |_| None)?;
    Ok(ServiceAssignment::finish(Method::SingleCell, served, users.user_positions.len()))
}

fn pick_per_cell(
    topology: &Topology,
    users: &UserSet,
    k: usize,
    rng: &mut rng::Rng,
    partner: impl Fn(usize) -> Option<usize>,
) -> Result<Vec<ServedUser>> {
    let geo = user_geometry(topology, users)?;
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); topology.len()];
    for (u, g) in geo.iter().enumerate() {
        cells[g.first].push(u);
    }
    let mut served = Vec::new();
    for (b, cell) in cells.iter().enumerate() {
        for i in index::sample(rng, cell.len(), k.min(cell.len())) {
            served.push(ServedUser {
                user: cell[i],
                serving: b,
                partner: partner(b),
                pattern: None,
            });
        }
    }
    Ok(served)
}

/// Optional alternation between the coordinated plan (fraction `coordinated`
/// of the time) and single-cell operation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSharing {
    pub coordinated: f64,
}

impl TimeSharing {
    pub fn new(coordinated: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&coordinated) {
            return invalid(format!("time fraction must lie in [0, 1], got {coordinated}"));
        }
        Ok(Self { coordinated })
    }

    /// Time-averaged throughput of a user.
    pub fn blend(&self, coordinated: f64, single_cell: f64) -> f64 {
        self.coordinated * coordinated + (1.0 - self.coordinated) * single_cell
    }
}
