//! Monte-Carlo experiments: coverage and edge-user throughput comparisons
//! across coordination methods, plus analytical-vs-simulated validation runs.
//!
//! Every replicate draws from its own RNG substream and results are collected
//! in replicate order, so output does not depend on the thread count.

mod table;

use std::collections::BTreeMap;

use rand::Rng as _;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{ergodic_se_exact, ergodic_se_lower, ergodic_se_ppp_lower, rate_coverage_approx, rate_coverage_exact, FixedGeometry};
use crate::association::{assign_single_cell, assign_static, associate_proposed, schedule_dynamic, user_geometry, Method, ServiceAssignment};
use crate::channel::{draw_gains, draw_pair_gains, pilot_overhead, sinr, GainModel, ScenarioParams};
use crate::error::{invalid, Error, Result};
use crate::geometry::{estimate_region_areas, NearestTwo};
use crate::graphcolor::{build_cluster_plan, ClusterPlan};
use crate::rng::{self, derive_seed, purpose};
use crate::topology::{drop_users_per_bs, generate_perturbed_grid, generate_ppp, Point2D, Rect, Topology, UserSet};

pub use table::{mean_stderr, ResultRow, ResultTable};

/// Draws per parallel work unit in the single-geometry runs.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TopologySpec {
    Grid { rows: usize, cols: usize, cell_size: f64, p: f64 },
    Ppp { density: f64, width: f64, height: f64 },
    Explicit { points: Vec<Point2D> },
}

impl TopologySpec {
    /// The 7×7 grid of 200 m cells with perturbation side `p`.
    pub fn standard_grid(p: f64) -> Self {
        TopologySpec::Grid {
            rows: 7,
            cols: 7,
            cell_size: 200.0,
            p,
        }
    }

    pub fn build(&self, seed: u64) -> Result<Topology> {
        match self {
            TopologySpec::Grid { rows, cols, cell_size, p } => generate_perturbed_grid(*rows, *cols, *cell_size, *p, seed),
            TopologySpec::Ppp { density, width, height } => {
                generate_ppp(*density, Rect::new(0.0, 0.0, *width, *height)?, seed)
            }
            TopologySpec::Explicit { points } => Topology::explicit(points.clone(), None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: ScenarioParams,
    pub topology: TopologySpec,
    pub methods: Vec<Method>,
    /// Independent topology seeds.
    pub topologies: usize,
    /// User drops per topology.
    pub drops: usize,
    /// Fading draws per served user, or total draws for the single-geometry runs.
    pub trials: usize,
    pub gamma_grid: Vec<f64>,
    pub k_per_bs_grid: Vec<usize>,
    pub snr_grid_db: Vec<f64>,
    /// `(N, K)` combinations for the validation runs.
    pub validation_pairs: Vec<(usize, usize)>,
    pub edge_user_threshold: f64,
    pub n_dummies: usize,
    pub gain_model: GainModel,
    /// Tagged user for the validation runs; picked near the window center if unset.
    pub tagged_user: Option<Point2D>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioParams::default(),
            topology: TopologySpec::standard_grid(100.0),
            methods: vec![Method::Proposed, Method::Dynamic, Method::Static],
            topologies: 20,
            drops: 1,
            trials: 10,
            gamma_grid: (0..=12).map(|i| i as f64 * 0.5).collect(),
            k_per_bs_grid: vec![5, 10, 20, 40, 60],
            snr_grid_db: (4..=14).map(|i| i as f64 * 10.0).collect(),
            validation_pairs: vec![(3, 1), (4, 2), (10, 5)],
            edge_user_threshold: 2.0 / 3.0,
            n_dummies: 5000,
            gain_model: GainModel::Vector,
            tagged_user: None,
            seed: 1,
        }
    }
}

impl ExperimentConfig {
    /// Coverage approximation against simulation on one p = 200 topology.
    pub fn fig5() -> Self {
        Self {
            topology: TopologySpec::standard_grid(200.0),
            scenario: ScenarioParams {
                snr_db: None,
                ..ScenarioParams::default()
            },
            topologies: 1,
            trials: 100_000,
            gamma_grid: (0..=16).map(|i| i as f64 * 0.25).collect(),
            ..Self::default()
        }
    }

    /// Ergodic spectral efficiency bound against simulation over SNR.
    pub fn fig6() -> Self {
        Self {
            topology: TopologySpec::standard_grid(200.0),
            topologies: 1,
            trials: 20_000,
            ..Self::default()
        }
    }

    /// Edge-user sum throughput against users per BS.
    pub fn fig8(p: f64) -> Self {
        Self {
            topology: TopologySpec::standard_grid(p),
            ..Self::default()
        }
    }

    /// Rate coverage at 40 users per BS.
    pub fn fig9(p: f64) -> Self {
        Self {
            topology: TopologySpec::standard_grid(p),
            gamma_grid: (0..=16).map(|i| i as f64 * 0.25).collect(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.trials == 0 || self.topologies == 0 || self.drops == 0 {
            return invalid("trials, topologies and drops must all be at least 1");
        }
        if !(self.edge_user_threshold > 0.0 && self.edge_user_threshold < 1.0) {
            return invalid(format!("edge-user threshold must lie in (0, 1), got {}", self.edge_user_threshold));
        }
        if self.methods.is_empty() {
            return invalid("at least one method is required");
        }
        if self.n_dummies == 0 {
            return invalid("dummy-user count must be positive");
        }
        if self.gamma_grid.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return invalid("rate thresholds must be finite and non-negative");
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return invalid("SNR grid values must be finite");
        }
        for &(n, k) in &self.validation_pairs {
            if k == 0 || n < 2 * k {
                return invalid(format!("validation pair needs N ≥ 2K ≥ 2, got N = {n}, K = {k}"));
            }
        }
        Ok(())
    }

    /// Hex FNV-1a digest of the full configuration.
    pub fn hash(&self) -> String {
        format!("{:016x}", rng::fnv1a(format!("{self:?}").as_bytes()))
    }

    fn table(&self, title: &str, x_label: &str, y_label: &str) -> ResultTable {
        ResultTable::new(title, x_label, y_label, self.hash(), self.seed)
    }
}

/// A topology together with its cluster plan.
#[derive(Debug, Clone)]
pub struct Deployment {
    pub topology: Topology,
    pub plan: ClusterPlan,
}

/// Builds topology `t` of the configuration and its plan.
pub fn deployment(config: &ExperimentConfig, t: usize) -> Result<Deployment> {
    let topology = config.topology.build(derive_seed(config.seed, purpose::TOPOLOGY, t as u64))?;
    let areas = estimate_region_areas(&topology, config.n_dummies, derive_seed(config.seed, purpose::DUMMIES, t as u64))?;
    let plan = build_cluster_plan(&topology, &areas, config.scenario.delta_ec)?;
    Ok(Deployment { topology, plan })
}

fn deployments(config: &ExperimentConfig) -> Result<Vec<Deployment>> {
    (0..config.topologies).into_par_iter().map(|t| deployment(config, t)).collect()
}

pub fn assign(method: Method, dep: &Deployment, users: &UserSet, k: usize, seed: u64) -> Result<ServiceAssignment> {
    match method {
        Method::Proposed => associate_proposed(users, &dep.plan, &dep.topology, k, seed),
        Method::Dynamic => schedule_dynamic(users, &dep.topology, k, seed),
        Method::Static => assign_static(&dep.topology, users, k, seed),
        Method::SingleCell => assign_single_cell(&dep.topology, users, k, seed),
    }
}

/// One served user inside the analysis window with its fixed geometry.
struct Link {
    near: NearestTwo,
    geom: FixedGeometry,
    n_constraints: usize,
    /// Pre-log share of the resource.
    weight: f64,
}

fn links(dep: &Deployment, users: &UserSet, a: &ServiceAssignment, k: usize) -> Result<Vec<Link>> {
    let near = user_geometry(&dep.topology, users)?;
    let bs = &dep.topology.bs_positions;
    let mut active: BTreeMap<Option<usize>, Vec<usize>> = BTreeMap::new();
    let mut out = Vec::new();
    for s in &a.served {
        let u = users.user_positions[s.user];
        if !dep.topology.analysis_window.contains(&u) {
            continue;
        }
        let tx = active.entry(s.pattern).or_insert_with(|| a.transmitting(s.pattern));
        let interferers: Vec<Point2D> = tx
            .iter()
            .filter(|&&b| b != s.serving && Some(b) != s.partner)
            .map(|&b| bs[b])
            .collect();
        out.push(Link {
            near: near[s.user],
            geom: FixedGeometry::from_positions(&u, &bs[s.serving], &interferers)?,
            n_constraints: if s.partner.is_some() { 2 * k - 1 } else { k - 1 },
            weight: if s.pattern.is_some() { 1.0 / dep.plan.l as f64 } else { 1.0 },
        });
    }
    Ok(out)
}

fn link_sinr(link: &Link, cfg: &ExperimentConfig, rng: &mut rng::Rng) -> Result<f64> {
    let p = &cfg.scenario;
    let draw = draw_gains(cfg.gain_model, p.n, p.k, link.n_constraints, link.geom.ratios.len(), rng)?;
    Ok(sinr(&draw, &link.geom.ratios, p.beta, p.noise_term(link.geom.d0)))
}

struct Replicate {
    x_index: usize,
    t: usize,
    d: usize,
}

impl Replicate {
    fn user_seed(&self, cfg: &ExperimentConfig) -> u64 {
        let inner = (self.t * cfg.drops + self.d) as u64;
        derive_seed(derive_seed(cfg.seed, purpose::USERS, self.x_index as u64), purpose::USERS, inner)
    }

    fn method_stream(&self, cfg: &ExperimentConfig, m: usize) -> rng::Rng {
        rng::stream(self.user_seed(cfg), purpose::FADING, m as u64)
    }

    fn scheduler_seed(&self, cfg: &ExperimentConfig) -> u64 {
        derive_seed(self.user_seed(cfg), purpose::SCHEDULER, 0)
    }
}

fn replicates(cfg: &ExperimentConfig, n_x: usize) -> Vec<Replicate> {
    let mut out = Vec::new();
    for x_index in 0..n_x {
        for t in 0..cfg.topologies {
            for d in 0..cfg.drops {
                out.push(Replicate { x_index, t, d });
            }
        }
    }
    out
}

/// Empirical `P[log₂(1 + SINR) > γ]` over served users in the analysis
/// window, one replicate per (topology, drop).
pub fn run_rate_coverage(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    let deps = deployments(config)?;
    let reps = replicates(config, 1);
    let k = config.scenario.k;
    let per_rep: Vec<Vec<Option<Vec<f64>>>> = reps
        .par_iter()
        .map(|rep| {
            let dep = &deps[rep.t];
            let users = drop_users_per_bs(&dep.topology, config.scenario.k_per_bs, rep.user_seed(config));
            config
                .methods
                .iter()
                .enumerate()
                .map(|(mi, &m)| {
                    let a = assign(m, dep, &users, k, rep.scheduler_seed(config))?;
                    let ls = links(dep, &users, &a, k)?;
                    if ls.is_empty() {
                        return Ok(None);
                    }
                    let mut rng = rep.method_stream(config, mi);
                    let mut covered = vec![0usize; config.gamma_grid.len()];
                    for l in &ls {
                        for _ in 0..config.trials {
                            let rate = link_sinr(l, config, &mut rng)?.ln_1p() * std::f64::consts::LOG2_E;
                            for (c, &g) in covered.iter_mut().zip(&config.gamma_grid) {
                                if rate > g || (g == 0.0 && rate >= 0.0) {
                                    *c += 1;
                                }
                            }
                        }
                    }
                    let total = (ls.len() * config.trials) as f64;
                    Ok(Some(covered.into_iter().map(|c| c as f64 / total).collect()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut table = config.table("rate coverage", "rate threshold (bits/s/Hz)", "coverage probability");
    for (mi, m) in config.methods.iter().enumerate() {
        let kept: Vec<&Vec<f64>> = per_rep.iter().filter_map(|r| r[mi].as_ref()).collect();
        table.skipped += per_rep.len() - kept.len();
        for (gi, &g) in config.gamma_grid.iter().enumerate() {
            let vals: Vec<f64> = kept.iter().map(|v| v[gi]).collect();
            table.push_replicates(g, m.name(), &vals);
        }
    }
    Ok(table)
}

/// Sum over served edge users in the analysis window of the per-user
/// throughput, against users per BS.
pub fn run_edge_user_throughput(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    if config.k_per_bs_grid.is_empty() {
        return invalid("users-per-BS grid is empty");
    }
    let deps = deployments(config)?;
    let reps = replicates(config, config.k_per_bs_grid.len());
    let k = config.scenario.k;
    let per_rep: Vec<Vec<Option<f64>>> = reps
        .par_iter()
        .map(|rep| {
            let dep = &deps[rep.t];
            let users = drop_users_per_bs(&dep.topology, config.k_per_bs_grid[rep.x_index], rep.user_seed(config));
            config
                .methods
                .iter()
                .enumerate()
                .map(|(mi, &m)| {
                    let a = assign(m, dep, &users, k, rep.scheduler_seed(config))?;
                    let ls = links(dep, &users, &a, k)?;
                    if ls.is_empty() {
                        return Ok(None);
                    }
                    let mut rng = rep.method_stream(config, mi);
                    let mut sum = 0.0;
                    for l in ls.iter().filter(|l| l.near.d_first / l.near.d_second > config.edge_user_threshold) {
                        let mut acc = 0.0;
                        for _ in 0..config.trials {
                            let s = link_sinr(l, config, &mut rng)?;
                            let share = if config.scenario.overhead_enabled {
                                match pilot_overhead(&config.scenario, s) {
                                    Ok(alpha) => 1.0 - alpha,
                                    Err(Error::Overhead(_)) => 0.0,
                                    Err(e) => return Err(e),
                                }
                            } else {
                                1.0
                            };
                            acc += share * s.ln_1p() * std::f64::consts::LOG2_E;
                        }
                        sum += l.weight * acc / config.trials as f64;
                    }
                    Ok(Some(sum))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut table = config.table("edge-user sum throughput", "users per BS", "sum throughput (bits/s/Hz)");
    let per_x = config.topologies * config.drops;
    for (mi, m) in config.methods.iter().enumerate() {
        for (xi, &kpb) in config.k_per_bs_grid.iter().enumerate() {
            let block = &per_rep[xi * per_x..(xi + 1) * per_x];
            let vals: Vec<f64> = block.iter().filter_map(|r| r[mi]).collect();
            table.skipped += per_x - vals.len();
            table.push_replicates(kpb as f64, m.name(), &vals);
        }
    }
    Ok(table)
}

/// Tagged user geometry for the validation runs.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedLink {
    pub user: Point2D,
    pub serving: usize,
    pub partner: usize,
    pub pattern: usize,
    pub interferers: Vec<usize>,
    pub geometry: FixedGeometry,
}

/// The configured tagged user, or the probe point closest to the analysis
/// window center whose region was kept by the plan.
pub fn tagged_link(config: &ExperimentConfig, dep: &Deployment) -> Result<TaggedLink> {
    let bs = &dep.topology.bs_positions;
    let make = |u: Point2D| -> Result<Option<TaggedLink>> {
        let near = crate::geometry::nearest_two_of(bs, &u)?;
        let Some(pattern) = dep.plan.pattern_of(near.key()) else {
            return Ok(None);
        };
        let interferers: Vec<usize> = dep
            .plan
            .pattern_bs(pattern)
            .into_iter()
            .filter(|&b| b != near.first && b != near.second)
            .collect();
        let pts: Vec<Point2D> = interferers.iter().map(|&b| bs[b]).collect();
        Ok(Some(TaggedLink {
            user: u,
            serving: near.first,
            partner: near.second,
            pattern,
            geometry: FixedGeometry::from_positions(&u, &bs[near.first], &pts)?,
            interferers,
        }))
    };
    if let Some(u) = config.tagged_user {
        return make(u)?.ok_or_else(|| Error::InvalidParameter("tagged user lies in a cut region".into()));
    }
    let mut probe = rng::stream(config.seed, purpose::USERS, u64::MAX);
    let win = dep.topology.analysis_window;
    let center = win.center();
    let mut pts: Vec<Point2D> = (0..2000).map(|_| win.sample(&mut probe)).collect();
    pts.sort_by(|a, b| a.dist2(&center).total_cmp(&b.dist2(&center)));
    for u in pts {
        if let Some(link) = make(u)? {
            return Ok(link);
        }
    }
    Err(Error::Degenerate("no probe point falls in a kept region".into()))
}

fn pair_params(config: &ExperimentConfig, n: usize, k: usize) -> ScenarioParams {
    ScenarioParams {
        n,
        k,
        ..config.scenario.clone()
    }
}

fn chunks(total: usize) -> Vec<(u64, usize)> {
    (0..total.div_ceil(CHUNK))
        .map(|c| (c as u64, CHUNK.min(total - c * CHUNK)))
        .collect()
}

/// Approximate and exact analytical coverage against simulated coverage for
/// the tagged user, one pair of series per `(N, K)`.
pub fn run_validation(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    let dep = deployment(config, 0)?;
    let link = tagged_link(config, &dep)?;
    let mut table = config.table("coverage: analysis vs simulation", "rate threshold (bits/s/Hz)", "coverage probability");
    for (pi, &(n, k)) in config.validation_pairs.iter().enumerate() {
        let params = pair_params(config, n, k);
        let noise = params.noise_term(link.geometry.d0);
        let base = derive_seed(config.seed, purpose::FADING, pi as u64);
        let counts: Vec<Vec<usize>> = chunks(config.trials)
            .into_par_iter()
            .map(|(c, len)| {
                let mut rng = rng::stream(base, purpose::REPLICATE, c);
                let mut covered = vec![0usize; config.gamma_grid.len()];
                for _ in 0..len {
                    let draw = draw_pair_gains(config.gain_model, &params, link.geometry.ratios.len(), &mut rng)?;
                    let rate = sinr(&draw, &link.geometry.ratios, params.beta, noise).ln_1p() * std::f64::consts::LOG2_E;
                    for (cv, &g) in covered.iter_mut().zip(&config.gamma_grid) {
                        if rate > g || (g == 0.0 && rate >= 0.0) {
                            *cv += 1;
                        }
                    }
                }
                Ok(covered)
            })
            .collect::<Result<_>>()?;
        let tag = format!("n{n}_k{k}");
        for (gi, &g) in config.gamma_grid.iter().enumerate() {
            let p = ScenarioParams { gamma: g, ..params.clone() };
            table.push(g, &format!("approx_{tag}"), rate_coverage_approx(&link.geometry, &p)?, 0.0, 0);
            table.push(g, &format!("exact_{tag}"), rate_coverage_exact(&link.geometry, &p)?, 0.0, 0);
            let hits: usize = counts.iter().map(|c| c[gi]).sum();
            let mean = hits as f64 / config.trials as f64;
            let se = (mean * (1.0 - mean) / config.trials as f64).sqrt();
            table.push(g, &format!("mc_{tag}"), mean, se, config.trials);
        }
    }
    Ok(table)
}

/// Lower bound and exact integral for the ergodic spectral efficiency against
/// simulation over the SNR grid.
pub fn run_ergodic_validation(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    if config.snr_grid_db.is_empty() {
        return invalid("SNR grid is empty");
    }
    let dep = deployment(config, 0)?;
    let link = tagged_link(config, &dep)?;
    let mut table = config.table("ergodic spectral efficiency vs SNR", "SNR (dB)", "spectral efficiency (bits/s/Hz)");
    for (pi, &(n, k)) in config.validation_pairs.iter().enumerate() {
        let tag = format!("n{n}_k{k}");
        for (si, &snr) in config.snr_grid_db.iter().enumerate() {
            let params = ScenarioParams {
                snr_db: Some(snr),
                ..pair_params(config, n, k)
            };
            let noise = params.noise_term(link.geometry.d0);
            let base = derive_seed(derive_seed(config.seed, purpose::FADING, pi as u64), purpose::FADING, si as u64);
            let sums: Vec<(f64, f64)> = chunks(config.trials)
                .into_par_iter()
                .map(|(c, len)| {
                    let mut rng = rng::stream(base, purpose::REPLICATE, c);
                    let (mut s, mut s2) = (0.0, 0.0);
                    for _ in 0..len {
                        let draw = draw_pair_gains(config.gain_model, &params, link.geometry.ratios.len(), &mut rng)?;
                        let r = sinr(&draw, &link.geometry.ratios, params.beta, noise).ln_1p() * std::f64::consts::LOG2_E
                            / params.l as f64;
                        s += r;
                        s2 += r * r;
                    }
                    Ok((s, s2))
                })
                .collect::<Result<_>>()?;
            let t = config.trials as f64;
            let (s, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
            let mean = s / t;
            let var = if config.trials > 1 { (s2 - t * mean * mean).max(0.0) / (t - 1.0) } else { 0.0 };
            table.push(snr, &format!("lower_{tag}"), ergodic_se_lower(&link.geometry, &params)?, 0.0, 0);
            table.push(snr, &format!("exact_{tag}"), ergodic_se_exact(&link.geometry, &params)?, 0.0, 0);
            table.push(snr, &format!("mc_{tag}"), mean, (var / t).sqrt(), config.trials);
        }
    }
    Ok(table)
}

/// Typical-user simulation for the Poisson-network bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PppBoundConfig {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub beta: f64,
    /// Mean number of BSs in the simulated disc.
    pub mean_bs: f64,
    pub trials: usize,
    pub gain_model: GainModel,
    pub seed: u64,
}

impl Default for PppBoundConfig {
    fn default() -> Self {
        Self {
            n: 3,
            k: 1,
            l: 4,
            beta: 4.0,
            mean_bs: 400.0,
            trials: 100_000,
            gain_model: GainModel::Gamma,
            seed: 1,
        }
    }
}

/// `(1/L) E[log₂(1 + SIR)]` for a user at the origin served by its two
/// nearest BSs of a Poisson field, every other BS interfering, next to the
/// closed-form lower bound. The field is unit-density inside a disc holding
/// `mean_bs` BSs on average.
pub fn run_ppp_bound(config: &PppBoundConfig) -> Result<ResultTable> {
    let bound = ergodic_se_ppp_lower(config.n, config.k, config.l, config.beta)?;
    if config.trials == 0 || !(config.mean_bs >= 3.0) {
        return invalid("need at least one trial and a mean of at least 3 BSs");
    }
    let radius = (config.mean_bs / std::f64::consts::PI).sqrt();
    let count = Poisson::new(config.mean_bs).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let params = ScenarioParams {
        n: config.n,
        k: config.k,
        l: config.l,
        beta: config.beta,
        snr_db: None,
        ..ScenarioParams::default()
    };
    params.validate()?;
    let base = derive_seed(config.seed, purpose::TOPOLOGY, 0);
    let sums: Vec<(f64, f64)> = chunks(config.trials)
        .into_par_iter()
        .map(|(c, len)| {
            let mut rng = rng::stream(base, purpose::REPLICATE, c);
            let (mut s, mut s2) = (0.0, 0.0);
            let mut done = 0;
            while done < len {
                let m = count.sample(&mut rng) as usize;
                if m < 2 {
                    continue;
                }
                let mut d: Vec<f64> = (0..m).map(|_| radius * rng.random::<f64>().sqrt()).collect();
                d.sort_by(f64::total_cmp);
                let ratios: Vec<f64> = d[2..].iter().map(|x| x / d[0]).collect();
                let draw = draw_pair_gains(config.gain_model, &params, ratios.len(), &mut rng)?;
                let r = sinr(&draw, &ratios, params.beta, 0.0).ln_1p() * std::f64::consts::LOG2_E / params.l as f64;
                s += r;
                s2 += r * r;
                done += 1;
            }
            Ok((s, s2))
        })
        .collect::<Result<_>>()?;
    let t = config.trials as f64;
    let (s, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let mean = s / t;
    let var = if config.trials > 1 { (s2 - t * mean * mean).max(0.0) / (t - 1.0) } else { 0.0 };
    let hash = format!("{:016x}", rng::fnv1a(format!("{config:?}").as_bytes()));
    let mut table = ResultTable::new("Poisson network spectral efficiency", "path-loss exponent", "spectral efficiency (bits/s/Hz)", hash, config.seed);
    table.push(config.beta, "mc", mean, (var / t).sqrt(), config.trials);
    table.push(config.beta, "bound", bound, 0.0, 0);
    Ok(table)
}

/// Users dropped for replicate `(t, d)` at users-per-BS `k_per_bs`, as used by
/// the throughput run at grid index `x_index`.
pub fn replicate_users(config: &ExperimentConfig, dep: &Deployment, x_index: usize, t: usize, d: usize, k_per_bs: usize) -> UserSet {
    let rep = Replicate { x_index, t, d };
    drop_users_per_bs(&dep.topology, k_per_bs, rep.user_seed(config))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(p: f64) -> ExperimentConfig {
        ExperimentConfig {
            topologies: 3,
            trials: 4,
            k_per_bs_grid: vec![10, 40],
            gain_model: GainModel::Gamma,
            ..ExperimentConfig::fig8(p)
        }
    }

    #[test]
    fn config_checks() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let bad = ExperimentConfig {
            trials: 0,
            ..ExperimentConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig {
            edge_user_threshold: 1.0,
            ..ExperimentConfig::default()
        };
        assert!(bad.validate().is_err());
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { seed: 2, ..a.clone() };
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), ExperimentConfig::default().hash());
    }

    #[test]
    fn zero_threshold_is_always_covered() {
        let cfg = ExperimentConfig {
            gamma_grid: vec![0.0, 1.0],
            ..small(100.0)
        };
        let t = run_rate_coverage(&cfg).unwrap();
        for m in ["proposed", "dynamic", "static"] {
            let r = t.get(0.0, m).unwrap();
            assert_eq!(r.mean, 1.0, "{m}");
            assert_eq!(r.n, 3);
            assert!(t.get(1.0, m).unwrap().mean < 1.0);
        }
    }

    #[test]
    fn bit_identical_reruns() {
        let cfg = small(200.0);
        let a = run_edge_user_throughput(&cfg).unwrap();
        let b = run_edge_user_throughput(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = pool.install(|| run_edge_user_throughput(&cfg).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn proposed_users_null_their_two_strongest_sources() {
        let cfg = small(200.0);
        for t in 0..3 {
            let dep = deployment(&cfg, t).unwrap();
            let users = replicate_users(&cfg, &dep, 0, t, 0, 20);
            let a = assign(Method::Proposed, &dep, &users, 1, 5).unwrap();
            assert!(!a.served.is_empty());
            let near = user_geometry(&dep.topology, &users).unwrap();
            for s in &a.served {
                let g = near[s.user];
                assert_eq!(s.serving, g.first);
                assert_eq!(s.partner, Some(g.second));
            }
        }
    }

    #[test]
    fn throughput_rows_have_schema() {
        let t = run_edge_user_throughput(&small(100.0)).unwrap();
        assert_eq!(t.methods(), vec!["proposed", "dynamic", "static"]);
        assert_eq!(t.rows.len(), 6);
        assert!(t.rows.iter().all(|r| r.mean > 0.0 && r.stderr >= 0.0));
        assert!(t.to_csv().lines().any(|l| l == "x,method,mean,stderr,n"));
    }

    #[test]
    fn validation_rows_pair_analysis_with_simulation() {
        let cfg = ExperimentConfig {
            trials: 20_000,
            gain_model: GainModel::Gamma,
            gamma_grid: vec![0.0, 0.5, 1.0, 2.0],
            ..ExperimentConfig::fig5()
        };
        let t = run_validation(&cfg).unwrap();
        for tag in ["n3_k1", "n4_k2", "n10_k5"] {
            for &g in &cfg.gamma_grid {
                let exact = t.get(g, &format!("exact_{tag}")).unwrap().mean;
                let mc = t.get(g, &format!("mc_{tag}")).unwrap();
                assert!((exact - mc.mean).abs() <= 4.0 * mc.stderr + 1e-9, "{tag} γ={g}: {exact} vs {}", mc.mean);
            }
            assert_eq!(t.get(0.0, &format!("approx_{tag}")).unwrap().mean, 1.0);
        }
    }

    #[test]
    fn tagged_link_interferers_share_its_pattern() {
        let cfg = ExperimentConfig::fig5();
        let dep = deployment(&cfg, 0).unwrap();
        let link = tagged_link(&cfg, &dep).unwrap();
        let pat = dep.plan.pattern_bs(link.pattern);
        assert!(pat.contains(&link.serving) && pat.contains(&link.partner));
        assert_eq!(link.interferers.len(), pat.len() - 2);
        assert!(link.geometry.ratios.iter().all(|&r| r >= 1.0));
    }

    #[test]
    fn ergodic_simulation_sits_above_lower_bound() {
        let cfg = ExperimentConfig {
            trials: 20_000,
            gain_model: GainModel::Gamma,
            snr_grid_db: vec![50.0, 80.0, 110.0, 140.0],
            ..ExperimentConfig::fig6()
        };
        let t = run_ergodic_validation(&cfg).unwrap();
        for tag in ["n3_k1", "n4_k2", "n10_k5"] {
            for &s in &cfg.snr_grid_db {
                let lower = t.get(s, &format!("lower_{tag}")).unwrap().mean;
                let exact = t.get(s, &format!("exact_{tag}")).unwrap().mean;
                let mc = t.get(s, &format!("mc_{tag}")).unwrap();
                assert!(lower <= exact + 1e-12);
                assert!(mc.mean + 4.0 * mc.stderr >= lower, "{tag} {s} dB");
                assert!((mc.mean - exact).abs() <= 4.0 * mc.stderr + 1e-6);
            }
        }
    }

    #[test]
    fn ppp_simulation_exceeds_bound() {
        let cfg = PppBoundConfig {
            trials: 20_000,
            ..PppBoundConfig::default()
        };
        let t = run_ppp_bound(&cfg).unwrap();
        let mc = t.get(4.0, "mc").unwrap();
        let bound = t.get(4.0, "bound").unwrap().mean;
        assert!((bound - 0.4295).abs() < 1e-3);
        assert!(mc.mean >= bound, "{} < {bound}", mc.mean);
    }

    #[test]
    fn doubling_draws_halves_variance() {
        let estimate = |trials: usize, seed: u64| {
            let cfg = PppBoundConfig {
                trials,
                seed,
                mean_bs: 50.0,
                ..PppBoundConfig::default()
            };
            run_ppp_bound(&cfg).unwrap().get(4.0, "mc").unwrap().mean
        };
        let var = |trials: usize| {
            let v: Vec<f64> = (0..200).map(|s| estimate(trials, 1000 + s)).collect();
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
        };
        let slope = (var(400) / var(200)).ln() / 2f64.ln();
        // 200 replicates give roughly ±0.3 on the log2 ratio at 3σ.
        assert!((slope + 1.0).abs() < 0.35, "slope {slope}");
    }
}
