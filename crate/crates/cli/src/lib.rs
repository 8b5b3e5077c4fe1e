//! `pairclust` command line: `plan`, `analyze` and `simulate`.

pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pairclust::analysis::{ergodic_se_exact, ergodic_se_lower, ergodic_se_ppp_lower, rate_coverage_approx, rate_coverage_exact, FixedGeometry};
use pairclust::association::Method;
use pairclust::channel::ScenarioParams;
use pairclust::rng::fnv1a;
use pairclust::simrunner::{
    deployment, run_edge_user_throughput, run_ergodic_validation, run_ppp_bound, run_rate_coverage, run_validation, tagged_link,
    ExperimentConfig, PppBoundConfig, ResultTable,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

use config::ConfigFile;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or invalid configuration, refused overwrite.
    Usage(String),
    /// Failure while computing or writing results.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "pairclust", version, about = "Pair-wise BS coordination plans, analysis and simulation")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Master seed (overrides the config file).
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Triangulate, cut and color; write the cluster patterns.
    Plan {
        /// Grid perturbation side in meters.
        #[arg(long)]
        p: Option<f64>,
    },
    /// Evaluate analytical curves for a fixed geometry.
    Analyze {
        #[arg(long)]
        p: Option<f64>,
    },
    /// Run a Monte-Carlo experiment and write CSV plus SVG.
    Simulate {
        #[arg(long, value_enum)]
        figure: Option<Figure>,
        #[arg(long)]
        p: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    /// Coverage approximation vs simulation.
    Fig5,
    /// Ergodic spectral efficiency bound vs simulation over SNR.
    Fig6,
    /// Edge-user sum throughput vs users per BS.
    Fig8,
    /// Rate coverage comparison.
    Fig9,
    /// Poisson-network spectral efficiency vs its lower bound.
    Ppp,
}

impl Figure {
    fn name(self) -> &'static str {
        match self {
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig8 => "fig8",
            Figure::Fig9 => "fig9",
            Figure::Ppp => "ppp",
        }
    }

    fn parse(s: &str) -> Result<Self, CliError> {
        <Figure as ValueEnum>::from_str(s, true).map_err(|_| CliError::Usage(format!("unknown figure `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

/// Record of one invocation, written as `manifest.toml`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config: Option<String>,
    pub out_dir: String,
    pub subcommand: String,
    pub seed: u64,
    pub artifacts: Vec<Artifact>,
}

pub const ANALYZE_EXPRESSIONS: [&str; 5] = ["coverage_exact", "coverage_approx", "se_exact", "se_lower", "ppp_lower"];

pub fn run(cli: &Cli) -> Result<RunManifest, CliError> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // A second call in one process keeps the first pool, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let file = match &cli.global.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let seed = cli.global.seed.or(file.seed).unwrap_or(1);
    let (name, outputs) = match &cli.command {
        Command::Plan { p } => ("plan", cmd_plan(&file, *p, seed)?),
        Command::Analyze { p } => ("analyze", cmd_analyze(&file, *p, seed)?),
        Command::Simulate { figure, p } => ("simulate", cmd_simulate(&file, *figure, *p, seed)?),
    };
    write_outputs(cli, name, seed, outputs)
}

fn header(hash: &str, seed: u64) -> String {
    format!("# config_hash = {hash}\n# seed = {seed}\n")
}

fn experiment_base(file: &ConfigFile, p: Option<f64>, seed: u64) -> Result<ExperimentConfig, CliError> {
    Ok(ExperimentConfig {
        topology: file.topology_spec(p, 100.0)?,
        scenario: file.scenario(ScenarioParams::default())?,
        n_dummies: file.plan.n_dummies.unwrap_or(5000),
        tagged_user: file.tagged_user(),
        seed,
        ..ExperimentConfig::default()
    })
}

pub fn cmd_plan(file: &ConfigFile, p: Option<f64>, seed: u64) -> Result<Vec<(String, String)>, CliError> {
    let cfg = experiment_base(file, p, seed)?;
    let hash = cfg.hash();
    let dep = deployment(&cfg, 0).map_err(runtime)?;
    let plan = &dep.plan;
    let head = header(&hash, seed);
    let mut cut_log = format!("{head}# step edge area\n");
    for r in &plan.cut_graph.cut_log {
        let _ = writeln!(cut_log, "cut {} {} {}", r.edge.0, r.edge.1, r.area);
    }
    for e in &plan.cut_graph.restored {
        let _ = writeln!(cut_log, "restore {} {}", e.0, e.1);
    }
    Ok(vec![
        ("bs.txt".into(), format!("{head}{}", dep.topology.to_coordinate_text())),
        ("delaunay_edges.txt".into(), format!("{head}{}", plan.cut_graph.base.edge_list_text())),
        ("cut_log.txt".into(), cut_log),
        ("patterns.txt".into(), format!("{head}{}", plan.to_text())),
        ("summary.txt".into(), format!("{head}{}", plan.summary())),
    ])
}

pub fn cmd_analyze(file: &ConfigFile, p: Option<f64>, seed: u64) -> Result<Vec<(String, String)>, CliError> {
    let a = &file.analyze;
    let exprs: Vec<String> = a
        .expressions
        .clone()
        .unwrap_or_else(|| ANALYZE_EXPRESSIONS.iter().map(|s| s.to_string()).collect());
    if let Some(bad) = exprs.iter().find(|e| !ANALYZE_EXPRESSIONS.contains(&e.as_str())) {
        return Err(CliError::Usage(format!("unknown expression `{bad}`; expected one of {ANALYZE_EXPRESSIONS:?}")));
    }
    let gamma_grid = a.gamma_grid.clone().unwrap_or_else(|| (0..=16).map(|i| i as f64 * 0.25).collect());
    let snr_grid = a.snr_grid_db.clone().unwrap_or_else(|| (4..=14).map(|i| i as f64 * 10.0).collect());
    let only_ppp = exprs.iter().all(|e| e == "ppp_lower");
    let mut cfg = ExperimentConfig {
        gamma_grid: gamma_grid.clone(),
        snr_grid_db: snr_grid.clone(),
        ..experiment_base_lenient(file, p, seed, only_ppp)?
    };
    if !only_ppp {
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let hash = format!("{:016x}", fnv1a(format!("{cfg:?}{a:?}").as_bytes()));
    let params = cfg.scenario.clone();

    let needs_geometry = exprs.iter().any(|e| e != "ppp_lower");
    let geom = if !needs_geometry {
        None
    } else if let (Some(d0), Some(ratios)) = (a.d0, a.ratios.clone()) {
        Some(FixedGeometry::new(d0, ratios).map_err(|e| CliError::Usage(e.to_string()))?)
    } else if a.d0.is_some() || a.ratios.is_some() {
        return Err(CliError::Usage("analyze.d0 and analyze.ratios must be given together".into()));
    } else {
        cfg.topologies = 1;
        let dep = deployment(&cfg, 0).map_err(runtime)?;
        Some(tagged_link(&cfg, &dep).map_err(runtime)?.geometry)
    };

    let mut out = Vec::new();
    for e in &exprs {
        let mut t = ResultTable::new(e, "", "", hash.clone(), seed);
        match e.as_str() {
            "coverage_exact" | "coverage_approx" => {
                t.x_label = "rate threshold (bits/s/Hz)".into();
                t.y_label = "coverage probability".into();
                let g = geom.as_ref().expect("geometry");
                for &gm in &gamma_grid {
                    let q = ScenarioParams { gamma: gm, ..params.clone() };
                    let v = if e == "coverage_exact" { rate_coverage_exact(g, &q) } else { rate_coverage_approx(g, &q) };
                    t.push(gm, e, v.map_err(runtime)?, 0.0, 0);
                }
            }
            "se_exact" | "se_lower" => {
                t.x_label = "SNR (dB)".into();
                t.y_label = "spectral efficiency (bits/s/Hz)".into();
                let g = geom.as_ref().expect("geometry");
                for &s in &snr_grid {
                    let q = ScenarioParams { snr_db: Some(s), ..params.clone() };
                    let v = if e == "se_exact" { ergodic_se_exact(g, &q) } else { ergodic_se_lower(g, &q) };
                    t.push(s, e, v.map_err(runtime)?, 0.0, 0);
                }
            }
            _ => {
                t.x_label = "path-loss exponent".into();
                t.y_label = "spectral efficiency (bits/s/Hz)".into();
                let v = ergodic_se_ppp_lower(params.n, params.k, params.l, params.beta).map_err(|e| CliError::Usage(e.to_string()))?;
                t.push(params.beta, e, v, 0.0, 0);
            }
        }
        out.push((format!("{e}.csv"), t.to_csv()));
    }
    Ok(out)
}

/// Like [`experiment_base`], but a path-loss exponent of 2 or less is left for
/// the Poisson bound to judge when that bound is the only output.
fn experiment_base_lenient(file: &ConfigFile, p: Option<f64>, seed: u64, only_ppp: bool) -> Result<ExperimentConfig, CliError> {
    if !only_ppp {
        return experiment_base(file, p, seed);
    }
    let mut relaxed = file.clone();
    let beta = relaxed.scenario.beta.take();
    let mut cfg = experiment_base(&relaxed, p, seed)?;
    if let Some(b) = beta {
        cfg.scenario.beta = b;
    }
    Ok(cfg)
}

pub fn simulate_config(file: &ConfigFile, figure: Figure, p: Option<f64>, seed: u64) -> Result<ExperimentConfig, CliError> {
    let default_p = match figure {
        Figure::Fig5 | Figure::Fig6 => 200.0,
        _ => 100.0,
    };
    let topo_p = p.or(file.topology.p).unwrap_or(default_p);
    let preset = match figure {
        Figure::Fig5 => ExperimentConfig::fig5(),
        Figure::Fig6 => ExperimentConfig::fig6(),
        Figure::Fig8 | Figure::Ppp => ExperimentConfig::fig8(topo_p),
        Figure::Fig9 => ExperimentConfig::fig9(topo_p),
    };
    let s = &file.simulate;
    let methods = match &s.methods {
        Some(ms) => ms
            .iter()
            .map(|m| Method::parse(m).map_err(|e| CliError::Usage(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?,
        None => preset.methods.clone(),
    };
    let cfg = ExperimentConfig {
        scenario: file.scenario(preset.scenario.clone())?,
        topology: file.topology_spec(Some(topo_p), default_p)?,
        methods,
        topologies: s.topologies.unwrap_or(preset.topologies),
        drops: s.drops.unwrap_or(preset.drops),
        trials: s.trials.unwrap_or(preset.trials),
        gamma_grid: s.gamma_grid.clone().unwrap_or(preset.gamma_grid),
        k_per_bs_grid: s.k_per_bs_grid.clone().unwrap_or(preset.k_per_bs_grid),
        snr_grid_db: s.snr_grid_db.clone().unwrap_or(preset.snr_grid_db),
        validation_pairs: s.validation_pairs.clone().unwrap_or(preset.validation_pairs),
        edge_user_threshold: s.edge_user_threshold.unwrap_or(preset.edge_user_threshold),
        n_dummies: file.plan.n_dummies.unwrap_or(preset.n_dummies),
        gain_model: s.gain_model.unwrap_or(preset.gain_model),
        tagged_user: file.tagged_user(),
        seed,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

pub fn cmd_simulate(file: &ConfigFile, figure: Option<Figure>, p: Option<f64>, seed: u64) -> Result<Vec<(String, String)>, CliError> {
    let figure = match (figure, &file.simulate.figure) {
        (Some(f), _) => f,
        (None, Some(name)) => Figure::parse(name)?,
        (None, None) => return Err(CliError::Usage("choose a figure with --figure or simulate.figure".into())),
    };
    let cfg = simulate_config(file, figure, p, seed)?;
    let table = match figure {
        Figure::Fig5 => run_validation(&cfg),
        Figure::Fig6 => run_ergodic_validation(&cfg),
        Figure::Fig8 => run_edge_user_throughput(&cfg),
        Figure::Fig9 => run_rate_coverage(&cfg),
        Figure::Ppp => run_ppp_bound(&PppBoundConfig {
            n: cfg.scenario.n,
            k: cfg.scenario.k,
            l: cfg.scenario.l,
            beta: cfg.scenario.beta,
            mean_bs: file.simulate.ppp_mean_bs.unwrap_or(PppBoundConfig::default().mean_bs),
            trials: file.simulate.trials.unwrap_or(PppBoundConfig::default().trials),
            gain_model: file.simulate.gain_model.unwrap_or(PppBoundConfig::default().gain_model),
            seed,
        }),
    }
    .map_err(runtime)?;
    let stem = match (figure, &cfg.topology) {
        (Figure::Fig8 | Figure::Fig9, pairclust::simrunner::TopologySpec::Grid { p, .. }) => format!("{}_p{p}", figure.name()),
        _ => figure.name().to_string(),
    };
    Ok(vec![(format!("{stem}.csv"), table.to_csv()), (format!("{stem}.svg"), table.to_svg())])
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn write_outputs(cli: &Cli, subcommand: &str, seed: u64, outputs: Vec<(String, String)>) -> Result<RunManifest, CliError> {
    let dir = &cli.global.out;
    let targets: Vec<PathBuf> = outputs
        .iter()
        .map(|(name, _)| dir.join(name))
        .chain(std::iter::once(dir.join("manifest.toml")))
        .collect();
    if !cli.global.force {
        if let Some(existing) = targets.iter().find(|p| p.exists()) {
            return Err(CliError::Usage(format!("{} exists; pass --force to overwrite", existing.display())));
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))?;
    let mut artifacts = Vec::new();
    for (name, body) in &outputs {
        write_file(&dir.join(name), body)?;
        artifacts.push(Artifact {
            path: name.clone(),
            sha256: sha256_hex(body.as_bytes()),
        });
    }
    let manifest = RunManifest {
        config: cli.global.config.as_ref().map(|p| p.display().to_string()),
        out_dir: dir.display().to_string(),
        subcommand: subcommand.into(),
        seed,
        artifacts,
    };
    let text = toml::to_string(&manifest).map_err(runtime)?;
    write_file(&dir.join("manifest.toml"), &text)?;
    Ok(manifest)
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    std::fs::write(path, body).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}
