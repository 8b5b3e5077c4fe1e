//! Experiment configuration file: TOML with optional sections, every key
//! optional. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use pairclust::channel::{GainModel, ScenarioParams};
use pairclust::simrunner::TopologySpec;
use pairclust::topology::{parse_coordinates, Point2D};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub topology: TopologySection,
    pub scenario: ScenarioSection,
    pub plan: PlanSection,
    pub analyze: AnalyzeSection,
    pub simulate: SimulateSection,
    /// Directory relative paths in the file resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologySection {
    /// `grid`, `ppp` or `explicit`.
    pub kind: Option<String>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub cell_size: Option<f64>,
    pub p: Option<f64>,
    pub density: Option<f64>,
    pub width: Option<f64>,
    pub height: Option<f64>,
    /// Coordinate file for `explicit`.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub beta: Option<f64>,
    pub snr_db: Option<f64>,
    pub interference_limited: Option<bool>,
    pub delta_ec: Option<usize>,
    pub l: Option<usize>,
    pub k_per_bs: Option<usize>,
    pub mmse: Option<f64>,
    pub l_b: Option<f64>,
    pub overhead: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanSection {
    pub n_dummies: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeSection {
    pub expressions: Option<Vec<String>>,
    pub gamma_grid: Option<Vec<f64>>,
    pub snr_grid_db: Option<Vec<f64>>,
    pub d0: Option<f64>,
    pub ratios: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub figure: Option<String>,
    pub methods: Option<Vec<String>>,
    pub topologies: Option<usize>,
    pub drops: Option<usize>,
    pub trials: Option<usize>,
    pub gamma_grid: Option<Vec<f64>>,
    pub k_per_bs_grid: Option<Vec<usize>>,
    pub snr_grid_db: Option<Vec<f64>>,
    pub validation_pairs: Option<Vec<(usize, usize)>>,
    pub edge_user_threshold: Option<f64>,
    pub gain_model: Option<GainModel>,
    pub tagged_user: Option<(f64, f64)>,
    pub ppp_mean_bs: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Topology spec; the grid perturbation falls back to `default_p`.
    pub fn topology_spec(&self, p_override: Option<f64>, default_p: f64) -> Result<TopologySpec, CliError> {
        let t = &self.topology;
        match t.kind.as_deref().unwrap_or("grid") {
            "grid" => Ok(TopologySpec::Grid {
                rows: t.rows.unwrap_or(7),
                cols: t.cols.unwrap_or(7),
                cell_size: t.cell_size.unwrap_or(200.0),
                p: p_override.or(t.p).unwrap_or(default_p),
            }),
            "ppp" => Ok(TopologySpec::Ppp {
                density: t
                    .density
                    .ok_or_else(|| CliError::Usage("topology.density is required for kind = \"ppp\"".into()))?,
                width: t.width.unwrap_or(1400.0),
                height: t.height.unwrap_or(1400.0),
            }),
            "explicit" => {
                let file = t
                    .file
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("topology.file is required for kind = \"explicit\"".into()))?;
                let path = self.base_dir.join(file);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Usage(format!("cannot read coordinates {}: {e}", path.display())))?;
                let points = parse_coordinates(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                Ok(TopologySpec::Explicit { points })
            }
            other => Err(CliError::Usage(format!("unknown topology kind `{other}`"))),
        }
    }

    /// Scenario values from the file laid over `base`.
    pub fn scenario(&self, base: ScenarioParams) -> Result<ScenarioParams, CliError> {
        let s = &self.scenario;
        let mut out = ScenarioParams {
            n: s.n.unwrap_or(base.n),
            k: s.k.unwrap_or(base.k),
            beta: s.beta.unwrap_or(base.beta),
            snr_db: s.snr_db.map(Some).unwrap_or(base.snr_db),
            delta_ec: s.delta_ec.unwrap_or(base.delta_ec),
            l: s.l.unwrap_or(base.l),
            k_per_bs: s.k_per_bs.unwrap_or(base.k_per_bs),
            mmse: s.mmse.unwrap_or(base.mmse),
            l_b: s.l_b.unwrap_or(base.l_b),
            overhead_enabled: s.overhead.unwrap_or(base.overhead_enabled),
            ..base
        };
        match s.interference_limited {
            Some(true) if s.snr_db.is_some() => {
                return Err(CliError::Usage(
                    "scenario.snr_db and scenario.interference_limited = true are exclusive".into(),
                ))
            }
            Some(true) => out.snr_db = None,
            Some(false) if out.snr_db.is_none() => out.snr_db = ScenarioParams::default().snr_db,
            _ => {}
        }
        out.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(out)
    }

    pub fn tagged_user(&self) -> Option<Point2D> {
        self.simulate.tagged_user.map(|(x, y)| Point2D::new(x, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ConfigFile::parse("").unwrap();
        let s = c.scenario(ScenarioParams::default()).unwrap();
        assert_eq!(s, ScenarioParams::default());
        assert_eq!(c.topology_spec(None, 100.0).unwrap(), TopologySpec::standard_grid(100.0));
    }

    #[test]
    fn sections_override() {
        let c = ConfigFile::parse("seed = 9\n[topology]\np = 50.0\n[scenario]\nn = 4\nk = 2\ninterference_limited = true\n").unwrap();
        assert_eq!(c.seed, Some(9));
        let s = c.scenario(ScenarioParams::default()).unwrap();
        assert_eq!((s.n, s.k, s.snr_db), (4, 2, None));
        assert_eq!(c.topology_spec(None, 100.0).unwrap(), TopologySpec::standard_grid(50.0));
        assert_eq!(c.topology_spec(Some(200.0), 100.0).unwrap(), TopologySpec::standard_grid(200.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ConfigFile::parse("[scenario]\nfoo = 1\n").is_err());
        assert!(ConfigFile::parse("[scenario]\nn = \"three\"\n").is_err());
        let c = ConfigFile::parse("[scenario]\nn = 1\n").unwrap();
        assert!(c.scenario(ScenarioParams::default()).is_err());
        let c = ConfigFile::parse("[scenario]\nsnr_db = 10.0\ninterference_limited = true\n").unwrap();
        assert!(c.scenario(ScenarioParams::default()).is_err());
        let c = ConfigFile::parse("[topology]\nkind = \"hex\"\n").unwrap();
        assert!(c.topology_spec(None, 100.0).is_err());
    }
}
