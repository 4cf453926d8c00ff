//! Run configuration: one JSON document per experiment.
//!
//! Relative paths inside the file resolve against the file's own directory.

use std::fs;
use std::path::{Path, PathBuf};

use nowkit_core::evaluation::{default_splits, SplitSpec};
use nowkit_core::feasibility::FeasibilityParams;
use nowkit_core::lstm::Hyperparams;
use nowkit_core::pipeline::ModelSpec;
use nowkit_core::seed;
use nowkit_core::selection::{default_coarse_grid, default_fine_grid, SearchConfig};
use nowkit_core::transform::TransformOptions;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdgSource {
    pub path: PathBuf,
    pub lag_months: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSources {
    /// Series CSV files.
    #[serde(default)]
    pub series: Vec<PathBuf>,
    /// SDG API JSON files, one annual series each.
    #[serde(default)]
    pub sdg_json: Vec<SdgSource>,
}

/// Hyperparameters as written in a config; a missing seed is derived from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperSpec {
    pub n_timesteps: usize,
    pub hidden_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub l2_penalty: f64,
}

impl HyperSpec {
    pub fn resolve(&self, run_seed: u64) -> Hyperparams {
        Hyperparams {
            n_timesteps: self.n_timesteps,
            hidden_size: self.hidden_size,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            seed: self.seed.unwrap_or_else(|| model_seed(run_seed)),
            l2_penalty: self.l2_penalty,
        }
    }
}

impl From<Hyperparams> for HyperSpec {
    fn from(h: Hyperparams) -> Self {
        HyperSpec {
            n_timesteps: h.n_timesteps,
            hidden_size: h.hidden_size,
            learning_rate: h.learning_rate,
            epochs: h.epochs,
            seed: Some(h.seed),
            l2_penalty: h.l2_penalty,
        }
    }
}

/// Seed for model initialization derived from the run seed.
pub fn model_seed(run_seed: u64) -> u64 {
    seed::derive(run_seed, "model")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineModel {
    pub variables: Vec<String>,
    pub hyper: HyperSpec,
}

/// A model given inline or as the path of a JSON file holding one (such as
/// the `selected_model.json` written by `select`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    Inline(InlineModel),
    File(PathBuf),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub n_trials: Option<usize>,
    pub subset_size: Option<(usize, usize)>,
    pub coarse_grid: Option<Vec<HyperSpec>>,
    pub fine_grid: Option<Vec<HyperSpec>>,
    pub top_k: Option<usize>,
}

fn default_min_obs() -> u32 {
    10
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub target_series_id: String,
    /// Empty means every series except the target.
    #[serde(default)]
    pub candidate_variable_ids: Vec<String>,
    #[serde(default)]
    pub data: DataSources,
    #[serde(default)]
    pub splits: Option<SplitSpec>,
    #[serde(default)]
    pub model: Option<ModelSource>,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub transform: Option<TransformOptions>,
    #[serde(default)]
    pub catalog: Option<PathBuf>,
    #[serde(default = "default_min_obs")]
    pub min_obs: u32,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut config: RunConfig =
            serde_json::from_str(&text).map_err(|source| ConfigError::Json { path: path.to_path_buf(), source })?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn splits(&self) -> SplitSpec {
        self.splits.unwrap_or_else(default_splits)
    }

    pub fn transform_options(&self) -> TransformOptions {
        self.transform.unwrap_or_default()
    }

    pub fn feasibility_params(&self) -> FeasibilityParams {
        FeasibilityParams { min_obs: self.min_obs, ..FeasibilityParams::default() }
    }

    pub fn model_spec(&self) -> Result<ModelSpec, ConfigError> {
        let inline = match &self.model {
            None => return Err(ConfigError::Invalid("no model given (set \"model\" inline or as a file path)".into())),
            Some(ModelSource::Inline(m)) => m.clone(),
            Some(ModelSource::File(p)) => {
                let path = self.resolve(p);
                let text =
                    fs::read_to_string(&path).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
                serde_json::from_str(&text).map_err(|source| ConfigError::Json { path, source })?
            }
        };
        Ok(ModelSpec { variables: inline.variables, hyper: inline.hyper.resolve(self.seed) })
    }

    /// Search settings: library defaults overridden by the `search` section.
    pub fn search_config(&self, candidates: Vec<String>) -> SearchConfig {
        let mut c = SearchConfig::with_defaults(candidates, self.seed);
        let s = &self.search;
        if let Some(n) = s.n_trials {
            c.n_trials = n;
        }
        if let Some(range) = s.subset_size {
            c.subset_size = range;
        }
        if let Some(k) = s.top_k {
            c.top_k = k;
        }
        let resolve = |g: &Vec<HyperSpec>| g.iter().map(|h| h.resolve(self.seed)).collect::<Vec<_>>();
        c.coarse_grid = s.coarse_grid.as_ref().map_or_else(|| default_coarse_grid(model_seed(self.seed)), resolve);
        c.fine_grid = s.fine_grid.as_ref().map_or_else(|| default_fine_grid(model_seed(self.seed)), resolve);
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"target_series_id": "target", "data": {"series": ["series.csv"]}}"#;

    #[test]
    fn defaults_fill_in() {
        let mut c: RunConfig = serde_json::from_str(MINIMAL).unwrap();
        c.base_dir = PathBuf::from("/data/run");
        assert_eq!(c.min_obs, 10);
        assert_eq!(c.splits(), default_splits());
        assert!(c.transform_options().seasonal_adjust);
        assert_eq!(c.resolve(&c.data.series[0]), PathBuf::from("/data/run/series.csv"));
        assert_eq!(c.resolve(Path::new("/abs.csv")), PathBuf::from("/abs.csv"));
        assert!(matches!(c.model_spec(), Err(ConfigError::Invalid(_))));
        let s = c.search_config(vec!["a".into(); 20]);
        assert_eq!(s.n_trials, 300);
        assert_eq!(s.coarse_grid[0].seed, model_seed(0));
    }

    #[test]
    fn overrides_apply() {
        let text = r#"{"target_series_id": "t", "seed": 9,
            "model": {"variables": ["a"], "hyper": {"n_timesteps": 12, "hidden_size": 4, "learning_rate": 0.01, "epochs": 10}},
            "search": {"n_trials": 5, "subset_size": [1, 2], "fine_grid": [{"n_timesteps": 6, "hidden_size": 2, "learning_rate": 0.1, "epochs": 3, "seed": 4}]}}"#;
        let c: RunConfig = serde_json::from_str(text).unwrap();
        let spec = c.model_spec().unwrap();
        assert_eq!(spec.hyper.seed, model_seed(9));
        let s = c.search_config(vec!["a".into(), "b".into()]);
        assert_eq!((s.n_trials, s.subset_size, s.fine_grid.len(), s.fine_grid[0].seed), (5, (1, 2), 1, 4));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"target_series_id": "t", "sed": 1}"#).is_err());
    }
}
