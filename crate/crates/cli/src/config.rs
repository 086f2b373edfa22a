//! Run configuration (TOML).
//!
//! ```toml
//! run_id = "nyc-2018"
//! seed = 42
//!
//! [paths]
//! trips = ["green_tripdata_2018-01.csv"]
//! coords = "zones.csv"
//! output_dir = "runs"
//!
//! [instance]
//! revenue = 100.0
//! holding = "gaussian(20, 9)"
//! transfer = "distance(zones.csv, min=10, max=100)"
//! capacity = 16000
//!
//! [pipeline]
//! top_k = 20
//! split_date = "2018-12-31"
//! families = ["kde", "gaussian", "laplace", "poisson"]
//! scenarios = [20, 50, 100, 200, 500]
//! replications = 10
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use csrp::density::Family;
use csrp::model::{InstanceSpec, TransferSpec};
use csrp::solve::CutMode;
use csrp::{ModelVariant, SolveMethod, TripSchema};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run_id: String,
    pub seed: u64,
    pub paths: Paths,
    #[serde(default)]
    pub schema: TripSchema,
    #[serde(default)]
    pub instance: InstanceSpec,
    #[serde(default)]
    pub pipeline: PipelineParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub trips: Vec<PathBuf>,
    /// Zone coordinates; replaces the file named in a `distance(..)` transfer spec.
    #[serde(default)]
    pub coords: Option<PathBuf>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineParams {
    pub top_k: usize,
    /// Last training day. Defaults to the day that puts 80% of the panel in training.
    pub split_date: Option<NaiveDate>,
    pub families: Vec<Family>,
    pub scenarios: Vec<usize>,
    /// Scenario count whose replication-mean plan is evaluated. Defaults to the
    /// largest entry of `scenarios`.
    pub plan_scenarios: Option<usize>,
    pub replications: usize,
    pub xi: f64,
    pub variant: ModelVariant,
    pub method: SolveMethod,
    pub cut_mode: CutMode,
    /// Keep every scenario's served demand in the Benders master.
    pub paper_split: bool,
    pub deterministic_baseline: bool,
    pub extensive_size_limit: usize,
    pub retain_moves: bool,
    pub charts: bool,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            top_k: 20,
            split_date: None,
            families: Family::ALL.to_vec(),
            scenarios: vec![20, 50, 100, 200, 500],
            plan_scenarios: None,
            replications: 10,
            xi: 1e-6,
            variant: ModelVariant::FlowBalance,
            method: SolveMethod::Benders,
            cut_mode: CutMode::Single,
            paper_split: false,
            deterministic_baseline: true,
            extensive_size_limit: 2_000_000,
            retain_moves: false,
            charts: true,
        }
    }
}

impl PipelineParams {
    pub fn plan_scenarios(&self) -> usize {
        self.plan_scenarios.unwrap_or_else(|| self.scenarios.iter().copied().max().unwrap_or(0))
    }
}

/// Command-line replacements for individual config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n_scenarios: Option<usize>,
    pub seed: Option<u64>,
    pub variant: Option<ModelVariant>,
    pub method: Option<SolveMethod>,
    pub xi: Option<f64>,
}

/// A validated config plus the directory its relative paths resolve against.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| anyhow::anyhow!("config error in {}: {e}", path.display()))?;
        if let Some(n) = overrides.n_scenarios {
            config.pipeline.scenarios = vec![n];
            config.pipeline.plan_scenarios = Some(n);
        }
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        if let Some(v) = overrides.variant {
            config.pipeline.variant = v;
        }
        if let Some(m) = overrides.method {
            config.pipeline.method = m;
        }
        if let Some(xi) = overrides.xi {
            config.pipeline.xi = xi;
        }
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let loaded = Self { config, base_dir };
        loaded.validate().with_context(|| format!("config error in {}", path.display()))?;
        Ok(loaded)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// `<output_dir>/<run_id>`.
    pub fn run_dir(&self) -> PathBuf {
        self.resolve(&self.config.paths.output_dir).join(&self.config.run_id)
    }

    /// The instance spec with `paths.coords` applied. Paths in it stay relative
    /// to `base_dir`.
    pub fn instance_spec(&self) -> InstanceSpec {
        let mut spec = self.config.instance.clone();
        if let (Some(coords), TransferSpec::Distance { coords: file, .. }) = (&self.config.paths.coords, &mut spec.transfer) {
            *file = coords.to_string_lossy().into_owned();
        }
        spec
    }

    fn validate(&self) -> Result<()> {
        let c = &self.config;
        let p = &c.pipeline;
        if c.run_id.is_empty() || c.run_id.contains(['/', '\\']) || c.run_id == "." || c.run_id == ".." {
            bail!("field `run_id`: `{}` is not a plain directory name", c.run_id);
        }
        if c.paths.trips.is_empty() {
            bail!("field `paths.trips`: at least one trip file is required");
        }
        for trip in &c.paths.trips {
            let path = self.resolve(trip);
            if !path.is_file() {
                bail!("field `paths.trips`: {} does not exist", path.display());
            }
        }
        if let Some(coords) = &c.paths.coords {
            let path = self.resolve(coords);
            if !path.is_file() {
                bail!("field `paths.coords`: {} does not exist", path.display());
            }
        }
        if let TransferSpec::Distance { coords, .. } = &self.instance_spec().transfer {
            let path = self.resolve(Path::new(coords));
            if !path.is_file() {
                bail!("field `instance.transfer`: coordinates file {} does not exist", path.display());
            }
        }
        if p.top_k == 0 {
            bail!("field `pipeline.top_k` must be positive");
        }
        if p.families.is_empty() && !p.deterministic_baseline {
            bail!("field `pipeline.families`: nothing to solve");
        }
        if p.scenarios.is_empty() || p.scenarios.contains(&0) {
            bail!("field `pipeline.scenarios` must list positive scenario counts");
        }
        if p.plan_scenarios == Some(0) {
            bail!("field `pipeline.plan_scenarios` must be positive");
        }
        if p.replications == 0 {
            bail!("field `pipeline.replications` must be positive");
        }
        if !(1e-7..=1e-4).contains(&p.xi) {
            bail!("field `pipeline.xi` = {} must lie in [1e-7, 1e-4]", p.xi);
        }
        Ok(())
    }
}
