//! TOML configuration for the command-line tool.
//!
//! Every section is optional and falls back to its defaults. Unknown keys
//! are rejected. Example:
//!
//! ```toml
//! schema_version = 1
//! out_dir = "results"
//! scheme = "cs"
//!
//! [scenario]
//! nodes = 50
//! dims = 10
//! distribution = "gaussian"
//!
//! [pipeline]
//! training_size = 2000
//!
//! [pipeline.policy]
//! rho_r = 0.5
//!
//! [bench]
//! nodes = [10, 50, 100, 500]
//! seeds = [0, 1, 2]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::allocator::FusionScheme;
use crate::error::{Error, Result};
use crate::experiment::{DatasetKind, PipelineConfig};
use crate::simulator::{ScenarioConfig, TraceSource};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub nodes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub datasets: Vec<DatasetKind>,
    pub schemes: Vec<FusionScheme>,
    /// Density-estimate bins for the `D_l` / `D_s` files.
    pub bins: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            nodes: vec![10, 50, 100, 500],
            seeds: (0..10).collect(),
            datasets: DatasetKind::ALL.to_vec(),
            schemes: FusionScheme::ALL.to_vec(),
            bins: crate::metrics::DEFAULT_BINS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub schema_version: u32,
    pub out_dir: PathBuf,
    pub scheme: FusionScheme,
    /// Corpus TSV; the template generator is used when absent.
    pub corpus: Option<PathBuf>,
    /// Utilization trace for the `trace` dataset; the bundled one when absent.
    pub trace: Option<TraceSource>,
    pub scenario: ScenarioConfig,
    pub pipeline: PipelineConfig,
    pub bench: BenchConfig,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            out_dir: PathBuf::from("edge-alloc-out"),
            scheme: FusionScheme::Cs,
            corpus: None,
            trace: None,
            scenario: ScenarioConfig::default(),
            pipeline: PipelineConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

impl CliConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn trace_source(&self) -> TraceSource {
        self.trace.clone().unwrap_or(TraceSource::Bundled)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return cfg_err(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let wrap = |e: Error| match e {
            Error::InvalidInput(m) => Error::Config(m),
            other => other,
        };
        self.scenario.validate().map_err(wrap)?;
        self.pipeline.fcp.validate().map_err(wrap)?;
        self.pipeline.policy.validate().map_err(wrap)?;
        if self.pipeline.training_size == 0 {
            return cfg_err("pipeline.training_size must be >= 1".into());
        }
        if self.pipeline.k == 0 {
            return cfg_err("pipeline.k must be >= 1".into());
        }
        if self.pipeline.corpus_per_class == 0 {
            return cfg_err("pipeline.corpus_per_class must be >= 1".into());
        }
        if let Some(p) = &self.corpus {
            if !p.is_file() {
                return cfg_err(format!("corpus {} does not exist", p.display()));
            }
        }
        for t in [&self.trace, &self.scenario.trace].into_iter().flatten() {
            if let TraceSource::File { path, .. } = t {
                if !Path::new(path).is_file() {
                    return cfg_err(format!("trace {path} does not exist"));
                }
            }
        }
        let b = &self.bench;
        if b.nodes.is_empty() || b.nodes.contains(&0) {
            return cfg_err("bench.nodes must be a non-empty list of positive counts".into());
        }
        if b.seeds.is_empty() || b.datasets.is_empty() || b.schemes.is_empty() {
            return cfg_err("bench.seeds, bench.datasets and bench.schemes must be non-empty".into());
        }
        if b.bins == 0 {
            return cfg_err("bench.bins must be >= 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = CliConfig::default();
        let text = c.to_toml().unwrap();
        assert_eq!(CliConfig::parse(&text).unwrap(), c);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let c = CliConfig::parse("schema_version = 1\n[scenario]\nnodes = 7\n[bench]\nseeds = [1]\n").unwrap();
        assert_eq!(c.scenario.nodes, 7);
        assert_eq!(c.scenario.dims, 10);
        assert_eq!(c.bench.seeds, vec![1]);
        assert_eq!(c.bench.nodes, vec![10, 50, 100, 500]);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(CliConfig::parse("schema_version = 2"), Err(Error::Config(_))));
        assert!(matches!(CliConfig::parse("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(CliConfig::parse("[scenario]\nnodes = 0"), Err(Error::Config(_))));
        assert!(matches!(CliConfig::parse("corpus = \"/no/such/file\""), Err(Error::Config(_))));
        assert!(matches!(CliConfig::parse("[[["), Err(Error::Config(_))));
        assert!(matches!(
            CliConfig::parse("[pipeline.policy]\nrho_r = 2.0"),
            Err(Error::Config(_))
        ));
    }
}
