use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::actionable::RankBy;
use crate::dataset::{CommitSchema, ReleaseSchema};
use crate::eval::{ImprovementOptions, WeightOrientation};
use crate::llm::{EndpointConfig, ExperimentConfig, DEFAULT_TEMPLATE};
use crate::planner::{AlvesConfig, OliveiraConfig, SelectionStrategy, ShatnawiConfig};
use crate::preprocess::MdlpMode;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    #[default]
    Release,
    Commit,
}

impl Level {
    pub fn name(self) -> &'static str {
        match self {
            Level::Release => "release",
            Level::Commit => "commit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Counteract,
    Alves,
    Shatnawi,
    Oliveira,
    Random,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 5] = [
        PlannerKind::Counteract,
        PlannerKind::Alves,
        PlannerKind::Shatnawi,
        PlannerKind::Oliveira,
        PlannerKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Counteract => "counteract",
            PlannerKind::Alves => "alves",
            PlannerKind::Shatnawi => "shatnawi",
            PlannerKind::Oliveira => "oliveira",
            PlannerKind::Random => "random",
        }
    }
}

/// Everything a run depends on. Serialised as flat JSON; missing keys take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub level: Level,
    /// Overrides the project name read from the data.
    pub project: Option<String>,
    /// Release CSVs for versions t-1, t and t+1.
    pub releases: Vec<PathBuf>,
    /// Commit-level CSV.
    pub commits: Option<PathBuf>,
    pub release_schema: ReleaseSchema,
    pub commit_schema: CommitSchema,
    /// Number of actionable (flexible) features.
    pub m: usize,
    pub min_supp: f64,
    pub min_conf: f64,
    pub max_len: usize,
    pub smote_k: usize,
    pub smote_duplicate_singleton: bool,
    pub mdlp_mode: MdlpMode,
    pub rank_by: RankBy,
    pub seed: u64,
    pub planners: Vec<PlannerKind>,
    pub selection: SelectionStrategy,
    /// Planner every other planner is tested against.
    pub reference: PlannerKind,
    pub alves: AlvesConfig,
    pub shatnawi: ShatnawiConfig,
    pub oliveira: OliveiraConfig,
    pub orientation: WeightOrientation,
    pub positive_only: bool,
    pub holdout_months: u32,
    pub test_size: usize,
    /// Chronological chunks used to rank commit-level features.
    pub chunks: usize,
    pub spearman_rho: f64,
    pub out: PathBuf,
    pub endpoint: EndpointConfig,
    pub template: String,
    /// Completions per prompt in `llm-experiment`.
    pub n_samples: usize,
    pub llm_concurrency: usize,
    /// Command that receives a completion on stdin and exits 0 when the tests pass.
    pub test_command: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            level: Level::Release,
            project: None,
            releases: Vec::new(),
            commits: None,
            release_schema: ReleaseSchema::default(),
            commit_schema: CommitSchema::default(),
            m: 10,
            min_supp: 0.05,
            min_conf: 0.55,
            max_len: 4,
            smote_k: 5,
            smote_duplicate_singleton: false,
            mdlp_mode: MdlpMode::Strict,
            rank_by: RankBy::HedgesG,
            seed: 0,
            planners: PlannerKind::ALL.to_vec(),
            selection: SelectionStrategy::Overlap,
            reference: PlannerKind::Counteract,
            alves: AlvesConfig::default(),
            shatnawi: ShatnawiConfig::default(),
            oliveira: OliveiraConfig::default(),
            orientation: WeightOrientation::Reduction,
            positive_only: false,
            holdout_months: 3,
            test_size: 250,
            chunks: 3,
            spearman_rho: 0.7,
            out: PathBuf::from("run"),
            endpoint: EndpointConfig::default(),
            template: DEFAULT_TEMPLATE.to_string(),
            n_samples: 1,
            llm_concurrency: 4,
            test_command: Vec::new(),
        }
    }
}

impl RunConfig {
    /// Reads a config file, or the `config` object of a run manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let value = match value.get("config") {
            Some(inner) if value.get("config_sha256").is_some() => inner.clone(),
            _ => value,
        };
        Ok(serde_json::from_value(value)?)
    }

    pub fn validate(&self) -> Result<()> {
        match self.level {
            Level::Release if self.releases.len() != 3 => {
                return Err(Error::InvalidInput(format!(
                    "release level needs three release files (t-1, t, t+1), got {}",
                    self.releases.len()
                )))
            }
            Level::Commit if self.commits.is_none() => {
                return Err(Error::InvalidInput("commit level needs a `commits` file".into()))
            }
            _ => {}
        }
        if self.planners.is_empty() {
            return Err(Error::InvalidInput("no planners configured".into()));
        }
        if !self.planners.contains(&self.reference) {
            return Err(Error::InvalidInput(format!(
                "reference planner `{}` is not in the planner list",
                self.reference.name()
            )));
        }
        Ok(())
    }

    pub fn improvement_options(&self) -> ImprovementOptions {
        ImprovementOptions {
            orientation: self.orientation,
            positive_only: self.positive_only,
        }
    }

    pub fn experiment_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            n_samples: self.n_samples,
            concurrency: self.llm_concurrency,
        }
    }

    /// Canonical JSON (struct field order, compact).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }
}

/// Seed for one named stage: the first 8 bytes (little-endian) of
/// `SHA-256(master.to_le_bytes() || stage)`.
pub fn stage_seed(master: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(stage.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
