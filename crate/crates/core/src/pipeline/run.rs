use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{stage_seed, RunConfig};
use super::prepare::Prepared;
use super::stages::{evaluate, mine, plan_all, PlanSet};
use crate::error::StageExt;
use crate::eval::{markdown_table, EvaluationReport, ReportMetric};
use crate::mining::{read_rules_jsonl, write_rules_jsonl};
use crate::preprocess::{hex, DiscretizationScheme};
use crate::{Error, Result};

pub const MANIFEST: &str = "manifest.json";
pub const SCHEME: &str = "scheme.json";
pub const ACTIONABLE: &str = "actionable.json";
pub const RULES: &str = "rules.jsonl";
pub const PLANS: &str = "plans.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_MD: &str = "report.md";
pub const COMPARISON: &str = "comparison.md";

const SEED_DERIVATION: &str =
    "stage seed = first 8 bytes (LE) of SHA-256(master seed as u64 LE || stage name); \
     per-instance stages are `<planner>/<instance id>`";

/// Provenance for a run directory. Contains no timestamps, so identical runs
/// write identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub config_sha256: String,
    pub seed: u64,
    pub seed_derivation: String,
    pub stage_seeds: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme_fingerprint: Option<String>,
    /// Artifact file name -> SHA-256 of its bytes.
    pub artifacts: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            config_sha256: sha256_hex(config.canonical_json().as_bytes()),
            seed: config.seed,
            seed_derivation: SEED_DERIVATION.into(),
            stage_seeds: [("smote", stage_seed(config.seed, "smote"))]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            scheme_fingerprint: None,
            artifacts: BTreeMap::new(),
        }
    }

    /// The manifest already in `dir` if it was written for the same config, else a fresh one.
    pub(crate) fn open(dir: &Path, config: &RunConfig) -> Self {
        let fresh = Self::new(config);
        std::fs::read_to_string(dir.join(MANIFEST))
            .ok()
            .and_then(|t| serde_json::from_str::<Manifest>(&t).ok())
            .filter(|m| m.config_sha256 == fresh.config_sha256)
            .unwrap_or(fresh)
    }

    pub(crate) fn save(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        write(dir, MANIFEST, text.as_bytes()).map(|_| ())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<String> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(sha256_hex(bytes))
}

fn read(dir: &Path, name: &str, producer: &str) -> Result<String> {
    let path = dir.join(name);
    std::fs::read_to_string(&path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::InvalidInput(format!("{} not found; run `{producer}` first", path.display()))
        } else {
            Error::io(&path, e)
        }
    })
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MineSummary {
    pub project: String,
    pub features: usize,
    pub actionable: Vec<String>,
    pub classification_rules: usize,
    pub action_rules: usize,
    pub synthetic_rows: usize,
    pub scheme_fingerprint: String,
}

/// `mine`: writes the scheme, the actionable set and the rules file.
pub fn cmd_mine(config: &RunConfig) -> Result<MineSummary> {
    let prepared = Prepared::load(config)?;
    mine_prepared(&prepared, config)
}

pub fn mine_prepared(prepared: &Prepared, config: &RunConfig) -> Result<MineSummary> {
    let dir = &config.out;
    let model = mine(prepared, config)?;
    let mut manifest = Manifest::open(dir, config);
    manifest.artifacts.insert(SCHEME.into(), write(dir, SCHEME, &json_bytes(&model.scheme)?)?);
    manifest
        .artifacts
        .insert(ACTIONABLE.into(), write(dir, ACTIONABLE, &json_bytes(&prepared.actionable)?)?);
    let mut rules = Vec::new();
    write_rules_jsonl(&mut rules, &model.rules, &prepared.features, Some(&model.labels))?;
    manifest.artifacts.insert(RULES.into(), write(dir, RULES, &rules)?);
    let fingerprint = model.scheme.fingerprint();
    manifest.scheme_fingerprint = Some(fingerprint.clone());
    manifest.save(dir)?;
    Ok(MineSummary {
        project: prepared.project.clone(),
        features: prepared.features.len(),
        actionable: model.flexible,
        classification_rules: model.n_classification_rules,
        action_rules: model.rules.len(),
        synthetic_rows: model.n_synthetic,
        scheme_fingerprint: fingerprint,
    })
}

/// The mined scheme, refusing it when the current training data yields a different one.
fn load_scheme(prepared: &Prepared, config: &RunConfig) -> Result<DiscretizationScheme> {
    let stored: DiscretizationScheme = serde_json::from_str(&read(&config.out, SCHEME, "mine")?)?;
    let refit = crate::preprocess::fit_scheme(
        &prepared.features,
        &prepared.train_rows,
        &prepared.train_labels,
        config.mdlp_mode,
    )
    .stage("discretize")?;
    let stored = stored.aligned_to(&prepared.features).stage("plan")?;
    if stored.fingerprint() != refit.fingerprint() {
        return Err(Error::SchemeMismatch {
            expected: stored.fingerprint(),
            found: refit.fingerprint(),
        });
    }
    Ok(stored)
}

/// `plan`: reads the mined rules and writes one plan per planner and defective instance.
pub fn cmd_plan(config: &RunConfig) -> Result<PlanSet> {
    let prepared = Prepared::load(config)?;
    plan_prepared(&prepared, config)
}

pub fn plan_prepared(prepared: &Prepared, config: &RunConfig) -> Result<PlanSet> {
    let dir = &config.out;
    let scheme = load_scheme(prepared, config)?;
    let rules = read_rules_jsonl(&read(dir, RULES, "mine")?, &prepared.features).stage("plan")?;
    let plans = plan_all(prepared, &scheme, &rules, config)?;
    let mut manifest = Manifest::open(dir, config);
    manifest.artifacts.insert(PLANS.into(), write(dir, PLANS, &json_bytes(&plans)?)?);
    manifest.save(dir)?;
    Ok(plans)
}

/// `evaluate`: scores the stored plans and writes the JSON and markdown reports.
pub fn cmd_evaluate(config: &RunConfig) -> Result<EvaluationReport> {
    let prepared = Prepared::load(config)?;
    evaluate_prepared(&prepared, config)
}

pub fn evaluate_prepared(prepared: &Prepared, config: &RunConfig) -> Result<EvaluationReport> {
    let dir = &config.out;
    let scheme = load_scheme(prepared, config)?;
    let plans: PlanSet = serde_json::from_str(&read(dir, PLANS, "plan")?)?;
    let report = evaluate(prepared, &scheme, &plans, config)?;
    let mut manifest = Manifest::open(dir, config);
    let json = report.to_json() + "\n";
    manifest.artifacts.insert(REPORT_JSON.into(), write(dir, REPORT_JSON, json.as_bytes())?);
    manifest
        .artifacts
        .insert(REPORT_MD.into(), write(dir, REPORT_MD, report.to_markdown().as_bytes())?);
    manifest.save(dir)?;
    Ok(report)
}

/// `mine`, `plan` and `evaluate` in sequence on already prepared data.
pub fn run_prepared(prepared: &Prepared, config: &RunConfig) -> Result<EvaluationReport> {
    mine_prepared(prepared, config)?;
    plan_prepared(prepared, config)?;
    evaluate_prepared(prepared, config)
}

pub fn run_all(config: &RunConfig) -> Result<EvaluationReport> {
    run_prepared(&Prepared::load(config)?, config)
}

/// `compare`: cross-project tables (one per metric) from several report files.
pub fn cmd_compare(reports: &[PathBuf], out: &Path) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::InvalidInput("no reports to compare".into()));
    }
    let loaded = reports
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Ok(serde_json::from_str::<EvaluationReport>(&text)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut md = String::new();
    for (title, metric) in [
        ("Median overlap", ReportMetric::MedianOverlap),
        ("IQR overlap", ReportMetric::Iqr),
        ("S_scaled", ReportMetric::SScaled),
        ("Precision", ReportMetric::Precision),
        ("Recall", ReportMetric::Recall),
        ("F1", ReportMetric::F1),
    ] {
        md.push_str(&format!("### {title} (%)\n\n"));
        md.push_str(&markdown_table(&loaded, metric));
        md.push('\n');
    }
    write(out, COMPARISON, md.as_bytes())?;
    Ok(md)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{planted_releases, PlantedConfig};

    fn prepared(cfg: &RunConfig) -> Prepared {
        let [a, b, c] = planted_releases(&PlantedConfig {
            regions: 200,
            ..PlantedConfig::default()
        });
        Prepared::from_releases(&a, &b, &c, cfg).unwrap()
    }

    #[test]
    fn manifest_records_artifact_hashes() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            out: tmp.path().to_path_buf(),
            ..RunConfig::default()
        };
        let p = prepared(&cfg);
        run_prepared(&p, &cfg).unwrap();
        let m: Manifest = serde_json::from_str(&std::fs::read_to_string(tmp.path().join(MANIFEST)).unwrap()).unwrap();
        assert_eq!(m.config.min_supp, 0.05);
        assert_eq!(m.artifacts.len(), 6);
        for (name, digest) in &m.artifacts {
            let bytes = std::fs::read(tmp.path().join(name)).unwrap();
            assert_eq!(&sha256_hex(&bytes), digest, "{name}");
        }
        let back = RunConfig::load(&tmp.path().join(MANIFEST)).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn plan_before_mine_is_an_input_error() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            out: tmp.path().to_path_buf(),
            ..RunConfig::default()
        };
        let err = plan_prepared(&prepared(&cfg), &cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("scheme.json"));
    }

    #[test]
    fn compare_builds_tables() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            out: tmp.path().to_path_buf(),
            ..RunConfig::default()
        };
        run_prepared(&prepared(&cfg), &cfg).unwrap();
        let md = cmd_compare(&[tmp.path().join(REPORT_JSON)], tmp.path()).unwrap();
        assert!(md.contains("| Project | counteract | alves | shatnawi | oliveira | random |"));
        assert!(md.contains("| AVG |"));
    }
}
