use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::config::{Level, RunConfig};
use crate::actionable::{select_actionable, select_actionable_chunked, ActionableSelection};
use crate::dataset::{
    load_commit_log, load_release_dataset, match_regions, split_commits, CommitLog, CommitRecord,
    ReleaseSnapshot, SplitConfig,
};
use crate::error::StageExt;
use crate::planner::PastFix;
use crate::preprocess::{spearman_prune, PruneOutcome};
use crate::{Error, Result};

/// One region's (or file's) metrics before and after a historical change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Change {
    pub id: String,
    pub before: Vec<f64>,
    pub after: Vec<f64>,
    /// The change removed the defect.
    pub fixed: bool,
}

/// A defective region to plan for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub values: Vec<f64>,
    pub defects: f64,
}

/// What an instance looked like afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub after: Vec<f64>,
    pub defects: f64,
}

/// Training data, history and planning targets for one project, independent of mining.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub level: Level,
    pub project: String,
    pub features: Vec<String>,
    pub train_rows: Vec<Vec<f64>>,
    pub train_labels: Vec<bool>,
    pub actionable: ActionableSelection,
    /// Changes starting from a defective state; used to label rules.
    pub history: Vec<Change>,
    /// Historical changes that removed a defect.
    pub past_fixes: Vec<PastFix>,
    /// Defective instances in planning order.
    pub instances: Vec<Instance>,
    /// Instances that can be checked afterwards, by id.
    pub outcomes: BTreeMap<String, Outcome>,
    /// Commit level only.
    pub pruning: Option<PruneOutcome>,
}

impl Prepared {
    /// Loads the datasets named by `config`.
    pub fn load(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        match config.level {
            Level::Release => {
                let [prev, test, next] = [0, 1, 2].map(|i| &config.releases[i]);
                let load = |p| load_release_dataset(p, &config.release_schema).stage("ingest");
                Self::from_releases(&load(prev)?, &load(test)?, &load(next)?, config)
            }
            Level::Commit => {
                let path = config.commits.as_ref().expect("validated");
                let log = load_commit_log(path, &config.commit_schema).stage("ingest")?;
                let project = config.project.clone().unwrap_or_else(|| {
                    path.file_stem().map_or("commits".into(), |s| s.to_string_lossy().into_owned())
                });
                Self::from_commits(&project, &log, config)
            }
        }
    }

    /// Trains on release t-1, plans for the defective regions of t and checks them against t+1.
    pub fn from_releases(
        prev: &ReleaseSnapshot,
        test: &ReleaseSnapshot,
        next: &ReleaseSnapshot,
        config: &RunConfig,
    ) -> Result<Self> {
        let triples = match_regions(prev, test, next).stage("match")?;
        let features = prev.features.clone();
        let actionable = select_actionable(&features, &prev.rows(), &test.rows(), config.m, config.rank_by)
            .stage("actionable")?;

        let mut history = Vec::new();
        let mut past_fixes = Vec::new();
        for p in prev.records.iter().filter(|r| r.label()) {
            let Some(t) = test.get(&p.region_id) else { continue };
            let fixed = !t.label();
            if fixed {
                past_fixes.push(PastFix {
                    before: p.metrics.clone(),
                    after: t.metrics.clone(),
                });
            }
            history.push(Change {
                id: p.region_id.clone(),
                before: p.metrics.clone(),
                after: t.metrics.clone(),
                fixed,
            });
        }

        let mut instances: Vec<Instance> = test
            .records
            .iter()
            .filter(|r| r.label())
            .map(|r| Instance {
                id: r.region_id.clone(),
                values: r.metrics.clone(),
                defects: r.bug_count as f64,
            })
            .collect();
        instances.sort_by(|a, b| a.id.cmp(&b.id));
        let outcomes = triples
            .iter()
            .filter(|t| t.at_test.label())
            .map(|t| {
                (
                    t.region_id.clone(),
                    Outcome {
                        after: t.at_next.metrics.clone(),
                        defects: t.at_next.bug_count as f64,
                    },
                )
            })
            .collect();

        Ok(Self {
            level: Level::Release,
            project: config.project.clone().unwrap_or_else(|| test.project.clone()),
            features,
            train_rows: prev.rows(),
            train_labels: prev.labels(),
            actionable,
            history,
            past_fixes,
            instances,
            outcomes,
            pruning: None,
        })
    }

    /// Chronological split: trains on older commits, plans for recent buggy
    /// commits and checks each against its later fix.
    pub fn from_commits(project: &str, log: &CommitLog, config: &RunConfig) -> Result<Self> {
        let split = split_commits(
            log,
            SplitConfig {
                holdout_months: config.holdout_months,
                test_size: config.test_size,
            },
        )
        .stage("split")?;
        if split.train.is_empty() {
            return Err(Error::InsufficientData("no training commits before the test window".into()).in_stage("split"));
        }

        let (keep, pruning) = if log.features.len() >= 2 {
            let columns: Vec<Vec<f64>> = (0..log.features.len())
                .map(|j| split.train.iter().map(|r| r.metrics[j]).collect())
                .collect();
            let outcome = spearman_prune(&log.features, &columns, config.spearman_rho).stage("prune")?;
            let keep: Vec<usize> = (0..log.features.len())
                .filter(|&j| outcome.retained.contains(&log.features[j]))
                .collect();
            (keep, Some(outcome))
        } else {
            ((0..log.features.len()).collect(), None)
        };
        let features: Vec<String> = keep.iter().map(|&j| log.features[j].clone()).collect();
        let project_row = |r: &CommitRecord| keep.iter().map(|&j| r.metrics[j]).collect::<Vec<f64>>();
        let key = |r: &CommitRecord| format!("{}:{}", r.commit_hash, r.file_path);

        let train_rows: Vec<Vec<f64>> = split.train.iter().map(project_row).collect();
        let train_labels: Vec<bool> = split.train.iter().map(|r| r.buggy).collect();
        let actionable =
            select_actionable_chunked(&features, &train_rows, config.chunks, config.m, config.rank_by)
                .stage("actionable")?;

        let mut by_file: HashMap<&str, Vec<&CommitRecord>> = HashMap::new();
        for r in &split.train {
            by_file.entry(r.file_path.as_str()).or_default().push(r);
        }
        let mut history = Vec::new();
        let mut past_fixes = Vec::new();
        for r in &split.train {
            let file = &by_file[r.file_path.as_str()];
            let pos = file.iter().position(|c| std::ptr::eq(*c, r)).expect("record indexed");
            let Some(next) = file.get(pos + 1) else { continue };
            if !r.buggy {
                continue;
            }
            let change = Change {
                id: key(next),
                before: project_row(r),
                after: project_row(next),
                fixed: !next.buggy,
            };
            if change.fixed {
                past_fixes.push(PastFix {
                    before: change.before.clone(),
                    after: change.after.clone(),
                });
            }
            history.push(change);
        }

        let instances = split
            .test
            .iter()
            .map(|r| Instance {
                id: key(r),
                values: project_row(r),
                defects: 1.0,
            })
            .collect();
        let outcomes = split
            .fix_pairing
            .iter()
            .map(|(&t, &v)| {
                (
                    key(&split.test[t]),
                    Outcome {
                        after: project_row(&split.validation[v]),
                        defects: 0.0,
                    },
                )
            })
            .collect();

        Ok(Self {
            level: Level::Commit,
            project: config.project.clone().unwrap_or_else(|| project.to_string()),
            features,
            train_rows,
            train_labels,
            actionable,
            history,
            past_fixes,
            instances,
            outcomes,
            pruning,
        })
    }
}
