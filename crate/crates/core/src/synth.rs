//! Synthetic data with known structure, for demos and end-to-end checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chrono::{Duration, NaiveDate};

use crate::dataset::{CommitLog, CommitRecord, RegionRecord, ReleaseSnapshot};
use crate::preprocess::DiscretizationScheme;

/// Raw rows with labels and the scheme that bins them.
#[derive(Debug, Clone)]
pub struct ToyData {
    pub features: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
    pub scheme: DiscretizationScheme,
}

/// Two metrics, `avg_cc` (cut at 1.4) and `cbo` (cut at 14), over 1550 rows:
///
/// * `avg_cc > 1.4 ∧ cbo > 14`: 100 rows, 91 buggy
/// * `avg_cc > 1.4 ∧ cbo <= 14`: 350 rows, 203 clean
/// * `avg_cc <= 1.4`: 1100 rows, 110 buggy
///
/// so `avg_cc high ∧ cbo high ⇒ bug` has support 91/1550 and confidence 0.91,
/// and `avg_cc high ∧ cbo low ⇒ clean` has support 203/1550 and confidence 0.58.
pub fn two_rule_toy() -> ToyData {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut push = |count: usize, buggy: usize, cc: (f64, f64), cbo: (f64, f64)| {
        for i in 0..count {
            let t = (i as f64 + 0.5) / count as f64;
            rows.push(vec![cc.0 + t * (cc.1 - cc.0), cbo.0 + (1.0 - t) * (cbo.1 - cbo.0)]);
            labels.push(i < buggy);
        }
    };
    push(100, 91, (1.5, 3.0), (15.0, 40.0));
    push(350, 147, (1.5, 3.0), (1.0, 14.0));
    push(1100, 110, (0.1, 1.4), (1.0, 40.0));
    let features = vec!["avg_cc".to_string(), "cbo".to_string()];
    let scheme = DiscretizationScheme::new(features.clone(), vec![vec![1.4], vec![14.0]])
        .expect("fixed cut points are valid");
    ToyData {
        features,
        rows,
        labels,
        scheme,
    }
}

/// Shape of the planted-rule release corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedConfig {
    pub regions: usize,
    pub features: usize,
    pub bug_rate: f64,
    /// Chance a buggy region is fixed (driver metric moved low) in the next release.
    pub fix_rate: f64,
    /// Chance a clean region turns buggy (driver metric moved high).
    pub regress_rate: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            regions: 500,
            features: 10,
            bug_rate: 0.3,
            fix_rate: 0.6,
            regress_rate: 0.1,
            seed: 0,
        }
    }
}

/// Three consecutive releases where defects are driven by `f0` being high.
///
/// `f0` lies in `(0, 4)` for clean regions and `(6, 10)` for buggy ones. The
/// other metrics are noisy correlates: high (6..10) with probability 0.7 for
/// buggy regions and 0.3 for clean ones, and never change between releases.
/// Between releases a buggy region is fixed with `fix_rate` (its `f0` drops
/// to the low range) and a clean one regresses with `regress_rate`.
pub fn planted_releases(config: &PlantedConfig) -> [ReleaseSnapshot; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let features: Vec<String> = (0..config.features).map(|j| format!("f{j}")).collect();
    let low = |rng: &mut ChaCha8Rng| rng.gen_range(0.0..4.0);
    let high = |rng: &mut ChaCha8Rng| rng.gen_range(6.0..10.0);

    let mut current: Vec<RegionRecord> = (0..config.regions)
        .map(|i| {
            let buggy = rng.gen_bool(config.bug_rate);
            let mut metrics = vec![if buggy { high(&mut rng) } else { low(&mut rng) }];
            for _ in 1..config.features {
                let p = if buggy { 0.7 } else { 0.3 };
                metrics.push(if rng.gen_bool(p) { high(&mut rng) } else { low(&mut rng) });
            }
            RegionRecord {
                region_id: format!("pkg.Region{i:04}"),
                metrics,
                bug_count: if buggy { rng.gen_range(1..4) } else { 0 },
            }
        })
        .collect();

    let mut releases = Vec::with_capacity(3);
    for version in ["1.0", "1.1", "1.2"] {
        releases.push(
            ReleaseSnapshot::new("planted", version, features.clone(), current.clone())
                .expect("generated records are consistent"),
        );
        for r in &mut current {
            if r.bug_count > 0 {
                if rng.gen_bool(config.fix_rate) {
                    r.metrics[0] = low(&mut rng);
                    r.bug_count = 0;
                }
            } else if rng.gen_bool(config.regress_rate) {
                r.metrics[0] = high(&mut rng);
                r.bug_count = 1;
            }
        }
    }
    let [a, b, c]: [ReleaseSnapshot; 3] = releases.try_into().expect("three releases");
    [a, b, c]
}

/// Shape of the planted-rule commit corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedCommitConfig {
    pub files: usize,
    pub commits: usize,
    pub features: usize,
    /// Chance a commit on a clean file introduces a bug.
    pub bug_rate: f64,
    /// Chance the next commit on a buggy file fixes it.
    pub fix_rate: f64,
    pub seed: u64,
}

impl Default for PlantedCommitConfig {
    fn default() -> Self {
        Self {
            files: 40,
            commits: 700,
            features: 8,
            bug_rate: 0.3,
            fix_rate: 0.7,
            seed: 0,
        }
    }
}

/// One single-file commit per day from 2015-01-01, where a commit is buggy
/// iff its `f0` is high (6..10). Every commit after a buggy one on the same
/// file is a fix (low `f0`) with `fix_rate`. Other metrics are noisy
/// correlates of the label, as in [`planted_releases`].
pub fn planted_commits(config: &PlantedCommitConfig) -> CommitLog {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let features: Vec<String> = (0..config.features).map(|j| format!("f{j}")).collect();
    let start = NaiveDate::from_ymd_opt(2015, 1, 1)
        .expect("valid date")
        .and_hms_opt(12, 0, 0)
        .expect("valid time");
    let mut file_buggy = vec![false; config.files];
    let records = (0..config.commits)
        .map(|i| {
            let file = rng.gen_range(0..config.files);
            let buggy = if file_buggy[file] {
                !rng.gen_bool(config.fix_rate)
            } else {
                rng.gen_bool(config.bug_rate)
            };
            file_buggy[file] = buggy;
            let mut metrics = vec![if buggy { rng.gen_range(6.0..10.0) } else { rng.gen_range(0.0..4.0) }];
            for _ in 1..config.features {
                let p = if buggy { 0.7 } else { 0.3 };
                metrics.push(if rng.gen_bool(p) { rng.gen_range(6.0..10.0) } else { rng.gen_range(0.0..4.0) });
            }
            CommitRecord {
                commit_hash: format!("{:040x}", i + 1),
                file_path: format!("src/module_{file:03}.rs"),
                author_date: start + Duration::days(i as i64),
                metrics,
                buggy,
            }
        })
        .collect();
    CommitLog::new(features, records).expect("generated records are unique")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_counts() {
        let t = two_rule_toy();
        assert_eq!(t.rows.len(), 1550);
        let high_high = t
            .rows
            .iter()
            .zip(&t.labels)
            .filter(|(r, _)| r[0] > 1.4 && r[1] > 14.0)
            .collect::<Vec<_>>();
        assert_eq!(high_high.len(), 100);
        assert_eq!(high_high.iter().filter(|(_, &l)| l).count(), 91);
    }

    #[test]
    fn planted_releases_share_regions_and_evolve() {
        let [a, b, c] = planted_releases(&PlantedConfig::default());
        assert_eq!((a.len(), b.len(), c.len()), (500, 500, 500));
        let fixed = a
            .records
            .iter()
            .zip(&b.records)
            .filter(|(x, y)| x.label() && !y.label())
            .count();
        assert!(fixed > 30);
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.metrics[1..], y.metrics[1..]);
            assert_eq!(x.label(), x.metrics[0] > 5.0);
        }
        let again = planted_releases(&PlantedConfig::default());
        assert_eq!(again[2], c);
    }

    #[test]
    fn planted_commits_follow_the_driver() {
        let log = planted_commits(&PlantedCommitConfig::default());
        assert_eq!(log.records.len(), 700);
        assert!(log.records.iter().all(|r| r.buggy == (r.metrics[0] > 5.0)));
        assert!(log.records.iter().filter(|r| r.buggy).count() > 100);
        assert_eq!(planted_commits(&PlantedCommitConfig::default()), log);
    }
}
