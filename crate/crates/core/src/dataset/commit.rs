use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use chrono::{DateTime, Months, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::release::{csv_open_error, parse_f64};
use crate::{Error, Result};

/// One changed file within one commit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub commit_hash: String,
    pub file_path: String,
    /// Author date, normalised to UTC.
    pub author_date: NaiveDateTime,
    /// Metric values aligned with the owning log's `features`.
    pub metrics: Vec<f64>,
    pub buggy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitLog {
    pub features: Vec<String>,
    pub records: Vec<CommitRecord>,
}

impl CommitLog {
    pub fn new(features: Vec<String>, records: Vec<CommitRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if r.metrics.len() != features.len() {
                return Err(Error::Schema(format!(
                    "commit `{}` file `{}` has {} metrics, expected {}",
                    r.commit_hash,
                    r.file_path,
                    r.metrics.len(),
                    features.len()
                )));
            }
            if !seen.insert((r.commit_hash.as_str(), r.file_path.as_str())) {
                return Err(Error::DuplicateKey(format!(
                    "{}:{}",
                    r.commit_hash, r.file_path
                )));
            }
        }
        Ok(Self { features, records })
    }

    /// Records ordered by (author date, hash, file).
    pub fn sorted(&self) -> Vec<CommitRecord> {
        let mut v = self.records.clone();
        sort_chronologically(&mut v);
        v
    }
}

pub(crate) fn sort_chronologically(records: &mut [CommitRecord]) {
    records.sort_by(|a, b| {
        a.author_date
            .cmp(&b.author_date)
            .then_with(|| a.commit_hash.cmp(&b.commit_hash))
            .then_with(|| a.file_path.cmp(&b.file_path))
    });
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitSchema {
    pub commit_column: String,
    pub file_column: String,
    pub date_column: String,
    pub label_column: String,
    pub metrics: Option<Vec<String>>,
}

impl Default for CommitSchema {
    fn default() -> Self {
        Self {
            commit_column: "commit".into(),
            file_column: "file".into(),
            date_column: "author_date".into(),
            label_column: "label".into(),
            metrics: None,
        }
    }
}

/// Parses ISO-8601 dates and datetimes (with or without offset) and `dd/mm/yyyy`.
pub fn parse_date(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.naive_utc());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f%z", "%Y-%m-%d %H:%M:%S%.f%z", "%Y-%m-%d %H:%M:%S %z"] {
        if let Ok(dt) = DateTime::parse_from_str(s, fmt) {
            return Some(dt.naive_utc());
        }
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%d/%m/%Y %H:%M:%S",
        "%d/%m/%Y %H:%M",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt);
        }
    }
    for fmt in ["%Y-%m-%d", "%d/%m/%Y"] {
        if let Ok(d) = NaiveDate::parse_from_str(s, fmt) {
            return d.and_hms_opt(0, 0, 0);
        }
    }
    None
}

pub fn parse_label(s: &str) -> Option<bool> {
    match s.trim() {
        "1" | "true" | "True" => Some(true),
        "0" | "false" | "False" => Some(false),
        _ => None,
    }
}

/// Reads a commit-level CSV (`commit,file,author_date,<metric...>,label`).
pub fn load_commit_log(path: &Path, schema: &CommitSchema) -> Result<CommitLog> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_open_error(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    };
    let commit_col = col(&schema.commit_column)?;
    let file_col = col(&schema.file_column)?;
    let date_col = col(&schema.date_column)?;
    let label_col = col(&schema.label_column)?;
    let metric_cols: Vec<usize> = match &schema.metrics {
        Some(names) => names.iter().map(|n| col(n)).collect::<Result<_>>()?,
        None => (0..headers.len())
            .filter(|i| ![commit_col, file_col, date_col, label_col].contains(i))
            .collect(),
    };
    let features = metric_cols.iter().map(|&i| headers[i].clone()).collect();

    let mut records = Vec::new();
    for (row_idx, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let row_no = row_idx + 2;
        let cell = |c: usize| row.get(c).unwrap_or("");
        let parse_err = |c: usize| Error::Parse {
            row: row_no,
            column: headers[c].clone(),
            value: cell(c).to_owned(),
        };
        let author_date = parse_date(cell(date_col)).ok_or_else(|| parse_err(date_col))?;
        let buggy = parse_label(cell(label_col)).ok_or_else(|| parse_err(label_col))?;
        let metrics = metric_cols
            .iter()
            .map(|&c| parse_f64(cell(c), row_no, &headers[c]))
            .collect::<Result<Vec<_>>>()?;
        records.push(CommitRecord {
            commit_hash: cell(commit_col).to_owned(),
            file_path: cell(file_col).to_owned(),
            author_date,
            metrics,
            buggy,
        });
    }
    CommitLog::new(features, records)
}

/// Writes a log in the `commit,file,author_date,<metric...>,label` layout.
pub fn write_commit_csv(log: &CommitLog, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut header = vec!["commit".to_owned(), "file".to_owned(), "author_date".to_owned()];
    header.extend(log.features.iter().cloned());
    header.push("label".into());
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for r in &log.records {
        let mut row = vec![
            r.commit_hash.clone(),
            r.file_path.clone(),
            r.author_date.format("%Y-%m-%dT%H:%M:%S").to_string(),
        ];
        row.extend(r.metrics.iter().map(|v| v.to_string()));
        row.push(u8::from(r.buggy).to_string());
        w.write_record(&row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Length of the most recent window excluded from train and test.
    pub holdout_months: u32,
    /// Number of most recent (post-holdout) commits reserved for testing.
    pub test_size: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            holdout_months: 3,
            test_size: 250,
        }
    }
}

/// Chronological train/test/validation split of a commit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitSplit {
    pub train: Vec<CommitRecord>,
    /// Buggy records among the reserved commits.
    pub test: Vec<CommitRecord>,
    /// Fix records paired with test records (deduplicated).
    pub validation: Vec<CommitRecord>,
    /// Index into `test` -> index into `validation`.
    pub fix_pairing: BTreeMap<usize, usize>,
    /// Indices into `test` for which no qualifying fix exists.
    pub skipped: Vec<usize>,
    /// Number of records dropped by the holdout window.
    pub holdout_excluded: usize,
}

/// Splits commits chronologically.
///
/// Commits dated after `latest - holdout_months` are dropped. Of the rest, the
/// last `test_size` distinct commits are reserved: their buggy file records
/// form the test set, everything older is training. For each test record the
/// earliest later non-buggy record touching the same file (searched over the
/// whole log, holdout included) is its fix.
pub fn split_commits(log: &CommitLog, config: SplitConfig) -> Result<CommitSplit> {
    let sorted = log.sorted();
    let Some(latest) = sorted.last().map(|r| r.author_date) else {
        return Err(Error::InsufficientData("commit log is empty".into()));
    };
    let cutoff = latest
        .checked_sub_months(Months::new(config.holdout_months))
        .ok_or_else(|| Error::InvalidInput("holdout window underflows the calendar".into()))?;
    let keep = sorted.partition_point(|r| r.author_date <= cutoff);
    let (eligible, holdout) = sorted.split_at(keep);

    let mut hashes: Vec<&str> = Vec::new();
    let mut seen = HashSet::new();
    for r in eligible {
        if seen.insert(r.commit_hash.as_str()) {
            hashes.push(&r.commit_hash);
        }
    }
    if hashes.len() < config.test_size {
        return Err(Error::InsufficientData(format!(
            "{} commits remain after the {}-month holdout, {} needed for testing",
            hashes.len(),
            config.holdout_months,
            config.test_size
        )));
    }
    let reserved: HashSet<&str> = hashes[hashes.len() - config.test_size..]
        .iter()
        .copied()
        .collect();

    let mut train = Vec::new();
    let mut test = Vec::new();
    for r in eligible {
        if reserved.contains(r.commit_hash.as_str()) {
            if r.buggy {
                test.push(r.clone());
            }
        } else {
            train.push(r.clone());
        }
    }

    let mut by_file: HashMap<&str, Vec<&CommitRecord>> = HashMap::new();
    for r in &sorted {
        by_file.entry(r.file_path.as_str()).or_default().push(r);
    }
    let mut validation: Vec<CommitRecord> = Vec::new();
    let mut validation_index: HashMap<(String, String), usize> = HashMap::new();
    let mut fix_pairing = BTreeMap::new();
    let mut skipped = Vec::new();
    for (i, bug) in test.iter().enumerate() {
        let fix = by_file[bug.file_path.as_str()]
            .iter()
            .find(|c| c.author_date > bug.author_date && !c.buggy);
        match fix {
            Some(fix) => {
                let key = (fix.commit_hash.clone(), fix.file_path.clone());
                let v = *validation_index.entry(key).or_insert_with(|| {
                    validation.push((*fix).clone());
                    validation.len() - 1
                });
                fix_pairing.insert(i, v);
            }
            None => skipped.push(i),
        }
    }

    Ok(CommitSplit {
        train,
        test,
        validation,
        fix_pairing,
        skipped,
        holdout_excluded: holdout.len(),
    })
}
