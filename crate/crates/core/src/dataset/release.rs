use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One measured code region (a class) in one release.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRecord {
    pub region_id: String,
    /// Metric values aligned with the owning snapshot's `features`.
    pub metrics: Vec<f64>,
    /// Number of defects recorded for the region.
    pub bug_count: u32,
}

impl RegionRecord {
    pub fn label(&self) -> bool {
        self.bug_count > 0
    }
}

/// All regions of one release of one project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseSnapshot {
    pub project: String,
    pub version: String,
    pub features: Vec<String>,
    pub records: Vec<RegionRecord>,
}

impl ReleaseSnapshot {
    /// Builds a snapshot, checking region uniqueness and metric arity.
    pub fn new(
        project: impl Into<String>,
        version: impl Into<String>,
        features: Vec<String>,
        records: Vec<RegionRecord>,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if r.metrics.len() != features.len() {
                return Err(Error::Schema(format!(
                    "region `{}` has {} metrics, expected {}",
                    r.region_id,
                    r.metrics.len(),
                    features.len()
                )));
            }
            if !seen.insert(r.region_id.as_str()) {
                return Err(Error::DuplicateKey(r.region_id.clone()));
            }
        }
        Ok(Self {
            project: project.into(),
            version: version.into(),
            features,
            records,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f == name)
    }

    /// All values of one metric, in record order.
    pub fn column(&self, feature: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.metrics[feature]).collect()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.records.iter().map(RegionRecord::label).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.metrics.clone()).collect()
    }

    pub fn get(&self, region_id: &str) -> Option<&RegionRecord> {
        self.records.iter().find(|r| r.region_id == region_id)
    }
}

/// Column names used when reading a release CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseSchema {
    pub region_column: String,
    pub version_column: Option<String>,
    pub bug_column: String,
    /// Metric columns to load; `None` takes every remaining column.
    pub metrics: Option<Vec<String>>,
}

impl Default for ReleaseSchema {
    fn default() -> Self {
        Self {
            region_column: "name".into(),
            version_column: Some("version".into()),
            bug_column: "bug".into(),
            metrics: None,
        }
    }
}

/// Reads a release-level CSV into a snapshot.
///
/// The PROMISE exports repeat the `name` column (project name first, class
/// name later); when the region column occurs more than once the last
/// occurrence is the region id and the first is taken as the project name.
pub fn load_release_dataset(path: &Path, schema: &ReleaseSchema) -> Result<ReleaseSnapshot> {
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

    let name_positions: Vec<usize> = positions(&headers, &schema.region_column);
    let region_col = *name_positions
        .last()
        .ok_or_else(|| Error::MissingColumn(schema.region_column.clone()))?;
    let project_col = (name_positions.len() > 1).then(|| name_positions[0]);
    let version_col = match &schema.version_column {
        Some(v) => Some(
            headers
                .iter()
                .position(|h| h == v)
                .ok_or_else(|| Error::MissingColumn(v.clone()))?,
        ),
        None => None,
    };
    let bug_col = headers
        .iter()
        .position(|h| *h == schema.bug_column)
        .ok_or_else(|| Error::MissingColumn(schema.bug_column.clone()))?;

    let metric_cols: Vec<usize> = match &schema.metrics {
        Some(names) => names
            .iter()
            .map(|n| {
                headers
                    .iter()
                    .position(|h| h == n)
                    .ok_or_else(|| Error::MissingColumn(n.clone()))
            })
            .collect::<Result<_>>()?,
        None => (0..headers.len())
            .filter(|&i| {
                !name_positions.contains(&i) && Some(i) != version_col && i != bug_col
            })
            .collect(),
    };
    let features: Vec<String> = metric_cols.iter().map(|&i| headers[i].clone()).collect();

    // Without a project column the file stem names the project, minus a `-<version>` suffix.
    let mut project = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut version = String::new();
    let mut records = Vec::new();
    for (row_idx, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let row_no = row_idx + 2;
        if row_idx == 0 {
            if let Some(c) = project_col {
                project = row.get(c).unwrap_or_default().to_owned();
            }
            if let Some(c) = version_col {
                version = row.get(c).unwrap_or_default().to_owned();
            }
            if project_col.is_none() && !version.is_empty() {
                if let Some(stem) = project.strip_suffix(&format!("-{version}")) {
                    project = stem.to_owned();
                }
            }
        }
        let metrics = metric_cols
            .iter()
            .map(|&c| parse_f64(row.get(c).unwrap_or(""), row_no, &headers[c]))
            .collect::<Result<Vec<_>>>()?;
        let bug_count = parse_count(row.get(bug_col).unwrap_or(""), row_no, &headers[bug_col])?;
        records.push(RegionRecord {
            region_id: row.get(region_col).unwrap_or_default().to_owned(),
            metrics,
            bug_count,
        });
    }
    ReleaseSnapshot::new(project, version, features, records)
}

/// Writes a snapshot in the `name,version,<metric...>,bug` layout.
pub fn write_release_csv(snapshot: &ReleaseSnapshot, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut header = vec!["name".to_owned(), "version".to_owned()];
    header.extend(snapshot.features.iter().cloned());
    header.push("bug".into());
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for r in &snapshot.records {
        let mut row = vec![r.region_id.clone(), snapshot.version.clone()];
        row.extend(r.metrics.iter().map(|v| v.to_string()));
        row.push(r.bug_count.to_string());
        w.write_record(&row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// A region present in three consecutive releases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedTriple {
    pub region_id: String,
    pub at_prev: RegionRecord,
    pub at_test: RegionRecord,
    pub at_next: RegionRecord,
}

/// Regions common to releases t-1, t and t+1, sorted by region id.
///
/// Identity is the exact region name; renamed classes do not match.
pub fn match_regions(
    prev: &ReleaseSnapshot,
    test: &ReleaseSnapshot,
    next: &ReleaseSnapshot,
) -> Result<Vec<MatchedTriple>> {
    if prev.features != test.features || test.features != next.features {
        return Err(Error::Schema(
            "snapshots do not share the same feature set".into(),
        ));
    }
    let index = |s: &ReleaseSnapshot| -> BTreeMap<String, RegionRecord> {
        s.records
            .iter()
            .map(|r| (r.region_id.clone(), r.clone()))
            .collect()
    };
    let mut test_idx = index(test);
    let mut next_idx = index(next);
    let mut out: Vec<MatchedTriple> = prev
        .records
        .iter()
        .filter_map(|p| {
            let t = test_idx.remove(&p.region_id)?;
            let n = next_idx.remove(&p.region_id)?;
            Some(MatchedTriple {
                region_id: p.region_id.clone(),
                at_prev: p.clone(),
                at_test: t,
                at_next: n,
            })
        })
        .collect();
    out.sort_by(|a, b| a.region_id.cmp(&b.region_id));
    Ok(out)
}

fn positions(headers: &[String], name: &str) -> Vec<usize> {
    headers
        .iter()
        .enumerate()
        .filter(|(_, h)| *h == name)
        .map(|(i, _)| i)
        .collect()
}

pub(crate) fn csv_open_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Schema(format!("{}: {other:?}", path.display())),
    }
}

pub(crate) fn parse_f64(cell: &str, row: usize, column: &str) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            row,
            column: column.to_owned(),
            value: cell.to_owned(),
        })
}

fn parse_count(cell: &str, row: usize, column: &str) -> Result<u32> {
    let err = || Error::Parse {
        row,
        column: column.to_owned(),
        value: cell.to_owned(),
    };
    let v = cell.trim().parse::<f64>().map_err(|_| err())?;
    if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
        return Err(err());
    }
    Ok(v as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p)
            .unwrap()
            .write_all(body.as_bytes())
            .unwrap();
        p
    }

    fn snap(ids: &[&str]) -> ReleaseSnapshot {
        let records = ids
            .iter()
            .map(|id| RegionRecord {
                region_id: (*id).into(),
                metrics: vec![1.0],
                bug_count: 0,
            })
            .collect();
        ReleaseSnapshot::new("p", "1", vec!["wmc".into()], records).unwrap()
    }

    #[test]
    fn labels_follow_bug_count() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "name,version,wmc,cbo,bug\nA,1.0,3,4,0\nB,1.0,5,1,2\n");
        let s = load_release_dataset(&p, &ReleaseSchema::default()).unwrap();
        assert_eq!(s.features, vec!["wmc", "cbo"]);
        assert!(!s.records[0].label());
        assert_eq!(s.records[1].bug_count, 2);
        assert!(s.records[1].label());
        assert_eq!(s.version, "1.0");
    }

    #[test]
    fn promise_layout_uses_last_name_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "jedit.csv",
            "name,version,name,wmc,bug\njedit,4.1,org.A,3,1\njedit,4.1,org.B,2,0\n",
        );
        let s = load_release_dataset(&p, &ReleaseSchema::default()).unwrap();
        assert_eq!(s.project, "jedit");
        assert_eq!(s.records[0].region_id, "org.A");
        assert_eq!(s.features, vec!["wmc"]);
    }

    #[test]
    fn missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "name,version,wmc\nA,1,3\n");
        let err = load_release_dataset(&p, &ReleaseSchema::default()).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(ref c) if c == "bug"), "{err}");
    }

    #[test]
    fn bad_numeric_cell_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "name,version,wmc,bug\nA,1,abc,0\n");
        let err = load_release_dataset(&p, &ReleaseSchema::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }), "{err}");
    }

    #[test]
    fn duplicate_region_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "name,version,wmc,bug\nA,1,1,0\nA,1,2,0\n");
        let err = load_release_dataset(&p, &ReleaseSchema::default()).unwrap_err();
        assert!(matches!(err, Error::DuplicateKey(ref k) if k == "A"));
    }

    #[test]
    fn round_trip_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "name,version,wmc,lcom3,bug\nA,2,3,0.125,0\nB,2,7,1.3333333333333333,4\n");
        let s = load_release_dataset(&p, &ReleaseSchema::default()).unwrap();
        let out = dir.path().join("b.csv");
        write_release_csv(&s, &out).unwrap();
        let back = load_release_dataset(&out, &ReleaseSchema::default()).unwrap();
        assert_eq!(back.records, s.records);
    }

    #[test]
    fn match_is_sorted_intersection() {
        let t = match_regions(&snap(&["A", "B"]), &snap(&["B", "C"]), &snap(&["B"])).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].region_id, "B");

        let t = match_regions(&snap(&["C", "A", "B"]), &snap(&["B", "A", "C"]), &snap(&["A", "C"]))
            .unwrap();
        let ids: Vec<_> = t.iter().map(|m| m.region_id.as_str()).collect();
        assert_eq!(ids, ["A", "C"]);
    }

    #[test]
    fn disjoint_snapshots_match_nothing() {
        let t = match_regions(&snap(&["A"]), &snap(&["B"]), &snap(&["C"])).unwrap();
        assert!(t.is_empty());
    }
}
