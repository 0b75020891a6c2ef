//! Ingestion of release-level and commit-level metric datasets.
//!
//! Release data follows the Jureczko/PROMISE layout (`name,version,<metric...>,bug`)
//! and is matched across three consecutive releases. Commit data
//! (`commit,file,author_date,<metric...>,label`) is split chronologically into
//! train/test/validation with each buggy test record paired to its fix.

mod commit;
mod release;

pub use commit::{
    load_commit_log, parse_date, parse_label, split_commits, CommitLog, CommitRecord,
    CommitSchema, CommitSplit, SplitConfig, write_commit_csv,
};
pub use release::{
    load_release_dataset, match_regions, write_release_csv, MatchedTriple, RegionRecord,
    ReleaseSchema, ReleaseSnapshot,
};

/// Index of `name` among `features`, or a schema error naming it.
pub(crate) fn feature_position(features: &[String], name: &str) -> crate::Result<usize> {
    features
        .iter()
        .position(|f| f == name)
        .ok_or_else(|| crate::Error::Schema(format!("unknown feature `{name}`")))
}
