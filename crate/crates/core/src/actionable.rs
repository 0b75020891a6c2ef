//! Choosing which metrics rules may change, from how much they moved historically.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Summary of one feature's change between two snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSizeStats {
    pub feature: String,
    pub mu_a: f64,
    pub mu_b: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub n_a: usize,
    pub n_b: usize,
    /// Hedges' g; infinite when both samples are constant but differ.
    pub g: f64,
}

/// Mean and sample standard deviation, summed in sorted order so the result
/// does not depend on record order.
fn moments(sample: &[f64]) -> (f64, f64) {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Effect size of `a` relative to `b`.
pub fn effect_size(feature: &str, a: &[f64], b: &[f64]) -> Result<EffectSizeStats> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "effect size of `{feature}` needs two values per sample"
        )));
    }
    let (mu_a, sigma_a) = moments(a);
    let (mu_b, sigma_b) = moments(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled = (((na - 1.0) * sigma_a * sigma_a + (nb - 1.0) * sigma_b * sigma_b) / (na + nb - 2.0)).sqrt();
    let diff = mu_a - mu_b;
    let g = if pooled > 0.0 {
        diff / pooled
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    Ok(EffectSizeStats {
        feature: feature.to_string(),
        mu_a,
        mu_b,
        sigma_a,
        sigma_b,
        n_a: a.len(),
        n_b: b.len(),
        g,
    })
}

/// `(mean(a) - mean(b)) / S_pooled` with sample (n - 1) variances.
pub fn hedges_g(a: &[f64], b: &[f64]) -> Result<f64> {
    effect_size("", a, b).map(|s| s.g)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankBy {
    /// Absolute Hedges' g between the two snapshots.
    #[default]
    HedgesG,
    /// Sample variance of both snapshots pooled together.
    Variance,
}

/// Ranked features and the chosen top-M.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionableSelection {
    /// Every feature, best first.
    pub ranked: Vec<EffectSizeStats>,
    pub selected: Vec<String>,
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

fn variance_key(a: &[f64], b: &[f64]) -> f64 {
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let (_, sd) = moments(&all);
    sd * sd
}

fn rank_and_pick(
    mut scored: Vec<(f64, EffectSizeStats)>,
    m: usize,
) -> Result<ActionableSelection> {
    if m == 0 {
        return Err(Error::InvalidInput("M must be at least 1".into()));
    }
    if m > scored.len() {
        log::warn!(
            "M = {m} exceeds the {} available features; all are actionable",
            scored.len()
        );
    }
    scored.sort_by(|(ka, a), (kb, b)| kb.total_cmp(ka).then_with(|| a.feature.cmp(&b.feature)));
    let ranked: Vec<EffectSizeStats> = scored.into_iter().map(|(_, s)| s).collect();
    let selected = ranked.iter().take(m).map(|s| s.feature.clone()).collect();
    Ok(ActionableSelection { ranked, selected })
}

/// Top-`m` features by change between `before` and `after` (row-major, columns per `features`).
pub fn select_actionable(
    features: &[String],
    before: &[Vec<f64>],
    after: &[Vec<f64>],
    m: usize,
    rank_by: RankBy,
) -> Result<ActionableSelection> {
    let scored = features
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let (a, b) = (column(before, j), column(after, j));
            let stats = effect_size(f, &a, &b)?;
            let key = match rank_by {
                RankBy::HedgesG => stats.g.abs(),
                RankBy::Variance => variance_key(&a, &b),
            };
            Ok((key, stats))
        })
        .collect::<Result<Vec<_>>>()?;
    rank_and_pick(scored, m)
}

/// Splits date-ordered items into `k` consecutive chunks of `len / k`, the
/// remainder going to the last one.
pub fn chunk_commits<T>(items: &[T], k: usize) -> Result<Vec<&[T]>> {
    if k < 2 {
        return Err(Error::InvalidInput("need at least two chunks".into()));
    }
    if items.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} records cannot fill {k} chunks",
            items.len()
        )));
    }
    let size = items.len() / k;
    Ok((0..k)
        .map(|i| {
            let end = if i + 1 == k { items.len() } else { (i + 1) * size };
            &items[i * size..end]
        })
        .collect())
}

/// Commit-level selection: effect sizes between consecutive chunks of the
/// date-ordered `rows`, aggregated per feature by the largest |g|.
pub fn select_actionable_chunked(
    features: &[String],
    rows: &[Vec<f64>],
    k: usize,
    m: usize,
    rank_by: RankBy,
) -> Result<ActionableSelection> {
    let chunks = chunk_commits(rows, k)?;
    let scored = features
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let mut best: Option<(f64, EffectSizeStats)> = None;
            for pair in chunks.windows(2) {
                let (a, b) = (column(pair[0], j), column(pair[1], j));
                let stats = effect_size(f, &a, &b)?;
                let key = match rank_by {
                    RankBy::HedgesG => stats.g.abs(),
                    RankBy::Variance => variance_key(&a, &b),
                };
                if best.as_ref().map_or(true, |(bk, _)| key > *bk) {
                    best = Some((key, stats));
                }
            }
            Ok(best.expect("at least one chunk pair"))
        })
        .collect::<Result<Vec<_>>>()?;
    rank_and_pick(scored, m)
}

pub fn actionable_to_json(selected: &[String]) -> String {
    serde_json::to_string_pretty(selected).expect("strings serialise")
}

pub fn actionable_from_json(text: &str) -> Result<Vec<String>> {
    Ok(serde_json::from_str(text)?)
}
