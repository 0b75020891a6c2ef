//! Correlation-based feature pruning in the spirit of AutoSpearman.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneOutcome {
    pub retained: Vec<String>,
    pub dropped: Vec<String>,
    /// Constant features, whose correlations were taken as zero.
    pub constant: Vec<String>,
}

/// Mid-ranks (1-based; ties share their average rank).
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Spearman's rho; `None` when either column is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&ranks(x), &ranks(y))
}

/// Greedy collinearity filter.
///
/// Features are visited in ascending order of their mean absolute Spearman
/// correlation with all other features (ties by name); a feature is kept
/// unless its |rho| with an already-kept feature exceeds `rho_threshold`.
pub fn spearman_prune(
    features: &[String],
    columns: &[Vec<f64>],
    rho_threshold: f64,
) -> Result<PruneOutcome> {
    if features.len() != columns.len() {
        return Err(Error::InvalidInput("one column per feature required".into()));
    }
    if features.len() < 2 {
        return Err(Error::InsufficientData(
            "correlation pruning needs at least two features".into(),
        ));
    }
    let d = features.len();
    let ranked: Vec<Vec<f64>> = columns.iter().map(|c| ranks(c)).collect();
    let constant: Vec<String> = (0..d)
        .filter(|&i| columns[i].iter().all(|v| *v == columns[i][0]))
        .map(|i| features[i].clone())
        .collect();
    for c in &constant {
        log::warn!("feature `{c}` is constant; its Spearman correlations are taken as 0");
    }

    let mut rho = vec![vec![0.0; d]; d];
    for i in 0..d {
        rho[i][i] = 1.0;
        for j in i + 1..d {
            let r = pearson(&ranked[i], &ranked[j]).unwrap_or(0.0);
            rho[i][j] = r;
            rho[j][i] = r;
        }
    }
    let mean_abs: Vec<f64> = (0..d)
        .map(|i| (0..d).filter(|&j| j != i).map(|j| rho[i][j].abs()).sum::<f64>() / (d - 1) as f64)
        .collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        mean_abs[a]
            .total_cmp(&mean_abs[b])
            .then_with(|| features[a].cmp(&features[b]))
    });

    let mut kept: Vec<usize> = Vec::new();
    let mut dropped = Vec::new();
    for i in order {
        if kept.iter().any(|&k| rho[i][k].abs() > rho_threshold) {
            dropped.push(features[i].clone());
        } else {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    Ok(PruneOutcome {
        retained: kept.into_iter().map(|i| features[i].clone()).collect(),
        dropped,
        constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn mid_ranks() {
        assert_eq!(ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn identical_columns_keep_one() {
        let c: Vec<f64> = (0..20).map(|i| (i * 3 % 7) as f64).collect();
        let out = spearman_prune(&names(2), &[c.clone(), c], 0.7).unwrap();
        assert_eq!(out.retained.len(), 1);
    }

    #[test]
    fn monotone_transform_is_perfectly_correlated() {
        let x: Vec<f64> = (1..30).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powi(3)).collect();
        assert!((spearman(&x, &y).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_feature_is_flagged_and_kept() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let out = spearman_prune(&names(2), &[x, vec![1.0; 10]], 0.7).unwrap();
        assert_eq!(out.constant, vec!["f1"]);
        assert_eq!(out.retained.len(), 2);
    }

    #[test]
    fn independent_columns_all_retained() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let cols: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..500).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let max_rho = (0..6)
            .flat_map(|i| (i + 1..6).map(move |j| (i, j)))
            .map(|(i, j)| spearman(&cols[i], &cols[j]).unwrap().abs())
            .fold(0.0, f64::max);
        assert!(max_rho < 0.7);
        let out = spearman_prune(&names(6), &cols, 0.7).unwrap();
        assert_eq!(out.retained.len(), 6);
    }

    #[test]
    fn needs_two_features() {
        assert!(spearman_prune(&names(1), &[vec![1.0, 2.0]], 0.7).is_err());
    }

    proptest! {
        #[test]
        fn no_retained_pair_exceeds_threshold(
            cols in prop::collection::vec(prop::collection::vec(0u8..6, 15), 2..6),
            threshold in 0.2f64..0.95,
        ) {
            let cols: Vec<Vec<f64>> = cols.into_iter()
                .map(|c| c.into_iter().map(f64::from).collect()).collect();
            let f = names(cols.len());
            let out = spearman_prune(&f, &cols, threshold).unwrap();
            for a in &out.retained {
                for b in &out.retained {
                    if a < b {
                        let i = f.iter().position(|x| x == a).unwrap();
                        let j = f.iter().position(|x| x == b).unwrap();
                        let r = spearman(&cols[i], &cols[j]).unwrap_or(0.0);
                        prop_assert!(r.abs() <= threshold);
                    }
                }
            }
        }
    }
}
