//! Synthetic Minority Over-sampling (SMOTE).
//!
//! Each synthetic point is `x + u * (neighbor - x)` with `u ~ U[0, 1)` and the
//! neighbor drawn from the `k` nearest minority points of a randomly chosen
//! minority point `x`. Distances are Euclidean on z-scored features; the
//! interpolation happens in the original feature space.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k: usize,
    pub seed: u64,
    /// Replicate a lone minority instance instead of failing.
    pub duplicate_singleton: bool,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self {
            k: 5,
            seed: 0,
            duplicate_singleton: false,
        }
    }
}

/// Rows after rebalancing; originals come first in input order, synthetics after.
#[derive(Debug, Clone, PartialEq)]
pub struct Rebalanced {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
    pub n_synthetic: usize,
    /// Input-row indices `(base, neighbor)` of each synthetic row.
    pub parents: Vec<(usize, usize)>,
}

/// Oversamples the minority class until both classes have equal counts.
pub fn smote(rows: &[Vec<f64>], labels: &[bool], config: SmoteConfig) -> Result<Rebalanced> {
    if rows.len() != labels.len() {
        return Err(Error::InvalidInput("rows and labels differ in length".into()));
    }
    if config.k == 0 {
        return Err(Error::InvalidInput("SMOTE needs k >= 1".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InsufficientData(
            "SMOTE needs both classes present".into(),
        ));
    }
    let minority_label = n_pos < n_neg;
    let needed = n_pos.abs_diff(n_neg);
    let mut out = Rebalanced {
        rows: rows.to_vec(),
        labels: labels.to_vec(),
        n_synthetic: needed,
        parents: Vec::with_capacity(needed),
    };
    if needed == 0 {
        return Ok(out);
    }

    let minority_idx: Vec<usize> = (0..rows.len())
        .filter(|&i| labels[i] == minority_label)
        .collect();
    let minority: Vec<&Vec<f64>> = minority_idx.iter().map(|&i| &rows[i]).collect();
    if minority.len() == 1 {
        if !config.duplicate_singleton {
            return Err(Error::SingletonMinority);
        }
        out.rows.extend(std::iter::repeat(minority[0].clone()).take(needed));
        out.labels.extend(std::iter::repeat(minority_label).take(needed));
        let only = minority_idx[0];
        out.parents.extend(std::iter::repeat((only, only)).take(needed));
        return Ok(out);
    }

    let scale = standardizer(rows);
    let standardized: Vec<Vec<f64>> = minority.iter().map(|r| scale.apply(r)).collect();
    let k = config.k.min(minority.len() - 1);
    let neighbors: Vec<Vec<usize>> = (0..minority.len())
        .map(|i| nearest(&standardized, i, k))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..needed {
        let i = rng.gen_range(0..minority.len());
        let j = neighbors[i][rng.gen_range(0..k)];
        let u: f64 = rng.gen();
        let (x, nb) = (minority[i], minority[j]);
        out.rows
            .push(x.iter().zip(nb).map(|(a, b)| a + u * (b - a)).collect());
        out.labels.push(minority_label);
        out.parents.push((minority_idx[i], minority_idx[j]));
    }
    Ok(out)
}

struct Standardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Standardizer {
    fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

fn standardizer(rows: &[Vec<f64>]) -> Standardizer {
    let d = rows.first().map_or(0, Vec::len);
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n;
        }
    }
    let mut std = vec![0.0; d];
    for r in rows {
        for ((s, v), m) in std.iter_mut().zip(r).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    // constant columns carry no distance information
    let std = std
        .into_iter()
        .map(|s| if s > 0.0 { s.sqrt() } else { 1.0 })
        .collect();
    Standardizer { mean, std }
}

/// Indices of the `k` nearest points to `points[i]`, excluding `i`; ties by index.
fn nearest(points: &[Vec<f64>], i: usize, k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(j, p)| {
            let dist: f64 = p
                .iter()
                .zip(&points[i])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (dist, j)
        })
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|(_, j)| j).collect()
}
