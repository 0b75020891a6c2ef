use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::preprocess::DiscretizedData;
use crate::{Error, Result};

/// A `feature = bin` condition; `feature` indexes the mined data's feature list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Item {
    pub feature: usize,
    pub bin: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    pub min_support: f64,
    pub min_confidence: f64,
    pub max_len: usize,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            min_support: 0.05,
            min_confidence: 0.55,
            max_len: 4,
        }
    }
}

/// `antecedent ⇒ class` with exact counts over the mined data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRule {
    pub id: usize,
    /// Sorted by feature index; one item per feature.
    pub antecedent: Vec<Item>,
    pub consequent: bool,
    pub support: f64,
    pub confidence: f64,
    /// Rows matching antecedent and consequent.
    pub support_count: usize,
    /// Rows matching the antecedent.
    pub antecedent_count: usize,
}

impl ClassificationRule {
    pub fn matches(&self, bins: &[usize]) -> bool {
        self.antecedent.iter().all(|it| bins[it.feature] == it.bin)
    }
}

/// Canonical rule order: antecedent items lexicographically, then consequent.
pub fn canonical_cmp(a: &ClassificationRule, b: &ClassificationRule) -> Ordering {
    a.antecedent
        .cmp(&b.antecedent)
        .then(a.consequent.cmp(&b.consequent))
}

pub(crate) fn meets(count: usize, n: usize, threshold: f64) -> bool {
    count as f64 / n as f64 >= threshold
}

#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn zeros(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
}

struct Frequent {
    items: Vec<Item>,
    cover: Bits,
    cover_count: usize,
    rule_cover: Bits,
    rule_count: usize,
}

/// Level-wise Apriori search for class-association rules.
///
/// Candidates are `(antecedent, class)` rule items; a rule item is frequent
/// when its support reaches `min_support`, which is anti-monotone in the
/// antecedent. Every frequent rule item with confidence at least
/// `min_confidence` is returned, for both classes, in canonical order with
/// ids equal to positions.
pub fn mine_rules(data: &DiscretizedData, config: &MiningConfig) -> Result<Vec<ClassificationRule>> {
    if data.is_empty() {
        return Err(Error::InsufficientData("no rows to mine".into()));
    }
    if config.max_len < 1 {
        return Err(Error::InvalidInput("max_len must be at least 1".into()));
    }
    for (name, v) in [
        ("min_support", config.min_support),
        ("min_confidence", config.min_confidence),
    ] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::InvalidInput(format!("{name} must be in (0, 1], got {v}")));
        }
    }
    let n = data.len();
    let d = data.features.len();

    let mut item_bits: Vec<Vec<Bits>> = data
        .n_bins
        .iter()
        .map(|&b| vec![Bits::zeros(n); b])
        .collect();
    let mut class_bits = [Bits::zeros(n), Bits::zeros(n)];
    for (r, row) in data.rows.iter().enumerate() {
        if row.len() != d {
            return Err(Error::Schema(format!("row {r} has {} bins, expected {d}", row.len())));
        }
        for (f, &b) in row.iter().enumerate() {
            if b >= data.n_bins[f] {
                return Err(Error::InvalidInput(format!(
                    "row {r}: bin {b} out of range for `{}`",
                    data.features[f]
                )));
            }
            item_bits[f][b].set(r);
        }
        class_bits[data.labels[r] as usize].set(r);
    }

    let mut rules = Vec::new();
    for class in [false, true] {
        let class_cover = &class_bits[class as usize];
        let mut level: Vec<Frequent> = Vec::new();
        for (f, bins) in item_bits.iter().enumerate() {
            for (b, cover) in bins.iter().enumerate() {
                let rule_cover = cover.and(class_cover);
                let rule_count = rule_cover.count();
                if meets(rule_count, n, config.min_support) {
                    level.push(Frequent {
                        items: vec![Item { feature: f, bin: b }],
                        cover_count: cover.count(),
                        cover: cover.clone(),
                        rule_cover,
                        rule_count,
                    });
                }
            }
        }

        let mut len = 1;
        loop {
            for fr in &level {
                if meets(fr.rule_count, fr.cover_count, config.min_confidence) {
                    rules.push(ClassificationRule {
                        id: 0,
                        antecedent: fr.items.clone(),
                        consequent: class,
                        support: fr.rule_count as f64 / n as f64,
                        confidence: fr.rule_count as f64 / fr.cover_count as f64,
                        support_count: fr.rule_count,
                        antecedent_count: fr.cover_count,
                    });
                }
            }
            if len == config.max_len || level.len() < 2 {
                break;
            }
            level = next_level(&level, &item_bits, n, config.min_support);
            len += 1;
        }
    }

    rules.sort_by(canonical_cmp);
    for (i, r) in rules.iter_mut().enumerate() {
        r.id = i;
    }
    Ok(rules)
}

fn next_level(level: &[Frequent], item_bits: &[Vec<Bits>], n: usize, min_support: f64) -> Vec<Frequent> {
    let known: HashSet<&[Item]> = level.iter().map(|f| f.items.as_slice()).collect();
    let k = level[0].items.len();
    let mut out = Vec::new();
    // `level` is in lexicographic item order, so joinable prefixes are contiguous
    for (i, a) in level.iter().enumerate() {
        for b in &level[i + 1..] {
            if a.items[..k - 1] != b.items[..k - 1] {
                break;
            }
            let (la, lb) = (a.items[k - 1], b.items[k - 1]);
            if la.feature == lb.feature {
                continue;
            }
            let mut items = a.items.clone();
            items.push(lb);
            let all_subsets_frequent = (0..items.len() - 2).all(|skip| {
                let sub: Vec<Item> = items
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != skip)
                    .map(|(_, it)| *it)
                    .collect();
                known.contains(sub.as_slice())
            });
            if !all_subsets_frequent {
                continue;
            }
            let item_cover = &item_bits[lb.feature][lb.bin];
            let rule_cover = a.rule_cover.and(item_cover);
            let rule_count = rule_cover.count();
            debug_assert!(rule_count <= a.rule_count && rule_count <= b.rule_count);
            if meets(rule_count, n, min_support) {
                let cover = a.cover.and(item_cover);
                out.push(Frequent {
                    items,
                    cover_count: cover.count(),
                    cover,
                    rule_cover,
                    rule_count,
                });
            }
        }
    }
    out
}
