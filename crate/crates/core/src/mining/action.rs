use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::apriori::{ClassificationRule, Item};
use crate::preprocess::DiscretizedData;
use crate::{Error, Result};

/// A flexible condition that must move from bin `from` (α) to bin `to` (β).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub feature: usize,
    pub from: usize,
    pub to: usize,
}

/// `ω ∧ (α → β) ⇒ class_from → class_to`, built from two classification rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRule {
    pub id: usize,
    /// Conditions kept fixed (ω), sorted by feature.
    pub stable: Vec<Item>,
    /// Changes to make, sorted by feature; never empty.
    pub flexible: Vec<Transition>,
    pub class_from: bool,
    pub class_to: bool,
    pub support: f64,
    pub confidence: f64,
    pub uplift: Option<f64>,
    /// Ids of the `class_from` and `class_to` classification rules.
    pub parents: [usize; 2],
}

impl ActionRule {
    fn stable_ok(&self, bins: &[usize]) -> bool {
        self.stable.iter().all(|it| bins[it.feature] == it.bin)
    }

    /// Matches `ω ∧ α`: the region is in the rule's problem state.
    pub fn matches_from(&self, bins: &[usize]) -> bool {
        self.stable_ok(bins) && self.flexible.iter().all(|t| bins[t.feature] == t.from)
    }

    /// Matches `ω ∧ β`: the region is in the rule's recommended state.
    pub fn matches_to(&self, bins: &[usize]) -> bool {
        self.stable_ok(bins) && self.flexible.iter().all(|t| bins[t.feature] == t.to)
    }

    /// Rule antecedent length.
    pub fn len(&self) -> usize {
        self.stable.len() + self.flexible.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Pairs `⇒ class_from` rules with `⇒ class_to` rules.
///
/// Two rules pair when they mention the same features, agree on every
/// non-flexible one, and differ on at least one flexible one. Flexible
/// features on which they agree become part of the stable conjunction.
/// `flexible` holds indices into the mined feature list.
pub fn pair_action_rules(
    rules: &[ClassificationRule],
    flexible: &BTreeSet<usize>,
    class_from: bool,
    class_to: bool,
) -> Result<Vec<ActionRule>> {
    if class_from == class_to {
        return Err(Error::InvalidInput("class_from and class_to must differ".into()));
    }
    let mut groups: BTreeMap<Vec<usize>, (Vec<&ClassificationRule>, Vec<&ClassificationRule>)> =
        BTreeMap::new();
    for r in rules {
        let key: Vec<usize> = r.antecedent.iter().map(|it| it.feature).collect();
        let slot = groups.entry(key).or_default();
        if r.consequent == class_from {
            slot.0.push(r);
        } else {
            slot.1.push(r);
        }
    }

    let mut out = Vec::new();
    for (from_rules, to_rules) in groups.values() {
        for r1 in from_rules {
            'pair: for r2 in to_rules {
                let mut stable = Vec::new();
                let mut moves = Vec::new();
                for (a, b) in r1.antecedent.iter().zip(&r2.antecedent) {
                    if a.bin == b.bin {
                        stable.push(*a);
                    } else if flexible.contains(&a.feature) {
                        moves.push(Transition {
                            feature: a.feature,
                            from: a.bin,
                            to: b.bin,
                        });
                    } else {
                        continue 'pair;
                    }
                }
                if moves.is_empty() {
                    continue;
                }
                out.push(ActionRule {
                    id: 0,
                    stable,
                    flexible: moves,
                    class_from,
                    class_to,
                    support: r1.support.min(r2.support),
                    confidence: r1.confidence * r2.confidence,
                    uplift: None,
                    parents: [r1.id, r2.id],
                });
            }
        }
    }
    out.sort_by(|a, b| {
        (&a.stable, &a.flexible, a.parents).cmp(&(&b.stable, &b.flexible, b.parents))
    });
    out.dedup_by(|a, b| a.stable == b.stable && a.flexible == b.flexible && a.parents == b.parents);
    for (i, r) in out.iter_mut().enumerate() {
        r.id = i;
    }
    Ok(out)
}

/// `P(class_to | ω ∧ β) − P(class_to | ω ∧ α)` by counting over `data`.
///
/// `None` when either the treated (`ω ∧ β`) or control (`ω ∧ α`) group is empty.
pub fn compute_uplift(rule: &ActionRule, data: &DiscretizedData) -> Option<f64> {
    let (mut treated, mut treated_hits, mut control, mut control_hits) = (0usize, 0usize, 0usize, 0usize);
    for (row, &label) in data.rows.iter().zip(&data.labels) {
        if rule.matches_to(row) {
            treated += 1;
            treated_hits += (label == rule.class_to) as usize;
        } else if rule.matches_from(row) {
            control += 1;
            control_hits += (label == rule.class_to) as usize;
        }
    }
    (treated > 0 && control > 0)
        .then(|| treated_hits as f64 / treated as f64 - control_hits as f64 / control as f64)
}

/// Fills `uplift` for every rule.
pub fn score_uplift(rules: &mut [ActionRule], data: &DiscretizedData) {
    for r in rules {
        r.uplift = compute_uplift(r, data);
    }
}

/// One region observed in two consecutive versions, binned under the same scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservedChange {
    pub before: Vec<usize>,
    pub after: Vec<usize>,
    /// Whether the change resolved a defect.
    pub fixed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleVerdict {
    Tp,
    Fp,
    Unmatched,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleLabel {
    /// Matched changes that fixed a defect.
    pub tp: usize,
    /// Matched changes that did not.
    pub fp: usize,
}

impl RuleLabel {
    /// FP as soon as one matched change left the defect in place.
    pub fn verdict(&self) -> RuleVerdict {
        match (self.tp, self.fp) {
            (0, 0) => RuleVerdict::Unmatched,
            (_, 0) => RuleVerdict::Tp,
            _ => RuleVerdict::Fp,
        }
    }
}

/// Counts the historical changes a rule describes: `before` in `ω ∧ α`, `after` in `ω ∧ β`.
pub fn label_action_rule(rule: &ActionRule, changes: &[ObservedChange]) -> RuleLabel {
    let mut label = RuleLabel::default();
    for c in changes {
        if rule.matches_from(&c.before) && rule.matches_to(&c.after) {
            if c.fixed {
                label.tp += 1;
            } else {
                label.fp += 1;
            }
        }
    }
    label
}

/// Aggregate over all rules: `(tp, fp)` summed per matched change.
pub fn aggregate_labels(labels: &[RuleLabel]) -> RuleLabel {
    labels.iter().fold(RuleLabel::default(), |acc, l| RuleLabel {
        tp: acc.tp + l.tp,
        fp: acc.fp + l.fp,
    })
}

/// Name-keyed JSON form of an [`ActionRule`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRuleRecord {
    pub id: usize,
    pub stable: BTreeMap<String, usize>,
    pub flexible: BTreeMap<String, [usize; 2]>,
    pub class: [bool; 2],
    pub support: f64,
    pub confidence: f64,
    pub uplift: Option<f64>,
    pub parents: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history: Option<RuleLabel>,
}

impl ActionRuleRecord {
    pub fn from_rule(rule: &ActionRule, features: &[String], history: Option<RuleLabel>) -> Self {
        Self {
            id: rule.id,
            stable: rule
                .stable
                .iter()
                .map(|it| (features[it.feature].clone(), it.bin))
                .collect(),
            flexible: rule
                .flexible
                .iter()
                .map(|t| (features[t.feature].clone(), [t.from, t.to]))
                .collect(),
            class: [rule.class_from, rule.class_to],
            support: rule.support,
            confidence: rule.confidence,
            uplift: rule.uplift,
            parents: rule.parents,
            history,
        }
    }

    /// Resolves feature names against `features`.
    pub fn to_rule(&self, features: &[String]) -> Result<ActionRule> {
        let index = |name: &str| {
            features
                .iter()
                .position(|f| f == name)
                .ok_or_else(|| Error::Schema(format!("rule {} mentions unknown feature `{name}`", self.id)))
        };
        let mut stable = self
            .stable
            .iter()
            .map(|(f, &bin)| Ok(Item { feature: index(f)?, bin }))
            .collect::<Result<Vec<_>>>()?;
        let mut flexible = self
            .flexible
            .iter()
            .map(|(f, &[from, to])| {
                Ok(Transition {
                    feature: index(f)?,
                    from,
                    to,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if flexible.is_empty() || flexible.iter().any(|t| t.from == t.to) {
            return Err(Error::Schema(format!("rule {} has no real transition", self.id)));
        }
        if self.class[0] == self.class[1] {
            return Err(Error::Schema(format!("rule {} does not change class", self.id)));
        }
        stable.sort();
        flexible.sort();
        Ok(ActionRule {
            id: self.id,
            stable,
            flexible,
            class_from: self.class[0],
            class_to: self.class[1],
            support: self.support,
            confidence: self.confidence,
            uplift: self.uplift,
            parents: self.parents,
        })
    }
}

/// One JSON object per line.
pub fn write_rules_jsonl<W: std::io::Write>(
    mut w: W,
    rules: &[ActionRule],
    features: &[String],
    history: Option<&[RuleLabel]>,
) -> Result<()> {
    for (i, r) in rules.iter().enumerate() {
        let rec = ActionRuleRecord::from_rule(r, features, history.map(|h| h[i]));
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")
            .map_err(|e| Error::io("<rules output>", e))?;
    }
    Ok(())
}

pub fn read_rules_jsonl(text: &str, features: &[String]) -> Result<Vec<ActionRule>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str::<ActionRuleRecord>(l)?.to_rule(features))
        .collect()
}
