use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Directive, Plan, PlanOrigin, Planner};
use crate::mining::ActionRule;
use crate::preprocess::DiscretizationScheme;
use crate::{Error, Result};

/// Action rules with the scheme they were mined under; features in data column order.
#[derive(Debug, Clone)]
pub struct RuleModel {
    pub features: Vec<String>,
    pub scheme: DiscretizationScheme,
    pub rules: Vec<ActionRule>,
}

impl RuleModel {
    pub fn new(features: Vec<String>, scheme: &DiscretizationScheme, rules: Vec<ActionRule>) -> Result<Self> {
        let scheme = scheme.aligned_to(&features)?;
        Ok(Self { features, scheme, rules })
    }
}

/// One plan per rule whose `ω ∧ α` holds on `instance`, in rule-id order.
///
/// Flexible transitions become moves into the rule's target bin; all other
/// features are left unchanged.
pub fn candidate_plans(model: &RuleModel, instance: &[f64]) -> Vec<Plan> {
    let bins = model.scheme.bin_row(instance);
    let mut out = Vec::new();
    for rule in &model.rules {
        if !rule.matches_from(&bins) {
            continue;
        }
        let mut plan = Plan::no_change(
            &model.features,
            PlanOrigin {
                planner: "counteract".into(),
                rule_id: Some(rule.id),
                support: Some(rule.support),
                confidence: Some(rule.confidence),
            },
        );
        for t in &rule.flexible {
            plan.directives.insert(
                model.features[t.feature].clone(),
                Directive::MoveTo {
                    target: model.scheme.interval(t.feature, t.to),
                    from: Some(model.scheme.interval(t.feature, t.from)),
                },
            );
        }
        out.push(plan);
    }
    out
}

/// A historical defect-free change `before -> after`, aligned with the model features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PastFix {
    pub before: Vec<f64>,
    pub after: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionStrategy {
    /// Highest median overlap with past fixes.
    #[default]
    Overlap,
    Random,
    Support,
    Confidence,
}

/// The chosen candidate and, for overlap selection, every candidate's median overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub scores: Vec<f64>,
    pub strategy: SelectionStrategy,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

/// Seeded uniform pick among the indices whose key equals the maximum.
fn pick_max(keys: &[f64], seed: u64) -> usize {
    let best = keys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..keys.len()).filter(|&i| keys[i] == best).collect();
    ties[ChaCha8Rng::seed_from_u64(seed).gen_range(0..ties.len())]
}

fn require_candidates(candidates: &[Plan]) -> Result<()> {
    if candidates.is_empty() {
        Err(Error::InvalidInput("no candidate plans to select from".into()))
    } else {
        Ok(())
    }
}

pub fn select_random(candidates: &[Plan], seed: u64) -> Result<usize> {
    require_candidates(candidates)?;
    Ok(ChaCha8Rng::seed_from_u64(seed).gen_range(0..candidates.len()))
}

pub fn select_by_support(candidates: &[Plan], seed: u64) -> Result<usize> {
    require_candidates(candidates)?;
    let keys: Vec<f64> = candidates.iter().map(|p| p.origin.support.unwrap_or(0.0)).collect();
    Ok(pick_max(&keys, seed))
}

pub fn select_by_confidence(candidates: &[Plan], seed: u64) -> Result<usize> {
    require_candidates(candidates)?;
    let keys: Vec<f64> = candidates.iter().map(|p| p.origin.confidence.unwrap_or(0.0)).collect();
    Ok(pick_max(&keys, seed))
}

/// Past fixes with bins precomputed, for repeated overlap scoring.
struct BinnedFixes<'a> {
    fixes: &'a [PastFix],
    before_bins: Vec<Vec<usize>>,
    after_bins: Vec<Vec<usize>>,
}

impl<'a> BinnedFixes<'a> {
    fn new(fixes: &'a [PastFix], scheme: &DiscretizationScheme) -> Self {
        Self {
            fixes,
            before_bins: fixes.iter().map(|f| scheme.bin_row(&f.before)).collect(),
            after_bins: fixes.iter().map(|f| scheme.bin_row(&f.after)).collect(),
        }
    }

    fn median_overlap(&self, plan: &[Directive]) -> f64 {
        let m = plan.len() as f64;
        let scores: Vec<f64> = (0..self.fixes.len())
            .map(|i| {
                let hits = plan
                    .iter()
                    .enumerate()
                    .filter(|(j, d)| match d {
                        Directive::NoChange => self.before_bins[i][*j] == self.after_bins[i][*j],
                        Directive::MoveTo { target, .. } => target.contains(self.fixes[i].after[*j]),
                    })
                    .count();
                hits as f64 / m
            })
            .collect();
        median(&scores).expect("fixes are non-empty")
    }
}

/// Chooses the candidate whose overlap with past fixes has the highest
/// median, breaking ties uniformly at random under `seed`. Without past
/// fixes the highest-support candidate is chosen instead.
pub fn select_plan(
    candidates: &[Plan],
    past_fixes: &[PastFix],
    scheme: &DiscretizationScheme,
    seed: u64,
) -> Result<Selection> {
    require_candidates(candidates)?;
    if past_fixes.is_empty() {
        log::warn!("no past fixes available; selecting the highest-support plan");
        return Ok(Selection {
            index: select_by_support(candidates, seed)?,
            scores: Vec::new(),
            strategy: SelectionStrategy::Support,
        });
    }
    let binned = BinnedFixes::new(past_fixes, scheme);
    Ok(select_binned(candidates, &binned, scheme, seed))
}

fn select_binned(candidates: &[Plan], fixes: &BinnedFixes, scheme: &DiscretizationScheme, seed: u64) -> Selection {
    let scores: Vec<f64> = candidates
        .iter()
        .map(|p| fixes.median_overlap(&p.aligned(scheme.features())))
        .collect();
    let index = pick_max(&scores, seed);
    debug_assert!(scores.iter().all(|s| *s <= scores[index]));
    Selection {
        index,
        scores,
        strategy: SelectionStrategy::Overlap,
    }
}

/// Rule-based planner: candidate plans from matching action rules, then a selection strategy.
pub struct CounterActPlanner<'a> {
    model: &'a RuleModel,
    fixes: BinnedFixes<'a>,
    strategy: SelectionStrategy,
}

impl<'a> CounterActPlanner<'a> {
    pub fn new(model: &'a RuleModel, past_fixes: &'a [PastFix], strategy: SelectionStrategy) -> Self {
        Self {
            model,
            fixes: BinnedFixes::new(past_fixes, &model.scheme),
            strategy,
        }
    }

    /// Candidates and the selected index; `None` when no rule matches.
    pub fn plan_with_candidates(&self, instance: &[f64], seed: u64) -> (Vec<Plan>, Option<Selection>) {
        let candidates = candidate_plans(self.model, instance);
        if candidates.is_empty() {
            return (candidates, None);
        }
        let pick = |index| Selection {
            index,
            scores: Vec::new(),
            strategy: self.strategy,
        };
        let sel = match self.strategy {
            SelectionStrategy::Overlap if !self.fixes.fixes.is_empty() => {
                select_binned(&candidates, &self.fixes, &self.model.scheme, seed)
            }
            SelectionStrategy::Overlap => {
                log::warn!("no past fixes available; selecting the highest-support plan");
                Selection {
                    strategy: SelectionStrategy::Support,
                    ..pick(select_by_support(&candidates, seed).expect("non-empty"))
                }
            }
            SelectionStrategy::Random => pick(select_random(&candidates, seed).expect("non-empty")),
            SelectionStrategy::Support => pick(select_by_support(&candidates, seed).expect("non-empty")),
            SelectionStrategy::Confidence => pick(select_by_confidence(&candidates, seed).expect("non-empty")),
        };
        (candidates, Some(sel))
    }
}

impl Planner for CounterActPlanner<'_> {
    fn name(&self) -> &str {
        "counteract"
    }

    fn features(&self) -> &[String] {
        &self.model.features
    }

    fn plan(&self, instance: &[f64], seed: u64) -> Plan {
        let (mut candidates, sel) = self.plan_with_candidates(instance, seed);
        match sel {
            Some(s) => candidates.swap_remove(s.index),
            None => {
                log::warn!("no action rule matches the instance; planning no change");
                Plan::no_change(&self.model.features, PlanOrigin::planner("counteract"))
            }
        }
    }
}
