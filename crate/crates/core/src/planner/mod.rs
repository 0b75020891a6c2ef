//! Improvement plans: what each metric of a defective region should become.

mod baselines;
mod random;
mod select;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::preprocess::{DiscretizationScheme, Interval};

pub use baselines::{
    alves_thresholds, fit_logistic, oliveira_penalty, oliveira_thresholds, shatnawi_thresholds, threshold_plan,
    varl, AlvesConfig, BaselineThresholds, LogisticFit, OliveiraConfig, ShatnawiConfig, ThresholdMethod,
    ThresholdPlanner,
};
pub use random::{random_plan, RandomPlanner};
pub use select::{
    candidate_plans, median, select_by_confidence, select_by_support, select_plan, select_random,
    CounterActPlanner, PastFix, RuleModel, Selection, SelectionStrategy,
};

/// What a plan asks of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Directive {
    /// Keep the metric in its current bin.
    NoChange,
    /// Bring the metric into `target`; `from` is the rule's starting bin, if any.
    #[serde(rename = "move")]
    MoveTo {
        #[serde(flatten)]
        target: Interval,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        from: Option<Interval>,
    },
}

impl Directive {
    pub fn move_to(target: Interval) -> Self {
        Directive::MoveTo { target, from: None }
    }
}

/// Who produced a plan and from what.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanOrigin {
    pub planner: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

impl PlanOrigin {
    pub fn planner(name: &str) -> Self {
        Self {
            planner: name.to_string(),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub directives: BTreeMap<String, Directive>,
    pub origin: PlanOrigin,
}

impl Plan {
    /// Every feature left unchanged.
    pub fn no_change(features: &[String], origin: PlanOrigin) -> Self {
        Self {
            directives: features.iter().map(|f| (f.clone(), Directive::NoChange)).collect(),
            origin,
        }
    }

    pub fn moves(&self) -> impl Iterator<Item = (&String, &Interval)> {
        self.directives.iter().filter_map(|(f, d)| match d {
            Directive::MoveTo { target, .. } => Some((f, target)),
            Directive::NoChange => None,
        })
    }

    pub fn changes_anything(&self) -> bool {
        self.moves().next().is_some()
    }

    /// Directives in `features` order; a missing feature counts as unchanged.
    pub(crate) fn aligned(&self, features: &[String]) -> Vec<Directive> {
        features
            .iter()
            .map(|f| self.directives.get(f).copied().unwrap_or(Directive::NoChange))
            .collect()
    }

    /// One line per changed metric, e.g. `cbo: (14, inf] -> (-inf, 14]`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (f, d) in &self.directives {
            if let Directive::MoveTo { target, from } = d {
                match from {
                    Some(from) => writeln!(out, "{f}: {from} -> {target}"),
                    None => writeln!(out, "{f}: -> {target}"),
                }
                .expect("string write");
            }
        }
        if out.is_empty() {
            out.push_str("(no change)\n");
        } else {
            out.push_str("all other metrics unchanged\n");
        }
        out
    }
}

/// Whether `after` is what `directive` asked for, given the value `before` and the feature's cut points.
pub(crate) fn directive_matches(directive: &Directive, cuts: &[f64], before: f64, after: f64) -> bool {
    match directive {
        Directive::MoveTo { target, .. } => target.contains(after),
        Directive::NoChange => crate::preprocess::bin_of(cuts, before) == crate::preprocess::bin_of(cuts, after),
    }
}

/// Fraction of all scheme features whose `after` value agrees with the plan.
///
/// `before` and `after` are raw values aligned with `scheme.features()`. A
/// move matches when the new value lies in its target interval; a no-change
/// directive matches when the value stays in the same bin.
pub fn overlap(plan: &Plan, before: &[f64], after: &[f64], scheme: &DiscretizationScheme) -> f64 {
    let all: Vec<usize> = (0..scheme.features().len()).collect();
    overlap_on(plan, before, after, scheme, &all)
}

/// [`overlap`] restricted to the features at `indices` (numerator and denominator).
pub fn overlap_on(
    plan: &Plan,
    before: &[f64],
    after: &[f64],
    scheme: &DiscretizationScheme,
    indices: &[usize],
) -> f64 {
    if indices.is_empty() {
        return 0.0;
    }
    let features = scheme.features();
    let hits = indices
        .iter()
        .filter(|&&j| {
            let d = plan.directives.get(&features[j]).copied().unwrap_or(Directive::NoChange);
            directive_matches(&d, scheme.cuts(j), before[j], after[j])
        })
        .count();
    hits as f64 / indices.len() as f64
}

/// Anything that turns a defective region's metrics into a plan.
///
/// `instance` is aligned with [`Planner::features`]; `seed` drives any
/// randomness so that a given (instance, seed) always yields the same plan.
pub trait Planner {
    fn name(&self) -> &str;
    fn features(&self) -> &[String];
    fn plan(&self, instance: &[f64], seed: u64) -> Plan;
}
