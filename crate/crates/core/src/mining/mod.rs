//! Class-association rule mining and action-rule construction.

mod action;
mod apriori;

pub use action::{
    aggregate_labels, compute_uplift, label_action_rule, pair_action_rules, read_rules_jsonl,
    score_uplift, write_rules_jsonl, ActionRule, ActionRuleRecord, ObservedChange, RuleLabel,
    RuleVerdict, Transition,
};
pub use apriori::{canonical_cmp, mine_rules, ClassificationRule, Item, MiningConfig};
