use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::config::{stage_seed, PlannerKind, RunConfig};
use super::prepare::Prepared;
use crate::dataset::feature_position;
use crate::error::StageExt;
use crate::eval::{evaluate_planner, EvaluatedInstance, EvaluationReport};
use crate::mining::{
    label_action_rule, mine_rules, pair_action_rules, score_uplift, ActionRule, MiningConfig, ObservedChange,
    RuleLabel,
};
use crate::planner::{
    alves_thresholds, oliveira_thresholds, random_plan, shatnawi_thresholds, threshold_plan,
    BaselineThresholds, CounterActPlanner, Plan, PlanOrigin, RuleModel,
};
use crate::preprocess::{discretize, fit_scheme, smote, DiscretizationScheme, SmoteConfig};
use crate::{Error, Result};

/// Output of the mining stage.
#[derive(Debug, Clone, PartialEq)]
pub struct MinedModel {
    pub scheme: DiscretizationScheme,
    pub flexible: Vec<String>,
    pub n_classification_rules: usize,
    /// `bug -> no bug` action rules, uplift scored.
    pub rules: Vec<ActionRule>,
    /// Historical TP/FP per rule, aligned with `rules`.
    pub labels: Vec<RuleLabel>,
    pub n_synthetic: usize,
}

/// Discretize, rebalance, mine, pair and score rules on the training data.
///
/// Cut points are fitted on the raw training rows; SMOTE synthetics are then
/// binned with the same scheme.
pub fn mine(prepared: &Prepared, config: &RunConfig) -> Result<MinedModel> {
    let features = &prepared.features;
    let scheme = fit_scheme(features, &prepared.train_rows, &prepared.train_labels, config.mdlp_mode)
        .stage("discretize")?;
    let rebalanced = smote(
        &prepared.train_rows,
        &prepared.train_labels,
        SmoteConfig {
            k: config.smote_k,
            seed: stage_seed(config.seed, "smote"),
            duplicate_singleton: config.smote_duplicate_singleton,
        },
    )
    .stage("smote")?;
    let data = discretize(&scheme, features, &rebalanced.rows, &rebalanced.labels).stage("discretize")?;
    let rules = mine_rules(
        &data,
        &MiningConfig {
            min_support: config.min_supp,
            min_confidence: config.min_conf,
            max_len: config.max_len,
        },
    )
    .stage("mine")?;
    let flexible_idx: BTreeSet<usize> = prepared
        .actionable
        .selected
        .iter()
        .map(|f| feature_position(features, f))
        .collect::<Result<_>>()
        .stage("pair")?;
    let mut action = pair_action_rules(&rules, &flexible_idx, true, false).stage("pair")?;
    score_uplift(&mut action, &data);

    let changes: Vec<ObservedChange> = prepared
        .history
        .iter()
        .map(|c| ObservedChange {
            before: scheme.bin_row(&c.before),
            after: scheme.bin_row(&c.after),
            fixed: c.fixed,
        })
        .collect();
    let labels = action.iter().map(|r| label_action_rule(r, &changes)).collect();
    Ok(MinedModel {
        flexible: flexible_idx.iter().map(|&j| features[j].clone()).collect(),
        scheme,
        n_classification_rules: rules.len(),
        rules: action,
        labels,
        n_synthetic: rebalanced.n_synthetic,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstancePlan {
    pub id: String,
    pub plan: Plan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerPlans {
    pub planner: String,
    pub plans: Vec<InstancePlan>,
}

/// An instance a planner could not plan for; it received a no-change plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub planner: String,
    pub id: String,
    pub reason: String,
}

/// Every configured planner's plan for every defective instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSet {
    pub project: String,
    pub level: String,
    /// Fingerprint of the scheme the plans' intervals come from.
    pub scheme_fingerprint: String,
    pub planners: Vec<PlannerPlans>,
    pub skipped: Vec<Skipped>,
    /// Fitted thresholds of the threshold planners.
    pub thresholds: Vec<BaselineThresholds>,
}

impl PlanSet {
    pub fn planner(&self, name: &str) -> Option<&PlannerPlans> {
        self.planners.iter().find(|p| p.planner == name)
    }
}

/// Plans every defective instance with every configured planner.
///
/// Each (planner, instance) pair draws its own seed from the master seed, so
/// adding or removing instances does not disturb the others' plans.
pub fn plan_all(
    prepared: &Prepared,
    scheme: &DiscretizationScheme,
    rules: &[ActionRule],
    config: &RunConfig,
) -> Result<PlanSet> {
    let features = &prepared.features;
    let scheme = scheme.aligned_to(features).stage("plan")?;
    let flexible: Vec<usize> = prepared
        .actionable
        .selected
        .iter()
        .filter_map(|f| scheme.index_of(f))
        .collect();
    let model = RuleModel::new(features.clone(), &scheme, rules.to_vec()).stage("plan")?;
    let counteract = CounterActPlanner::new(&model, &prepared.past_fixes, config.selection);

    let mut planners = Vec::new();
    let mut skipped = Vec::new();
    let mut thresholds = Vec::new();
    for &kind in &config.planners {
        let name = kind.name();
        let fitted = match kind {
            PlannerKind::Alves => Some(alves_thresholds(features, &prepared.train_rows, &config.alves)),
            PlannerKind::Shatnawi => Some(shatnawi_thresholds(
                features,
                &prepared.train_rows,
                &prepared.train_labels,
                &config.shatnawi,
            )),
            PlannerKind::Oliveira => {
                Some(oliveira_thresholds(features, &prepared.train_rows, &config.oliveira))
            }
            _ => None,
        }
        .transpose()
        .stage("thresholds")?;

        let mut plans = Vec::with_capacity(prepared.instances.len());
        for inst in &prepared.instances {
            let seed = stage_seed(config.seed, &format!("{name}/{}", inst.id));
            let mut skip = |reason: &str| {
                skipped.push(Skipped {
                    planner: name.to_string(),
                    id: inst.id.clone(),
                    reason: reason.to_string(),
                })
            };
            let plan = match kind {
                PlannerKind::Counteract => {
                    let (candidates, selection) = counteract.plan_with_candidates(&inst.values, seed);
                    match selection {
                        Some(s) => candidates[s.index].clone(),
                        None => {
                            skip("no action rule matches");
                            Plan::no_change(features, PlanOrigin::planner(name))
                        }
                    }
                }
                PlannerKind::Random => {
                    if flexible.is_empty() {
                        return Err(Error::InvalidInput("no actionable features".into()).in_stage("plan"));
                    }
                    let plan = random_plan(&inst.values, &scheme, &flexible, seed).stage("plan")?;
                    if !plan.changes_anything() {
                        skip("no flexible feature has more than one bin");
                    }
                    plan
                }
                _ => {
                    let t = fitted.as_ref().expect("threshold planners are fitted");
                    threshold_plan(features, &inst.values, t)
                }
            };
            plans.push(InstancePlan {
                id: inst.id.clone(),
                plan,
            });
        }
        thresholds.extend(fitted);
        planners.push(PlannerPlans {
            planner: name.to_string(),
            plans,
        });
    }
    Ok(PlanSet {
        project: prepared.project.clone(),
        level: prepared.level.name().to_string(),
        scheme_fingerprint: scheme.fingerprint(),
        planners,
        skipped,
        thresholds,
    })
}

/// Scores every planner on the instances that have an observed outcome.
///
/// Instances without one are excluded and counted in the report.
pub fn evaluate(
    prepared: &Prepared,
    scheme: &DiscretizationScheme,
    plans: &PlanSet,
    config: &RunConfig,
) -> Result<EvaluationReport> {
    let scheme = scheme.aligned_to(&prepared.features).stage("evaluate")?;
    if plans.scheme_fingerprint != scheme.fingerprint() {
        return Err(Error::SchemeMismatch {
            expected: plans.scheme_fingerprint.clone(),
            found: scheme.fingerprint(),
        }
        .in_stage("evaluate"));
    }
    let instances: Vec<EvaluatedInstance> = prepared
        .instances
        .iter()
        .filter_map(|inst| {
            let o = prepared.outcomes.get(&inst.id)?;
            Some(EvaluatedInstance {
                id: inst.id.clone(),
                before: inst.values.clone(),
                after: o.after.clone(),
                q_prev: inst.defects,
                q_next: o.defects,
            })
        })
        .collect();
    let n_excluded = prepared.instances.len() - instances.len();
    let mut evaluations = Vec::with_capacity(plans.planners.len());
    for pp in &plans.planners {
        let by_id: BTreeMap<&str, &Plan> = pp.plans.iter().map(|p| (p.id.as_str(), &p.plan)).collect();
        let aligned = instances
            .iter()
            .map(|inst| {
                by_id.get(inst.id.as_str()).map(|p| (*p).clone()).ok_or_else(|| {
                    Error::Invariant(format!("{} has no plan for `{}`", pp.planner, inst.id)).in_stage("evaluate")
                })
            })
            .collect::<Result<Vec<Plan>>>()?;
        evaluations.push(
            evaluate_planner(&pp.planner, &aligned, &instances, &scheme, config.improvement_options())
                .stage("evaluate")?,
        );
    }
    EvaluationReport::new(
        &plans.project,
        &plans.level,
        config.reference.name(),
        instances.iter().map(|i| i.id.clone()).collect(),
        n_excluded,
        evaluations,
    )
    .stage("evaluate")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{planted_releases, PlantedConfig};

    fn setup() -> (Prepared, RunConfig) {
        let cfg = RunConfig::default();
        let [a, b, c] = planted_releases(&PlantedConfig::default());
        (Prepared::from_releases(&a, &b, &c, &cfg).unwrap(), cfg)
    }

    #[test]
    fn planted_rule_is_recovered_and_selected() {
        let (p, cfg) = setup();
        let m = mine(&p, &cfg).unwrap();
        assert!(m.scheme.n_bins(0) >= 2);
        assert!(m.rules.iter().any(|r| r.flexible.len() == 1 && r.flexible[0].feature == 0));
        let plans = plan_all(&p, &m.scheme, &m.rules, &cfg).unwrap();
        let ca = plans.planner("counteract").unwrap();
        for ip in &ca.plans {
            let target = ip.plan.moves().find(|(f, _)| *f == "f0").map(|(_, t)| *t);
            assert_eq!(target, Some(m.scheme.interval(0, 0)), "{}", ip.id);
        }

        let report = evaluate(&p, &m.scheme, &plans, &cfg).unwrap();
        let ca = report.planner("counteract").unwrap().median_overlap.unwrap();
        let rnd = report.planner("random").unwrap().median_overlap.unwrap();
        assert!(ca >= 0.9 && ca - rnd >= 0.3, "counteract {ca}, random {rnd}");
        assert_eq!(report.planners.len(), 5);
    }

    #[test]
    fn scheme_mismatch_is_refused() {
        let (p, cfg) = setup();
        let m = mine(&p, &cfg).unwrap();
        let plans = plan_all(&p, &m.scheme, &m.rules, &cfg).unwrap();
        let other = DiscretizationScheme::new(p.features.clone(), vec![vec![1.0]; p.features.len()]).unwrap();
        assert!(matches!(
            evaluate(&p, &other, &plans, &cfg),
            Err(Error::Stage { source, .. }) if matches!(*source, Error::SchemeMismatch { .. })
        ));
    }

    #[test]
    fn labels_align_with_rules() {
        let (p, cfg) = setup();
        let m = mine(&p, &cfg).unwrap();
        assert_eq!(m.labels.len(), m.rules.len());
        let f0_rule = m
            .rules
            .iter()
            .position(|r| r.stable.is_empty() && r.flexible.len() == 1 && r.flexible[0].feature == 0)
            .expect("single-transition f0 rule");
        assert!(m.labels[f0_rule].tp > 0);
        assert_eq!(m.labels[f0_rule].fp, 0);
    }
}
