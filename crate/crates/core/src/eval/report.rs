use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{classify_outcomes, improvement_score, ImprovementEntry, ImprovementOptions, PlanOutcomeCounts};
use super::stats::{iqr, wilcoxon_signed_rank};
use crate::planner::{median, overlap, Plan};
use crate::preprocess::DiscretizationScheme;
use crate::{Error, Result};

/// JSON schema every serialised [`EvaluationReport`] conforms to.
pub const REPORT_SCHEMA: &str = include_str!("../../schema/evaluation_report.schema.json");

/// One planned region: raw metrics at planning time and afterwards, plus defect counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedInstance {
    pub id: String,
    pub before: Vec<f64>,
    pub after: Vec<f64>,
    /// Defects when the plan was made.
    pub q_prev: f64,
    /// Defects afterwards.
    pub q_next: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerEvaluation {
    pub planner: String,
    /// Per instance, in report instance order.
    pub overlaps: Vec<f64>,
    pub median_overlap: Option<f64>,
    pub iqr: Option<f64>,
    pub s_scaled: Option<f64>,
    pub outcomes: PlanOutcomeCounts,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    /// Two-sided Wilcoxon p of this planner's overlaps against the reference planner's.
    pub p_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value_note: Option<String>,
}

/// Scores one planner's plans (aligned with `instances`).
pub fn evaluate_planner(
    planner: &str,
    plans: &[Plan],
    instances: &[EvaluatedInstance],
    scheme: &DiscretizationScheme,
    options: ImprovementOptions,
) -> Result<PlannerEvaluation> {
    if plans.len() != instances.len() {
        return Err(Error::InvalidInput(format!(
            "{planner}: {} plans for {} instances",
            plans.len(),
            instances.len()
        )));
    }
    let mut overlaps = Vec::with_capacity(plans.len());
    let mut entries = Vec::with_capacity(plans.len());
    let mut outcomes = PlanOutcomeCounts::default();
    for (p, inst) in plans.iter().zip(instances) {
        let o = overlap(p, &inst.before, &inst.after, scheme);
        overlaps.push(o);
        entries.push(ImprovementEntry {
            q_prev: inst.q_prev,
            q_next: inst.q_next,
            overlap: o,
        });
        outcomes.add(&classify_outcomes(p, &inst.before, &inst.after, scheme));
    }
    Ok(PlannerEvaluation {
        planner: planner.to_string(),
        median_overlap: median(&overlaps),
        iqr: iqr(&overlaps),
        s_scaled: improvement_score(&entries, options),
        precision: outcomes.precision(),
        recall: outcomes.recall(),
        f1: outcomes.f1(),
        outcomes,
        overlaps,
        p_value: None,
        p_value_note: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub project: String,
    /// `release` or `commit`.
    pub level: String,
    pub reference: String,
    pub instances: Vec<String>,
    /// Planned instances dropped because they could not be evaluated.
    pub n_excluded: usize,
    pub planners: Vec<PlannerEvaluation>,
}

impl EvaluationReport {
    /// Assembles a report and tests every planner against `reference`.
    pub fn new(
        project: &str,
        level: &str,
        reference: &str,
        instances: Vec<String>,
        n_excluded: usize,
        mut planners: Vec<PlannerEvaluation>,
    ) -> Result<Self> {
        let ref_overlaps = planners
            .iter()
            .find(|p| p.planner == reference)
            .map(|p| p.overlaps.clone())
            .ok_or_else(|| Error::InvalidInput(format!("reference planner `{reference}` not evaluated")))?;
        for p in &mut planners {
            if p.overlaps.len() != instances.len() {
                return Err(Error::Invariant(format!("{} has misaligned overlaps", p.planner)));
            }
            if p.planner == reference {
                continue;
            }
            match wilcoxon_signed_rank(&ref_overlaps, &p.overlaps) {
                Ok(w) => {
                    p.p_value = Some(w.p_value);
                    if w.degenerate {
                        p.p_value_note = Some("identical overlaps".into());
                    }
                }
                Err(e) => p.p_value_note = Some(e.to_string()),
            }
        }
        Ok(Self {
            project: project.to_string(),
            level: level.to_string(),
            reference: reference.to_string(),
            instances,
            n_excluded,
            planners,
        })
    }

    pub fn planner(&self, name: &str) -> Option<&PlannerEvaluation> {
        self.planners.iter().find(|p| p.planner == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// One row per planner with every summary measure (ratios in percent).
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "### {} ({} level, {} instances, {} excluded)\n",
            self.project,
            self.level,
            self.instances.len(),
            self.n_excluded
        )
        .unwrap();
        out.push_str("| Planner | Median overlap | IQR | S_scaled | Precision | Recall | F1 | p-value |\n");
        out.push_str("|---|---|---|---|---|---|---|---|\n");
        for p in &self.planners {
            let pv = if p.planner == self.reference {
                "ref".to_string()
            } else {
                p.p_value.map_or("n/a".into(), fmt_p)
            };
            writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} | {} |",
                p.planner,
                pct(p.median_overlap),
                pct(p.iqr),
                pct(p.s_scaled),
                pct(p.precision),
                pct(p.recall),
                pct(p.f1),
                pv
            )
            .unwrap();
        }
        out
    }
}

fn pct(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |x| format!("{:.2}", 100.0 * x))
}

fn fmt_p(p: f64) -> String {
    if p < 1e-3 {
        format!("{p:.2e}")
    } else {
        format!("{p:.4}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportMetric {
    MedianOverlap,
    Iqr,
    SScaled,
    Precision,
    Recall,
    F1,
}

impl ReportMetric {
    fn get(self, p: &PlannerEvaluation) -> Option<f64> {
        match self {
            ReportMetric::MedianOverlap => p.median_overlap,
            ReportMetric::Iqr => p.iqr,
            ReportMetric::SScaled => p.s_scaled,
            ReportMetric::Precision => p.precision,
            ReportMetric::Recall => p.recall,
            ReportMetric::F1 => p.f1,
        }
    }
}

/// Cross-project table: one row per project, one column per planner, then
/// AVG, STD and the Wilcoxon p of each planner against the reference across projects.
pub fn markdown_table(reports: &[EvaluationReport], metric: ReportMetric) -> String {
    let Some(first) = reports.first() else {
        return String::new();
    };
    let names: Vec<&str> = first.planners.iter().map(|p| p.planner.as_str()).collect();
    let mut out = String::new();
    writeln!(out, "| Project | {} |", names.join(" | ")).unwrap();
    writeln!(out, "|---|{}", "---|".repeat(names.len())).unwrap();
    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); names.len()];
    for r in reports {
        let cells: Vec<String> = names
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let v = r.planner(n).and_then(|p| metric.get(p));
                columns[i].push(v);
                pct(v)
            })
            .collect();
        writeln!(out, "| {} | {} |", r.project, cells.join(" | ")).unwrap();
    }
    let present = |c: &[Option<f64>]| c.iter().flatten().copied().collect::<Vec<f64>>();
    let avg: Vec<String> = columns
        .iter()
        .map(|c| {
            let v = present(c);
            pct((!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64))
        })
        .collect();
    let std: Vec<String> = columns
        .iter()
        .map(|c| {
            let v = present(c);
            pct((v.len() >= 2).then(|| {
                let m = v.iter().sum::<f64>() / v.len() as f64;
                (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
            }))
        })
        .collect();
    writeln!(out, "| AVG | {} |", avg.join(" | ")).unwrap();
    writeln!(out, "| STD | {} |", std.join(" | ")).unwrap();
    let ref_idx = names.iter().position(|n| *n == first.reference);
    let pvals: Vec<String> = columns
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let Some(r) = ref_idx else { return "n/a".into() };
            if i == r {
                return "ref".into();
            }
            let (x, y): (Vec<f64>, Vec<f64>) = columns[r]
                .iter()
                .zip(c)
                .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
                .unzip();
            wilcoxon_signed_rank(&x, &y).map_or("n/a".into(), |w| fmt_p(w.p_value))
        })
        .collect();
    writeln!(out, "| p-value | {} |", pvals.join(" | ")).unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{Directive, PlanOrigin};
    use crate::preprocess::Interval;

    fn setup() -> (DiscretizationScheme, Vec<EvaluatedInstance>) {
        let f = vec!["a".to_string(), "b".to_string()];
        let scheme = DiscretizationScheme::new(f, vec![vec![5.0], vec![5.0]]).unwrap();
        let inst = (0..6)
            .map(|i| EvaluatedInstance {
                id: format!("r{i}"),
                before: vec![9.0, 9.0],
                after: vec![if i % 2 == 0 { 1.0 } else { 9.0 }, 9.0],
                q_prev: 2.0,
                q_next: if i % 2 == 0 { 0.0 } else { 2.0 },
            })
            .collect();
        (scheme, inst)
    }

    #[test]
    fn report_round_trip_and_tables() {
        let (scheme, inst) = setup();
        let mut good = Plan::no_change(scheme.features(), PlanOrigin::planner("good"));
        good.directives.insert("a".into(), Directive::move_to(Interval::at_most(5.0)));
        let idle = Plan::no_change(scheme.features(), PlanOrigin::planner("idle"));
        let g = evaluate_planner("good", &vec![good; 6], &inst, &scheme, Default::default()).unwrap();
        let i = evaluate_planner("idle", &vec![idle; 6], &inst, &scheme, Default::default()).unwrap();
        assert_eq!(g.overlaps, vec![1.0, 0.5, 1.0, 0.5, 1.0, 0.5]);
        assert_eq!(g.s_scaled, Some(1.0));
        assert_eq!(i.s_scaled, Some(0.5));
        let ids = inst.iter().map(|x| x.id.clone()).collect();
        let r = EvaluationReport::new("demo", "release", "good", ids, 1, vec![g, i]).unwrap();
        let p = r.planner("idle").unwrap().p_value.unwrap();
        assert!(p > 0.05);
        let back: EvaluationReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        let md = r.to_markdown();
        assert!(md.contains("| good | 75.00 | 50.00 | 100.00 |"));
        let table = markdown_table(&[r.clone(), r], ReportMetric::MedianOverlap);
        assert!(table.starts_with("| Project | good | idle |"));
        assert!(table.contains("| AVG | 75.00 | 75.00 |"));
    }

    #[test]
    fn missing_reference_is_an_error() {
        assert!(EvaluationReport::new("p", "release", "none", vec![], 0, vec![]).is_err());
    }
}
