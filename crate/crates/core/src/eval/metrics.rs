use serde::{Deserialize, Serialize};

use crate::planner::{directive_matches, Directive, Plan};
use crate::preprocess::DiscretizationScheme;
use crate::{Error, Result};

/// One region's defect counts around the planned release and its plan overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImprovementEntry {
    pub q_prev: f64,
    pub q_next: f64,
    pub overlap: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightOrientation {
    /// Weight = `q_prev - q_next`, the number of defects removed.
    #[default]
    Reduction,
    /// Weight = `q_next - q_prev`.
    Literal,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImprovementOptions {
    pub orientation: WeightOrientation,
    /// Ignore entries whose weight is not positive.
    pub positive_only: bool,
}

/// Defect-change-weighted mean overlap: `Σ w_i O_i / Σ w_i`.
///
/// `None` when the weights sum to zero. Computed as `Σ (w_i / Σ w) O_i`.
pub fn improvement_score(entries: &[ImprovementEntry], options: ImprovementOptions) -> Option<f64> {
    let weighted: Vec<(f64, f64)> = entries
        .iter()
        .map(|e| {
            let w = match options.orientation {
                WeightOrientation::Reduction => e.q_prev - e.q_next,
                WeightOrientation::Literal => e.q_next - e.q_prev,
            };
            (w, e.overlap)
        })
        .filter(|(w, _)| !options.positive_only || *w > 0.0)
        .collect();
    let total: f64 = weighted.iter().map(|(w, _)| w).sum();
    if total == 0.0 {
        return None;
    }
    Some(weighted.iter().map(|(w, o)| (w / total) * o).sum())
}

/// Per-(instance, feature) agreement between plans and observed changes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanOutcomeCounts {
    /// Change recommended and the value landed in the target.
    pub tp: usize,
    /// No change recommended and the bin stayed.
    pub tn: usize,
    /// Change recommended but not made.
    pub fp: usize,
    /// No change recommended but the bin moved.
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl PlanOutcomeCounts {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn add(&mut self, other: &PlanOutcomeCounts) {
        self.tp += other.tp;
        self.tn += other.tn;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> Option<f64> {
        f1(self.precision()?, self.recall()?)
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Harmonic mean; 0 when both inputs are 0.
pub fn f1(precision: f64, recall: f64) -> Option<f64> {
    if precision + recall == 0.0 {
        Some(0.0)
    } else {
        Some(2.0 * precision * recall / (precision + recall))
    }
}

/// Classifies every feature of one planned region.
///
/// `before` and `after` are raw values aligned with `scheme.features()`.
pub fn classify_outcomes(
    plan: &Plan,
    before: &[f64],
    after: &[f64],
    scheme: &DiscretizationScheme,
) -> PlanOutcomeCounts {
    let mut c = PlanOutcomeCounts::default();
    for (j, f) in scheme.features().iter().enumerate() {
        let d = plan.directives.get(f).copied().unwrap_or(Directive::NoChange);
        let hit = directive_matches(&d, scheme.cuts(j), before[j], after[j]);
        match (d, hit) {
            (Directive::MoveTo { .. }, true) => c.tp += 1,
            (Directive::MoveTo { .. }, false) => c.fp += 1,
            (Directive::NoChange, true) => c.tn += 1,
            (Directive::NoChange, false) => c.fn_ += 1,
        }
    }
    c
}

/// Counts summed over aligned `(plan, before, after)` triples.
pub fn classify_all(
    plans: &[Plan],
    before: &[Vec<f64>],
    after: &[Vec<f64>],
    scheme: &DiscretizationScheme,
) -> Result<PlanOutcomeCounts> {
    if plans.len() != before.len() || before.len() != after.len() {
        return Err(Error::InvalidInput("plans, before and after must align".into()));
    }
    let mut total = PlanOutcomeCounts::default();
    for ((p, b), a) in plans.iter().zip(before).zip(after) {
        total.add(&classify_outcomes(p, b, a, scheme));
    }
    Ok(total)
}
