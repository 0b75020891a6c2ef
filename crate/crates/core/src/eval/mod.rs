//! Plan scoring and the statistical tests used to compare planners.

mod metrics;
mod report;
mod stats;

pub use metrics::{
    classify_all, classify_outcomes, f1, improvement_score, ImprovementEntry, ImprovementOptions,
    PlanOutcomeCounts, WeightOrientation,
};
pub use report::{
    evaluate_planner, markdown_table, EvaluatedInstance, EvaluationReport, PlannerEvaluation, ReportMetric,
    REPORT_SCHEMA,
};
pub use stats::{
    iqr, mcnemar_exact, quantile, wilcoxon_signed_rank, McNemarResult, WilcoxonMethod, WilcoxonResult,
};
