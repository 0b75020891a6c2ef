use serde::{Deserialize, Serialize};

use super::config::{PlannerKind, RunConfig};
use super::prepare::Prepared;
use super::stages::{evaluate, mine, plan_all};
use crate::eval::{wilcoxon_signed_rank, WilcoxonResult};
use crate::planner::median;
use crate::synth::{planted_releases, PlantedConfig};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub seed: u64,
    pub instances: usize,
    pub counteract_median: f64,
    pub random_median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub runs: Vec<SweepRun>,
    /// Median over all runs' per-instance overlaps.
    pub counteract_median: f64,
    pub random_median: f64,
    /// Paired test of per-run medians, CounterACT against random.
    pub wilcoxon: WilcoxonResult,
}

/// Runs the release pipeline on one planted corpus per seed, in memory.
///
/// Each seed drives both the corpus generator and the run's master seed.
pub fn planted_sweep(base: PlantedConfig, seeds: &[u64], config: &RunConfig) -> Result<SweepSummary> {
    let config = RunConfig {
        planners: vec![PlannerKind::Counteract, PlannerKind::Random],
        reference: PlannerKind::Counteract,
        ..config.clone()
    };
    let mut runs = Vec::with_capacity(seeds.len());
    let mut all_ca = Vec::new();
    let mut all_rnd = Vec::new();
    for &seed in seeds {
        let cfg = RunConfig { seed, ..config.clone() };
        let [a, b, c] = planted_releases(&PlantedConfig { seed, ..base });
        let prepared = Prepared::from_releases(&a, &b, &c, &cfg)?;
        let model = mine(&prepared, &cfg)?;
        let plans = plan_all(&prepared, &model.scheme, &model.rules, &cfg)?;
        let report = evaluate(&prepared, &model.scheme, &plans, &cfg)?;
        let ca = &report.planner("counteract").expect("configured").overlaps;
        let rnd = &report.planner("random").expect("configured").overlaps;
        all_ca.extend_from_slice(ca);
        all_rnd.extend_from_slice(rnd);
        runs.push(SweepRun {
            seed,
            instances: ca.len(),
            counteract_median: median(ca).unwrap_or(f64::NAN),
            random_median: median(rnd).unwrap_or(f64::NAN),
        });
    }
    let x: Vec<f64> = runs.iter().map(|r| r.counteract_median).collect();
    let y: Vec<f64> = runs.iter().map(|r| r.random_median).collect();
    Ok(SweepSummary {
        counteract_median: median(&all_ca).unwrap_or(f64::NAN),
        random_median: median(&all_rnd).unwrap_or(f64::NAN),
        wilcoxon: wilcoxon_signed_rank(&x, &y)?,
        runs,
    })
}
