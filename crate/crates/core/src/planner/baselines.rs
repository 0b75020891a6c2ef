//! Threshold planners: "bring every metric above its threshold down to it".

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{Directive, Plan, PlanOrigin, Planner};
use crate::preprocess::Interval;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMethod {
    Alves,
    Shatnawi,
    Oliveira,
}

impl ThresholdMethod {
    pub fn name(self) -> &'static str {
        match self {
            ThresholdMethod::Alves => "alves",
            ThresholdMethod::Shatnawi => "shatnawi",
            ThresholdMethod::Oliveira => "oliveira",
        }
    }
}

/// Per-feature thresholds γ from one fitting method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineThresholds {
    pub method: ThresholdMethod,
    pub thresholds: BTreeMap<String, f64>,
    /// Features left without a threshold, with the reason.
    pub exempt: BTreeMap<String, String>,
    /// Oliveira only: the compliance rate r (percent) chosen per feature.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub compliance: BTreeMap<String, f64>,
}

impl BaselineThresholds {
    fn new(method: ThresholdMethod) -> Self {
        Self {
            method,
            thresholds: BTreeMap::new(),
            exempt: BTreeMap::new(),
            compliance: BTreeMap::new(),
        }
    }
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

fn check_shape(features: &[String], rows: &[Vec<f64>]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InsufficientData("no rows to fit thresholds on".into()));
    }
    if rows.iter().any(|r| r.len() != features.len()) {
        return Err(Error::Schema("row width differs from the feature count".into()));
    }
    Ok(())
}

/// Smallest value whose (weighted) cumulative share reaches `q`.
fn weighted_quantile(values: &[f64], weights: &[f64], q: f64) -> f64 {
    let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(weights.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let mut cum = 0.0;
    for &(v, w) in &pairs {
        cum += w;
        if cum / total >= q {
            return v;
        }
    }
    pairs.last().expect("non-empty").0
}

pub(crate) fn percentile(values: &[f64], q: f64) -> f64 {
    weighted_quantile(values, &vec![1.0; values.len()], q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlvesConfig {
    pub quantile: f64,
    /// Feature whose values weight each region (usually lines of code).
    pub weight_feature: Option<String>,
}

impl Default for AlvesConfig {
    fn default() -> Self {
        Self {
            quantile: 0.9,
            weight_feature: Some("loc".into()),
        }
    }
}

/// γ = the smallest value at which the size-weighted CDF reaches `quantile`.
pub fn alves_thresholds(features: &[String], rows: &[Vec<f64>], config: &AlvesConfig) -> Result<BaselineThresholds> {
    check_shape(features, rows)?;
    if !(config.quantile > 0.0 && config.quantile <= 1.0) {
        return Err(Error::InvalidInput("quantile must be in (0, 1]".into()));
    }
    let uniform = vec![1.0; rows.len()];
    let weights = match &config.weight_feature {
        Some(name) => match features.iter().position(|f| f == name) {
            Some(j) => {
                let w = column(rows, j);
                if w.iter().any(|x| *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
                    log::warn!("weight feature `{name}` has no positive total; using unweighted CDF");
                    uniform
                } else {
                    w
                }
            }
            None => {
                log::warn!("weight feature `{name}` not found; using unweighted CDF");
                uniform
            }
        },
        None => uniform,
    };
    let mut out = BaselineThresholds::new(ThresholdMethod::Alves);
    for (j, f) in features.iter().enumerate() {
        out.thresholds
            .insert(f.clone(), weighted_quantile(&column(rows, j), &weights, config.quantile));
    }
    Ok(out)
}

/// Maximum-likelihood fit of `P(y) = 1 / (1 + exp(-(beta0 + beta1 x)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub beta0: f64,
    pub beta1: f64,
    pub se_beta1: f64,
    /// Two-sided Wald test of `beta1 = 0`.
    pub p_value: f64,
    pub iterations: usize,
}

/// Newton-Raphson on the standardized predictor.
pub fn fit_logistic(x: &[f64], y: &[bool]) -> Result<LogisticFit> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::InsufficientData("logistic fit needs at least 3 paired values".into()));
    }
    let positives = y.iter().filter(|&&v| v).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::InsufficientData("logistic fit needs both classes".into()));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    if sd == 0.0 {
        return Err(Error::InsufficientData("constant predictor".into()));
    }
    let z: Vec<f64> = x.iter().map(|v| (v - mean) / sd).collect();
    let (mut b0, mut b1) = (0.0f64, 0.0f64);
    for it in 1..=100 {
        let (mut g0, mut g1) = (0.0, 0.0);
        let mut info = [[0.0; 2]; 2];
        for (&zi, &yi) in z.iter().zip(y) {
            let p = 1.0 / (1.0 + (-(b0 + b1 * zi)).exp());
            let r = yi as u8 as f64 - p;
            let w = p * (1.0 - p);
            g0 += r;
            g1 += r * zi;
            info[0][0] += w;
            info[0][1] += w * zi;
            info[1][1] += w * zi * zi;
        }
        info[1][0] = info[0][1];
        let det = info[0][0] * info[1][1] - info[0][1] * info[1][0];
        if det <= 1e-12 {
            return Err(Error::InvalidInput("logistic fit is singular (separated classes?)".into()));
        }
        let d0 = (info[1][1] * g0 - info[0][1] * g1) / det;
        let d1 = (info[0][0] * g1 - info[1][0] * g0) / det;
        b0 += d0;
        b1 += d1;
        if b1.abs() > 50.0 {
            return Err(Error::InvalidInput("logistic fit diverges (separated classes)".into()));
        }
        if d0.abs().max(d1.abs()) < 1e-10 {
            let se_b1 = (info[0][0] / det).sqrt();
            let wald = b1 / se_b1;
            let normal = Normal::new(0.0, 1.0).expect("standard normal");
            return Ok(LogisticFit {
                beta0: b0 - b1 * mean / sd,
                beta1: b1 / sd,
                se_beta1: se_b1 / sd,
                p_value: (2.0 * normal.sf(wald.abs())).min(1.0),
                iterations: it,
            });
        }
    }
    Err(Error::InvalidInput("logistic fit did not converge".into()))
}

/// Metric value at which the fitted defect probability equals `p0`.
pub fn varl(beta0: f64, beta1: f64, p0: f64) -> f64 {
    ((p0 / (1.0 - p0)).ln() - beta0) / beta1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShatnawiConfig {
    /// Acceptable defect probability.
    pub p0: f64,
    /// Significance level the slope must reach.
    pub alpha: f64,
}

impl Default for ShatnawiConfig {
    fn default() -> Self {
        Self { p0: 0.05, alpha: 0.05 }
    }
}

/// γ from a univariate logistic model per metric; metrics whose slope is not
/// significantly positive get no threshold.
pub fn shatnawi_thresholds(
    features: &[String],
    rows: &[Vec<f64>],
    labels: &[bool],
    config: &ShatnawiConfig,
) -> Result<BaselineThresholds> {
    check_shape(features, rows)?;
    if labels.len() != rows.len() {
        return Err(Error::InvalidInput("rows and labels differ in length".into()));
    }
    if !(config.p0 > 0.0 && config.p0 < 1.0) {
        return Err(Error::InvalidInput("p0 must be in (0, 1)".into()));
    }
    let mut out = BaselineThresholds::new(ThresholdMethod::Shatnawi);
    for (j, f) in features.iter().enumerate() {
        let reason = match fit_logistic(&column(rows, j), labels) {
            Err(e) => Some(e.to_string()),
            Ok(fit) if fit.beta1 <= 0.0 => Some(format!("non-positive slope {}", fit.beta1)),
            Ok(fit) if fit.p_value >= config.alpha => Some(format!("slope not significant (p = {:.4})", fit.p_value)),
            Ok(fit) => {
                let g = varl(fit.beta0, fit.beta1, config.p0);
                if g.is_finite() {
                    out.thresholds.insert(f.clone(), g);
                    None
                } else {
                    Some("threshold is not finite".into())
                }
            }
        };
        if let Some(r) = reason {
            log::debug!("no Shatnawi threshold for `{f}`: {r}");
            out.exempt.insert(f.clone(), r);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OliveiraConfig {
    /// Candidate compliance rates r in percent; default 50, 55, ..., 95.
    pub r_grid: Vec<f64>,
    /// Candidate thresholds; `None` means every distinct observed value.
    pub gamma_grid: Option<Vec<f64>>,
    /// Weight of the looseness term; 0 gives a pure compliance penalty.
    pub looseness_weight: f64,
    /// Percentile (0-100) above which a threshold counts as loose.
    pub tail_percentile: f64,
}

impl Default for OliveiraConfig {
    fn default() -> Self {
        Self {
            r_grid: (10..=19).map(|i| f64::from(i) * 5.0).collect(),
            gamma_grid: None,
            looseness_weight: 1.0,
            tail_percentile: 90.0,
        }
    }
}

/// Penalty of threshold `gamma` at compliance rate `r` (percent).
///
/// The compliance term `((r - C) / r)^2` applies when fewer than `r` percent
/// of the values are at most `gamma`; the looseness term
/// `w * ((gamma - tail) / tail)^2` applies when `gamma` exceeds the tail
/// percentile of the values.
pub fn oliveira_penalty(values: &[f64], r: f64, gamma: f64, config: &OliveiraConfig) -> f64 {
    let n = values.len() as f64;
    let c = 100.0 * values.iter().filter(|v| **v <= gamma).count() as f64 / n;
    let compliance = if c < r { ((r - c) / r).powi(2) } else { 0.0 };
    let tail = percentile(values, config.tail_percentile / 100.0);
    let looseness = if gamma > tail {
        let scale = if tail != 0.0 { tail.abs() } else { 1.0 };
        config.looseness_weight * ((gamma - tail) / scale).powi(2)
    } else {
        0.0
    };
    compliance + looseness
}

/// Grid search over `(r, gamma)` for the lowest penalty; ties go to the
/// higher `r`, then the lower `gamma`.
pub fn oliveira_thresholds(
    features: &[String],
    rows: &[Vec<f64>],
    config: &OliveiraConfig,
) -> Result<BaselineThresholds> {
    check_shape(features, rows)?;
    if config.r_grid.is_empty() || config.r_grid.iter().any(|r| !(*r > 0.0 && *r <= 100.0)) {
        return Err(Error::InvalidInput("r grid must be non-empty with values in (0, 100]".into()));
    }
    if matches!(&config.gamma_grid, Some(g) if g.is_empty()) {
        return Err(Error::InvalidInput("gamma grid must be non-empty".into()));
    }
    let mut out = BaselineThresholds::new(ThresholdMethod::Oliveira);
    for (j, f) in features.iter().enumerate() {
        let values = column(rows, j);
        let gammas = match &config.gamma_grid {
            Some(g) => g.clone(),
            None => {
                let mut g = values.clone();
                g.sort_by(f64::total_cmp);
                g.dedup();
                g
            }
        };
        let mut best: Option<(f64, f64, f64)> = None;
        for &r in &config.r_grid {
            for &gamma in &gammas {
                let pen = oliveira_penalty(&values, r, gamma, config);
                let better = match best {
                    None => true,
                    Some((bp, br, bg)) => pen < bp || (pen == bp && (r > br || (r == br && gamma < bg))),
                };
                if better {
                    best = Some((pen, r, gamma));
                }
            }
        }
        let (_, r, gamma) = best.expect("non-empty grids");
        out.thresholds.insert(f.clone(), gamma);
        out.compliance.insert(f.clone(), r);
    }
    Ok(out)
}

/// Metrics above their threshold move to `(-inf, γ]`; all others stay.
pub fn threshold_plan(features: &[String], instance: &[f64], thresholds: &BaselineThresholds) -> Plan {
    let mut plan = Plan::no_change(features, PlanOrigin::planner(thresholds.method.name()));
    for (f, &v) in features.iter().zip(instance) {
        if let Some(&gamma) = thresholds.thresholds.get(f) {
            if v > gamma {
                plan.directives.insert(f.clone(), Directive::move_to(Interval::at_most(gamma)));
            }
        }
    }
    plan
}

pub struct ThresholdPlanner {
    features: Vec<String>,
    thresholds: BaselineThresholds,
}

impl ThresholdPlanner {
    pub fn new(features: Vec<String>, thresholds: BaselineThresholds) -> Self {
        Self { features, thresholds }
    }

    pub fn thresholds(&self) -> &BaselineThresholds {
        &self.thresholds
    }
}

impl Planner for ThresholdPlanner {
    fn name(&self) -> &str {
        self.thresholds.method.name()
    }

    fn features(&self) -> &[String] {
        &self.features
    }

    fn plan(&self, instance: &[f64], _seed: u64) -> Plan {
        threshold_plan(&self.features, instance, &self.thresholds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("m{i}")).collect()
    }

    #[test]
    fn alves_equal_weights_is_plain_percentile() {
        let features = vec!["m".to_string(), "loc".to_string()];
        let rows: Vec<Vec<f64>> = (1..=10).map(|i| vec![i as f64, 100.0]).collect();
        let t = alves_thresholds(&features, &rows, &AlvesConfig::default()).unwrap();
        assert_eq!(t.thresholds["m"], 9.0);
        let none = AlvesConfig { weight_feature: None, ..AlvesConfig::default() };
        assert_eq!(alves_thresholds(&features, &rows, &none).unwrap().thresholds["m"], 9.0);
    }

    #[test]
    fn alves_dominant_region() {
        let features = vec!["m".to_string(), "loc".to_string()];
        let mut rows: Vec<Vec<f64>> = (1..=9).map(|i| vec![i as f64, 10.0]).collect();
        rows.push(vec![3.5, 100_000.0]);
        let t = alves_thresholds(&features, &rows, &AlvesConfig::default()).unwrap();
        assert_eq!(t.thresholds["m"], 3.5);
    }

    #[test]
    fn alves_hand_weighted_cdf() {
        let features = vec!["m".to_string(), "loc".to_string()];
        let values = [4.0, 1.0, 7.0, 2.0, 9.0, 3.0, 8.0, 5.0, 6.0, 10.0];
        let loc = [10.0, 50.0, 5.0, 20.0, 5.0, 30.0, 5.0, 15.0, 10.0, 50.0];
        let rows: Vec<Vec<f64>> = values.iter().zip(&loc).map(|(v, l)| vec![*v, *l]).collect();
        // sorted by m: weights 50, 20, 30, 10, 15, 10, 5, 5, 5, 50 (total 200);
        // cumulative share first reaches 0.5 at m = 3 (100/200)
        let cfg = AlvesConfig { quantile: 0.5, ..AlvesConfig::default() };
        assert_eq!(alves_thresholds(&features, &rows, &cfg).unwrap().thresholds["m"], 3.0);
        // 0.9 * 200 = 180 is first reached at m = 10 (cumulative 150 at m = 9)
        assert_eq!(alves_thresholds(&features, &rows, &AlvesConfig::default()).unwrap().thresholds["m"], 10.0);
    }

    #[test]
    fn alves_zero_weight_falls_back() {
        let features = vec!["m".to_string(), "loc".to_string()];
        let rows: Vec<Vec<f64>> = (1..=10).map(|i| vec![i as f64, 0.0]).collect();
        let t = alves_thresholds(&features, &rows, &AlvesConfig::default()).unwrap();
        assert_eq!(t.thresholds["m"], 9.0);
    }

    #[test]
    fn varl_at_even_odds() {
        assert_eq!(varl(-3.0, 0.5, 0.5), 6.0);
    }

    #[test]
    fn logistic_recovers_known_model() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let (b0, b1) = (-4.0, 0.8);
        let x: Vec<f64> = (0..2000).map(|_| rng.gen_range(0.0..10.0)).collect();
        let y: Vec<bool> = x
            .iter()
            .map(|v| rng.gen::<f64>() < 1.0 / (1.0 + (-(b0 + b1 * v)).exp()))
            .collect();
        let rows: Vec<Vec<f64>> = x.iter().map(|v| vec![*v]).collect();
        let cfg = ShatnawiConfig { p0: 0.5, alpha: 0.05 };
        let t = shatnawi_thresholds(&names(1), &rows, &y, &cfg).unwrap();
        let truth = varl(b0, b1, 0.5);
        assert!((t.thresholds["m0"] - truth).abs() / truth < 0.05);
    }

    #[test]
    fn unrelated_label_is_exempt() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..400).map(|_| vec![rng.gen_range(0.0..10.0)]).collect();
        let y: Vec<bool> = (0..400).map(|_| rng.gen_bool(0.3)).collect();
        let fit = fit_logistic(&rows.iter().map(|r| r[0]).collect::<Vec<_>>(), &y).unwrap();
        assert!(fit.p_value >= 0.05);
        let t = shatnawi_thresholds(&names(1), &rows, &y, &ShatnawiConfig::default()).unwrap();
        assert!(t.thresholds.is_empty());
        assert!(t.exempt.contains_key("m0"));
    }

    #[test]
    fn separated_classes_are_exempt() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<bool> = (0..20).map(|i| i >= 10).collect();
        let t = shatnawi_thresholds(&names(1), &rows, &y, &ShatnawiConfig::default()).unwrap();
        assert!(t.exempt.contains_key("m0"));
    }

    #[test]
    fn oliveira_constant_values() {
        let rows = vec![vec![4.0]; 12];
        let t = oliveira_thresholds(&names(1), &rows, &OliveiraConfig::default()).unwrap();
        assert_eq!(t.thresholds["m0"], 4.0);
    }

    #[test]
    fn oliveira_pure_compliance_at_ninety() {
        let rows: Vec<Vec<f64>> = (1..=100).map(|i| vec![i as f64]).collect();
        let cfg = OliveiraConfig {
            r_grid: vec![90.0],
            looseness_weight: 0.0,
            ..OliveiraConfig::default()
        };
        assert_eq!(oliveira_thresholds(&names(1), &rows, &cfg).unwrap().thresholds["m0"], 90.0);
        let t = oliveira_thresholds(&names(1), &rows, &OliveiraConfig::default()).unwrap();
        assert_eq!((t.thresholds["m0"], t.compliance["m0"]), (90.0, 90.0));
    }

    #[test]
    fn oliveira_matches_exhaustive_grid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let values: Vec<f64> = (0..200)
            .map(|i| if i % 3 == 0 { rng.gen_range(40.0..60.0) } else { rng.gen_range(1.0..10.0) })
            .map(|v: f64| v.round())
            .collect();
        let rows: Vec<Vec<f64>> = values.iter().map(|v| vec![*v]).collect();
        let cfg = OliveiraConfig::default();
        let got = oliveira_thresholds(&names(1), &rows, &cfg).unwrap();

        // independent evaluation of every grid point
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let tail = sorted[(0.9 * sorted.len() as f64).ceil() as usize - 1];
        let mut grid = Vec::new();
        let mut gammas = sorted.clone();
        gammas.dedup();
        for r in (50..=95).step_by(5).map(f64::from) {
            for &g in &gammas {
                let c = 100.0 * sorted.iter().filter(|v| **v <= g).count() as f64 / sorted.len() as f64;
                let mut pen = if c < r { ((r - c) / r).powi(2) } else { 0.0 };
                if g > tail {
                    pen += ((g - tail) / tail).powi(2);
                }
                grid.push((pen, -r, g));
            }
        }
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (_, neg_r, g) = grid[0];
        assert_eq!((got.thresholds["m0"], got.compliance["m0"]), (g, -neg_r));
    }

    #[test]
    fn threshold_plan_branches() {
        let mut t = BaselineThresholds::new(ThresholdMethod::Alves);
        t.thresholds.insert("m0".into(), 25.0);
        let f = names(2);
        let p = threshold_plan(&f, &[34.0, 1.0], &t);
        assert_eq!(p.directives["m0"], Directive::move_to(Interval::at_most(25.0)));
        assert_eq!(p.directives["m1"], Directive::NoChange);
        assert!(!threshold_plan(&f, &[20.0, 1.0], &t).changes_anything());
        let empty = BaselineThresholds::new(ThresholdMethod::Oliveira);
        assert!(!threshold_plan(&f, &[1e9, 1e9], &empty).changes_anything());
    }
}
