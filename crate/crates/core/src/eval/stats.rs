use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::factorial::ln_binomial;

use crate::preprocess::ranks;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W+, W-)`.
    pub statistic: f64,
    /// Two-sided.
    pub p_value: f64,
    /// Non-zero differences used.
    pub n: usize,
    pub method: WilcoxonMethod,
    /// All differences were zero; `p_value` is 1 by convention.
    pub degenerate: bool,
}

const EXACT_MAX_N: usize = 25;
const MIN_PAIRS: usize = 5;

/// Two-sided Wilcoxon signed-rank test on the paired differences `x - y`.
///
/// Zero differences are dropped. With at most 25 remaining pairs and no tied
/// magnitudes the exact null distribution is used; otherwise the normal
/// approximation with tie and continuity corrections.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput("paired samples differ in length".into()));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("NaN in paired samples".into()));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|v| *v != 0.0).collect();
    if d.is_empty() && !x.is_empty() {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            p_value: 1.0,
            n: 0,
            method: WilcoxonMethod::Exact,
            degenerate: true,
        });
    }
    if d.len() < MIN_PAIRS {
        return Err(Error::InsufficientData(format!(
            "Wilcoxon test needs at least {MIN_PAIRS} non-zero differences, got {}",
            d.len()
        )));
    }
    let n = d.len();
    let magnitudes: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let r = ranks(&magnitudes);
    let w_plus: f64 = d.iter().zip(&r).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;
    let statistic = w_plus.min(w_minus);

    let mut sorted = magnitudes.clone();
    sorted.sort_by(f64::total_cmp);
    let tie_sizes: Vec<f64> = sorted
        .chunk_by(|a, b| a == b)
        .map(|g| g.len() as f64)
        .filter(|&t| t > 1.0)
        .collect();

    let (p_value, method) = if n <= EXACT_MAX_N && tie_sizes.is_empty() {
        (exact_p(n, statistic), WilcoxonMethod::Exact)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let tie_term: f64 = tie_sizes.iter().map(|t| t * t * t - t).sum();
        let var = (nf * (nf + 1.0) * (2.0 * nf + 1.0) - tie_term / 2.0) / 24.0;
        let diff = w_plus - mean;
        let z = (diff - 0.5 * sign(diff)) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        ((2.0 * normal.sf(z.abs())).min(1.0), WilcoxonMethod::Normal)
    };
    Ok(WilcoxonResult {
        statistic,
        p_value,
        n,
        method,
        degenerate: false,
    })
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `2 P(W <= t)` under the null, from the subset-sum count of rank sums.
fn exact_p(n: usize, t: f64) -> f64 {
    let max = n * (n + 1) / 2;
    let mut counts = vec![0f64; max + 1];
    counts[0] = 1.0;
    for k in 1..=n {
        for s in (k..=max).rev() {
            counts[s] += counts[s - k];
        }
    }
    let t = t.floor() as usize;
    let below: f64 = counts[..=t].iter().sum();
    (2.0 * below / 2f64.powi(n as i32)).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    pub b: u64,
    pub c: u64,
    pub p_value: f64,
    /// No discordant pairs; `p_value` is 1 by convention.
    pub degenerate: bool,
}

/// Exact two-sided McNemar test on the discordant counts `b` and `c`.
pub fn mcnemar_exact(b: u64, c: u64) -> McNemarResult {
    let n = b + c;
    if n == 0 {
        return McNemarResult { b, c, p_value: 1.0, degenerate: true };
    }
    let ln_half_n = n as f64 * 0.5f64.ln();
    let tail: f64 = (0..=b.min(c)).map(|k| (ln_binomial(n, k) + ln_half_n).exp()).sum();
    McNemarResult {
        b,
        c,
        p_value: (2.0 * tail).min(1.0),
        degenerate: false,
    }
}

/// Quantile with linear interpolation between order statistics (inclusive).
pub fn quantile(xs: &[f64], q: f64) -> Option<f64> {
    if xs.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let h = q * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

/// `Q3 - Q1`; `None` for an empty sample.
pub fn iqr(xs: &[f64]) -> Option<f64> {
    Some(quantile(xs, 0.75)? - quantile(xs, 0.25)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn constant_shift_exact() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.37).collect();
        let y: Vec<f64> = x.iter().map(|v| v + 1.0 + v * 0.01).collect();
        let r = wilcoxon_signed_rank(&x, &y).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.method, WilcoxonMethod::Exact);
        assert_eq!(r.p_value, 2.0 / 1024.0);
    }

    #[test]
    fn all_zero_differences_are_degenerate() {
        let x = [1.0, 2.0, 3.0];
        let r = wilcoxon_signed_rank(&x, &x).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn too_few_pairs() {
        assert!(wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[2.0, 3.0, 5.0]).is_err());
        assert!(wilcoxon_signed_rank(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn symmetric_noise_is_calibrated() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1234);
        let trials = 1000;
        let mut accepted = 0;
        for _ in 0..trials {
            let x: Vec<f64> = (0..20).map(|_| rng.gen::<f64>()).collect();
            let y: Vec<f64> = x.iter().map(|v| v + rng.gen_range(-0.5..0.5)).collect();
            if wilcoxon_signed_rank(&x, &y).unwrap().p_value > 0.05 {
                accepted += 1;
            }
        }
        let rate = accepted as f64 / trials as f64;
        assert!((0.93..=0.97).contains(&rate), "acceptance rate {rate}");
    }

    #[test]
    fn mcnemar_closed_forms() {
        assert!((mcnemar_exact(0, 14).p_value - 2.0 * 0.5f64.powi(14)).abs() < 1e-12);
        assert!((mcnemar_exact(1, 9).p_value - 2.0 * 11.0 * 0.5f64.powi(10)).abs() < 1e-12);
        assert_eq!(mcnemar_exact(6, 6).p_value, 1.0);
        let d = mcnemar_exact(0, 0);
        assert!(d.degenerate && d.p_value == 1.0);
    }

    #[test]
    fn iqr_cases() {
        assert_eq!(iqr(&[4.0; 6]), Some(0.0));
        assert_eq!(iqr(&[3.0]), Some(0.0));
        let v: Vec<f64> = (1..=8).map(f64::from).collect();
        assert_eq!(quantile(&v, 0.25), Some(2.75));
        assert_eq!(quantile(&v, 0.75), Some(6.25));
        assert_eq!(iqr(&v), Some(3.5));
        assert_eq!(iqr(&[]), None);
    }

    proptest! {
        #[test]
        fn wilcoxon_swap_preserves_p(
            pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 5..40),
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let a = wilcoxon_signed_rank(&x, &y).unwrap();
            let b = wilcoxon_signed_rank(&y, &x).unwrap();
            prop_assert!((a.p_value - b.p_value).abs() < 1e-12);
            prop_assert_eq!(a.statistic, b.statistic);
        }

        #[test]
        fn mcnemar_symmetric(b in 0u64..=20, c in 0u64..=20) {
            prop_assert_eq!(mcnemar_exact(b, c).p_value, mcnemar_exact(c, b).p_value);
        }
    }
}
