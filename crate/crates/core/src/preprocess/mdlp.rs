//! Supervised multi-interval discretization (Fayyad & Irani, 1993).
//!
//! Values are split recursively at the class-boundary cut that minimises the
//! weighted class entropy of the two halves. A split is kept only when its
//! information gain exceeds the minimum-description-length bound
//!
//! ```text
//! gain > (log2(N - 1) + delta) / N
//! delta = log2(3^k - 2) - (k * Ent(S) - k1 * Ent(S1) - k2 * Ent(S2))
//! ```
//!
//! where `k`, `k1`, `k2` count the classes present in `S`, `S1`, `S2`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::scheme::DiscretizationScheme;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MdlpMode {
    /// Only MDL-accepted splits.
    #[default]
    Strict,
    /// As strict, but when no split passes at the top level the best single
    /// boundary cut is kept anyway. For very small datasets.
    Relaxed,
}

/// Distinct value with per-class counts.
struct Group {
    value: f64,
    counts: Vec<usize>,
}

impl Group {
    fn pure_class(&self) -> Option<usize> {
        let mut present = self.counts.iter().enumerate().filter(|(_, &c)| c > 0);
        let first = present.next()?.0;
        present.next().is_none().then_some(first)
    }
}

struct Split {
    at: usize,
    cut: f64,
    gain: f64,
    threshold: f64,
}

/// Fits MDLP cut points for one feature.
pub fn fit_mdlp<L: Ord + Copy>(values: &[f64], labels: &[L], mode: MdlpMode) -> Result<Vec<f64>> {
    if values.len() != labels.len() {
        return Err(Error::InvalidInput("values and labels differ in length".into()));
    }
    if values.is_empty() {
        return Err(Error::InsufficientData("cannot discretize an empty column".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("NaN in discretizer input".into()));
    }

    let classes: BTreeMap<L, usize> = labels
        .iter()
        .copied()
        .collect::<BTreeSet<L>>()
        .into_iter()
        .enumerate()
        .map(|(i, l)| (l, i))
        .collect();
    let k = classes.len();

    let mut pairs: Vec<(f64, usize)> = values
        .iter()
        .zip(labels)
        .map(|(&v, l)| (v, classes[l]))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut groups: Vec<Group> = Vec::new();
    for (v, c) in pairs {
        match groups.last_mut() {
            Some(g) if g.value == v => g.counts[c] += 1,
            _ => {
                let mut counts = vec![0; k];
                counts[c] = 1;
                groups.push(Group { value: v, counts });
            }
        }
    }

    let mut cuts = Vec::new();
    split_recursive(&groups, &mut cuts);
    if cuts.is_empty() && mode == MdlpMode::Relaxed {
        if let Some(s) = best_split(&groups) {
            if s.gain > 0.0 {
                cuts.push(s.cut);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    Ok(cuts)
}

/// Fits one MDLP cut-point list per column of `rows`.
pub fn fit_scheme(
    features: &[String],
    rows: &[Vec<f64>],
    labels: &[bool],
    mode: MdlpMode,
) -> Result<DiscretizationScheme> {
    let cuts = (0..features.len())
        .map(|j| {
            let column: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            fit_mdlp(&column, labels, mode)
        })
        .collect::<Result<_>>()?;
    DiscretizationScheme::new(features.to_vec(), cuts)
}

fn split_recursive(groups: &[Group], cuts: &mut Vec<f64>) {
    let Some(s) = best_split(groups) else { return };
    if s.gain > s.threshold {
        cuts.push(s.cut);
        split_recursive(&groups[..s.at], cuts);
        split_recursive(&groups[s.at..], cuts);
    }
}

fn best_split(groups: &[Group]) -> Option<Split> {
    if groups.len() < 2 {
        return None;
    }
    let k = groups[0].counts.len();
    let mut total = vec![0usize; k];
    for g in groups {
        for (t, c) in total.iter_mut().zip(&g.counts) {
            *t += c;
        }
    }
    let n: usize = total.iter().sum();
    let ent_s = entropy(&total);
    if ent_s == 0.0 {
        return None;
    }

    let mut left = vec![0usize; k];
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    for at in 1..groups.len() {
        for (l, c) in left.iter_mut().zip(&groups[at - 1].counts) {
            *l += c;
        }
        let (a, b) = (&groups[at - 1], &groups[at]);
        if let (Some(ca), Some(cb)) = (a.pure_class(), b.pure_class()) {
            if ca == cb {
                continue;
            }
        }
        let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
        let nl: usize = left.iter().sum();
        let e = (nl as f64 * entropy(&left) + (n - nl) as f64 * entropy(&right)) / n as f64;
        if best.as_ref().map_or(true, |(be, _, _)| e < *be) {
            best = Some((e, at, left.clone()));
        }
    }
    let (e, at, left) = best?;
    let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
    let present = |c: &[usize]| c.iter().filter(|&&x| x > 0).count() as f64;
    let (k_s, k1, k2) = (present(&total), present(&left), present(&right));
    let delta = (3f64.powf(k_s) - 2.0).log2()
        - (k_s * ent_s - k1 * entropy(&left) - k2 * entropy(&right));
    let nf = n as f64;
    Some(Split {
        at,
        cut: (groups[at - 1].value + groups[at].value) / 2.0,
        gain: ent_s - e,
        threshold: ((nf - 1.0).log2() + delta) / nf,
    })
}

fn entropy(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};

    #[test]
    fn pure_column_has_no_cuts() {
        let cuts = fit_mdlp(&[1.0, 2.0, 3.0, 4.0], &['A'; 4], MdlpMode::Strict).unwrap();
        assert!(cuts.is_empty());
    }

    #[test]
    fn single_value_has_no_cuts() {
        let cuts = fit_mdlp(&[2.0; 5], &[0, 1, 0, 1, 1], MdlpMode::Relaxed).unwrap();
        assert!(cuts.is_empty());
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(fit_mdlp::<u8>(&[], &[], MdlpMode::Strict).is_err());
    }

    #[test]
    fn four_point_separable_split() {
        // gain 1 bit; MDL bound (log2 3 + log2 7 - 2) / 4 = 0.598
        let delta = 7f64.log2() - 2.0;
        let bound = (3f64.log2() + delta) / 4.0;
        assert!((bound - 0.598_079_355_694_690_1).abs() < 1e-12);
        let v = [1.0, 2.0, 9.0, 10.0];
        let l = ['A', 'A', 'B', 'B'];
        assert_eq!(fit_mdlp(&v, &l, MdlpMode::Strict).unwrap(), vec![5.5]);
        assert_eq!(fit_mdlp(&v, &l, MdlpMode::Relaxed).unwrap(), vec![5.5]);
    }

    #[test]
    fn relaxed_mode_keeps_best_rejected_split() {
        // best cut 2.5: gain 0.311 against a bound of 1.192
        let v = [1.0, 2.0, 3.0, 4.0];
        let l = ['A', 'A', 'B', 'A'];
        assert!(fit_mdlp(&v, &l, MdlpMode::Strict).unwrap().is_empty());
        assert_eq!(fit_mdlp(&v, &l, MdlpMode::Relaxed).unwrap(), vec![2.5]);
    }

    /// Brute-force scan of every midpoint for the entropy-minimising cut.
    fn brute_force_best_cut(values: &[f64], labels: &[bool]) -> f64 {
        let mut sorted: Vec<f64> = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        let h = |pos: usize, neg: usize| {
            let n = (pos + neg) as f64;
            [pos, neg]
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| -(c as f64 / n) * (c as f64 / n).log2())
                .sum::<f64>()
        };
        let mut best = (f64::INFINITY, 0.0);
        for w in sorted.windows(2) {
            let cut = (w[0] + w[1]) / 2.0;
            let (mut lp, mut ln, mut rp, mut rn) = (0, 0, 0, 0);
            for (&v, &l) in values.iter().zip(labels) {
                match (v <= cut, l) {
                    (true, true) => lp += 1,
                    (true, false) => ln += 1,
                    (false, true) => rp += 1,
                    (false, false) => rn += 1,
                }
            }
            let n = values.len() as f64;
            let e = ((lp + ln) as f64 * h(lp, ln) + (rp + rn) as f64 * h(rp, rn)) / n;
            if e < best.0 {
                best = (e, cut);
            }
        }
        best.1
    }

    #[test]
    fn separated_classes_get_one_cut_near_zero() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let values: Vec<f64> = (0..200)
            .map(|i| {
                let mag = rng.gen_range(0.5..5.0);
                if i % 2 == 0 {
                    mag
                } else {
                    -mag
                }
            })
            .collect();
        let labels: Vec<bool> = values.iter().map(|&v| v > 0.0).collect();
        let cuts = fit_mdlp(&values, &labels, MdlpMode::Strict).unwrap();
        assert_eq!(cuts.len(), 1);
        assert_eq!(cuts[0], brute_force_best_cut(&values, &labels));
        assert!(cuts[0].abs() < 0.5);
    }

    proptest! {
        #[test]
        fn permutation_invariant(
            data in prop::collection::vec((0u8..20, any::<bool>()), 1..60),
            seed in any::<u64>(),
        ) {
            let values: Vec<f64> = data.iter().map(|(v, _)| *v as f64).collect();
            let labels: Vec<bool> = data.iter().map(|(_, l)| *l).collect();
            let expected = fit_mdlp(&values, &labels, MdlpMode::Strict).unwrap();
            let mut idx: Vec<usize> = (0..values.len()).collect();
            idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let pv: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
            let pl: Vec<bool> = idx.iter().map(|&i| labels[i]).collect();
            prop_assert_eq!(fit_mdlp(&pv, &pl, MdlpMode::Strict).unwrap(), expected);
        }
    }
}
