use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Directive, Plan, PlanOrigin, Planner};
use crate::preprocess::DiscretizationScheme;
use crate::{Error, Result};

/// Moves a uniformly drawn non-empty subset of the flexible features (those
/// with at least two bins) into uniformly drawn bins other than their current one.
///
/// `instance` and `flexible` (indices) refer to `scheme.features()`.
pub fn random_plan(
    instance: &[f64],
    scheme: &DiscretizationScheme,
    flexible: &[usize],
    seed: u64,
) -> Result<Plan> {
    if flexible.is_empty() {
        return Err(Error::InvalidInput("random planning needs flexible features".into()));
    }
    let features = scheme.features();
    let mut plan = Plan::no_change(features, PlanOrigin::planner("random"));
    let movable: Vec<usize> = flexible.iter().copied().filter(|&j| scheme.n_bins(j) >= 2).collect();
    if movable.is_empty() {
        log::warn!("no flexible feature has more than one bin; random plan changes nothing");
        return Ok(plan);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = loop {
        let pick: Vec<usize> = movable.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        if !pick.is_empty() {
            break pick;
        }
    };
    for j in chosen {
        let current = scheme.bin(j, instance[j]);
        let mut bin = rng.gen_range(0..scheme.n_bins(j) - 1);
        if bin >= current {
            bin += 1;
        }
        plan.directives.insert(
            features[j].clone(),
            Directive::MoveTo {
                target: scheme.interval(j, bin),
                from: Some(scheme.interval(j, current)),
            },
        );
    }
    Ok(plan)
}

pub struct RandomPlanner {
    scheme: DiscretizationScheme,
    flexible: Vec<usize>,
}

impl RandomPlanner {
    /// `scheme` is aligned with the planner's features; `flexible` names the movable ones.
    pub fn new(scheme: DiscretizationScheme, flexible: &[String]) -> Result<Self> {
        let flexible = flexible
            .iter()
            .map(|f| {
                scheme
                    .index_of(f)
                    .ok_or_else(|| Error::Schema(format!("flexible feature `{f}` is not in the scheme")))
            })
            .collect::<Result<Vec<_>>>()?;
        if flexible.is_empty() {
            return Err(Error::InvalidInput("random planning needs flexible features".into()));
        }
        Ok(Self { scheme, flexible })
    }
}

impl Planner for RandomPlanner {
    fn name(&self) -> &str {
        "random"
    }

    fn features(&self) -> &[String] {
        self.scheme.features()
    }

    fn plan(&self, instance: &[f64], seed: u64) -> Plan {
        random_plan(instance, &self.scheme, &self.flexible, seed).expect("flexible set checked at construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::Interval;

    #[test]
    fn single_two_bin_feature_always_flips() {
        let scheme = DiscretizationScheme::new(vec!["a".into(), "b".into()], vec![vec![5.0], vec![]]).unwrap();
        for seed in 0..50 {
            let p = random_plan(&[9.0, 0.0], &scheme, &[0], seed).unwrap();
            assert_eq!(
                p.directives["a"],
                Directive::MoveTo {
                    target: Interval::at_most(5.0),
                    from: Some(Interval { lower: 5.0, upper: f64::INFINITY }),
                }
            );
            assert_eq!(p.directives["b"], Directive::NoChange);
        }
    }

    #[test]
    fn deterministic_and_never_current_bin() {
        let scheme = DiscretizationScheme::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![1.0, 2.0, 3.0], vec![0.0], vec![10.0, 20.0]],
        )
        .unwrap();
        let x = [2.5, -1.0, 15.0];
        for seed in 0..100 {
            let p = random_plan(&x, &scheme, &[0, 1, 2], seed).unwrap();
            assert_eq!(p, random_plan(&x, &scheme, &[0, 1, 2], seed).unwrap());
            assert!(p.changes_anything());
            for (f, target) in p.moves() {
                let j = scheme.index_of(f).unwrap();
                assert!(!target.contains(x[j]));
            }
        }
        assert!(random_plan(&x, &scheme, &[], 0).is_err());
    }
}
