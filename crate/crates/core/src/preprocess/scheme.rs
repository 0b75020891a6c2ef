use std::collections::BTreeMap;
use std::fmt;

use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// A half-open range `(lower, upper]`; infinite bounds mark the outer bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower < upper {
            Ok(Self { lower, upper })
        } else {
            Err(Error::InvalidInput(format!(
                "interval lower bound {lower} must be below upper bound {upper}"
            )))
        }
    }

    pub fn at_most(upper: f64) -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v > self.lower && v <= self.upper
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bound = |v: f64| {
            if v == f64::NEG_INFINITY {
                "-inf".to_owned()
            } else if v == f64::INFINITY {
                "inf".to_owned()
            } else {
                v.to_string()
            }
        };
        write!(f, "({}, {}]", bound(self.lower), bound(self.upper))
    }
}

#[derive(Serialize, Deserialize)]
struct IntervalRepr {
    lower: Option<f64>,
    upper: Option<f64>,
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        IntervalRepr {
            lower: self.lower.is_finite().then_some(self.lower),
            upper: self.upper.is_finite().then_some(self.upper),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = IntervalRepr::deserialize(d)?;
        Interval::new(
            r.lower.unwrap_or(f64::NEG_INFINITY),
            r.upper.unwrap_or(f64::INFINITY),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Index of the bin holding `v` for strictly increasing `cuts`.
///
/// Bin `i` is `(cuts[i-1], cuts[i]]`, with the outer bins unbounded.
pub fn bin_of(cuts: &[f64], v: f64) -> usize {
    cuts.partition_point(|c| *c < v)
}

pub fn bin_interval(cuts: &[f64], bin: usize) -> Interval {
    Interval {
        lower: if bin == 0 {
            f64::NEG_INFINITY
        } else {
            cuts[bin - 1]
        },
        upper: cuts.get(bin).copied().unwrap_or(f64::INFINITY),
    }
}

/// Per-feature cut points, kept in the column order of the data they bin.
///
/// Serialises as a JSON object `feature -> [cut, ...]`; a deserialised scheme
/// is in alphabetical order, so callers re-align it with [`Self::aligned_to`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationScheme {
    features: Vec<String>,
    cuts: Vec<Vec<f64>>,
}

impl DiscretizationScheme {
    pub fn new(features: Vec<String>, cuts: Vec<Vec<f64>>) -> Result<Self> {
        if features.len() != cuts.len() {
            return Err(Error::InvalidInput(
                "one cut-point list is needed per feature".into(),
            ));
        }
        for (f, c) in features.iter().zip(&cuts) {
            if c.windows(2).any(|w| !(w[0] < w[1])) || c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "cut points of `{f}` must be finite and strictly increasing"
                )));
            }
        }
        Ok(Self { features, cuts })
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn cuts(&self, feature: usize) -> &[f64] {
        &self.cuts[feature]
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.cuts[feature].len() + 1
    }

    pub fn bin(&self, feature: usize, v: f64) -> usize {
        bin_of(&self.cuts[feature], v)
    }

    pub fn interval(&self, feature: usize, bin: usize) -> Interval {
        bin_interval(&self.cuts[feature], bin)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f == name)
    }

    /// The same scheme re-ordered to `features`; unknown features are schema errors.
    pub fn aligned_to(&self, features: &[String]) -> Result<Self> {
        let cuts = features
            .iter()
            .map(|f| {
                self.index_of(f)
                    .map(|i| self.cuts[i].clone())
                    .ok_or_else(|| Error::Schema(format!("feature `{f}` is not in the scheme")))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            features: features.to_vec(),
            cuts,
        })
    }

    /// Bins every value of `row` (aligned with this scheme's features).
    pub fn bin_row(&self, row: &[f64]) -> Vec<usize> {
        row.iter()
            .zip(&self.cuts)
            .map(|(&v, c)| bin_of(c, v))
            .collect()
    }

    pub fn to_map(&self) -> BTreeMap<String, Vec<f64>> {
        self.features
            .iter()
            .cloned()
            .zip(self.cuts.iter().cloned())
            .collect()
    }

    /// Hex SHA-256 of the canonical JSON form; identifies a scheme across artifacts.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_vec(&self.to_map()).expect("cut points serialise");
        hex(&Sha256::digest(canonical))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl Serialize for DiscretizationScheme {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_map().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiscretizationScheme {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let map = BTreeMap::<String, Vec<f64>>::deserialize(d)?;
        let (features, cuts) = map.into_iter().unzip();
        DiscretizationScheme::new(features, cuts).map_err(serde::de::Error::custom)
    }
}

/// Labeled instances whose features have been mapped to bin indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedData {
    pub features: Vec<String>,
    pub n_bins: Vec<usize>,
    pub rows: Vec<Vec<usize>>,
    pub labels: Vec<bool>,
}

impl DiscretizedData {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Maps raw rows (columns named by `features`) to bins under `scheme`.
pub fn discretize(
    scheme: &DiscretizationScheme,
    features: &[String],
    rows: &[Vec<f64>],
    labels: &[bool],
) -> Result<DiscretizedData> {
    if rows.len() != labels.len() {
        return Err(Error::InvalidInput("rows and labels differ in length".into()));
    }
    let aligned = scheme.aligned_to(features)?;
    let rows = rows
        .iter()
        .map(|r| {
            if r.len() != features.len() {
                Err(Error::Schema(format!(
                    "row has {} values, expected {}",
                    r.len(),
                    features.len()
                )))
            } else {
                Ok(aligned.bin_row(r))
            }
        })
        .collect::<Result<_>>()?;
    Ok(DiscretizedData {
        features: features.to_vec(),
        n_bins: (0..features.len()).map(|i| aligned.n_bins(i)).collect(),
        rows,
        labels: labels.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bin_convention() {
        assert_eq!(bin_of(&[5.5], 2.0), 0);
        assert_eq!(bin_of(&[5.5], 5.5), 0);
        assert_eq!(bin_of(&[5.5], 5.6), 1);
        assert_eq!(bin_of(&[1.0, 3.0], 2.0), 1);
        assert_eq!(bin_interval(&[1.0, 3.0], 1), Interval { lower: 1.0, upper: 3.0 });
        assert_eq!(bin_interval(&[5.5], 0).lower, f64::NEG_INFINITY);
    }

    #[test]
    fn unknown_feature_is_schema_error() {
        let s = DiscretizationScheme::new(vec!["a".into()], vec![vec![1.0]]).unwrap();
        let err = discretize(&s, &["b".into()], &[vec![0.0]], &[false]).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn json_round_trip_and_alignment() {
        let s = DiscretizationScheme::new(
            vec!["wmc".into(), "cbo".into()],
            vec![vec![3.0, 7.5], vec![14.0]],
        )
        .unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"cbo":[14.0],"wmc":[3.0,7.5]}"#);
        let back: DiscretizationScheme = serde_json::from_str(&json).unwrap();
        assert_eq!(back.aligned_to(s.features()).unwrap(), s);
        assert_eq!(back.fingerprint(), s.fingerprint());
    }

    #[test]
    fn interval_json_uses_null_for_unbounded() {
        let json = serde_json::to_string(&Interval::at_most(25.0)).unwrap();
        assert_eq!(json, r#"{"lower":null,"upper":25.0}"#);
        let back: Interval = serde_json::from_str(&json).unwrap();
        assert_eq!(back, Interval::at_most(25.0));
    }

    proptest! {
        #[test]
        fn bins_partition_the_line(
            mut cuts in prop::collection::vec(-100.0f64..100.0, 0..6),
            v in -150.0f64..150.0,
        ) {
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let hits = (0..=cuts.len())
                .filter(|&b| bin_interval(&cuts, b).contains(v))
                .collect::<Vec<_>>();
            prop_assert_eq!(hits, vec![bin_of(&cuts, v)]);
        }
    }
}
