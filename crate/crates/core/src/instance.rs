//! Instances, sorted profiles and the JSON instance format.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Utilitarian,
    Egalitarian,
}

impl ObjectiveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveKind::Utilitarian => "utilitarian",
            ObjectiveKind::Egalitarian => "egalitarian",
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "utilitarian" | "sum" | "social" => Ok(ObjectiveKind::Utilitarian),
            "egalitarian" | "max" => Ok(ObjectiveKind::Egalitarian),
            other => Err(Error::Malformed(format!("unknown objective {other:?}"))),
        }
    }
}

/// Reports in ascending order together with the permutation that sorts them.
#[derive(Clone, Debug)]
pub struct SortedProfile {
    sorted_values: Vec<Rational>,
    index_map: Vec<usize>,
    prefix_sums: OnceLock<Vec<Rational>>,
}

impl SortedProfile {
    pub fn new(locations: &[Rational]) -> Self {
        let mut index_map: Vec<usize> = (0..locations.len()).collect();
        // stable: equal reports keep their original relative order
        index_map.sort_by(|&a, &b| locations[a].cmp(&locations[b]));
        let sorted_values = index_map.iter().map(|&i| locations[i].clone()).collect();
        SortedProfile { sorted_values, index_map, prefix_sums: OnceLock::new() }
    }

    pub fn len(&self) -> usize {
        self.sorted_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_values.is_empty()
    }

    pub fn sorted_values(&self) -> &[Rational] {
        &self.sorted_values
    }

    /// `index_map()[k]` is the original index of the (k+1)-th smallest report.
    pub fn index_map(&self) -> &[usize] {
        &self.index_map
    }

    /// `prefix_sums()[k]` is the sum of the `k` smallest reports.
    pub fn prefix_sums(&self) -> &[Rational] {
        self.prefix_sums.get_or_init(|| {
            let mut sums = Vec::with_capacity(self.sorted_values.len() + 1);
            let mut acc = Rational::zero();
            sums.push(acc.clone());
            for v in &self.sorted_values {
                acc = &acc + v;
                sums.push(acc.clone());
            }
            sums
        })
    }

    /// Sum of the sorted values at 0-based positions `lo..hi`.
    pub fn range_sum(&self, lo: usize, hi: usize) -> Rational {
        let p = self.prefix_sums();
        &p[hi] - &p[lo]
    }

    /// The k-th smallest report, `k` counted from 1.
    pub fn order_statistic(&self, k: usize) -> Result<&Rational> {
        if k == 0 || k > self.len() {
            return Err(Error::IndexOutOfRange { k, n: self.len() });
        }
        Ok(&self.sorted_values[k - 1])
    }

    /// 1-based rank of original agent `agent`.
    pub fn rank_of(&self, agent: usize) -> usize {
        self.index_map.iter().position(|&i| i == agent).expect("agent in range") + 1
    }

    /// Replaces agent `agent`'s report with `value`, moving one entry
    /// instead of re-sorting.
    fn replace(&mut self, agent: usize, value: Rational) {
        let pos = self.rank_of(agent) - 1;
        self.sorted_values.remove(pos);
        self.index_map.remove(pos);
        let at = self
            .sorted_values
            .iter()
            .zip(&self.index_map)
            .position(|(v, &i)| (v, i) > (&value, agent))
            .unwrap_or(self.sorted_values.len());
        self.sorted_values.insert(at, value);
        self.index_map.insert(at, agent);
        self.prefix_sums = OnceLock::new();
    }
}

/// Free-function form of [`SortedProfile::order_statistic`].
pub fn order_statistic(profile: &SortedProfile, k: usize) -> Result<Rational> {
    profile.order_statistic(k).cloned()
}

#[derive(Clone, Debug)]
pub struct Instance {
    locations: Vec<Rational>,
    z: usize,
    prediction: Option<Rational>,
    profile: SortedProfile,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.locations == other.locations && self.z == other.z && self.prediction == other.prediction
    }
}

impl Eq for Instance {}

impl Instance {
    pub fn new(locations: Vec<Rational>, z: usize) -> Result<Self> {
        if locations.is_empty() {
            return Err(Error::EmptyProfile);
        }
        if z >= locations.len() {
            return Err(Error::OutlierBudget { z, n: locations.len() });
        }
        let profile = SortedProfile::new(&locations);
        Ok(Instance { locations, z, prediction: None, profile })
    }

    pub fn with_prediction(mut self, prediction: Option<Rational>) -> Self {
        self.prediction = prediction;
        self
    }

    pub fn with_z(&self, z: usize) -> Result<Self> {
        if z >= self.n() {
            return Err(Error::OutlierBudget { z, n: self.n() });
        }
        let mut out = self.clone();
        out.z = z;
        Ok(out)
    }

    /// Same instance with agent `agent` reporting `value` instead.
    pub fn with_report(&self, agent: usize, value: Rational) -> Self {
        let mut out = self.clone();
        out.set_report(agent, value);
        out
    }

    /// In-place form of [`Instance::with_report`].
    pub fn set_report(&mut self, agent: usize, value: Rational) {
        self.locations[agent] = value.clone();
        self.profile.replace(agent, value);
    }

    pub fn n(&self) -> usize {
        self.locations.len()
    }

    pub fn z(&self) -> usize {
        self.z
    }

    pub fn locations(&self) -> &[Rational] {
        &self.locations
    }

    pub fn prediction(&self) -> Option<&Rational> {
        self.prediction.as_ref()
    }

    pub fn profile(&self) -> &SortedProfile {
        &self.profile
    }

    /// The k-th smallest report, `k` counted from 1.
    pub fn order_statistic(&self, k: usize) -> Result<&Rational> {
        self.profile.order_statistic(k)
    }

    pub fn min(&self) -> &Rational {
        &self.profile.sorted_values[0]
    }

    pub fn max(&self) -> &Rational {
        self.profile.sorted_values.last().expect("non-empty")
    }

    pub fn diameter(&self) -> Rational {
        self.max() - self.min()
    }

    /// n >= 3 and 1 <= z <= (n-1)/2.
    pub fn is_mechanism_feasible(&self) -> bool {
        feasible(self.n(), self.z)
    }

    pub fn require_feasible(&self) -> Result<()> {
        if self.is_mechanism_feasible() {
            Ok(())
        } else {
            Err(Error::Infeasible { n: self.n(), z: self.z })
        }
    }

    pub fn to_json(&self, objective: Option<ObjectiveKind>) -> Value {
        let mut doc = json!({
            "locations": self.locations.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            "z": self.z,
        });
        if let Some(p) = &self.prediction {
            doc["prediction"] = Value::String(p.to_string());
        }
        if let Some(o) = objective {
            doc["objective"] = Value::String(o.as_str().into());
        }
        doc
    }
}

pub fn feasible(n: usize, z: usize) -> bool {
    n >= 3 && z >= 1 && z <= (n - 1) / 2
}

/// A parsed instance file.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceDoc {
    pub instance: Instance,
    pub objective: Option<ObjectiveKind>,
}

pub fn parse_instance_doc(text: &str) -> Result<InstanceDoc> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| Error::Malformed(format!("invalid JSON: {e}")))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::Malformed("instance must be a JSON object".into()))?;
    let locations = obj
        .get("locations")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Malformed("missing \"locations\" array".into()))?
        .iter()
        .map(Rational::from_json)
        .collect::<Result<Vec<_>>>()?;
    let z = match obj.get("z") {
        None | Some(Value::Null) => 0,
        Some(v) => v
            .as_u64()
            .ok_or_else(|| Error::Malformed(format!("\"z\" must be a non-negative integer, got {v}")))?
            as usize,
    };
    let prediction = match obj.get("prediction") {
        None | Some(Value::Null) => None,
        Some(v) => Some(Rational::from_json(v)?),
    };
    let objective = match obj.get("objective") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.parse()?),
        Some(v) => return Err(Error::Malformed(format!("bad objective {v}"))),
    };
    let instance = Instance::new(locations, z)?.with_prediction(prediction);
    Ok(InstanceDoc { instance, objective })
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    parse_instance_doc(text).map(|d| d.instance)
}

/// Shorthand used throughout the tests: parse each string as a rational.
pub fn rationals(values: &[&str]) -> Vec<Rational> {
    values.iter().map(|s| s.parse().expect("valid rational literal")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_decimal_instance() {
        let inst = parse_instance(r#"{"locations":["0","0.5","1"],"z":1}"#).unwrap();
        assert_eq!(inst.n(), 3);
        assert_eq!(inst.z(), 1);
        assert_eq!(inst.locations(), rationals(&["0", "1/2", "1"]).as_slice());
    }

    #[test]
    fn parses_fraction_instance() {
        let inst = parse_instance(r#"{"locations":["0","1/3","2/3","1"],"z":1}"#).unwrap();
        assert_eq!(inst.locations(), rationals(&["0", "1/3", "2/3", "1"]).as_slice());
    }

    #[test]
    fn rejects_bad_budgets_and_documents() {
        assert_eq!(
            parse_instance(r#"{"locations":["1"],"z":1}"#),
            Err(Error::OutlierBudget { z: 1, n: 1 })
        );
        assert_eq!(parse_instance(r#"{"locations":[],"z":0}"#), Err(Error::EmptyProfile));
        assert!(matches!(parse_instance("[1,2]"), Err(Error::Malformed(_))));
        assert!(matches!(parse_instance(r#"{"locations":["x"],"z":0}"#), Err(Error::Malformed(_))));
        assert!(matches!(parse_instance(r#"{"locations":["1"],"z":-1}"#), Err(Error::Malformed(_))));
    }

    #[test]
    fn reads_prediction_and_objective() {
        let doc = parse_instance_doc(
            r#"{"locations":["0",0.25],"z":0,"prediction":"1/8","objective":"egalitarian"}"#,
        )
        .unwrap();
        assert_eq!(doc.instance.prediction(), Some(&Rational::new(1, 8)));
        assert_eq!(doc.instance.locations()[1], Rational::new(1, 4));
        assert_eq!(doc.objective, Some(ObjectiveKind::Egalitarian));
        let again = parse_instance_doc(&doc.instance.to_json(doc.objective).to_string()).unwrap();
        assert_eq!(again, doc);
    }

    #[test]
    fn order_statistics() {
        let p = SortedProfile::new(&rationals(&["0", "1/2", "1"]));
        assert_eq!(order_statistic(&p, 2).unwrap(), Rational::new(1, 2));
        let p = SortedProfile::new(&rationals(&["9", "1", "5"]));
        assert_eq!(order_statistic(&p, 3).unwrap(), Rational::from_integer(9));
        let p = SortedProfile::new(&rationals(&["0", "0", "1/2", "1", "1"]));
        assert_eq!(order_statistic(&p, 3).unwrap(), Rational::new(1, 2));
        assert_eq!(order_statistic(&p, 0), Err(Error::IndexOutOfRange { k: 0, n: 5 }));
        assert_eq!(order_statistic(&p, 6), Err(Error::IndexOutOfRange { k: 6, n: 5 }));
    }

    #[test]
    fn sigma_is_stable() {
        let p = SortedProfile::new(&rationals(&["1", "0", "1", "0"]));
        assert_eq!(p.index_map(), &[1, 3, 0, 2]);
    }

    #[test]
    fn feasibility_flag() {
        let mk = |n: usize, z: usize| Instance::new(vec![Rational::zero(); n], z).unwrap();
        assert!(mk(3, 1).is_mechanism_feasible());
        assert!(!mk(3, 0).is_mechanism_feasible());
        assert!(!mk(4, 2).is_mechanism_feasible());
        assert!(mk(5, 2).is_mechanism_feasible());
        assert!(!mk(2, 1).is_mechanism_feasible());
    }

    fn arb_locations() -> impl Strategy<Value = Vec<Rational>> {
        prop::collection::vec((-50i64..50, 1i64..7).prop_map(|(a, b)| Rational::new(a, b)), 1..12)
    }

    proptest! {
        #[test]
        fn prop_sorting_is_a_permutation(locs in arb_locations()) {
            let p = SortedProfile::new(&locs);
            let mut expected = locs.clone();
            expected.sort();
            prop_assert_eq!(p.sorted_values(), expected.as_slice());
            let mut seen = p.index_map().to_vec();
            seen.sort();
            prop_assert_eq!(seen, (0..locs.len()).collect::<Vec<_>>());
            for (k, &i) in p.index_map().iter().enumerate() {
                prop_assert_eq!(&locs[i], &p.sorted_values()[k]);
            }
        }

        #[test]
        fn prop_prefix_sums_reconstruct_windows(locs in arb_locations(), a in 0usize..12, b in 0usize..12) {
            let p = SortedProfile::new(&locs);
            let n = locs.len();
            let (lo, hi) = (a.min(b) % n, a.max(b) % n);
            let (lo, hi) = (lo.min(hi), lo.max(hi));
            let direct: Rational = p.sorted_values()[lo..=hi].iter().sum();
            let sums = p.prefix_sums();
            prop_assert_eq!(&sums[hi + 1] - &sums[lo], direct);
            for k in 0..n {
                prop_assert_eq!(&sums[k + 1] - &sums[k], p.sorted_values()[k].clone());
            }
        }

        #[test]
        fn prop_replacing_a_report_matches_fresh_sort(locs in arb_locations(), agent in 0usize..12, v in -60i64..60) {
            let agent = agent % locs.len();
            let inst = Instance::new(locs.clone(), 0).unwrap();
            let value = Rational::new(v, 2);
            let moved = inst.with_report(agent, value.clone());
            let mut fresh_locs = locs;
            fresh_locs[agent] = value;
            let fresh = SortedProfile::new(&fresh_locs);
            prop_assert_eq!(moved.profile().sorted_values(), fresh.sorted_values());
            prop_assert_eq!(moved.profile().index_map(), fresh.index_map());
        }
    }
}
