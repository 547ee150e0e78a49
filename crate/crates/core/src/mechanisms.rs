//! Order-statistic, phantom-median, randomized-median and In-Range mechanisms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::instance::{Instance, ObjectiveKind};
use crate::objectives::{eval_cost, optimum};
use crate::predictions::gamma_max;
use crate::rational::{Extended, Rational};

fn default_objective() -> ObjectiveKind {
    ObjectiveKind::Utilitarian
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mech", rename_all = "snake_case")]
pub enum MechanismSpec {
    LeftZ,
    LeftMedian,
    KthOrderStatistic {
        k: usize,
    },
    PhantomMedian {
        alphas: Vec<Extended>,
    },
    RandMedian,
    InRange {
        #[serde(default)]
        gamma: usize,
    },
    Oracle {
        #[serde(default = "default_objective")]
        objective: ObjectiveKind,
    },
}

/// A finite lottery over facility locations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomizedOutcome {
    support: Vec<(Rational, Rational)>,
}

impl RandomizedOutcome {
    /// Merges repeated locations; probabilities must be positive and sum to 1.
    pub fn new(atoms: Vec<(Rational, Rational)>) -> Result<Self> {
        let mut support: Vec<(Rational, Rational)> = Vec::with_capacity(atoms.len());
        for (loc, p) in atoms {
            if !p.is_positive() {
                return Err(Error::InvalidParameters(format!("non-positive probability {p}")));
            }
            match support.iter_mut().find(|(l, _)| *l == loc) {
                Some((_, q)) => *q = &*q + &p,
                None => support.push((loc, p)),
            }
        }
        let total: Rational = support.iter().map(|(_, p)| p).sum();
        if total != Rational::one() {
            return Err(Error::InvalidParameters(format!("probabilities sum to {total}")));
        }
        support.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(RandomizedOutcome { support })
    }

    pub fn support(&self) -> &[(Rational, Rational)] {
        &self.support
    }

    pub fn expected_distance(&self, p: &Rational) -> Rational {
        self.support.iter().map(|(loc, prob)| prob * &loc.dist(p)).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Deterministic(Extended),
    Randomized(RandomizedOutcome),
}

impl Outcome {
    pub fn point(r: Rational) -> Self {
        Outcome::Deterministic(Extended::Finite(r))
    }

    /// The location of a deterministic, finite outcome.
    pub fn as_point(&self) -> Option<&Rational> {
        match self {
            Outcome::Deterministic(e) => e.finite(),
            Outcome::Randomized(_) => None,
        }
    }

    /// `E|y - p|` for facility location `y`.
    pub fn expected_distance(&self, p: &Rational) -> Extended {
        match self {
            Outcome::Deterministic(e) => e.dist(p),
            Outcome::Randomized(r) => Extended::Finite(r.expected_distance(p)),
        }
    }

    /// Objective value of the outcome, in expectation for lotteries.
    pub fn expected_cost(&self, instance: &Instance, objective: ObjectiveKind) -> Extended {
        match self {
            Outcome::Deterministic(Extended::Finite(y)) => {
                Extended::Finite(eval_cost(instance, y, objective).cost)
            }
            Outcome::Deterministic(_) => Extended::PosInf,
            Outcome::Randomized(r) => Extended::Finite(
                r.support()
                    .iter()
                    .map(|(y, p)| p * &eval_cost(instance, y, objective).cost)
                    .sum(),
            ),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Deterministic(e) => write!(f, "{e}"),
            Outcome::Randomized(r) => {
                let parts: Vec<String> = r.support.iter().map(|(l, p)| format!("{l}@{p}")).collect();
                write!(f, "{{{}}}", parts.join(", "))
            }
        }
    }
}

impl Serialize for Outcome {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Outcome::Deterministic(e) => e.serialize(s),
            Outcome::Randomized(r) => {
                #[derive(Serialize)]
                struct Atom<'a> {
                    location: &'a Rational,
                    probability: &'a Rational,
                }
                let atoms: Vec<Atom> =
                    r.support.iter().map(|(location, probability)| Atom { location, probability }).collect();
                atoms.serialize(s)
            }
        }
    }
}

/// Anything that maps a reported profile to a (possibly random) location.
pub trait Mechanism: Sync {
    fn outcome(&self, instance: &Instance) -> Result<Outcome>;

    fn name(&self) -> String;

    /// Extra points where the outcome may jump as one report moves.
    fn breakpoints(&self, _instance: &Instance) -> Vec<Rational> {
        Vec::new()
    }
}

/// The (z+1)-th smallest report.
pub fn left_z(instance: &Instance) -> Result<Rational> {
    instance.require_feasible()?;
    instance.order_statistic(instance.z() + 1).cloned()
}

/// The ceil(n/2)-th smallest report.
pub fn left_median(instance: &Instance) -> Rational {
    instance.order_statistic(instance.n().div_ceil(2)).expect("n >= 1").clone()
}

pub fn kth_order_statistic(instance: &Instance, k: usize) -> Result<Rational> {
    instance.order_statistic(k).cloned()
}

/// Median of the reports together with `n+1` fixed phantom points.
pub fn phantom_median(instance: &Instance, alphas: &[Extended]) -> Result<Extended> {
    let n = instance.n();
    if alphas.len() != n + 1 {
        return Err(Error::PhantomCount { expected: n + 1, got: alphas.len() });
    }
    let sorted;
    let phantoms: &[Extended] = if alphas.is_sorted() {
        alphas
    } else {
        let mut v = alphas.to_vec();
        v.sort_unstable();
        sorted = v;
        &sorted
    };
    // merge the two sorted lists up to the (n+1)-th element
    let reports = instance.profile().sorted_values();
    let le = |r: &Rational, a: &Extended| match a {
        Extended::NegInf => false,
        Extended::Finite(a) => r <= a,
        Extended::PosInf => true,
    };
    let (mut i, mut j) = (0, 0);
    for _ in 0..n {
        if j == phantoms.len() || (i < n && le(&reports[i], &phantoms[j])) {
            i += 1;
        } else {
            j += 1;
        }
    }
    Ok(if j == phantoms.len() || (i < n && le(&reports[i], &phantoms[j])) {
        Extended::Finite(reports[i].clone())
    } else {
        phantoms[j].clone()
    })
}

/// Fair coin between the left and right medians of an even profile.
pub fn rand_median(instance: &Instance) -> Result<RandomizedOutcome> {
    let (n, z) = (instance.n(), instance.z());
    if n % 2 == 1 {
        return Err(Error::OddProfile { n });
    }
    if z > (n - 1) / 2 {
        return Err(Error::Infeasible { n, z });
    }
    let half = Rational::new(1, 2);
    RandomizedOutcome::new(vec![
        (instance.order_statistic(n / 2)?.clone(), half.clone()),
        (instance.order_statistic(n / 2 + 1)?.clone(), half),
    ])
}

/// 1-based ranks bounding In-Range's acceptance interval after applying
/// the confidence parameter.
pub fn in_range_bounds(n: usize, z: usize, gamma: usize) -> Result<(usize, usize)> {
    let max = gamma_max(n, z)?;
    if gamma > max {
        return Err(Error::GammaOutOfRange { gamma, max });
    }
    let lo = (n - z + 1).div_ceil(2).max(z + 1);
    let hi = ((n - z).div_ceil(2) + z).min(n - z);
    let shrink = gamma.min((hi - lo) / 2);
    Ok((lo + shrink, hi - shrink))
}

/// Follows the prediction when it falls between two central order
/// statistics and clamps it to the nearer one otherwise.
pub fn in_range(instance: &Instance, prediction: &Rational, gamma: usize) -> Result<Rational> {
    instance.require_feasible()?;
    let (lo, hi) = in_range_bounds(instance.n(), instance.z(), gamma)?;
    let left = instance.order_statistic(lo)?;
    let right = instance.order_statistic(hi)?;
    Ok(prediction.clone().clamp(left.clone(), right.clone()))
}

/// An optimal location, ties broken as in the solvers. Not strategyproof.
pub fn oracle_mechanism(instance: &Instance, objective: ObjectiveKind) -> Rational {
    optimum(instance, objective).location
}

impl MechanismSpec {
    pub fn is_randomized(&self) -> bool {
        matches!(self, MechanismSpec::RandMedian)
    }
}

impl Mechanism for MechanismSpec {
    fn outcome(&self, instance: &Instance) -> Result<Outcome> {
        Ok(match self {
            MechanismSpec::LeftZ => Outcome::point(left_z(instance)?),
            MechanismSpec::LeftMedian => Outcome::point(left_median(instance)),
            MechanismSpec::KthOrderStatistic { k } => Outcome::point(kth_order_statistic(instance, *k)?),
            MechanismSpec::PhantomMedian { alphas } => Outcome::Deterministic(phantom_median(instance, alphas)?),
            MechanismSpec::RandMedian => Outcome::Randomized(rand_median(instance)?),
            MechanismSpec::InRange { gamma } => {
                let prediction = instance.prediction().ok_or(Error::MissingPrediction)?;
                Outcome::point(in_range(instance, prediction, *gamma)?)
            }
            MechanismSpec::Oracle { objective } => Outcome::point(oracle_mechanism(instance, *objective)),
        })
    }

    fn name(&self) -> String {
        self.to_string()
    }

    fn breakpoints(&self, instance: &Instance) -> Vec<Rational> {
        match self {
            MechanismSpec::PhantomMedian { alphas } => alphas.iter().filter_map(|a| a.finite().cloned()).collect(),
            MechanismSpec::InRange { .. } => instance.prediction().cloned().into_iter().collect(),
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for MechanismSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MechanismSpec::LeftZ => f.write_str("left_z"),
            MechanismSpec::LeftMedian => f.write_str("left_median"),
            MechanismSpec::KthOrderStatistic { k } => write!(f, "kth:{k}"),
            MechanismSpec::PhantomMedian { alphas } => {
                let parts: Vec<String> = alphas.iter().map(|a| a.to_string()).collect();
                write!(f, "phantom:{}", parts.join(";"))
            }
            MechanismSpec::RandMedian => f.write_str("rand_median"),
            MechanismSpec::InRange { gamma } => write!(f, "in_range:{gamma}"),
            MechanismSpec::Oracle { objective } => write!(f, "oracle:{objective}"),
        }
    }
}

impl FromStr for MechanismSpec {
    type Err = Error;

    /// Accepts the JSON tag form or the short form printed by `Display`
    /// (`left_z`, `kth:3`, `in_range:1`, `oracle:egalitarian`, `phantom:-inf;0;inf`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| Error::Malformed(format!("bad mechanism JSON: {e}")));
        }
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let int = |a: Option<&str>, default: Option<usize>| -> Result<usize> {
            match a {
                Some(a) => a.trim().parse().map_err(|_| Error::Malformed(format!("bad integer in {s:?}"))),
                None => default.ok_or_else(|| Error::Malformed(format!("{head} needs an argument"))),
            }
        };
        Ok(match head {
            "left_z" => MechanismSpec::LeftZ,
            "left_median" | "median" => MechanismSpec::LeftMedian,
            "kth" | "kth_order_statistic" => MechanismSpec::KthOrderStatistic { k: int(arg, None)? },
            "rand_median" => MechanismSpec::RandMedian,
            "in_range" => MechanismSpec::InRange { gamma: int(arg, Some(0))? },
            "oracle" => MechanismSpec::Oracle {
                objective: arg.map(str::parse).transpose()?.unwrap_or(ObjectiveKind::Utilitarian),
            },
            "phantom" | "phantom_median" => {
                let arg = arg.ok_or_else(|| Error::Malformed("phantom needs a list of points".into()))?;
                let alphas = arg
                    .split([';', ','])
                    .map(str::parse)
                    .collect::<Result<Vec<Extended>>>()?;
                MechanismSpec::PhantomMedian { alphas }
            }
            other => return Err(Error::Malformed(format!("unknown mechanism {other:?}"))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::rationals;
    use proptest::prelude::*;

    fn inst(xs: &[&str], z: usize) -> Instance {
        Instance::new(rationals(xs), z).unwrap()
    }

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    const WORKED: [&str; 8] = ["0", "0", "0", "9/10", "19/10", "19/10", "19/10", "19/10"];

    #[test]
    fn left_z_examples() {
        assert_eq!(left_z(&inst(&["1", "5", "9"], 1)).unwrap(), r("5"));
        assert_eq!(left_z(&inst(&["0", "0", "1/2", "1", "1"], 2)).unwrap(), r("1/2"));
        assert_eq!(left_z(&inst(&["0"; 5], 2)).unwrap(), r("0"));
        assert_eq!(left_z(&inst(&["0", "1", "2", "3"], 2)), Err(Error::Infeasible { n: 4, z: 2 }));
    }

    #[test]
    fn left_median_examples() {
        assert_eq!(left_median(&inst(&["0", "1/3", "2/3", "1"], 0)), r("1/3"));
        assert_eq!(left_median(&inst(&["0", "0", "0", "1", "2", "2", "2", "2"], 3)), r("1"));
        assert_eq!(left_median(&inst(&["7"], 0)), r("7"));
    }

    #[test]
    fn kth_examples() {
        assert_eq!(kth_order_statistic(&inst(&["0", "0", "1/2", "1", "1"], 0), 3).unwrap(), r("1/2"));
        let i = inst(&["1", "5", "9"], 1);
        assert_eq!(kth_order_statistic(&i, 2).unwrap(), left_z(&i).unwrap());
        let i = inst(&["0", "1/3", "2/3", "1"], 0);
        assert_eq!(kth_order_statistic(&i, 2).unwrap(), left_median(&i));
        assert_eq!(kth_order_statistic(&i, 5), Err(Error::IndexOutOfRange { k: 5, n: 4 }));
    }

    #[test]
    fn phantom_examples() {
        use Extended::{NegInf, PosInf};
        let i = inst(&["2", "8", "5"], 0);
        // n+1-k copies of -inf select the k-th report
        assert_eq!(phantom_median(&i, &[NegInf, NegInf, NegInf, PosInf]).unwrap(), Extended::Finite(r("2")));
        assert_eq!(phantom_median(&i, &[NegInf, NegInf, PosInf, PosInf]).unwrap(), Extended::Finite(r("5")));
        let i = inst(&["10", "20"], 0);
        let alphas: Vec<Extended> = ["0", "1", "2"].iter().map(|s| s.parse().unwrap()).collect();
        assert_eq!(phantom_median(&i, &alphas).unwrap(), Extended::Finite(r("2")));
        let i = inst(&["4", "6", "1", "3"], 0);
        assert_eq!(phantom_median(&i, &vec![PosInf; 5]).unwrap(), Extended::PosInf);
        assert_eq!(
            phantom_median(&i, &[NegInf, PosInf, PosInf, PosInf, PosInf]).unwrap(),
            Extended::Finite(r("6"))
        );
        assert_eq!(phantom_median(&i, &vec![PosInf; 3]), Err(Error::PhantomCount { expected: 5, got: 3 }));
    }

    #[test]
    fn rand_median_examples() {
        let out = rand_median(&inst(&["0", "1/3", "2/3", "1"], 0)).unwrap();
        assert_eq!(out.support(), &[(r("1/3"), r("1/2")), (r("2/3"), r("1/2"))]);
        let out = rand_median(&inst(&["0", "5", "5", "9"], 1)).unwrap();
        assert_eq!(out.support(), &[(r("5"), r("1"))]);
        let out = rand_median(&inst(&["0", "0", "0", "1", "1", "1"], 1)).unwrap();
        assert_eq!(out.support(), &[(r("0"), r("1/2")), (r("1"), r("1/2"))]);
        assert_eq!(rand_median(&inst(&["0", "1", "2"], 1)), Err(Error::OddProfile { n: 3 }));
    }

    #[test]
    fn in_range_examples() {
        let i = inst(&WORKED, 3);
        assert_eq!(in_range_bounds(8, 3, 0).unwrap(), (4, 5));
        assert_eq!(in_range(&i, &r("0"), 0).unwrap(), r("9/10"));
        let i = inst(&["0", "1", "2", "3", "4", "5"], 2);
        assert_eq!(in_range_bounds(6, 2, 0).unwrap(), (3, 4));
        assert_eq!(in_range(&i, &r("5/2"), 0).unwrap(), r("5/2"));
        assert_eq!(in_range(&i, &r("-1000000"), 0).unwrap(), r("2"));
        assert_eq!(in_range(&i, &r("1000000"), 0).unwrap(), r("3"));
        assert_eq!(in_range(&i, &r("0"), 1), Err(Error::GammaOutOfRange { gamma: 1, max: 0 }));
    }

    #[test]
    fn in_range_confidence_parameter() {
        // n >= 3z: the largest gamma collapses onto the median
        assert_eq!(in_range_bounds(9, 3, 1).unwrap(), (5, 5));
        assert_eq!(in_range_bounds(20, 6, 2).unwrap(), (10, 11));
        // n < 3z: the interval is a single rank already, gamma is clamped
        assert_eq!(in_range_bounds(7, 3, 1).unwrap(), (4, 4));
    }

    #[test]
    fn oracle_examples() {
        let i = inst(&["0", "0", "1/2", "1", "1"], 2);
        assert_eq!(oracle_mechanism(&i, ObjectiveKind::Egalitarian), r("1/4"));
        assert_eq!(oracle_mechanism(&inst(&["3"; 4], 1), ObjectiveKind::Utilitarian), r("3"));
        let i = inst(&["0", "1/3", "1/2", "2/3", "2/3"], 2);
        assert_eq!(oracle_mechanism(&i, ObjectiveKind::Utilitarian), r("2/3"));
    }

    #[test]
    fn spec_json_round_trip() {
        let specs = vec![
            MechanismSpec::LeftZ,
            MechanismSpec::LeftMedian,
            MechanismSpec::KthOrderStatistic { k: 3 },
            MechanismSpec::PhantomMedian { alphas: vec![Extended::NegInf, Extended::Finite(r("1/2")), Extended::PosInf] },
            MechanismSpec::RandMedian,
            MechanismSpec::InRange { gamma: 1 },
            MechanismSpec::Oracle { objective: ObjectiveKind::Egalitarian },
        ];
        for spec in specs {
            let json = serde_json::to_string(&spec).unwrap();
            assert_eq!(serde_json::from_str::<MechanismSpec>(&json).unwrap(), spec);
            assert_eq!(spec.to_string().parse::<MechanismSpec>().unwrap(), spec);
            assert_eq!(json.parse::<MechanismSpec>().unwrap(), spec);
        }
        assert_eq!(serde_json::to_string(&MechanismSpec::LeftZ).unwrap(), r#"{"mech":"left_z"}"#);
        assert!("nope".parse::<MechanismSpec>().is_err());
    }

    fn arb_feasible() -> impl Strategy<Value = Instance> {
        (3usize..12)
            .prop_flat_map(|n| (prop::collection::vec((0i64..20, 1i64..4), n), 1..=(n - 1) / 2))
            .prop_map(|(pts, z)| {
                Instance::new(pts.into_iter().map(|(a, b)| Rational::new(a, b)).collect(), z).unwrap()
            })
    }

    proptest! {
        #[test]
        fn prop_kth_is_a_phantom_median(i in arb_feasible()) {
            let n = i.n();
            for k in 1..=n {
                let mut alphas = vec![Extended::NegInf; n + 1 - k];
                alphas.extend(vec![Extended::PosInf; k]);
                prop_assert_eq!(
                    phantom_median(&i, &alphas).unwrap(),
                    Extended::Finite(kth_order_statistic(&i, k).unwrap())
                );
            }
        }

        #[test]
        fn prop_unanimity(n in 3usize..12, c in -20i64..20, y in -40i64..40) {
            let c = Rational::new(c, 3);
            let z = (n - 1) / 2;
            let i = Instance::new(vec![c.clone(); n], z).unwrap().with_prediction(Some(Rational::new(y, 3)));
            prop_assert_eq!(&left_z(&i).unwrap(), &c);
            prop_assert_eq!(&left_median(&i), &c);
            for k in 1..=n {
                prop_assert_eq!(&kth_order_statistic(&i, k).unwrap(), &c);
            }
            if n % 2 == 0 {
                let out = rand_median(&i).unwrap();
                prop_assert_eq!(out.support(), &[(c.clone(), Rational::one())]);
            }
            prop_assert_eq!(&in_range(&i, &Rational::new(y, 3), 0).unwrap(), &c);
        }

        #[test]
        fn prop_in_range_stays_inside(i in arb_feasible(), y in -40i64..100, g in 0usize..4) {
            let (n, z) = (i.n(), i.z());
            let gamma = g.min(gamma_max(n, z).unwrap());
            let out = in_range(&i, &Rational::new(y, 4), gamma).unwrap();
            prop_assert!(&out >= i.order_statistic(z + 1).unwrap());
            prop_assert!(&out <= i.order_statistic(n - z).unwrap());
        }

        #[test]
        fn prop_rand_median_is_a_lottery_over_reports(i in arb_feasible()) {
            prop_assume!(i.n() % 2 == 0);
            let out = rand_median(&i).unwrap();
            let total: Rational = out.support().iter().map(|(_, p)| p).sum();
            prop_assert_eq!(total, Rational::one());
            for (loc, _) in out.support() {
                prop_assert!(i.locations().contains(loc));
            }
        }

        #[test]
        fn prop_anonymity(i in arb_feasible(), seed in any::<u64>(), y in -10i64..30) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = i.locations().to_vec();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let y = Rational::new(y, 2);
            let a = i.clone().with_prediction(Some(y.clone()));
            let b = Instance::new(shuffled, i.z()).unwrap().with_prediction(Some(y));
            let n = i.n();
            let mut specs = vec![
                MechanismSpec::LeftZ,
                MechanismSpec::LeftMedian,
                MechanismSpec::InRange { gamma: 0 },
                MechanismSpec::Oracle { objective: ObjectiveKind::Utilitarian },
                MechanismSpec::Oracle { objective: ObjectiveKind::Egalitarian },
                MechanismSpec::PhantomMedian { alphas: vec![Extended::Finite(Rational::new(5, 2)); n + 1] },
            ];
            specs.extend((1..=n).map(|k| MechanismSpec::KthOrderStatistic { k }));
            if n % 2 == 0 {
                specs.push(MechanismSpec::RandMedian);
            }
            for spec in specs {
                prop_assert_eq!(spec.outcome(&a).unwrap(), spec.outcome(&b).unwrap());
            }
        }
    }
}
