//! Prediction quality (η, δ) and the closed-form approximation guarantees.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{feasible, Instance, ObjectiveKind};
use crate::objectives::{candidate_ranks, eval_cost, opt_utilitarian, optimum};
use crate::rational::{Extended, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PredictionError {
    pub value: Extended,
    /// Set when the optimum costs zero.
    pub degenerate: bool,
}

/// Cost of the predicted location relative to the optimum.
pub fn prediction_error(instance: &Instance, prediction: &Rational, objective: ObjectiveKind) -> PredictionError {
    let predicted = eval_cost(instance, prediction, objective).cost;
    let best = optimum(instance, objective).cost;
    if best.is_zero() {
        let value = if predicted.is_zero() { Extended::Finite(Rational::one()) } else { Extended::PosInf };
        PredictionError { value, degenerate: true }
    } else {
        PredictionError { value: Extended::Finite(&predicted / &best), degenerate: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DeltaIndices {
    pub i_opt: usize,
    pub i_mech: usize,
    pub delta: usize,
}

/// Leftmost and rightmost utilitarian-optimal locations among the solver's
/// window medians and the candidate order statistics.
pub fn optimal_range(instance: &Instance) -> (Rational, Rational) {
    let opt = opt_utilitarian(instance);
    let mut locs = opt.locations();
    if instance.z() >= 1 {
        for k in candidate_ranks(instance.n(), instance.z()) {
            let x = instance.order_statistic(k).expect("rank in range");
            if eval_cost(instance, x, ObjectiveKind::Utilitarian).cost == opt.cost {
                locs.push(x.clone());
            }
        }
    }
    let lo = locs.iter().min().expect("non-empty").clone();
    let hi = locs.iter().max().expect("non-empty").clone();
    (lo, hi)
}

/// Sorted-rank distance between `y` and the nearest optimal location.
pub fn delta_index(instance: &Instance, y: &Rational) -> DeltaIndices {
    let s = instance.profile().sorted_values();
    let n = s.len();
    // 1-based ranks; 0 and n+1 stand for "beyond the profile"
    let first_eq = |v: &Rational| s.iter().position(|x| x == v).map(|p| p + 1);
    let last_eq = |v: &Rational| s.iter().rposition(|x| x == v).map(|p| p + 1);
    let (lo, hi) = optimal_range(instance);
    if *y >= lo && *y <= hi {
        let i = first_eq(&opt_utilitarian(instance).location).expect("optimum is a report");
        return DeltaIndices { i_opt: i, i_mech: i, delta: 0 };
    }
    let (i_opt, i_mech) = if *y < lo {
        let i_opt = first_eq(&lo).expect("optimum is a report");
        let i_mech = first_eq(y).unwrap_or_else(|| s.iter().filter(|x| *x < y).count());
        (i_opt, i_mech)
    } else {
        let i_opt = last_eq(&hi).expect("optimum is a report");
        let i_mech = last_eq(y).unwrap_or_else(|| n + 1 - s.iter().filter(|x| *x > y).count());
        (i_opt, i_mech)
    };
    DeltaIndices { i_opt, i_mech, delta: i_opt.abs_diff(i_mech) }
}

fn q(n: usize) -> Rational {
    Rational::from(n)
}

fn require_feasible(n: usize, z: usize) -> Result<()> {
    if feasible(n, z) {
        Ok(())
    } else {
        Err(Error::Infeasible { n, z })
    }
}

/// Left-median guarantee: (n-1)/(n-2z+1) for odd n, n/(n-2z) for even n.
pub fn f_util(n: usize, z: usize) -> Result<Rational> {
    require_feasible(n, z)?;
    Ok(if n % 2 == 1 { q(n - 1) / q(n - 2 * z + 1) } else { q(n) / q(n - 2 * z) })
}

/// Randomized-median guarantee for even n.
pub fn f_rand(n: usize, z: usize) -> Result<Rational> {
    require_feasible(n, z)?;
    if n % 2 == 1 {
        return Err(Error::OddProfile { n });
    }
    Ok(if z == 1 {
        q(n - 1) / q(n - 2)
    } else {
        q(n * n - 2 * n * z + 2 * z) / q((n - 2 * z) * (n - 2 * z + 2))
    })
}

/// Best robustness with predictions, valid for n >= 3z.
pub fn f_robust(n: usize, z: usize) -> Result<Rational> {
    if z == 0 || n < 3 * z {
        return Err(Error::InvalidParameters(format!("robustness bound needs 1 <= z and n >= 3z, got n={n}, z={z}")));
    }
    Ok(if (n - z) % 2 == 1 {
        q(n + z - 1) / q(n - 3 * z + 1)
    } else {
        q(n + z - 2) / q(n - 3 * z + 2)
    })
}

/// `min(eta, f_robust(n, z))`.
pub fn f_eta(n: usize, z: usize, eta: &Extended) -> Result<Rational> {
    let robust = f_robust(n, z)?;
    if matches!(eta, Extended::NegInf) || eta.finite().is_some_and(|e| *e < Rational::one()) {
        return Err(Error::InvalidParameters(format!("prediction error must be at least 1, got {eta}")));
    }
    Ok(match eta {
        Extended::Finite(e) => e.clone().min(robust),
        _ => robust,
    })
}

fn require_few_agents(n: usize, z: usize) -> Result<()> {
    if z >= 1 && 2 * z < n && n < 3 * z {
        Ok(())
    } else {
        Err(Error::InvalidParameters(format!("needs 2z+1 <= n <= 3z-1, got n={n}, z={z}")))
    }
}

/// Index distance reached by a perfect prediction: z+1 - ceil((n-z+1)/2).
pub fn delta_c(n: usize, z: usize) -> Result<usize> {
    require_few_agents(n, z)?;
    Ok(z + 1 - (n - z + 1).div_ceil(2))
}

/// Largest index distance on the right: n-z - ceil((n-z+1)/2).
pub fn delta_r(n: usize, z: usize) -> Result<usize> {
    require_few_agents(n, z)?;
    Ok(n - z - (n - z + 1).div_ceil(2))
}

/// Guarantee at index distance `delta` when 2z+1 <= n <= 3z-1, floored at 1.
/// A vanishing denominator is reported as `PosInf`.
pub fn f_delta(n: usize, z: usize, delta: usize) -> Result<Extended> {
    let limit = delta_c(n, z)? + delta_r(n, z)?;
    if delta > limit {
        return Err(Error::InvalidParameters(format!("delta={delta} exceeds {limit} for n={n}, z={z}")));
    }
    let m = n - z;
    let (num, den) = if m % 2 == 1 {
        let half = (m - 1) / 2;
        (half + delta, (half + 1) as i64 - delta as i64)
    } else {
        (m / 2 + delta, (m / 2) as i64 - delta as i64)
    };
    if den <= 0 {
        return Ok(Extended::PosInf);
    }
    let ratio = q(num) / Rational::from_integer(den);
    Ok(Extended::Finite(ratio.max(Rational::one())))
}

/// Largest confidence parameter for In-Range.
pub fn gamma_max(n: usize, z: usize) -> Result<usize> {
    require_feasible(n, z)?;
    Ok(if z == 1 {
        0
    } else if n.is_multiple_of(2) && z.is_multiple_of(2) {
        z / 2 - 1
    } else {
        z / 2
    })
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
    fn prediction_error_examples() {
        let e = prediction_error(&inst(&WORKED, 3), &r("0"), ObjectiveKind::Utilitarian);
        assert_eq!(e.value, Extended::Finite(r("28/10")));
        assert!(!e.degenerate);
        let i = inst(&["0", "1/3", "1/2", "2/3", "1"], 2);
        let y = opt_utilitarian(&i).location;
        assert_eq!(prediction_error(&i, &y, ObjectiveKind::Utilitarian).value, Extended::Finite(Rational::one()));
        let e = prediction_error(&inst(&["5", "5", "5"], 1), &r("7"), ObjectiveKind::Utilitarian);
        assert_eq!(e.value, Extended::PosInf);
        assert!(e.degenerate);
        let e = prediction_error(&inst(&["5", "5", "5"], 1), &r("5"), ObjectiveKind::Utilitarian);
        assert_eq!(e.value, Extended::Finite(Rational::one()));
    }

    #[test]
    fn delta_examples() {
        let i = inst(&WORKED, 3);
        let y = opt_utilitarian(&i).location;
        assert_eq!(delta_index(&i, &y).delta, 0);
        assert_eq!(delta_index(&i, &r("9/10")), DeltaIndices { i_opt: 5, i_mech: 4, delta: 1 });
        let i = inst(&["0", "1", "2", "3", "4", "5"], 2);
        assert_eq!(delta_index(&i, &r("5/2")).delta, 0);
    }

    #[test]
    fn delta_counts_positions_between() {
        // optimum is the cluster at 10; a point between reports counts the gap
        let i = inst(&["0", "4", "6", "10", "10", "10", "10"], 2);
        assert_eq!(opt_utilitarian(&i).location, r("10"));
        assert_eq!(delta_index(&i, &r("6")), DeltaIndices { i_opt: 4, i_mech: 3, delta: 1 });
        assert_eq!(delta_index(&i, &r("5")), DeltaIndices { i_opt: 4, i_mech: 2, delta: 2 });
        assert_eq!(delta_index(&i, &r("-1")).i_mech, 0);
    }

    #[test]
    fn guarantee_examples() {
        assert_eq!(f_util(20, 1).unwrap(), r("10/9"));
        assert_eq!(f_util(8, 3).unwrap(), r("4"));
        assert_eq!(f_util(9, 2).unwrap(), r("4/3"));
        assert!(f_util(8, 4).is_err());

        assert_eq!(f_rand(4, 1).unwrap(), r("3/2"));
        assert_eq!(f_rand(8, 2).unwrap(), r("3/2"));
        assert_eq!(f_rand(6, 1).unwrap(), r("5/4"));
        assert_eq!(f_rand(7, 1), Err(Error::OddProfile { n: 7 }));

        assert_eq!(f_robust(10, 3).unwrap(), r("6"));
        assert_eq!(f_robust(9, 3).unwrap(), r("5"));
        assert_eq!(f_robust(3, 1).unwrap(), r("1"));
        assert!(f_robust(8, 3).is_err());

        assert_eq!(f_eta(12, 4, &Extended::Finite(r("2"))).unwrap(), r("2"));
        assert_eq!(f_eta(9, 3, &Extended::PosInf).unwrap(), r("5"));
        assert_eq!(f_eta(9, 3, &Extended::Finite(r("1"))).unwrap(), r("1"));
    }

    #[test]
    fn few_agents_examples() {
        assert_eq!(f_delta(8, 3, 0).unwrap(), Extended::Finite(r("1")));
        assert_eq!((delta_c(8, 3).unwrap(), delta_r(8, 3).unwrap()), (1, 2));
        assert_eq!(f_delta(7, 3, 2).unwrap(), Extended::PosInf);
        assert_eq!(f_delta(8, 3, 2).unwrap(), Extended::Finite(r("4")));
        assert!(f_delta(9, 3, 0).is_err());
        assert!(f_delta(8, 3, 4).is_err());
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma_max(20, 6).unwrap(), 2);
        assert_eq!(gamma_max(9, 3).unwrap(), 1);
        assert_eq!(gamma_max(7, 1).unwrap(), 0);
        assert!(gamma_max(4, 2).is_err());
    }

    proptest! {
        #[test]
        fn prop_f_util_monotone_in_z(n in 3usize..60) {
            for z in 2..=(n - 1) / 2 {
                prop_assert!(f_util(n, z - 1).unwrap() <= f_util(n, z).unwrap());
            }
        }

        #[test]
        fn prop_randomization_never_hurts(half in 2usize..40) {
            let n = 2 * half;
            for z in 1..=(n - 1) / 2 {
                prop_assert!(f_rand(n, z).unwrap() <= f_util(n, z).unwrap());
            }
        }

        #[test]
        fn prop_consistency_beats_robustness(z in 1usize..30, extra in 1usize..30) {
            let n = 2 * z + extra;
            prop_assume!(n < 3 * z);
            prop_assert!(delta_c(n, z).unwrap() <= delta_r(n, z).unwrap());
        }

        #[test]
        fn prop_eta_at_least_one(pts in prop::collection::vec(0i64..20, 3..9), zz in 0usize..8, y in -5i64..25) {
            let z = zz % pts.len();
            let i = Instance::new(pts.into_iter().map(Rational::from_integer).collect(), z).unwrap();
            let y = Rational::new(y, 1);
            for obj in [ObjectiveKind::Utilitarian, ObjectiveKind::Egalitarian] {
                let e = prediction_error(&i, &y, obj);
                prop_assert!(e.value >= Extended::Finite(Rational::one()));
                let attains = eval_cost(&i, &y, obj).cost == optimum(&i, obj).cost;
                prop_assert_eq!(e.value == Extended::Finite(Rational::one()), attains);
            }
        }
    }
}
