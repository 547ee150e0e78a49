//! Approximation ratios against the exact optimum, with the applicable
//! guarantee looked up per mechanism.

use serde::Serialize;

use crate::error::Result;
use crate::instance::{Instance, ObjectiveKind};
use crate::mechanisms::{in_range_bounds, Mechanism, MechanismSpec, Outcome};
use crate::objectives::optimum;
use crate::predictions::{delta_r, f_delta, f_eta, f_rand, f_robust, f_util, prediction_error};
use crate::rational::{Extended, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RatioReport {
    pub mechanism_cost: Extended,
    pub opt_cost: Rational,
    pub ratio: Extended,
    /// Set when the optimum costs zero.
    pub degenerate: bool,
    pub bound: Extended,
    pub within_bound: bool,
}

/// `cost / opt`, with 0/0 read as 1 and c/0 as infinity.
pub fn ratio_of(cost: &Extended, opt: &Rational) -> Extended {
    match cost {
        Extended::Finite(c) if opt.is_zero() => {
            if c.is_zero() {
                Extended::Finite(Rational::one())
            } else {
                Extended::PosInf
            }
        }
        Extended::Finite(c) => Extended::Finite(c / opt),
        _ => Extended::PosInf,
    }
}

fn finite(r: Result<Rational>) -> Extended {
    r.map(Extended::Finite).unwrap_or(Extended::PosInf)
}

fn two() -> Extended {
    Extended::Finite(Rational::from_integer(2))
}

/// Left median's guarantee; exact when nothing may be dropped.
fn median_bound(n: usize, z: usize) -> Extended {
    if z == 0 {
        Extended::Finite(Rational::one())
    } else {
        finite(f_util(n, z))
    }
}

/// The proven guarantee for `spec` on this instance, or infinity when none
/// applies.
pub fn guarantee(spec: &MechanismSpec, instance: &Instance, objective: ObjectiveKind) -> Extended {
    let (n, z) = (instance.n(), instance.z());
    let egalitarian = objective == ObjectiveKind::Egalitarian;
    // any point between the (z+1)-th and (n-z)-th report is 2-approximate
    let central = |k: usize| z < k && k + z <= n;
    match spec {
        MechanismSpec::Oracle { objective: o } if *o == objective => Extended::Finite(Rational::one()),
        MechanismSpec::Oracle { .. } => Extended::PosInf,
        MechanismSpec::LeftZ if egalitarian => two(),
        MechanismSpec::LeftZ => Extended::PosInf,
        MechanismSpec::LeftMedian if egalitarian => two(),
        MechanismSpec::LeftMedian => median_bound(n, z),
        MechanismSpec::KthOrderStatistic { k } if egalitarian => {
            if central(*k) {
                two()
            } else {
                Extended::PosInf
            }
        }
        MechanismSpec::KthOrderStatistic { k } => {
            if *k == n.div_ceil(2) || (n % 2 == 0 && *k == n / 2 + 1) {
                median_bound(n, z)
            } else {
                Extended::PosInf
            }
        }
        MechanismSpec::PhantomMedian { .. } => Extended::PosInf,
        MechanismSpec::RandMedian if egalitarian => two(),
        MechanismSpec::RandMedian => {
            if z == 0 {
                Extended::Finite(Rational::one())
            } else {
                finite(f_rand(n, z))
            }
        }
        MechanismSpec::InRange { .. } if egalitarian => two(),
        MechanismSpec::InRange { gamma } => in_range_bound(instance, *gamma),
    }
}

fn in_range_bound(instance: &Instance, gamma: usize) -> Extended {
    let (n, z) = (instance.n(), instance.z());
    if n < 3 * z {
        // robustness value; the per-output index distance is not a sound bound
        return match delta_r(n, z) {
            Ok(d) => f_delta(n, z, d).unwrap_or(Extended::PosInf),
            Err(_) => Extended::PosInf,
        };
    }
    if gamma == 0 {
        if let (Some(prediction), Ok((l, r))) = (instance.prediction(), in_range_bounds(n, z, 0)) {
            let inside = instance.order_statistic(l).is_ok_and(|a| a <= prediction)
                && instance.order_statistic(r).is_ok_and(|b| prediction <= b);
            if inside {
                let eta = prediction_error(instance, prediction, ObjectiveKind::Utilitarian).value;
                return finite(f_eta(n, z, &eta));
            }
        }
    }
    finite(f_robust(n, z))
}

/// Exact (expected) cost of the mechanism's outcome relative to the optimum.
pub fn measure_ratio(spec: &MechanismSpec, instance: &Instance, objective: ObjectiveKind) -> Result<RatioReport> {
    let outcome = spec.outcome(instance)?;
    Ok(report_for(spec, instance, objective, &outcome))
}

/// [`measure_ratio`] for an already computed outcome.
pub fn report_for(spec: &MechanismSpec, instance: &Instance, objective: ObjectiveKind, outcome: &Outcome) -> RatioReport {
    let mechanism_cost = outcome.expected_cost(instance, objective);
    let opt_cost = optimum(instance, objective).cost;
    let ratio = ratio_of(&mechanism_cost, &opt_cost);
    let bound = guarantee(spec, instance, objective);
    RatioReport {
        within_bound: ratio <= bound,
        degenerate: opt_cost.is_zero(),
        mechanism_cost,
        opt_cost,
        ratio,
        bound,
    }
}
