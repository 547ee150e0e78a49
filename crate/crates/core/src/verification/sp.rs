//! Grid-based strategyproofness audits.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::mechanisms::{Mechanism, Outcome};
use crate::rational::{Extended, Rational};

/// A profitable unilateral misreport.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ViolationCertificate {
    pub agent_index: usize,
    pub true_point: Rational,
    pub deviation: Rational,
    pub outcome_truthful: Outcome,
    pub outcome_deviated: Outcome,
    pub cost_truthful: Extended,
    pub cost_deviated: Extended,
}

/// Which misreports to try for each agent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeviationSet {
    /// [`default_grid`] built from the truthful profile.
    DefaultGrid,
    /// The same points for every agent.
    Shared(Vec<Rational>),
    /// One list per agent, indexed like the profile.
    PerAgent(Vec<Vec<Rational>>),
}

/// Points inside each gap between consecutive anchors, besides the midpoint.
const POINTS_PER_GAP: i64 = 8;

/// Reports, mechanism breakpoints and the truthful outcome, refined by the
/// midpoint and eight evenly spaced points of every gap, plus points one and
/// two diameters beyond both extremes and one diameter around the outcome.
pub fn default_grid<M: Mechanism + ?Sized>(mechanism: &M, instance: &Instance, truthful: &Outcome) -> Vec<Rational> {
    let mut anchors: Vec<Rational> = instance.profile().sorted_values().to_vec();
    anchors.extend(mechanism.breakpoints(instance));
    let support: Vec<Rational> = match truthful {
        Outcome::Deterministic(e) => e.finite().cloned().into_iter().collect(),
        Outcome::Randomized(r) => r.support().iter().map(|(l, _)| l.clone()).collect(),
    };
    anchors.extend(support.iter().cloned());
    anchors.sort();
    anchors.dedup();

    let diam = {
        let d = instance.diameter();
        if d.is_zero() {
            Rational::one()
        } else {
            d
        }
    };
    let two_diam = &diam + &diam;
    let half = Rational::new(1, 2);
    let steps = Rational::from_integer(POINTS_PER_GAP + 1);

    let mut grid = Vec::with_capacity(anchors.len() * (POINTS_PER_GAP as usize + 2) + 4 + 2 * support.len());
    grid.extend(anchors.iter().cloned());
    for pair in anchors.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let gap = b - a;
        grid.push(a + &(&gap * &half));
        let unit = &gap / &steps;
        for k in 1..=POINTS_PER_GAP {
            grid.push(a + &(&unit * &Rational::from_integer(k)));
        }
    }
    let (lo, hi) = (&anchors[0], &anchors[anchors.len() - 1]);
    grid.push(lo - &diam);
    grid.push(lo - &two_diam);
    grid.push(hi + &diam);
    grid.push(hi + &two_diam);
    for y in &support {
        grid.push(y - &diam);
        grid.push(y + &diam);
    }
    grid.sort();
    grid.dedup();
    grid
}

fn deviations_for<'a>(set: &'a DeviationSet, grid: &'a Option<Vec<Rational>>, agent: usize) -> &'a [Rational] {
    match set {
        DeviationSet::DefaultGrid => grid.as_deref().expect("grid built"),
        DeviationSet::Shared(points) => points,
        DeviationSet::PerAgent(lists) => lists.get(agent).map(Vec::as_slice).unwrap_or(&[]),
    }
}

fn scan<M: Mechanism + ?Sized>(
    mechanism: &M,
    truth: &Instance,
    truthful: Outcome,
    set: &DeviationSet,
) -> Result<Option<ViolationCertificate>> {
    let grid = matches!(set, DeviationSet::DefaultGrid).then(|| default_grid(mechanism, truth, &truthful));
    let mut work = truth.clone();
    for agent in 0..truth.n() {
        let p = &truth.locations()[agent];
        let honest = truthful.expected_distance(p);
        for dev in deviations_for(set, &grid, agent) {
            if dev == p {
                continue;
            }
            work.set_report(agent, dev.clone());
            let lied = mechanism.outcome(&work)?;
            let cost = lied.expected_distance(p);
            if cost < honest {
                return Ok(Some(ViolationCertificate {
                    agent_index: agent,
                    true_point: p.clone(),
                    deviation: dev.clone(),
                    outcome_truthful: truthful,
                    outcome_deviated: lied,
                    cost_truthful: honest,
                    cost_deviated: cost,
                }));
            }
        }
        work.set_report(agent, p.clone());
    }
    Ok(None)
}

/// First profitable misreport, scanning agents in index order and deviations
/// in the given (ascending for the default grid) order. The prediction, if
/// any, stays fixed.
pub fn check_sp_deterministic<M: Mechanism + ?Sized>(
    mechanism: &M,
    truth: &Instance,
    set: &DeviationSet,
) -> Result<Option<ViolationCertificate>> {
    let truthful = mechanism.outcome(truth)?;
    if matches!(truthful, Outcome::Randomized(_)) {
        return Err(Error::NotDeterministic);
    }
    scan(mechanism, truth, truthful, set)
}

/// As [`check_sp_deterministic`], comparing exact expected distances.
pub fn check_sp_in_expectation<M: Mechanism + ?Sized>(
    mechanism: &M,
    truth: &Instance,
    set: &DeviationSet,
) -> Result<Option<ViolationCertificate>> {
    let truthful = mechanism.outcome(truth)?;
    scan(mechanism, truth, truthful, set)
}

/// Moves agent `agent` in `steps` equal steps from its report to the
/// truthful outcome and checks the outcome never changes. An infinite
/// outcome is approached in steps of one diameter.
pub fn check_corollary_path<M: Mechanism + ?Sized>(
    mechanism: &M,
    instance: &Instance,
    agent: usize,
    steps: usize,
) -> Result<bool> {
    let start = instance
        .locations()
        .get(agent)
        .ok_or(Error::IndexOutOfRange { k: agent + 1, n: instance.n() })?
        .clone();
    let y = mechanism.outcome(instance)?;
    let target = match &y {
        Outcome::Randomized(_) => return Err(Error::NotDeterministic),
        Outcome::Deterministic(e) => e.clone(),
    };
    let steps = steps.max(1);
    let stride = match &target {
        Extended::Finite(t) => &(t - &start) / &Rational::from(steps),
        Extended::PosInf | Extended::NegInf => {
            let d = instance.diameter();
            let d = if d.is_zero() { Rational::one() } else { d };
            if target == Extended::PosInf {
                d
            } else {
                -d
            }
        }
    };
    for j in 1..=steps {
        let point = &start + &(&stride * &Rational::from(j));
        if mechanism.outcome(&instance.with_report(agent, point))? != y {
            return Ok(false);
        }
    }
    Ok(true)
}
