//! Adversarial cluster profiles and the one-agent-at-a-time deviation
//! sequences that connect them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::mechanisms::{Mechanism, Outcome};
use crate::rational::Rational;

/// Which of the four median-tightness profiles to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MedianProfile {
    /// z at 0, n-z at 2d.
    LeftOutliers,
    /// z at 0, ceil((n-2z)/2) at d, floor(n/2) at 2d.
    LeftHeavy,
    /// floor(n/2) at 0, ceil((n-2z)/2) at d, z at 2d.
    RightHeavy,
    /// n-z at 0, z at 2d.
    RightOutliers,
}

/// Fixed small profiles used against randomized mechanisms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LotteryFixture {
    /// (0, 1/2, 1) with z = 1; the right agent may report 1/2.
    ThreeAgents,
    /// (0, 1/3, 2/3, 1) with z = 1; the right agent may report 2/3.
    FourAgents,
    /// (0, 1/3, 1/2, 2/3, 1) with z = 2; the right agent may report 2/3.
    FiveAgents,
}

/// Parametrised cluster profiles. `moved` counts agents already relocated
/// along the family's deviation sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// Needs z >= n/2. floor(n/2) at 0, n mod 2 at 1, n-z-1 at 2 and the
    /// rest at 3, 4, 5, ...; those move one by one to 2.
    HalfOutliers { n: usize, z: usize, moved: usize },
    /// z at 0, n-2z at 1/2, z at 1; right agents move to 1/2.
    ThreeClusters { n: usize, z: usize, moved: usize },
    MedianTightness { profile: MedianProfile, n: usize, z: usize, d: Rational },
    /// Three clusters with a prediction at 1/4 (or 3/4 when `right`).
    EgalitarianPrediction { n: usize, z: usize, moved: usize, right: bool },
    /// For 2z+1 <= n <= 3z-1: z at 0, n-2z at zd, z at (z+1)d, prediction at
    /// (z+1)d; left agents move to zd.
    DensePrediction { n: usize, z: usize, d: Rational, moved: usize },
    /// For n >= 3z: four clusters at 0, d1, d1+d2, d1+d2+d3 with the
    /// prediction at d1+d2; left agents move to d1.
    RobustnessTightness { n: usize, z: usize, d1: Rational, d2: Rational, d3: Rational, moved: usize },
    /// (0, 0, 0, 9/10, 19/10 x 4), z = 3, prediction 0.
    WorkedExample,
    Lottery { fixture: LotteryFixture, deviated: bool },
}

/// Agents' starting points, who moves (in order) and where to.
struct Layout {
    points: Vec<Rational>,
    z: usize,
    movers: Vec<usize>,
    target: Rational,
    prediction: Option<Rational>,
}

fn invalid(msg: String) -> Error {
    Error::InvalidParameters(msg)
}

fn push(points: &mut Vec<Rational>, at: &Rational, count: usize) -> std::ops::Range<usize> {
    let start = points.len();
    points.extend(std::iter::repeat_n(at.clone(), count));
    start..points.len()
}

fn three_clusters(n: usize, z: usize) -> Result<Layout> {
    if z == 0 || n <= 2 * z {
        return Err(invalid(format!("three clusters need 1 <= z and 2z < n, got n={n}, z={z}")));
    }
    let mut points = Vec::with_capacity(n);
    push(&mut points, &Rational::zero(), z);
    push(&mut points, &Rational::new(1, 2), n - 2 * z);
    let movers = push(&mut points, &Rational::one(), z).collect();
    Ok(Layout { points, z, movers, target: Rational::new(1, 2), prediction: None })
}

fn layout(family: &Family) -> Result<Layout> {
    match family {
        Family::HalfOutliers { n, z, .. } => {
            let (n, z) = (*n, *z);
            if n < 4 || 2 * z < n || z >= n {
                return Err(invalid(format!("half-outlier profiles need n >= 4 and n/2 <= z < n, got n={n}, z={z}")));
            }
            let mut points = Vec::with_capacity(n);
            push(&mut points, &Rational::zero(), n / 2);
            push(&mut points, &Rational::one(), n % 2);
            let target = Rational::from_integer(2);
            push(&mut points, &target, n - z - 1);
            let spread = z + n / 2 + 1 - n;
            let movers = (0..spread)
                .map(|j| push(&mut points, &Rational::from(3 + j), 1).start)
                .collect();
            Ok(Layout { points, z, movers, target, prediction: None })
        }
        Family::ThreeClusters { n, z, .. } => three_clusters(*n, *z),
        Family::EgalitarianPrediction { n, z, right, .. } => {
            let mut l = three_clusters(*n, *z)?;
            l.prediction = Some(if *right { Rational::new(3, 4) } else { Rational::new(1, 4) });
            Ok(l)
        }
        Family::MedianTightness { profile, n, z, d } => {
            let (n, z) = (*n, *z);
            if z == 0 || z > n.saturating_sub(1) / 2 {
                return Err(invalid(format!("median profiles need 1 <= z <= (n-1)/2, got n={n}, z={z}")));
            }
            if !d.is_positive() {
                return Err(invalid(format!("spacing must be positive, got {d}")));
            }
            let (left, mid, right) = (Rational::zero(), d.clone(), d + d);
            let middle = (n - 2 * z).div_ceil(2);
            let mut points = Vec::with_capacity(n);
            let counts = match profile {
                MedianProfile::LeftOutliers => [z, 0, n - z],
                MedianProfile::LeftHeavy => [z, middle, n / 2],
                MedianProfile::RightHeavy => [n / 2, middle, z],
                MedianProfile::RightOutliers => [n - z, 0, z],
            };
            for (at, count) in [left, mid, right].iter().zip(counts) {
                push(&mut points, at, count);
            }
            Ok(Layout { points, z, movers: Vec::new(), target: Rational::zero(), prediction: None })
        }
        Family::DensePrediction { n, z, d, .. } => {
            let (n, z) = (*n, *z);
            if z < 2 || n < 2 * z + 1 || n >= 3 * z {
                return Err(invalid(format!("dense profiles need z >= 2 and 2z+1 <= n <= 3z-1, got n={n}, z={z}")));
            }
            if !d.is_positive() {
                return Err(invalid(format!("spacing must be positive, got {d}")));
            }
            let mid = d * &Rational::from(z);
            let far = d * &Rational::from(z + 1);
            let mut points = Vec::with_capacity(n);
            let movers = push(&mut points, &Rational::zero(), z).collect();
            push(&mut points, &mid, n - 2 * z);
            push(&mut points, &far, z);
            Ok(Layout { points, z, movers, target: mid, prediction: Some(far) })
        }
        Family::RobustnessTightness { n, z, d1, d2, d3, .. } => {
            let (n, z) = (*n, *z);
            if z == 0 || n < 3 * z {
                return Err(invalid(format!("robustness profiles need z >= 1 and n >= 3z, got n={n}, z={z}")));
            }
            if !(d2.is_positive() && d2 < d3 && *d1 > d2 + d3) {
                return Err(invalid(format!("need d1 > d2 + d3 and 0 < d2 < d3, got {d1}, {d2}, {d3}")));
            }
            let odd = (n - z) % 2 == 1;
            let theta = if odd { (n - z - 1) / 2 - z } else { (n - z) / 2 - z };
            let second = if odd { z } else { z - 1 };
            let a = d1.clone();
            let b = d1 + d2;
            let c = &b + d3;
            let mut points = Vec::with_capacity(n);
            let movers = push(&mut points, &Rational::zero(), z + theta).collect();
            push(&mut points, &a, second);
            push(&mut points, &b, 1 + theta);
            push(&mut points, &c, z);
            debug_assert_eq!(points.len(), n);
            Ok(Layout { points, z, movers, target: a, prediction: Some(b) })
        }
        Family::WorkedExample => {
            let mut points = Vec::with_capacity(8);
            push(&mut points, &Rational::zero(), 3);
            push(&mut points, &Rational::new(9, 10), 1);
            push(&mut points, &Rational::new(19, 10), 4);
            Ok(Layout { points, z: 3, movers: Vec::new(), target: Rational::zero(), prediction: Some(Rational::zero()) })
        }
        Family::Lottery { fixture, .. } => {
            let (xs, z, target): (&[(i64, i64)], usize, Rational) = match fixture {
                LotteryFixture::ThreeAgents => (&[(0, 1), (1, 2), (1, 1)], 1, Rational::new(1, 2)),
                LotteryFixture::FourAgents => (&[(0, 1), (1, 3), (2, 3), (1, 1)], 1, Rational::new(2, 3)),
                LotteryFixture::FiveAgents => (&[(0, 1), (1, 3), (1, 2), (2, 3), (1, 1)], 2, Rational::new(2, 3)),
            };
            let points: Vec<Rational> = xs.iter().map(|&(p, q)| Rational::new(p, q)).collect();
            let movers = vec![points.len() - 1];
            Ok(Layout { points, z, movers, target, prediction: None })
        }
    }
}

fn moved_count(family: &Family) -> usize {
    match family {
        Family::HalfOutliers { moved, .. }
        | Family::ThreeClusters { moved, .. }
        | Family::EgalitarianPrediction { moved, .. }
        | Family::DensePrediction { moved, .. }
        | Family::RobustnessTightness { moved, .. } => *moved,
        Family::Lottery { deviated, .. } => usize::from(*deviated),
        Family::MedianTightness { .. } | Family::WorkedExample => 0,
    }
}

fn stage(l: &Layout, moved: usize) -> Result<Instance> {
    let mut points = l.points.clone();
    for &agent in &l.movers[..moved] {
        points[agent] = l.target.clone();
    }
    Ok(Instance::new(points, l.z)?.with_prediction(l.prediction.clone()))
}

/// Number of agents that move along the family's sequence.
pub fn sequence_length(family: &Family) -> Result<usize> {
    Ok(layout(family)?.movers.len())
}

/// The profile (and prediction, where the family defines one).
pub fn gen_family(family: &Family) -> Result<Instance> {
    let l = layout(family)?;
    let moved = moved_count(family);
    if moved > l.movers.len() {
        return Err(invalid(format!("at most {} agents move in this family, got {moved}", l.movers.len())));
    }
    stage(&l, moved)
}

/// One profile of a deviation sequence and the move that produced it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SequenceStep {
    #[serde(skip)]
    pub instance: Instance,
    pub locations: Vec<Rational>,
    pub agent: Option<usize>,
    pub from: Option<Rational>,
    pub to: Option<Rational>,
}

/// Every stage from nobody moved to everybody moved, each differing from
/// the previous one in a single agent's report. The `moved` parameter of
/// `family` is ignored.
pub fn family_sequence(family: &Family) -> Result<Vec<SequenceStep>> {
    let l = layout(family)?;
    let mut steps = Vec::with_capacity(l.movers.len() + 1);
    for moved in 0..=l.movers.len() {
        let instance = stage(&l, moved)?;
        let (agent, from, to) = match moved.checked_sub(1) {
            Some(j) => {
                let a = l.movers[j];
                (Some(a), Some(l.points[a].clone()), Some(l.target.clone()))
            }
            None => (None, None, None),
        };
        steps.push(SequenceStep { locations: instance.locations().to_vec(), instance, agent, from, to });
    }
    Ok(steps)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReplayReport {
    pub mechanism: String,
    pub outcomes: Vec<Outcome>,
    /// Steps whose new report lies between the old report and the previous
    /// outcome, where a strategyproof rule must not move.
    pub covered: Vec<bool>,
    pub all_identical: bool,
    /// First covered step at which the outcome changed.
    pub first_break: Option<usize>,
}

impl ReplayReport {
    pub fn corollary_holds(&self) -> bool {
        self.first_break.is_none()
    }
}

fn between(x: &Rational, a: &Rational, outcome: &Outcome) -> bool {
    use crate::rational::Extended;
    let Outcome::Deterministic(y) = outcome else {
        return false;
    };
    let x = Extended::Finite(x.clone());
    let a = Extended::Finite(a.clone());
    (a <= x && x <= *y) || (*y <= x && x <= a)
}

/// Runs `mechanism` on every step of a sequence.
pub fn replay_sequence<M: Mechanism + ?Sized>(mechanism: &M, steps: &[SequenceStep]) -> Result<ReplayReport> {
    let mut outcomes: Vec<Outcome> = Vec::with_capacity(steps.len());
    let mut covered = Vec::with_capacity(steps.len());
    let mut first_break = None;
    for (i, step) in steps.iter().enumerate() {
        let out = mechanism.outcome(&step.instance)?;
        let cov = match (outcomes.last(), &step.from, &step.to) {
            (Some(prev), Some(from), Some(to)) => between(to, from, prev),
            _ => false,
        };
        if cov && first_break.is_none() && Some(&out) != outcomes.last() {
            first_break = Some(i);
        }
        covered.push(cov);
        outcomes.push(out);
    }
    let all_identical = outcomes.windows(2).all(|w| w[0] == w[1]);
    Ok(ReplayReport { mechanism: mechanism.name(), outcomes, covered, all_identical, first_break })
}
