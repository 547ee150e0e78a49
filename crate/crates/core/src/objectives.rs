//! Outlier-adjusted objectives, exact optimal solvers and a subset-enumeration
//! oracle.

use std::ops::RangeInclusive;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{Instance, ObjectiveKind};
use crate::rational::Rational;

/// Excluded prefix/suffix of the sorted profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Window {
    pub z_left: usize,
    pub z_right: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Evaluation {
    pub cost: Rational,
    pub window: Window,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OptimalSolution {
    pub location: Rational,
    pub cost: Rational,
    pub window: Window,
    pub alternates: Vec<Rational>,
}

impl OptimalSolution {
    /// Every optimal location the solver found, ascending.
    pub fn locations(&self) -> Vec<Rational> {
        let mut all = self.alternates.clone();
        all.push(self.location.clone());
        all.sort();
        all.dedup();
        all
    }
}

/// Cost of placing the facility at `y` when the `z` farthest agents are ignored.
pub fn eval_cost(instance: &Instance, y: &Rational, objective: ObjectiveKind) -> Evaluation {
    let profile = instance.profile();
    let s = profile.sorted_values();
    let (mut lo, mut hi) = (0usize, s.len() - 1);
    for _ in 0..instance.z() {
        if y.dist(&s[lo]) > y.dist(&s[hi]) {
            lo += 1;
        } else {
            hi -= 1;
        }
    }
    let window = Window { z_left: lo, z_right: s.len() - 1 - hi };
    let cost = match objective {
        ObjectiveKind::Utilitarian => {
            let split = lo + s[lo..=hi].partition_point(|v| v < y);
            let below = Rational::from(split - lo);
            let above = Rational::from(hi + 1 - split);
            let left = &(y * &below) - &profile.range_sum(lo, split);
            let right = &profile.range_sum(split, hi + 1) - &(y * &above);
            left + right
        }
        ObjectiveKind::Egalitarian => y.dist(&s[lo]).max(y.dist(&s[hi])),
    };
    Evaluation { cost, window }
}

/// 1-based ranks of the candidate optimal order statistics:
/// `ceil((n-z+1)/2) ..= ceil((n-z)/2) + z`.
pub fn candidate_ranks(n: usize, z: usize) -> RangeInclusive<usize> {
    let m = n - z;
    (m + 1).div_ceil(2)..=m.div_ceil(2) + z
}

struct Best {
    cost: Rational,
    location: Rational,
    z_left: usize,
}

fn finish(instance: &Instance, best: Best, mut found: Vec<(Rational, Rational)>) -> OptimalSolution {
    found.retain(|(c, loc)| *c == best.cost && *loc != best.location);
    let mut alternates: Vec<Rational> = found.into_iter().map(|(_, loc)| loc).collect();
    alternates.sort();
    alternates.dedup();
    OptimalSolution {
        location: best.location,
        cost: best.cost,
        window: Window { z_left: best.z_left, z_right: instance.z() - best.z_left },
        alternates,
    }
}

fn consider(best: &mut Option<Best>, cost: &Rational, location: &Rational, z_left: usize) {
    let better = match best {
        None => true,
        Some(b) => *cost < b.cost,
    };
    if better {
        *best = Some(Best { cost: cost.clone(), location: location.clone(), z_left });
    }
}

/// Exact utilitarian optimum: the best median over the `z+1` contiguous windows.
pub fn opt_utilitarian(instance: &Instance) -> OptimalSolution {
    let (n, z) = (instance.n(), instance.z());
    let m = n - z;
    let profile = instance.profile();
    let s = profile.sorted_values();
    debug_assert!(z == 0 || candidate_ranks(n, z).count() == if m % 2 == 0 { z } else { z + 1 });
    let half = m / 2;
    let mut best = None;
    let mut found = Vec::with_capacity(2 * (z + 1));
    for z_left in 0..=z {
        let end = z_left + m;
        let cost = &profile.range_sum(end - half, end) - &profile.range_sum(z_left, z_left + half);
        let left = &s[z_left + m.div_ceil(2) - 1];
        let right = &s[z_left + half];
        consider(&mut best, &cost, left, z_left);
        found.push((cost.clone(), left.clone()));
        found.push((cost, right.clone()));
    }
    finish(instance, best.expect("at least one window"), found)
}

/// Exact egalitarian optimum: the narrowest window's midpoint.
pub fn opt_egalitarian(instance: &Instance) -> OptimalSolution {
    let m = instance.n() - instance.z();
    let s = instance.profile().sorted_values();
    let two = Rational::from_integer(2);
    let mut best = None;
    let mut found = Vec::with_capacity(instance.z() + 1);
    for z_left in 0..=instance.z() {
        let (lo, hi) = (&s[z_left], &s[z_left + m - 1]);
        let cost = &(hi - lo) / &two;
        let mid = &(lo + hi) / &two;
        consider(&mut best, &cost, &mid, z_left);
        found.push((cost, mid));
    }
    finish(instance, best.expect("at least one window"), found)
}

pub fn optimum(instance: &Instance, objective: ObjectiveKind) -> OptimalSolution {
    match objective {
        ObjectiveKind::Utilitarian => opt_utilitarian(instance),
        ObjectiveKind::Egalitarian => opt_egalitarian(instance),
    }
}

pub const ORACLE_MAX_N: usize = 14;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BruteForceSolution {
    pub location: Rational,
    pub cost: Rational,
    /// Original indices of the retained agents.
    pub subset: Vec<usize>,
    /// Set when the retained multiset equals some window of the sorted profile.
    pub window: Option<Window>,
    pub contiguous: bool,
}

/// Visits every `k`-subset of `0..n` as a bitmask.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(u32)) {
    if k == 0 {
        f(0);
        return;
    }
    let limit = 1u32 << n;
    let mut mask: u32 = (1 << k) - 1;
    while mask < limit {
        f(mask);
        let low = mask & mask.wrapping_neg();
        let ripple = mask + low;
        mask = (((ripple ^ mask) >> 2) / low) | ripple;
    }
}

fn check_oracle_size(n: usize) -> Result<()> {
    if n > ORACLE_MAX_N {
        Err(Error::TooLarge { n, max: ORACLE_MAX_N })
    } else {
        Ok(())
    }
}

/// Optimum over all retained subsets, each solved on its own.
pub fn brute_force_opt(instance: &Instance, objective: ObjectiveKind) -> Result<BruteForceSolution> {
    let n = instance.n();
    check_oracle_size(n)?;
    let m = n - instance.z();
    let x = instance.locations();
    let two = Rational::from_integer(2);
    let mut all: Vec<&Rational> = x.iter().collect();
    all.sort();
    let window_of = |retained: &[&Rational]| {
        (0..=n - m)
            .find(|&start| all[start..start + m] == retained[..])
            .map(|start| Window { z_left: start, z_right: n - m - start })
    };
    // ties prefer a contiguous subset, then the smaller location
    let mut best: Option<(Rational, bool, Rational, u32)> = None;
    for_each_subset(n, m, |mask| {
        let mut vals: Vec<&Rational> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| &x[i]).collect();
        vals.sort();
        let (location, cost) = match objective {
            ObjectiveKind::Utilitarian => {
                let med = vals[m.div_ceil(2) - 1].clone();
                let cost: Rational = vals.iter().map(|v| v.dist(&med)).sum();
                (med, cost)
            }
            ObjectiveKind::Egalitarian => {
                let (lo, hi) = (vals[0], vals[m - 1]);
                (&(lo + hi) / &two, &(hi - lo) / &two)
            }
        };
        if best.as_ref().is_some_and(|(c, _, _, _)| cost > *c) {
            return;
        }
        let gap = window_of(&vals).is_none();
        let better = match &best {
            None => true,
            Some((c, g, l, _)) => cost < *c || (!gap && *g) || (gap == *g && location < *l),
        };
        if better {
            best = Some((cost, gap, location, mask));
        }
    });
    let (cost, _, location, mask) = best.expect("some subset");
    let subset: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
    let mut retained: Vec<&Rational> = subset.iter().map(|&i| &x[i]).collect();
    retained.sort();
    let window = window_of(&retained);
    Ok(BruteForceSolution { location, cost, subset, contiguous: window.is_some(), window })
}

/// Cost at a fixed `y`, minimised over all retained subsets.
pub fn eval_oracle(instance: &Instance, y: &Rational, objective: ObjectiveKind) -> Result<Rational> {
    let n = instance.n();
    check_oracle_size(n)?;
    let dists: Vec<Rational> = instance.locations().iter().map(|x| x.dist(y)).collect();
    let mut best: Option<Rational> = None;
    for_each_subset(n, n - instance.z(), |mask| {
        let picked = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| &dists[i]);
        let cost = match objective {
            ObjectiveKind::Utilitarian => picked.sum(),
            ObjectiveKind::Egalitarian => picked.max().cloned().unwrap_or_default(),
        };
        if best.as_ref().is_none_or(|b| cost < *b) {
            best = Some(cost);
        }
    });
    Ok(best.expect("some subset"))
}
