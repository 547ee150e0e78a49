//! Parallel ratio sweeps over seeded random instances.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::instance::{Instance, ObjectiveKind};
use crate::mechanisms::MechanismSpec;
use crate::objectives::optimum;
use crate::rational::{Extended, Rational};
use crate::verification::random::{derive_seed, gen_random, RandomModel, GRID};
use crate::verification::ratio::measure_ratio;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionModel {
    None,
    /// The solver's optimal location for the sweep objective.
    Perfect,
    /// A grid point of [-1, 2], independent of the profile.
    Arbitrary,
}

impl fmt::Display for PredictionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PredictionModel::None => "none",
            PredictionModel::Perfect => "perfect",
            PredictionModel::Arbitrary => "arbitrary",
        })
    }
}

impl FromStr for PredictionModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(PredictionModel::None),
            "perfect" => Ok(PredictionModel::Perfect),
            "arbitrary" | "random" => Ok(PredictionModel::Arbitrary),
            other => Err(Error::Malformed(format!("unknown prediction model {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: usize,
    pub z: usize,
    pub model: RandomModel,
    pub prediction: PredictionModel,
}

impl GeneratorSpec {
    pub fn new(n: usize, z: usize, model: RandomModel) -> Self {
        GeneratorSpec { n, z, model, prediction: PredictionModel::None }
    }

    pub fn with_prediction(mut self, prediction: PredictionModel) -> Self {
        self.prediction = prediction;
        self
    }

    /// The instance for one seed.
    pub fn generate(&self, seed: u64, objective: ObjectiveKind) -> Result<Instance> {
        let inst = gen_random(self.n, self.z, self.model, seed)?;
        let prediction = match self.prediction {
            PredictionModel::None => None,
            PredictionModel::Perfect => Some(optimum(&inst, objective).location),
            PredictionModel::Arbitrary => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::MAX));
                Some(Rational::new(rng.random_range(-GRID..=2 * GRID), GRID))
            }
        };
        Ok(inst.with_prediction(prediction))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub mechanism: MechanismSpec,
    pub objective: ObjectiveKind,
    pub generator: GeneratorSpec,
    pub count: usize,
    pub seed: u64,
    pub workers: usize,
}

/// One CSV line of a sweep.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SweepRow {
    pub seed: u64,
    pub n: usize,
    pub z: usize,
    pub family: String,
    pub mechanism: String,
    pub objective: ObjectiveKind,
    pub mech_cost: Extended,
    pub opt_cost: Rational,
    pub ratio: Extended,
    pub bound: Extended,
    pub within_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub count: usize,
    pub max_ratio: Extended,
    /// Smallest index attaining `max_ratio`.
    pub argmax_index: Option<usize>,
    pub argmax_seed: Option<u64>,
    pub argmax_instance: Option<Value>,
    /// Largest guarantee looked up over the sweep.
    pub bound: Extended,
    pub out_of_bound: usize,
    pub all_within_bound: bool,
    #[serde(skip)]
    pub rows: Vec<SweepRow>,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameters(format!("cannot start worker pool: {e}")))
}

/// Measures the ratio on `count` instances. The report is the same for any
/// worker count: each instance's seed depends only on its index and rows
/// are kept in index order.
pub fn sweep(config: &SweepConfig) -> Result<SweepReport> {
    let family = config.generator.model.to_string();
    let mechanism = config.mechanism.to_string();
    let one = |index: usize| -> Result<(SweepRow, Instance)> {
        let seed = derive_seed(config.seed, index as u64);
        let inst = config.generator.generate(seed, config.objective)?;
        let rep = measure_ratio(&config.mechanism, &inst, config.objective)?;
        let row = SweepRow {
            seed,
            n: inst.n(),
            z: inst.z(),
            family: family.clone(),
            mechanism: mechanism.clone(),
            objective: config.objective,
            mech_cost: rep.mechanism_cost,
            opt_cost: rep.opt_cost,
            ratio: rep.ratio,
            bound: rep.bound,
            within_bound: rep.within_bound,
        };
        Ok((row, inst))
    };
    let results: Vec<Result<(SweepRow, Instance)>> =
        pool(config.workers)?.install(|| (0..config.count).into_par_iter().map(one).collect());

    let mut rows = Vec::with_capacity(config.count);
    let mut best: Option<(usize, Instance)> = None;
    let mut max_ratio = Extended::NegInf;
    let mut bound = Extended::NegInf;
    for (index, res) in results.into_iter().enumerate() {
        let (row, inst) = res?;
        if row.ratio > max_ratio {
            max_ratio = row.ratio.clone();
            best = Some((index, inst));
        }
        bound = bound.max(row.bound.clone());
        rows.push(row);
    }
    let out_of_bound = rows.iter().filter(|r| !r.within_bound).count();
    let argmax_seed = best.as_ref().map(|(i, _)| rows[*i].seed);
    Ok(SweepReport {
        count: rows.len(),
        max_ratio,
        argmax_index: best.as_ref().map(|(i, _)| *i),
        argmax_seed,
        argmax_instance: best.map(|(_, inst)| inst.to_json(Some(config.objective))),
        bound,
        out_of_bound,
        all_within_bound: out_of_bound == 0,
        rows,
    })
}

/// Writes rows with a header line.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Malformed(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::Malformed(format!("csv: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(mechanism: MechanismSpec, objective: ObjectiveKind, generator: GeneratorSpec, count: usize) -> SweepConfig {
        SweepConfig { mechanism, objective, generator, count, seed: 2024, workers: 2 }
    }

    #[test]
    fn left_median_stays_below_its_bound() {
        let cfg = config(
            MechanismSpec::LeftMedian,
            ObjectiveKind::Utilitarian,
            GeneratorSpec::new(8, 3, RandomModel::Uniform),
            500,
        );
        let rep = sweep(&cfg).unwrap();
        assert!(rep.all_within_bound);
        assert!(rep.max_ratio <= Extended::Finite(Rational::from_integer(4)));
        assert_eq!(rep.count, 500);
    }

    #[test]
    fn left_z_egalitarian_within_two() {
        let cfg = config(MechanismSpec::LeftZ, ObjectiveKind::Egalitarian, GeneratorSpec::new(7, 3, RandomModel::Uniform), 500);
        let rep = sweep(&cfg).unwrap();
        assert!(rep.max_ratio <= Extended::Finite(Rational::from_integer(2)));
    }

    #[test]
    fn perfect_predictions_are_optimal() {
        let generator = GeneratorSpec::new(9, 3, RandomModel::Clustered).with_prediction(PredictionModel::Perfect);
        let cfg = config(MechanismSpec::InRange { gamma: 0 }, ObjectiveKind::Utilitarian, generator, 300);
        assert_eq!(sweep(&cfg).unwrap().max_ratio, Extended::Finite(Rational::one()));
    }

    #[test]
    fn worker_count_does_not_matter() {
        let generator = GeneratorSpec::new(6, 2, RandomModel::Uniform).with_prediction(PredictionModel::Arbitrary);
        let mut cfg = config(MechanismSpec::InRange { gamma: 0 }, ObjectiveKind::Utilitarian, generator, 200);
        cfg.workers = 1;
        let a = sweep(&cfg).unwrap();
        cfg.workers = 4;
        let b = sweep(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn csv_has_the_documented_columns() {
        let cfg = config(MechanismSpec::RandMedian, ObjectiveKind::Utilitarian, GeneratorSpec::new(4, 1, RandomModel::Uniform), 3);
        let rep = sweep(&cfg).unwrap();
        let mut buf = Vec::new();
        write_csv(&rep.rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "seed,n,z,family,mechanism,objective,mech_cost,opt_cost,ratio,bound,within_bound"
        );
        assert_eq!(lines.count(), 3);
    }
}
