//! Strategyproofness audits, approximation ratios, adversarial profile
//! families, random generators and sweeps.

pub mod families;
pub mod random;
pub mod ratio;
pub mod sp;
pub mod sweep;

pub use families::{
    family_sequence, gen_family, replay_sequence, sequence_length, Family, LotteryFixture, MedianProfile,
    ReplayReport, SequenceStep,
};
pub use random::{derive_seed, gen_random, gen_random_any, RandomModel};
pub use ratio::{guarantee, measure_ratio, ratio_of, report_for, RatioReport};
pub use sp::{
    check_corollary_path, check_sp_deterministic, check_sp_in_expectation, default_grid, DeviationSet,
    ViolationCertificate,
};
pub use sweep::{sweep, write_csv, GeneratorSpec, PredictionModel, SweepConfig, SweepReport, SweepRow};
