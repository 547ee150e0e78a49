//! Single-facility location on the line when up to `z` agents may be
//! ignored as outliers.
//!
//! The crate provides exact rational arithmetic, optimal solvers for the
//! utilitarian and egalitarian objectives, the strategyproof mechanisms
//! (order statistics, phantom medians, the randomized median and the
//! prediction-augmented In-Range rule), their approximation guarantees, and
//! a harness that audits strategyproofness and approximation ratios.

pub mod cli;
pub mod error;
pub mod instance;
pub mod mechanisms;
pub mod objectives;
pub mod predictions;
pub mod rational;
pub mod verification;

pub use error::{Error, Result};
pub use instance::{parse_instance, parse_instance_doc, Instance, InstanceDoc, ObjectiveKind, SortedProfile};
pub use mechanisms::{Mechanism, MechanismSpec, Outcome, RandomizedOutcome};
pub use objectives::{eval_cost, opt_egalitarian, opt_utilitarian, Evaluation, OptimalSolution, Window};
pub use rational::{Extended, Rational};
