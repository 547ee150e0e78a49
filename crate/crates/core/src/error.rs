use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("location list is empty")]
    EmptyProfile,
    #[error("outlier budget z={z} must lie in 0..={max}", max = .n.saturating_sub(1))]
    OutlierBudget { z: usize, n: usize },
    #[error("mechanism needs n >= 3 and 1 <= z <= (n-1)/2, got n={n}, z={z}")]
    Infeasible { n: usize, z: usize },
    #[error("order statistic k={k} outside 1..={n}")]
    IndexOutOfRange { k: usize, n: usize },
    #[error("expected {expected} phantom points, got {got}")]
    PhantomCount { expected: usize, got: usize },
    #[error("randomized median needs an even number of agents, got n={n}")]
    OddProfile { n: usize },
    #[error("gamma={gamma} exceeds gamma_max={max}")]
    GammaOutOfRange { gamma: usize, max: usize },
    #[error("mechanism requires a prediction")]
    MissingPrediction,
    #[error("profile too large for exhaustive enumeration: n={n} > {max}")]
    TooLarge { n: usize, max: usize },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("mechanism is randomized; use the in-expectation checker")]
    NotDeterministic,
}

pub type Result<T> = std::result::Result<T, Error>;
