use thiserror::Error;

use crate::hamiltonian::Level;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("integration failed at t = {time}: step size {step:e} underflowed")]
    IntegrationFailure { time: f64, step: f64 },

    #[error("stationary manifold is {dimension}-dimensional; steady state is not unique")]
    MultipleSteadyStates { dimension: usize },

    #[error("linear system is singular")]
    SingularSystem,

    #[error("probe Rabi frequency is zero; probe response is undefined")]
    ZeroProbe,

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("jump probability per step {dp:.4} exceeds 0.1; reduce dt")]
    StepTooLarge { dp: f64 },

    #[error("no complete coherent periods to build statistics from")]
    EmptyStatistics,

    #[error("all departure rates are zero")]
    AllRatesZero,

    #[error("start-level chain has no unique stationary distribution")]
    DegenerateChain,

    #[error("amplitude integral for ({from:?} -> {to:?}) diverges: a non-decaying mode contributes")]
    DivergentIntegral { from: Level, to: Level },

    #[error("quadrature did not converge (estimated error {estimate:e})")]
    QuadratureFailure { estimate: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Parse(String),
}
