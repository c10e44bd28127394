use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A path-loss model or scenario description failed validation.
    #[error("invalid model: {0}")]
    Model(String),

    /// A semi-infinite integral does not converge for the given model.
    #[error("divergent integral: {0}")]
    Divergent(String),

    /// Adaptive quadrature ran out of subdivisions before meeting its tolerance.
    #[error(
        "quadrature did not converge on [{lower}, {upper}]: estimate {estimate:e} with error {error:e} after {subdivisions} subdivisions"
    )]
    Quadrature {
        lower: f64,
        upper: f64,
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    /// An ASE curve does not decay, so its tail integral is unbounded.
    #[error("coverage curve tail does not decay: p({gamma_max}) = {value}")]
    CurveTail { gamma_max: f64, value: f64 },

    /// A design problem has no feasible point inside the searched range.
    #[error("no solution in [{lower}, {upper}]: residual gap {residual_gap}")]
    NoSolution {
        lower: f64,
        upper: f64,
        residual_gap: f64,
    },

    /// The simulator could not place a single base station in its window.
    #[error("simulation failed: {0}")]
    Simulation(String),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
