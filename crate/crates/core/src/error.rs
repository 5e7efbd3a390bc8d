use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// The input field carries no usable signal (for example, every node is masked).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("insufficient data: {what} needs at least {needed}, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    /// The density at a point is below the guard and the Bohmian velocity is undefined there.
    #[error("singular point at x = {x:e} m, z = {z:e} m (rho = {rho:e})")]
    SingularPoint { x: f64, z: f64, rho: f64 },

    #[error("trajectory {id} failed at z = {z:e} m: {source}")]
    Trajectory {
        id: usize,
        z: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("ensemble error: {0}")]
    Ensemble(String),

    /// Spectral propagation wrapped a measurable fraction of the norm onto the grid edge.
    #[error("spectral domain too small: edge norm fraction {edge_fraction:e} at z = {z:e} m")]
    DomainTooSmall { edge_fraction: f64, z: f64 },

    #[error("quadrature did not converge: estimate {estimate_re:e}{estimate_im:+e}i, error {achieved:e} > {requested:e}")]
    Tolerance {
        estimate_re: f64,
        estimate_im: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("resource error: {0}")]
    Resource(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
