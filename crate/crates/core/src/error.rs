use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid mode index {0}, expected 1 or 2")]
    InvalidMode(usize),

    #[error("no harmonic lattice minimum: alpha1*theta1 + 4*alpha2*theta2 = {0} < 0")]
    NegativeTrapCurvature(f64),

    #[error("non-finite state in trajectory {trajectory} at t = {time} (1/omega_r)")]
    NonFinite { trajectory: usize, time: f64 },

    #[error("integrator stability guard violated: {0}")]
    Unstable(String),

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("no output-grid points in averaging window [{0}, {1}]")]
    EmptyWindow(f64, f64),

    #[error("degenerate momentum distribution (zero second moment)")]
    DegenerateMomenta,

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("all {0} trajectories failed")]
    AllTrajectoriesFailed(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
