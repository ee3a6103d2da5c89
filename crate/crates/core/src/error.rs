use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid: {0}")]
    Grid(String),

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    Bracketing { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("position {x} left the domain [{min}, {max}]")]
    OutOfDomain { x: f64, min: f64, max: f64 },

    #[error("position {x} at time {t} is inside a node exclusion zone")]
    NodeRegion { x: f64, t: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("wavefunction: {0}")]
    State(String),

    #[error("every grid point is below the node threshold")]
    DegenerateState,

    #[error("eigensolver did not converge for state {state} after {iterations} iterations (residual {residual:e})")]
    EigenSolver { state: usize, iterations: usize, residual: f64 },

    #[error("outside the supported domain: {0}")]
    Domain(String),

    #[error("barrier calibration failed: best a = {best_a}, errors ({err1:e}, {err2:e})")]
    Calibration { best_a: f64, err1: f64, err2: f64 },

    #[error("projection residual {residual:e} exceeds bound {bound:e} with {n_states} states")]
    Truncation { residual: f64, bound: f64, n_states: usize },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for configuration problems, 3 for numeric ones.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) | Error::Parse { .. } | Error::Io(_) | Error::Parameter(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_split_configuration_from_numerics() {
        assert_eq!(Error::Config("x".into()).exit_code(), 2);
        assert_eq!(Error::Parse { path: "a".into(), message: "b".into() }.exit_code(), 2);
        assert_eq!(Error::Numeric("x".into()).exit_code(), 3);
        assert_eq!(Error::DegenerateState.exit_code(), 3);
    }
}
