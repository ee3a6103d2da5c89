//! Eigenstates of boxed piecewise-constant potentials and exact time evolution.

mod basis;
mod calibrate;
mod fd;
mod matched;
mod potential;

pub use basis::{
    evolve, evolve_frame, project, project_minimal, BasisKind, Projection, SpectralBasis, SpectralFrame,
    DEFAULT_TRUNCATION_BOUND,
};
pub use calibrate::{calibrate_barrier, lowest_pair, BarrierCalibration, CALIBRATION_TOLERANCE};
pub use fd::{solve_fd_eigens, solve_fd_eigens_sampled};
pub use matched::{matched_basis, matched_states, matching_determinant, solve_matched_eigens, MatchedState, Parity};
pub use potential::{DoubleWell, PotentialSegment, PotentialSpec};
