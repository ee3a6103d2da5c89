//! Finite-difference calculus, quadrature, root finding and ODE stepping on
//! uniform grids.

mod calculus;
mod field;
mod grid;
mod ode;
mod roots;

pub use calculus::{cumulative_integral, gradient, integrate, integrate_window, laplacian};
pub use field::{ComplexField, Field, RealField, Scalar};
pub use grid::{Segment, SpatialGrid, MIN_SEGMENT_POINTS};
pub use ode::{interpolate_uniform, rk4_step};
pub use roots::{find_root, golden_section_minimize};
