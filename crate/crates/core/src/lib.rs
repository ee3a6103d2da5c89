//! One-dimensional quantum-fluid laboratory.
//!
//! Wavefunctions are evolved exactly in an energy eigenbasis, split into
//! Madelung fluid fields (`ψ = R e^{iS}`), and every momentum and energy
//! density is audited for local conservation on the grid.
//!
//! Units are natural throughout: `ħ = m = L = 1`. Energies are in `ħ²/mL²`,
//! times in `mL²/ħ`, momenta in `ħ/L`.

pub mod audit;
pub mod error;
pub mod export;
pub mod madelung;
pub mod numerics;
pub mod pipeline;
pub mod scenarios;
pub mod spectral;
pub mod state;
pub mod streamlines;

pub use error::{Error, Result};
pub use numerics::{ComplexField, RealField, SpatialGrid};
pub use madelung::{CurrentMode, CurrentVariant, FrameAnalysis};
pub use pipeline::{prepare, run, run_audit, run_calibration, Prepared, RunOptions};
pub use scenarios::ScenarioConfig;
pub use spectral::{BasisKind, PotentialSpec, SpectralBasis};
pub use state::{EikonalFields, Wavefunction};
