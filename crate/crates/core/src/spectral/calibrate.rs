use serde::{Deserialize, Serialize};

use super::matched::{matched_states, Parity};
use super::potential::DoubleWell;
use crate::error::{Error, Result};
use crate::numerics::golden_section_minimize;

/// Largest eigenvalue error a calibration may accept.
pub const CALIBRATION_TOLERANCE: f64 = 0.01;
const SCAN_POINTS: usize = 256;

/// Barrier half-width reproducing two target eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierCalibration {
    pub barrier_half_width: f64,
    pub e1: f64,
    pub e2: f64,
    pub err1: f64,
    pub err2: f64,
}

impl BarrierCalibration {
    pub fn max_error(&self) -> f64 {
        self.err1.max(self.err2)
    }
}

/// Ground (even) and first excited (odd) energies for barrier half-width `a`.
pub fn lowest_pair(half_width: f64, a: f64, u0: f64) -> Option<(f64, f64)> {
    let well = DoubleWell { half_width, barrier_half_width: a, barrier_height: u0 };
    let states = matched_states(&well, 2).ok()?;
    match (states[0].parity, states[1].parity) {
        (Parity::Even, Parity::Odd) => Some((states[0].energy, states[1].energy)),
        _ => None,
    }
}

fn evaluate(half_width: f64, a: f64, u0: f64, targets: (f64, f64)) -> Option<BarrierCalibration> {
    let (e1, e2) = lowest_pair(half_width, a, u0)?;
    Some(BarrierCalibration {
        barrier_half_width: a,
        e1,
        e2,
        err1: (e1 - targets.0).abs(),
        err2: (e2 - targets.1).abs(),
    })
}

/// Finds `a ∈ (0, L)` minimizing `max(|E₁ − E₁*|, |E₂ − E₂*|)` for barrier height `u0`.
///
/// A uniform scan locates the best cell, golden-section search refines it.
/// Fails when the best value misses either target by more than 0.01.
pub fn calibrate_barrier(half_width: f64, u0: f64, targets: (f64, f64)) -> Result<BarrierCalibration> {
    if !(half_width > 0.0 && u0 > 0.0) {
        return Err(Error::Parameter(format!("need L > 0 and U0 > 0, got L = {half_width}, U0 = {u0}")));
    }
    let objective = |a: f64| {
        evaluate(half_width, a, u0, targets).map(|c| c.max_error()).unwrap_or(f64::INFINITY)
    };
    let step = half_width / SCAN_POINTS as f64;
    let scan: Vec<f64> = (1..SCAN_POINTS).map(|i| objective(i as f64 * step)).collect();
    let (best, _) = scan
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty scan");
    let centre = (best + 1) as f64 * step;
    let (a, _) = golden_section_minimize(objective, centre - step, centre + step, 1e-13);
    let cal = evaluate(half_width, a, u0, targets).ok_or(Error::Calibration {
        best_a: a,
        err1: f64::INFINITY,
        err2: f64::INFINITY,
    })?;
    if cal.max_error() > CALIBRATION_TOLERANCE || u0 <= targets.1 {
        return Err(Error::Calibration { best_a: a, err1: cal.err1, err2: cal.err2 });
    }
    Ok(cal)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn targets_are_reached_within_tolerance() {
        let c = calibrate_barrier(1.0, 15.0, (3.22, 5.02)).unwrap();
        assert!(c.max_error() <= CALIBRATION_TOLERANCE);
        assert!((0.09..0.11).contains(&c.barrier_half_width));
        // The minimax optimum balances both errors.
        assert!((c.err1 - c.err2).abs() < 1e-6);
    }

    #[test]
    fn unreachable_targets_fail() {
        assert!(matches!(calibrate_barrier(1.0, 15.0, (1.0, 9.0)), Err(Error::Calibration { .. })));
        assert!(calibrate_barrier(1.0, 0.0, (3.22, 5.02)).is_err());
    }

    #[test]
    fn lowest_pair_is_even_then_odd() {
        let (e1, e2) = lowest_pair(1.0, 0.1, 15.0).unwrap();
        assert!(e1 < e2 && e2 < 15.0);
    }
}
