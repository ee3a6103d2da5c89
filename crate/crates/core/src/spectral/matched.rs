use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::basis::{BasisKind, SpectralBasis};
use super::potential::{DoubleWell, PotentialSpec};
use crate::error::{Error, Result};
use crate::numerics::{find_root, integrate, ComplexField, SpatialGrid};

/// Energy scan resolution used to bracket matched eigenvalues.
const SCAN_POINTS: usize = 4000;
const ROOT_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

/// Sub-barrier eigenstate of a symmetric double well.
///
/// Even: `A sin(k(x+L))` left, `B cosh(κx)` inside, `A sin(k(L−x))` right.
/// Odd: `C sin(k(x+L))` left, `D sinh(κx)` inside, `−C sin(k(L−x))` right.
/// `outer` holds A or C, `inner` holds B or D, normalized analytically.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchedState {
    pub well: DoubleWell,
    pub parity: Parity,
    pub energy: f64,
    pub k: f64,
    pub kappa: f64,
    pub outer: f64,
    pub inner: f64,
}

/// `cosh(y)e^{-y}` and `sinh(y)e^{-y}` without overflow.
fn scaled_hyperbolic(y: f64) -> (f64, f64) {
    let e = (-2.0 * y).exp();
    (0.5 * (1.0 + e), 0.5 * (1.0 - e))
}

/// Continuity determinant of ψ and ψ′ at `x = a`, scaled by `e^{−κa}`.
///
/// Even: `k cos(kw) cosh(κa) + κ sin(kw) sinh(κa)`, odd swaps cosh and sinh,
/// with `w = L − a`. Pole-free in `E`.
pub fn matching_determinant(well: &DoubleWell, parity: Parity, energy: f64) -> f64 {
    let k = (2.0 * energy).sqrt();
    let kappa = (2.0 * (well.barrier_height - energy)).sqrt();
    let w = well.half_width - well.barrier_half_width;
    let (c, s) = scaled_hyperbolic(kappa * well.barrier_half_width);
    let (cw, sw) = ((k * w).cos(), (k * w).sin());
    match parity {
        Parity::Even => k * cw * c + kappa * sw * s,
        Parity::Odd => k * cw * s + kappa * sw * c,
    }
}

impl MatchedState {
    fn build(well: DoubleWell, parity: Parity, energy: f64) -> Self {
        let k = (2.0 * energy).sqrt();
        let kappa = (2.0 * (well.barrier_height - energy)).sqrt();
        let a = well.barrier_half_width;
        let w = well.half_width - a;
        let sw = (k * w).sin();
        let outer_norm = 2.0 * (0.5 * w - (2.0 * k * w).sin() / (4.0 * k));
        let (inner, inner_norm) = match parity {
            Parity::Even => {
                let b = sw / (kappa * a).cosh();
                (b, b * b * (a + (2.0 * kappa * a).sinh() / (2.0 * kappa)))
            }
            Parity::Odd => {
                let d = -sw / (kappa * a).sinh();
                (d, d * d * ((2.0 * kappa * a).sinh() / (2.0 * kappa) - a))
            }
        };
        let scale = (outer_norm + inner_norm).sqrt().recip();
        Self { well, parity, energy, k, kappa, outer: scale, inner: inner * scale }
    }

    /// Analytic value at `x`.
    pub fn value(&self, x: f64) -> f64 {
        let (l, a) = (self.well.half_width, self.well.barrier_half_width);
        if x <= -a {
            self.outer * (self.k * (x + l)).sin()
        } else if x >= a {
            let right = self.outer * (self.k * (l - x)).sin();
            match self.parity {
                Parity::Even => right,
                Parity::Odd => -right,
            }
        } else {
            match self.parity {
                Parity::Even => self.inner * (self.kappa * x).cosh(),
                Parity::Odd => self.inner * (self.kappa * x).sinh(),
            }
        }
    }

    /// Samples on `grid`, renormalized by the grid quadrature.
    pub fn sample(&self, grid: &Arc<SpatialGrid>) -> ComplexField {
        let mut f = ComplexField::from_fn(grid, |x| Complex64::new(self.value(x), 0.0));
        let last = f.values().len() - 1;
        f.values_mut()[0] = Complex64::default();
        f.values_mut()[last] = Complex64::default();
        let norm = integrate(&f.norm_sqr());
        &f * norm.sqrt().recip()
    }
}

fn require_double_well(p: &PotentialSpec) -> Result<DoubleWell> {
    p.as_double_well().ok_or_else(|| {
        Error::Domain("matched solver needs a symmetric box with a centred barrier".into())
    })
}

/// Root of the matching determinant for one parity inside `bracket`.
pub fn solve_matched_eigens(p: &PotentialSpec, parity: Parity, bracket: (f64, f64)) -> Result<MatchedState> {
    let well = require_double_well(p)?;
    solve_in_bracket(&well, parity, bracket)
}

fn solve_in_bracket(well: &DoubleWell, parity: Parity, bracket: (f64, f64)) -> Result<MatchedState> {
    let u0 = well.barrier_height;
    if bracket.1 >= u0 || bracket.0 >= u0 {
        return Err(Error::Domain(format!(
            "bracket [{}, {}] reaches the barrier height {u0}; above-barrier states are not matched",
            bracket.0, bracket.1
        )));
    }
    if !(bracket.0 > 0.0 && bracket.1 > bracket.0) {
        return Err(Error::Parameter(format!("invalid energy bracket [{}, {}]", bracket.0, bracket.1)));
    }
    let e = find_root(|e| matching_determinant(well, parity, e), bracket.0, bracket.1, ROOT_TOL)?;
    Ok(MatchedState::build(*well, parity, e))
}

/// All sub-barrier states of one parity, ascending.
fn states_of_parity(well: &DoubleWell, parity: Parity) -> Result<Vec<MatchedState>> {
    let u0 = well.barrier_height;
    let de = u0 / SCAN_POINTS as f64;
    let top = u0 * (1.0 - 1e-12);
    let mut out = Vec::new();
    let mut e0 = de * 1e-6;
    let mut f0 = matching_determinant(well, parity, e0);
    for i in 1..=SCAN_POINTS {
        let e1 = (i as f64 * de).min(top);
        let f1 = matching_determinant(well, parity, e1);
        if f0 == 0.0 {
            out.push(MatchedState::build(*well, parity, e0));
        } else if f0.signum() != f1.signum() && f1 != 0.0 {
            out.push(solve_in_bracket(well, parity, (e0, e1))?);
        }
        e0 = e1;
        f0 = f1;
    }
    Ok(out)
}

/// The lowest `count` sub-barrier states of both parities, ascending.
pub fn matched_states(well: &DoubleWell, count: usize) -> Result<Vec<MatchedState>> {
    let mut all = states_of_parity(well, Parity::Even)?;
    all.extend(states_of_parity(well, Parity::Odd)?);
    all.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    if all.len() < count {
        return Err(Error::Domain(format!(
            "only {} sub-barrier states below U0 = {}, {count} requested",
            all.len(),
            well.barrier_height
        )));
    }
    all.truncate(count);
    Ok(all)
}

/// Lowest `n_states` matched eigenstates sampled on `grid`.
pub fn matched_basis(p: &PotentialSpec, grid: &Arc<SpatialGrid>, n_states: usize) -> Result<SpectralBasis> {
    let well = require_double_well(p)?;
    let states = matched_states(&well, n_states)?;
    let energies = states.iter().map(|s| s.energy).collect();
    let sampled = states.iter().map(|s| s.sample(grid)).collect();
    Ok(SpectralBasis::new(BasisKind::Matched, grid.clone(), energies, sampled, states))
}
