use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matched::MatchedState;
use crate::error::{Error, Result};
use crate::numerics::{integrate, ComplexField, SpatialGrid};
use crate::state::Wavefunction;

/// Default bound on `1 − Σ|c_n|²` accepted by [`project`].
pub const DEFAULT_TRUNCATION_BOUND: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// Piecewise-analytic eigenstates of a symmetric double well.
    Matched,
    /// Eigenvectors of the tridiagonal finite-difference Hamiltonian.
    FiniteDifference,
}

/// Energy eigenstates on one grid, ascending in energy.
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    pub kind: BasisKind,
    pub energies: Vec<f64>,
    /// Real, orthonormal under the trapezoidal inner product.
    pub states: Vec<ComplexField>,
    /// Wavenumbers and matching coefficients; empty for finite-difference bases.
    pub matched: Vec<MatchedState>,
    grid: Arc<SpatialGrid>,
}

impl SpectralBasis {
    pub fn new(
        kind: BasisKind,
        grid: Arc<SpatialGrid>,
        energies: Vec<f64>,
        states: Vec<ComplexField>,
        matched: Vec<MatchedState>,
    ) -> Self {
        Self { kind, energies, states, matched, grid }
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    /// `k_n = √(2E_n)`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        self.energies.iter().map(|&e| (2.0 * e).max(0.0).sqrt()).collect()
    }

    /// Keeps the lowest `n` states.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            kind: self.kind,
            energies: self.energies[..n].to_vec(),
            states: self.states[..n].to_vec(),
            matched: self.matched.iter().take(n).cloned().collect(),
            grid: self.grid.clone(),
        }
    }

    /// `⟨ψ_m|ψ_n⟩` by trapezoidal quadrature.
    pub fn overlap(&self, m: usize, n: usize) -> f64 {
        let f = self.states[m].zip_map(&self.states[n], |a, b| (a.conj() * b).re);
        integrate(&f)
    }
}

/// Expansion coefficients of a state in a basis.
#[derive(Clone, Debug)]
pub struct Projection {
    /// Rescaled so that `Σ|c_n|² = 1`.
    pub coeffs: Vec<Complex64>,
    /// `1 − Σ|c_n|²` before rescaling.
    pub residual: f64,
}

impl Projection {
    /// Energy expectation `Σ|c_n|² E_n`.
    pub fn energy(&self, basis: &SpectralBasis) -> f64 {
        self.coeffs.iter().zip(&basis.energies).map(|(c, e)| c.norm_sqr() * e).sum()
    }
}

fn inner(a: &ComplexField, b: &ComplexField) -> Complex64 {
    let re = integrate(&a.zip_map(b, |x, y| (x.conj() * y).re));
    let im = integrate(&a.zip_map(b, |x, y| (x.conj() * y).im));
    Complex64::new(re, im)
}

/// `c_n = ⟨ψ_n|ψ₀⟩`; fails when the truncation residual exceeds `bound`.
pub fn project(psi0: &Wavefunction, basis: &SpectralBasis, bound: f64) -> Result<Projection> {
    let mut coeffs: Vec<Complex64> = basis.states.iter().map(|s| inner(s, psi0.psi())).collect();
    let captured: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    let residual = psi0.norm() - captured;
    if residual > bound {
        return Err(Error::Truncation { residual, bound, n_states: basis.len() });
    }
    let scale = captured.sqrt().recip();
    for c in &mut coeffs {
        *c *= scale;
    }
    Ok(Projection { coeffs, residual })
}

/// Smallest prefix of `basis` whose projection residual is below `bound`.
pub fn project_minimal(psi0: &Wavefunction, basis: &SpectralBasis, bound: f64) -> Result<(usize, Projection)> {
    let all: Vec<Complex64> = basis.states.iter().map(|s| inner(s, psi0.psi())).collect();
    let norm = psi0.norm();
    let mut captured = 0.0;
    for (n, c) in all.iter().enumerate() {
        captured += c.norm_sqr();
        if norm - captured < bound {
            let scale = captured.sqrt().recip();
            let coeffs = all[..=n].iter().map(|c| c * scale).collect();
            return Ok((n + 1, Projection { coeffs, residual: norm - captured }));
        }
    }
    Err(Error::Truncation { residual: norm - captured, bound, n_states: basis.len() })
}

/// ψ and ∂ψ/∂t at one instant from exact spectral evolution.
#[derive(Clone, Debug)]
pub struct SpectralFrame {
    pub psi: Wavefunction,
    pub psi_t: ComplexField,
}

fn superpose(basis: &SpectralBasis, weights: impl Iterator<Item = Complex64>) -> ComplexField {
    let mut acc = vec![Complex64::default(); basis.grid.storage_len()];
    for (state, w) in basis.states.iter().zip(weights) {
        for (a, s) in acc.iter_mut().zip(state.values()) {
            *a += w * s.re;
        }
    }
    ComplexField::from_storage(&basis.grid, acc).expect("storage length")
}

/// `ψ(t) = Σ c_n e^{−iE_n t} ψ_n`.
pub fn evolve(basis: &SpectralBasis, coeffs: &[Complex64], t: f64) -> Result<Wavefunction> {
    let phases = phases(basis, coeffs, t);
    Wavefunction::new(superpose(basis, phases.iter().copied()), t)
}

/// ψ(t) together with `∂ψ/∂t = Σ c_n (−iE_n) e^{−iE_n t} ψ_n`.
pub fn evolve_frame(basis: &SpectralBasis, coeffs: &[Complex64], t: f64) -> Result<SpectralFrame> {
    let phases = phases(basis, coeffs, t);
    let psi = Wavefunction::new(superpose(basis, phases.iter().copied()), t)?;
    let rates = phases.iter().zip(&basis.energies).map(|(c, &e)| c * Complex64::new(0.0, -e));
    let psi_t = superpose(basis, rates);
    Ok(SpectralFrame { psi, psi_t })
}

fn phases(basis: &SpectralBasis, coeffs: &[Complex64], t: f64) -> Vec<Complex64> {
    assert_eq!(coeffs.len(), basis.len(), "coefficient count must match basis size");
    coeffs
        .iter()
        .zip(&basis.energies)
        .map(|(c, &e)| c * Complex64::from_polar(1.0, -e * t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{matched_basis, solve_fd_eigens, PotentialSpec};

    fn tunneling_basis() -> SpectralBasis {
        let p = PotentialSpec::double_well(1.0, 103.0 / 1024.0, 15.0);
        matched_basis(&p, &p.grid(2049).unwrap(), 2).unwrap()
    }

    fn superposition(b: &SpectralBasis) -> Wavefunction {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Wavefunction::new(&(&b.states[0] * s) + &(&b.states[1] * s), 0.0).unwrap()
    }

    #[test]
    fn projection_recovers_superposition_weights() {
        let b = tunneling_basis();
        let proj = project(&superposition(&b), &b, DEFAULT_TRUNCATION_BOUND).unwrap();
        for c in &proj.coeffs {
            assert!((c.re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10 && c.im.abs() < 1e-12);
        }
        assert!(proj.residual.abs() < 1e-10);
        assert!((proj.energy(&b) - 0.5 * (b.energies[0] + b.energies[1])).abs() < 1e-10);
    }

    #[test]
    fn truncation_beyond_bound_is_an_error() {
        let b = tunneling_basis();
        let w = superposition(&b);
        let one = b.truncated(1);
        assert!(matches!(project(&w, &one, 1e-6), Err(Error::Truncation { .. })));
        let (n, p) = project_minimal(&w, &b, 1e-6).unwrap();
        assert_eq!(n, 2);
        assert_eq!(p.coeffs.len(), 2);
    }

    #[test]
    fn evolution_is_periodic_and_unitary() {
        let b = tunneling_basis();
        let c = project(&superposition(&b), &b, 1e-6).unwrap().coeffs;
        let period = 2.0 * std::f64::consts::PI / (b.energies[1] - b.energies[0]);
        let start = evolve(&b, &c, 0.0).unwrap().density();
        let later = evolve(&b, &c, period).unwrap().density();
        assert!((&later - &start).max_abs() < 1e-10);
        let mid = evolve(&b, &c, 0.37 * period).unwrap();
        assert!((mid.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn frame_rate_is_minus_i_h_psi() {
        let p = PotentialSpec::free_box(0.0, 1.0);
        let g = p.grid(257).unwrap();
        let b = solve_fd_eigens(&p, &g, 3).unwrap();
        let c = vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8), Complex64::default()];
        let dt = 1e-6;
        let f = evolve_frame(&b, &c, 0.2).unwrap();
        let ahead = evolve(&b, &c, 0.2 + dt).unwrap();
        let behind = evolve(&b, &c, 0.2 - dt).unwrap();
        for i in 0..g.storage_len() {
            let fd = (ahead.psi().values()[i] - behind.psi().values()[i]) / (2.0 * dt);
            assert!((fd - f.psi_t.values()[i]).norm() < 1e-4);
        }
    }

    #[test]
    fn wavenumbers_follow_energies() {
        let b = tunneling_basis();
        for (k, e) in b.wavenumbers().iter().zip(&b.energies) {
            assert!((k * k / 2.0 - e).abs() < 1e-12);
        }
        assert_eq!(b.kind, BasisKind::Matched);
        assert_eq!(b.matched.len(), 2);
    }
}
