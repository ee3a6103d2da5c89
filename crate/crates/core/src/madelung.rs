//! Momentum, energy and power densities of the Madelung fluid, and the extra
//! energy current the quantum potential needs for local conservation.
//!
//! `∇·(R²∇S)` appears inside several nested derivatives. When exact time
//! rates are available it is taken as `−∂ρ/∂t` (the continuity equation),
//! which keeps the nested stencils at second order. Without rates it falls
//! back to differencing the current.

use serde::{Deserialize, Serialize};

use crate::numerics::{gradient, laplacian, ComplexField, RealField};
use crate::spectral::SpectralFrame;
use crate::state::{EikonalFields, TimeRates};

/// Quantum momentum density `p_q = R²∇S − iR∇R`.
#[derive(Clone, Debug)]
pub struct MomentumDensities {
    pub p_q: ComplexField,
    pub p_a: RealField,
    pub p_s: RealField,
}

pub fn momentum_densities(e: &EikonalFields) -> MomentumDensities {
    let p_a = e.current.clone();
    let p_s = -&e.amp_flux;
    let p_q = p_a.zip_map(&p_s, num_complex::Complex64::new);
    MomentumDensities { p_q, p_a, p_s }
}

/// Energy densities per unit length.
#[derive(Clone, Debug)]
pub struct EnergyDensities {
    /// `½ R² |∇S|²`.
    pub k_a: RealField,
    /// `½ |∇R|²`; `½|∇ψ|²` on nodes, its limit there.
    pub k_s: RealField,
    pub k_c: RealField,
    /// `−½ R ∇²R`.
    pub q: RealField,
    /// `−¼ ∇²ρ`.
    pub q_r: RealField,
    pub u: RealField,
    pub k_q: RealField,
    pub e: RealField,
    /// `q / ρ`, zero on nodes.
    pub q_per_particle: RealField,
    /// `q_r / ρ`, zero on nodes.
    pub q_r_per_particle: RealField,
}

fn ratio(num: &RealField, e: &EikonalFields) -> RealField {
    let mut out = num.zip_map(&e.rho, |a, r| if r > 0.0 { a / r } else { 0.0 });
    for (v, &m) in out.values_mut().iter_mut().zip(&e.node_mask) {
        if m {
            *v = 0.0;
        }
    }
    out
}

pub fn energy_densities(e: &EikonalFields, potential: &RealField) -> EnergyDensities {
    let k_a = ratio(&e.current.map(|j| 0.5 * j * j), e);
    // At a node R ≈ |ψ′||x − x₀|, so |∇R|² tends to |ψ′|² while k_a vanishes.
    let mut k_s = ratio(&e.amp_flux.map(|a| 0.5 * a * a), e);
    for ((v, &m), d) in k_s.values_mut().iter_mut().zip(&e.node_mask).zip(e.dpsi.values()) {
        if m {
            *v = 0.5 * d.norm_sqr();
        }
    }
    let k_c = &k_a + &k_s;
    let q = e.r_lapl_r.map(|v| -0.5 * v);
    let q_r = e.lapl_rho.map(|v| -0.25 * v);
    let u = &e.rho * potential;
    let k_q = &k_a + &q;
    let e_tot = &(&k_c + &q_r) + &u;
    let q_per_particle = ratio(&q, e);
    let q_r_per_particle = ratio(&q_r, e);
    EnergyDensities { k_a, k_s, k_c, q, q_r, u, k_q, e: e_tot, q_per_particle, q_r_per_particle }
}

/// Which part of the quantum potential the extra current is attached to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurrentVariant {
    /// Current carried with `q`.
    Q,
    /// Current carried with the reduced potential `q_r`.
    QR,
}

/// Whether the derived conservation current enters the exchange terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurrentMode {
    Derived,
    /// Negative control: current forced to zero.
    Zeroed,
}

/// The divergence-free remainder allowed in the conservation current.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceFreeChoice {
    Zero,
}

/// `∇·(R²∇S)`: `−∂ρ/∂t` when rates are known, the stencil divergence otherwise.
pub fn flux_divergence(e: &EikonalFields, rates: Option<&TimeRates>) -> RealField {
    match rates {
        Some(r) => -&r.rho_t,
        None => gradient(&e.current),
    }
}

/// `∂R/∂t`: exact from rates, otherwise `−∇·(R²∇S) / 2R`.
pub fn amplitude_rate(e: &EikonalFields, rates: Option<&TimeRates>) -> RealField {
    match rates {
        Some(r) => r.r_t.clone(),
        None => ratio(&(&gradient(&e.current) * -0.5), e).zip_map(&e.r, |v, r| v * r),
    }
}

/// Extra energy current through the fluid, `J = −½ ρ ∇(∇·(R²∇S) / 2ρ)`, with `F = 0`.
///
/// The same field closes the budget whether it is attributed to `q` or `q_r`,
/// because the two differ only by `k_s`, which flows with the fluid.
pub fn conservation_current(e: &EikonalFields, variant: CurrentVariant, rates: Option<&TimeRates>) -> RealField {
    let _ = variant;
    let x = flux_divergence(e, rates);
    let inner = ratio(&x, e);
    let g = gradient(&inner);
    e.rho.zip_map(&g, |r, d| -0.25 * r * d)
}

/// Power densities of the exchange chain `k_s ↔ q_r ↔ k_a ↔ u`.
#[derive(Clone, Debug)]
pub struct PowerDensities {
    /// `ρ ∂U/∂t`.
    pub p_u: RealField,
    /// `−ρ∇S·∇U`.
    pub p_kau: RealField,
    /// `½ ρ∇S·∇(∇²R/R)`.
    pub p_kaq: RealField,
    /// `½[∇·(∇S |∇R|²) − ∇R·∇(∇·(R²∇S)/R)]`.
    pub p_qrks: RealField,
}

pub fn power_densities(
    e: &EikonalFields,
    potential: &RealField,
    potential_rate: &RealField,
    rates: Option<&TimeRates>,
) -> PowerDensities {
    let p_u = &e.rho * potential_rate;
    let grad_u = gradient(potential);
    let p_kau = e.current.zip_map(&grad_u, |j, g| -j * g);
    let lr = ratio(&e.r_lapl_r, e);
    let p_kaq = e.current.zip_map(&gradient(&lr), |j, g| 0.5 * j * g);
    let transport = gradient(&e.grad_s.zip_map(&e.grad_r, |s, r| s * r * r));
    let x = flux_divergence(e, rates);
    let x_over_r = x.zip_map(&e.r, |x, r| if r > 0.0 { x / r } else { 0.0 });
    let mut x_over_r = x_over_r;
    for (v, &m) in x_over_r.values_mut().iter_mut().zip(&e.node_mask) {
        if m {
            *v = 0.0;
        }
    }
    let exchange = e.grad_r.zip_map(&gradient(&x_over_r), |r, g| r * g);
    let p_qrks = transport.zip_map(&exchange, |a, b| 0.5 * (a - b));
    PowerDensities { p_u, p_kau, p_kaq, p_qrks }
}

/// Source/sink terms of the density continuity equations and the currents.
#[derive(Clone, Debug)]
pub struct ExchangeReport {
    pub variant: CurrentVariant,
    pub f_choice: DivergenceFreeChoice,
    pub kappa: RealField,
    pub alpha: RealField,
    pub beta: RealField,
    pub alpha_s: RealField,
    pub alpha_r: RealField,
    pub powers: PowerDensities,
    /// `k_a ∇S`.
    pub j_k: RealField,
    /// `u ∇S`.
    pub j_u: RealField,
    /// `q ∇S`.
    pub j_q: RealField,
    /// `q_r ∇S`.
    pub j_qr: RealField,
    pub qv_current: RealField,
    pub qrvr_current: RealField,
}

/// κ, α, β and the split `α = α_s + α_r`, with the chosen current.
pub fn source_terms(
    e: &EikonalFields,
    energies: &EnergyDensities,
    potential: &RealField,
    potential_rate: &RealField,
    rates: Option<&TimeRates>,
    variant: CurrentVariant,
    mode: CurrentMode,
) -> ExchangeReport {
    let powers = power_densities(e, potential, potential_rate, rates);
    let kappa = &powers.p_kaq + &powers.p_kau;
    let beta = &powers.p_u - &powers.p_kau;

    let current = match mode {
        CurrentMode::Derived => conservation_current(e, variant, rates),
        CurrentMode::Zeroed => RealField::zeros(e.rho.grid()),
    };
    let r_t = amplitude_rate(e, rates);
    let lapl_r_t = laplacian(&r_t);
    let lr = ratio(&e.r_lapl_r, e);
    let grad_lr = gradient(&lr);
    let div_current = gradient(&current);
    let n = e.rho.values().len();
    let (r, rlr, j) = (e.r.values(), e.r_lapl_r.values(), e.current.values());
    let (rt, lrt, glr, dj) = (r_t.values(), lapl_r_t.values(), grad_lr.values(), div_current.values());
    let alpha_v: Vec<f64> = (0..n)
        .map(|i| {
            let wrt = if e.node_mask[i] { 0.0 } else { rt[i] * rlr[i] / r[i] };
            -0.5 * (r[i] * lrt[i] - wrt + j[i] * glr[i]) + dj[i]
        })
        .collect();
    let alpha = RealField::from_storage(e.rho.grid(), alpha_v).expect("storage length");
    let alpha_s = powers.p_qrks.clone();
    let alpha_r = &alpha - &alpha_s;

    let flow = |d: &RealField| d * &e.grad_s;
    ExchangeReport {
        variant,
        f_choice: DivergenceFreeChoice::Zero,
        kappa,
        alpha,
        beta,
        alpha_s,
        alpha_r,
        j_k: flow(&energies.k_a),
        j_u: flow(&energies.u),
        j_q: flow(&energies.q),
        j_qr: flow(&energies.q_r),
        qv_current: current.clone(),
        qrvr_current: current,
        powers,
    }
}

/// Exact time derivatives of the densities.
#[derive(Clone, Debug)]
pub struct EnergyRates {
    pub k_a: RealField,
    pub k_s: RealField,
    pub q: RealField,
    pub q_r: RealField,
    pub u: RealField,
}

pub fn energy_rates(
    e: &EikonalFields,
    rates: &TimeRates,
    potential: &RealField,
    potential_rate: &RealField,
) -> EnergyRates {
    let n = e.rho.values().len();
    let (rho, j, a) = (e.rho.values(), e.current.values(), e.amp_flux.values());
    let (rho_t, j_t, a_t) = (rates.rho_t.values(), rates.current_t.values(), rates.amp_flux_t.values());
    let quad_rate = |x: &[f64], x_t: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                if e.node_mask[i] {
                    0.0
                } else {
                    x[i] * x_t[i] / rho[i] - 0.5 * x[i] * x[i] * rho_t[i] / (rho[i] * rho[i])
                }
            })
            .collect()
    };
    let grid = e.rho.grid();
    let f = |v: Vec<f64>| RealField::from_storage(grid, v).expect("storage length");
    let k_a = f(quad_rate(j, j_t));
    let k_s = f(quad_rate(a, a_t));
    let q = rates.r_lapl_r_t.map(|v| -0.5 * v);
    let q_r = rates.lapl_rho_t.map(|v| -0.25 * v);
    let u = &(&rates.rho_t * potential) + &(&e.rho * potential_rate);
    EnergyRates { k_a, k_s, q, q_r, u }
}

/// Everything derived from one spectral frame.
#[derive(Clone, Debug)]
pub struct FrameAnalysis {
    pub t: f64,
    pub eikonal: EikonalFields,
    pub rates: TimeRates,
    pub energies: EnergyDensities,
    pub potential: RealField,
    pub potential_rate: RealField,
}

impl FrameAnalysis {
    pub fn new(frame: &SpectralFrame, potential: &RealField) -> crate::Result<Self> {
        let eikonal = EikonalFields::decompose(&frame.psi)?;
        let rates = TimeRates::new(&eikonal, &frame.psi_t);
        let energies = energy_densities(&eikonal, potential);
        Ok(Self {
            t: frame.psi.t(),
            eikonal,
            rates,
            energies,
            potential: potential.clone(),
            potential_rate: RealField::zeros(potential.grid()),
        })
    }

    pub fn exchange(&self, variant: CurrentVariant, mode: CurrentMode) -> ExchangeReport {
        source_terms(
            &self.eikonal,
            &self.energies,
            &self.potential,
            &self.potential_rate,
            Some(&self.rates),
            variant,
            mode,
        )
    }

    pub fn energy_rates(&self) -> EnergyRates {
        energy_rates(&self.eikonal, &self.rates, &self.potential, &self.potential_rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;
    use crate::spectral::{evolve_frame, matched_basis, PotentialSpec};
    use num_complex::Complex64;

    fn frame(t: f64) -> FrameAnalysis {
        let p = PotentialSpec::double_well(1.0, 103.0 / 1024.0, 15.0);
        let g = p.grid(2049).unwrap();
        let b = matched_basis(&p, &g, 2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let f = evolve_frame(&b, &[Complex64::new(s, 0.0), Complex64::new(s, 0.0)], t).unwrap();
        FrameAnalysis::new(&f, &p.sample(&g)).unwrap()
    }

    #[test]
    fn energy_integrates_to_the_mean_level() {
        let f = frame(0.7);
        let want = 0.5 * (3.224464912634464 + 5.024152221922213);
        assert!((integrate(&f.energies.e) - want).abs() / want < 1e-6);
    }

    #[test]
    fn quantum_potential_and_k_s_carry_the_same_total() {
        let f = frame(0.3);
        let (q, ks) = (integrate(&f.energies.q), integrate(&f.energies.k_s));
        assert!((q - ks).abs() < 1e-5 * ks.abs());
        assert!(integrate(&f.energies.q_r).abs() < 1e-5);
    }

    #[test]
    fn momentum_parts() {
        let f = frame(0.5);
        let m = momentum_densities(&f.eikonal);
        assert!((&m.p_a - &f.eikonal.current).max_abs() == 0.0);
        let ps = integrate(&m.p_s).abs();
        assert!(ps < 1e-4, "{ps}");
        assert_eq!(m.p_q.re().values(), m.p_a.values());
    }

    #[test]
    fn zeroed_mode_drops_the_current_only() {
        let f = frame(0.5);
        let d = f.exchange(CurrentVariant::QR, CurrentMode::Derived);
        let z = f.exchange(CurrentVariant::QR, CurrentMode::Zeroed);
        assert_eq!(z.qrvr_current.max_abs(), 0.0);
        assert!(d.qrvr_current.max_abs() > 1e-3);
        assert_eq!(d.kappa.values(), z.kappa.values());
        assert_eq!(d.beta.values(), z.beta.values());
        assert_eq!(d.qv_current.values(), d.qrvr_current.values());
    }

    #[test]
    fn alpha_splits_exactly() {
        let f = frame(0.9);
        let x = f.exchange(CurrentVariant::QR, CurrentMode::Derived);
        assert!((&(&x.alpha_s + &x.alpha_r) - &x.alpha).max_abs() < 1e-12 * (1.0 + x.alpha.max_abs()));
    }

    #[test]
    fn stencil_fallback_agrees_with_exact_rates() {
        let f = frame(0.4);
        let exact = conservation_current(&f.eikonal, CurrentVariant::Q, Some(&f.rates));
        let stencil = conservation_current(&f.eikonal, CurrentVariant::Q, None);
        let mask = crate::audit::exclusion_mask(&f.eikonal);
        let worst = exact
            .values()
            .iter()
            .zip(stencil.values())
            .zip(&mask)
            .filter(|(_, &m)| !m)
            .map(|((a, b), _)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-2 * exact.max_abs(), "{worst}");
    }

    #[test]
    fn power_terms_vanish_without_potential_rate_or_flow() {
        let f = frame(0.0);
        let p = power_densities(&f.eikonal, &f.potential, &f.potential_rate, Some(&f.rates));
        assert_eq!(p.p_u.max_abs(), 0.0);
        assert!(p.p_kau.max_abs() < 1e-12);
    }
}
