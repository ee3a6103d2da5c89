//! Wavefunctions at one instant and their eikonal (amplitude/phase) decomposition.
//!
//! Stencils act on ψ only. Every derivative of R, S and ρ is rebuilt from
//! `ψ`, `Dψ` and `D²ψ` through exact product-rule identities, so the algebraic
//! relations between densities hold to rounding on the grid.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{gradient, integrate, laplacian, ComplexField, RealField};

/// Default normalization tolerance of [`Wavefunction`].
pub const DEFAULT_NORM_TOL: f64 = 1e-8;
/// Node threshold relative to the density maximum.
pub const NODE_RELATIVE_THRESHOLD: f64 = 1e-12;

/// Normalized ψ at time `t` on a walled grid.
#[derive(Clone, Debug)]
pub struct Wavefunction {
    psi: ComplexField,
    t: f64,
    norm_tol: f64,
}

impl Wavefunction {
    pub fn new(psi: ComplexField, t: f64) -> Result<Self> {
        Self::with_tolerance(psi, t, DEFAULT_NORM_TOL)
    }

    pub fn with_tolerance(psi: ComplexField, t: f64, norm_tol: f64) -> Result<Self> {
        let grid = psi.grid().clone();
        let v = psi.values();
        if grid.wall_left() && v[0] != Complex64::new(0.0, 0.0) {
            return Err(Error::State("nonzero value on the left wall".into()));
        }
        if grid.wall_right() && v[v.len() - 1] != Complex64::new(0.0, 0.0) {
            return Err(Error::State("nonzero value on the right wall".into()));
        }
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::State("non-finite sample".into()));
        }
        let norm = integrate(&psi.norm_sqr());
        if (norm - 1.0).abs() > norm_tol {
            return Err(Error::State(format!("norm {norm} deviates from 1 by more than {norm_tol:e}")));
        }
        Ok(Self { psi, t, norm_tol })
    }

    /// Zeroes wall samples and rescales to unit norm.
    pub fn normalized(mut psi: ComplexField, t: f64) -> Result<Self> {
        let grid = psi.grid().clone();
        let last = grid.storage_len() - 1;
        if grid.wall_left() {
            psi.values_mut()[0] = Complex64::default();
        }
        if grid.wall_right() {
            psi.values_mut()[last] = Complex64::default();
        }
        let norm = integrate(&psi.norm_sqr());
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::State(format!("cannot normalize, norm = {norm}")));
        }
        let psi = &psi * norm.sqrt().recip();
        Self::new(psi, t)
    }

    pub fn psi(&self) -> &ComplexField {
        &self.psi
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn norm_tol(&self) -> f64 {
        self.norm_tol
    }

    pub fn norm(&self) -> f64 {
        integrate(&self.psi.norm_sqr())
    }

    pub fn density(&self) -> RealField {
        self.psi.norm_sqr()
    }
}

/// `j = Im(ψ* ∇ψ)`.
pub fn probability_current(w: &Wavefunction) -> RealField {
    let d = gradient(w.psi());
    w.psi().zip_map(&d, |p, dp| (p.conj() * dp).im)
}

/// Amplitude, phase and their derivatives at one instant.
#[derive(Clone, Debug)]
pub struct EikonalFields {
    pub t: f64,
    pub psi: ComplexField,
    pub dpsi: ComplexField,
    pub d2psi: ComplexField,
    pub r: RealField,
    /// Phase unwrapped left to right, zero at the first non-node point.
    pub s: RealField,
    pub rho: RealField,
    /// `j = Im(ψ* Dψ) = ρ ∇S`.
    pub current: RealField,
    /// `Re(ψ* Dψ) = R ∇R = ∇ρ / 2`.
    pub amp_flux: RealField,
    pub grad_r: RealField,
    pub grad_s: RealField,
    pub lapl_r: RealField,
    /// `R ∇²R`, finite at nodes.
    pub r_lapl_r: RealField,
    pub lapl_rho: RealField,
    pub node_mask: Vec<bool>,
    pub eps_node: f64,
}

/// Default node threshold for `w`: `1e-12 · max ρ`.
pub fn node_threshold(w: &Wavefunction) -> f64 {
    NODE_RELATIVE_THRESHOLD * w.density().max()
}

/// Decomposes `ψ = R e^{iS}`. Points with `ρ < eps_node` are flagged; per-particle
/// ratios there are set to zero and must not be trusted.
pub fn eikonal_decompose(w: &Wavefunction, eps_node: f64) -> Result<EikonalFields> {
    let psi = w.psi().clone();
    let dpsi = gradient(&psi);
    let d2psi = laplacian(&psi);
    let rho = psi.norm_sqr();
    let node_mask: Vec<bool> = rho.values().iter().map(|&r| r < eps_node).collect();
    if node_mask.iter().all(|&m| m) {
        return Err(Error::DegenerateState);
    }
    let grid = psi.grid().clone();
    let r = rho.map(f64::sqrt);
    let pd = psi.zip_map(&dpsi, |p, d| p.conj() * d);
    let current = pd.im();
    let amp_flux = pd.re();
    let p2 = psi.zip_map(&d2psi, |p, d| (p.conj() * d).re);
    let dsq = dpsi.map(|d| d.norm_sqr());

    let n = grid.storage_len();
    let (pv, jv, av, rv, p2v) =
        (rho.values(), current.values(), amp_flux.values(), r.values(), p2.values());
    let mut grad_r = vec![0.0; n];
    let mut grad_s = vec![0.0; n];
    let mut lapl_r = vec![0.0; n];
    let mut r_lapl_r = vec![0.0; n];
    for i in 0..n {
        if node_mask[i] {
            r_lapl_r[i] = p2v[i];
            continue;
        }
        grad_r[i] = av[i] / rv[i];
        grad_s[i] = jv[i] / pv[i];
        r_lapl_r[i] = p2v[i] + jv[i] * jv[i] / pv[i];
        lapl_r[i] = r_lapl_r[i] / rv[i];
    }
    let lapl_rho = p2.zip_map(&dsq, |a, b| 2.0 * a + 2.0 * b);
    let s = unwrapped_phase(&psi, &node_mask);

    let f = |v: Vec<f64>| RealField::from_storage(&grid, v).expect("storage length");
    Ok(EikonalFields {
        t: w.t(),
        psi,
        dpsi,
        d2psi,
        r,
        s,
        rho,
        current,
        amp_flux,
        grad_r: f(grad_r),
        grad_s: f(grad_s),
        lapl_r: f(lapl_r),
        r_lapl_r: f(r_lapl_r),
        lapl_rho,
        node_mask,
        eps_node,
    })
}

fn unwrapped_phase(psi: &ComplexField, node_mask: &[bool]) -> RealField {
    use std::f64::consts::PI;
    let v = psi.values();
    let mut s = Vec::with_capacity(v.len());
    let mut prev_raw = 0.0;
    let mut acc = 0.0;
    for (i, z) in v.iter().enumerate() {
        let raw = z.arg();
        if i == 0 {
            acc = raw;
        } else {
            let d = raw - prev_raw;
            acc += d - 2.0 * PI * (d / (2.0 * PI)).round();
        }
        s.push(acc);
        prev_raw = raw;
    }
    let anchor = node_mask.iter().position(|&m| !m).map(|i| s[i]).unwrap_or(0.0);
    for x in &mut s {
        *x -= anchor;
    }
    RealField::from_storage(psi.grid(), s).expect("storage length")
}

impl EikonalFields {
    pub fn decompose(w: &Wavefunction) -> Result<Self> {
        eikonal_decompose(w, node_threshold(w))
    }

    /// `|Dψ|²` from the stencil derivative.
    pub fn grad_psi_sq(&self) -> RealField {
        self.dpsi.map(|d| d.norm_sqr())
    }

    pub fn node_count(&self) -> usize {
        self.node_mask.iter().filter(|&&m| m).count()
    }
}

/// Branch velocities of the 1D symmetric-velocity distribution.
#[derive(Clone, Debug)]
pub struct VelocityFields {
    /// `∇S`.
    pub v_a: RealField,
    /// `−∇R / R`.
    pub v_s: RealField,
    pub v_plus: RealField,
    pub v_minus: RealField,
    /// Node points where `v_s` diverges.
    pub singular: Vec<bool>,
}

pub fn velocity_fields(e: &EikonalFields) -> VelocityFields {
    let v_a = e.grad_s.clone();
    let v_s = e.amp_flux.zip_map(&e.rho, |a, r| if r > 0.0 { -a / r } else { 0.0 });
    let mut v_s = v_s;
    for (v, &m) in v_s.values_mut().iter_mut().zip(&e.node_mask) {
        if m {
            *v = 0.0;
        }
    }
    let v_plus = v_a.zip_map(&v_s, |a, s| a + s.abs());
    let v_minus = v_a.zip_map(&v_s, |a, s| a - s.abs());
    VelocityFields { v_a, v_s, v_plus, v_minus, singular: e.node_mask.clone() }
}

/// Time derivatives of the eikonal fields from an exact `∂ψ/∂t`.
#[derive(Clone, Debug)]
pub struct TimeRates {
    pub psi_t: ComplexField,
    pub dpsi_t: ComplexField,
    pub d2psi_t: ComplexField,
    pub rho_t: RealField,
    pub r_t: RealField,
    pub s_t: RealField,
    pub current_t: RealField,
    pub amp_flux_t: RealField,
    pub r_lapl_r_t: RealField,
    pub lapl_rho_t: RealField,
}

impl TimeRates {
    pub fn new(e: &EikonalFields, psi_t: &ComplexField) -> Self {
        let dpsi_t = gradient(psi_t);
        let d2psi_t = laplacian(psi_t);
        let grid = e.psi.grid().clone();
        let n = grid.storage_len();
        let (p, dp, d2p) = (e.psi.values(), e.dpsi.values(), e.d2psi.values());
        let (pt, dpt, d2pt) = (psi_t.values(), dpsi_t.values(), d2psi_t.values());
        let (rho, j, r) = (e.rho.values(), e.current.values(), e.r.values());

        let mut rho_t = vec![0.0; n];
        let mut r_t = vec![0.0; n];
        let mut s_t = vec![0.0; n];
        let mut current_t = vec![0.0; n];
        let mut amp_flux_t = vec![0.0; n];
        let mut r_lapl_r_t = vec![0.0; n];
        let mut lapl_rho_t = vec![0.0; n];
        for i in 0..n {
            let flux_t = pt[i].conj() * dp[i] + p[i].conj() * dpt[i];
            let second_t = (pt[i].conj() * d2p[i] + p[i].conj() * d2pt[i]).re;
            rho_t[i] = 2.0 * (p[i].conj() * pt[i]).re;
            current_t[i] = flux_t.im;
            amp_flux_t[i] = flux_t.re;
            lapl_rho_t[i] = 2.0 * second_t + 4.0 * (dp[i].conj() * dpt[i]).re;
            if e.node_mask[i] {
                r_lapl_r_t[i] = second_t;
                continue;
            }
            r_t[i] = rho_t[i] / (2.0 * r[i]);
            s_t[i] = (p[i].conj() * pt[i]).im / rho[i];
            r_lapl_r_t[i] = second_t + 2.0 * j[i] * current_t[i] / rho[i]
                - j[i] * j[i] * rho_t[i] / (rho[i] * rho[i]);
        }
        let f = |v: Vec<f64>| RealField::from_storage(&grid, v).expect("storage length");
        Self {
            psi_t: psi_t.clone(),
            dpsi_t,
            d2psi_t,
            rho_t: f(rho_t),
            r_t: f(r_t),
            s_t: f(s_t),
            current_t: f(current_t),
            amp_flux_t: f(amp_flux_t),
            r_lapl_r_t: f(r_lapl_r_t),
            lapl_rho_t: f(lapl_rho_t),
        }
    }
}
