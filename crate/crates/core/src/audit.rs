//! Numerical residuals of the fluid and energy conservation laws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::madelung::{CurrentMode, CurrentVariant, EnergyDensities, FrameAnalysis};
use crate::numerics::{gradient, integrate, RealField};
use crate::state::EikonalFields;

/// Cells around nodes and discontinuities left out of residual statistics.
pub const EXCLUSION_CELLS: usize = 3;

/// Residual statistics of one conservation law on one frame.
#[derive(Clone, Debug)]
pub struct AuditReport {
    pub name: String,
    pub t: f64,
    pub residual: RealField,
    pub max_abs: f64,
    pub l2_norm: f64,
    pub excluded_points: usize,
    pub grid_dx: f64,
    pub convergence_ratio: Option<f64>,
}

/// Compact per-audit record suitable for export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub name: String,
    pub t: f64,
    pub grid_dx: f64,
    pub max_abs: f64,
    pub l2_norm: f64,
    pub excluded_points: usize,
}

impl AuditReport {
    /// Statistics over slots where `excluded` is false.
    pub fn new(name: impl Into<String>, t: f64, residual: RealField, excluded: &[bool]) -> Self {
        let dx = residual.grid().dx();
        let mut max_abs: f64 = 0.0;
        let mut sq = 0.0;
        let mut count = 0;
        for (v, &x) in residual.values().iter().zip(excluded) {
            if x {
                count += 1;
            } else {
                max_abs = max_abs.max(v.abs());
                sq += v * v;
            }
        }
        Self {
            name: name.into(),
            t,
            max_abs,
            l2_norm: (sq * dx).sqrt(),
            excluded_points: count,
            grid_dx: dx,
            residual,
            convergence_ratio: None,
        }
    }

    pub fn summary(&self) -> AuditSummary {
        AuditSummary {
            name: self.name.clone(),
            t: self.t,
            grid_dx: self.grid_dx,
            max_abs: self.max_abs,
            l2_norm: self.l2_norm,
            excluded_points: self.excluded_points,
        }
    }
}

/// Ratio of max residuals when the grid spacing halves.
pub fn convergence_ratio(coarse: &AuditReport, fine: &AuditReport) -> f64 {
    coarse.max_abs / fine.max_abs.max(f64::MIN_POSITIVE)
}

/// Storage slots within [`EXCLUSION_CELLS`] of a node or a discontinuity.
pub fn exclusion_mask(e: &EikonalFields) -> Vec<bool> {
    let grid = e.rho.grid();
    let n = grid.n();
    let mut near = vec![false; n];
    let mut mark = |k: usize| {
        let lo = k.saturating_sub(EXCLUSION_CELLS);
        let hi = (k + EXCLUSION_CELLS).min(n - 1);
        near[lo..=hi].iter_mut().for_each(|v| *v = true);
    };
    for (slot, &m) in e.node_mask.iter().enumerate() {
        if m {
            mark(grid.storage_points()[slot]);
        }
    }
    for &d in grid.discontinuities() {
        mark(d);
    }
    grid.storage_points().iter().map(|&k| near[k]).collect()
}

/// Source of `∂/∂t` for the continuity audits.
#[derive(Clone, Copy, Debug)]
pub enum TimeDerivative<'a> {
    /// Exact spectral rates of the centre frame.
    Spectral,
    /// Centred difference of neighbouring frames `t ± dt`.
    Centered { prev: &'a FrameAnalysis, next: &'a FrameAnalysis, dt: f64 },
}

fn centred(prev: &RealField, next: &RealField, dt: f64) -> RealField {
    next.zip_map(prev, |a, b| (a - b) / (2.0 * dt))
}

/// `∂ρ/∂t + ∇·(ρ∇S)`.
pub fn audit_continuity_rho(f: &FrameAnalysis, td: TimeDerivative) -> AuditReport {
    let rho_t = match td {
        TimeDerivative::Spectral => f.rates.rho_t.clone(),
        TimeDerivative::Centered { prev, next, dt } => centred(&prev.eikonal.rho, &next.eikonal.rho, dt),
    };
    let res = &rho_t + &gradient(&f.eikonal.current);
    AuditReport::new("continuity_rho", f.t, res, &exclusion_mask(&f.eikonal))
}

/// Amplitude equation multiplied through by `R`: `R ∂R/∂t + ½∇·(R²∇S)`.
///
/// The per-particle form divides by `R`, which vanishes linearly at the walls
/// and costs one order of convergence there.
pub fn audit_r_evolution(f: &FrameAnalysis, td: TimeDerivative) -> AuditReport {
    let r_t = match td {
        TimeDerivative::Spectral => f.rates.r_t.clone(),
        TimeDerivative::Centered { prev, next, dt } => centred(&prev.eikonal.r, &next.eikonal.r, dt),
    };
    let div = gradient(&f.eikonal.current);
    let mut res = (&f.eikonal.r * &r_t).zip_map(&div, |a, d| a + 0.5 * d);
    zero_nodes(&mut res, &f.eikonal);
    AuditReport::new("evolution_r", f.t, res, &exclusion_mask(&f.eikonal))
}

/// Phase equation multiplied through by `ρ`:
/// `ρ(∂S/∂t + ½|∇S|² + U − c) − ½R∇²R`, where `c` is the density-weighted
/// mean of the per-particle residual over included points.
///
/// The per-particle form divides by `ρ`, so in far tails of a packet it
/// amplifies roundoff by `1/(ρh²)` and stops converging.
pub fn audit_s_evolution(f: &FrameAnalysis, td: TimeDerivative) -> AuditReport {
    let e = &f.eikonal;
    let s_t = match td {
        TimeDerivative::Spectral => f.rates.s_t.clone(),
        TimeDerivative::Centered { prev, next, dt } => next.eikonal.psi.zip_map(&prev.eikonal.psi, |a, b| {
            (a * b.conj()).arg() / (2.0 * dt)
        }),
    };
    let mask = exclusion_mask(e);
    let rho = e.rho.values();
    let mut res = s_t.zip_map(&e.grad_s, |st, g| st + 0.5 * g * g);
    for (i, v) in res.values_mut().iter_mut().enumerate() {
        *v = rho[i] * (*v + f.potential.values()[i]) - 0.5 * e.r_lapl_r.values()[i];
    }
    let (sum, mass) = res
        .values()
        .iter()
        .zip(rho)
        .zip(&mask)
        .filter(|(_, &x)| !x)
        .fold((0.0, 0.0), |(s, m), ((v, r), _)| (s + v, m + r));
    let mean = if mass > 0.0 { sum / mass } else { 0.0 };
    for (v, r) in res.values_mut().iter_mut().zip(rho) {
        *v -= mean * r;
    }
    zero_nodes(&mut res, e);
    AuditReport::new("evolution_s", f.t, res, &mask)
}

fn zero_nodes(f: &mut RealField, e: &EikonalFields) {
    for (v, &m) in f.values_mut().iter_mut().zip(&e.node_mask) {
        if m {
            *v = 0.0;
        }
    }
}

/// Names of the energy-budget reports, in the order [`audit_energy_budget`] returns them.
pub const ENERGY_AUDITS: [&str; 6] =
    ["energy_budget", "continuity_k_a", "continuity_q", "continuity_k_s", "continuity_q_r", "continuity_u"];

/// `κ + α + β` (or `κ + α_s + α_r + β` for the `q_r` variant) followed by each
/// density's own continuity residual.
pub fn audit_energy_budget(f: &FrameAnalysis, variant: CurrentVariant, mode: CurrentMode) -> Vec<AuditReport> {
    let e = &f.eikonal;
    let x = f.exchange(variant, mode);
    let rates = f.energy_rates();
    let mask = exclusion_mask(e);
    let suffix = match variant {
        CurrentVariant::Q => "q",
        CurrentVariant::QR => "q_r",
    };
    let sum = match variant {
        CurrentVariant::Q => &(&x.kappa + &x.alpha) + &x.beta,
        CurrentVariant::QR => &(&(&x.kappa + &x.alpha_s) + &x.alpha_r) + &x.beta,
    };
    let current = match variant {
        CurrentVariant::Q => &x.qv_current,
        CurrentVariant::QR => &x.qrvr_current,
    };
    let div_current = gradient(current);
    let transport = |rate: &RealField, flux: &RealField, source: &RealField| {
        &(rate + &gradient(flux)) - source
    };
    let en = &f.energies;
    let checks = [
        sum,
        transport(&rates.k_a, &x.j_k, &x.kappa),
        &transport(&rates.q, &x.j_q, &x.alpha) + &div_current,
        transport(&rates.k_s, &(&en.k_s * &e.grad_s), &x.alpha_s),
        &transport(&rates.q_r, &x.j_qr, &x.alpha_r) + &div_current,
        transport(&rates.u, &x.j_u, &x.beta),
    ];
    checks
        .into_iter()
        .zip(ENERGY_AUDITS)
        .map(|(res, name)| AuditReport::new(format!("{name}_{suffix}"), f.t, res, &mask))
        .collect()
}

/// Pointwise identities relative to `max |k_q|`: `k_q = k_a + k_s + q_r`,
/// `q = k_s + q_r` and `k_c = ½|∇ψ|²`.
pub fn audit_kq_decomposition(e: &EikonalFields, en: &EnergyDensities) -> Vec<AuditReport> {
    let mask = exclusion_mask(e);
    let scale = en
        .k_q
        .values()
        .iter()
        .zip(&mask)
        .filter(|(_, &x)| !x)
        .fold(0.0f64, |m, (v, _)| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let rel = |f: RealField| &f * scale.recip();
    let kq = rel(&en.k_q - &(&(&en.k_a + &en.k_s) + &en.q_r));
    let q = rel(&en.q - &(&en.k_s + &en.q_r));
    let kc = rel(&en.k_c - &e.grad_psi_sq().map(|v| 0.5 * v));
    vec![
        AuditReport::new("identity_k_q", e.t, kq, &mask),
        AuditReport::new("identity_q", e.t, q, &mask),
        AuditReport::new("identity_k_c", e.t, kc, &mask),
    ]
}

/// Relative deviation of `∫e` from the spectral energy expectation.
pub fn audit_energy_integral(en: &EnergyDensities, expected: f64) -> f64 {
    (integrate(&en.e) - expected).abs() / expected.abs().max(f64::MIN_POSITIVE)
}

/// One-sided limits at a grid point from three samples on one side.
///
/// Quadratic extrapolation `3f₁ − 3f₂ + f₃`, which never touches the point itself.
pub fn one_sided_limits(values: &RealField, k: usize) -> Option<(f64, f64)> {
    let grid = values.grid();
    if k < 3 || k + 3 >= grid.n() {
        return None;
    }
    let at = |i: usize| values.at_point(i);
    let left = 3.0 * at(k - 1) - 3.0 * at(k - 2) + at(k - 3);
    let right = 3.0 * at(k + 1) - 3.0 * at(k + 2) + at(k + 3);
    Some((left, right))
}

/// Jump cancellation at one discontinuity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeJump {
    pub x: f64,
    /// `Q_r(right) − Q_r(left)`.
    pub q_r_jump: f64,
    /// `U(right) − U(left)`.
    pub u_jump: f64,
    /// `ΔQ_r + ΔU`.
    pub residual: f64,
    /// `Δq_r + ΔU·ρ(edge)`.
    pub density_weighted: f64,
    pub k_a_jump: f64,
    pub k_s_jump: f64,
}

impl EdgeJump {
    /// `|ΔQ_r + ΔU| / |ΔU|`.
    pub fn relative_error(&self) -> f64 {
        self.residual.abs() / self.u_jump.abs().max(f64::MIN_POSITIVE)
    }
}

/// Checks that `Q_r` jumps by `−ΔU` at every declared discontinuity and that
/// `k_a` and `k_s` stay continuous there.
pub fn audit_jump_cancellation(
    e: &EikonalFields,
    en: &EnergyDensities,
    potential: &RealField,
) -> Result<Vec<EdgeJump>> {
    let grid = e.rho.grid();
    if grid.discontinuities().is_empty() {
        return Err(Error::NotApplicable("no potential discontinuities on this grid".into()));
    }
    grid.discontinuities()
        .iter()
        .map(|&k| {
            let lim = |f: &RealField| {
                one_sided_limits(f, k)
                    .ok_or_else(|| Error::NotApplicable(format!("discontinuity {k} too close to a wall")))
            };
            let (ql, qr) = lim(&en.q_r_per_particle)?;
            let (dl, dr) = lim(&en.q_r)?;
            let (al, ar) = lim(&en.k_a)?;
            let (sl, sr) = lim(&en.k_s)?;
            let (ul, ur) = potential.limits(k);
            let rho = e.rho.at_point(k);
            let u_jump = ur - ul;
            Ok(EdgeJump {
                x: grid.x(k),
                q_r_jump: qr - ql,
                u_jump,
                residual: qr - ql + u_jump,
                density_weighted: dr - dl + u_jump * rho,
                k_a_jump: ar - al,
                k_s_jump: sr - sl,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SpatialGrid;
    use crate::spectral::{evolve_frame, matched_basis, PotentialSpec};
    use num_complex::Complex64;
    use std::sync::Arc;

    fn frame(n: usize, t: f64) -> FrameAnalysis {
        let p = PotentialSpec::double_well(1.0, 103.0 / 1024.0, 15.0);
        let g = p.grid(n).unwrap();
        let b = matched_basis(&p, &g, 2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let f = evolve_frame(&b, &[Complex64::new(s, 0.0), Complex64::new(0.0, s)], t).unwrap();
        FrameAnalysis::new(&f, &p.sample(&g)).unwrap()
    }

    #[test]
    fn report_statistics_skip_excluded_points() {
        let g = Arc::new(SpatialGrid::spanning(0.0, 1.0, 5, true, &[]).unwrap());
        let r = RealField::from_points(&g, &[100.0, 1.0, -2.0, 1.0, 100.0]).unwrap();
        let rep = AuditReport::new("x", 0.0, r, &[true, false, false, false, true]);
        assert_eq!(rep.max_abs, 2.0);
        assert_eq!(rep.excluded_points, 2);
        assert!((rep.l2_norm - (6.0f64 * 0.25).sqrt()).abs() < 1e-15);
        let mut fine = rep.clone();
        fine.max_abs = 0.5;
        assert_eq!(convergence_ratio(&rep, &fine), 4.0);
        assert_eq!(rep.summary().name, "x");
    }

    #[test]
    fn exclusion_covers_walls_and_edges() {
        let f = frame(257, 0.0);
        let m = exclusion_mask(&f.eikonal);
        let g = f.eikonal.rho.grid();
        for k in [0, 1, 2, 3, 253, 254, 255, 256] {
            assert!(m[g.slots(k).0], "wall neighbour {k}");
        }
        let d = g.discontinuities()[0];
        for k in d - 3..=d + 3 {
            assert!(m[g.slots(k).0] && m[g.slots(k).1]);
        }
        assert!(!m[g.slots(64).0]);
    }

    #[test]
    fn one_sided_limits_are_exact_for_quadratics() {
        let g = Arc::new(SpatialGrid::spanning(-1.0, 1.0, 41, true, &[0.0]).unwrap());
        let f = RealField::from_segment_fn(&g, |s, x| if s == 0 { x * x + 1.0 } else { 3.0 - x * x });
        let (l, r) = one_sided_limits(&f, 20).unwrap();
        assert!((l - 1.0).abs() < 1e-12 && (r - 3.0).abs() < 1e-12);
        assert!(one_sided_limits(&f, 2).is_none());
    }

    #[test]
    fn quantum_potential_jump_cancels_the_barrier_step() {
        let f = frame(2049, 0.6);
        let jumps = audit_jump_cancellation(&f.eikonal, &f.energies, &f.potential).unwrap();
        assert_eq!(jumps.len(), 2);
        assert_eq!(jumps[0].u_jump, 15.0);
        assert_eq!(jumps[1].u_jump, -15.0);
        for j in &jumps {
            assert!(j.relative_error() < 0.02, "{j:?}");
            assert!(j.density_weighted.abs() < 1e-3);
        }
    }

    #[test]
    fn jump_audit_needs_discontinuities() {
        let p = PotentialSpec::free_box(0.0, 1.0);
        let g = p.grid(129).unwrap();
        let b = crate::spectral::solve_fd_eigens(&p, &g, 1).unwrap();
        let fr = evolve_frame(&b, &[Complex64::new(1.0, 0.0)], 0.0).unwrap();
        let f = FrameAnalysis::new(&fr, &p.sample(&g)).unwrap();
        let r = audit_jump_cancellation(&f.eikonal, &f.energies, &f.potential);
        assert!(matches!(r, Err(Error::NotApplicable(_))));
    }

    #[test]
    fn identities_hold_to_rounding() {
        let f = frame(1025, 1.1);
        for r in audit_kq_decomposition(&f.eikonal, &f.energies) {
            assert!(r.max_abs < 1e-13, "{} = {}", r.name, r.max_abs);
        }
    }

    #[test]
    fn residuals_shrink_fourfold_when_the_grid_is_halved() {
        let (c, f) = (frame(1025, 0.8), frame(2049, 0.8));
        let pairs = [
            (audit_continuity_rho(&c, TimeDerivative::Spectral), audit_continuity_rho(&f, TimeDerivative::Spectral)),
            (audit_r_evolution(&c, TimeDerivative::Spectral), audit_r_evolution(&f, TimeDerivative::Spectral)),
            (audit_s_evolution(&c, TimeDerivative::Spectral), audit_s_evolution(&f, TimeDerivative::Spectral)),
        ];
        for (a, b) in &pairs {
            let r = convergence_ratio(a, b);
            assert!((3.0..=5.0).contains(&r), "{}: {r}", a.name);
        }
    }

    #[test]
    fn centred_time_difference_agrees_with_spectral_rates() {
        let dt = 1e-4;
        let (prev, mid, next) = (frame(1025, 0.8 - dt), frame(1025, 0.8), frame(1025, 0.8 + dt));
        let spectral = audit_continuity_rho(&mid, TimeDerivative::Spectral);
        let centred = audit_continuity_rho(&mid, TimeDerivative::Centered { prev: &prev, next: &next, dt });
        assert!((centred.max_abs - spectral.max_abs).abs() < 1e-3 * spectral.max_abs.max(1e-6));
        let s = audit_s_evolution(&mid, TimeDerivative::Centered { prev: &prev, next: &next, dt });
        assert!(s.max_abs < 1e-3);
    }

    #[test]
    fn budget_reports_are_named_per_variant() {
        let f = frame(513, 0.2);
        let names: Vec<String> =
            audit_energy_budget(&f, CurrentVariant::Q, CurrentMode::Derived).into_iter().map(|r| r.name).collect();
        assert_eq!(names[0], "energy_budget_q");
        assert_eq!(names.len(), ENERGY_AUDITS.len());
        let qr = audit_energy_budget(&f, CurrentVariant::QR, CurrentMode::Derived);
        assert_eq!(qr[4].name, "continuity_q_r_q_r");
    }

    #[test]
    fn energy_integral_deviation_is_relative() {
        let f = frame(2049, 0.0);
        let e = integrate(&f.energies.e);
        assert!(audit_energy_integral(&f.energies, e) < 1e-15);
        assert!((audit_energy_integral(&f.energies, 2.0 * e) - 0.5).abs() < 1e-12);
    }
}
