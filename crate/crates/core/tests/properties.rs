use std::sync::Arc;

use madelung_core::numerics::{gradient, integrate, laplacian};
use madelung_core::scenarios::{build_reflection_scenario, InitialState};
use madelung_core::spectral::{evolve, evolve_frame, solve_fd_eigens};
use madelung_core::state::velocity_fields;
use madelung_core::streamlines::density_quantile_seeds;
use madelung_core::{FrameAnalysis, PotentialSpec, RealField, ScenarioConfig, SpatialGrid, SpectralBasis};
use num_complex::Complex64;
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 48, ..ProptestConfig::default() }
}

fn well_basis(states: usize) -> SpectralBasis {
    let p = PotentialSpec::double_well(1.0, 0.25, 15.0);
    solve_fd_eigens(&p, &p.grid(257).unwrap(), states).unwrap()
}

fn normalized(raw: &[(f64, f64)]) -> Vec<Complex64> {
    let c: Vec<Complex64> = raw.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
    let n = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    c.into_iter().map(|z| z / n).collect()
}

fn coefficients(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
        .prop_filter("non-zero", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3)
}

fn grid_with_jump() -> Arc<SpatialGrid> {
    Arc::new(SpatialGrid::spanning(-1.0, 1.0, 81, true, &[0.25]).unwrap())
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn stencils_are_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, p in -2.0..2.0f64, q in 0.5..4.0f64) {
        let g = grid_with_jump();
        let f = RealField::from_fn(&g, |x| (p * x).sin());
        let h = RealField::from_fn(&g, |x| (q * x).cos() + x * x);
        let mix = f.zip_map(&h, |u, v| a * u + b * v);
        for op in [gradient::<f64>, laplacian::<f64>] {
            let lhs = op(&mix);
            let rhs = op(&f).zip_map(&op(&h), |u, v| a * u + b * v);
            prop_assert!((&lhs - &rhs).max_abs() < 1e-10 * (1.0 + lhs.max_abs()));
        }
    }

    #[test]
    fn stencils_are_exact_on_low_order_polynomials(c in prop::array::uniform4(-2.0..2.0f64), d in prop::array::uniform3(-2.0..2.0f64)) {
        let g = grid_with_jump();
        // Different polynomials on each side of the jump.
        let f = RealField::from_segment_fn(&g, |s, x| {
            if s == 0 { c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x } else { d[0] + d[1] * x + d[2] * x * x }
        });
        let lap = laplacian(&f);
        let want = RealField::from_segment_fn(&g, |s, x| if s == 0 { 2.0 * c[2] + 6.0 * c[3] * x } else { 2.0 * d[2] });
        prop_assert!((&lap - &want).max_abs() < 1e-7);
        let q = RealField::from_segment_fn(&g, |s, x| if s == 0 { c[0] + c[1] * x + c[2] * x * x } else { d[0] + d[1] * x + d[2] * x * x });
        let dq = RealField::from_segment_fn(&g, |s, x| if s == 0 { c[1] + 2.0 * c[2] * x } else { d[1] + 2.0 * d[2] * x });
        prop_assert!((&gradient(&q) - &dq).max_abs() < 1e-10);
    }

    #[test]
    fn spectral_evolution_preserves_the_norm(raw in coefficients(6), t in 0.0..50.0f64) {
        let b = well_basis(6);
        let w = evolve(&b, &normalized(&raw), t).unwrap();
        prop_assert!((w.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn velocity_branches_reproduce_the_currents(raw in coefficients(4), t in 0.0..10.0f64) {
        let b = well_basis(4);
        let fr = evolve_frame(&b, &normalized(&raw), t).unwrap();
        let f = FrameAnalysis::new(&fr, &PotentialSpec::double_well(1.0, 0.25, 15.0).sample(b.grid())).unwrap();
        let e = &f.eikonal;
        let v = velocity_fields(e);
        let scale = e.current.max_abs().max(e.amp_flux.max_abs());
        for i in 0..e.rho.values().len() {
            if e.node_mask[i] {
                continue;
            }
            let rho = e.rho.values()[i];
            prop_assert!((rho * v.v_a.values()[i] - e.current.values()[i]).abs() < 1e-9 * scale);
            prop_assert!((rho * v.v_s.values()[i] + e.amp_flux.values()[i]).abs() < 1e-9 * scale);
            let (vp, vm) = (v.v_plus.values()[i], v.v_minus.values()[i]);
            prop_assert!((0.5 * (vp + vm) - v.v_a.values()[i]).abs() < 1e-9 * (1.0 + vp.abs()));
            let kc = 0.5 * e.dpsi.values()[i].norm_sqr();
            prop_assert!((f.energies.k_c.values()[i] - kc).abs() < 1e-9 * (1.0 + kc));
        }
    }

    #[test]
    fn energy_identities_hold_pointwise(raw in coefficients(4), t in 0.0..10.0f64) {
        let b = well_basis(4);
        let fr = evolve_frame(&b, &normalized(&raw), t).unwrap();
        let f = FrameAnalysis::new(&fr, &PotentialSpec::double_well(1.0, 0.25, 15.0).sample(b.grid())).unwrap();
        let en = &f.energies;
        let kq = &en.k_a + &en.q;
        let e = &(&en.k_c + &en.q_r) + &en.u;
        prop_assert!((&kq - &en.k_q).max_abs() < 1e-12 * (1.0 + en.k_q.max_abs()));
        prop_assert!((&e - &en.e).max_abs() < 1e-12 * (1.0 + en.e.max_abs()));
        // ∫e matches ⟨H⟩ up to the O(h²) mismatch of the one-sided edge stencils.
        let c = normalized(&raw);
        let want: f64 = c.iter().zip(&b.energies).map(|(c, e)| c.norm_sqr() * e).sum();
        prop_assert!((integrate(&en.e) - want).abs() < 1e-3 * want);
    }

    #[test]
    fn fd_spectra_are_ordered_and_orthonormal(a in 0.05..0.5f64, u0 in 0.0..40.0f64) {
        let p = PotentialSpec::double_well(1.0, (a * 128.0).round() / 128.0, u0);
        let b = solve_fd_eigens(&p, &p.grid(257).unwrap(), 5).unwrap();
        prop_assert!(b.energies.windows(2).all(|w| w[1] > w[0]));
        for m in 0..5 {
            for n in 0..5 {
                let want = if m == n { 1.0 } else { 0.0 };
                prop_assert!((b.overlap(m, n) - want).abs() < 1e-9, "<{m}|{n}> = {}", b.overlap(m, n));
            }
        }
    }

    #[test]
    fn quantile_seeds_ascend(raw in prop::collection::vec(0.0..1.0f64, 33), count in 2usize..40) {
        let g = Arc::new(SpatialGrid::spanning(0.0, 1.0, 33, false, &[]).unwrap());
        let rho = RealField::from_points(&g, &raw.iter().map(|r| r + 1e-3).collect::<Vec<_>>()).unwrap();
        let seeds = density_quantile_seeds(&rho, count);
        prop_assert_eq!(seeds.len(), count);
        prop_assert!(seeds.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(seeds.iter().all(|s| (0.0..=1.0).contains(s)));
    }

    #[test]
    fn scenario_toml_round_trips(center in -1.5..-0.5f64, width in 0.05..0.12f64, p0 in -40.0..40.0f64, frames in 2usize..1000) {
        let mut cfg = build_reflection_scenario();
        cfg.initial_state = InitialState::Gaussian { center, delta_x: width, p0, target_wall: None };
        cfg.time.n_frames = frames;
        let text = cfg.to_toml_string().unwrap();
        prop_assert_eq!(ScenarioConfig::from_toml_str(&text, "prop").unwrap(), cfg);
    }
}
