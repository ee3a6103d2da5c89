//! Reproducible scenario configurations and their TOML form.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate, ComplexField, SpatialGrid};
use crate::spectral::{
    lowest_pair, BarrierCalibration, BasisKind, PotentialSpec, CALIBRATION_TOLERANCE, DEFAULT_TRUNCATION_BOUND,
};
use crate::state::Wavefunction;

/// Largest wall amplitude, relative to the peak, a Gaussian may have.
pub const TAIL_THRESHOLD: f64 = 1e-12;

pub const UNITS_NOTE: &str =
    "hbar = m = L = 1; energies in hbar^2/(m L^2), times in m L^2/hbar, momenta in hbar/L, lengths in L";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallSide {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    /// `Σ a_i ψ_{n_i}` with complex amplitudes written as `[re, im]`.
    EigenSuperposition { indices: Vec<usize>, amplitudes: Vec<[f64; 2]> },
    /// `A exp(−(x−c)²/4Δx² + i p₀ x)`.
    Gaussian {
        center: f64,
        delta_x: f64,
        p0: f64,
        /// The wall the packet is aimed at. It reflects the packet, so the tail
        /// rule only applies to the other wall.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target_wall: Option<WallSide>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub kind: BasisKind,
    /// Cap on the number of eigenstates.
    pub max_states: usize,
    /// Largest accepted `1 − Σ|c_n|²`.
    pub truncation_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Points at acceptance resolution.
    pub points: usize,
    /// Points at CI resolution; the audit pairs it with `points`.
    pub fast_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseWindow {
    pub start: f64,
    pub end: f64,
    pub n_frames: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_start: f64,
    /// Absolute end time. Exactly one of `t_end` and `t_end_periods` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// End time in units of the period of the two lowest superposed states.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end_periods: Option<f64>,
    /// Uniformly spaced frames over the span, both ends included.
    pub n_frames: usize,
    /// RK4 steps per frame interval.
    pub streamline_substeps: usize,
    /// Single extra frame times, merged like the dense window.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<f64>,
    /// Extra frames packed into a sub-interval.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense: Option<DenseWindow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedRule {
    DensityQuantiles,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    pub rule: SeedRule,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    /// Audit times as fractions of the time span.
    pub span_fractions: Vec<f64>,
}

/// How the barrier half-width was obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationRecord {
    pub barrier_height: f64,
    pub targets: [f64; 2],
    /// Minimizer of the larger eigenvalue error.
    pub calibrated_half_width: f64,
    /// The shipped half-width is the calibrated one rounded to this unit, so
    /// both barrier edges fall on grid points.
    pub alignment_unit: f64,
    pub e1: f64,
    pub e2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub description: String,
    pub units: String,
    pub potential: PotentialSpec,
    pub initial_state: InitialState,
    pub basis: BasisConfig,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub seeds: SeedConfig,
    pub audit: AuditConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationRecord>,
}

fn config_err<T>(m: impl Into<String>) -> Result<T> {
    Err(Error::Config(m.into()))
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)
            .map_err(|e| Error::Parse { path: origin.to_string(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize scenario: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.potential.validate()?;
        match &self.initial_state {
            InitialState::EigenSuperposition { indices, amplitudes } => {
                if indices.is_empty() || indices.len() != amplitudes.len() {
                    return config_err("superposition needs one amplitude per index");
                }
                let mut sorted = indices.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != indices.len() {
                    return config_err("superposition indices must be distinct");
                }
                let norm: f64 = amplitudes.iter().map(|a| a[0] * a[0] + a[1] * a[1]).sum();
                if (norm - 1.0).abs() > 1e-12 {
                    return config_err(format!("amplitudes are not normalized (Σ|a|² = {norm})"));
                }
            }
            InitialState::Gaussian { center, delta_x, p0, .. } => {
                if !(*delta_x > 0.0 && center.is_finite() && p0.is_finite()) {
                    return config_err("gaussian needs finite centre, momentum and positive width");
                }
                if !(*center > self.potential.box_left && *center < self.potential.box_right) {
                    return config_err("gaussian centre outside the box");
                }
            }
        }
        if self.basis.max_states == 0 || !(self.basis.truncation_bound > 0.0) {
            return config_err("basis needs max_states ≥ 1 and a positive truncation bound");
        }
        if self.grid.points < 3 || self.grid.fast_points < 3 {
            return config_err("grid needs at least 3 points");
        }
        let t = &self.time;
        match (t.t_end, t.t_end_periods) {
            (Some(end), None) if end > t.t_start => {}
            (None, Some(p)) if p > 0.0 => match &self.initial_state {
                InitialState::EigenSuperposition { indices, .. } if indices.len() >= 2 => {}
                _ => return config_err("t_end_periods needs a superposition of at least two states"),
            },
            _ => return config_err("set exactly one of t_end (> t_start) and t_end_periods (> 0)"),
        }
        if t.streamline_substeps == 0 {
            return config_err("streamline_substeps must be positive");
        }
        let (lo, hi) = (t.t_start, t.t_end.unwrap_or(f64::INFINITY));
        if t.snapshots.iter().any(|s| !(*s >= lo && *s <= hi)) {
            return config_err("snapshot times must lie inside the time span");
        }
        if let Some(d) = &t.dense {
            if !(d.end > d.start) || d.n_frames < 2 {
                return config_err("dense window needs end > start and at least 2 frames");
            }
        }
        if self.seeds.count < 2 {
            return config_err("need at least two streamline seeds");
        }
        if self.audit.span_fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return config_err("audit span fractions must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Gaussian packet parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianPacket {
    pub center: f64,
    pub delta_x: f64,
    pub p0: f64,
}

/// Moments of a sampled packet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PacketMoments {
    pub mean_x: f64,
    pub spread: f64,
    pub mean_p: f64,
}

impl GaussianPacket {
    fn amplitude(&self, x: f64) -> Complex64 {
        let d = x - self.center;
        Complex64::from_polar((-d * d / (4.0 * self.delta_x * self.delta_x)).exp(), self.p0 * x)
    }

    fn derivative(&self, x: f64) -> Complex64 {
        let d = x - self.center;
        self.amplitude(x) * Complex64::new(-d / (2.0 * self.delta_x * self.delta_x), self.p0)
    }

    /// Position moments by quadrature; momentum from the closed-form derivative
    /// `ψ′ = (−(x−c)/2Δx² + i p₀) ψ`.
    pub fn moments(&self, w: &Wavefunction) -> PacketMoments {
        let grid = w.psi().grid();
        let rho = w.density();
        let x = crate::numerics::RealField::from_fn(grid, |x| x);
        let mean_x = integrate(&(&rho * &x));
        let var = integrate(&rho.zip_map(&x, |r, x| r * (x - mean_x) * (x - mean_x)));
        let scale = w.psi().values().iter().zip(grid.storage_points()).find_map(|(z, &k)| {
            let a = self.amplitude(grid.x(k));
            (a.norm() > 1e-3).then(|| z / a)
        });
        let scale = scale.unwrap_or(Complex64::new(1.0, 0.0));
        let dpsi = ComplexField::from_fn(grid, |x| scale * self.derivative(x));
        let flux = w.psi().zip_map(&dpsi, |p, d| (p.conj() * d).im);
        PacketMoments { mean_x, spread: var.sqrt(), mean_p: integrate(&flux) }
    }
}

/// Normalized boxed Gaussian. Fails when a wall other than `target_wall`
/// sees an amplitude above [`TAIL_THRESHOLD`] of the peak.
pub fn gaussian_initial(
    packet: GaussianPacket,
    grid: &Arc<SpatialGrid>,
    target_wall: Option<WallSide>,
) -> Result<Wavefunction> {
    let walls = [(WallSide::Left, grid.x_min()), (WallSide::Right, grid.x_max())];
    for (side, x) in walls {
        let tail = packet.amplitude(x).norm();
        if Some(side) != target_wall && tail >= TAIL_THRESHOLD {
            return Err(Error::Grid(format!(
                "gaussian tail {tail:e} at the {side:?} wall x = {x} exceeds {TAIL_THRESHOLD:e} of the peak"
            )));
        }
    }
    let psi = ComplexField::from_fn(grid, |x| packet.amplitude(x));
    Wavefunction::normalized(psi, 0.0)
}

/// Calibrated half-width rounded to a multiple of `unit`, choosing whichever
/// neighbour keeps the larger eigenvalue error smaller.
pub fn align_half_width(
    cal: &BarrierCalibration,
    half_width: f64,
    u0: f64,
    targets: (f64, f64),
    unit: f64,
) -> Result<(f64, f64, f64)> {
    let lo = (cal.barrier_half_width / unit).floor() * unit;
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for a in [lo, lo + unit] {
        if !(a > 0.0 && a < half_width) {
            continue;
        }
        if let Some((e1, e2)) = lowest_pair(half_width, a, u0) {
            let err = (e1 - targets.0).abs().max((e2 - targets.1).abs());
            if best.map_or(true, |b| err < b.3) {
                best = Some((a, e1, e2, err));
            }
        }
    }
    match best {
        Some((a, e1, e2, err)) if err <= CALIBRATION_TOLERANCE => Ok((a, e1, e2)),
        _ => config_err(format!(
            "no multiple of {unit} near a = {} reproduces the targets within {CALIBRATION_TOLERANCE}",
            cal.barrier_half_width
        )),
    }
}

/// Box half-width, barrier height and target eigenvalues of the double-well experiment.
pub const TUNNELING_HALF_WIDTH: f64 = 1.0;
pub const TUNNELING_BARRIER: f64 = 15.0;
pub const TUNNELING_TARGETS: (f64, f64) = (3.22, 5.02);
const ACCEPTANCE_POINTS: usize = 4097;
const FAST_POINTS: usize = 2049;

fn calibrated_well(cal: Option<&BarrierCalibration>) -> Result<(PotentialSpec, CalibrationRecord)> {
    let Some(cal) = cal else {
        return config_err("the double-well scenarios need a barrier calibration");
    };
    let unit = 2.0 * TUNNELING_HALF_WIDTH / (FAST_POINTS - 1) as f64;
    let (a, e1, e2) = align_half_width(cal, TUNNELING_HALF_WIDTH, TUNNELING_BARRIER, TUNNELING_TARGETS, unit)?;
    let record = CalibrationRecord {
        barrier_height: TUNNELING_BARRIER,
        targets: [TUNNELING_TARGETS.0, TUNNELING_TARGETS.1],
        calibrated_half_width: cal.barrier_half_width,
        alignment_unit: unit,
        e1,
        e2,
    };
    Ok((PotentialSpec::double_well(TUNNELING_HALF_WIDTH, a, TUNNELING_BARRIER), record))
}

/// Equal superposition of the two lowest double-well states over one period.
pub fn build_tunneling_scenario(cal: Option<&BarrierCalibration>) -> Result<ScenarioConfig> {
    let (potential, record) = calibrated_well(cal)?;
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    Ok(ScenarioConfig {
        name: "tunneling".into(),
        description: "Equal superposition of the two sub-barrier eigenstates of a boxed double well; \
                      the fluid tunnels through the barrier and back over one period."
            .into(),
        units: UNITS_NOTE.into(),
        potential,
        initial_state: InitialState::EigenSuperposition { indices: vec![0, 1], amplitudes: vec![[amp, 0.0]; 2] },
        basis: BasisConfig { kind: BasisKind::Matched, max_states: 2, truncation_bound: DEFAULT_TRUNCATION_BOUND },
        grid: GridConfig { points: ACCEPTANCE_POINTS, fast_points: FAST_POINTS },
        time: TimeConfig {
            t_start: 0.0,
            t_end: None,
            t_end_periods: Some(1.0),
            n_frames: 512,
            streamline_substeps: 8,
            snapshots: Vec::new(),
            dense: None,
        },
        seeds: SeedConfig { rule: SeedRule::DensityQuantiles, count: 32 },
        audit: AuditConfig { span_fractions: vec![0.125, 0.375] },
        calibration: Some(record),
    })
}

/// The double-well ground state alone, from the finite-difference basis.
pub fn build_stationary_scenario(cal: Option<&BarrierCalibration>) -> Result<ScenarioConfig> {
    let (potential, record) = calibrated_well(cal)?;
    Ok(ScenarioConfig {
        name: "stationary".into(),
        description: "Ground state of the boxed double well; nothing flows and every residual vanishes.".into(),
        units: UNITS_NOTE.into(),
        potential,
        initial_state: InitialState::EigenSuperposition { indices: vec![0], amplitudes: vec![[1.0, 0.0]] },
        basis: BasisConfig {
            kind: BasisKind::FiniteDifference,
            max_states: 1,
            truncation_bound: DEFAULT_TRUNCATION_BOUND,
        },
        grid: GridConfig { points: ACCEPTANCE_POINTS, fast_points: FAST_POINTS },
        time: TimeConfig {
            t_start: 0.0,
            t_end: Some(1.0),
            t_end_periods: None,
            n_frames: 16,
            streamline_substeps: 8,
            snapshots: Vec::new(),
            dense: None,
        },
        seeds: SeedConfig { rule: SeedRule::DensityQuantiles, count: 32 },
        audit: AuditConfig { span_fractions: vec![0.125, 0.375] },
        calibration: Some(record),
    })
}

/// Time of the fringe snapshot inside the reflection, before its midpoint.
pub const REFLECTION_SNAPSHOT: f64 = 0.01907;

/// Gaussian packet fired at an infinite wall at `x = L/2`.
pub fn build_reflection_scenario() -> ScenarioConfig {
    ScenarioConfig {
        name: "reflection".into(),
        description: "Gaussian packet with p0 = 25 reflecting off an infinite wall at x = 1/2; \
                      interference fringes and density zeros form during the reflection."
            .into(),
        units: UNITS_NOTE.into(),
        potential: PotentialSpec::free_box(-2.5, 0.5),
        initial_state: InitialState::Gaussian {
            center: 0.0,
            delta_x: 1.0 / (4.0 * 10f64.sqrt()),
            p0: 25.0,
            target_wall: Some(WallSide::Right),
        },
        basis: BasisConfig {
            kind: BasisKind::FiniteDifference,
            max_states: 256,
            truncation_bound: DEFAULT_TRUNCATION_BOUND,
        },
        grid: GridConfig { points: ACCEPTANCE_POINTS, fast_points: FAST_POINTS },
        time: TimeConfig {
            t_start: 0.0,
            t_end: Some(0.04),
            t_end_periods: None,
            n_frames: 401,
            streamline_substeps: 8,
            snapshots: vec![REFLECTION_SNAPSHOT],
            dense: Some(DenseWindow { start: 0.015, end: 0.025, n_frames: 201 }),
        },
        seeds: SeedConfig { rule: SeedRule::DensityQuantiles, count: 32 },
        audit: AuditConfig { span_fractions: vec![0.25] },
        calibration: None,
    }
}
