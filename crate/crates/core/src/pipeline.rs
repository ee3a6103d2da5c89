//! Scenario drivers: eigen-solve, project, evolve, analyse, audit and export.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::audit::{
    audit_continuity_rho, audit_energy_budget, audit_energy_integral, audit_jump_cancellation,
    audit_kq_decomposition, audit_r_evolution, audit_s_evolution, AuditReport, TimeDerivative,
};
use crate::error::{Error, Result};
use crate::export::{
    frame_csv, frame_file_name, streamlines_csv, write_file, FileRecord, GridRecord, PhysicsRecord, RunManifest,
    StreamlineRecord, TimeRecord,
};
use crate::madelung::{CurrentMode, CurrentVariant, FrameAnalysis};
use crate::numerics::{RealField, SpatialGrid};
use crate::scenarios::{
    build_stationary_scenario, build_tunneling_scenario, gaussian_initial, GaussianPacket, InitialState,
    ScenarioConfig, TUNNELING_BARRIER, TUNNELING_HALF_WIDTH, TUNNELING_TARGETS,
};
use crate::spectral::{
    calibrate_barrier, evolve_frame, matched_basis, project, project_minimal, solve_fd_eigens, BarrierCalibration,
    BasisKind, Projection, SpectralBasis, SpectralFrame,
};
use crate::state::Wavefunction;
use crate::streamlines::{density_quantile_seeds, streamline_family, FrameVelocity, StreamlineFamily, VelocityFrame};

/// Barrier edges further than this fraction of `dx` from a grid point are rejected.
pub const ALIGNMENT_TOLERANCE: f64 = 1e-6;
/// Pointwise identities and stationary residuals must stay below this.
pub const IDENTITY_TOLERANCE: f64 = 1e-8;
/// Relative tolerance on `∫e` against the spectral energy.
pub const ENERGY_INTEGRAL_TOLERANCE: f64 = 1e-6;
/// Relative tolerance on `ΔQ_r = −ΔU`.
pub const JUMP_TOLERANCE: f64 = 0.02;
/// `k_a` and `k_s` jumps relative to `max k_c`.
pub const EDGE_CONTINUITY_TOLERANCE: f64 = 1e-3;
/// Accepted range of the coarse/fine residual ratio for a second-order scheme.
pub const CONVERGENCE_RATIO_RANGE: (f64, f64) = (3.0, 5.0);

const FIRST_BASIS_GUESS: usize = 32;

/// A scenario resolved on one grid: basis, coefficients and time span.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub config: ScenarioConfig,
    pub grid: Arc<SpatialGrid>,
    pub potential: RealField,
    pub basis: SpectralBasis,
    pub projection: Projection,
    pub initial: Wavefunction,
    /// `2π/(E_j − E_i)` for the first two superposed states.
    pub period: Option<f64>,
    pub t_end: f64,
}

fn solve_basis(config: &ScenarioConfig, grid: &Arc<SpatialGrid>, n: usize) -> Result<SpectralBasis> {
    match config.basis.kind {
        BasisKind::Matched => matched_basis(&config.potential, grid, n),
        BasisKind::FiniteDifference => solve_fd_eigens(&config.potential, grid, n),
    }
}

/// Builds the grid, basis and initial coefficients at `points` resolution.
pub fn prepare(config: &ScenarioConfig, points: usize) -> Result<Prepared> {
    config.validate()?;
    let grid = config.potential.grid(points).map_err(|e| match e {
        Error::Grid(m) => Error::Config(format!("grid of {points} points: {m}")),
        other => other,
    })?;
    for (&off, &k) in grid.snap_offsets().iter().zip(grid.discontinuities()) {
        if off.abs() > ALIGNMENT_TOLERANCE * grid.dx() {
            return Err(Error::Config(format!(
                "potential edge near x = {} is {off:e} off the {points}-point grid; choose a grid whose spacing divides the edge positions",
                grid.x(k)
            )));
        }
    }
    let potential = config.potential.sample(&grid);
    let cap = config.basis.max_states;
    let bound = config.basis.truncation_bound;

    let (basis, projection, initial, period) = match &config.initial_state {
        InitialState::EigenSuperposition { indices, amplitudes } => {
            let n = indices.iter().max().map_or(1, |m| m + 1);
            if n > cap {
                return Err(Error::Config(format!("state index {} exceeds max_states = {cap}", n - 1)));
            }
            let basis = solve_basis(config, &grid, n)?;
            let mut psi = crate::numerics::ComplexField::zeros(&grid);
            for (&i, a) in indices.iter().zip(amplitudes) {
                let amp = Complex64::new(a[0], a[1]);
                psi = &psi + &basis.states[i].map(|z| z * amp);
            }
            let initial = Wavefunction::new(psi, config.time.t_start)?;
            let projection = project(&initial, &basis, bound)?;
            let period = (indices.len() >= 2).then(|| {
                let de = (basis.energies[indices[1]] - basis.energies[indices[0]]).abs();
                2.0 * std::f64::consts::PI / de
            });
            (basis, projection, initial, period)
        }
        InitialState::Gaussian { center, delta_x, p0, target_wall } => {
            let packet = GaussianPacket { center: *center, delta_x: *delta_x, p0: *p0 };
            let initial = gaussian_initial(packet, &grid, *target_wall).map_err(|e| match e {
                Error::Grid(m) => Error::Config(m),
                other => other,
            })?;
            let mut n = FIRST_BASIS_GUESS.min(cap);
            loop {
                let basis = solve_basis(config, &grid, n)?;
                match project_minimal(&initial, &basis, bound) {
                    Ok((used, projection)) => break (basis.truncated(used), projection, initial, None),
                    Err(Error::Truncation { residual, .. }) if n >= cap => {
                        return Err(Error::Config(format!(
                            "{cap} states leave a projection residual of {residual:e}, above {bound:e}; raise max_states"
                        )));
                    }
                    Err(Error::Truncation { .. }) => n = (2 * n).min(cap),
                    Err(e) => return Err(e),
                }
            }
        }
    };
    let t = &config.time;
    let t_end = match (t.t_end, t.t_end_periods, period) {
        (Some(end), _, _) => end,
        (None, Some(p), Some(period)) => t.t_start + p * period,
        _ => return Err(Error::Config("t_end_periods needs two superposed states".into())),
    };
    Ok(Prepared { config: config.clone(), grid, potential, basis, projection, initial, period, t_end })
}

impl Prepared {
    pub fn frame(&self, t: f64) -> Result<SpectralFrame> {
        evolve_frame(&self.basis, &self.projection.coeffs, t - self.config.time.t_start)
    }

    pub fn analyse(&self, t: f64) -> Result<FrameAnalysis> {
        FrameAnalysis::new(&self.frame(t)?, &self.potential)
    }

    pub fn energy(&self) -> f64 {
        self.projection.energy(&self.basis)
    }

    /// Uniform frames over the span, merged with the dense window and snapshots.
    pub fn frame_times(&self, n_frames: usize, with_dense: bool) -> Vec<f64> {
        let t0 = self.config.time.t_start;
        let mut times = linspace(t0, self.t_end, n_frames);
        if with_dense {
            if let Some(d) = &self.config.time.dense {
                times.extend(linspace(d.start, d.end, d.n_frames));
            }
            times.extend(self.config.time.snapshots.iter().filter(|&&s| s <= self.t_end));
            times.sort_by(f64::total_cmp);
            let tol = 1e-12 * (self.t_end - t0).abs().max(1.0);
            times.dedup_by(|a, b| (*a - *b).abs() <= tol);
        }
        times
    }

    /// Times at the configured fractions of the span.
    pub fn audit_times(&self) -> Vec<f64> {
        let t0 = self.config.time.t_start;
        self.config.audit.span_fractions.iter().map(|f| t0 + f * (self.t_end - t0)).collect()
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Options shared by `run` and `audit`.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides the configured point count.
    pub grid_points: Option<usize>,
    /// Overrides the number of uniform frames and drops the dense window.
    pub frames: Option<usize>,
    /// Zero the energy conservation current.
    pub negative_control: bool,
    /// CI resolution.
    pub fast: bool,
}

impl RunOptions {
    pub fn points(&self, config: &ScenarioConfig) -> usize {
        self.grid_points.unwrap_or(if self.fast { config.grid.fast_points } else { config.grid.points })
    }

    pub fn current_mode(&self) -> CurrentMode {
        if self.negative_control {
            CurrentMode::Zeroed
        } else {
            CurrentMode::Derived
        }
    }
}

fn mode_name(mode: CurrentMode) -> &'static str {
    match mode {
        CurrentMode::Derived => "derived",
        CurrentMode::Zeroed => "zeroed",
    }
}

/// Residuals of one frame in export order.
pub fn frame_audits(f: &FrameAnalysis, mode: CurrentMode) -> Vec<AuditReport> {
    let mut out = vec![
        audit_continuity_rho(f, TimeDerivative::Spectral),
        audit_r_evolution(f, TimeDerivative::Spectral),
        audit_s_evolution(f, TimeDerivative::Spectral),
    ];
    out.extend(audit_energy_budget(f, CurrentVariant::Q, mode));
    out.extend(audit_energy_budget(f, CurrentVariant::QR, mode));
    out.extend(audit_kq_decomposition(&f.eikonal, &f.energies));
    out
}

const AUDIT_HEADER: &str = "frame,t,audit,max_abs,l2_norm,excluded_points,grid_dx\n";
const JUMP_HEADER: &str = "frame,t,x,q_r_jump,u_jump,residual,relative_error,density_weighted,k_a_jump,k_s_jump\n";

struct FrameOutput {
    file: Option<FileRecord>,
    audit_rows: String,
    jump_rows: String,
    velocity: VelocityFrame,
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric(format!("{name} is not finite")))
    }
}

fn process_frame(
    p: &Prepared,
    index: usize,
    t: f64,
    mode: CurrentMode,
    out: &Path,
    write_fields: bool,
) -> Result<FrameOutput> {
    let f = p.analyse(t)?;
    let file = if write_fields {
        let x = f.exchange(CurrentVariant::QR, mode);
        let csv = frame_csv(&f, &x)?;
        Some(write_file(out, &frame_file_name(index), csv.as_bytes())?)
    } else {
        None
    };
    let mut audit_rows = String::new();
    for r in frame_audits(&f, mode) {
        audit_rows.push_str(&format!(
            "{index},{t:.16e},{},{:.16e},{:.16e},{},{:.16e}\n",
            r.name,
            finite(&r.name, r.max_abs)?,
            finite(&r.name, r.l2_norm)?,
            r.excluded_points,
            r.grid_dx
        ));
    }
    let dev = finite("energy_integral", audit_energy_integral(&f.energies, p.energy()))?;
    audit_rows.push_str(&format!("{index},{t:.16e},energy_integral,{dev:.16e},{dev:.16e},0,{:.16e}\n", p.grid.dx()));
    let mut jump_rows = String::new();
    match audit_jump_cancellation(&f.eikonal, &f.energies, &p.potential) {
        Ok(jumps) => {
            for j in jumps {
                jump_rows.push_str(&format!(
                    "{index},{t:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    j.x,
                    finite("q_r jump", j.q_r_jump)?,
                    j.u_jump,
                    j.residual,
                    j.relative_error(),
                    finite("density-weighted jump", j.density_weighted)?,
                    j.k_a_jump,
                    j.k_s_jump
                ));
            }
        }
        Err(Error::NotApplicable(_)) => {}
        Err(e) => return Err(e),
    }
    Ok(FrameOutput { file, audit_rows, jump_rows, velocity: VelocityFrame::from_eikonal(&f.eikonal) })
}

fn grid_record(g: &SpatialGrid) -> GridRecord {
    GridRecord {
        points: g.n(),
        x_min: g.x_min(),
        x_max: g.x_max(),
        dx: g.dx(),
        discontinuities: g.discontinuities().iter().map(|&k| g.x(k)).collect(),
    }
}

fn physics_record(p: &Prepared, mode: CurrentMode) -> PhysicsRecord {
    let well = p.config.potential.as_double_well();
    PhysicsRecord {
        basis: match p.basis.kind {
            BasisKind::Matched => "matched".into(),
            BasisKind::FiniteDifference => "finite_difference".into(),
        },
        basis_states: p.basis.len(),
        projection_residual: p.projection.residual,
        energy: p.energy(),
        e1: p.basis.energies[0],
        e2: p.basis.energies.get(1).copied(),
        barrier_half_width: well.map(|w| w.barrier_half_width),
        barrier_height: well.map(|w| w.barrier_height),
        current_mode: mode_name(mode).into(),
    }
}

/// The full pipeline: frames, audits, jumps, streamlines and the manifest.
pub fn run(config: &ScenarioConfig, out: &Path, opts: &RunOptions) -> Result<RunManifest> {
    let p = prepare(config, opts.points(config))?;
    fs::create_dir_all(out)?;
    let mode = opts.current_mode();
    let n_uniform = opts.frames.unwrap_or(config.time.n_frames);
    let times = p.frame_times(n_uniform, opts.frames.is_none());

    let outputs: Vec<FrameOutput> = times
        .par_iter()
        .enumerate()
        .map(|(i, &t)| process_frame(&p, i, t, mode, out, true))
        .collect::<Result<_>>()?;

    let mut files: Vec<FileRecord> = Vec::new();
    let mut streamlines = None;
    if !outputs.is_empty() {
        let mut audits = String::from(AUDIT_HEADER);
        let mut jumps = String::from(JUMP_HEADER);
        for o in &outputs {
            audits.push_str(&o.audit_rows);
            jumps.push_str(&o.jump_rows);
        }
        files.extend(outputs.iter().filter_map(|o| o.file.clone()));
        files.push(write_file(out, "audits.csv", audits.as_bytes())?);
        if !p.grid.discontinuities().is_empty() {
            files.push(write_file(out, "jumps.csv", jumps.as_bytes())?);
        }
        if times.len() >= 2 {
            let velocity: Vec<VelocityFrame> = outputs.into_iter().map(|o| o.velocity).collect();
            let (family, dt) = trace_streamlines(&p, velocity, n_uniform)?;
            files.push(write_file(out, "streamlines.csv", streamlines_csv(&family.lines)?.as_bytes())?);
            streamlines = Some(StreamlineRecord {
                seeds: family.lines.len(),
                complete: family.diagnostics.complete,
                crossings: family.diagnostics.crossings,
                max_relative_mass_drift: family.diagnostics.max_relative_mass_drift,
                time_step: dt,
            });
        }
    }
    files.sort_by(|a, b| a.name.cmp(&b.name));

    let manifest = RunManifest {
        tool: "madelung".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        command: "run".into(),
        scenario: config.name.clone(),
        units: config.units.clone(),
        grid: grid_record(&p.grid),
        time: TimeRecord { t_start: config.time.t_start, t_end: p.t_end, frames: times.len(), period: p.period },
        physics: physics_record(&p, mode),
        streamlines,
        files,
    };
    manifest.write(out)?;
    Ok(manifest)
}

/// Quantile-seeded streamlines over the frames, stepping `substeps` times per
/// uniform frame interval.
pub fn trace_streamlines(
    p: &Prepared,
    frames: Vec<VelocityFrame>,
    n_uniform: usize,
) -> Result<(StreamlineFamily, f64)> {
    let t0 = p.config.time.t_start;
    let intervals = n_uniform.max(2) - 1;
    let dt = (p.t_end - t0) / (intervals * p.config.time.streamline_substeps) as f64;
    let seeds = density_quantile_seeds(&p.initial.density(), p.config.seeds.count);
    let source = FrameVelocity::new(frames)?;
    let t1 = *source.times().last().expect("at least two frames");
    Ok((streamline_family(&seeds, t0, t1, dt, &source)?, dt))
}

/// Pass rule of one audit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criterion {
    /// Coarse/fine ratio in [`CONVERGENCE_RATIO_RANGE`], or fine residual below the stationary floor.
    Convergence,
    /// Fine and coarse residual below [`IDENTITY_TOLERANCE`].
    Identity,
    /// Below [`ENERGY_INTEGRAL_TOLERANCE`], or converging at second order.
    EnergyIntegral,
    /// Relative jump residual below [`JUMP_TOLERANCE`].
    Jump,
    /// Relative jump below [`EDGE_CONTINUITY_TOLERANCE`].
    EdgeContinuity,
}

impl Criterion {
    pub fn describe(&self) -> &'static str {
        match self {
            Self::Convergence => "ratio in [3, 5] or residual < 1e-8",
            Self::Identity => "residual < 1e-8",
            Self::EnergyIntegral => "relative error < 1e-6 or ratio in [3, 5]",
            Self::Jump => "relative error < 0.02",
            Self::EdgeContinuity => "relative jump < 1e-3",
        }
    }

    fn passes(&self, coarse: f64, fine: f64) -> bool {
        let (lo, hi) = CONVERGENCE_RATIO_RANGE;
        let ratio = coarse / fine;
        let converges = ratio >= lo && ratio <= hi;
        match self {
            Self::Convergence => fine < IDENTITY_TOLERANCE || converges,
            Self::Identity => fine < IDENTITY_TOLERANCE && coarse < IDENTITY_TOLERANCE,
            Self::EnergyIntegral => fine < ENERGY_INTEGRAL_TOLERANCE || converges,
            Self::Jump => fine < JUMP_TOLERANCE,
            Self::EdgeContinuity => fine < EDGE_CONTINUITY_TOLERANCE,
        }
    }
}

/// One audit measured at two resolutions.
#[derive(Clone, Debug, PartialEq)]
pub struct AuditCheck {
    pub name: String,
    pub t: f64,
    pub criterion: Criterion,
    pub coarse_dx: f64,
    pub fine_dx: f64,
    pub coarse: f64,
    pub fine: f64,
    pub pass: bool,
}

impl AuditCheck {
    pub fn ratio(&self) -> f64 {
        self.coarse / self.fine
    }
}

#[derive(Clone, Debug)]
pub struct AuditOutcome {
    pub checks: Vec<AuditCheck>,
    pub manifest: RunManifest,
}

impl AuditOutcome {
    pub fn failures(&self) -> Vec<&AuditCheck> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Scalar audit measurements of one frame, in a fixed order.
pub fn audit_measurements(p: &Prepared, t: f64, mode: CurrentMode) -> Result<Vec<(String, Criterion, f64)>> {
    let f = p.analyse(t)?;
    let mut out: Vec<(String, Criterion, f64)> = Vec::new();
    for r in frame_audits(&f, mode) {
        let c = if r.name.starts_with("identity_") { Criterion::Identity } else { Criterion::Convergence };
        out.push((r.name, c, r.max_abs));
    }
    out.push(("energy_integral".into(), Criterion::EnergyIntegral, audit_energy_integral(&f.energies, p.energy())));
    match audit_jump_cancellation(&f.eikonal, &f.energies, &p.potential) {
        Ok(jumps) => {
            let scale = f.energies.k_c.max_abs().max(f64::MIN_POSITIVE);
            for j in jumps {
                out.push((format!("jump_q_r_at_{:+.6}", j.x), Criterion::Jump, j.relative_error()));
                let edge = j.k_a_jump.abs().max(j.k_s_jump.abs()) / scale;
                out.push((format!("edge_continuity_at_{:+.6}", j.x), Criterion::EdgeContinuity, edge));
            }
        }
        Err(Error::NotApplicable(_)) => {}
        Err(e) => return Err(e),
    }
    for (name, _, v) in &out {
        finite(name, *v)?;
    }
    Ok(out)
}

/// Coarse and fine point counts: the fine grid halves the coarse spacing.
pub fn audit_resolutions(config: &ScenarioConfig, opts: &RunOptions) -> Result<(usize, usize)> {
    let (coarse, fine) = match opts.grid_points {
        Some(n) => ((n - 1) / 2 + 1, n),
        None => (config.grid.fast_points, config.grid.points),
    };
    if fine != 2 * coarse - 1 || coarse < 3 {
        return Err(Error::Config(format!(
            "audit grids must satisfy fine = 2·coarse − 1, got {coarse} and {fine}"
        )));
    }
    Ok((coarse, fine))
}

/// Runs every audit at two resolutions and writes `audit_convergence.csv`.
pub fn run_audit(config: &ScenarioConfig, out: &Path, opts: &RunOptions) -> Result<AuditOutcome> {
    let (nc, nf) = audit_resolutions(config, opts)?;
    let mode = opts.current_mode();
    let coarse = prepare(config, nc)?;
    let fine = prepare(config, nf)?;
    let mut fractions = coarse.audit_times();
    if opts.fast {
        fractions.truncate(1);
    }
    let mut checks = Vec::new();
    for (i, &t) in fractions.iter().enumerate() {
        let tf = fine.audit_times()[i];
        let (mc, mf) = rayon::join(|| audit_measurements(&coarse, t, mode), || audit_measurements(&fine, tf, mode));
        let (mc, mf) = (mc?, mf?);
        if mc.len() != mf.len() {
            return Err(Error::Numeric("audit sets differ between resolutions".into()));
        }
        for ((name, criterion, c), (_, _, f)) in mc.into_iter().zip(mf) {
            let pass = criterion.passes(c, f);
            checks.push(AuditCheck {
                name,
                t,
                criterion,
                coarse_dx: coarse.grid.dx(),
                fine_dx: fine.grid.dx(),
                coarse: c,
                fine: f,
                pass,
            });
        }
    }

    fs::create_dir_all(out)?;
    let mut csv = String::from("audit,t,coarse_dx,fine_dx,coarse,fine,ratio,criterion,pass\n");
    for c in &checks {
        csv.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}\n",
            c.name,
            c.t,
            c.coarse_dx,
            c.fine_dx,
            c.coarse,
            c.fine,
            c.ratio(),
            c.criterion.describe(),
            c.pass
        ));
    }
    let files = vec![write_file(out, "audit_convergence.csv", csv.as_bytes())?];
    let manifest = RunManifest {
        tool: "madelung".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        command: "audit".into(),
        scenario: config.name.clone(),
        units: config.units.clone(),
        grid: grid_record(&fine.grid),
        time: TimeRecord {
            t_start: config.time.t_start,
            t_end: fine.t_end,
            frames: fractions.len(),
            period: fine.period,
        },
        physics: physics_record(&fine, mode),
        streamlines: None,
        files,
    };
    manifest.write(out)?;
    Ok(AuditOutcome { checks, manifest })
}

/// Calibrated barrier plus the double-well scenarios built from it.
#[derive(Clone, Debug)]
pub struct CalibrationOutcome {
    pub calibration: BarrierCalibration,
    pub tunneling: ScenarioConfig,
    pub stationary: ScenarioConfig,
}

/// Calibrates the double-well barrier and, given a directory, writes the
/// scenario files that depend on it.
pub fn run_calibration(out: Option<&Path>) -> Result<CalibrationOutcome> {
    let calibration = calibrate_barrier(TUNNELING_HALF_WIDTH, TUNNELING_BARRIER, TUNNELING_TARGETS)?;
    let tunneling = build_tunneling_scenario(Some(&calibration))?;
    let stationary = build_stationary_scenario(Some(&calibration))?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        for s in [&tunneling, &stationary] {
            fs::write(dir.join(format!("{}.toml", s.name)), s.to_toml_string()?)?;
        }
    }
    Ok(CalibrationOutcome { calibration, tunneling, stationary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::build_reflection_scenario;

    fn shipped_stationary() -> ScenarioConfig {
        ScenarioConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/stationary.toml")).unwrap()
    }

    #[test]
    fn criteria_apply_their_thresholds() {
        assert!(Criterion::Convergence.passes(4e-4, 1e-4));
        assert!(!Criterion::Convergence.passes(2e-4, 1e-4));
        assert!(Criterion::Convergence.passes(1e-9, 1e-9));
        assert!(!Criterion::Identity.passes(1e-7, 1e-9));
        assert!(Criterion::EnergyIntegral.passes(4e-5, 1e-5));
        assert!(Criterion::EnergyIntegral.passes(1e-7, 1e-7));
        assert!(!Criterion::EnergyIntegral.passes(1e-5, 1e-5));
        assert!(Criterion::Jump.passes(1.0, 0.019) && !Criterion::Jump.passes(0.0, 0.021));
        assert!(!Criterion::EdgeContinuity.passes(0.0, 2e-3));
    }

    #[test]
    fn audit_grids_halve_the_spacing() {
        let cfg = build_reflection_scenario();
        assert_eq!(audit_resolutions(&cfg, &RunOptions::default()).unwrap(), (cfg.grid.fast_points, cfg.grid.points));
        let opts = RunOptions { grid_points: Some(1025), ..Default::default() };
        assert_eq!(audit_resolutions(&cfg, &opts).unwrap(), (513, 1025));
        let opts = RunOptions { grid_points: Some(1024), ..Default::default() };
        assert!(matches!(audit_resolutions(&cfg, &opts), Err(Error::Config(_))));
    }

    #[test]
    fn options_pick_resolution_and_mode() {
        let cfg = build_reflection_scenario();
        let fast = RunOptions { fast: true, negative_control: true, ..Default::default() };
        assert_eq!(fast.points(&cfg), cfg.grid.fast_points);
        assert_eq!(fast.current_mode(), CurrentMode::Zeroed);
        assert_eq!(RunOptions::default().current_mode(), CurrentMode::Derived);
    }

    #[test]
    fn misaligned_edges_are_a_configuration_error() {
        let cfg = shipped_stationary();
        assert!(matches!(prepare(&cfg, 2001), Err(Error::Config(_))));
    }

    #[test]
    fn dense_window_merges_into_the_uniform_frames() {
        let cfg = build_reflection_scenario();
        let p = prepare(&cfg, cfg.grid.fast_points).unwrap();
        let plain = p.frame_times(401, false);
        let merged = p.frame_times(401, true);
        assert_eq!(plain.len(), 401);
        assert!(merged.windows(2).all(|w| w[1] > w[0]));
        // Every other window time coincides with a uniform frame.
        assert_eq!(merged.len(), 401 + 201 - 101 + 1);
        assert!(merged.contains(&crate::scenarios::REFLECTION_SNAPSHOT));
        assert_eq!(p.audit_times(), vec![0.25 * p.t_end]);
        assert!((p.energy() - 332.5).abs() < 0.5);
    }

    #[test]
    fn stationary_frames_pass_every_identity() {
        let cfg = shipped_stationary();
        let p = prepare(&cfg, 2049).unwrap();
        let reports = frame_audits(&p.analyse(0.5).unwrap(), CurrentMode::Derived);
        assert_eq!(reports.len(), 3 + 12 + 3);
        for r in reports.iter().filter(|r| r.name.starts_with("identity_")) {
            assert!(r.max_abs < IDENTITY_TOLERANCE, "{}", r.name);
        }
    }
}
