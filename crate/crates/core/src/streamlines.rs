//! Fluid trajectories along the average velocity `v_a = ∇S`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{cumulative_integral, interpolate_uniform, rk4_step, RealField};
use crate::state::EikonalFields;

/// Cells around a node where the velocity is not trusted.
pub const NODE_GUARD_CELLS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamlineStatus {
    Complete,
    LeftDomain,
    HitNodeRegion,
}

impl StreamlineStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Complete => "complete",
            Self::LeftDomain => "left_domain",
            Self::HitNodeRegion => "hit_node_region",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Streamline {
    pub seed_x: f64,
    /// `(t, x)` pairs, strictly increasing in `t`.
    pub samples: Vec<(f64, f64)>,
    pub status: StreamlineStatus,
}

impl Streamline {
    /// Sign changes of the step velocity from positive to negative, with the
    /// time of each. Steps slower than `min_speed` are ignored.
    pub fn reversals(&self, min_speed: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut last_sign = 0.0;
        for w in self.samples.windows(2) {
            let v = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            if v.abs() < min_speed {
                continue;
            }
            let s = v.signum();
            if last_sign > 0.0 && s < 0.0 {
                out.push(w[0].0);
            }
            last_sign = s;
        }
        out
    }
}

/// Velocity (and density) known at discrete times on a uniform grid.
pub trait VelocitySource: Sync {
    /// `v_a(x, t)`; `Error::OutOfDomain` outside the grid, `Error::NodeRegion`
    /// near a node.
    fn velocity(&self, x: f64, t: f64) -> Result<f64>;

    /// Fluid mass left of `x` at time `t`.
    fn mass_below(&self, x: f64, t: f64) -> Option<f64>;
}

/// The parts of one decomposed frame that streamlines need.
#[derive(Clone, Debug)]
pub struct VelocityFrame {
    pub t: f64,
    pub x0: f64,
    pub dx: f64,
    /// `v_a` at grid points.
    pub velocity: Vec<f64>,
    /// Points within [`NODE_GUARD_CELLS`] of a node.
    pub blocked: Vec<bool>,
    /// Cumulative mass at grid points.
    pub mass: Vec<f64>,
}

impl VelocityFrame {
    pub fn from_eikonal(f: &EikonalFields) -> Self {
        let grid = f.rho.grid();
        let n = grid.n();
        let mut blocked = vec![false; n];
        for (slot, &m) in f.node_mask.iter().enumerate() {
            if m {
                let k = grid.storage_points()[slot];
                let lo = k.saturating_sub(NODE_GUARD_CELLS);
                let hi = (k + NODE_GUARD_CELLS).min(n - 1);
                blocked[lo..=hi].iter_mut().for_each(|v| *v = true);
            }
        }
        Self {
            t: f.t,
            x0: grid.x_min(),
            dx: grid.dx(),
            velocity: f.grad_s.point_values(),
            blocked,
            mass: cumulative_integral(&f.rho),
        }
    }
}

/// Frames of `v_a` and cumulative mass, linearly interpolated in `x` and `t`.
#[derive(Clone, Debug)]
pub struct FrameVelocity {
    times: Vec<f64>,
    x0: f64,
    dx: f64,
    velocity: Vec<Vec<f64>>,
    blocked: Vec<Vec<bool>>,
    mass: Vec<Vec<f64>>,
}

impl FrameVelocity {
    /// Builds the source from decomposed frames ordered in time.
    pub fn from_frames(frames: &[&EikonalFields]) -> Result<Self> {
        Self::new(frames.iter().map(|f| VelocityFrame::from_eikonal(f)).collect())
    }

    pub fn new(frames: Vec<VelocityFrame>) -> Result<Self> {
        let Some(first) = frames.first() else {
            return Err(Error::Parameter("no frames for the velocity source".into()));
        };
        let (x0, dx, n) = (first.x0, first.dx, first.velocity.len());
        let mut out = Self { times: Vec::new(), x0, dx, velocity: Vec::new(), blocked: Vec::new(), mass: Vec::new() };
        for f in frames {
            if f.velocity.len() != n || f.x0 != x0 || f.dx != dx {
                return Err(Error::Parameter("velocity frames live on different grids".into()));
            }
            if let Some(&last) = out.times.last() {
                if !(f.t > last) {
                    return Err(Error::Parameter("frame times must increase strictly".into()));
                }
            }
            out.times.push(f.t);
            out.velocity.push(f.velocity);
            out.blocked.push(f.blocked);
            out.mass.push(f.mass);
        }
        Ok(out)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    fn bracket(&self, t: f64) -> Option<(usize, f64)> {
        let n = self.times.len();
        if n == 1 {
            return (t == self.times[0]).then_some((0, 0.0));
        }
        let span = self.times[n - 1] - self.times[0];
        let slack = 1e-12 * span;
        if t < self.times[0] - slack || t > self.times[n - 1] + slack {
            return None;
        }
        let i = self.times.partition_point(|&s| s <= t).clamp(1, n - 1) - 1;
        let w = ((t - self.times[i]) / (self.times[i + 1] - self.times[i])).clamp(0.0, 1.0);
        Some((i, w))
    }

    fn x_max(&self) -> f64 {
        self.x0 + (self.velocity[0].len() - 1) as f64 * self.dx
    }
}

impl VelocitySource for FrameVelocity {
    fn velocity(&self, x: f64, t: f64) -> Result<f64> {
        let outside = || Error::OutOfDomain { x, min: self.x0, max: self.x_max() };
        let (i, w) = self.bracket(t).ok_or_else(|| Error::Parameter(format!("time {t} outside the frames")))?;
        let j = (i + 1).min(self.times.len() - 1);
        let v0 = interpolate_uniform(self.x0, self.dx, &self.velocity[i], x).ok_or_else(outside)?;
        let v1 = interpolate_uniform(self.x0, self.dx, &self.velocity[j], x).ok_or_else(outside)?;
        let cell = (((x - self.x0) / self.dx).floor() as usize).min(self.velocity[0].len() - 2);
        if [i, j].iter().any(|&f| self.blocked[f][cell] || self.blocked[f][cell + 1]) {
            return Err(Error::NodeRegion { x, t });
        }
        Ok(v0 * (1.0 - w) + v1 * w)
    }

    fn mass_below(&self, x: f64, t: f64) -> Option<f64> {
        let (i, w) = self.bracket(t)?;
        let j = (i + 1).min(self.times.len() - 1);
        let m0 = interpolate_uniform(self.x0, self.dx, &self.mass[i], x)?;
        let m1 = interpolate_uniform(self.x0, self.dx, &self.mass[j], x)?;
        Some(m0 * (1.0 - w) + m1 * w)
    }
}

/// RK4 path from `seed_x` over `[t0, t1]` with steps no longer than `dt`.
pub fn integrate_streamline(
    seed_x: f64,
    t0: f64,
    t1: f64,
    dt: f64,
    source: &dyn VelocitySource,
) -> Result<Streamline> {
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
    }
    if !(t1 > t0) {
        return Err(Error::Parameter(format!("empty time span [{t0}, {t1}]")));
    }
    let steps = ((t1 - t0) / dt - 1e-9).ceil().max(1.0) as usize;
    let h = (t1 - t0) / steps as f64;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push((t0, seed_x));
    let mut x = seed_x;
    let mut status = StreamlineStatus::Complete;
    if let Err(e) = source.velocity(x, t0) {
        return Ok(Streamline { seed_x, samples, status: stop_status(e)? });
    }
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        match rk4_step(x, t, h, |x, t| source.velocity(x, t)) {
            Ok(next) => {
                x = next;
                samples.push((t0 + (s + 1) as f64 * h, x));
            }
            Err(e) => {
                status = stop_status(e)?;
                break;
            }
        }
    }
    Ok(Streamline { seed_x, samples, status })
}

fn stop_status(e: Error) -> Result<StreamlineStatus> {
    match e {
        Error::OutOfDomain { .. } => Ok(StreamlineStatus::LeftDomain),
        Error::NodeRegion { .. } => Ok(StreamlineStatus::HitNodeRegion),
        other => Err(other),
    }
}

/// Family diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyDiagnostics {
    /// Sample times at which some adjacent pair swapped order.
    pub crossings: usize,
    /// Largest `|m_i(t) − m_i(t₀)| / m_i(t₀)` over adjacent complete pairs.
    pub max_relative_mass_drift: f64,
    pub complete: usize,
}

#[derive(Clone, Debug)]
pub struct StreamlineFamily {
    pub lines: Vec<Streamline>,
    pub diagnostics: FamilyDiagnostics,
}

/// Integrates every seed (in parallel) and checks ordering and the mass
/// carried between neighbouring streamlines.
pub fn streamline_family(
    seeds: &[f64],
    t0: f64,
    t1: f64,
    dt: f64,
    source: &dyn VelocitySource,
) -> Result<StreamlineFamily> {
    if seeds.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Parameter("seeds must be strictly ascending".into()));
    }
    let lines: Vec<Streamline> = seeds
        .par_iter()
        .map(|&s| integrate_streamline(s, t0, t1, dt, source))
        .collect::<Result<_>>()?;

    let complete: Vec<&Streamline> =
        lines.iter().filter(|l| l.status == StreamlineStatus::Complete).collect();
    let mut crossings = 0;
    let mut drift: f64 = 0.0;
    if let Some(first) = complete.first() {
        let initial: Vec<f64> = complete
            .windows(2)
            .map(|p| mass_between(source, p[0].samples[0], p[1].samples[0]))
            .collect();
        for s in 0..first.samples.len() {
            let t = first.samples[s].0;
            let mut crossed = false;
            for (i, pair) in complete.windows(2).enumerate() {
                let (a, b) = (pair[0].samples[s], pair[1].samples[s]);
                if a.1 >= b.1 {
                    crossed = true;
                }
                if initial[i] > 0.0 {
                    let m = mass_between(source, (t, a.1), (t, b.1));
                    drift = drift.max((m - initial[i]).abs() / initial[i]);
                }
            }
            crossings += crossed as usize;
        }
    }
    let diagnostics =
        FamilyDiagnostics { crossings, max_relative_mass_drift: drift, complete: complete.len() };
    Ok(StreamlineFamily { lines, diagnostics })
}

fn mass_between(source: &dyn VelocitySource, a: (f64, f64), b: (f64, f64)) -> f64 {
    match (source.mass_below(a.1, a.0), source.mass_below(b.1, b.0)) {
        (Some(ma), Some(mb)) => mb - ma,
        _ => f64::NAN,
    }
}

/// Seeds at the density quantiles `(i + ½)/count`.
pub fn density_quantile_seeds(rho: &RealField, count: usize) -> Vec<f64> {
    let grid = rho.grid();
    let cdf = cumulative_integral(rho);
    let total = *cdf.last().expect("non-empty grid");
    (0..count)
        .map(|i| {
            let level = (i as f64 + 0.5) / count as f64 * total;
            let k = cdf.partition_point(|&c| c < level).clamp(1, grid.n() - 1);
            let (c0, c1) = (cdf[k - 1], cdf[k]);
            let w = if c1 > c0 { (level - c0) / (c1 - c0) } else { 0.0 };
            grid.x(k - 1) + w * grid.dx()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SpatialGrid;
    use std::sync::Arc;

    /// Unit density on `[0, 1]` drifting at speed `v`.
    fn uniform(t: f64, v: f64, blocked_at: Option<usize>) -> VelocityFrame {
        let n = 101;
        let mut blocked = vec![false; n];
        if let Some(k) = blocked_at {
            blocked[k] = true;
        }
        VelocityFrame {
            t,
            x0: 0.0,
            dx: 0.01,
            velocity: vec![v; n],
            blocked,
            mass: (0..n).map(|k| k as f64 * 0.01).collect(),
        }
    }

    fn source(v: f64) -> FrameVelocity {
        FrameVelocity::new(vec![uniform(0.0, v, None), uniform(1.0, v, None)]).unwrap()
    }

    #[test]
    fn constant_drift_is_exact() {
        let s = integrate_streamline(0.1, 0.0, 1.0, 0.01, &source(0.5)).unwrap();
        assert_eq!(s.status, StreamlineStatus::Complete);
        let &(t, x) = s.samples.last().unwrap();
        assert!((t - 1.0).abs() < 1e-14 && (x - 0.6).abs() < 1e-12);
        assert!(s.reversals(1e-9).is_empty());
    }

    #[test]
    fn leaving_the_grid_stops_the_line() {
        let s = integrate_streamline(0.8, 0.0, 1.0, 0.01, &source(0.5)).unwrap();
        assert_eq!(s.status, StreamlineStatus::LeftDomain);
        assert!(s.samples.last().unwrap().1 <= 1.0);
    }

    #[test]
    fn node_zones_block_the_velocity() {
        let src = FrameVelocity::new(vec![uniform(0.0, 0.5, Some(50)), uniform(1.0, 0.5, None)]).unwrap();
        let s = integrate_streamline(0.3, 0.0, 1.0, 0.01, &src).unwrap();
        assert_eq!(s.status, StreamlineStatus::HitNodeRegion);
        assert!(matches!(src.velocity(0.5, 0.0), Err(Error::NodeRegion { .. })));
    }

    #[test]
    fn frames_must_share_a_grid_and_advance() {
        assert!(FrameVelocity::new(vec![]).is_err());
        assert!(FrameVelocity::new(vec![uniform(1.0, 0.0, None), uniform(0.5, 0.0, None)]).is_err());
        let mut other = uniform(2.0, 0.0, None);
        other.dx = 0.02;
        assert!(FrameVelocity::new(vec![uniform(0.0, 0.0, None), other]).is_err());
        assert!(source(1.0).velocity(0.5, 1.5).is_err());
        assert!(integrate_streamline(0.5, 0.0, 1.0, 0.0, &source(1.0)).is_err());
        assert!(integrate_streamline(0.5, 1.0, 1.0, 0.1, &source(1.0)).is_err());
    }

    #[test]
    fn velocity_interpolates_in_time() {
        let src = FrameVelocity::new(vec![uniform(0.0, 0.0, None), uniform(2.0, 1.0, None)]).unwrap();
        assert!((src.velocity(0.4, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!((src.mass_below(0.25, 1.0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn family_keeps_order_and_mass_under_translation() {
        let fam = streamline_family(&[0.1, 0.2, 0.3], 0.0, 1.0, 0.01, &source(0.3)).unwrap();
        assert_eq!(fam.diagnostics.complete, 3);
        assert_eq!(fam.diagnostics.crossings, 0);
        assert!(fam.diagnostics.max_relative_mass_drift < 1e-12);
        assert!(streamline_family(&[0.2, 0.1], 0.0, 1.0, 0.01, &source(0.3)).is_err());
    }

    #[test]
    fn reversals_report_positive_to_negative_turns() {
        let samples = vec![(0.0, 0.0), (1.0, 1.0), (2.0, 1.0), (3.0, 0.5), (4.0, 0.6)];
        let s = Streamline { seed_x: 0.0, samples, status: StreamlineStatus::Complete };
        assert_eq!(s.reversals(1e-6), vec![2.0]);
    }

    #[test]
    fn quantile_seeds_of_a_flat_density() {
        let g = Arc::new(SpatialGrid::spanning(0.0, 1.0, 101, false, &[]).unwrap());
        let rho = RealField::from_fn(&g, |_| 1.0);
        let seeds = density_quantile_seeds(&rho, 4);
        for (s, want) in seeds.iter().zip([0.125, 0.375, 0.625, 0.875]) {
            assert!((s - want).abs() < 1e-12, "{s}");
        }
    }
}
