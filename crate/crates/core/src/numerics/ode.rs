use crate::error::Result;

/// One classical fourth-order Runge-Kutta step of `dx/dt = v(x, t)`.
///
/// The velocity callback reports out-of-domain positions as errors, which
/// propagate unchanged.
pub fn rk4_step(
    x: f64,
    t: f64,
    dt: f64,
    mut v: impl FnMut(f64, f64) -> Result<f64>,
) -> Result<f64> {
    let half = 0.5 * dt;
    let k1 = v(x, t)?;
    let k2 = v(x + half * k1, t + half)?;
    let k3 = v(x + half * k2, t + half)?;
    let k4 = v(x + dt * k3, t + dt)?;
    Ok(x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

/// Piecewise-linear interpolation of samples on a uniform axis.
/// `None` when `x` is outside `[x0, x0 + (len-1) h]`.
pub fn interpolate_uniform(x0: f64, h: f64, values: &[f64], x: f64) -> Option<f64> {
    let s = (x - x0) / h;
    let last = values.len().checked_sub(1)?;
    if !(s >= 0.0 && s <= last as f64) {
        return None;
    }
    let i = (s.floor() as usize).min(last.saturating_sub(1));
    let w = s - i as f64;
    if last == 0 {
        return Some(values[0]);
    }
    Some(values[i] * (1.0 - w) + values[i + 1] * w)
}
