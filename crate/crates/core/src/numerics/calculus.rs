use super::field::{Field, RealField, Scalar};

/// Second-order first derivative, segment by segment.
///
/// Interior points use the central difference; the ends of every segment use
/// the three-point one-sided stencil, so nothing is differenced across a wall
/// or discontinuity.
pub fn gradient<T: Scalar>(f: &Field<T>) -> Field<T> {
    let grid = f.grid().clone();
    let inv = 1.0 / (2.0 * grid.dx());
    let y = f.values();
    let mut out = vec![T::default(); y.len()];
    for seg in grid.segments() {
        let r = seg.storage();
        let (a, b) = (r.start, r.end - 1);
        out[a] = (y[a + 1] * 4.0 - y[a] * 3.0 - y[a + 2]) * inv;
        for i in a + 1..b {
            out[i] = (y[i + 1] - y[i - 1]) * inv;
        }
        out[b] = (y[b] * 3.0 - y[b - 1] * 4.0 + y[b - 2]) * inv;
    }
    Field::from_storage(&grid, out).expect("storage length preserved")
}

/// Second-order second derivative, segment by segment.
///
/// Three-point stencil inside; `(2y0 - 5y1 + 4y2 - y3)/h^2` at segment ends.
pub fn laplacian<T: Scalar>(f: &Field<T>) -> Field<T> {
    let grid = f.grid().clone();
    let inv = 1.0 / (grid.dx() * grid.dx());
    let y = f.values();
    let mut out = vec![T::default(); y.len()];
    for seg in grid.segments() {
        let r = seg.storage();
        let (a, b) = (r.start, r.end - 1);
        out[a] = (y[a] * 2.0 - y[a + 1] * 5.0 + y[a + 2] * 4.0 - y[a + 3]) * inv;
        for i in a + 1..b {
            out[i] = (y[i + 1] - y[i] * 2.0 + y[i - 1]) * inv;
        }
        out[b] = (y[b] * 2.0 - y[b - 1] * 5.0 + y[b - 2] * 4.0 - y[b - 3]) * inv;
    }
    Field::from_storage(&grid, out).expect("storage length preserved")
}

/// Trapezoidal rule, summed over segments so each side of a jump uses its own limit.
pub fn integrate(f: &RealField) -> f64 {
    let grid = f.grid();
    let y = f.values();
    let mut total = 0.0;
    for seg in grid.segments() {
        let r = seg.storage();
        let s: f64 = y[r.clone()].iter().sum();
        total += s - 0.5 * (y[r.start] + y[r.end - 1]);
    }
    total * grid.dx()
}

/// Running trapezoidal integral from the left wall, one value per grid point.
pub fn cumulative_integral(f: &RealField) -> Vec<f64> {
    let grid = f.grid();
    let y = f.values();
    let h = grid.dx();
    let mut out = Vec::with_capacity(grid.n());
    let mut acc = 0.0;
    out.push(0.0);
    for seg in grid.segments() {
        let r = seg.storage();
        for i in r.start + 1..r.end {
            acc += 0.5 * h * (y[i] + y[i - 1]);
            out.push(acc);
        }
    }
    out
}

/// Trapezoidal integral over the grid points with `x` in `[lo, hi]` (whole cells only).
pub fn integrate_window(f: &RealField, lo: f64, hi: f64) -> f64 {
    let grid = f.grid();
    let cum = cumulative_integral(f);
    let first = ((lo - grid.x_min()) / grid.dx() - 1e-9).ceil().max(0.0) as usize;
    let last = (((hi - grid.x_min()) / grid.dx() + 1e-9).floor().max(0.0) as usize).min(grid.n() - 1);
    if last <= first {
        return 0.0;
    }
    cum[last] - cum[first]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SpatialGrid;
    use std::sync::Arc;

    fn grid(discs: &[f64]) -> Arc<SpatialGrid> {
        Arc::new(SpatialGrid::spanning(-1.0, 1.0, 41, true, discs).unwrap())
    }

    #[test]
    fn stencils_are_exact_on_quadratics_and_cubics() {
        let g = grid(&[0.0]);
        let f = RealField::from_fn(&g, |x| 3.0 * x * x - x + 2.0);
        for (v, &k) in gradient(&f).values().iter().zip(g.storage_points()) {
            assert!((v - (6.0 * g.x(k) - 1.0)).abs() < 1e-12);
        }
        let c = RealField::from_fn(&g, |x| x * x * x);
        for (v, &k) in laplacian(&c).values().iter().zip(g.storage_points()) {
            assert!((v - 6.0 * g.x(k)).abs() < 1e-9, "{v} at {}", g.x(k));
        }
    }

    #[test]
    fn stencils_never_cross_a_jump() {
        let g = grid(&[0.0]);
        let f = RealField::from_segment_fn(&g, |s, x| if s == 0 { x } else { 5.0 + 2.0 * x });
        let d = gradient(&f);
        let (l, r) = d.limits(20);
        assert!((l - 1.0).abs() < 1e-12 && (r - 2.0).abs() < 1e-12);
        assert!(laplacian(&f).max_abs() < 1e-9);
    }

    #[test]
    fn trapezoid_integrals() {
        let g = grid(&[]);
        let f = RealField::from_fn(&g, |x| x * x);
        let h = g.dx();
        // Trapezoid error for x² on [−1, 1] is exactly h²·(b−a)/6.
        assert!((integrate(&f) - (2.0 / 3.0 + h * h / 3.0)).abs() < 1e-14);
        let cum = cumulative_integral(&f);
        assert_eq!(cum.len(), 41);
        assert!((cum[40] - integrate(&f)).abs() < 1e-14);
        let one = RealField::from_fn(&g, |_| 1.0);
        assert!((integrate_window(&one, 0.0, 0.5) - 0.5).abs() < 1e-14);
        assert_eq!(integrate_window(&one, 0.5, 0.0), 0.0);
    }

    #[test]
    fn jump_integrates_each_side_with_its_own_limit() {
        let g = grid(&[0.0]);
        let step = RealField::from_segment_fn(&g, |s, _| if s == 0 { 0.0 } else { 1.0 });
        assert!((integrate(&step) - 1.0).abs() < 1e-14);
        let cum = cumulative_integral(&step);
        assert_eq!(cum.len(), 41);
        assert!(cum[20].abs() < 1e-14);
    }
}
