use std::sync::Arc;

use super::basis::{BasisKind, SpectralBasis};
use super::potential::PotentialSpec;
use crate::error::{Error, Result};
use crate::numerics::{ComplexField, RealField, SpatialGrid};
use num_complex::Complex64;

const MAX_INVERSE_ITERATIONS: usize = 12;
/// Largest overlap a twisted eigenvector may have with a lower state.
const TWISTED_OVERLAP_LIMIT: f64 = 1e-10;
const TWISTED_REFINEMENTS: usize = 4;

/// Lowest `n_states` eigenpairs of the finite-difference Hamiltonian for `p`.
pub fn solve_fd_eigens(p: &PotentialSpec, grid: &Arc<SpatialGrid>, n_states: usize) -> Result<SpectralBasis> {
    solve_fd_eigens_sampled(grid, &p.sample(grid), n_states)
}

/// Same as [`solve_fd_eigens`] for any sampled potential, smooth or not.
///
/// The Hamiltonian is `−½` times the three-point second difference plus the
/// diagonal potential on interior points, with Dirichlet walls. At a
/// discontinuity the potential is the mean of its two limits.
/// Eigenvalues come from Sturm-sequence bisection and eigenvectors from
/// inverse iteration; states are orthonormal on the grid, with the first
/// significant lobe from the left made positive.
pub fn solve_fd_eigens_sampled(
    grid: &Arc<SpatialGrid>,
    potential: &RealField,
    n_states: usize,
) -> Result<SpectralBasis> {
    if !(grid.wall_left() && grid.wall_right()) {
        return Err(Error::Parameter("finite-difference solver needs walls at both ends".into()));
    }
    let m = grid.n() - 2;
    if n_states == 0 || n_states > m {
        return Err(Error::Parameter(format!("requested {n_states} states from {m} unknowns")));
    }
    let h = grid.dx();
    let off = -0.5 / (h * h);
    let pot: Vec<f64> = (1..=m).map(|k| potential.at_point(k)).collect();
    let diag: Vec<f64> = pot.iter().map(|u| 1.0 / (h * h) + u).collect();
    let t = Tridiagonal { diag, off, pot, h2: h * h };

    let (lo, hi) = t.gershgorin();
    let mut energies = Vec::with_capacity(n_states);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(n_states);
    for j in 0..n_states {
        let lambda = t.bisect(j, lo, hi);
        let (lambda, v) = match t.twisted_pair(lambda) {
            Some((l, v)) if max_overlap(&v, &vectors) < TWISTED_OVERLAP_LIMIT => (l, v),
            _ => (lambda, t.inverse_iteration(lambda, j, &vectors)?),
        };
        energies.push(lambda);
        vectors.push(v);
    }

    let scale = h.sqrt().recip();
    let states = vectors
        .iter()
        .map(|v| {
            let mut pts = Vec::with_capacity(grid.n());
            pts.push(Complex64::default());
            pts.extend(v.iter().map(|&x| Complex64::new(x * scale, 0.0)));
            pts.push(Complex64::default());
            ComplexField::from_points(grid, &pts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralBasis::new(BasisKind::FiniteDifference, grid.clone(), energies, states, Vec::new()))
}

/// `−½` second difference plus a diagonal potential.
struct Tridiagonal {
    diag: Vec<f64>,
    /// The potential part of `diag`, kept separately for the twisted solver.
    pot: Vec<f64>,
    h2: f64,
    off: f64,
}

impl Tridiagonal {
    fn gershgorin(&self) -> (f64, f64) {
        let r = 2.0 * self.off.abs();
        let lo = self.diag.iter().copied().fold(f64::INFINITY, f64::min) - r;
        let hi = self.diag.iter().copied().fold(f64::NEG_INFINITY, f64::max) + r;
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`.
    fn count_below(&self, x: f64) -> usize {
        let e2 = self.off * self.off;
        let tiny = f64::MIN_POSITIVE.sqrt() * (1.0 + self.off.abs());
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0..self.diag.len() {
            if i > 0 {
                q = self.diag[i] - x - e2 / q;
            }
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn bisect(&self, j: usize, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
            if self.count_below(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let m = v.len();
        (0..m)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.off * v[i - 1];
                }
                if i + 1 < m {
                    s += self.off * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// Eigenpair from the twisted factorization `T − λ = N_r Δ N_rᵀ`, with
    /// the twist where `|γ_r|` is smallest, refined by the Rayleigh correction
    /// `λ += γ_r / ‖z‖²`. Each component comes out with high relative
    /// accuracy, so second differences stay clean where inverse iteration
    /// would leave an absolute error at the worst pivot.
    fn twisted_pair(&self, mut lambda: f64) -> Option<(f64, Vec<f64>)> {
        let mut z = Vec::new();
        for _ in 0..TWISTED_REFINEMENTS {
            let (gamma, v) = self.twisted_vector(lambda)?;
            let norm2: f64 = v.iter().map(|x| x * x).sum();
            let step = gamma / norm2;
            z = v;
            lambda += step;
            if step.abs() <= f64::EPSILON * lambda.abs() {
                break;
            }
        }
        normalize(&mut z);
        orient(&mut z);
        Some((lambda, z))
    }

    /// Unnormalized twisted vector with `z_r = 1`, and `γ_r` of `T − λ`.
    ///
    /// Works on `2h²(T − λ)`, whose diagonal is `2 + c_k` with
    /// `c_k = 2h²(U_k − λ)`, through the Riccati variables `p = d⁺ − 1` and
    /// `q = d⁻ − 1`. They stay small for resolved states, so nothing is lost
    /// to cancellation against the `2/h²` kinetic diagonal.
    fn twisted_vector(&self, lambda: f64) -> Option<(f64, Vec<f64>)> {
        let m = self.pot.len();
        let c: Vec<f64> = self.pot.iter().map(|u| 2.0 * self.h2 * (u - lambda)).collect();
        let tiny = f64::MIN_POSITIVE.sqrt();
        let guard = |x: f64| if x == -1.0 { -1.0 + tiny } else { x };
        let mut p = vec![0.0; m];
        let mut q = vec![0.0; m];
        p[0] = guard(1.0 + c[0]);
        for i in 1..m {
            p[i] = guard(c[i] + p[i - 1] / (1.0 + p[i - 1]));
        }
        q[m - 1] = guard(1.0 + c[m - 1]);
        for i in (0..m - 1).rev() {
            q[i] = guard(c[i] + q[i + 1] / (1.0 + q[i + 1]));
        }
        let (r, gamma) = (0..m)
            .map(|k| (k, p[k] + q[k] - c[k]))
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?;
        let mut z = vec![0.0; m];
        z[r] = 1.0;
        for i in (0..r).rev() {
            z[i] = z[i + 1] / (1.0 + p[i]);
        }
        for i in r + 1..m {
            z[i] = z[i - 1] / (1.0 + q[i]);
        }
        z.iter().all(|x| x.is_finite()).then_some((gamma / (2.0 * self.h2), z))
    }

    fn inverse_iteration(&self, lambda: f64, index: usize, previous: &[Vec<f64>]) -> Result<Vec<f64>> {
        let m = self.diag.len();
        let norm_t = self.diag.iter().fold(0.0f64, |a, d| a.max(d.abs())) + 2.0 * self.off.abs();
        let lu = ShiftedLu::factor(self, lambda, norm_t);
        let mut v: Vec<f64> = (0..m).map(|i| start_vector(i, index)).collect();
        normalize(&mut v);
        let tol = 1e3 * f64::EPSILON * norm_t;
        let mut residual = f64::INFINITY;
        for it in 0..MAX_INVERSE_ITERATIONS {
            lu.solve(&mut v);
            for p in previous {
                let d: f64 = p.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (x, y) in v.iter_mut().zip(p) {
                    *x -= d * y;
                }
            }
            normalize(&mut v);
            let tv = self.apply(&v);
            residual = tv.iter().zip(&v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
            if it >= 1 && residual <= tol {
                orient(&mut v);
                return Ok(v);
            }
        }
        Err(Error::EigenSolver { state: index, iterations: MAX_INVERSE_ITERATIONS, residual })
    }
}

fn max_overlap(v: &[f64], previous: &[Vec<f64>]) -> f64 {
    previous.iter().map(|p| p.iter().zip(v).map(|(a, b)| a * b).sum::<f64>().abs()).fold(0.0, f64::max)
}

fn start_vector(i: usize, seed: usize) -> f64 {
    let x = ((i as f64 + 1.0) * 12.9898 + (seed as f64 + 1.0) * 78.233).sin() * 43758.5453;
    x - x.floor() - 0.5
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= n;
    }
}

/// Makes the first sample above 1e-3 of the peak positive.
fn orient(v: &mut [f64]) {
    let peak = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-3 * peak) {
        if *first < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
}

/// LU factors of `T − σI` with partial pivoting (LAPACK `gttrf` layout).
struct ShiftedLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swap: Vec<bool>,
}

impl ShiftedLu {
    fn factor(t: &Tridiagonal, sigma: f64, norm_t: f64) -> Self {
        let m = t.diag.len();
        let mut d: Vec<f64> = t.diag.iter().map(|x| x - sigma).collect();
        let mut dl = vec![t.off; m.saturating_sub(1)];
        let mut du = vec![t.off; m.saturating_sub(1)];
        let mut du2 = vec![0.0; m.saturating_sub(2)];
        let mut swap = vec![false; m];
        for i in 0..m.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                swap[i] = true;
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < m {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
            }
        }
        let floor = f64::EPSILON * norm_t;
        for x in &mut d {
            if x.abs() < floor {
                *x = floor.copysign(*x);
            }
        }
        Self { dl, d, du, du2, swap }
    }

    fn solve(&self, b: &mut [f64]) {
        let m = b.len();
        for i in 0..m - 1 {
            if self.swap[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[m - 1] /= self.d[m - 1];
        if m > 1 {
            b[m - 2] = (b[m - 2] - self.du[m - 2] * b[m - 1]) / self.d[m - 2];
        }
        for i in (0..m.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}
