use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use super::grid::SpatialGrid;
use crate::error::{Error, Result};

/// Sample type a [`Field`] can hold.
pub trait Scalar:
    Copy
    + Default
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + 'static
{
}

impl Scalar for f64 {}
impl Scalar for Complex64 {}

/// Grid samples in segment-aware storage.
///
/// Storage holds one value per grid point plus a second value at every
/// discontinuity, so left and right limits survive differentiation.
#[derive(Clone, Debug)]
pub struct Field<T> {
    grid: Arc<SpatialGrid>,
    data: Vec<T>,
}

pub type RealField = Field<f64>;
pub type ComplexField = Field<Complex64>;

impl<T: Scalar> Field<T> {
    pub fn zeros(grid: &Arc<SpatialGrid>) -> Self {
        Self { grid: grid.clone(), data: vec![T::default(); grid.storage_len()] }
    }

    /// Wraps raw storage; the length must equal `grid.storage_len()`.
    pub fn from_storage(grid: &Arc<SpatialGrid>, data: Vec<T>) -> Result<Self> {
        if data.len() != grid.storage_len() {
            return Err(Error::Grid(format!(
                "storage length {} does not match grid storage {}",
                data.len(),
                grid.storage_len()
            )));
        }
        Ok(Self { grid: grid.clone(), data })
    }

    /// One value per grid point; discontinuity points get equal left/right limits.
    pub fn from_points(grid: &Arc<SpatialGrid>, points: &[T]) -> Result<Self> {
        if points.len() != grid.n() {
            return Err(Error::Grid(format!(
                "expected {} point values, got {}",
                grid.n(),
                points.len()
            )));
        }
        let data = grid.storage_points().iter().map(|&k| points[k]).collect();
        Ok(Self { grid: grid.clone(), data })
    }

    pub fn from_fn(grid: &Arc<SpatialGrid>, f: impl Fn(f64) -> T) -> Self {
        let data = grid.storage_points().iter().map(|&k| f(grid.x(k))).collect();
        Self { grid: grid.clone(), data }
    }

    /// `f(segment_index, x)`; lets piecewise functions take one-sided values.
    pub fn from_segment_fn(grid: &Arc<SpatialGrid>, f: impl Fn(usize, f64) -> T) -> Self {
        let mut data = Vec::with_capacity(grid.storage_len());
        for (s, seg) in grid.segments().iter().enumerate() {
            data.extend((seg.first..=seg.last).map(|k| f(s, grid.x(k))));
        }
        Self { grid: grid.clone(), data }
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<T> {
        self.data
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field { grid: self.grid.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map<U: Scalar, V: Scalar>(&self, other: &Field<U>, f: impl Fn(T, U) -> V) -> Field<V> {
        self.check_grid(other);
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Field { grid: self.grid.clone(), data }
    }

    /// Builds a field slot by slot from a closure over the storage index.
    pub fn from_slots(grid: &Arc<SpatialGrid>, f: impl Fn(usize) -> T) -> Self {
        Self { grid: grid.clone(), data: (0..grid.storage_len()).map(f).collect() }
    }

    /// `(left, right)` limits at grid point `k`.
    pub fn limits(&self, k: usize) -> (T, T) {
        let (l, r) = self.grid.slots(k);
        (self.data[l], self.data[r])
    }

    /// Value at grid point `k`; the mean of both limits at a discontinuity.
    pub fn at_point(&self, k: usize) -> T {
        let (l, r) = self.grid.slots(k);
        if l == r {
            self.data[l]
        } else {
            (self.data[l] + self.data[r]) * 0.5
        }
    }

    /// One value per grid point (limits averaged at discontinuities).
    pub fn point_values(&self) -> Vec<T> {
        (0..self.grid.n()).map(|k| self.at_point(k)).collect()
    }

    pub(crate) fn check_grid<U>(&self, other: &Field<U>) {
        assert!(
            Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid,
            "fields live on different grids"
        );
    }
}

impl RealField {
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl ComplexField {
    pub fn re(&self) -> RealField {
        self.map(|z| z.re)
    }

    pub fn im(&self) -> RealField {
        self.map(|z| z.im)
    }

    pub fn norm_sqr(&self) -> RealField {
        self.map(|z| z.norm_sqr())
    }
}

impl<T: Scalar> Add for &Field<T> {
    type Output = Field<T>;
    fn add(self, rhs: Self) -> Field<T> {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl<T: Scalar> Sub for &Field<T> {
    type Output = Field<T>;
    fn sub(self, rhs: Self) -> Field<T> {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl<T: Scalar> Mul<f64> for &Field<T> {
    type Output = Field<T>;
    fn mul(self, rhs: f64) -> Field<T> {
        self.map(|a| a * rhs)
    }
}

impl Mul for &RealField {
    type Output = RealField;
    fn mul(self, rhs: Self) -> RealField {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl Neg for &RealField {
    type Output = RealField;
    fn neg(self) -> RealField {
        self.map(|a| -a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<SpatialGrid> {
        Arc::new(SpatialGrid::spanning(0.0, 1.0, 11, true, &[0.5]).unwrap())
    }

    #[test]
    fn segment_fn_gives_distinct_limits() {
        let g = grid();
        let f = RealField::from_segment_fn(&g, |s, x| if s == 0 { x } else { 10.0 + x });
        assert_eq!(f.limits(5), (0.5, 10.5));
        assert_eq!(f.at_point(5), 5.5);
        assert_eq!(f.point_values().len(), 11);
    }

    #[test]
    fn from_points_duplicates_at_jumps() {
        let g = grid();
        let pts: Vec<f64> = (0..11).map(|k| k as f64).collect();
        let f = RealField::from_points(&g, &pts).unwrap();
        assert_eq!(f.values().len(), 12);
        assert_eq!(f.limits(5), (5.0, 5.0));
        assert!(RealField::from_storage(&g, vec![0.0; 3]).is_err());
    }

    #[test]
    fn arithmetic_is_pointwise() {
        let g = grid();
        let a = RealField::from_fn(&g, |x| x);
        let b = RealField::from_fn(&g, |x| 2.0 * x);
        assert!(((&a + &b).values()[3] - 0.9).abs() < 1e-15);
        assert!(((&b - &a).values()[4] - 0.4).abs() < 1e-15);
        assert!(((&a * &b).values()[11] - 2.0).abs() < 1e-15);
        assert_eq!((&a * 3.0).max(), 3.0);
        assert_eq!((-&a).max_abs(), 1.0);
    }

    #[test]
    fn complex_parts() {
        let g = grid();
        let z = ComplexField::from_fn(&g, |x| Complex64::new(x, -x));
        assert_eq!(z.re().values()[2], 0.2);
        assert_eq!(z.im().values()[2], -0.2);
        assert!((z.norm_sqr().values()[2] - 0.08).abs() < 1e-15);
    }
}
