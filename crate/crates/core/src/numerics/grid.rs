use crate::error::{Error, Result};

/// Smallest number of points a segment between walls/discontinuities may hold.
/// The one-sided second-difference stencil reaches four points.
pub const MIN_SEGMENT_POINTS: usize = 4;

/// A run of grid points free of declared discontinuities.
///
/// Neighbouring segments share their boundary grid point; a field stores that
/// point twice, once as the left segment's right limit and once as the right
/// segment's left limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    /// First grid index.
    pub first: usize,
    /// Last grid index (inclusive).
    pub last: usize,
    /// Storage index of `first`.
    pub offset: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn storage(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Uniform 1D grid `x_k = x_min + k dx` with optional infinite walls at both
/// ends and interior points where the potential jumps.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialGrid {
    x_min: f64,
    dx: f64,
    n: usize,
    wall_left: bool,
    wall_right: bool,
    discontinuities: Vec<usize>,
    snap_offsets: Vec<f64>,
    segments: Vec<Segment>,
    storage_points: Vec<usize>,
}

impl SpatialGrid {
    /// Builds a grid, snapping every declared discontinuity to its nearest grid point.
    pub fn new(
        x_min: f64,
        dx: f64,
        n: usize,
        wall_left: bool,
        wall_right: bool,
        discontinuities: &[f64],
    ) -> Result<Self> {
        if n < 3 {
            return Err(Error::Grid(format!("need at least 3 points, got {n}")));
        }
        if !(dx > 0.0 && dx.is_finite() && x_min.is_finite()) {
            return Err(Error::Grid(format!("invalid spacing {dx} or origin {x_min}")));
        }
        let x_max = x_min + (n - 1) as f64 * dx;
        let mut idx = Vec::with_capacity(discontinuities.len());
        let mut snap_offsets = Vec::with_capacity(discontinuities.len());
        for &xd in discontinuities {
            if !(xd > x_min && xd < x_max) {
                return Err(Error::Grid(format!(
                    "discontinuity {xd} not strictly inside ({x_min}, {x_max})"
                )));
            }
            let k = ((xd - x_min) / dx).round() as usize;
            if k == 0 || k >= n - 1 {
                return Err(Error::Grid(format!("discontinuity {xd} snaps onto a wall")));
            }
            if let Some(&prev) = idx.last() {
                if k <= prev {
                    return Err(Error::Grid(format!(
                        "discontinuities must be ascending and distinct after snapping ({xd})"
                    )));
                }
            }
            snap_offsets.push(x_min + k as f64 * dx - xd);
            idx.push(k);
        }

        let mut bounds = vec![0];
        bounds.extend(&idx);
        bounds.push(n - 1);
        let mut segments = Vec::with_capacity(bounds.len() - 1);
        let mut storage_points = Vec::with_capacity(n + idx.len());
        for (s, w) in bounds.windows(2).enumerate() {
            let seg = Segment { first: w[0], last: w[1], offset: w[0] + s };
            if seg.len() < MIN_SEGMENT_POINTS {
                return Err(Error::Grid(format!(
                    "segment [{}, {}] has {} points, need {MIN_SEGMENT_POINTS}",
                    seg.first,
                    seg.last,
                    seg.len()
                )));
            }
            storage_points.extend(seg.first..=seg.last);
            segments.push(seg);
        }

        Ok(Self {
            x_min,
            dx,
            n,
            wall_left,
            wall_right,
            discontinuities: idx,
            snap_offsets,
            segments,
            storage_points,
        })
    }

    /// Grid spanning `[x_min, x_max]` with `n` points.
    pub fn spanning(
        x_min: f64,
        x_max: f64,
        n: usize,
        walls: bool,
        discontinuities: &[f64],
    ) -> Result<Self> {
        if n < 3 {
            return Err(Error::Grid(format!("need at least 3 points, got {n}")));
        }
        if !(x_max > x_min) {
            return Err(Error::Grid(format!("empty interval [{x_min}, {x_max}]")));
        }
        Self::new(x_min, (x_max - x_min) / (n - 1) as f64, n, walls, walls, discontinuities)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n - 1)
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn wall_left(&self) -> bool {
        self.wall_left
    }

    pub fn wall_right(&self) -> bool {
        self.wall_right
    }

    #[inline]
    pub fn x(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.x(k)).collect()
    }

    /// Grid indices of the discontinuities.
    pub fn discontinuities(&self) -> &[usize] {
        &self.discontinuities
    }

    /// Snapped position minus declared position, per discontinuity.
    pub fn snap_offsets(&self) -> &[f64] {
        &self.snap_offsets
    }

    pub fn is_discontinuity(&self, k: usize) -> bool {
        self.discontinuities.binary_search(&k).is_ok()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Length of segment-aware storage: `n` plus one extra slot per discontinuity.
    pub fn storage_len(&self) -> usize {
        self.storage_points.len()
    }

    /// Grid index for every storage slot.
    pub fn storage_points(&self) -> &[usize] {
        &self.storage_points
    }

    /// Storage slots `(left_limit, right_limit)` of grid point `k`. Equal unless
    /// `k` is a discontinuity.
    pub fn slots(&self, k: usize) -> (usize, usize) {
        let before = self.discontinuities.partition_point(|&d| d < k);
        let at = self.is_discontinuity(k) as usize;
        (k + before, k + before + at)
    }

    /// Distance in cells from `k` to the nearest discontinuity.
    pub fn cells_to_discontinuity(&self, k: usize) -> Option<usize> {
        self.discontinuities.iter().map(|&d| d.abs_diff(k)).min()
    }
}
