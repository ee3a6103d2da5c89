use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{RealField, SpatialGrid};

/// Constant potential on `[start, end]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSegment {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

/// Piecewise-constant potential inside a box with infinite walls at both ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub box_left: f64,
    pub box_right: f64,
    pub segments: Vec<PotentialSegment>,
}

/// Symmetric well `(-L, L)` with a centred barrier of half-width `a` and height `U0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoubleWell {
    pub half_width: f64,
    pub barrier_half_width: f64,
    pub barrier_height: f64,
}

impl DoubleWell {
    pub fn spec(&self) -> PotentialSpec {
        PotentialSpec::double_well(self.half_width, self.barrier_half_width, self.barrier_height)
    }
}

impl PotentialSpec {
    /// Empty box `[left, right]`.
    pub fn free_box(left: f64, right: f64) -> Self {
        Self {
            box_left: left,
            box_right: right,
            segments: vec![PotentialSegment { start: left, end: right, value: 0.0 }],
        }
    }

    /// Box `(-l, l)` with a barrier of height `u0` on `(-a, a)`.
    pub fn double_well(l: f64, a: f64, u0: f64) -> Self {
        Self {
            box_left: -l,
            box_right: l,
            segments: vec![
                PotentialSegment { start: -l, end: -a, value: 0.0 },
                PotentialSegment { start: -a, end: a, value: u0 },
                PotentialSegment { start: a, end: l, value: 0.0 },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("potential: {m}")));
        if !(self.box_left.is_finite() && self.box_right.is_finite() && self.box_right > self.box_left) {
            return bad(format!("box [{}, {}] is empty", self.box_left, self.box_right));
        }
        let Some(first) = self.segments.first() else {
            return bad("no segments".into());
        };
        if first.start != self.box_left {
            return bad(format!("first segment starts at {} not {}", first.start, self.box_left));
        }
        for w in self.segments.windows(2) {
            if w[0].end != w[1].start {
                return bad(format!("gap or overlap between {} and {}", w[0].end, w[1].start));
            }
        }
        for s in &self.segments {
            if !(s.end > s.start) || !s.value.is_finite() {
                return bad(format!("segment [{}, {}] with value {} is invalid", s.start, s.end, s.value));
            }
        }
        let last = self.segments.last().expect("non-empty");
        if last.end != self.box_right {
            return bad(format!("last segment ends at {} not {}", last.end, self.box_right));
        }
        Ok(())
    }

    /// Half the box width.
    pub fn half_width(&self) -> f64 {
        0.5 * (self.box_right - self.box_left)
    }

    /// Interior positions where the potential changes value.
    pub fn discontinuities(&self) -> Vec<f64> {
        self.segments
            .windows(2)
            .filter(|w| w[0].value != w[1].value)
            .map(|w| w[0].end)
            .collect()
    }

    /// The symmetric double-well view, when this is one.
    pub fn as_double_well(&self) -> Option<DoubleWell> {
        let [l, m, r] = self.segments.as_slice() else {
            return None;
        };
        let half = self.half_width();
        let symmetric = self.box_left == -self.box_right
            && l.value == 0.0
            && r.value == 0.0
            && m.start == -m.end
            && m.value > 0.0;
        symmetric.then_some(DoubleWell {
            half_width: half,
            barrier_half_width: m.end,
            barrier_height: m.value,
        })
    }

    /// Walled grid of `n` points over the box with every jump registered.
    pub fn grid(&self, n: usize) -> Result<Arc<SpatialGrid>> {
        self.validate()?;
        let g = SpatialGrid::spanning(self.box_left, self.box_right, n, true, &self.discontinuities())?;
        Ok(Arc::new(g))
    }

    /// Value on the segment containing `x`; at a shared end the right segment wins.
    pub fn value_at(&self, x: f64) -> f64 {
        self.segments
            .iter()
            .rev()
            .find(|s| x >= s.start)
            .or(self.segments.first())
            .map(|s| s.value)
            .unwrap_or(0.0)
    }

    /// Segment-aware samples: each side of a jump carries its own constant.
    pub fn sample(&self, grid: &Arc<SpatialGrid>) -> RealField {
        let jumps = self.discontinuities();
        RealField::from_segment_fn(grid, |seg, _| {
            let lo = if seg == 0 { self.box_left } else { jumps[seg - 1] };
            let hi = jumps.get(seg).copied().unwrap_or(self.box_right);
            self.value_at(0.5 * (lo + hi))
        })
    }
}
