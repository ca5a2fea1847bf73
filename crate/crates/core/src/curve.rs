//! Closed sampled curves on the uniform parameter grid `u_i = i/N` over
//! the circle `R/Z`, with periodic indexing and mesh-quality metrics.

use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// Smallest node count accepted anywhere.
pub const MIN_NODES: usize = 16;

/// Default bound on `max segment length / min segment length` before
/// geometry operations refuse the mesh.
pub const DEFAULT_MAX_MESH_RATIO: f64 = 10.0;

/// A closed immersed planar curve sampled at `N` uniformly spaced parameter
/// values. The samples are positions only; all differential quantities are
/// derived by [`crate::geometry::compute_geometry`].
#[derive(Clone, Debug)]
pub struct ClosedCurve {
    points: Vec<Vec2>,
}

impl ClosedCurve {
    /// Validates node count, finiteness, and the immersion proxy
    /// (consecutive nodes distinct).
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        let n = points.len();
        if n < MIN_NODES {
            return Err(Error::TooFewNodes {
                nodes: n,
                min: MIN_NODES,
            });
        }
        for (i, p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinite("curve node"));
            }
            let next = points[(i + 1) % n];
            if (next - *p).norm_sq() == 0.0 {
                return Err(Error::DegenerateSegment {
                    index: i,
                    next: (i + 1) % n,
                });
            }
        }
        Ok(ClosedCurve { points })
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    /// Periodic indexing: `point(i + N) == point(i)`.
    #[inline]
    pub fn point(&self, i: usize) -> Vec2 {
        self.points[i % self.points.len()]
    }

    /// Chord lengths `|p_{i+1} - p_i|`, cyclic.
    pub fn segment_lengths(&self) -> Vec<f64> {
        let n = self.points.len();
        (0..n)
            .map(|i| (self.points[(i + 1) % n] - self.points[i]).norm())
            .collect()
    }

    /// Max chord length over min chord length.
    pub fn mesh_ratio(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        let n = self.points.len();
        for i in 0..n {
            let len = (self.points[(i + 1) % n] - self.points[i]).norm();
            lo = lo.min(len);
            hi = hi.max(len);
        }
        hi / lo
    }

    pub fn min_segment(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| (self.points[(i + 1) % n] - self.points[i]).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn translated(&self, v: Vec2) -> ClosedCurve {
        ClosedCurve {
            points: self.points.iter().map(|p| *p + v).collect(),
        }
    }

    pub fn rotated(&self, angle: f64) -> ClosedCurve {
        ClosedCurve {
            points: self.points.iter().map(|p| p.rotated(angle)).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Result<ClosedCurve> {
        if !(factor.is_finite() && factor != 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scale factor must be finite and nonzero, got {factor}"
            )));
        }
        Ok(ClosedCurve {
            points: self.points.iter().map(|p| *p * factor).collect(),
        })
    }

    /// Replaces the sample positions, keeping validity checks.
    pub fn with_points(points: Vec<Vec2>) -> Result<ClosedCurve> {
        ClosedCurve::new(points)
    }
}
