use super::{Grid, QuantumError, Result};

/// Constant potential `height` on `[left, right)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub left: f64,
    pub right: f64,
    pub height: f64,
}

/// Piecewise-constant potential: zero everywhere except on its segments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BarrierSpec {
    segments: Vec<Segment>,
}

impl BarrierSpec {
    /// Segments are sorted by position; they must not overlap.
    pub fn new(mut segments: Vec<Segment>) -> Result<Self> {
        for s in &segments {
            if !(s.left.is_finite() && s.right.is_finite() && s.height.is_finite()) {
                return Err(QuantumError::InvalidBarrier(format!("non-finite segment {s:?}")));
            }
            if s.left >= s.right {
                return Err(QuantumError::InvalidBarrier(format!(
                    "segment [{}, {}) has non-positive width",
                    s.left, s.right
                )));
            }
        }
        segments.sort_by(|a, b| a.left.total_cmp(&b.left));
        if let Some(w) = segments.windows(2).find(|w| w[1].left < w[0].right) {
            return Err(QuantumError::InvalidBarrier(format!(
                "segments [{}, {}) and [{}, {}) overlap",
                w[0].left, w[0].right, w[1].left, w[1].right
            )));
        }
        Ok(Self { segments })
    }

    /// Single rectangular barrier of height `height` on `[left, right)`.
    pub fn rectangular(left: f64, right: f64, height: f64) -> Result<Self> {
        Self::new(vec![Segment { left, right, height }])
    }

    /// No potential at all.
    pub fn free() -> Self {
        Self::default()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// `(left edge of the first segment, right edge of the last)`.
    pub fn span(&self) -> Option<(f64, f64)> {
        Some((self.segments.first()?.left, self.segments.last()?.right))
    }

    /// Total extent `right − left` of [`span`](Self::span), zero when free.
    pub fn width(&self) -> f64 {
        self.span().map_or(0.0, |(a, b)| b - a)
    }

    pub fn max_height(&self) -> f64 {
        self.segments.iter().map(|s| s.height).fold(0.0, f64::max)
    }

    pub fn potential_at(&self, x: f64) -> f64 {
        self.segments
            .iter()
            .find(|s| s.left <= x && x < s.right)
            .map_or(0.0, |s| s.height)
    }

    /// Potential sampled on the grid as cell averages over `[x_k − dx/2, x_k + dx/2)`.
    ///
    /// Averaging makes the integrated potential exact, so a barrier whose
    /// edges fall between grid points keeps its true width.
    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        let h = grid.dx();
        grid.points()
            .map(|x| {
                let (lo, hi) = (x - 0.5 * h, x + 0.5 * h);
                self.segments
                    .iter()
                    .map(|s| {
                        let overlap = hi.min(s.right) - lo.max(s.left);
                        if overlap > 0.0 {
                            s.height * overlap / h
                        } else {
                            0.0
                        }
                    })
                    .sum()
            })
            .collect()
    }

    /// Reflection `x → −x`.
    pub fn mirrored(&self) -> Self {
        let mut segments: Vec<Segment> = self
            .segments
            .iter()
            .map(|s| Segment {
                left: -s.right,
                right: -s.left,
                height: s.height,
            })
            .collect();
        segments.reverse();
        Self { segments }
    }
}
