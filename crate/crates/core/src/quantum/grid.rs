use std::f64::consts::PI;
use std::ops::Range;

use super::{QuantumError, Result};

/// Uniform, periodic 1D grid: `x(k) = x_min + k·dx` for `k` in `[0, n)`.
///
/// `n` is a power of two so the spectral propagator can use radix-2 FFTs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_min: f64,
    dx: f64,
    n: usize,
}

impl Grid {
    pub fn new(x_min: f64, dx: f64, n: usize) -> Result<Self> {
        if !x_min.is_finite() || !dx.is_finite() {
            return Err(QuantumError::InvalidGrid("non-finite origin or spacing".into()));
        }
        if dx <= 0.0 {
            return Err(QuantumError::InvalidGrid(format!("spacing dx = {dx} must be positive")));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(QuantumError::InvalidGrid(format!(
                "point count {n} must be a power of two and at least 2"
            )));
        }
        Ok(Self { x_min, dx, n })
    }

    /// Grid covering the periodic cell `[x_min, x_max)` with `n` points.
    pub fn from_bounds(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if x_max <= x_min {
            return Err(QuantumError::InvalidGrid(format!(
                "upper bound {x_max} must exceed lower bound {x_min}"
            )));
        }
        Self::new(x_min, (x_max - x_min) / n as f64, n)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    /// Exclusive upper end of the periodic cell.
    pub fn x_max(&self) -> f64 {
        self.x_min + self.n as f64 * self.dx
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.dx
    }

    #[inline]
    pub fn x(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.dx
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |k| self.x(k))
    }

    /// Spacing of the conjugate wavenumber grid, `2π/(n·dx)`.
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.length()
    }

    /// Wavenumbers in FFT order: `0, dk, …, (n/2−1)dk, −(n/2)dk, …, −dk`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as isize;
        let dk = self.dk();
        (0..n)
            .map(|j| if j < n / 2 { j } else { j - n })
            .map(|j| j as f64 * dk)
            .collect()
    }

    /// Indices of the points with `a ≤ x(k) < b`.
    pub fn index_range(&self, a: f64, b: f64) -> Range<usize> {
        let start = self.first_at_or_above(a);
        let end = self.first_at_or_above(b);
        start..end.max(start)
    }

    fn first_at_or_above(&self, x: f64) -> usize {
        let (mut lo, mut hi) = (0, self.n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.x(mid) < x {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Index of the grid point nearest to `x`, clamped to the grid.
    pub fn nearest_index(&self, x: f64) -> usize {
        let k = ((x - self.x_min) / self.dx).round();
        k.clamp(0.0, (self.n - 1) as f64) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::new(0.0, 0.0, 8).is_err());
        assert!(Grid::new(0.0, -1.0, 8).is_err());
        assert!(Grid::new(0.0, 1.0, 1).is_err());
        assert!(Grid::new(0.0, 1.0, 12).is_err());
        assert!(Grid::from_bounds(1.0, 1.0, 8).is_err());
    }

    #[test]
    fn coordinates_and_bounds() {
        let g = Grid::from_bounds(-200.0, 200.0, 4096).unwrap();
        assert_eq!(g.dx(), 400.0 / 4096.0);
        assert_eq!(g.x(0), -200.0);
        assert_eq!(g.x_max(), 200.0);
        assert_eq!(g.points().len(), 4096);
    }

    #[test]
    fn wavenumbers_are_in_fft_order() {
        let g = Grid::new(0.0, 1.0, 8).unwrap();
        let k = g.wavenumbers();
        let dk = g.dk();
        assert_eq!(k[0], 0.0);
        assert!((k[3] - 3.0 * dk).abs() < 1e-15);
        assert!((k[4] + 4.0 * dk).abs() < 1e-15);
        assert!((k[7] + dk).abs() < 1e-15);
    }

    #[test]
    fn index_range_is_half_open() {
        let g = Grid::new(0.0, 1.0, 16).unwrap();
        assert_eq!(g.index_range(2.0, 5.0), 2..5);
        assert_eq!(g.index_range(2.5, 5.5), 3..6);
        assert_eq!(g.index_range(-10.0, 100.0), 0..16);
        assert_eq!(g.index_range(5.0, 5.0), 5..5);
    }
}
