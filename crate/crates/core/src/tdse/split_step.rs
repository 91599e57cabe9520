use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::quantum::Grid;

/// `e^{−iV dt/2} · F⁻¹ e^{−ik² dt/2} F · e^{−iV dt/2}`.
pub(crate) struct SplitStep {
    half_potential: Vec<Complex64>,
    /// Kinetic phase with the inverse transform's `1/n` folded in.
    kinetic: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl SplitStep {
    pub(crate) fn new(grid: &Grid, potential: &[f64], dt: f64) -> Self {
        let n = grid.len();
        let half_potential = potential
            .iter()
            .map(|v| Complex64::from_polar(1.0, -0.5 * v * dt))
            .collect();
        let norm = 1.0 / n as f64;
        let kinetic = grid
            .wavenumbers()
            .iter()
            .map(|k| Complex64::from_polar(norm, -0.5 * k * k * dt))
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self {
            half_potential,
            kinetic,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub(crate) fn step(&mut self, amp: &mut [Complex64]) {
        mul_assign(amp, &self.half_potential);
        self.forward.process_with_scratch(amp, &mut self.scratch);
        mul_assign(amp, &self.kinetic);
        self.inverse.process_with_scratch(amp, &mut self.scratch);
        mul_assign(amp, &self.half_potential);
    }
}

fn mul_assign(a: &mut [Complex64], b: &[Complex64]) {
    a.iter_mut().zip(b).for_each(|(x, y)| *x *= y);
}
