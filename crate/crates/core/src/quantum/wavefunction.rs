use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{Grid, QuantumError, Result};

/// Fraction of the grid, at each end, over which the edge density is measured.
pub const EDGE_FRACTION: f64 = 1.0 / 32.0;

/// Largest probability allowed in the edge zones before a run is rejected.
pub const EDGE_DENSITY_LIMIT: f64 = 1e-8;

/// Complex amplitudes on a uniform grid, in units of length^(-1/2).
///
/// The norm is `Σ|ψ_k|²·dx`, the inner product `⟨φ|ψ⟩ = Σ conj(φ_k)·ψ_k·dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid,
    amp: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(grid: Grid, amp: Vec<Complex64>) -> Result<Self> {
        if amp.len() != grid.len() {
            return Err(QuantumError::LengthMismatch {
                expected: grid.len(),
                got: amp.len(),
            });
        }
        Ok(Self { grid, amp })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            amp: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64) -> Complex64) -> Self {
        let amp = grid.points().map(&mut f).collect();
        Self { grid, amp }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amp
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amp
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amp
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QuantumError::ZeroNorm);
        }
        let scale = 1.0 / norm;
        self.amp.iter_mut().for_each(|a| *a *= scale);
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &WaveFunction) -> Result<Complex64> {
        self.check_grid(other)?;
        Ok(self.inner_unchecked(other))
    }

    pub(crate) fn inner_unchecked(&self, other: &WaveFunction) -> Complex64 {
        self.amp
            .iter()
            .zip(&other.amp)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.dx()
    }

    pub fn check_grid(&self, other: &WaveFunction) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(QuantumError::GridMismatch)
        }
    }

    /// `‖self − other‖` in the grid L2 norm.
    pub fn l2_distance(&self, other: &WaveFunction) -> Result<f64> {
        self.check_grid(other)?;
        let s: f64 = self.amp.iter().zip(&other.amp).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.grid.dx()).sqrt())
    }

    pub fn conj(&self) -> Self {
        Self {
            grid: self.grid,
            amp: self.amp.iter().map(|a| a.conj()).collect(),
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            amp: self.amp.iter().map(|a| a * c).collect(),
        }
    }

    /// Probability density `|ψ(x)|²` per grid point.
    pub fn density(&self) -> Vec<f64> {
        self.amp.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Probability in `[a, b)`.
    pub fn probability_in(&self, a: f64, b: f64) -> f64 {
        self.amp[self.grid.index_range(a, b)]
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            * self.grid.dx()
    }

    pub fn mean_position(&self) -> f64 {
        let (w, s) = self.moments(|x| x);
        s / w
    }

    pub fn position_variance(&self) -> f64 {
        let mean = self.mean_position();
        let (w, s) = self.moments(|x| (x - mean).powi(2));
        s / w
    }

    fn moments(&self, f: impl Fn(f64) -> f64) -> (f64, f64) {
        self.amp.iter().enumerate().fold((0.0, 0.0), |(w, s), (k, a)| {
            let p = a.norm_sqr();
            (w + p, s + p * f(self.grid.x(k)))
        })
    }

    /// `⟨k⟩` from the discrete Fourier spectrum.
    pub fn mean_wavenumber(&self) -> f64 {
        let spectrum = self.momentum_spectrum();
        let k = self.grid.wavenumbers();
        let w: f64 = spectrum.iter().sum();
        spectrum.iter().zip(&k).map(|(p, k)| p * k).sum::<f64>() / w
    }

    /// `|φ(k_j)|²` in FFT order, unnormalized.
    pub fn momentum_spectrum(&self) -> Vec<f64> {
        let mut buf = self.amp.clone();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        buf.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Probability in the outer [`EDGE_FRACTION`] of the grid at each end.
    pub fn edge_density(&self) -> f64 {
        let n = self.grid.len();
        let m = ((n as f64 * EDGE_FRACTION).ceil() as usize).max(1);
        let left: f64 = self.amp[..m].iter().map(|a| a.norm_sqr()).sum();
        let right: f64 = self.amp[n - m..].iter().map(|a| a.norm_sqr()).sum();
        (left + right) * self.grid.dx()
    }
}

/// Normalized Gaussian packet `exp(−(x−x0)²/4σ² + i·k0·(x−x0))`.
///
/// `sigma_x` is the standard deviation of `|ψ|²`.
pub fn make_gaussian_packet(grid: Grid, x0: f64, sigma_x: f64, k0: f64) -> Result<WaveFunction> {
    if !(sigma_x >= 3.0 * grid.dx()) {
        return Err(QuantumError::PacketTooNarrow { sigma_x, dx: grid.dx() });
    }
    if x0 - 5.0 * sigma_x < grid.x_min() || x0 + 5.0 * sigma_x > grid.x_max() {
        return Err(QuantumError::PacketTouchesBoundary {
            x0,
            sigma_x,
            x_min: grid.x_min(),
            x_max: grid.x_max(),
        });
    }
    let psi = WaveFunction::from_fn(grid, |x| {
        let u = x - x0;
        Complex64::new(-u * u / (4.0 * sigma_x * sigma_x), k0 * u).exp()
    });
    psi.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_grid() -> Grid {
        Grid::from_bounds(-200.0, 200.0, 4096).unwrap()
    }

    #[test]
    fn packet_construction() {
        let g = default_grid();
        let psi = make_gaussian_packet(g, -50.0, 10.0, 1.0).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((psi.mean_position() + 50.0).abs() < g.dx());
        assert!((psi.mean_wavenumber() - 1.0).abs() < g.dk());
        assert!((psi.position_variance() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn packet_at_rest_has_zero_mean_momentum() {
        let psi = make_gaussian_packet(default_grid(), 10.0, 7.0, 0.0).unwrap();
        assert!(psi.mean_wavenumber().abs() < 1e-12);
    }

    #[test]
    fn packet_errors() {
        let g = default_grid();
        assert_eq!(
            make_gaussian_packet(g, 0.0, 0.2, 1.0),
            Err(QuantumError::PacketTooNarrow {
                sigma_x: 0.2,
                dx: g.dx()
            })
        );
        assert!(matches!(
            make_gaussian_packet(g, -160.0, 10.0, 1.0),
            Err(QuantumError::PacketTouchesBoundary { .. })
        ));
        assert!(matches!(
            make_gaussian_packet(g, 151.0, 10.0, 1.0),
            Err(QuantumError::PacketTouchesBoundary { .. })
        ));
    }

    #[test]
    fn free_kinetic_energy_matches_closed_form() {
        // Oracle: fourth-order central difference for −½ψ''.
        let g = default_grid();
        let (k0, sigma) = (0.8, 6.0);
        let psi = make_gaussian_packet(g, 0.0, sigma, k0).unwrap();
        let a = psi.amplitudes();
        let h = g.dx();
        let mut e = Complex64::new(0.0, 0.0);
        for j in 2..a.len() - 2 {
            let d2 = (-a[j - 2] + 16.0 * a[j - 1] - 30.0 * a[j] + 16.0 * a[j + 1] - a[j + 2]) / (12.0 * h * h);
            e += a[j].conj() * (-0.5 * d2) * h;
        }
        let expected = k0 * k0 / 2.0 + 1.0 / (8.0 * sigma * sigma);
        assert!((e.re - expected).abs() < 1e-5, "{} vs {expected}", e.re);
        assert!(e.im.abs() < 1e-10);
    }

    #[test]
    fn normalize_is_idempotent() {
        let g = Grid::new(-4.0, 0.25, 32).unwrap();
        let mut psi = WaveFunction::from_fn(g, |x| Complex64::new(x.cos(), 0.3 * x));
        psi.normalize().unwrap();
        let once = psi.clone();
        psi.normalize().unwrap();
        assert!(once.l2_distance(&psi).unwrap() < 1e-15);
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_state_cannot_be_normalized() {
        let g = Grid::new(0.0, 1.0, 8).unwrap();
        assert_eq!(WaveFunction::zeros(g).normalized(), Err(QuantumError::ZeroNorm));
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let a = WaveFunction::zeros(Grid::new(0.0, 1.0, 8).unwrap());
        let b = WaveFunction::zeros(Grid::new(0.0, 0.5, 8).unwrap());
        assert_eq!(a.inner(&b), Err(QuantumError::GridMismatch));
    }

    #[test]
    fn edge_density_sees_only_the_edges() {
        let g = Grid::new(0.0, 1.0, 64).unwrap();
        let mut psi = WaveFunction::zeros(g);
        psi.amplitudes_mut()[32] = Complex64::new(1.0, 0.0);
        assert_eq!(psi.edge_density(), 0.0);
        psi.amplitudes_mut()[1] = Complex64::new(0.5, 0.0);
        assert!((psi.edge_density() - 0.25).abs() < 1e-15);
    }
}
