use crate::quantum::{make_gaussian_packet, BarrierSpec, Grid, QuantumError, WaveFunction};

use super::{PropagatorConfig, Result as TdseResult, Scheme};

/// Rectangular-barrier tunnelling setup shared by the conditional-distribution,
/// dwell-time and two-probe runs.
///
/// The defaults put a barrier on `[−5, 5]` with `V0 = 1` and send in a packet of
/// width 10 whose mean energy is `V0/2`. The packet starts 9.5 widths from the
/// barrier so that the initial state has no amplitude under the barrier, and
/// the run lasts until the transmitted peak has cleared the post-selection
/// cut at `x_exit + 2σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TunnelingScenario {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub barrier_left: f64,
    pub barrier_right: f64,
    pub v0: f64,
    pub x0: f64,
    pub sigma_x: f64,
    /// `None` picks `k0` so that `⟨E⟩ = V0/2`.
    pub k0: Option<f64>,
    pub dt: f64,
    pub t_final: f64,
    pub n_records: usize,
    pub scheme: Scheme,
}

impl Default for TunnelingScenario {
    fn default() -> Self {
        Self {
            x_min: -200.0,
            x_max: 200.0,
            n_points: 4096,
            barrier_left: -5.0,
            barrier_right: 5.0,
            v0: 1.0,
            x0: -100.0,
            sigma_x: 10.0,
            k0: None,
            dt: 0.00125,
            t_final: 180.5,
            n_records: 20,
            scheme: Scheme::SpectralSplitStep,
        }
    }
}

impl TunnelingScenario {
    pub fn grid(&self) -> Result<Grid, QuantumError> {
        Grid::from_bounds(self.x_min, self.x_max, self.n_points)
    }

    pub fn barrier(&self) -> Result<BarrierSpec, QuantumError> {
        BarrierSpec::rectangular(self.barrier_left, self.barrier_right, self.v0)
    }

    /// Mean wavenumber; `⟨E⟩ = k0²/2 + 1/(8σ²)`.
    pub fn k0(&self) -> f64 {
        self.k0
            .unwrap_or_else(|| (self.v0 - 1.0 / (4.0 * self.sigma_x * self.sigma_x)).max(0.0).sqrt())
    }

    pub fn initial_state(&self) -> Result<WaveFunction, QuantumError> {
        make_gaussian_packet(self.grid()?, self.x0, self.sigma_x, self.k0())
    }

    /// Left edge of the transmitted post-selection region.
    pub fn transmitted_cut(&self) -> f64 {
        self.barrier_right + 2.0 * self.sigma_x
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn config(&self) -> TdseResult<PropagatorConfig> {
        PropagatorConfig::uniform(self.dt, self.n_steps(), self.scheme, self.n_records)
    }
}
