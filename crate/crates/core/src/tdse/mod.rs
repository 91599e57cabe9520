//! Time-dependent Schrödinger propagation, `i∂ψ/∂t = (−½∂² + V)ψ`.
//!
//! Two independent schemes share one interface: a spectral split-step
//! propagator (periodic, FFT kinetic step) and Crank–Nicolson on an
//! eighth-order finite-difference Hamiltonian (Dirichlet walls). Both are
//! unitary and exactly time-reversible, so backward evolution is the same
//! stepper run with `−dt`. The barrier enters as its cell-averaged samples.

mod config;
mod implicit;
mod scenario;
mod split_step;

pub use config::{PropagatorConfig, Scheme};
pub use scenario::TunnelingScenario;

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::quantum::{BarrierSpec, Grid, WaveFunction, EDGE_DENSITY_LIMIT};
use implicit::CrankNicolson;
use split_step::SplitStep;

/// Largest tolerated `|‖ψ(t)‖² − ‖ψ(0)‖²|` before a run is declared unstable.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TdseError {
    #[error("invalid propagator configuration: {0}")]
    InvalidConfig(String),
    #[error("edge density {density:e} exceeds {limit:e} at t = {time}; enlarge the domain or shorten the run")]
    EdgeDensity { time: f64, density: f64, limit: f64 },
    #[error("norm drifted by {drift:e} at t = {time}; the scheme is unstable at this dt")]
    Unstable { time: f64, drift: f64 },
}

pub type Result<T> = std::result::Result<T, TdseError>;

/// State at a recorded time, with its global phase intact.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub psi: WaveFunction,
}

enum Kernel {
    Split(SplitStep),
    Implicit(CrankNicolson),
}

/// A stepper bound to one grid, potential and signed time step.
pub struct Propagator {
    kernel: Kernel,
    grid: Grid,
    dt: f64,
}

impl Propagator {
    /// `dt` may be negative for backward evolution.
    pub fn new(grid: Grid, barrier: &BarrierSpec, scheme: Scheme, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(TdseError::InvalidConfig(format!(
                "time step dt = {dt} must be finite and non-zero"
            )));
        }
        let v = barrier.sample(&grid);
        let kernel = match scheme {
            Scheme::SpectralSplitStep => Kernel::Split(SplitStep::new(&grid, &v, dt)),
            Scheme::ImplicitFd => Kernel::Implicit(CrankNicolson::new(&grid, &v, dt)),
        };
        Ok(Self { kernel, grid, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// One step of `dt`.
    ///
    /// # Panics
    /// If `psi` lives on a different grid.
    pub fn step(&mut self, psi: &mut WaveFunction) {
        assert_eq!(*psi.grid(), self.grid, "state and propagator grids differ");
        let amp = psi.amplitudes_mut();
        match &mut self.kernel {
            Kernel::Split(s) => s.step(amp),
            Kernel::Implicit(c) => c.step(amp),
        }
    }

    pub fn advance(&mut self, psi: &mut WaveFunction, steps: usize) {
        for _ in 0..steps {
            self.step(psi);
        }
    }
}

/// Evolves `psi` forward over `cfg`, returning snapshots at the record times and
/// at the final time.
pub fn propagate(psi: &WaveFunction, barrier: &BarrierSpec, cfg: &PropagatorConfig) -> Result<Vec<Snapshot>> {
    run(psi, barrier, cfg, 1.0)
}

/// As [`propagate`] with `dt → −dt`; snapshot times are negative.
pub fn propagate_backward(psi: &WaveFunction, barrier: &BarrierSpec, cfg: &PropagatorConfig) -> Result<Vec<Snapshot>> {
    run(psi, barrier, cfg, -1.0)
}

fn run(psi: &WaveFunction, barrier: &BarrierSpec, cfg: &PropagatorConfig, direction: f64) -> Result<Vec<Snapshot>> {
    let dt = direction * cfg.dt();
    let mut prop = Propagator::new(*psi.grid(), barrier, cfg.scheme(), dt)?;
    let norm0 = psi.norm_sqr();
    let mut state = psi.clone();
    let mut done = 0;
    let mut out = Vec::new();
    for target in cfg.snapshot_steps() {
        prop.advance(&mut state, target - done);
        done = target;
        let time = target as f64 * dt;
        check_state(&state, norm0, time)?;
        out.push(Snapshot {
            time,
            psi: state.clone(),
        });
    }
    log::debug!("propagated {} steps of dt = {dt} with {}", cfg.n_steps(), cfg.scheme());
    Ok(out)
}

/// Edge-density and norm-drift guards shared by every propagation loop.
pub fn check_state(psi: &WaveFunction, norm0: f64, time: f64) -> Result<()> {
    let drift = (psi.norm_sqr() - norm0).abs();
    if !(drift <= NORM_DRIFT_LIMIT) {
        return Err(TdseError::Unstable { time, drift });
    }
    let density = psi.edge_density();
    if density > EDGE_DENSITY_LIMIT {
        return Err(TdseError::EdgeDensity {
            time,
            density,
            limit: EDGE_DENSITY_LIMIT,
        });
    }
    Ok(())
}

/// `⟨ψ|H|ψ⟩/⟨ψ|ψ⟩` with the kinetic term evaluated spectrally.
pub fn energy(psi: &WaveFunction, barrier: &BarrierSpec) -> f64 {
    let grid = psi.grid();
    let mut buf: Vec<Complex64> = psi.amplitudes().to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    let kinetic: f64 = buf
        .iter()
        .zip(grid.wavenumbers())
        .map(|(a, k)| 0.5 * k * k * a.norm_sqr())
        .sum::<f64>()
        / grid.len() as f64;
    let potential: f64 = barrier
        .sample(grid)
        .iter()
        .zip(psi.amplitudes())
        .map(|(v, a)| v * a.norm_sqr())
        .sum();
    let norm: f64 = psi.amplitudes().iter().map(|a| a.norm_sqr()).sum();
    (kinetic + potential) / norm
}
