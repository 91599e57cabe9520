//! State representations shared by every other module: the uniform spatial
//! grid, wavefunctions on it, piecewise-constant barriers, half-open region
//! projectors and spin-j angular momentum operators.
//!
//! Units are natural (ħ = m = 1), so a wavenumber `k` is also a momentum and a
//! velocity, and the free kinetic energy is `k²/2`.

mod barrier;
mod grid;
mod projector;
mod spin;
mod wavefunction;

pub use barrier::{BarrierSpec, Segment};
pub use grid::Grid;
pub use projector::{region_projector, RegionProjector};
pub use spin::{spin_ops, SpinOperator, SpinOps, SpinState};
pub use wavefunction::{make_gaussian_packet, WaveFunction, EDGE_DENSITY_LIMIT, EDGE_FRACTION};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("amplitude vector has {got} entries but the grid has {expected} points")]
    LengthMismatch { expected: usize, got: usize },
    #[error("states live on different grids")]
    GridMismatch,
    #[error("packet width sigma_x = {sigma_x} is narrower than 3 grid spacings (dx = {dx})")]
    PacketTooNarrow { sigma_x: f64, dx: f64 },
    #[error(
        "packet centred at {x0} with sigma_x = {sigma_x} comes within 5 sigma of the domain edge [{x_min}, {x_max})"
    )]
    PacketTouchesBoundary {
        x0: f64,
        sigma_x: f64,
        x_min: f64,
        x_max: f64,
    },
    #[error("empty region [{a}, {b})")]
    EmptyRegion { a: f64, b: f64 },
    #[error("cannot normalize a state with zero norm")]
    ZeroNorm,
    #[error("invalid spin j = {0}: 2j must be a positive integer")]
    InvalidSpin(f64),
    #[error("dimension mismatch: operator is {op}x{op}, state has {state} components")]
    DimensionMismatch { op: usize, state: usize },
    #[error("{0} is not an eigenvalue of the operator")]
    NotAnEigenvalue(f64),
    #[error("invalid barrier: {0}")]
    InvalidBarrier(String),
}

pub type Result<T> = std::result::Result<T, QuantumError>;
