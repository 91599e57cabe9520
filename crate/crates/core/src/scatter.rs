//! Stationary scattering off piecewise-constant barriers.
//!
//! Phase convention: for a barrier spanning `[a, b]` (with `d = b − a`), the
//! stationary state is
//!
//! ```text
//! ψ(x) = e^{ik(x−a)} + r·e^{−ik(x−a)}   for x < a
//! ψ(x) = t·e^{ik(x−a)}                  for x > b
//! ```
//!
//! Both amplitudes are referred to the entrance edge, so an empty barrier gives
//! `t = 1, r = 0` and the free phase `e^{ikd}` accumulated across the barrier
//! region is carried separately. [`group_delay`] adds it back as `d/k`.

use num_complex::Complex64;
use thiserror::Error;

use crate::quantum::BarrierSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScatterError {
    #[error("energy E = {0} must be positive and finite")]
    NonPositiveEnergy(f64),
    #[error("energy E = {energy} equals a segment height; the transfer matrix is degenerate there")]
    EnergyAtSegmentHeight { energy: f64, height: f64 },
    #[error("transfer matrix overflowed at E = {0}; the barrier is too opaque for double precision")]
    Overflow(f64),
    #[error("group delay did not converge: estimates {coarse} and {fine} at the smallest step")]
    DelayNotConverged { coarse: f64, fine: f64 },
}

pub type Result<T> = std::result::Result<T, ScatterError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterResult {
    pub t: Complex64,
    pub r: Complex64,
    pub energy: f64,
    /// `√(2E)`.
    pub k: f64,
    /// `√(2(V−E))` in the tallest segment, when `E` lies below it.
    pub kappa: Option<f64>,
}

impl ScatterResult {
    pub fn transmission(&self) -> f64 {
        self.t.norm_sqr()
    }

    pub fn reflection(&self) -> f64 {
        self.r.norm_sqr()
    }
}

/// Layers between the first and last barrier edge, gaps included, as `(width, V)`.
fn layers(barrier: &BarrierSpec) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut x = match barrier.span() {
        Some((a, _)) => a,
        None => return out,
    };
    for s in barrier.segments() {
        if s.left > x {
            out.push((s.left - x, 0.0));
        }
        out.push((s.right - s.left, s.height));
        x = s.right;
    }
    out
}

fn check_energy(energy: f64, barrier: &BarrierSpec) -> Result<()> {
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(ScatterError::NonPositiveEnergy(energy));
    }
    if let Some(s) = barrier.segments().iter().find(|s| s.height == energy) {
        return Err(ScatterError::EnergyAtSegmentHeight {
            energy,
            height: s.height,
        });
    }
    Ok(())
}

/// Transmission and reflection amplitudes at energy `E`.
///
/// `(ψ, ψ')` is carried from the exit edge back to the entrance through the
/// exact 2×2 propagator of each layer, starting from a unit transmitted wave.
pub fn transfer_matrix_amplitudes(energy: f64, barrier: &BarrierSpec) -> Result<ScatterResult> {
    check_energy(energy, barrier)?;
    let k = (2.0 * energy).sqrt();
    let ik = Complex64::new(0.0, k);
    let d = barrier.width();

    let mut psi = (ik * d).exp();
    let mut dpsi = ik * psi;
    for &(w, v) in layers(barrier).iter().rev() {
        let q = Complex64::new(2.0 * (energy - v), 0.0).sqrt();
        let (c, s) = ((q * w).cos(), (q * w).sin());
        let (p, dp) = (psi, dpsi);
        psi = c * p - s / q * dp;
        dpsi = q * s * p + c * dp;
    }
    let incident = 0.5 * (psi + dpsi / ik);
    let reflected = 0.5 * (psi - dpsi / ik);
    if !(incident.norm().is_finite() && reflected.norm().is_finite()) {
        return Err(ScatterError::Overflow(energy));
    }

    let top = barrier.max_height();
    Ok(ScatterResult {
        t: 1.0 / incident,
        r: reflected / incident,
        energy,
        k,
        kappa: (energy < top).then(|| (2.0 * (top - energy)).sqrt()),
    })
}

/// Relative agreement required between successive Richardson estimates.
const DELAY_TOL: f64 = 1e-8;
const DELAY_HALVINGS: usize = 12;

/// Phase-time delay `d(arg t)/dE + d/k` across the barrier span.
///
/// The derivative is a centered difference of `arg(t(E+h)/t(E−h))`, which has
/// no branch cut for small `h`, Richardson-extrapolated over `h` and `h/2`. The
/// step shrinks until two consecutive extrapolations agree.
pub fn group_delay(energy: f64, barrier: &BarrierSpec) -> Result<f64> {
    check_energy(energy, barrier)?;
    let gap = barrier
        .segments()
        .iter()
        .map(|s| (s.height - energy).abs())
        .fold(energy, f64::min);
    let t_at = |e: f64| transfer_matrix_amplitudes(e, barrier).map(|s| s.t);
    let diff = |h: f64| -> Result<f64> { Ok((t_at(energy + h)? / t_at(energy - h)?).arg() / (2.0 * h)) };

    let mut h = 0.05 * gap;
    let mut d_h = diff(h)?;
    let mut d_h2 = diff(0.5 * h)?;
    let mut prev = (4.0 * d_h2 - d_h) / 3.0;
    for _ in 0..DELAY_HALVINGS {
        h *= 0.5;
        d_h = d_h2;
        d_h2 = diff(0.5 * h)?;
        let next = (4.0 * d_h2 - d_h) / 3.0;
        if (next - prev).abs() <= DELAY_TOL * next.abs().max(1.0) {
            return Ok(next + barrier.width() / (2.0 * energy).sqrt());
        }
        prev = next;
    }
    Err(ScatterError::DelayNotConverged {
        coarse: prev,
        fine: d_h2,
    })
}
