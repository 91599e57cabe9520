//! Weak values `⟨f|A|i⟩/⟨f|i⟩`, their higher moments, and the time-resolved
//! projector weak values of a pre- and post-selected tunnelling particle.

use num_complex::Complex64;
use thiserror::Error;

use crate::quantum::{BarrierSpec, QuantumError, RegionProjector, SpinOperator, SpinState, WaveFunction};
use crate::tdse::{check_state, propagate, propagate_backward, Propagator, PropagatorConfig, Snapshot, TdseError};

/// Smallest accepted `|⟨f|i⟩|²/(‖f‖²‖i‖²)`.
pub const DEFAULT_OVERLAP_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeakValueError {
    #[error("pre/post overlap |<f|i>|^2 = {overlap_sqr:e} is below the floor {floor:e}{}", at_time(.time))]
    OverlapBelowFloor {
        overlap_sqr: f64,
        floor: f64,
        time: Option<f64>,
    },
    #[error("weak moment order must be at least 1")]
    ZeroMoment,
    #[error("time window [{t1}, {t2}] is empty or lies outside the run [0, {t_final}]")]
    WindowOutsideRun { t1: f64, t2: f64, t_final: f64 },
    #[error("pair was prepared for T = {pair} but the configuration runs to T = {config}")]
    DurationMismatch { pair: f64, config: f64 },
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Tdse(#[from] TdseError),
}

fn at_time(t: &Option<f64>) -> String {
    t.map(|t| format!(" at t = {t}")).unwrap_or_default()
}

pub type Result<T> = std::result::Result<T, WeakValueError>;

/// A state space with an inner product.
pub trait State {
    /// `⟨self|other⟩`.
    fn overlap(&self, other: &Self) -> Result<Complex64>;
}

/// An operator whose matrix elements between states of type `S` are computable.
pub trait Observable<S: State> {
    /// `⟨f|A|i⟩`.
    fn element(&self, f: &S, i: &S) -> Result<Complex64>;

    /// `⟨f|Aⁿ|i⟩`.
    fn power_element(&self, n: u32, f: &S, i: &S) -> Result<Complex64>;
}

impl State for SpinState {
    fn overlap(&self, other: &Self) -> Result<Complex64> {
        Ok(self.inner(other)?)
    }
}

impl State for WaveFunction {
    fn overlap(&self, other: &Self) -> Result<Complex64> {
        Ok(self.inner(other)?)
    }
}

impl Observable<SpinState> for SpinOperator {
    fn element(&self, f: &SpinState, i: &SpinState) -> Result<Complex64> {
        Ok(self.matrix_element(f, i)?)
    }

    fn power_element(&self, n: u32, f: &SpinState, i: &SpinState) -> Result<Complex64> {
        Ok(self.pow(n).matrix_element(f, i)?)
    }
}

impl Observable<WaveFunction> for RegionProjector {
    fn element(&self, f: &WaveFunction, i: &WaveFunction) -> Result<Complex64> {
        Ok(self.matrix_element(f, i)?)
    }

    /// Projectors are idempotent, so every power is the projector itself.
    fn power_element(&self, n: u32, f: &WaveFunction, i: &WaveFunction) -> Result<Complex64> {
        if n == 0 {
            return f.overlap(i);
        }
        self.element(f, i)
    }
}

fn checked_overlap<S: State>(i: &S, f: &S, floor: f64, time: Option<f64>) -> Result<Complex64> {
    let fi = f.overlap(i)?;
    let norms = f.overlap(f)?.re * i.overlap(i)?.re;
    let overlap_sqr = fi.norm_sqr() / norms;
    if !(overlap_sqr >= floor) {
        return Err(WeakValueError::OverlapBelowFloor {
            overlap_sqr,
            floor,
            time,
        });
    }
    Ok(fi)
}

/// `⟨f|A|i⟩ / ⟨f|i⟩`, refused when the normalized overlap falls below
/// [`DEFAULT_OVERLAP_FLOOR`].
pub fn weak_value<S: State, A: Observable<S> + ?Sized>(a: &A, i: &S, f: &S) -> Result<Complex64> {
    weak_value_with_floor(a, i, f, DEFAULT_OVERLAP_FLOOR)
}

pub fn weak_value_with_floor<S: State, A: Observable<S> + ?Sized>(
    a: &A,
    i: &S,
    f: &S,
    floor: f64,
) -> Result<Complex64> {
    let fi = checked_overlap(i, f, floor, None)?;
    Ok(a.element(f, i)? / fi)
}

/// `⟨f|Aⁿ|i⟩ / ⟨f|i⟩` for `n ≥ 1`.
pub fn weak_moment<S: State, A: Observable<S> + ?Sized>(a: &A, n: u32, i: &S, f: &S) -> Result<Complex64> {
    if n == 0 {
        return Err(WeakValueError::ZeroMoment);
    }
    let fi = checked_overlap(i, f, DEFAULT_OVERLAP_FLOOR, None)?;
    Ok(a.power_element(n, f, i)? / fi)
}

/// Pre-selected `|i⟩` at `t = 0` and post-selected `|f⟩` at `t = T`.
#[derive(Debug, Clone)]
pub struct PrePostPair {
    initial: WaveFunction,
    final_state: WaveFunction,
    t_final: f64,
    overlap: Complex64,
    floor: f64,
    /// Forward snapshots of `|i⟩` computed while building the pair.
    forward: Option<(PropagatorConfig, Vec<Snapshot>)>,
}

impl PrePostPair {
    /// Pair with an arbitrary final state; `⟨f|U(T)|i⟩` is computed by propagation.
    pub fn from_states(
        initial: WaveFunction,
        final_state: WaveFunction,
        barrier: &BarrierSpec,
        cfg: &PropagatorConfig,
    ) -> Result<Self> {
        initial.check_grid(&final_state)?;
        let snaps = propagate(&initial, barrier, cfg)?;
        let evolved = &snaps.last().expect("final snapshot is always recorded").psi;
        let overlap = final_state.inner(evolved)?;
        Self::assemble(initial, final_state, cfg, overlap, snaps)
    }

    /// Post-selects on `x ≥ cut` at `T`: `|f⟩ = P U(T)|i⟩ / ‖P U(T)|i⟩‖`.
    pub fn transmitted(initial: WaveFunction, barrier: &BarrierSpec, cfg: &PropagatorConfig, cut: f64) -> Result<Self> {
        let snaps = propagate(&initial, barrier, cfg)?;
        let evolved = &snaps.last().expect("final snapshot is always recorded").psi;
        let grid = *evolved.grid();
        let final_state = RegionProjector::new(grid, cut, grid.x_max())?
            .apply(evolved)?
            .normalized()?;
        let overlap = final_state.inner(evolved)?;
        Self::assemble(initial, final_state, cfg, overlap, snaps)
    }

    /// No post-selection: `|f⟩ = U(T)|i⟩`.
    pub fn unconditioned(initial: WaveFunction, barrier: &BarrierSpec, cfg: &PropagatorConfig) -> Result<Self> {
        let snaps = propagate(&initial, barrier, cfg)?;
        let final_state = snaps.last().expect("final snapshot is always recorded").psi.clone();
        let overlap = final_state.inner(&final_state)?;
        Self::assemble(initial, final_state, cfg, overlap, snaps)
    }

    fn assemble(
        initial: WaveFunction,
        final_state: WaveFunction,
        cfg: &PropagatorConfig,
        overlap: Complex64,
        snaps: Vec<Snapshot>,
    ) -> Result<Self> {
        let pair = Self {
            overlap,
            t_final: cfg.total_time(),
            floor: DEFAULT_OVERLAP_FLOOR,
            forward: Some((cfg.clone(), snaps)),
            initial,
            final_state,
        };
        pair.check_floor(overlap, None)?;
        Ok(pair)
    }

    /// Replaces the overlap floor, re-checking the pair against it.
    pub fn with_floor(mut self, floor: f64) -> Result<Self> {
        self.floor = floor;
        self.check_floor(self.overlap, None)?;
        Ok(self)
    }

    fn check_floor(&self, overlap: Complex64, time: Option<f64>) -> Result<()> {
        let norms = self.initial.norm_sqr() * self.final_state.norm_sqr();
        let overlap_sqr = overlap.norm_sqr() / norms;
        if !(overlap_sqr >= self.floor) {
            return Err(WeakValueError::OverlapBelowFloor {
                overlap_sqr,
                floor: self.floor,
                time,
            });
        }
        Ok(())
    }

    pub fn initial(&self) -> &WaveFunction {
        &self.initial
    }

    pub fn final_state(&self) -> &WaveFunction {
        &self.final_state
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    /// `⟨f|U(T,0)|i⟩`.
    pub fn overlap(&self) -> Complex64 {
        self.overlap
    }

    /// Forward snapshots of `|i⟩` taken while the pair was built, with their configuration.
    pub fn snapshots(&self) -> Option<(&PropagatorConfig, &[Snapshot])> {
        self.forward.as_ref().map(|(c, s)| (c, s.as_slice()))
    }

    /// Post-selection probability `|⟨f|U(T)|i⟩|²` for normalized states.
    pub fn postselection_probability(&self) -> f64 {
        self.overlap.norm_sqr() / (self.initial.norm_sqr() * self.final_state.norm_sqr())
    }

    fn check_duration(&self, cfg: &PropagatorConfig) -> Result<()> {
        let t = cfg.total_time();
        if (t - self.t_final).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(WeakValueError::DurationMismatch {
                pair: self.t_final,
                config: t,
            });
        }
        Ok(())
    }

    fn forward_snapshots(&self, barrier: &BarrierSpec, cfg: &PropagatorConfig) -> Result<Vec<Snapshot>> {
        match &self.forward {
            Some((c, snaps)) if c == cfg => Ok(snaps.clone()),
            _ => Ok(propagate(&self.initial, barrier, cfg)?),
        }
    }
}

/// `Re` and `Im` of `conj(f(t,x))·i(t,x)/⟨f(t)|i(t)⟩` on the record times.
///
/// The real part is the conditional pseudo-probability density; at each time it
/// sums to one over the grid but may be negative in places.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDistribution {
    grid: crate::quantum::Grid,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    imag: Vec<Vec<f64>>,
}

impl ConditionalDistribution {
    pub fn grid(&self) -> &crate::quantum::Grid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Real part per grid point at record `index`, units of inverse length.
    pub fn values(&self, index: usize) -> &[f64] {
        &self.values[index]
    }

    pub fn imag(&self, index: usize) -> &[f64] {
        &self.imag[index]
    }

    /// `Σ values·dx` over the whole grid.
    pub fn total(&self, index: usize) -> f64 {
        self.values[index].iter().sum::<f64>() * self.grid.dx()
    }

    /// `Σ values·dx` over `a ≤ x < b`.
    pub fn weight_in(&self, index: usize, a: f64, b: f64) -> f64 {
        self.values[index][self.grid.index_range(a, b)].iter().sum::<f64>() * self.grid.dx()
    }

    /// Region weight at every record time.
    pub fn weight_series(&self, a: f64, b: f64) -> Vec<f64> {
        (0..self.times.len()).map(|j| self.weight_in(j, a, b)).collect()
    }
}

/// Conditional position distribution at every record time of `cfg`.
///
/// `|i(t)⟩` comes from a forward run from 0, `⟨f(t)|` from a backward run from
/// `T`, with the backward record steps placed on the same absolute times.
pub fn conditional_distribution(
    pair: &PrePostPair,
    barrier: &BarrierSpec,
    cfg: &PropagatorConfig,
) -> Result<ConditionalDistribution> {
    pair.check_duration(cfg)?;
    let forward = pair.forward_snapshots(barrier, cfg)?;
    let n = cfg.n_steps();
    let back_times: Vec<f64> = forward
        .iter()
        .map(|s| (n as f64 - s.time / cfg.dt()).round() * cfg.dt())
        .collect();
    let back_cfg = PropagatorConfig::new(cfg.dt(), n, cfg.scheme(), &back_times)?;
    let backward = propagate_backward(&pair.final_state, barrier, &back_cfg)?;

    let grid = *pair.initial.grid();
    let mut times = Vec::with_capacity(forward.len());
    let mut values = Vec::with_capacity(forward.len());
    let mut imag = Vec::with_capacity(forward.len());
    for snap in &forward {
        let steps_back = (n as f64 - snap.time / cfg.dt()).round();
        let f = &backward
            .iter()
            .find(|b| (b.time + steps_back * cfg.dt()).abs() <= 1e-9 * cfg.dt())
            .expect("backward run records every matching time")
            .psi;
        let fi = f.inner(&snap.psi)?;
        pair.check_floor(fi, Some(snap.time))?;
        let (re, im): (Vec<f64>, Vec<f64>) = f
            .amplitudes()
            .iter()
            .zip(snap.psi.amplitudes())
            .map(|(fa, ia)| {
                let w = fa.conj() * ia / fi;
                (w.re, w.im)
            })
            .unzip();
        times.push(snap.time);
        values.push(re);
        imag.push(im);
    }
    Ok(ConditionalDistribution {
        grid,
        times,
        values,
        imag,
    })
}

/// Projector weak values `⟨f(t)|P|i(t)⟩/⟨f(t)|i(t)⟩` at every time step.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakValueSeries {
    dt: f64,
    regions: Vec<(f64, f64)>,
    /// `values[r][s]` for region `r` at time `s·dt`.
    values: Vec<Vec<Complex64>>,
}

impl WeakValueSeries {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn regions(&self) -> &[(f64, f64)] {
        &self.regions
    }

    pub fn values(&self, region: usize) -> &[Complex64] {
        &self.values[region]
    }

    pub fn t_final(&self) -> f64 {
        (self.values[0].len() - 1) as f64 * self.dt
    }

    /// `∫ w(t) dt` over the whole run (trapezoid rule).
    pub fn integral(&self, region: usize) -> Complex64 {
        self.window_integral(region, 0.0, self.t_final())
            .expect("the full run is a valid window")
    }

    /// `∫_{t1}^{t2} w(t) dt` of the piecewise-linear interpolant.
    pub fn window_integral(&self, region: usize, t1: f64, t2: f64) -> Result<Complex64> {
        let t_final = self.t_final();
        if !(0.0 <= t1 && t1 < t2 && t2 <= t_final * (1.0 + 1e-12)) {
            return Err(WeakValueError::WindowOutsideRun { t1, t2, t_final });
        }
        let w = &self.values[region];
        let last = w.len() - 1;
        let at = |t: f64| {
            let u = (t / self.dt).clamp(0.0, last as f64);
            let s = (u.floor() as usize).min(last.saturating_sub(1));
            let frac = u - s as f64;
            w[s] * (1.0 - frac) + w[(s + 1).min(last)] * frac
        };
        let first_node = (t1 / self.dt).ceil() as usize;
        let last_node = ((t2 / self.dt).floor() as usize).min(last);
        if first_node > last_node {
            return Ok(0.5 * (at(t1) + at(t2)) * (t2 - t1));
        }
        let mut acc = 0.5 * (at(t1) + w[first_node]) * (first_node as f64 * self.dt - t1);
        for s in first_node..last_node {
            acc += 0.5 * (w[s] + w[s + 1]) * self.dt;
        }
        acc += 0.5 * (w[last_node] + at(t2)) * (t2 - last_node as f64 * self.dt);
        Ok(acc)
    }

    /// Window integral divided by the window length.
    pub fn window_average(&self, region: usize, t1: f64, t2: f64) -> Result<Complex64> {
        Ok(self.window_integral(region, t1, t2)? / (t2 - t1))
    }
}

/// Weak values of several region projectors at every step of the run.
///
/// `⟨f(0)|` is obtained by one backward run; `|i⟩` and `⟨f|` are then stepped
/// forward together so no snapshots need to be stored.
pub fn projector_weak_values(
    pair: &PrePostPair,
    regions: &[(f64, f64)],
    barrier: &BarrierSpec,
    cfg: &PropagatorConfig,
) -> Result<WeakValueSeries> {
    pair.check_duration(cfg)?;
    let grid = *pair.initial.grid();
    let projectors = regions
        .iter()
        .map(|&(a, b)| RegionProjector::new(grid, a, b))
        .collect::<std::result::Result<Vec<_>, _>>()?;

    let back_cfg = PropagatorConfig::final_only(cfg.dt(), cfg.n_steps(), cfg.scheme())?;
    let mut f = propagate_backward(&pair.final_state, barrier, &back_cfg)?
        .pop()
        .expect("final snapshot")
        .psi;
    let mut i = pair.initial.clone();
    let mut prop = Propagator::new(grid, barrier, cfg.scheme(), cfg.dt())?;
    let (norm_i, norm_f) = (i.norm_sqr(), f.norm_sqr());
    let checkpoints = cfg.snapshot_steps();

    let mut values = vec![Vec::with_capacity(cfg.n_steps() + 1); regions.len()];
    for step in 0..=cfg.n_steps() {
        let time = step as f64 * cfg.dt();
        let fi = f.inner_unchecked(&i);
        if checkpoints.binary_search(&step).is_ok() || step == 0 {
            pair.check_floor(fi, Some(time))?;
            check_state(&i, norm_i, time)?;
            check_state(&f, norm_f, time)?;
        }
        for (p, out) in projectors.iter().zip(values.iter_mut()) {
            out.push(p.matrix_element_unchecked(&f, &i) / fi);
        }
        if step < cfg.n_steps() {
            prop.step(&mut i);
            prop.step(&mut f);
        }
    }
    Ok(WeakValueSeries {
        dt: cfg.dt(),
        regions: regions.to_vec(),
        values,
    })
}

/// `∫_0^T Re[P_region]_w(t) dt`.
pub fn conditional_dwell_time(
    pair: &PrePostPair,
    region: (f64, f64),
    barrier: &BarrierSpec,
    cfg: &PropagatorConfig,
) -> Result<f64> {
    Ok(projector_weak_values(pair, &[region], barrier, cfg)?.integral(0).re)
}
