//! Gaussian von Neumann pointers and the two-detector states built from them.
//!
//! `G(c, σ)(x) = (2πσ²)^{−1/4} exp(−(x − c)²/4σ²)`, so σ is the standard
//! deviation of `|G|²`. Joint states of two pointers A and B are sums of
//! Gaussian products, optionally carrying a first-order linear factor, grouped
//! into branches that are tagged by mutually orthogonal particle states.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::corpuscle::MomentReport;
use crate::corpuscle::{corpuscularity_test, CorpuscleError, EnsembleStats, TestInput, TestSettings};
use crate::quantum::BarrierSpec;
use crate::tdse::PropagatorConfig;
use crate::weakval::{projector_weak_values, PrePostPair, WeakValueError};

/// Points per axis of the quadrature grid.
pub const DEFAULT_GRID_POINTS: usize = 512;
/// Half-width of the quadrature grid beyond the outermost centre, in units of σ.
pub const GRID_HALF_WIDTH: f64 = 8.0;
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;
/// Above this Δ/σ a probe is no longer weak.
pub const WEAKNESS_LIMIT: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PointerError {
    #[error("pointer width must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("pointer position {0} is not finite")]
    NonFinite(f64),
    #[error("erasure needs a which-path state, got a {0} state")]
    NotWhichPath(JointKind),
    #[error("quadrature of {quantity} did not settle under refinement: {coarse} vs {fine}")]
    QuadratureNotConverged {
        quantity: &'static str,
        coarse: f64,
        fine: f64,
    },
    #[error("probe sign must be +1 or −1, got {0}")]
    InvalidSign(i8),
    #[error("probe region [{0}, {1}) is empty")]
    EmptyRegion(f64, f64),
    #[error(transparent)]
    WeakValue(#[from] WeakValueError),
    #[error(transparent)]
    Corpuscle(#[from] CorpuscleError),
}

pub type Result<T> = std::result::Result<T, PointerError>;

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(PointerError::InvalidSigma(sigma))
    }
}

fn check_finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(PointerError::NonFinite(x))
    }
}

fn gaussian(u: f64, sigma: f64) -> f64 {
    (2.0 * PI * sigma * sigma).powf(-0.25) * (-u * u / (4.0 * sigma * sigma)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointerState {
    center: f64,
    sigma: f64,
}

impl PointerState {
    pub fn new(center: f64, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        check_finite(center)?;
        Ok(Self { center, sigma })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn amplitude(&self, x: f64) -> f64 {
        gaussian(x - self.center, self.sigma)
    }

    /// `⟨G(c₁,σ₁)|G(c₂,σ₂)⟩`; `exp(−Δ²/8σ²)` for equal widths.
    pub fn overlap(&self, other: &Self) -> f64 {
        let s2 = self.sigma * self.sigma + other.sigma * other.sigma;
        (2.0 * self.sigma * other.sigma / s2).sqrt() * (-(self.center - other.center).powi(2) / (4.0 * s2)).exp()
    }

    pub fn shifted(&self, amount: f64) -> Self {
        Self {
            center: self.center + amount,
            ..*self
        }
    }

    /// Abscissae and amplitudes on `n` points over `center ± 8σ`.
    pub fn sample_grid(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let (x0, dx) = axis(self.center, self.center, self.sigma, n);
        let xs: Vec<f64> = (0..n).map(|j| x0 + j as f64 * dx).collect();
        let amps = xs.iter().map(|&x| self.amplitude(x)).collect();
        (xs, amps)
    }

    /// `(‖G‖², mean, variance)` of the grid representation.
    pub fn grid_moments(&self, n: usize) -> (f64, f64, f64) {
        let (xs, amps) = self.sample_grid(n);
        let dx = xs[1] - xs[0];
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (x, g) in xs.iter().zip(&amps) {
            let (u, w) = (x - self.center, g * g);
            m0 += w;
            m1 += w * u;
            m2 += w * u * u;
        }
        let mean = m1 / m0;
        (m0 * dx, self.center + mean, m2 / m0 - mean * mean)
    }
}

pub fn shift_pointer(p: &PointerState, amount: f64) -> PointerState {
    p.shifted(amount)
}

/// `(start, step)` of an `n`-point axis covering `[lo − 8σ, hi + 8σ]`.
fn axis(lo: f64, hi: f64, sigma: f64, n: usize) -> (f64, f64) {
    let (a, b) = (lo - GRID_HALF_WIDTH * sigma, hi + GRID_HALF_WIDTH * sigma);
    (a, (b - a) / (n - 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JointKind {
    Product,
    WhichPath,
    Erased,
    FirstOrder,
}

impl fmt::Display for JointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JointKind::Product => "product",
            JointKind::WhichPath => "which-path",
            JointKind::Erased => "erased",
            JointKind::FirstOrder => "first-order",
        })
    }
}

/// `coef · (1 + lin_a·(x_A − a) + lin_b·(x_B − b)) · G(a,σ)(x_A) · G(b,σ)(x_B)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Term {
    coef: Complex64,
    a: f64,
    b: f64,
    lin_a: Complex64,
    lin_b: Complex64,
}

impl Term {
    fn gaussian(coef: f64, a: f64, b: f64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self {
            coef: Complex64::new(coef, 0.0),
            a,
            b,
            lin_a: zero,
            lin_b: zero,
        }
    }

    fn is_gaussian(&self) -> bool {
        self.lin_a == Complex64::new(0.0, 0.0) && self.lin_b == Complex64::new(0.0, 0.0)
    }
}

/// Quadrature moments of a joint state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointMoments {
    pub norm: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub var_a: f64,
    pub var_b: f64,
    pub var_diff: f64,
}

impl JointMoments {
    fn fields(&self) -> [(&'static str, f64); 6] {
        [
            ("norm", self.norm),
            ("mean_a", self.mean_a),
            ("mean_b", self.mean_b),
            ("var_a", self.var_a),
            ("var_b", self.var_b),
            ("var_diff", self.var_diff),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointPointerState {
    kind: JointKind,
    sigma: f64,
    /// One entry per orthogonal particle label; branches never interfere.
    branches: Vec<Vec<Term>>,
    postselect_prob: f64,
}

impl JointPointerState {
    /// `G_A(a,σ)·G_B(b,σ)`.
    pub fn product(a: f64, b: f64, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        check_finite(a)?;
        check_finite(b)?;
        Ok(Self {
            kind: JointKind::Product,
            sigma,
            branches: vec![vec![Term::gaussian(1.0, a, b)]],
            postselect_prob: 1.0,
        })
    }

    /// `(1 + α_A x_A + α_B x_B)·G_A(0,σ)G_B(0,σ)`, normalized exactly.
    pub fn first_order(alpha_a: Complex64, alpha_b: Complex64, sigma: f64, postselect_prob: f64) -> Result<Self> {
        check_sigma(sigma)?;
        let norm = (1.0 + (alpha_a.norm_sqr() + alpha_b.norm_sqr()) * sigma * sigma).sqrt();
        let term = Term {
            coef: Complex64::new(1.0 / norm, 0.0),
            a: 0.0,
            b: 0.0,
            lin_a: alpha_a,
            lin_b: alpha_b,
        };
        Ok(Self {
            kind: JointKind::FirstOrder,
            sigma,
            branches: vec![vec![term]],
            postselect_prob,
        })
    }

    pub fn kind(&self) -> JointKind {
        self.kind
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    /// Probability of the post-selection that produced the state (1 if none).
    pub fn postselect_prob(&self) -> f64 {
        self.postselect_prob
    }

    /// Amplitude of branch `branch` at `(x_A, x_B)`.
    pub fn amplitude(&self, branch: usize, xa: f64, xb: f64) -> Complex64 {
        self.branches[branch]
            .iter()
            .map(|t| {
                let (ua, ub) = (xa - t.a, xb - t.b);
                t.coef * (1.0 + t.lin_a * ua + t.lin_b * ub) * gaussian(ua, self.sigma) * gaussian(ub, self.sigma)
            })
            .sum()
    }

    /// Detector density with the particle traced out.
    pub fn density(&self, xa: f64, xb: f64) -> f64 {
        (0..self.branches.len())
            .map(|k| self.amplitude(k, xa, xb).norm_sqr())
            .sum()
    }

    fn extent(&self) -> ((f64, f64), (f64, f64)) {
        let terms = self.branches.iter().flatten();
        let fold = |f: fn(&Term) -> f64| {
            terms
                .clone()
                .map(f)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
        };
        (fold(|t| t.a), fold(|t| t.b))
    }

    /// Rectangle-rule moments on an `n × n` grid; spectrally accurate for
    /// Gaussian integrands.
    pub fn quadrature(&self, n: usize) -> JointMoments {
        let grid = GridEval::new(self, n);
        // Moments about the grid centre keep the variance subtraction benign.
        let (ca, cb) = (grid.xa(n / 2), grid.xb(n / 2));
        let acc = (0..n)
            .into_par_iter()
            .map_init(
                || vec![0.0; n],
                |row, i| {
                    grid.density_row(i, row);
                    let u = grid.xa(i) - ca;
                    let mut s = [0.0; 6];
                    for (j, &rho) in row.iter().enumerate() {
                        let v = grid.xb(j) - cb;
                        s[0] += rho;
                        s[1] += rho * u;
                        s[2] += rho * v;
                        s[3] += rho * u * u;
                        s[4] += rho * v * v;
                        s[5] += rho * u * v;
                    }
                    s
                },
            )
            .reduce(
                || [0.0; 6],
                |mut x, y| {
                    x.iter_mut().zip(y).for_each(|(p, q)| *p += q);
                    x
                },
            );
        let m0 = acc[0];
        let (ma, mb) = (acc[1] / m0, acc[2] / m0);
        let (va, vb) = (acc[3] / m0 - ma * ma, acc[4] / m0 - mb * mb);
        let cov = acc[5] / m0 - ma * mb;
        JointMoments {
            norm: m0 * grid.dxa * grid.dxb,
            mean_a: ca + ma,
            mean_b: cb + mb,
            var_a: va,
            var_b: vb,
            var_diff: va + vb - 2.0 * cov,
        }
    }

    /// Quadrature at the default grid, checked against one refinement.
    pub fn moments(&self) -> Result<JointMoments> {
        let coarse = self.quadrature(DEFAULT_GRID_POINTS);
        let fine = self.quadrature(2 * DEFAULT_GRID_POINTS);
        for ((quantity, c), (_, f)) in coarse.fields().into_iter().zip(fine.fields()) {
            if (c - f).abs() > QUADRATURE_TOLERANCE * f.abs().max(1.0) {
                return Err(PointerError::QuadratureNotConverged {
                    quantity,
                    coarse: c,
                    fine: f,
                });
            }
        }
        Ok(fine)
    }

    /// Closed-form moments; available when no term carries a linear factor.
    pub fn analytic_moments(&self) -> Option<JointMoments> {
        if !self.branches.iter().flatten().all(Term::is_gaussian) {
            return None;
        }
        let s2 = self.sigma * self.sigma;
        // ∫ G(x−c)G(x−c') x^p dx for p = 0, 1, 2.
        let cross = |c: f64, d: f64| {
            let o = (-(c - d).powi(2) / (8.0 * s2)).exp();
            let m = 0.5 * (c + d);
            [o, o * m, o * (s2 + m * m)]
        };
        let mut s = [0.0; 6];
        for branch in &self.branches {
            for t in branch {
                for u in branch {
                    let w = (t.coef.conj() * u.coef).re;
                    let (ia, ib) = (cross(t.a, u.a), cross(t.b, u.b));
                    s[0] += w * ia[0] * ib[0];
                    s[1] += w * ia[1] * ib[0];
                    s[2] += w * ia[0] * ib[1];
                    s[3] += w * ia[2] * ib[0];
                    s[4] += w * ia[0] * ib[2];
                    s[5] += w * ia[1] * ib[1];
                }
            }
        }
        let (ma, mb) = (s[1] / s[0], s[2] / s[0]);
        let (va, vb) = (s[3] / s[0] - ma * ma, s[4] / s[0] - mb * mb);
        let cov = s[5] / s[0] - ma * mb;
        Some(JointMoments {
            norm: s[0],
            mean_a: ma,
            mean_b: mb,
            var_a: va,
            var_b: vb,
            var_diff: va + vb - 2.0 * cov,
        })
    }

    pub fn moment_report(&self) -> Result<MomentReport> {
        let m = self.moments()?;
        Ok(MomentReport {
            mean_a: m.mean_a,
            mean_b: m.mean_b,
            var_a: m.var_a,
            var_b: m.var_b,
            var_diff: m.var_diff,
            postselect_prob: self.postselect_prob,
        })
    }

    /// Draws pointer readings `(x_A, x_B)`.
    ///
    /// States whose branches are single Gaussian products are sampled exactly;
    /// anything else by inverse transform over the default quadrature grid with
    /// uniform jitter inside each cell.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<(f64, f64)> {
        let noise = Normal::new(0.0, self.sigma).expect("sigma validated at construction");
        if self.branches.iter().all(|b| b.len() == 1 && b[0].is_gaussian()) {
            let weights: Vec<f64> = self.branches.iter().map(|b| b[0].coef.norm_sqr()).collect();
            let total: f64 = weights.iter().sum();
            return (0..n)
                .map(|_| {
                    let mut u = rng.random::<f64>() * total;
                    let mut k = 0;
                    while k + 1 < weights.len() && u >= weights[k] {
                        u -= weights[k];
                        k += 1;
                    }
                    let t = &self.branches[k][0];
                    (t.a + noise.sample(rng), t.b + noise.sample(rng))
                })
                .collect();
        }

        let m = DEFAULT_GRID_POINTS;
        let grid = GridEval::new(self, m);
        let mut cdf = Vec::with_capacity(m * m);
        let mut row = vec![0.0; m];
        let mut acc = 0.0;
        for i in 0..m {
            grid.density_row(i, &mut row);
            for rho in &row {
                acc += rho;
                cdf.push(acc);
            }
        }
        (0..n)
            .map(|_| {
                let u = rng.random::<f64>() * acc;
                let cell = cdf.partition_point(|&c| c < u).min(m * m - 1);
                let (i, j) = (cell / m, cell % m);
                let xa = grid.xa(i) + (rng.random::<f64>() - 0.5) * grid.dxa;
                let xb = grid.xb(j) + (rng.random::<f64>() - 0.5) * grid.dxb;
                (xa, xb)
            })
            .collect()
    }
}

/// A joint state tabulated on a tensor grid.
///
/// Each term splits as `P(x_A)·G(x_B) + Q(x_A)·L(x_B)` with
/// `P = c(1 + λ_A u_A)G(u_A)`, `Q = c·G(u_A)`, `L = λ_B u_B G(u_B)`, so a row of
/// the density costs only multiply-adds.
struct GridEval {
    xa0: f64,
    dxa: f64,
    xb0: f64,
    dxb: f64,
    /// Per branch, per term: `(P, Q, G, L)` sampled on the axes.
    tables: Vec<Vec<[Vec<Complex64>; 4]>>,
}

impl GridEval {
    fn new(state: &JointPointerState, n: usize) -> Self {
        let ((a_lo, a_hi), (b_lo, b_hi)) = state.extent();
        let (xa0, dxa) = axis(a_lo, a_hi, state.sigma, n);
        let (xb0, dxb) = axis(b_lo, b_hi, state.sigma, n);
        let sigma = state.sigma;
        let tables = state
            .branches
            .iter()
            .map(|branch| {
                branch
                    .iter()
                    .map(|t| {
                        let ua = |i: usize| xa0 + i as f64 * dxa - t.a;
                        let ub = |j: usize| xb0 + j as f64 * dxb - t.b;
                        let p = (0..n)
                            .map(|i| t.coef * (1.0 + t.lin_a * ua(i)) * gaussian(ua(i), sigma))
                            .collect();
                        let q = (0..n).map(|i| t.coef * gaussian(ua(i), sigma)).collect();
                        let g = (0..n).map(|j| Complex64::new(gaussian(ub(j), sigma), 0.0)).collect();
                        let l = (0..n).map(|j| t.lin_b * ub(j) * gaussian(ub(j), sigma)).collect();
                        [p, q, g, l]
                    })
                    .collect()
            })
            .collect();
        Self {
            xa0,
            dxa,
            xb0,
            dxb,
            tables,
        }
    }

    fn xa(&self, i: usize) -> f64 {
        self.xa0 + i as f64 * self.dxa
    }

    fn xb(&self, j: usize) -> f64 {
        self.xb0 + j as f64 * self.dxb
    }

    fn density_row(&self, i: usize, row: &mut [f64]) {
        row.iter_mut().for_each(|r| *r = 0.0);
        for branch in &self.tables {
            for (j, r) in row.iter_mut().enumerate() {
                let amp: Complex64 = branch.iter().map(|[p, q, g, l]| p[i] * g[j].re + q[i] * l[j]).sum();
                *r += amp.norm_sqr();
            }
        }
    }
}

/// `[G_A(Δ,σ)G_B(0,σ)|a⟩ + G_A(0,σ)G_B(Δ,σ)|b⟩]/√2`.
pub fn which_path_state(delta: f64, sigma: f64) -> Result<JointPointerState> {
    check_sigma(sigma)?;
    check_finite(delta)?;
    let c = std::f64::consts::FRAC_1_SQRT_2;
    Ok(JointPointerState {
        kind: JointKind::WhichPath,
        sigma,
        branches: vec![vec![Term::gaussian(c, delta, 0.0)], vec![Term::gaussian(c, 0.0, delta)]],
        postselect_prob: 1.0,
    })
}

/// `K = [2(1 + |⟨G(0,σ)|G(Δ,σ)⟩|²)]^{−1/2}`.
pub fn erasure_constant(delta: f64, sigma: f64) -> Result<f64> {
    let g0 = PointerState::new(0.0, sigma)?;
    let overlap = g0.overlap(&g0.shifted(delta));
    Ok(1.0 / (2.0 * (1.0 + overlap * overlap)).sqrt())
}

/// Post-selects the particle onto `(|a⟩ + |b⟩)/√2`, leaving
/// `K·[G_A(Δ,σ)G_B(0,σ) + G_A(0,σ)G_B(Δ,σ)]`.
pub fn erase_and_postselect(state: &JointPointerState) -> Result<JointPointerState> {
    if state.kind != JointKind::WhichPath {
        return Err(PointerError::NotWhichPath(state.kind));
    }
    let delta = state.branches[0][0].a;
    let k = erasure_constant(delta, state.sigma)?;
    Ok(JointPointerState {
        kind: JointKind::Erased,
        sigma: state.sigma,
        branches: vec![vec![Term::gaussian(k, delta, 0.0), Term::gaussian(k, 0.0, delta)]],
        // ‖(φ_a + φ_b)/2‖² with ‖φ_a + φ_b‖² = 1/K².
        postselect_prob: state.postselect_prob / (4.0 * k * k),
    })
}

/// `Var(x_A − x_B)` by 2-D quadrature.
pub fn difference_variance(state: &JointPointerState) -> Result<f64> {
    Ok(state.moments()?.var_diff)
}

/// Both pointers shifted with certainty: `G_A(δ_A,σ)·G_B(δ_B,σ)`.
pub fn certain_shift_state(delta_a: f64, delta_b: f64, sigma: f64) -> Result<JointPointerState> {
    JointPointerState::product(delta_a, delta_b, sigma)
}

/// A weak region-projector probe: coupling `g(t)·P_region·p_D` switched on over
/// `window` with `∫g dt = Δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakProbe {
    region: (f64, f64),
    delta: f64,
    window: (f64, f64),
    sign: i8,
}

impl WeakProbe {
    pub fn new(region: (f64, f64), delta: f64, window: (f64, f64), sign: i8) -> Result<Self> {
        if !(region.0 < region.1) {
            return Err(PointerError::EmptyRegion(region.0, region.1));
        }
        check_finite(delta)?;
        if sign != 1 && sign != -1 {
            return Err(PointerError::InvalidSign(sign));
        }
        Ok(Self {
            region,
            delta,
            window,
            sign,
        })
    }

    pub fn region(&self) -> (f64, f64) {
        self.region
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// `Δ/σ` for a pointer of width σ.
    pub fn weakness(&self, sigma: f64) -> f64 {
        self.delta.abs() / sigma
    }

    fn strength(&self) -> f64 {
        self.sign as f64 * self.delta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoProbeOutcome {
    pub state: JointPointerState,
    /// Window-averaged projector weak values.
    pub weak_a: Complex64,
    pub weak_b: Complex64,
    /// First-order pointer shifts `±Δ·Re⟨P⟩_w`.
    pub shift_a: f64,
    pub shift_b: f64,
    /// `shift_a + shift_b`; zero when equal and opposite probes cancel.
    pub net_shift: f64,
    pub moments: MomentReport,
    pub stats: EnsembleStats,
}

/// Two weak probes on one pre- and post-selected ensemble.
///
/// The impulsive coupling turns `G_A G_B` into
/// `(1 + α_A x_A + α_B x_B)·G_A G_B` with `α = ±Δ·w/(2σ²)` and `w` the projector
/// weak value averaged over the probe window, which is the first-order
/// expansion of a shift by `±Δ·w`.
pub fn two_probe_run(
    pair: &PrePostPair,
    probe_a: &WeakProbe,
    probe_b: &WeakProbe,
    sigma: f64,
    alpha: f64,
    barrier: &BarrierSpec,
    cfg: &PropagatorConfig,
) -> Result<TwoProbeOutcome> {
    check_sigma(sigma)?;
    for (name, probe) in [("A", probe_a), ("B", probe_b)] {
        if probe.weakness(sigma) > WEAKNESS_LIMIT {
            log::warn!(
                "probe {name} has Δ/σ = {:.3}; first-order results are unreliable",
                probe.weakness(sigma)
            );
        }
    }
    let series = projector_weak_values(pair, &[probe_a.region, probe_b.region], barrier, cfg)?;
    let weak_a = series.window_average(0, probe_a.window.0, probe_a.window.1)?;
    let weak_b = series.window_average(1, probe_b.window.0, probe_b.window.1)?;
    let two_s2 = 2.0 * sigma * sigma;
    let state = JointPointerState::first_order(
        weak_a * probe_a.strength() / two_s2,
        weak_b * probe_b.strength() / two_s2,
        sigma,
        pair.postselection_probability(),
    )?;
    let moments = state.moment_report()?;
    let stats = corpuscularity_test(
        TestInput::Moments(&moments),
        sigma,
        &TestSettings {
            alpha,
            ..Default::default()
        },
    )?;
    let (shift_a, shift_b) = (probe_a.strength() * weak_a.re, probe_b.strength() * weak_b.re);
    Ok(TwoProbeOutcome {
        state,
        weak_a,
        weak_b,
        shift_a,
        shift_b,
        net_shift: shift_a + shift_b,
        moments,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{make_gaussian_packet, Grid, WaveFunction};
    use crate::tdse::{Propagator, Scheme};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shifts_compose() {
        let p = PointerState::new(0.3, 1.2).unwrap();
        assert_eq!(shift_pointer(&p, 0.0), p);
        let q = shift_pointer(&shift_pointer(&p, 0.7), -0.7);
        assert!((q.center() - p.center()).abs() < 1e-15);
        assert_eq!(q.sigma(), p.sigma());
        assert!(PointerState::new(0.0, 0.0).is_err());
        assert!(PointerState::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn overlap_matches_quadrature() {
        let g0 = PointerState::new(0.0, 1.0).unwrap();
        let g1 = g0.shifted(1.0);
        assert_eq!(format!("{:.4}", g0.overlap(&g1)), "0.8825");
        // Trapezoid sum of the product of the two sampled pointers.
        let dx = 0.01;
        let q: f64 = (-1000..=1100)
            .map(|j| j as f64 * dx)
            .map(|x| g0.amplitude(x) * g1.amplitude(x))
            .sum::<f64>()
            * dx;
        assert!((q - g0.overlap(&g1)).abs() < 1e-12);
        let wide = PointerState::new(0.5, 2.0).unwrap();
        let q: f64 = (-2000..=2000)
            .map(|j| j as f64 * dx)
            .map(|x| g0.amplitude(x) * wide.amplitude(x))
            .sum::<f64>()
            * dx;
        assert!((q - g0.overlap(&wide)).abs() < 1e-12);
    }

    #[test]
    fn grid_representation_matches_analytic_moments() {
        for (c, s) in [(0.0, 1.0), (2.5, 0.3), (-1.0, 4.0)] {
            let p = PointerState::new(c, s).unwrap();
            let (norm, mean, var) = p.grid_moments(DEFAULT_GRID_POINTS);
            assert!((norm - 1.0).abs() < 1e-8);
            assert!((mean - c).abs() < 1e-8);
            assert!((var - s * s).abs() < 1e-8);
        }
    }

    #[test]
    fn which_path_moments() {
        for (delta, sigma) in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.5)] {
            let st = which_path_state(delta, sigma).unwrap();
            let m = st.moments().unwrap();
            assert!((m.norm - 1.0).abs() < 1e-10);
            assert!((m.mean_a - delta / 2.0).abs() < 1e-8);
            assert!((m.mean_b - delta / 2.0).abs() < 1e-8);
            assert!((m.mean_a - m.mean_b).abs() < 1e-12);
            assert!((m.var_diff - (2.0 * sigma * sigma + delta * delta)).abs() < 1e-8);
            // Reduced detector state = equal mixture of the two branch products.
            let mix = |f: fn(&JointMoments) -> f64| {
                let p = JointPointerState::product(delta, 0.0, sigma)
                    .unwrap()
                    .moments()
                    .unwrap();
                let q = JointPointerState::product(0.0, delta, sigma)
                    .unwrap()
                    .moments()
                    .unwrap();
                0.5 * (f(&p) + f(&q))
            };
            let second = |m: &JointMoments| m.var_a + m.mean_a * m.mean_a;
            assert!((m.var_a + m.mean_a * m.mean_a - mix(second)).abs() < 1e-8);
            assert!((m.mean_b - mix(|m| m.mean_b)).abs() < 1e-10);
        }
    }

    #[test]
    fn erasure_constant_and_state() {
        assert_eq!(erasure_constant(0.0, 1.0).unwrap(), 0.5);
        let k = erasure_constant(1.0, 1.0).unwrap();
        assert!((k - 1.0 / (2.0 * (1.0 + (-0.25f64).exp())).sqrt()).abs() < 1e-15);

        let zero = erase_and_postselect(&which_path_state(0.0, 1.0).unwrap()).unwrap();
        let plain = JointPointerState::product(0.0, 0.0, 1.0).unwrap();
        for (xa, xb) in [(0.0, 0.0), (0.4, -1.3), (2.0, 1.0)] {
            assert!((zero.density(xa, xb) - plain.density(xa, xb)).abs() < 1e-15);
        }
        assert!((zero.postselect_prob() - 1.0).abs() < 1e-15);

        let erased = erase_and_postselect(&which_path_state(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(erased.kind(), JointKind::Erased);
        assert!((erased.moments().unwrap().norm - 1.0).abs() < 1e-10);
        assert!((erased.postselect_prob() - (1.0 + (-0.25f64).exp()) / 2.0).abs() < 1e-15);
        assert!(matches!(
            erase_and_postselect(&erased),
            Err(PointerError::NotWhichPath(JointKind::Erased))
        ));
        assert!(erase_and_postselect(&plain).is_err());
    }

    #[test]
    fn erased_moments_match_closed_form() {
        for (delta, sigma) in [(0.1, 1.0), (1.0, 1.0), (2.0, 1.0), (1.0, 0.5), (3.0, 2.0)] {
            let m = erase_and_postselect(&which_path_state(delta, sigma).unwrap())
                .unwrap()
                .moments()
                .unwrap();
            let c2 = (-delta * delta / (4.0 * sigma * sigma)).exp();
            assert!((m.var_diff - (2.0 * sigma * sigma + delta * delta / (1.0 + c2))).abs() < 1e-8);
            assert!((m.mean_a - delta / 2.0).abs() < 1e-8);
            assert!((m.mean_b - delta / 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn certain_shift_keeps_the_difference_sharp() {
        let st = certain_shift_state(0.5, 0.5, 1.0).unwrap();
        let m = st.moments().unwrap();
        assert!((m.mean_a - 0.5).abs() < 1e-10 && (m.mean_b - 0.5).abs() < 1e-10);
        assert!((m.var_diff - 2.0).abs() < 1e-10);
        assert_eq!(
            certain_shift_state(0.0, 0.0, 1.0).unwrap(),
            JointPointerState::product(0.0, 0.0, 1.0).unwrap()
        );
        assert!(difference_variance(&st).unwrap() < difference_variance(&which_path_state(1.0, 1.0).unwrap()).unwrap());
    }

    #[test]
    fn analytic_and_quadrature_moments_agree() {
        let states = [
            which_path_state(1.3, 0.8).unwrap(),
            erase_and_postselect(&which_path_state(1.3, 0.8).unwrap()).unwrap(),
            certain_shift_state(-0.4, 0.9, 1.5).unwrap(),
        ];
        for st in &states {
            let (q, a) = (st.moments().unwrap(), st.analytic_moments().unwrap());
            for ((name, x), (_, y)) in q.fields().into_iter().zip(a.fields()) {
                assert!((x - y).abs() < 1e-10, "{} {name}: {x} vs {y}", st.kind());
            }
        }
        let fo = JointPointerState::first_order(Complex64::new(0.1, 0.0), Complex64::new(0.0, 0.0), 1.0, 1.0).unwrap();
        assert!(fo.analytic_moments().is_none());
    }

    #[test]
    fn first_order_state_is_normalized_with_expected_means() {
        let (aa, ab) = (Complex64::new(0.08, 0.03), Complex64::new(-0.05, 0.1));
        let sigma = 1.3;
        let st = JointPointerState::first_order(aa, ab, sigma, 0.2).unwrap();
        let m = st.moments().unwrap();
        let norm2 = 1.0 + (aa.norm_sqr() + ab.norm_sqr()) * sigma * sigma;
        assert!((m.norm - 1.0).abs() < 1e-10);
        assert!((m.mean_a - 2.0 * aa.re * sigma * sigma / norm2).abs() < 1e-10);
        assert!((m.mean_b - 2.0 * ab.re * sigma * sigma / norm2).abs() < 1e-10);
        assert_eq!(st.moment_report().unwrap().postselect_prob, 0.2);
    }

    #[test]
    fn samples_reproduce_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let stats = |s: &[(f64, f64)]| {
            let nf = s.len() as f64;
            let ma = s.iter().map(|p| p.0).sum::<f64>() / nf;
            let md = s.iter().map(|p| p.0 - p.1).sum::<f64>() / nf;
            let vd = s.iter().map(|p| (p.0 - p.1 - md).powi(2)).sum::<f64>() / (nf - 1.0);
            (ma, vd)
        };
        for st in [
            which_path_state(1.0, 1.0).unwrap(),
            erase_and_postselect(&which_path_state(1.0, 1.0).unwrap()).unwrap(),
        ] {
            let m = st.moments().unwrap();
            let (ma, vd) = stats(&st.sample(n, &mut rng));
            assert!(
                (ma - m.mean_a).abs() < 5.0 * (m.var_a / n as f64).sqrt(),
                "{}: {ma}",
                st.kind()
            );
            assert!(
                (vd - m.var_diff).abs() < 5.0 * m.var_diff * (2.0 / n as f64).sqrt(),
                "{}: {vd}",
                st.kind()
            );
        }
    }

    #[test]
    fn probe_validation() {
        assert!(WeakProbe::new((1.0, 1.0), 0.1, (0.0, 1.0), 1).is_err());
        assert!(WeakProbe::new((0.0, 1.0), 0.1, (0.0, 1.0), 0).is_err());
        assert!(WeakProbe::new((0.0, 1.0), f64::INFINITY, (0.0, 1.0), 1).is_err());
        assert_eq!(
            WeakProbe::new((0.0, 1.0), 0.3, (0.0, 1.0), -1).unwrap().weakness(0.5),
            0.6
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn variance_ordering(sigma in 0.3f64..3.0, ratio in 0.1f64..3.0) {
            let delta = ratio * sigma;
            let product = difference_variance(&JointPointerState::product(0.0, 0.0, sigma).unwrap()).unwrap();
            let erased = difference_variance(&erase_and_postselect(&which_path_state(delta, sigma).unwrap()).unwrap()).unwrap();
            let which = difference_variance(&which_path_state(delta, sigma).unwrap()).unwrap();
            prop_assert!((product - 2.0 * sigma * sigma).abs() < 1e-8);
            prop_assert!((which - (2.0 * sigma * sigma + delta * delta)).abs() < 1e-8);
            prop_assert!(erased - product >= 1e-6);
            prop_assert!(which - erased >= 1e-6);
        }

        #[test]
        fn constructed_states_are_normalized(sigma in 0.2f64..4.0, da in -3.0f64..3.0, db in -3.0f64..3.0) {
            for st in [
                certain_shift_state(da, db, sigma).unwrap(),
                which_path_state(da, sigma).unwrap(),
                erase_and_postselect(&which_path_state(da, sigma).unwrap()).unwrap(),
            ] {
                prop_assert!((st.analytic_moments().unwrap().norm - 1.0).abs() < 1e-10);
            }
        }
    }

    /// Small tunnelling setup shared with the weak-value tests.
    struct Small {
        grid: Grid,
        barrier: BarrierSpec,
        cfg: PropagatorConfig,
        psi: WaveFunction,
    }

    fn small() -> Small {
        let grid = Grid::from_bounds(-200.0, 200.0, 2048).unwrap();
        let barrier = BarrierSpec::rectangular(-1.0, 1.0, 1.0).unwrap();
        let cfg = PropagatorConfig::uniform(0.01, 14_000, Scheme::SpectralSplitStep, 8).unwrap();
        let psi = make_gaussian_packet(grid, -50.0, 8.0, 1.0).unwrap();
        Small {
            grid,
            barrier,
            cfg,
            psi,
        }
    }

    #[test]
    fn opposite_probes_cancel() {
        let s = small();
        let pair = PrePostPair::transmitted(s.psi.clone(), &s.barrier, &s.cfg, 17.0).unwrap();
        let a = WeakProbe::new((-200.0, -1.0), 0.05, (30.0, 50.0), 1).unwrap();
        let b = WeakProbe::new((-200.0, -1.0), 0.05, (30.0, 50.0), -1).unwrap();
        let out = two_probe_run(&pair, &a, &b, 1.0, 0.05, &s.barrier, &s.cfg).unwrap();
        assert_eq!(out.net_shift, 0.0);
        assert!((out.moments.mean_a + out.moments.mean_b).abs() < 1e-12);
        assert_eq!(out.weak_a, out.weak_b);
    }

    #[test]
    fn unconditioned_probe_measures_the_dwell_fraction() {
        let s = small();
        let pair = PrePostPair::unconditioned(s.psi.clone(), &s.barrier, &s.cfg).unwrap();
        let region = (-30.0, -5.0);
        let (t1, t2) = (10.0, 40.0);
        let delta = 0.01;
        let a = WeakProbe::new(region, delta, (t1, t2), 1).unwrap();
        let b = WeakProbe::new((5.0, 200.0), delta, (t1, t2), 1).unwrap();
        let out = two_probe_run(&pair, &a, &b, 1.0, 0.05, &s.barrier, &s.cfg).unwrap();

        let mut psi = s.psi.clone();
        let mut prop = Propagator::new(s.grid, &s.barrier, Scheme::SpectralSplitStep, 0.01).unwrap();
        let (s1, s2) = (1_000, 4_000);
        let mut oracle = 0.0;
        for step in 0..=s2 {
            if step >= s1 {
                let w = if step == s1 || step == s2 { 0.5 } else { 1.0 };
                oracle += w * psi.probability_in(region.0, region.1);
            }
            prop.step(&mut psi);
        }
        oracle *= 0.01 / (t2 - t1);
        assert!(oracle > 0.1, "{oracle}");
        assert!(
            (out.shift_a - delta * oracle).abs() < 1e-10,
            "{} vs {}",
            out.shift_a,
            delta * oracle
        );
        assert!(out.weak_a.im.abs() < 1e-8);
        assert!((out.moments.mean_a - out.shift_a).abs() < 1e-6);
    }

    #[test]
    fn pointer_shifts_are_first_order_accurate() {
        let s = small();
        let pair = PrePostPair::transmitted(s.psi.clone(), &s.barrier, &s.cfg, 17.0).unwrap();
        let error = |delta: f64| {
            let a = WeakProbe::new((-200.0, -1.0 / 3.0), delta, (40.0, 55.0), 1).unwrap();
            let b = WeakProbe::new((1.0 / 3.0, 200.0), delta, (60.0, 80.0), 1).unwrap();
            let out = two_probe_run(&pair, &a, &b, 1.0, 0.05, &s.barrier, &s.cfg).unwrap();
            (out.moments.mean_a - out.shift_a)
                .abs()
                .max((out.moments.mean_b - out.shift_b).abs())
        };
        let (e1, e2) = (error(0.2), error(0.1));
        assert!(e1 > 1e-8, "{e1}");
        assert!(e2 < e1 / 3.5, "{e1} → {e2}");
    }

    #[test]
    fn probe_window_must_lie_in_the_run() {
        let s = small();
        let pair = PrePostPair::unconditioned(s.psi.clone(), &s.barrier, &s.cfg).unwrap();
        let a = WeakProbe::new((-10.0, 0.0), 0.1, (100.0, 200.0), 1).unwrap();
        let b = WeakProbe::new((0.0, 10.0), 0.1, (10.0, 20.0), 1).unwrap();
        assert!(matches!(
            two_probe_run(&pair, &a, &b, 1.0, 0.05, &s.barrier, &s.cfg),
            Err(PointerError::WeakValue(WeakValueError::WindowOutsideRun { .. }))
        ));
    }
}
