//! The corpuscular null model: each particle shifts exactly one of two pointers.
//!
//! For hit probability `p` and per-hit shifts `δ_A`, `δ_B` the pointer means are
//! `μ_A = p·δ_A`, `μ_B = (1−p)·δ_B` and
//!
//! ```text
//! Var(a − b) = 2σ² + p·δ_A² + (1−p)·δ_B² − (μ_A − μ_B)².
//! ```
//!
//! Minimizing over the model at fixed means gives a floor that the quantum
//! certain-shift state (`Var(a − b) = 2σ²` with both means `μ > 0`) undercuts.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_RESAMPLES: usize = 10_000;
pub const MIN_PAIRS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorpuscleError {
    #[error("hit probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("pointer width must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("model needs at least one pair")]
    NoPairs,
    #[error("shift {0} is not finite")]
    NonFiniteShift(f64),
    #[error("mean shifts must be finite and non-negative, got ({mu_a}, {mu_b})")]
    InfeasibleMeans { mu_a: f64, mu_b: f64 },
    #[error("{got} pairs given, the test needs at least {need}")]
    InsufficientSamples { got: usize, need: usize },
    #[error("significance level {0} is outside (0, 0.5)")]
    InvalidAlpha(f64),
    #[error("at least one bootstrap resample is required")]
    NoResamples,
}

pub type Result<T> = std::result::Result<T, CorpuscleError>;

/// SplitMix64 step; gives independent-looking seeds for task `index` of a run.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpuscularModel {
    p: f64,
    delta_a: f64,
    delta_b: f64,
    sigma: f64,
    n: usize,
    seed: u64,
}

impl CorpuscularModel {
    pub fn new(p: f64, delta_a: f64, delta_b: f64, sigma: f64, n: usize, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(CorpuscleError::InvalidProbability(p));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(CorpuscleError::InvalidSigma(sigma));
        }
        if n == 0 {
            return Err(CorpuscleError::NoPairs);
        }
        for d in [delta_a, delta_b] {
            if !d.is_finite() {
                return Err(CorpuscleError::NonFiniteShift(d));
            }
        }
        Ok(Self {
            p,
            delta_a,
            delta_b,
            sigma,
            n,
            seed,
        })
    }

    /// `p = 1/2`, `δ_A = δ_B = Δ`: the model that reproduces the which-path state.
    pub fn symmetric(delta: f64, sigma: f64, n: usize, seed: u64) -> Result<Self> {
        Self::new(0.5, delta, delta, sigma, n, seed)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn delta_a(&self) -> f64 {
        self.delta_a
    }

    pub fn delta_b(&self) -> f64 {
        self.delta_b
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn mean_a(&self) -> f64 {
        self.p * self.delta_a
    }

    pub fn mean_b(&self) -> f64 {
        (1.0 - self.p) * self.delta_b
    }

    /// Population `Var(a − b)`.
    pub fn var_diff(&self) -> f64 {
        let mu = self.mean_a() - self.mean_b();
        2.0 * self.sigma.powi(2) + self.p * self.delta_a.powi(2) + (1.0 - self.p) * self.delta_b.powi(2) - mu * mu
    }
}

/// Draws `(a_i, b_i)` for every pair of the model; a pure function of the model.
pub fn simulate_corpuscular(model: &CorpuscularModel) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let noise = Normal::new(0.0, model.sigma).expect("sigma validated at construction");
    (0..model.n)
        .map(|_| {
            let hit_a = rng.random::<f64>() < model.p;
            let (a, b) = (noise.sample(&mut rng), noise.sample(&mut rng));
            if hit_a {
                (a + model.delta_a, b)
            } else {
                (a, b + model.delta_b)
            }
        })
        .collect()
}

/// Minimizer and minimum of the corpuscular `Var(a − b)` at fixed means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpuscularBound {
    pub p: f64,
    pub value: f64,
}

/// `min Var(a − b)` over corpuscular models with pointer means `μ_A`, `μ_B`.
pub fn corpuscular_min_variance(mu_a: f64, mu_b: f64, sigma: f64) -> Result<f64> {
    Ok(corpuscular_minimizer(mu_a, mu_b, sigma)?.value)
}

/// Numerical minimization over `p`: scan, then golden-section refinement.
pub fn corpuscular_minimizer(mu_a: f64, mu_b: f64, sigma: f64) -> Result<CorpuscularBound> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(CorpuscleError::InvalidSigma(sigma));
    }
    if !(mu_a >= 0.0 && mu_b >= 0.0 && mu_a.is_finite() && mu_b.is_finite()) {
        return Err(CorpuscleError::InfeasibleMeans { mu_a, mu_b });
    }
    let base = 2.0 * sigma * sigma - (mu_a - mu_b).powi(2);
    // With one mean zero the optimum sits on the boundary, where δ for the
    // unused pointer drops out.
    if mu_b == 0.0 {
        return Ok(CorpuscularBound {
            p: 1.0,
            value: base + mu_a * mu_a,
        });
    }
    if mu_a == 0.0 {
        return Ok(CorpuscularBound {
            p: 0.0,
            value: base + mu_b * mu_b,
        });
    }
    let f = |p: f64| base + mu_a * mu_a / p + mu_b * mu_b / (1.0 - p);

    const SCAN: usize = 1000;
    let best = (1..SCAN)
        .map(|j| j as f64 / SCAN as f64)
        .min_by(|x, y| f(*x).total_cmp(&f(*y)))
        .expect("scan is non-empty");
    let (mut lo, mut hi) = (
        (best - 1.0 / SCAN as f64).max(f64::EPSILON),
        (best + 1.0 / SCAN as f64).min(1.0 - f64::EPSILON),
    );
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > 1e-13 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = f(d);
        }
    }
    let p = 0.5 * (lo + hi);
    Ok(CorpuscularBound { p, value: f(p) })
}

/// Bound for means of either sign: a negative mean needs a negative shift, and
/// with opposite signs the cross term cancels entirely.
fn signed_min_variance(mu_a: f64, mu_b: f64, sigma: f64) -> Result<f64> {
    if mu_a * mu_b <= 0.0 {
        return Ok(2.0 * sigma * sigma);
    }
    corpuscular_min_variance(mu_a.abs(), mu_b.abs(), sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConsistentWithCorpuscular,
    RejectsCorpuscular,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::ConsistentWithCorpuscular => "consistent-with-corpuscular",
            Verdict::RejectsCorpuscular => "rejects-corpuscular",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Pointer moments as consumed by the test; also the pointer module's report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub mean_a: f64,
    pub mean_b: f64,
    pub var_a: f64,
    pub var_b: f64,
    pub var_diff: f64,
    pub postselect_prob: f64,
}

#[derive(Debug, Clone, Copy)]
pub enum TestInput<'a> {
    Samples(&'a [(f64, f64)]),
    /// Exact moments: no sampling error, so the interval collapses to a point.
    Moments(&'a MomentReport),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestSettings {
    pub alpha: f64,
    pub resamples: usize,
    pub seed: u64,
}

impl Default for TestSettings {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            resamples: DEFAULT_RESAMPLES,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    /// `None` for exact moments.
    pub n: Option<usize>,
    pub mean_a: f64,
    pub mean_b: f64,
    pub var_diff: f64,
    pub ci: [f64; 2],
    pub bound: f64,
    pub alpha: f64,
    pub verdict: Verdict,
    pub seed: Option<u64>,
}

impl EnsembleStats {
    pub fn ci_low(&self) -> f64 {
        self.ci[0]
    }

    pub fn ci_high(&self) -> f64 {
        self.ci[1]
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    a: f64,
    b: f64,
    d: f64,
    dd: f64,
}

impl Sums {
    fn push(&mut self, (a, b): (f64, f64)) {
        let d = a - b;
        self.a += a;
        self.b += b;
        self.d += d;
        self.dd += d * d;
    }

    /// `(mean_a, mean_b, unbiased Var(a − b))`.
    fn moments(&self, n: usize) -> (f64, f64, f64) {
        let nf = n as f64;
        let md = self.d / nf;
        (self.a / nf, self.b / nf, (self.dd - nf * md * md) / (nf - 1.0))
    }
}

fn excess(mean_a: f64, mean_b: f64, var_diff: f64, sigma0: f64) -> Result<(f64, f64)> {
    let bound = signed_min_variance(mean_a, mean_b, sigma0)?;
    Ok((var_diff - bound, bound))
}

/// Linear interpolation between order statistics of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Tests `Var(a − b)` against the corpuscular floor at the observed means.
///
/// The statistic is the excess `Var(a − b) − bound(mean_a, mean_b)`, bootstrapped
/// over pairs so the noise in the means enters the interval. With `[L, U]` its
/// `α` and `1 − α` percentiles and `gap = bound − 2σ₀²` the distance from the
/// floor down to the certain-shift value:
///
/// * `U < 0`: rejects the corpuscular model;
/// * `U ≥ 0` and `L > −gap`: consistent with it, and the certain-shift
///   alternative is excluded;
/// * otherwise inconclusive, the interval covering both.
pub fn corpuscularity_test(input: TestInput<'_>, sigma0: f64, settings: &TestSettings) -> Result<EnsembleStats> {
    if !(sigma0 > 0.0 && sigma0.is_finite()) {
        return Err(CorpuscleError::InvalidSigma(sigma0));
    }
    let alpha = settings.alpha;
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(CorpuscleError::InvalidAlpha(alpha));
    }
    let floor = 2.0 * sigma0 * sigma0;
    let classify = |lo: f64, hi: f64, gap: f64| {
        if hi < 0.0 {
            Verdict::RejectsCorpuscular
        } else if lo > -gap {
            Verdict::ConsistentWithCorpuscular
        } else {
            Verdict::Inconclusive
        }
    };

    match input {
        TestInput::Moments(m) => {
            let (e, bound) = excess(m.mean_a, m.mean_b, m.var_diff, sigma0)?;
            Ok(EnsembleStats {
                n: None,
                mean_a: m.mean_a,
                mean_b: m.mean_b,
                var_diff: m.var_diff,
                ci: [m.var_diff, m.var_diff],
                bound,
                alpha,
                verdict: classify(e, e, bound - floor),
                seed: None,
            })
        }
        TestInput::Samples(pairs) => {
            if pairs.len() < MIN_PAIRS {
                return Err(CorpuscleError::InsufficientSamples {
                    got: pairs.len(),
                    need: MIN_PAIRS,
                });
            }
            if settings.resamples == 0 {
                return Err(CorpuscleError::NoResamples);
            }
            let n = pairs.len();
            let mut sums = Sums::default();
            pairs.iter().for_each(|&p| sums.push(p));
            let (mean_a, mean_b, var_diff) = sums.moments(n);
            let (_, bound) = excess(mean_a, mean_b, var_diff, sigma0)?;

            let mut boot = (0..settings.resamples)
                .into_par_iter()
                .map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(settings.seed, r as u64));
                    let mut s = Sums::default();
                    for _ in 0..n {
                        s.push(pairs[rng.random_range(0..n)]);
                    }
                    let (ma, mb, v) = s.moments(n);
                    excess(ma, mb, v, sigma0).map(|(e, _)| e)
                })
                .collect::<Result<Vec<f64>>>()?;
            boot.sort_by(f64::total_cmp);
            let (lo, hi) = (quantile(&boot, alpha), quantile(&boot, 1.0 - alpha));
            Ok(EnsembleStats {
                n: Some(n),
                mean_a,
                mean_b,
                var_diff,
                ci: [(bound + lo).min(var_diff), (bound + hi).max(var_diff)],
                bound,
                alpha,
                verdict: classify(lo, hi, bound - floor),
                seed: Some(settings.seed),
            })
        }
    }
}

/// Independent draws from the certain-shift product state `G_A(δ_A,σ)·G_B(δ_B,σ)`.
pub fn sample_certain_shift(delta_a: f64, delta_b: f64, sigma: f64, n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(CorpuscleError::InvalidSigma(sigma));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("sigma validated");
    Ok((0..n)
        .map(|_| (delta_a + noise.sample(&mut rng), delta_b + noise.sample(&mut rng)))
        .collect())
}
