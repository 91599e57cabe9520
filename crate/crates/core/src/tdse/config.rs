use serde::{Deserialize, Serialize};

use super::{Result, TdseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Strang splitting, kinetic step in Fourier space. Periodic.
    SpectralSplitStep,
    /// Crank–Nicolson with an eighth-order central-difference Laplacian. Dirichlet.
    ImplicitFd,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::SpectralSplitStep => "spectral-split-step",
            Scheme::ImplicitFd => "implicit-fd",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "spectral-split-step" => Ok(Scheme::SpectralSplitStep),
            "implicit-fd" => Ok(Scheme::ImplicitFd),
            other => Err(format!(
                "unknown scheme `{other}` (expected spectral-split-step or implicit-fd)"
            )),
        }
    }
}

/// Step size, step count and the steps at which snapshots are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorConfig {
    dt: f64,
    n_steps: usize,
    scheme: Scheme,
    record_steps: Vec<usize>,
}

impl PropagatorConfig {
    /// Each record time must be a whole multiple of `dt` inside `[0, n_steps·dt]`.
    pub fn new(dt: f64, n_steps: usize, scheme: Scheme, record_times: &[f64]) -> Result<Self> {
        check_dt(dt)?;
        let mut record_steps = Vec::with_capacity(record_times.len());
        for &t in record_times {
            let j = (t / dt).round();
            if !t.is_finite() || j < 0.0 || j > n_steps as f64 || (t - j * dt).abs() > 1e-9 * dt.max(t.abs()) {
                return Err(TdseError::InvalidConfig(format!(
                    "record time {t} is not a multiple of dt = {dt} within [0, {}]",
                    n_steps as f64 * dt
                )));
            }
            record_steps.push(j as usize);
        }
        record_steps.sort_unstable();
        record_steps.dedup();
        Ok(Self {
            dt,
            n_steps,
            scheme,
            record_steps,
        })
    }

    /// `n_records` snapshots evenly spaced from `t = 0` to `t = n_steps·dt`.
    pub fn uniform(dt: f64, n_steps: usize, scheme: Scheme, n_records: usize) -> Result<Self> {
        check_dt(dt)?;
        if n_records < 2 || n_steps % (n_records - 1) != 0 {
            return Err(TdseError::InvalidConfig(format!(
                "{n_records} evenly spaced records need n_records ≥ 2 and n_records − 1 dividing {n_steps} steps"
            )));
        }
        let stride = n_steps / (n_records - 1);
        let record_steps = (0..n_records).map(|j| j * stride).collect();
        Ok(Self {
            dt,
            n_steps,
            scheme,
            record_steps,
        })
    }

    /// Only the final state is kept.
    pub fn final_only(dt: f64, n_steps: usize, scheme: Scheme) -> Result<Self> {
        Self::new(dt, n_steps, scheme, &[])
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn total_time(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn record_times(&self) -> Vec<f64> {
        self.record_steps.iter().map(|&j| j as f64 * self.dt).collect()
    }

    /// Requested record steps plus the final step, ascending and unique.
    pub(crate) fn snapshot_steps(&self) -> Vec<usize> {
        let mut steps = self.record_steps.clone();
        if steps.last() != Some(&self.n_steps) {
            steps.push(self.n_steps);
        }
        steps
    }

    pub fn with_scheme(&self, scheme: Scheme) -> Self {
        Self { scheme, ..self.clone() }
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(TdseError::InvalidConfig(format!(
            "time step dt = {dt} must be positive and finite"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_times_must_sit_on_the_step_lattice() {
        let s = Scheme::SpectralSplitStep;
        assert!(PropagatorConfig::new(0.1, 10, s, &[0.0, 0.5, 1.0]).is_ok());
        assert!(PropagatorConfig::new(0.1, 10, s, &[0.55]).is_err());
        assert!(PropagatorConfig::new(0.1, 10, s, &[1.1]).is_err());
        assert!(PropagatorConfig::new(0.1, 10, s, &[-0.1]).is_err());
        assert!(PropagatorConfig::new(0.0, 10, s, &[]).is_err());
        assert!(PropagatorConfig::new(f64::NAN, 10, s, &[]).is_err());
    }

    #[test]
    fn uniform_records() {
        let cfg = PropagatorConfig::uniform(0.5, 12, Scheme::ImplicitFd, 4).unwrap();
        assert_eq!(cfg.record_times(), vec![0.0, 2.0, 4.0, 6.0]);
        assert_eq!(cfg.snapshot_steps(), vec![0, 4, 8, 12]);
        assert!(PropagatorConfig::uniform(0.5, 12, Scheme::ImplicitFd, 6).is_err());
    }

    #[test]
    fn final_step_is_always_kept() {
        let cfg = PropagatorConfig::new(1.0, 5, Scheme::ImplicitFd, &[2.0, 1.0, 2.0]).unwrap();
        assert_eq!(cfg.snapshot_steps(), vec![1, 2, 5]);
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in [Scheme::SpectralSplitStep, Scheme::ImplicitFd] {
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
        assert!("leapfrog".parse::<Scheme>().is_err());
    }
}
