//! Flat scenario configuration: one TOML table of scalar keys and short lists.
//! Every key has a default and a same-named `--kebab-case` flag that wins over
//! the file.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use weaktunnel_core::tdse::{Scheme, TunnelingScenario};

use crate::CliError;

/// Where `corpuscle-test` gets its pairs when no sample file is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Corpuscular,
    CertainShift,
    WhichPath,
    Erased,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,

    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,

    pub barrier_left: f64,
    pub barrier_right: f64,
    pub v0: f64,

    pub x0: f64,
    pub sigma_x: f64,
    /// Omitted: chosen so that `⟨E⟩ = V0/2`.
    pub k0: Option<f64>,

    pub dt: f64,
    pub t_final: f64,
    pub n_records: usize,
    pub scheme: Scheme,
    /// Left edge of the transmitted post-selection; omitted: `barrier_right + 2·sigma_x`.
    pub cut: Option<f64>,

    /// Energy for `hartman`.
    pub energy: f64,
    /// Barrier widths for `hartman`.
    pub widths: Vec<f64>,
    /// Energies for `scatter`; empty means 100 points on (0, 2·V0).
    pub energies: Vec<f64>,

    /// Pointer shift Δ and width σ.
    pub delta: f64,
    pub sigma: f64,
    /// Per-pointer shifts for `certain` and the samplers; omitted: Δ/2 for
    /// `certain`, Δ for the corpuscular model.
    pub delta_a: Option<f64>,
    pub delta_b: Option<f64>,

    /// Probe strength for `two-probe`; regions and windows default to the two
    /// faces of the barrier, before and after the passage.
    pub probe_delta: f64,
    pub probe_a_left: Option<f64>,
    pub probe_a_right: Option<f64>,
    pub probe_a_t1: Option<f64>,
    pub probe_a_t2: Option<f64>,
    pub probe_a_sign: i8,
    pub probe_b_left: Option<f64>,
    pub probe_b_right: Option<f64>,
    pub probe_b_t1: Option<f64>,
    pub probe_b_t2: Option<f64>,
    pub probe_b_sign: i8,

    pub p_hit: f64,
    pub n_pairs: usize,
    pub seed: u64,
    pub alpha: f64,
    pub resamples: usize,
    pub source: Source,
    /// CSV of `pair_index,a,b` for `corpuscle-test`.
    pub samples: Option<PathBuf>,

    /// Not echoed: outputs must not depend on where they are written.
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let s = TunnelingScenario::default();
        Self {
            scenario: "default".into(),
            x_min: s.x_min,
            x_max: s.x_max,
            n_points: s.n_points,
            barrier_left: s.barrier_left,
            barrier_right: s.barrier_right,
            v0: s.v0,
            x0: s.x0,
            sigma_x: s.sigma_x,
            k0: s.k0,
            dt: s.dt,
            t_final: s.t_final,
            n_records: s.n_records,
            scheme: s.scheme,
            cut: None,
            energy: 0.5,
            widths: vec![10.0, 20.0, 40.0, 80.0],
            energies: Vec::new(),
            delta: 1.0,
            sigma: 1.0,
            delta_a: None,
            delta_b: None,
            probe_delta: 0.05,
            probe_a_left: None,
            probe_a_right: None,
            probe_a_t1: None,
            probe_a_t2: None,
            probe_a_sign: 1,
            probe_b_left: None,
            probe_b_right: None,
            probe_b_t1: None,
            probe_b_t2: None,
            probe_b_sign: 1,
            p_hit: 0.5,
            n_pairs: 10_000,
            seed: 0,
            alpha: 0.05,
            resamples: 10_000,
            source: Source::Corpuscular,
            samples: None,
            output_dir: None,
        }
    }
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// The resolved configuration as written into every output directory.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is plain data")
    }

    pub fn tunneling(&self) -> TunnelingScenario {
        TunnelingScenario {
            x_min: self.x_min,
            x_max: self.x_max,
            n_points: self.n_points,
            barrier_left: self.barrier_left,
            barrier_right: self.barrier_right,
            v0: self.v0,
            x0: self.x0,
            sigma_x: self.sigma_x,
            k0: self.k0,
            dt: self.dt,
            t_final: self.t_final,
            n_records: self.n_records,
            scheme: self.scheme,
        }
    }

    pub fn cut(&self) -> f64 {
        self.cut.unwrap_or(self.barrier_right + 2.0 * self.sigma_x)
    }

    pub fn scatter_energies(&self) -> Vec<f64> {
        if self.energies.is_empty() {
            (1..=100).map(|j| (j as f64 - 0.5) * 0.02 * self.v0).collect()
        } else {
            self.energies.clone()
        }
    }

    pub(crate) fn check_alpha(&self) -> Result<(), CliError> {
        if self.alpha > 0.0 && self.alpha < 0.5 {
            Ok(())
        } else {
            Err(CliError::Config(format!("alpha = {} must lie in (0, 0.5)", self.alpha)))
        }
    }
}

/// Command-line overrides; each flag replaces the same-named config key.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub scenario: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x_min: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x_max: Option<f64>,
    #[arg(long, global = true)]
    pub n_points: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub barrier_left: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub barrier_right: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub v0: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    #[arg(long, global = true)]
    pub sigma_x: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub k0: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true)]
    pub t_final: Option<f64>,
    #[arg(long, global = true)]
    pub n_records: Option<usize>,
    #[arg(long, global = true)]
    pub scheme: Option<Scheme>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub cut: Option<f64>,
    #[arg(long = "energy", visible_alias = "e", global = true)]
    pub energy: Option<f64>,
    #[arg(long = "widths", visible_alias = "d", global = true, value_delimiter = ',')]
    pub widths: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub energies: Option<Vec<f64>>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta_a: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta_b: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub probe_delta: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub probe_a_left: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub probe_a_right: Option<f64>,
    #[arg(long, global = true)]
    pub probe_a_t1: Option<f64>,
    #[arg(long, global = true)]
    pub probe_a_t2: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub probe_a_sign: Option<i8>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub probe_b_left: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub probe_b_right: Option<f64>,
    #[arg(long, global = true)]
    pub probe_b_t1: Option<f64>,
    #[arg(long, global = true)]
    pub probe_b_t2: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub probe_b_sign: Option<i8>,
    #[arg(long, global = true)]
    pub p_hit: Option<f64>,
    #[arg(long, global = true)]
    pub n_pairs: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub resamples: Option<usize>,
    #[arg(long, global = true)]
    pub source: Option<Source>,
    #[arg(long, global = true)]
    pub samples: Option<PathBuf>,
    #[arg(long, short = 'o', global = true)]
    pub output_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(self, cfg: &mut ScenarioConfig) {
        macro_rules! set {
            ($($field:ident),* ; $($opt:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
                $(if let Some(v) = self.$opt { cfg.$opt = Some(v); })*
            };
        }
        set!(
            scenario, x_min, x_max, n_points, barrier_left, barrier_right, v0, x0, sigma_x, dt, t_final,
            n_records, scheme, energy, widths, energies, delta, sigma, probe_delta, probe_a_sign, probe_b_sign,
            p_hit, n_pairs, seed, alpha, resamples, source;
            k0, cut, delta_a, delta_b, probe_a_left, probe_a_right, probe_a_t1, probe_a_t2, probe_b_left,
            probe_b_right, probe_b_t1, probe_b_t2, samples, output_dir
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ScenarioConfig::default();
        let text = cfg.to_toml();
        let back: ScenarioConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_files_fill_in_defaults_and_unknown_keys_fail() {
        let cfg: ScenarioConfig = toml::from_str("delta = 0.5\nscheme = \"implicit-fd\"\n").unwrap();
        assert_eq!(cfg.delta, 0.5);
        assert_eq!(cfg.scheme, Scheme::ImplicitFd);
        assert_eq!(cfg.sigma, 1.0);
        assert!(toml::from_str::<ScenarioConfig>("delat = 0.5").is_err());
    }

    #[test]
    fn output_dir_is_not_echoed() {
        let cfg = ScenarioConfig {
            output_dir: Some("/tmp/x".into()),
            ..Default::default()
        };
        assert!(!cfg.to_toml().contains("output_dir"));
    }

    #[test]
    fn overrides_win() {
        let mut cfg = ScenarioConfig::default();
        Overrides {
            delta: Some(2.0),
            k0: Some(0.7),
            widths: Some(vec![1.0]),
            ..Default::default()
        }
        .apply(&mut cfg);
        assert_eq!((cfg.delta, cfg.k0, cfg.widths.clone()), (2.0, Some(0.7), vec![1.0]));
        assert_eq!(cfg.cut(), 25.0);
    }
}
