use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use weaktunnel_core::corpuscle::{
    corpuscular_min_variance, corpuscularity_test, derive_seed, sample_certain_shift, simulate_corpuscular,
    CorpuscularModel, TestInput, TestSettings,
};
use weaktunnel_core::pointer::{
    certain_shift_state, erase_and_postselect, erasure_constant, two_probe_run, which_path_state, JointPointerState,
    WeakProbe,
};
use weaktunnel_core::quantum::BarrierSpec;
use weaktunnel_core::scatter::{group_delay, transfer_matrix_amplitudes};
use weaktunnel_core::weakval::{conditional_distribution, projector_weak_values, PrePostPair};

use crate::config::{ScenarioConfig, Source};
use crate::output::{float, fmt_f64, json, object, OutputDir};
use crate::CliError;

type Res = Result<(), CliError>;

/// Entrance, centre and exit zones of the barrier: the outer thirds padded by
/// 2σ_x, and the middle third.
fn zones(cfg: &ScenarioConfig) -> [(&'static str, (f64, f64)); 3] {
    let (a, b, s) = (cfg.barrier_left, cfg.barrier_right, cfg.sigma_x);
    let third = (b - a) / 3.0;
    [
        ("entrance", (a - 2.0 * s, a + third)),
        ("centre", (a + third, b - third)),
        ("exit", (b - third, b + 2.0 * s)),
    ]
}

fn zone_json(z: &[(&'static str, (f64, f64)); 3]) -> Value {
    object(
        z.iter()
            .map(|(name, (l, r))| (*name, Value::Array(vec![float(*l), float(*r)]))),
    )
}

fn transmitted_pair(
    cfg: &ScenarioConfig,
) -> Result<(PrePostPair, BarrierSpec, weaktunnel_core::tdse::PropagatorConfig), CliError> {
    let s = cfg.tunneling();
    let barrier = s.barrier()?;
    let pcfg = s.config()?;
    let pair = PrePostPair::transmitted(s.initial_state()?, &barrier, &pcfg, cfg.cut())?;
    Ok((pair, barrier, pcfg))
}

pub fn fig2(cfg: &ScenarioConfig, out: &mut OutputDir) -> Res {
    let (pair, barrier, pcfg) = transmitted_pair(cfg)?;
    let dist = conditional_distribution(&pair, &barrier, &pcfg)?;
    let grid = *dist.grid();
    let (_, snaps) = pair.snapshots().expect("transmitted pairs keep their forward run");

    out.write_csv(
        "snapshots.csv",
        &["t", "x", "re_amp", "im_amp", "density"],
        snaps.iter().flat_map(|s| {
            s.psi.amplitudes().iter().enumerate().map(move |(k, a)| {
                vec![
                    fmt_f64(s.time),
                    fmt_f64(grid.x(k)),
                    fmt_f64(a.re),
                    fmt_f64(a.im),
                    fmt_f64(a.norm_sqr()),
                ]
            })
        }),
    )?;
    out.write_csv(
        "conditional.csv",
        &["t", "x", "value", "imag"],
        (0..dist.times().len()).flat_map(|j| {
            let t = dist.times()[j];
            let (re, im) = (dist.values(j), dist.imag(j));
            (0..grid.len()).map(move |k| vec![fmt_f64(t), fmt_f64(grid.x(k)), fmt_f64(re[k]), fmt_f64(im[k])])
        }),
    )?;

    let z = zones(cfg);
    let series: Vec<Vec<f64>> = z.iter().map(|(_, (l, r))| dist.weight_series(*l, *r)).collect();
    let totals: Vec<f64> = (0..dist.times().len()).map(|j| dist.total(j)).collect();
    out.write_csv(
        "zones.csv",
        &["t", "entrance", "centre", "exit", "total"],
        (0..totals.len()).map(|j| {
            vec![
                fmt_f64(dist.times()[j]),
                fmt_f64(series[0][j]),
                fmt_f64(series[1][j]),
                fmt_f64(series[2][j]),
                fmt_f64(totals[j]),
            ]
        }),
    )?;

    let max_of = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let argmax = |v: &[f64]| dist.times()[(0..v.len()).fold(0, |b, j| if v[j] > v[b] { j } else { b })];
    let peak = max_of(&series[0]) + max_of(&series[2]);
    let centre_ratio = series[1].iter().map(|c| c.abs()).fold(0.0, f64::max) / peak;
    let norm_error = totals.iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max);
    out.write_json(
        "fig2.json",
        &object([
            ("scenario", Value::String(cfg.scenario.clone())),
            ("cut", float(cfg.cut())),
            ("postselect_prob", float(pair.postselection_probability())),
            ("zones", zone_json(&z)),
            ("record_times", json(dist.times())),
            ("max_normalization_error", float(norm_error)),
            ("max_centre_to_peak_ratio", float(centre_ratio)),
            ("entrance_peak_time", float(argmax(&series[0]))),
            ("exit_peak_time", float(argmax(&series[2]))),
        ]),
    )?;
    if !(norm_error <= 1e-8) {
        return Err(CliError::Guard(format!(
            "conditional distribution sums deviate from 1 by {norm_error:e}"
        )));
    }
    Ok(())
}

pub fn dwell(cfg: &ScenarioConfig, out: &mut OutputDir) -> Res {
    let (pair, barrier, pcfg) = transmitted_pair(cfg)?;
    let z = zones(cfg);
    let regions: Vec<(f64, f64)> = z.iter().map(|(_, r)| *r).collect();
    let series = projector_weak_values(&pair, &regions, &barrier, &pcfg)?;
    let s = cfg.tunneling();
    let free = PrePostPair::unconditioned(s.initial_state()?, &barrier, &pcfg)?;
    let plain = projector_weak_values(&free, &regions, &barrier, &pcfg)?;

    let stride = (pcfg.n_steps() / 1000).max(1);
    out.write_csv(
        "dwell_series.csv",
        &[
            "t",
            "entrance_re",
            "entrance_im",
            "centre_re",
            "centre_im",
            "exit_re",
            "exit_im",
        ],
        (0..=pcfg.n_steps()).step_by(stride).map(|k| {
            let mut row = vec![fmt_f64(k as f64 * pcfg.dt())];
            for r in 0..3 {
                let w = series.values(r)[k];
                row.extend([fmt_f64(w.re), fmt_f64(w.im)]);
            }
            row
        }),
    )?;

    let tau =
        |s: &weaktunnel_core::weakval::WeakValueSeries| -> Vec<f64> { (0..3).map(|r| s.integral(r).re).collect() };
    let (t_trans, t_all) = (tau(&series), tau(&plain));
    let named = |t: &[f64]| {
        object([
            ("entrance", float(t[0])),
            ("centre", float(t[1])),
            ("exit", float(t[2])),
            ("union", float(t.iter().sum())),
        ])
    };
    out.write_json(
        "dwell.json",
        &object([
            ("scenario", Value::String(cfg.scenario.clone())),
            ("zones", zone_json(&z)),
            ("postselect_prob", float(pair.postselection_probability())),
            ("transmitted", named(&t_trans)),
            ("unconditioned", named(&t_all)),
            (
                "transmitted_centre_fraction",
                float(t_trans[1] / t_trans.iter().sum::<f64>()),
            ),
        ]),
    )
}

fn pointer_report(
    name: &'static str,
    cfg: &ScenarioConfig,
    state: &JointPointerState,
    extra: Vec<(&'static str, Value)>,
) -> Result<Value, CliError> {
    let moments = state.moment_report()?;
    let mut fields = vec![
        ("state", Value::String(name.into())),
        ("delta", float(cfg.delta)),
        ("sigma", float(cfg.sigma)),
        ("moments", json(&moments)),
    ];
    fields.extend(extra);
    Ok(object(fields))
}

pub fn variance(cfg: &ScenarioConfig, out: &mut OutputDir) -> Res {
    let state = which_path_state(cfg.delta, cfg.sigma)?;
    let closed = 2.0 * cfg.sigma.powi(2) + cfg.delta.powi(2);
    let moments = state.moment_report()?;
    let report = pointer_report(
        "which-path",
        cfg,
        &state,
        vec![
            ("var_diff", float(moments.var_diff)),
            ("closed_form_var_diff", float(closed)),
        ],
    )?;
    out.write_json("variance.json", &report)
}

pub fn erased(cfg: &ScenarioConfig, out: &mut OutputDir) -> Res {
    let (d, s) = (cfg.delta, cfg.sigma);
    let which = which_path_state(d, s)?;
    let state = erase_and_postselect(&which)?;
    let m = state.moment_report()?;
    let c2 = (-d * d / (4.0 * s * s)).exp();
    let closed = 2.0 * s * s + d * d / (1.0 + c2);
    let product = 2.0 * s * s;
    let which_var = which.moment_report()?.var_diff;
    let report = pointer_report(
        "erased",
        cfg,
        &state,
        vec![
            ("k", float(erasure_constant(d, s)?)),
            ("postselect_prob", float(state.postselect_prob())),
            ("var_diff", float(m.var_diff)),
            ("candidate_closed_form", float(closed)),
            ("closed_form_confirmed", Value::Bool((m.var_diff - closed).abs() < 1e-8)),
            ("product_var_diff", float(product)),
            ("which_path_var_diff", float(which_var)),
            (
                "ordering_holds",
                Value::Bool(product < m.var_diff && m.var_diff < which_var),
            ),
        ],
    )?;
    out.write_json("erased.json", &report)
}

pub fn certain(cfg: &ScenarioConfig, out: &mut OutputDir) -> Res {
    let (da, db) = (
        cfg.delta_a.unwrap_or(cfg.delta / 2.0),
        cfg.delta_b.unwrap_or(cfg.delta / 2.0),
    );
    let state = certain_shift_state(da, db, cfg.sigma)?;
    let m = state.moment_report()?;
    let bound = corpuscular_min_variance(m.mean_a.max(0.0), m.mean_b.max(0.0), cfg.sigma)?;
    let report = pointer_report(
        "certain-shift",
        cfg,
        &state,
        vec![
            ("delta_a", float(da)),
            ("delta_b", float(db)),
            ("var_diff", float(m.var_diff)),
            ("corpuscular_bound", float(bound)),
            ("violates_bound", Value::Bool(m.var_diff < bound)),
        ],
    )?;
    out.write_json("certain.json", &report)
}

pub fn hartman(cfg: &ScenarioConfig, out: &mut OutputDir) -> Res {
    if cfg.widths.is_empty() {
        return Err(CliError::Config("hartman needs at least one barrier width".into()));
    }
    let e = cfg.energy;
    let k = (2.0 * e).sqrt();
    let kappa = (2.0 * (cfg.v0 - e)).max(0.0).sqrt();
    let mut rows = Vec::with_capacity(cfg.widths.len());
    for &d in &cfg.widths {
        let barrier = BarrierSpec::rectangular(0.0, d, cfg.v0)?;
        let amp = transfer_matrix_amplitudes(e, &barrier)?;
        let delay = group_delay(e, &barrier)?;
        // Closed form, valid where k = κ.
        let closed = ((k - kappa).abs() < 1e-12).then(|| 2.0 * (kappa * d).tanh() / (k * kappa));
        rows.push((d, delay, amp.transmission(), closed));
    }
    out.write_csv(
        "hartman.csv",
        &["d", "delay", "transmission", "closed_form"],
        rows.iter().map(|(d, t, tr, c)| {
            vec![
                fmt_f64(*d),
                fmt_f64(*t),
                fmt_f64(*tr),
                c.map(fmt_f64).unwrap_or_default(),
            ]
        }),
    )?;
    let delays: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let monotone = delays.windows(2).all(|w| w[1] >= w[0]);
    let last_change = match delays.len() {
        0 | 1 => None,
        n => Some((delays[n - 1] - delays[n - 2]).abs() / delays[n - 1]),
    };
    out.write_json(
        "hartman.json",
        &object([
            ("energy", float(e)),
            ("v0", float(cfg.v0)),
            ("widths", json(&cfg.widths)),
            ("delays", json(&delays)),
            ("monotone", Value::Bool(monotone)),
            ("last_relative_change", last_change.map(float).unwrap_or(Value::Null)),
            (
                "opaque_limit",
                if kappa > 0.0 {
                    float(2.0 / (k * kappa))
                } else {
                    Value::Null
                },
            ),
        ]),
    )
}

pub fn scatter(cfg: &ScenarioConfig, out: &mut OutputDir) -> Res {
    let barrier = BarrierSpec::rectangular(cfg.barrier_left, cfg.barrier_right, cfg.v0)?;
    let mut rows = Vec::new();
    for e in cfg.scatter_energies() {
        let amp = transfer_matrix_amplitudes(e, &barrier)?;
        let delay = group_delay(e, &barrier)?;
        rows.push(vec![
            fmt_f64(e),
            fmt_f64(amp.t.re),
            fmt_f64(amp.t.im),
            fmt_f64(amp.transmission()),
            fmt_f64(amp.reflection()),
            fmt_f64(delay),
        ]);
    }
    out.write_csv(
        "scatter.csv",
        &["energy", "t_re", "t_im", "transmission", "reflection", "delay"],
        rows,
    )
}

/// Probe A on everything left of the central third over record intervals
/// 5–7, probe B on everything right of it over intervals 12–14.
fn probes(cfg: &ScenarioConfig) -> Result<(WeakProbe, WeakProbe), CliError> {
    let third = (cfg.barrier_right - cfg.barrier_left) / 3.0;
    let t = cfg.t_final / 19.0;
    let a = WeakProbe::new(
        (
            cfg.probe_a_left.unwrap_or(cfg.x_min),
            cfg.probe_a_right.unwrap_or(cfg.barrier_left + third),
        ),
        cfg.probe_delta,
        (cfg.probe_a_t1.unwrap_or(5.0 * t), cfg.probe_a_t2.unwrap_or(7.0 * t)),
        cfg.probe_a_sign,
    )?;
    let b = WeakProbe::new(
        (
            cfg.probe_b_left.unwrap_or(cfg.barrier_right - third),
            cfg.probe_b_right.unwrap_or(cfg.x_max),
        ),
        cfg.probe_delta,
        (cfg.probe_b_t1.unwrap_or(12.0 * t), cfg.probe_b_t2.unwrap_or(14.0 * t)),
        cfg.probe_b_sign,
    )?;
    Ok((a, b))
}

pub fn two_probe(cfg: &ScenarioConfig, out: &mut OutputDir) -> Res {
    cfg.check_alpha()?;
    let (pa, pb) = probes(cfg)?;
    let (pair, barrier, pcfg) = transmitted_pair(cfg)?;
    let r = two_probe_run(&pair, &pa, &pb, cfg.sigma, cfg.alpha, &barrier, &pcfg)?;
    let probe = |p: &WeakProbe| {
        object([
            ("region", json(&[p.region().0, p.region().1])),
            ("window", json(&[p.window().0, p.window().1])),
            ("delta", float(p.delta())),
            ("sign", Value::from(p.sign())),
            ("weakness", float(p.weakness(cfg.sigma))),
        ])
    };
    let cplx = |z: weaktunnel_core::Complex64| object([("re", float(z.re)), ("im", float(z.im))]);
    out.write_json(
        "two_probe.json",
        &object([
            ("scenario", Value::String(cfg.scenario.clone())),
            ("sigma", float(cfg.sigma)),
            ("probe_a", probe(&pa)),
            ("probe_b", probe(&pb)),
            ("weak_value_a", cplx(r.weak_a)),
            ("weak_value_b", cplx(r.weak_b)),
            ("shift_a", float(r.shift_a)),
            ("shift_b", float(r.shift_b)),
            ("net_shift", float(r.net_shift)),
            ("moments", json(&r.moments)),
            ("test", json(&r.stats)),
        ]),
    )
}

fn corpuscular_model(cfg: &ScenarioConfig, seed: u64) -> Result<CorpuscularModel, CliError> {
    Ok(CorpuscularModel::new(
        cfg.p_hit,
        cfg.delta_a.unwrap_or(cfg.delta),
        cfg.delta_b.unwrap_or(cfg.delta),
        cfg.sigma,
        cfg.n_pairs,
        seed,
    )?)
}

fn write_samples(out: &mut OutputDir, samples: &[(f64, f64)]) -> Res {
    out.write_csv(
        "samples.csv",
        &["pair_index", "a", "b"],
        samples
            .iter()
            .enumerate()
            .map(|(i, (a, b))| vec![i.to_string(), fmt_f64(*a), fmt_f64(*b)]),
    )
}

pub fn corpuscle_sim(cfg: &ScenarioConfig, out: &mut OutputDir) -> Res {
    let model = corpuscular_model(cfg, cfg.seed)?;
    let samples = simulate_corpuscular(&model);
    write_samples(out, &samples)?;
    let n = samples.len() as f64;
    let ma = samples.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = samples.iter().map(|p| p.1).sum::<f64>() / n;
    let md = ma - mb;
    let vd = samples.iter().map(|p| (p.0 - p.1 - md).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    out.write_json(
        "summary.json",
        &object([
            ("model", json(&model)),
            ("population_mean_a", float(model.mean_a())),
            ("population_mean_b", float(model.mean_b())),
            ("population_var_diff", float(model.var_diff())),
            (
                "corpuscular_bound",
                float(corpuscular_min_variance(
                    model.mean_a().abs(),
                    model.mean_b().abs(),
                    cfg.sigma,
                )?),
            ),
            ("sample_mean_a", float(ma)),
            ("sample_mean_b", float(mb)),
            ("sample_var_diff", float(vd)),
        ]),
    )
}

fn read_samples(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let field = |i: usize| -> Result<f64, CliError> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| CliError::Config(format!("{}: row {} needs numeric a and b", path.display(), line + 1)))
        };
        pairs.push((field(1)?, field(2)?));
    }
    Ok(pairs)
}

pub fn corpuscle_test(cfg: &ScenarioConfig, out: &mut OutputDir) -> Res {
    cfg.check_alpha()?;
    let samples = match &cfg.samples {
        Some(path) => read_samples(path)?,
        None => {
            let seed = derive_seed(cfg.seed, 0);
            let pairs = match cfg.source {
                Source::Corpuscular => simulate_corpuscular(&corpuscular_model(cfg, seed)?),
                Source::CertainShift => sample_certain_shift(
                    cfg.delta_a.unwrap_or(cfg.delta / 2.0),
                    cfg.delta_b.unwrap_or(cfg.delta / 2.0),
                    cfg.sigma,
                    cfg.n_pairs,
                    seed,
                )?,
                Source::WhichPath => {
                    which_path_state(cfg.delta, cfg.sigma)?.sample(cfg.n_pairs, &mut ChaCha8Rng::seed_from_u64(seed))
                }
                Source::Erased => erase_and_postselect(&which_path_state(cfg.delta, cfg.sigma)?)?
                    .sample(cfg.n_pairs, &mut ChaCha8Rng::seed_from_u64(seed)),
            };
            write_samples(out, &pairs)?;
            pairs
        }
    };
    let settings = TestSettings {
        alpha: cfg.alpha,
        resamples: cfg.resamples,
        seed: derive_seed(cfg.seed, 1),
    };
    let mut stats = corpuscularity_test(TestInput::Samples(&samples), cfg.sigma, &settings)?;
    stats.seed = Some(cfg.seed);
    out.write_json("report.json", &json(&stats))
}
