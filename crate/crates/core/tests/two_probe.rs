use weaktunnel_core::corpuscle::Verdict;
use weaktunnel_core::pointer::{two_probe_run, WeakProbe};
use weaktunnel_core::tdse::TunnelingScenario;
use weaktunnel_core::weakval::PrePostPair;

#[test]
fn transmitted_particle_shifts_both_faces_with_certainty() {
    let s = TunnelingScenario::default();
    let barrier = s.barrier().unwrap();
    let cfg = s.config().unwrap();
    let pair = PrePostPair::transmitted(s.initial_state().unwrap(), &barrier, &cfg, s.transmitted_cut()).unwrap();

    // Everything left of the central third early on, everything right of it late.
    let third = (s.barrier_right - s.barrier_left) / 3.0;
    let (delta, sigma) = (0.05, 1.0);
    let a = WeakProbe::new((s.x_min, s.barrier_left + third), delta, (47.5, 66.5), 1).unwrap();
    let b = WeakProbe::new((s.barrier_right - third, s.x_max), delta, (114.0, 133.0), 1).unwrap();
    let out = two_probe_run(&pair, &a, &b, sigma, 0.05, &barrier, &cfg).unwrap();
    println!("{:?} {:?} {:?}", out.weak_a, out.weak_b, out.moments);

    assert!((out.shift_a - delta).abs() < 0.02 * delta);
    assert!((out.shift_b - delta).abs() < 0.02 * delta);
    assert!((out.moments.mean_a - delta).abs() < 0.03 * delta);
    assert!((out.moments.mean_b - delta).abs() < 0.03 * delta);
    assert!((out.moments.var_diff - 2.0 * sigma * sigma).abs() < delta * delta);
    assert!((out.moments.postselect_prob - pair.postselection_probability()).abs() < 1e-20);
    assert_eq!(out.stats.verdict, Verdict::RejectsCorpuscular);
}
