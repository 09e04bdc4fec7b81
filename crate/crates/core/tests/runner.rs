use proptest::prelude::*;
use swarmbench::bench::{run_protocol, run_trial, run_trial_with_telemetry, AlgorithmId, Protocol, ScenarioConfig, Verdict};
use swarmbench::sim::MapId;

fn config(map: MapId, algo: AlgorithmId, robots: usize, seed: u64, cutoff: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new(map, algo, robots, seed).unwrap();
    cfg.cutoff_s = cutoff;
    cfg
}

#[test]
fn trials_are_reproducible() {
    for algo in [AlgorithmId::Pf, AlgorithmId::Pbc, AlgorithmId::DmaRrt, AlgorithmId::Idc, AlgorithmId::Gdc] {
        let cfg = config(MapId::EmptyDense, algo, 4, 7, 40.0);
        let (a, ta) = run_trial_with_telemetry(&cfg).unwrap();
        let (b, tb) = run_trial_with_telemetry(&cfg).unwrap();
        assert_eq!(a, b, "{algo}");
        assert_eq!(ta, tb, "{algo}");
    }
}

#[test]
fn reported_totals_match_the_telemetry() {
    for algo in [AlgorithmId::Pf, AlgorithmId::Idc, AlgorithmId::Gdc] {
        let cfg = config(MapId::Uniform, algo, 4, 3, 60.0);
        let (r, t) = run_trial_with_telemetry(&cfg).unwrap();
        let sum: f64 = t.per_robot_distance.iter().sum();
        assert!((r.total_distance_m - sum).abs() <= 1e-9 * sum.max(1.0));
        assert_eq!(r.collisions_rr, t.collisions.pair_counts.values().sum::<u64>());
        assert_eq!(r.collisions_rr, t.collisions.robot_robot);
        assert!(r.duration_s <= cfg.cutoff_s + 1e-9);
        assert_eq!(r.success, r.convergence_time_s.is_some());
        assert!((0.0..=1.0).contains(&r.coverage_fraction));
        // coverage error never rises
        assert!(t.coverage_error.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9));
    }
}

#[test]
fn rendezvous_points_agree_across_agents() {
    let cfg = config(MapId::EmptyDense, AlgorithmId::Gdc, 4, 2, 600.0);
    let (r, t) = run_trial_with_telemetry(&cfg).unwrap();
    assert!(r.success);
    let finished: Vec<_> = t.rendezvous_events.iter().filter(|e| e.end_tick.is_some()).collect();
    assert!(!finished.is_empty());
    for e in finished {
        assert_eq!(e.points.len(), cfg.robots);
        for per_agent in &e.points {
            assert_eq!(per_agent.len(), e.points[0].len());
            for (a, b) in per_agent.iter().zip(&e.points[0]) {
                assert_eq!(a, b);
            }
        }
    }
}

#[test]
fn commit_rounds_are_unique() {
    let cfg = config(MapId::Corridor, AlgorithmId::DmaRrt, 4, 1, 120.0);
    let (_, t) = run_trial_with_telemetry(&cfg).unwrap();
    assert!(!t.commits.is_empty());
    let mut rounds: Vec<u64> = t.commits.iter().map(|c| c.round).collect();
    let n = rounds.len();
    rounds.dedup();
    assert_eq!(rounds.len(), n);
    assert!(t.commits.windows(2).all(|w| w[0].tick <= w[1].tick));
}

#[test]
fn hash_tracks_every_field() {
    let base = config(MapId::Concave, AlgorithmId::Pbc, 4, 1, 600.0);
    let h = base.config_hash();
    assert_eq!(h.len(), 16);
    assert_eq!(h, base.clone().config_hash());
    let mut variants = vec![base.with_seed(2)];
    let mut v = base.clone();
    v.robots = 8;
    variants.push(v);
    let mut v = base.clone();
    v.params.pbc.ds += 0.01;
    variants.push(v);
    let mut v = base.clone();
    v.comms.latency_ticks = 3;
    variants.push(v);
    let mut v = base.clone();
    v.cutoff_s = 300.0;
    variants.push(v);
    for v in variants {
        assert_ne!(v.config_hash(), h);
    }
    assert_eq!(run_trial(&base.with_seed(5)).unwrap().config_hash, base.with_seed(5).config_hash());
}

proptest! {
    #[test]
    fn protocol_follows_the_scripted_outcomes(
        outcomes in prop::collection::vec(any::<bool>(), 0..40),
        first_seed in 0u64..1000,
        quota in 1usize..6,
        max_trials in 1usize..30,
    ) {
        let protocol = Protocol { quota, failure_limit: quota, max_trials };
        let script = |seed: u64| Ok(outcomes.get((seed - first_seed) as usize).copied().unwrap_or(false));
        let run = run_protocol(protocol, first_seed, script, |ok| *ok).unwrap();

        let seeds: Vec<u64> = run.trials.iter().map(|(s, _)| *s).collect();
        let expected: Vec<u64> = (first_seed..first_seed + seeds.len() as u64).collect();
        prop_assert_eq!(seeds, expected);
        prop_assert_eq!(run.successes, run.trials.iter().filter(|(_, ok)| *ok).count());
        prop_assert!(run.trials.len() <= max_trials);
        match run.verdict {
            Verdict::Tractable => {
                prop_assert_eq!(run.successes, quota);
                prop_assert!(run.trials.last().unwrap().1);
            }
            Verdict::Intractable => {
                prop_assert_eq!(run.successes, 0);
                prop_assert_eq!(run.trials.len(), quota);
            }
            Verdict::Incomplete => {
                prop_assert_eq!(run.trials.len(), max_trials);
                prop_assert!(run.successes < quota);
            }
        }
    }
}
