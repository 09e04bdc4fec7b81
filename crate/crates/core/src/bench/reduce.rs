use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bench::config::{AlgorithmId, ScenarioConfig};
use crate::bench::trial::TrialResult;
use crate::comms::{BandwidthSummary, EdgeBandwidth};
use crate::error::{Error, Result};
use crate::invariants::{check_reduction, Atom, CircuitGraph, ReductionReport, ScenarioOutcome, SystemDescriptor};
use crate::sim::MapId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionScenario {
    pub map: MapId,
    pub robots: usize,
    pub seeds: Vec<u64>,
}

/// Edge-wise maximum of the peak rates over several trials.
fn merged_peaks(trials: &[&TrialResult]) -> BandwidthSummary {
    let mut peaks: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for t in trials {
        for e in &t.bandwidth.edges {
            let p = peaks.entry((e.from, e.to)).or_insert(0.0);
            *p = p.max(e.peak_bps);
        }
    }
    BandwidthSummary {
        edges: peaks
            .into_iter()
            .map(|((from, to), peak_bps)| EdgeBandwidth {
                from,
                to,
                total_bits: 0,
                average_bps: 0.0,
                peak_bps,
            })
            .collect(),
        ..BandwidthSummary::default()
    }
}

/// Calibration atoms and measured circuit graph for `cfg.algorithm`, with
/// edge rates taken from `trials`. `idc+wires` is the IDC descriptor
/// augmented with one state wire per agent its rendezvous rule reads.
pub fn descriptor(cfg: &ScenarioConfig, trials: &[&TrialResult]) -> Result<SystemDescriptor> {
    let n = cfg.robots;
    let graph = CircuitGraph::measured(n, &merged_peaks(trials))?;
    let p = &cfg.params;
    let (requirements, rule) = match cfg.algorithm {
        AlgorithmId::Pf | AlgorithmId::DmaRrt | AlgorithmId::P => (vec![], None),
        AlgorithmId::Pbc => (vec![Atom::MinObstacleClearance(p.pbc.ds)], None),
        AlgorithmId::Idc | AlgorithmId::IdcWires => (vec![Atom::MinObstacleClearance(p.idc.pbc.ds)], None),
        AlgorithmId::Gdc => {
            let gdc = cfg.gdc_params();
            (
                vec![
                    Atom::AllWithinCommRadius(cfg.comms.comm_radius),
                    Atom::RuleProgrammed(gdc.rule.rule_id().to_string()),
                    Atom::MinObstacleClearance(gdc.pbc.ds),
                ],
                Some(gdc.rule),
            )
        }
    };
    let base = SystemDescriptor {
        algorithm: cfg.algorithm.as_str().to_string(),
        task: cfg.task(),
        requirements,
        rule,
        graph,
    };
    if cfg.algorithm == AlgorithmId::IdcWires {
        let mut s = base.with_wires(&cfg.gdc_params().rule, cfg.comms.comm_radius)?;
        s.algorithm = AlgorithmId::IdcWires.as_str().to_string();
        Ok(s)
    } else {
        Ok(base)
    }
}

fn outcome(t: &TrialResult, cfg: &ScenarioConfig) -> ScenarioOutcome {
    ScenarioOutcome {
        map: t.map.clone(),
        robots: t.robots,
        seed: t.seed,
        cutoff_s: cfg.cutoff_s,
        task: cfg.task(),
        success: t.success,
    }
}

/// Runs (or fetches) `j` and `q` on every seed of the scenario and checks
/// the reduction. The `idc+wires` graph is built from plain IDC trials on
/// the same seeds, so its bandwidth is the swarm's plus the wires'.
pub fn run_reduction(
    j: AlgorithmId,
    q: AlgorithmId,
    scenario: &ReductionScenario,
    mut fetch: impl FnMut(&ScenarioConfig) -> Result<TrialResult>,
) -> Result<ReductionReport> {
    if scenario.seeds.is_empty() {
        return Err(Error::Config("a reduction needs at least one seed".into()));
    }
    let config = |algo: AlgorithmId, seed: u64| ScenarioConfig::new(scenario.map, algo, scenario.robots, seed);
    let mut side = |algo: AlgorithmId| -> Result<(SystemDescriptor, Vec<ScenarioOutcome>)> {
        let mut outcomes = Vec::new();
        let mut measured = Vec::new();
        for &seed in &scenario.seeds {
            let cfg = config(algo, seed)?;
            let t = fetch(&cfg)?;
            outcomes.push(outcome(&t, &cfg));
            let graph_source = if algo == AlgorithmId::IdcWires {
                fetch(&config(AlgorithmId::Idc, seed)?)?
            } else {
                t
            };
            measured.push(graph_source);
        }
        let refs: Vec<&TrialResult> = measured.iter().collect();
        Ok((descriptor(&config(algo, scenario.seeds[0])?, &refs)?, outcomes))
    };
    let (jd, jo) = side(j)?;
    let (qd, qo) = side(q)?;
    check_reduction(&jd, &qd, &jo, &qo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::STATE_OUTPUT_BPS;

    fn quiet_trial(algo: AlgorithmId) -> TrialResult {
        TrialResult {
            config_hash: String::new(),
            artifact_version: String::new(),
            seed: 1,
            algorithm: algo,
            map: "uniform".into(),
            robots: 4,
            success: true,
            convergence_time_s: Some(1.0),
            total_distance_m: 0.0,
            collisions_rr: 0,
            collisions_ro: 0,
            coverage_fraction: 1.0,
            bandwidth: BandwidthSummary::default(),
            duration_s: 1.0,
            stalled: false,
        }
    }

    #[test]
    fn wired_idc_carries_the_gdc_calibration() {
        let t = quiet_trial(AlgorithmId::Idc);
        let cfg = ScenarioConfig::new(MapId::Uniform, AlgorithmId::IdcWires, 4, 1).unwrap();
        let d = descriptor(&cfg, &[&t]).unwrap();
        assert_eq!(d.graph.external_edge_count(), 4 * 3);
        assert_eq!(d.requirements.len(), 3);
        let idc = descriptor(&ScenarioConfig::new(MapId::Uniform, AlgorithmId::Idc, 4, 1).unwrap(), &[&t]).unwrap();
        assert_eq!(idc.max_bandwidth(), STATE_OUTPUT_BPS);
        assert_eq!(idc.graph.external_edge_count(), 0);
    }

    #[test]
    fn peaks_merge_edgewise() {
        let mut a = quiet_trial(AlgorithmId::Gdc);
        let mut b = a.clone();
        let edge = |from, to, peak_bps| EdgeBandwidth { from, to, total_bits: 0, average_bps: 0.0, peak_bps };
        a.bandwidth.edges = vec![edge(0, 1, 160.0), edge(0, 2, 320.0)];
        b.bandwidth.edges = vec![edge(0, 1, 480.0)];
        let m = merged_peaks(&[&a, &b]);
        assert_eq!(m.edges.len(), 2);
        assert_eq!(m.edges[0].peak_bps, 480.0);
        assert_eq!(m.edges[1].peak_bps, 320.0);
    }
}
