//! Information-invariants analysis: circuit graphs and their maximum
//! bandwidth, calibration requirements, outcome-based simulation checks and
//! reduction verdicts.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::comms::{BandwidthSummary, POINT_MESSAGE_BITS};
use crate::coverage::{CoverageGrid, CoverageParams, PerturbRule};
use crate::error::{Error, Result};
use crate::geom::{vec2, Vec2};

/// Version of the calibration atom vocabulary. Adding an atom kind is a breaking change.
pub const VOCABULARY_VERSION: u32 = 1;

/// One state report per second: two 64-bit floats.
pub const STATE_OUTPUT_BPS: f64 = 128.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    Internal,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
    pub bandwidth_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitGraph {
    /// One vertex per robot.
    pub vertices: Vec<usize>,
    pub edges: Vec<Edge>,
    pub output_size_bps: f64,
}

impl CircuitGraph {
    pub fn new(vertices: Vec<usize>, output_size_bps: f64) -> Result<Self> {
        let unique: BTreeSet<_> = vertices.iter().collect();
        if unique.len() != vertices.len() {
            return Err(Error::Input("duplicate circuit vertex id".into()));
        }
        if !(output_size_bps >= 0.0) {
            return Err(Error::Input("negative output size".into()));
        }
        Ok(Self { vertices, edges: Vec::new(), output_size_bps })
    }

    /// `n` robots with the state-report output size and no edges.
    pub fn robots(n: usize) -> Self {
        Self {
            vertices: (0..n).collect(),
            edges: Vec::new(),
            output_size_bps: STATE_OUTPUT_BPS,
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, kind: EdgeKind, bandwidth_bps: f64) -> Result<()> {
        if !(bandwidth_bps >= 0.0) {
            return Err(Error::Input(format!("edge {from}->{to} has negative bandwidth")));
        }
        if !self.vertices.contains(&from) || !self.vertices.contains(&to) {
            return Err(Error::Input(format!("edge {from}->{to} references an unknown vertex")));
        }
        self.edges.push(Edge { from, to, kind, bandwidth_bps });
        Ok(())
    }

    /// Graph whose external edges carry the peak per-edge rates measured by a ledger.
    pub fn measured(n: usize, summary: &BandwidthSummary) -> Result<Self> {
        let mut g = Self::robots(n);
        for e in &summary.edges {
            g.add_edge(e.from, e.to, EdgeKind::External, e.peak_bps)?;
        }
        Ok(g)
    }

    pub fn external_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.kind == EdgeKind::External).count()
    }
}

/// Largest of the internal edge bandwidth, external edge bandwidth and output size.
pub fn max_bandwidth(g: &CircuitGraph) -> f64 {
    let edge_max = |kind| {
        g.edges
            .iter()
            .filter(|e| e.kind == kind)
            .map(|e| e.bandwidth_bps)
            .fold(0.0, f64::max)
    };
    edge_max(EdgeKind::Internal)
        .max(edge_max(EdgeKind::External))
        .max(g.output_size_bps)
}

/// Adds one state wire from every agent in `read_set` to each of the other
/// `n - 1` agents, each carrying one state report per second.
pub fn augment_with_wires(g: &CircuitGraph, read_set: &[usize]) -> Result<CircuitGraph> {
    let mut out = g.clone();
    let rate = POINT_MESSAGE_BITS as f64;
    for &i in read_set {
        for &j in &g.vertices {
            if j != i {
                out.add_edge(i, j, EdgeKind::External, rate)?;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AtomKind {
    AllWithinCommRadius,
    MinObstacleClearance,
    RuleProgrammed,
}

/// A calibration requirement from the closed vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "atom", content = "param", rename_all = "kebab-case")]
pub enum Atom {
    /// Every robot within this communication radius of every other (m). Smaller is stricter.
    AllWithinCommRadius(f64),
    /// Minimum clearance the robots are tuned to keep (m). Larger is stricter.
    MinObstacleClearance(f64),
    /// A specific perturbation rule is installed on every robot.
    RuleProgrammed(String),
}

impl Atom {
    pub fn kind(&self) -> AtomKind {
        match self {
            Atom::AllWithinCommRadius(_) => AtomKind::AllWithinCommRadius,
            Atom::MinObstacleClearance(_) => AtomKind::MinObstacleClearance,
            Atom::RuleProgrammed(_) => AtomKind::RuleProgrammed,
        }
    }

    /// True when `self` demands at least as much as `other` (same kind required).
    pub fn at_least_as_strict(&self, other: &Atom) -> bool {
        match (self, other) {
            (Atom::AllWithinCommRadius(a), Atom::AllWithinCommRadius(b)) => a <= b,
            (Atom::MinObstacleClearance(a), Atom::MinObstacleClearance(b)) => a >= b,
            (Atom::RuleProgrammed(a), Atom::RuleProgrammed(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::AllWithinCommRadius(r) => write!(f, "all-within-comm-radius({r})"),
            Atom::MinObstacleClearance(d) => write!(f, "min-obstacle-clearance({d})"),
            Atom::RuleProgrammed(id) => write!(f, "rule-programmed({id})"),
        }
    }
}

impl FromStr for Atom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = s
            .strip_suffix(')')
            .and_then(|body| body.split_once('('))
            .ok_or_else(|| Error::Vocabulary(s.to_string()))?;
        let number = || arg.trim().parse::<f64>().map_err(|_| Error::Vocabulary(s.to_string()));
        match name.trim() {
            "all-within-comm-radius" => Ok(Atom::AllWithinCommRadius(number()?)),
            "min-obstacle-clearance" => Ok(Atom::MinObstacleClearance(number()?)),
            "rule-programmed" if !arg.trim().is_empty() => Ok(Atom::RuleProgrammed(arg.trim().to_string())),
            _ => Err(Error::Vocabulary(s.to_string())),
        }
    }
}

pub fn parse_requirements<S: AsRef<str>>(atoms: &[S]) -> Result<Vec<Atom>> {
    atoms.iter().map(|a| a.as_ref().parse()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskClass {
    Navigation,
    Coverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDescriptor {
    pub algorithm: String,
    pub task: TaskClass,
    pub requirements: Vec<Atom>,
    pub rule: Option<PerturbRule>,
    pub graph: CircuitGraph,
}

impl SystemDescriptor {
    /// This system plus state wires for every agent its rule reads, and the
    /// calibration those wires need.
    pub fn with_wires(&self, rule: &PerturbRule, comm_radius: f64) -> Result<Self> {
        let n = self.graph.vertices.len();
        let read_set = rule.reads(n);
        let mut requirements = self.requirements.clone();
        if !read_set.is_empty() {
            requirements.push(Atom::AllWithinCommRadius(comm_radius));
        }
        requirements.push(Atom::RuleProgrammed(rule.rule_id().to_string()));
        Ok(Self {
            algorithm: format!("{}+wires", self.algorithm),
            task: self.task,
            requirements,
            rule: Some(rule.clone()),
            graph: augment_with_wires(&self.graph, &read_set)?,
        })
    }

    pub fn max_bandwidth(&self) -> f64 {
        max_bandwidth(&self.graph)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dominance {
    pub holds: bool,
    /// Requirements of the dominated side that the dominating side does not cover.
    pub witness: Vec<String>,
}

/// `a` dominates `b` when every requirement of `b` is matched by an
/// at-least-as-strict requirement of `a`.
pub fn dominates_calibration(a: &[Atom], b: &[Atom]) -> Dominance {
    let witness: Vec<String> = b
        .iter()
        .filter(|rb| !a.iter().any(|ra| ra.at_least_as_strict(rb)))
        .map(|rb| rb.to_string())
        .collect();
    Dominance { holds: witness.is_empty(), witness }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub map: String,
    pub robots: usize,
    pub seed: u64,
    pub cutoff_s: f64,
    pub task: TaskClass,
    /// Navigation: every robot ended inside the goal disk. Coverage: every free cell covered.
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioComparison {
    pub map: String,
    pub robots: usize,
    pub seed: u64,
    pub a_success: bool,
    pub b_success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationEvidence {
    pub holds: bool,
    pub scenarios: Vec<ScenarioComparison>,
}

/// Outcome agreement on every shared scenario: a finite-horizon surrogate
/// for comparing limit sets.
pub fn simulates(a: &[ScenarioOutcome], b: &[ScenarioOutcome]) -> Result<SimulationEvidence> {
    if a.len() != b.len() {
        return Err(Error::Input(format!("{} scenarios against {}", a.len(), b.len())));
    }
    let mut scenarios = Vec::with_capacity(a.len());
    for (x, y) in a.iter().zip(b) {
        if x.task != y.task {
            return Err(Error::Input("cannot compare navigation with coverage outcomes".into()));
        }
        if x.map != y.map || x.robots != y.robots || x.seed != y.seed || x.cutoff_s != y.cutoff_s {
            return Err(Error::Input(format!(
                "scenario mismatch: {}/{}/{} against {}/{}/{}",
                x.map, x.robots, x.seed, y.map, y.robots, y.seed
            )));
        }
        scenarios.push(ScenarioComparison {
            map: x.map.clone(),
            robots: x.robots,
            seed: x.seed,
            a_success: x.success,
            b_success: y.success,
        });
    }
    Ok(SimulationEvidence {
        holds: scenarios.iter().all(|s| s.a_success == s.b_success),
        scenarios,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthCondition {
    pub holds: bool,
    pub mb_j_bps: f64,
    pub mb_q_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub vocabulary_version: u32,
    pub j: String,
    pub q: String,
    pub condition1_simulates: SimulationEvidence,
    pub condition2_calibration: Dominance,
    pub condition3_bandwidth: BandwidthCondition,
    pub verdict: bool,
}

impl ReductionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Checks whether `j` reduces to `q`: `q` reproduces `j`'s outcomes, `j`
/// dominates `q` in calibration, and `mb(q) <= mb(j)`.
pub fn check_reduction(
    j: &SystemDescriptor,
    q: &SystemDescriptor,
    j_runs: &[ScenarioOutcome],
    q_runs: &[ScenarioOutcome],
) -> Result<ReductionReport> {
    if j.task != q.task {
        return Err(Error::Input("systems solve different task classes".into()));
    }
    let c1 = simulates(j_runs, q_runs)?;
    let c2 = dominates_calibration(&j.requirements, &q.requirements);
    let (mb_j, mb_q) = (j.max_bandwidth(), q.max_bandwidth());
    let c3 = BandwidthCondition { holds: mb_q <= mb_j, mb_j_bps: mb_j, mb_q_bps: mb_q };
    let verdict = c1.holds && c2.holds && c3.holds;
    Ok(ReductionReport {
        vocabulary_version: VOCABULARY_VERSION,
        j: j.algorithm.clone(),
        q: q.algorithm.clone(),
        condition1_simulates: c1,
        condition2_calibration: c2,
        condition3_bandwidth: c3,
        verdict,
    })
}

/// Saturates every cell within `region_radius` of the center of a square
/// grid, lets a robot accrue for one step at `p1` and, separately, at `p2`,
/// and reports whether the two fields are bit-identical.
pub fn information_loss_demo(grid_size: f64, region_radius: f64, footprint_radius: f64, p1: Vec2, p2: Vec2) -> Result<bool> {
    if region_radius <= footprint_radius {
        return Err(Error::Construction(format!(
            "saturated region ({region_radius} m) must exceed the footprint radius ({footprint_radius} m)"
        )));
    }
    if p1 == p2 {
        return Err(Error::Construction("the two robot positions must differ".into()));
    }
    let params = CoverageParams { r_cov: footprint_radius, ..CoverageParams::default() };
    let mut base = CoverageGrid::new(grid_size, grid_size, &params);
    let center = vec2(grid_size / 2.0, grid_size / 2.0);
    let idx: Vec<usize> = base.cells_within(center, region_radius).collect();
    for i in idx {
        base.set_level(i, params.c_star);
    }
    let mut a = base.clone();
    let mut b = base;
    a.accrue(&[p1], 0.1, &params);
    b.accrue(&[p2], 0.1, &params);
    Ok(a.levels.iter().zip(&b.levels).all(|(x, y)| x.to_bits() == y.to_bits()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn max_bandwidth_examples() {
        let mut g = CircuitGraph::new(vec![0, 1, 2], 4.0).unwrap();
        assert_eq!(max_bandwidth(&g), 4.0);
        g.add_edge(0, 1, EdgeKind::Internal, 3.0).unwrap();
        g.add_edge(1, 2, EdgeKind::External, 5.0).unwrap();
        assert_eq!(max_bandwidth(&g), 5.0);
        assert!(g.add_edge(0, 1, EdgeKind::External, -1.0).is_err());
        assert!(CircuitGraph::new(vec![0, 0], 1.0).is_err());
    }

    #[test]
    fn wires_follow_the_read_set() {
        let g = CircuitGraph::robots(8);
        let rule = PerturbRule::AgentCentroid { read_set: None };
        assert_eq!(augment_with_wires(&g, &rule.reads(8)).unwrap().edges.len(), 8 * 7);
        assert_eq!(augment_with_wires(&g, &PerturbRule::UncoveredCentroid.reads(8)).unwrap(), g);
    }

    #[test]
    fn atom_parsing() {
        assert_eq!("all-within-comm-radius(30)".parse::<Atom>().unwrap(), Atom::AllWithinCommRadius(30.0));
        assert_eq!(
            "rule-programmed(agent-centroid)".parse::<Atom>().unwrap(),
            Atom::RuleProgrammed("agent-centroid".into())
        );
        assert!(matches!("telepathy(1)".parse::<Atom>(), Err(Error::Vocabulary(_))));
        assert!(matches!("min-obstacle-clearance(x)".parse::<Atom>(), Err(Error::Vocabulary(_))));
        let a = Atom::MinObstacleClearance(0.4);
        assert_eq!(a.to_string().parse::<Atom>().unwrap(), a);
    }

    #[test]
    fn dominance_examples() {
        let gdc = parse_requirements(&["all-within-comm-radius(30)", "rule-programmed(agent-centroid)"]).unwrap();
        assert!(dominates_calibration(&gdc, &[]).holds);
        assert!(dominates_calibration(&gdc, &gdc).holds);
        let pbc = vec![Atom::MinObstacleClearance(0.4)];
        assert!(dominates_calibration(&pbc, &[]).holds);
        let d = dominates_calibration(&[], &pbc);
        assert!(!d.holds);
        assert_eq!(d.witness, vec!["min-obstacle-clearance(0.4)".to_string()]);
        assert!(!dominates_calibration(&[Atom::AllWithinCommRadius(40.0)], &[Atom::AllWithinCommRadius(30.0)]).holds);
    }

    #[test]
    fn information_loss_examples() {
        let c = vec2(10.0, 10.0);
        assert_eq!(information_loss_demo(20.0, 3.0, 2.0, c, c + vec2(0.5, 0.0)), Ok(true));
        assert!(matches!(
            information_loss_demo(20.0, 1.0, 2.0, c, c + vec2(0.5, 0.0)),
            Err(Error::Construction(_))
        ));
        assert_eq!(information_loss_demo(20.0, 3.0, 2.0, c + vec2(2.5, 0.0), c + vec2(3.0, 0.0)), Ok(false));
    }

    #[test]
    fn mixed_tasks_are_rejected() {
        let o = |task| ScenarioOutcome {
            map: "uniform".into(),
            robots: 4,
            seed: 1,
            cutoff_s: 600.0,
            task,
            success: true,
        };
        assert!(simulates(&[o(TaskClass::Coverage)], &[o(TaskClass::Navigation)]).is_err());
        assert!(simulates(&[o(TaskClass::Coverage)], &[o(TaskClass::Coverage)]).unwrap().holds);
    }

    fn atom_strategy() -> impl Strategy<Value = Atom> {
        prop_oneof![
            (1u32..5).prop_map(|r| Atom::AllWithinCommRadius(r as f64 * 10.0)),
            (1u32..5).prop_map(|d| Atom::MinObstacleClearance(d as f64 * 0.1)),
            prop::sample::select(vec!["a", "b", "c"]).prop_map(|s| Atom::RuleProgrammed(s.to_string())),
        ]
    }

    proptest! {
        #[test]
        fn dominance_is_a_preorder(
            a in prop::collection::vec(atom_strategy(), 0..5),
            b in prop::collection::vec(atom_strategy(), 0..5),
            c in prop::collection::vec(atom_strategy(), 0..5),
        ) {
            prop_assert!(dominates_calibration(&a, &a).holds);
            if dominates_calibration(&a, &b).holds && dominates_calibration(&b, &c).holds {
                prop_assert!(dominates_calibration(&a, &c).holds);
            }
        }

        #[test]
        fn adding_an_edge_never_lowers_mb(
            edges in prop::collection::vec((0usize..4, 0usize..4, 0.0f64..1000.0, any::<bool>()), 0..10),
            extra in (0usize..4, 0usize..4, 0.0f64..1000.0, any::<bool>()),
        ) {
            let kind = |internal: bool| if internal { EdgeKind::Internal } else { EdgeKind::External };
            let mut g = CircuitGraph::robots(4);
            for (u, v, bw, internal) in edges {
                g.add_edge(u, v, kind(internal), bw).unwrap();
            }
            let before = max_bandwidth(&g);
            g.add_edge(extra.0, extra.1, kind(extra.3), extra.2).unwrap();
            prop_assert!(max_bandwidth(&g) >= before);
        }

        #[test]
        fn wire_count_is_read_set_times_k(n in 1usize..12, mask in any::<u16>()) {
            let read_set: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let g = CircuitGraph::robots(n);
            let aug = augment_with_wires(&g, &read_set).unwrap();
            prop_assert_eq!(aug.edges.len() - g.edges.len(), read_set.len() * (n - 1));
        }
    }
}
