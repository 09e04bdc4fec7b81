//! Group dynamic coverage: agents cover with the IDC gradient until the whole
//! group slows down, then a leader picks one rendezvous point for everyone.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::comms::{decode_items, CommLedger, Message, MessageKind, Reach};
use crate::coverage::grid::{CoverageGrid, CoverageParams};
use crate::coverage::idc::{idc_control, nearest_uncovered, SlowTimer};
use crate::coverage::path::{Transit, TransitPlanner};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::sim::WorldState;
use crate::swarm::{p_controller, pbc_filter, PbcParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// Reads coverage levels only.
    Family1,
    /// Also reads the state of at least one other agent.
    Family2,
}

/// Rule used to select a new position when agents are perturbed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum PerturbRule {
    /// Nearest uncovered cell to the evaluating agent.
    NearestUncovered,
    /// Nearest uncovered cell to the centroid of all uncovered cells.
    UncoveredCentroid,
    /// Nearest uncovered cell to the centroid of the agents in `read_set`
    /// (every agent when absent).
    AgentCentroid {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        read_set: Option<Vec<usize>>,
    },
}

impl PerturbRule {
    pub fn family(&self) -> Family {
        match self {
            PerturbRule::NearestUncovered | PerturbRule::UncoveredCentroid => Family::Family1,
            PerturbRule::AgentCentroid { .. } => Family::Family2,
        }
    }

    pub fn rule_id(&self) -> &'static str {
        match self {
            PerturbRule::NearestUncovered => "nearest-uncovered",
            PerturbRule::UncoveredCentroid => "uncovered-centroid",
            PerturbRule::AgentCentroid { .. } => "agent-centroid",
        }
    }

    /// The set `N` of agent states the rule reads, for a team of `n`.
    pub fn reads(&self, n: usize) -> Vec<usize> {
        match self {
            PerturbRule::AgentCentroid { read_set: Some(ids) } => {
                let mut ids: Vec<usize> = ids.iter().copied().filter(|&i| i < n).collect();
                ids.sort_unstable();
                ids.dedup();
                ids
            }
            PerturbRule::AgentCentroid { read_set: None } => (0..n).collect(),
            _ => Vec::new(),
        }
    }

    /// Evaluates the rule from `anchor` (the evaluating agent's position) and
    /// the agent states available to the evaluator.
    pub fn evaluate(&self, grid: &CoverageGrid, anchor: Vec2, states: &BTreeMap<usize, Vec2>, n: usize) -> Result<Vec2> {
        let focus = match self {
            PerturbRule::NearestUncovered => anchor,
            PerturbRule::UncoveredCentroid => {
                let mut sum = Vec2::zeros();
                let mut count = 0usize;
                for i in 0..grid.levels.len() {
                    if !grid.blocked[i] && !grid.is_covered(i) {
                        sum += grid.center(i);
                        count += 1;
                    }
                }
                if count == 0 {
                    return Err(Error::MissionComplete);
                }
                sum / count as f64
            }
            PerturbRule::AgentCentroid { .. } => {
                let ids = self.reads(n);
                if ids.is_empty() {
                    return Err(Error::Protocol("agent-centroid rule with an empty read set".into()));
                }
                let mut sum = Vec2::zeros();
                for id in &ids {
                    let p = states
                        .get(id)
                        .ok_or_else(|| Error::Protocol(format!("state of agent {id} not available")))?;
                    sum += p;
                }
                sum / ids.len() as f64
            }
        };
        nearest_uncovered(grid, focus)
            .map(|(_, c)| c)
            .ok_or(Error::MissionComplete)
    }
}

/// How the rendezvous point reaches every agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distribution {
    /// The leader gathers the states it needs and broadcasts the point.
    LeaderPoint,
    /// Every agent in `N` sends its state to every other agent and each agent
    /// evaluates the rule itself.
    StateWires,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GdcParams {
    pub rule: PerturbRule,
    pub distribution: Distribution,
    pub k_c: f64,
    pub v_slow: f64,
    /// Seconds every agent must stay slow before the group is perturbed.
    pub t_hold: f64,
    /// Arrival radius around the rendezvous point (m).
    pub rho: f64,
    pub transit_k_p: f64,
    pub capture_radius: f64,
    pub pbc: PbcParams,
}

impl Default for GdcParams {
    fn default() -> Self {
        Self {
            rule: PerturbRule::AgentCentroid { read_set: None },
            distribution: Distribution::LeaderPoint,
            k_c: 1.0,
            v_slow: 0.02,
            t_hold: 2.0,
            rho: 1.0,
            transit_k_p: 2.0,
            capture_radius: 0.2,
            pbc: PbcParams::default(),
        }
    }
}

impl GdcParams {
    pub fn validate(&self) -> Result<()> {
        if self.distribution == Distribution::StateWires && self.rule == PerturbRule::NearestUncovered {
            return Err(Error::Config(
                "nearest-uncovered depends on the evaluator, so agents computing locally would disagree".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GdcMode {
    Cover,
    Rendezvous { point: Vec2 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdcState {
    pub mode: GdcMode,
    pub leader_id: usize,
    pub slow_timer: SlowTimer,
}

impl GdcState {
    pub fn rendezvous_point(&self) -> Option<Vec2> {
        match self.mode {
            GdcMode::Cover => None,
            GdcMode::Rendezvous { point } => Some(point),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RendezvousEvent {
    pub trigger_tick: u64,
    pub end_tick: Option<u64>,
    /// Point each agent received or computed during this event.
    pub points: Vec<Vec<Vec2>>,
    pub point_messages: usize,
    pub state_messages: usize,
    /// Ended by the group stalling rather than by arrival.
    pub jammed: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum Phase {
    Covering,
    Collecting { since: u64, snapshot: Vec<Vec2> },
    Rendezvous,
}

#[derive(Debug, Clone)]
struct Agent {
    state: GdcState,
    transit: Option<Transit>,
    last_position: Vec2,
    inbox: BTreeMap<usize, Vec2>,
}

#[derive(Debug, Clone)]
pub struct GdcTeam {
    pub params: GdcParams,
    pub coverage: CoverageParams,
    pub events: Vec<RendezvousEvent>,
    agents: Vec<Agent>,
    phase: Phase,
    planner: TransitPlanner,
}

impl GdcTeam {
    pub fn new(world: &WorldState, params: GdcParams, coverage: CoverageParams) -> Result<Self> {
        params.validate()?;
        // keep transit paths outside the barrier's obstacle margin
        let clearance = world.robots.first().map_or(0.1, |r| r.collision_radius).max(params.pbc.ds) + 0.05;
        let planner = TransitPlanner::new(&world.map, coverage.resolution, clearance);
        let leader_id = world.robots.iter().map(|r| r.id).min().unwrap_or(0);
        let agents = world
            .robots
            .iter()
            .map(|r| Agent {
                state: GdcState {
                    mode: GdcMode::Cover,
                    leader_id,
                    slow_timer: SlowTimer::default(),
                },
                transit: None,
                last_position: r.position,
                inbox: BTreeMap::new(),
            })
            .collect();
        Ok(Self {
            params,
            coverage,
            events: Vec::new(),
            agents,
            phase: Phase::Covering,
            planner,
        })
    }

    pub fn state(&self, i: usize) -> &GdcState {
        &self.agents[i].state
    }

    fn leader(&self) -> usize {
        self.agents.first().map_or(0, |a| a.state.leader_id)
    }

    fn enter_rendezvous(&mut self, i: usize, point: Vec2, from: Vec2) {
        let agent = &mut self.agents[i];
        agent.state.mode = GdcMode::Rendezvous { point };
        agent.state.slow_timer.reset();
        agent.transit = self.planner.plan(from, point);
        if let Some(ev) = self.events.last_mut() {
            ev.points[i].push(point);
        }
    }

    fn reset(&mut self, tick: u64, jammed: bool) {
        for a in &mut self.agents {
            a.state.mode = GdcMode::Cover;
            a.state.slow_timer.reset();
            a.transit = None;
            a.inbox.clear();
        }
        if let Some(ev) = self.events.last_mut() {
            ev.end_tick = Some(tick);
            ev.jammed = jammed;
        }
        self.phase = Phase::Covering;
    }

    fn broadcast_point(&mut self, point: Vec2, tick: u64, bus: &mut CommLedger) -> Result<()> {
        let leader = self.leader();
        let others: Vec<usize> = (0..self.agents.len()).filter(|&j| j != leader).collect();
        let delta = bus.broadcast(Message::new(leader, others, MessageKind::Point, &[point], tick)?, Reach::All);
        if let Some(ev) = self.events.last_mut() {
            ev.point_messages += delta.delivered.len();
        }
        Ok(())
    }

    fn send_states(&mut self, senders: &[usize], to_leader_only: bool, positions: &[Vec2], tick: u64, bus: &mut CommLedger) -> Result<()> {
        let leader = self.leader();
        let n = self.agents.len();
        for &i in senders {
            let recipients: Vec<usize> = if to_leader_only {
                if i == leader {
                    continue;
                }
                vec![leader]
            } else {
                (0..n).filter(|&j| j != i).collect()
            };
            let delta = bus.broadcast(Message::new(i, recipients, MessageKind::State, &[positions[i]], tick)?, Reach::All);
            if let Some(ev) = self.events.last_mut() {
                ev.state_messages += delta.delivered.len();
            }
        }
        Ok(())
    }

    /// One control update at physics tick `tick`.
    pub fn step(&mut self, world: &WorldState, grid: &CoverageGrid, bus: &mut CommLedger, tick: u64, period: f64) -> Result<Vec<Vec2>> {
        let n = self.agents.len();
        let positions: Vec<Vec2> = world.robots.iter().map(|r| r.position).collect();
        for (a, &p) in self.agents.iter_mut().zip(&positions) {
            let speed = (p - a.last_position).norm() / period;
            a.last_position = p;
            a.state.slow_timer.update(speed, period, self.params.v_slow);
        }

        for d in bus.deliver(tick) {
            let (sender, items) = decode_items(&d.bytes)?;
            let item = *items
                .first()
                .ok_or_else(|| Error::Protocol("empty coverage message".into()))?;
            match d.kind {
                MessageKind::State => {
                    self.agents[d.recipient].inbox.insert(sender, item);
                }
                MessageKind::Point => {
                    self.enter_rendezvous(d.recipient, item, positions[d.recipient]);
                }
                MessageKind::Plan => return Err(Error::Protocol("plan message on a coverage bus".into())),
            }
        }

        let leader = self.leader();
        let rule = self.params.rule.clone();
        let reads = rule.reads(n);
        match std::mem::replace(&mut self.phase, Phase::Covering) {
            Phase::Covering => {
                let all_slow = self.agents.iter().all(|a| a.state.slow_timer.elapsed >= self.params.t_hold);
                if all_slow && !grid.is_complete() {
                    self.events.push(RendezvousEvent {
                        trigger_tick: tick,
                        end_tick: None,
                        points: vec![Vec::new(); n],
                        point_messages: 0,
                        state_messages: 0,
                        jammed: false,
                    });
                    match (rule.family(), self.params.distribution) {
                        (Family::Family1, Distribution::LeaderPoint) => {
                            let point = rule.evaluate(grid, positions[leader], &BTreeMap::new(), n)?;
                            self.broadcast_point(point, tick, bus)?;
                            self.enter_rendezvous(leader, point, positions[leader]);
                            self.phase = Phase::Rendezvous;
                        }
                        (Family::Family1, Distribution::StateWires) => {
                            for i in 0..n {
                                let point = rule.evaluate(grid, positions[i], &BTreeMap::new(), n)?;
                                self.enter_rendezvous(i, point, positions[i]);
                            }
                            self.phase = Phase::Rendezvous;
                        }
                        (Family::Family2, dist) => {
                            self.send_states(&reads, dist == Distribution::LeaderPoint, &positions, tick, bus)?;
                            self.phase = Phase::Collecting {
                                since: tick,
                                snapshot: positions.clone(),
                            };
                        }
                    }
                } else {
                    self.phase = Phase::Covering;
                }
            }
            Phase::Collecting { since, snapshot } => {
                let deadline_passed = tick >= since + bus.latency_ticks();
                let mut waiting = false;
                match self.params.distribution {
                    Distribution::LeaderPoint => {
                        let mut states = self.agents[leader].inbox.clone();
                        states.insert(leader, snapshot[leader]);
                        if reads.iter().all(|id| states.contains_key(id)) {
                            let point = rule.evaluate(grid, snapshot[leader], &states, n)?;
                            self.broadcast_point(point, tick, bus)?;
                            self.enter_rendezvous(leader, point, positions[leader]);
                        } else if deadline_passed {
                            rule.evaluate(grid, snapshot[leader], &states, n)?;
                        } else {
                            waiting = true;
                        }
                    }
                    Distribution::StateWires => {
                        for i in 0..n {
                            if self.agents[i].state.rendezvous_point().is_some() {
                                continue;
                            }
                            let mut states = self.agents[i].inbox.clone();
                            states.insert(i, snapshot[i]);
                            if reads.iter().all(|id| states.contains_key(id)) {
                                let point = rule.evaluate(grid, snapshot[i], &states, n)?;
                                self.enter_rendezvous(i, point, positions[i]);
                            } else if deadline_passed {
                                rule.evaluate(grid, snapshot[i], &states, n)?;
                            } else {
                                waiting = true;
                            }
                        }
                    }
                }
                self.phase = if waiting {
                    Phase::Collecting { since, snapshot }
                } else {
                    Phase::Rendezvous
                };
            }
            Phase::Rendezvous => {
                self.phase = Phase::Rendezvous;
                let points: Vec<Option<Vec2>> = self.agents.iter().map(|a| a.state.rendezvous_point()).collect();
                if points.iter().all(Option::is_some) {
                    let arrived = points
                        .iter()
                        .zip(&positions)
                        .all(|(pt, p)| (pt.unwrap() - p).norm() <= self.params.rho);
                    let jammed = self.agents.iter().all(|a| a.state.slow_timer.elapsed >= self.params.t_hold);
                    if arrived || jammed {
                        self.reset(tick, !arrived);
                    }
                }
            }
        }

        let mut out = Vec::with_capacity(n);
        for (i, robot) in world.robots.iter().enumerate() {
            let agent = &mut self.agents[i];
            let u_des = match agent.state.mode {
                GdcMode::Cover => idc_control(grid, robot.position, &self.coverage, self.params.k_c, world.v_max),
                GdcMode::Rendezvous { point } => agent
                    .transit
                    .as_mut()
                    .and_then(|t| t.command(robot.position, self.params.transit_k_p, world.v_max, self.params.capture_radius))
                    .unwrap_or_else(|| p_controller(robot.position, point, self.params.transit_k_p, world.v_max)),
            };
            let neighbors = world.sense_neighbors(i);
            let obstacles = world.sense_obstacles(i);
            out.push(pbc_filter(u_des, robot, &neighbors, &obstacles, &self.params.pbc, world.v_max).u);
        }
        Ok(out)
    }
}
