//! Merit-based token passing: each round the agent whose fresh candidate
//! improves most on its current plan commits it and broadcasts it.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::comms::{decode_items, CommLedger, Message, MessageKind, Reach};
use crate::dmarrt::plan::Plan;
use crate::dmarrt::rrt::{grow_rrt, DmaRrtParams, PlanningContext};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::sim::{GoalDisk, WorldState};
use crate::swarm::p_controller;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenState {
    pub holder: usize,
    pub round: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitEvent {
    pub round: u64,
    pub agent: usize,
    pub tick: u64,
    pub waypoints: usize,
    pub bits_per_edge: u64,
}

#[derive(Debug, Clone)]
pub struct DmaAgent {
    pub id: usize,
    pub plan: Plan,
    pub candidate: Option<Plan>,
    /// Plans received from the other agents, by sender.
    pub known: BTreeMap<usize, Plan>,
    pub next_waypoint: usize,
    rng: ChaCha8Rng,
}

impl DmaAgent {
    pub fn new(id: usize, position: Vec2, time: f64, seed: u64) -> Self {
        Self {
            id,
            plan: Plan::placeholder(position, time),
            candidate: None,
            known: BTreeMap::new(),
            next_waypoint: 0,
            rng: ChaCha8Rng::seed_from_u64(seed ^ (id as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        }
    }

    pub fn at_goal(&self, position: Vec2, now: f64, goal: &GoalDisk) -> bool {
        self.plan.is_complete() && now >= self.plan.end_time() && goal.contains(position)
    }
}

/// `max(0, current - candidate)`, and 0 for agents already at the goal.
pub fn compute_merit(current_cost: f64, candidate_cost: f64, at_goal: bool) -> f64 {
    if at_goal {
        return 0.0;
    }
    let m = current_cost - candidate_cost;
    if m.is_nan() {
        0.0
    } else {
        m.max(0.0)
    }
}

/// Index of the largest merit; ties go to the lowest index.
pub fn select_winner(merits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &m) in merits.iter().enumerate() {
        if m > merits[best] {
            best = i;
        }
    }
    best
}

/// Runs one round over the posted bids. The winner commits its candidate
/// when its merit exceeds `min_merit` and broadcasts it to every other agent.
pub fn token_round(
    agents: &mut [DmaAgent],
    merits: &[f64],
    round: u64,
    min_merit: f64,
    bus: &mut CommLedger,
    tick: u64,
) -> Result<(TokenState, Option<CommitEvent>)> {
    let winner = select_winner(merits);
    let token = TokenState { holder: agents[winner].id, round };
    if !(merits[winner] > min_merit) {
        return Ok((token, None));
    }
    let Some(candidate) = agents[winner].candidate.take() else {
        return Ok((token, None));
    };
    let others: Vec<usize> = agents.iter().map(|a| a.id).filter(|&id| id != token.holder).collect();
    let msg = Message::new(token.holder, others, MessageKind::Plan, &candidate.positions(), tick)?;
    let bits = msg.payload_bits();
    bus.broadcast(msg, Reach::All);
    let event = CommitEvent {
        round,
        agent: token.holder,
        tick,
        waypoints: candidate.waypoints.len(),
        bits_per_edge: bits,
    };
    let agent = &mut agents[winner];
    agent.plan = candidate;
    agent.next_waypoint = 0;
    Ok((token, Some(event)))
}

/// Proportional tracking of the current waypoint; zero once the plan is exhausted.
pub fn dmarrt_execute(plan: &Plan, next_waypoint: &mut usize, position: Vec2, params: &DmaRrtParams, v_max: f64) -> Vec2 {
    let w = &plan.waypoints;
    while *next_waypoint < w.len() && (w[*next_waypoint].position - position).norm() <= params.capture_radius {
        if *next_waypoint + 1 == w.len() {
            break;
        }
        *next_waypoint += 1;
    }
    match w.get(*next_waypoint) {
        None => Vec2::zeros(),
        Some(wp) => p_controller(position, wp.position, params.k_p, v_max),
    }
}

#[derive(Debug, Clone)]
pub struct DmaRrtTeam {
    pub params: DmaRrtParams,
    pub agents: Vec<DmaAgent>,
    pub token: Option<TokenState>,
    pub commits: Vec<CommitEvent>,
    pub rounds: u64,
    goal: GoalDisk,
    started: bool,
}

impl DmaRrtTeam {
    pub fn new(world: &WorldState, params: DmaRrtParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let agents = world
            .robots
            .iter()
            .map(|r| DmaAgent::new(r.id, r.position, world.time, seed))
            .collect();
        Ok(Self {
            params,
            agents,
            token: None,
            commits: Vec::new(),
            rounds: 0,
            goal: world.map.goal,
            started: false,
        })
    }

    fn receive(&mut self, bus: &mut CommLedger, tick: u64, v_max: f64) -> Result<()> {
        for d in bus.deliver(tick) {
            if d.kind != MessageKind::Plan {
                return Err(Error::Protocol(format!("unexpected {} message on the planning bus", d.kind)));
            }
            let (sender, positions) = decode_items(&d.bytes)?;
            let t0 = d.send_tick as f64 * bus.tick_dt();
            let plan = Plan::from_positions(&positions, t0, v_max, 0.0);
            self.agents[d.recipient].known.insert(sender, plan);
        }
        Ok(())
    }

    /// One control update: deliver plans, run a token round, track waypoints.
    pub fn step(&mut self, world: &WorldState, bus: &mut CommLedger, tick: u64) -> Result<Vec<Vec2>> {
        let now = world.time;
        let v_max = world.v_max;
        if !self.started {
            // Everyone announces where it stands so the first planners see it.
            let ids: Vec<usize> = self.agents.iter().map(|a| a.id).collect();
            for a in &mut self.agents {
                a.plan = Plan::placeholder(world.robots[a.id].position, now);
                let others = ids.iter().copied().filter(|&j| j != a.id).collect();
                bus.broadcast(Message::new(a.id, others, MessageKind::Plan, &a.plan.positions(), tick)?, Reach::All);
            }
            self.started = true;
            return Ok(vec![Vec2::zeros(); self.agents.len()]);
        }
        self.receive(bus, tick, v_max)?;

        let round = self.rounds;
        let mut merits = vec![0.0; self.agents.len()];
        for i in 0..self.agents.len() {
            let pos = world.robots[i].position;
            let agent = &self.agents[i];
            let at_goal = agent.at_goal(pos, now, &self.goal);
            let due = agent.plan.tail_cost.is_infinite() || (round + agent.id as u64) % self.params.regrow_every == 0;
            if at_goal || !due {
                self.agents[i].candidate = None;
                continue;
            }
            let known: Vec<&Plan> = agent.known.values().collect();
            let ctx = PlanningContext {
                map: &world.map,
                others: &known,
                collision_radius: world.robots[i].collision_radius,
                v_max,
                params: &self.params,
            };
            let mut rng = agent.rng.clone();
            let candidate = grow_rrt(pos, now, &self.goal, &ctx, &mut rng)?;
            // Tracking lag counts against the current plan.
            let lag = (pos - agent.plan.position_at(now)).norm() / v_max;
            merits[i] = compute_merit(agent.plan.remaining_cost(now) + lag, candidate.cost(), at_goal);
            let agent = &mut self.agents[i];
            agent.rng = rng;
            agent.candidate = Some(candidate);
        }
        let (token, event) = token_round(&mut self.agents, &merits, round, self.params.min_merit, bus, tick)?;
        self.token = Some(token);
        if let Some(e) = event {
            self.commits.push(e);
        }
        self.rounds += 1;

        Ok(self
            .agents
            .iter_mut()
            .zip(&world.robots)
            .map(|(a, r)| dmarrt_execute(&a.plan, &mut a.next_waypoint, r.position, &self.params, v_max))
            .collect())
    }
}
