//! Discrete-time closed-loop simulation of the relay and its agents.
//!
//! Integration is explicit Euler with a simultaneous update: all velocities
//! are evaluated on the pre-step state, then every body moves at once. Agent
//! behaviors are deterministic functions of time and the current state, so a
//! run is reproducible bit for bit.

pub mod scenarios;

use thiserror::Error;

use crate::avoidance::{self, AvoidanceError, AvoidanceTerm, SafetyConfig};
use crate::controller::{control_general, BearingSet, Branch, ControlDecision, GainSpec};
use crate::geometry::{
    angular_margin, bearing, finite_above, in_fov, projector, FovConfig, UnitVec2, Vec2,
    TOL_COINCIDENT,
};

/// Margins below `-MARGIN_SLACK_RAD` count as field-of-view violations; the
/// slack absorbs one Euler step of bearing motion at the default step size.
pub const MARGIN_SLACK_RAD: f64 = 1e-3;

/// Largest admissible integration step.
pub const MAX_DT: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("collision at t = {t:.3} s: agent {agent} at distance {distance:.3e} m")]
    Collision { agent: usize, distance: f64, t: f64 },
    #[error(transparent)]
    Avoidance(AvoidanceError),
}

/// Relay and agent positions at one time instant.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    pub t: f64,
    pub p_r: Vec2,
    pub agents: Vec<Vec2>,
}

/// Directed formation edge: this agent measures `index` and wants to see it
/// along `desired_bearing`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormationNeighbor {
    pub index: usize,
    pub desired_bearing: UnitVec2,
}

/// Scripted or reactive agent behavior.
#[derive(Clone, Debug, PartialEq)]
pub enum AgentModel {
    Static,
    /// Fixed world-frame velocity.
    ConstantVelocity {
        velocity: Vec2,
    },
    /// Constant-speed traversal of a closed polyline, scheduled by time.
    WaypointLoop {
        points: Vec<Vec2>,
        speed: f64,
    },
    /// Rotation about a fixed center at a signed angular rate.
    CirclePath {
        center: Vec2,
        radius: f64,
        angular_rate: f64,
    },
    /// Harmonic sweep along the world x axis around a drifting anchor.
    BisectorOscillator {
        anchor: Vec2,
        amplitude: f64,
        omega: f64,
        drift: Vec2,
    },
    /// Gradient descent on bearing mismatch toward formation neighbors.
    FormationAgent {
        neighbors: Vec<FormationNeighbor>,
    },
}

/// Desired-bearing formation over the agent group, one entry per directed
/// edge. Expands into [`AgentModel::FormationAgent`] behaviors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FormationSpec {
    pub edges: Vec<(usize, usize, UnitVec2)>,
}

impl FormationSpec {
    /// Build one formation agent per index in `0..n`.
    pub fn agent_models(&self, n: usize) -> Vec<AgentModel> {
        (0..n)
            .map(|i| AgentModel::FormationAgent {
                neighbors: self
                    .edges
                    .iter()
                    .filter(|(from, _, _)| *from == i)
                    .map(|(_, to, g)| FormationNeighbor {
                        index: *to,
                        desired_bearing: *g,
                    })
                    .collect(),
            })
            .collect()
    }
}

/// Complete experiment description.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub fov: FovConfig,
    pub gains: GainSpec,
    pub safety: SafetyConfig,
    pub avoidance_enabled: bool,
    pub agent_models: Vec<AgentModel>,
    pub initial: WorldState,
    pub dt: f64,
    pub t_final: f64,
}

impl Scenario {
    /// Check every structural invariant and the initial-state assumptions:
    /// agents start inside the cone and outside the safety floor.
    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |msg: String| Err(SimError::InvalidScenario(msg));
        if !finite_above(self.dt, 0.0) || self.dt > MAX_DT {
            return fail(format!("dt = {} outside (0, {MAX_DT}]", self.dt));
        }
        if !finite_above(self.t_final, 0.0) {
            return fail(format!("t_final = {} must be positive", self.t_final));
        }
        if !finite_above(self.gains.v_max, 0.0) {
            return fail(format!("v_max = {} must be positive", self.gains.v_max));
        }
        if !finite_above(self.gains.k_r, 0.0) {
            return fail(format!("k_r = {} must be positive", self.gains.k_r));
        }
        if self.gains.gamma != self.fov.gamma() {
            return fail(format!(
                "gain settings half-angle {} differs from cone half-angle {}",
                self.gains.gamma,
                self.fov.gamma()
            ));
        }
        let n = self.agent_models.len();
        if n == 0 {
            return fail("at least one agent is required".into());
        }
        if self.gains.n != n {
            return fail(format!(
                "gain settings are for {} agents but {} are configured",
                self.gains.n, n
            ));
        }
        if self.initial.agents.len() != n {
            return fail(format!(
                "{} initial positions for {} agents",
                self.initial.agents.len(),
                n
            ));
        }
        if self.initial.t != 0.0 {
            return fail(format!("initial time {} must be zero", self.initial.t));
        }
        if !(self.safety.epsilon > 0.0 && self.safety.epsilon < self.safety.epsilon_s) {
            return fail(format!(
                "safety radii must satisfy 0 < epsilon < epsilon_s (got {} and {})",
                self.safety.epsilon, self.safety.epsilon_s
            ));
        }
        if !(self.safety.delta > 0.0 && self.safety.delta <= 1.0) {
            return fail(format!(
                "ramp fraction {} outside (0, 1]",
                self.safety.delta
            ));
        }
        if !self.initial.p_r.is_finite() {
            return fail("relay position is not finite".into());
        }
        for (i, p) in self.initial.agents.iter().enumerate() {
            if !p.is_finite() {
                return fail(format!("agent {i} position is not finite"));
            }
            let d = self.initial.p_r.distance(*p);
            if d < self.safety.epsilon {
                return fail(format!(
                    "agent {i} starts {d:.3} m from the relay, inside the safety floor {}",
                    self.safety.epsilon
                ));
            }
            match bearing(self.initial.p_r, *p) {
                Ok(g) if in_fov(g, &self.fov) => {}
                _ => return fail(format!("agent {i} starts outside the field of view")),
            }
        }
        for (i, m) in self.agent_models.iter().enumerate() {
            match m {
                AgentModel::WaypointLoop { points, speed } => {
                    if points.len() < 2 {
                        return fail(format!("agent {i}: waypoint loop needs >= 2 points"));
                    }
                    if !finite_above(loop_length(points), TOL_COINCIDENT) {
                        return fail(format!("agent {i}: waypoint loop has zero length"));
                    }
                    if !finite_above(*speed, 0.0) {
                        return fail(format!("agent {i}: waypoint speed must be positive"));
                    }
                }
                AgentModel::FormationAgent { neighbors } => {
                    for nb in neighbors {
                        if nb.index >= n || nb.index == i {
                            return fail(format!(
                                "agent {i}: formation neighbor {} out of range",
                                nb.index
                            ));
                        }
                    }
                }
                AgentModel::ConstantVelocity { velocity } => {
                    if !velocity.is_finite() {
                        return fail(format!("agent {i}: velocity is not finite"));
                    }
                }
                AgentModel::BisectorOscillator {
                    amplitude, omega, ..
                } => {
                    if !(*amplitude >= 0.0 && omega.is_finite()) {
                        return fail(format!("agent {i}: bad oscillator parameters"));
                    }
                }
                AgentModel::CirclePath { angular_rate, .. } => {
                    if !angular_rate.is_finite() {
                        return fail(format!("agent {i}: bad angular rate"));
                    }
                }
                AgentModel::Static => {}
            }
        }
        Ok(())
    }
}

fn loop_length(points: &[Vec2]) -> f64 {
    let mut total = 0.0;
    for i in 0..points.len() {
        total += points[i].distance(points[(i + 1) % points.len()]);
    }
    total
}

/// Velocity of agent `index` under `model` in the given state, capped at
/// `v_max` with direction preserved.
pub fn agent_velocity(model: &AgentModel, state: &WorldState, index: usize, v_max: f64) -> Vec2 {
    let raw = match model {
        AgentModel::Static => Vec2::ZERO,
        AgentModel::ConstantVelocity { velocity } => *velocity,
        AgentModel::WaypointLoop { points, speed } => waypoint_velocity(points, *speed, state.t),
        AgentModel::CirclePath {
            center,
            angular_rate,
            ..
        } => (state.agents[index] - *center).perp() * *angular_rate,
        AgentModel::BisectorOscillator {
            amplitude,
            omega,
            drift,
            ..
        } => *drift + Vec2::new(amplitude * omega * (omega * state.t).cos(), 0.0),
        AgentModel::FormationAgent { neighbors } => {
            let mut v = Vec2::ZERO;
            for nb in neighbors {
                if nb.index == index || nb.index >= state.agents.len() {
                    continue;
                }
                if let Ok(g) = bearing(state.agents[index], state.agents[nb.index]) {
                    v += projector(g).apply(nb.desired_bearing.as_vec2()) * -1.0;
                }
            }
            v
        }
    };
    raw.clamp_norm(v_max)
}

/// Direction schedule of a closed polyline traversed at constant speed.
fn waypoint_velocity(points: &[Vec2], speed: f64, t: f64) -> Vec2 {
    let total = loop_length(points);
    if !finite_above(total, TOL_COINCIDENT) {
        return Vec2::ZERO;
    }
    let mut s = (speed * t).rem_euclid(total);
    for i in 0..points.len() {
        let a = points[i];
        let b = points[(i + 1) % points.len()];
        let len = a.distance(b);
        if len <= TOL_COINCIDENT {
            continue;
        }
        if s < len {
            return (b - a) * (speed / len);
        }
        s -= len;
    }
    // Wrap-around round-off lands on the first segment.
    let dir = points[1] - points[0];
    dir * (speed / dir.norm())
}

/// Everything evaluated on one pre-step state.
#[derive(Clone, Debug)]
struct StepEval {
    decision: ControlDecision,
    term: AvoidanceTerm,
    relay_velocity: Vec2,
    agent_velocities: Vec<Vec2>,
    d_r: f64,
    margins: Vec<f64>,
    in_fov: Vec<bool>,
}

fn evaluate(world: &WorldState, sc: &Scenario) -> Result<StepEval, SimError> {
    let mut bearings = Vec::with_capacity(world.agents.len());
    let mut min_dist = f64::INFINITY;
    for (i, p) in world.agents.iter().enumerate() {
        let d = world.p_r.distance(*p);
        if !finite_above(d, TOL_COINCIDENT) {
            return Err(SimError::Collision {
                agent: i,
                distance: d,
                t: world.t,
            });
        }
        min_dist = min_dist.min(d);
        bearings.push(bearing(world.p_r, *p).expect("distance checked above"));
    }
    let margins: Vec<f64> = bearings
        .iter()
        .map(|g| angular_margin(*g, &sc.fov))
        .collect();
    let flags: Vec<bool> = bearings.iter().map(|g| in_fov(*g, &sc.fov)).collect();

    let set = BearingSet::new(bearings).expect("at least one agent");
    let decision = control_general(&set, &sc.fov, sc.gains.k_r);

    let d_r = min_dist.min(sc.safety.epsilon_s);
    let term = if sc.avoidance_enabled {
        avoidance::avoidance_term(world, &sc.safety, &sc.fov, sc.gains.v_max, decision.u_r)
            .map_err(|e| match e {
                AvoidanceError::CollisionError { agent, distance } => SimError::Collision {
                    agent,
                    distance,
                    t: world.t,
                },
                other => SimError::Avoidance(other),
            })?
    } else {
        AvoidanceTerm::inactive(&sc.fov, avoidance::alert(d_r, &sc.safety))
    };

    let relay_velocity = avoidance::relay_velocity(decision.u_r, &term);
    let agent_velocities: Vec<Vec2> = sc
        .agent_models
        .iter()
        .enumerate()
        .map(|(i, m)| agent_velocity(m, world, i, sc.gains.v_max))
        .collect();

    Ok(StepEval {
        decision,
        term,
        relay_velocity,
        agent_velocities,
        d_r,
        margins,
        in_fov: flags,
    })
}

fn advance(
    world: &WorldState,
    eval: &StepEval,
    sc: &Scenario,
    t_next: f64,
) -> Result<WorldState, SimError> {
    let p_r = world.p_r + eval.relay_velocity * sc.dt;
    let agents: Vec<Vec2> = world
        .agents
        .iter()
        .zip(&eval.agent_velocities)
        .map(|(p, v)| *p + *v * sc.dt)
        .collect();
    for (i, p) in agents.iter().enumerate() {
        let d = p_r.distance(*p);
        if !finite_above(d, TOL_COINCIDENT) {
            return Err(SimError::Collision {
                agent: i,
                distance: d,
                t: t_next,
            });
        }
    }
    Ok(WorldState {
        t: t_next,
        p_r,
        agents,
    })
}

/// Advance one Euler step from `world`.
pub fn step(world: &WorldState, scenario: &Scenario) -> Result<WorldState, SimError> {
    let eval = evaluate(world, scenario)?;
    advance(world, &eval, scenario, world.t + scenario.dt)
}

/// One trace row: the state plus everything the controller computed on it.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub p_r: Vec2,
    pub agents: Vec<Vec2>,
    pub u_r: Vec2,
    pub upsilon: Vec2,
    pub chi_n: i32,
    pub branch: Branch,
    pub selected: Vec<usize>,
    pub d_r: f64,
    pub eta: f64,
    pub a_r: f64,
    pub margins: Vec<f64>,
    pub in_fov: Vec<bool>,
}

/// Field-of-view violation onset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FovViolation {
    pub t: f64,
    pub agent: usize,
}

/// Aggregate events of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct SimEvents {
    /// Times at which the active branch of the law changed.
    pub chi_switches: Vec<f64>,
    /// Onsets of margins dropping below the violation threshold.
    pub fov_violations: Vec<FovViolation>,
    pub min_distance: f64,
    pub min_margin: f64,
}

/// Full simulation output.
#[derive(Clone, Debug, PartialEq)]
pub struct SimTrace {
    pub records: Vec<StepRecord>,
    pub events: SimEvents,
}

impl SimTrace {
    /// Worst ratio of command jump to bearing motion across branch switches:
    /// `max |u(t_k) - u(t_k-1)| / (k_r * max angular change of the bearings
    /// selected on either side of the switch)`. `None` without switches.
    pub fn max_switch_du_ratio(&self, k_r: f64) -> Option<f64> {
        let mut worst: Option<f64> = None;
        for k in 1..self.records.len() {
            let (prev, cur) = (&self.records[k - 1], &self.records[k]);
            if prev.branch == cur.branch {
                continue;
            }
            let du = (cur.u_r - prev.u_r).norm();
            let mut dangle: f64 = 0.0;
            for i in prev.selected.iter().chain(&cur.selected) {
                let a = bearing(prev.p_r, prev.agents[*i]);
                let b = bearing(cur.p_r, cur.agents[*i]);
                if let (Ok(a), Ok(b)) = (a, b) {
                    dangle = dangle.max(a.angle_to(b).abs());
                }
            }
            let ratio = if dangle > 1e-15 {
                du / (k_r * dangle)
            } else if du <= 1e-12 {
                0.0
            } else {
                f64::INFINITY
            };
            worst = Some(worst.map_or(ratio, |w: f64| w.max(ratio)));
        }
        worst
    }
}

fn extract_events(records: &[StepRecord]) -> SimEvents {
    let mut chi_switches = Vec::new();
    let mut fov_violations = Vec::new();
    let mut min_distance = f64::INFINITY;
    let mut min_margin = f64::INFINITY;
    let n = records.first().map_or(0, |r| r.agents.len());
    let mut violating = vec![false; n];
    for (k, r) in records.iter().enumerate() {
        if k > 0 && r.branch != records[k - 1].branch {
            chi_switches.push(r.t);
        }
        for (i, m) in r.margins.iter().enumerate() {
            min_margin = min_margin.min(*m);
            let bad = *m < -MARGIN_SLACK_RAD;
            if bad && !violating[i] {
                fov_violations.push(FovViolation { t: r.t, agent: i });
            }
            violating[i] = bad;
        }
        for p in &r.agents {
            min_distance = min_distance.min(r.p_r.distance(*p));
        }
    }
    SimEvents {
        chi_switches,
        fov_violations,
        min_distance,
        min_margin,
    }
}

/// Run the scenario from its initial state through `t_final`.
///
/// The trace has `round(t_final / dt) + 1` rows; row `k` holds the state at
/// `t = k dt` and the commands computed on it.
pub fn run(scenario: &Scenario) -> Result<SimTrace, SimError> {
    scenario.validate()?;
    let steps = (scenario.t_final / scenario.dt).round().max(1.0) as usize;
    let mut world = scenario.initial.clone();
    let mut records = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let eval = evaluate(&world, scenario)?;
        records.push(StepRecord {
            t: world.t,
            p_r: world.p_r,
            agents: world.agents.clone(),
            u_r: eval.decision.u_r,
            upsilon: eval.term.upsilon,
            chi_n: eval.decision.chi_n,
            branch: eval.decision.branch,
            selected: eval.decision.selected.clone(),
            d_r: eval.d_r,
            eta: eval.term.eta,
            a_r: eval.term.a_r,
            margins: eval.margins.clone(),
            in_fov: eval.in_fov.clone(),
        });
        if k < steps {
            world = advance(&world, &eval, scenario, ((k + 1) as f64) * scenario.dt)?;
        }
    }
    let events = extract_events(&records);
    Ok(SimTrace { records, events })
}
