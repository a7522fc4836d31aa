//! Reactive collision avoidance layered on top of the tracking law.
//!
//! When agents fall inside an alert radius the relay blends in a retreat
//! along the cone bisector, sized so that its velocity component away from
//! the nearest agents at least matches their speed cap. Retreating along the
//! bisector never pushes a bearing out of the cone, so avoidance does not
//! interfere with tracking.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::geometry::{bearing, finite_above, FovConfig, UnitVec2, Vec2, TOL_COINCIDENT};
use crate::simulator::WorldState;

/// Distances within this band of the minimum count as jointly nearest.
pub const TOL_DIST: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum AvoidanceError {
    #[error(
        "half-angle pi/2 leaves no strict retreat direction while agents are inside the alert radius"
    )]
    GammaDegenerate,
    #[error("collision: agent {agent} at distance {distance:.3e} m")]
    CollisionError { agent: usize, distance: f64 },
}

/// Safety radii: hard floor `epsilon`, alert radius `epsilon_s`, and ramp
/// fraction `delta` controlling how fast the response saturates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SafetyConfig {
    pub epsilon: f64,
    pub epsilon_s: f64,
    pub delta: f64,
}

impl SafetyConfig {
    pub fn new(epsilon: f64, epsilon_s: f64, delta: f64) -> Self {
        assert!(
            epsilon > 0.0 && epsilon < epsilon_s,
            "safety radii must satisfy 0 < epsilon < epsilon_s"
        );
        assert!(delta > 0.0 && delta <= 1.0, "ramp fraction outside (0, 1]");
        SafetyConfig {
            epsilon,
            epsilon_s,
            delta,
        }
    }
}

impl Default for SafetyConfig {
    fn default() -> Self {
        SafetyConfig {
            epsilon: 5.0,
            epsilon_s: 10.0,
            delta: 0.01,
        }
    }
}

/// Snapshot of which agents are near and the retreat geometry they induce.
#[derive(Clone, Debug)]
pub struct ProximityState {
    /// Nearest distance among alerted agents, or `epsilon_s` when none.
    pub d_r: f64,
    /// Agents inside the alert radius.
    pub v_s: Vec<usize>,
    /// Alerted agents jointly at the nearest distance.
    pub v_r: Vec<usize>,
    /// Most-separated pair among the nearest agents (may coincide).
    pub critical_pair: Option<(usize, usize)>,
    /// Unit retreat axis: bisector of the critical pair, or the cone
    /// bisector when nobody is alerted.
    pub n_r: UnitVec2,
    /// Speed the retreat must reach along `n_r` to outrun the nearest
    /// agents; zero when nobody is alerted.
    pub v_bar: f64,
}

/// Classify agent proximity and derive the retreat axis.
pub fn proximity(
    world: &WorldState,
    cfg: &SafetyConfig,
    fov: &FovConfig,
    v_max: f64,
) -> Result<ProximityState, AvoidanceError> {
    assert!(v_max > 0.0);
    let dist: Vec<f64> = world
        .agents
        .iter()
        .map(|p| world.p_r.distance(*p))
        .collect();
    for (i, d) in dist.iter().enumerate() {
        if !finite_above(*d, TOL_COINCIDENT) {
            return Err(AvoidanceError::CollisionError {
                agent: i,
                distance: *d,
            });
        }
    }

    let v_s: Vec<usize> = (0..dist.len())
        .filter(|i| dist[*i] <= cfg.epsilon_s)
        .collect();
    if v_s.is_empty() {
        return Ok(ProximityState {
            d_r: cfg.epsilon_s,
            v_s,
            v_r: Vec::new(),
            critical_pair: None,
            n_r: fov.bisector(),
            v_bar: 0.0,
        });
    }
    // A full half-plane cone has no direction strictly outside every bearing.
    if fov.gamma() >= FRAC_PI_2 {
        return Err(AvoidanceError::GammaDegenerate);
    }

    let d_r = v_s.iter().map(|i| dist[*i]).fold(f64::INFINITY, f64::min);
    let v_r: Vec<usize> = v_s
        .iter()
        .copied()
        .filter(|i| dist[*i] <= d_r + TOL_DIST)
        .collect();

    let g = |i: usize| bearing(world.p_r, world.agents[i]).expect("distance checked above");

    // Most-separated pair: smallest pairwise bearing dot, lexicographic ties.
    let mut pair = (v_r[0], v_r[0]);
    let mut pair_dot = f64::INFINITY;
    for (a, i) in v_r.iter().copied().enumerate() {
        for j in v_r.iter().copied().skip(a) {
            let d = g(i).dot(g(j));
            if d < pair_dot {
                pair_dot = d;
                pair = (i, j);
            }
        }
    }

    let (i, j) = pair;
    let n_r = if i == j {
        g(i)
    } else {
        match (g(i).as_vec2() + g(j).as_vec2()).normalize() {
            Ok(n) => n,
            // Opposed bearings only arise outside the cone; retreat along
            // the bisector still separates the relay from the group.
            Err(_) => fov.bisector(),
        }
    };
    let v_bar = v_max / n_r.dot(g(i));

    Ok(ProximityState {
        d_r,
        v_s,
        v_r,
        critical_pair: Some(pair),
        n_r,
        v_bar,
    })
}

/// Alert level in [0, 1]: saturated at or below `epsilon`, zero at or beyond
/// `epsilon_s`, linear ramp over a `delta * epsilon` band in between.
pub fn alert(d_r: f64, cfg: &SafetyConfig) -> f64 {
    if d_r <= cfg.epsilon {
        1.0
    } else if d_r < cfg.epsilon_s {
        (-d_r / (cfg.delta * cfg.epsilon) + (1.0 + cfg.delta) / cfg.delta).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Retreat speed needed on top of the tracking command so the combined
/// velocity recedes from the nearest agents at `v_bar`.
pub fn avoidance_effort(
    prox: &ProximityState,
    u_r: Vec2,
    fov: &FovConfig,
) -> Result<f64, AvoidanceError> {
    if prox.v_r.is_empty() {
        return Ok(0.0);
    }
    let along_bisector = prox.n_r.dot(fov.bisector());
    if along_bisector <= 0.0 {
        return Err(AvoidanceError::GammaDegenerate);
    }
    Ok((prox.v_bar + u_r.dot(prox.n_r.as_vec2())).max(0.0) / along_bisector)
}

/// Retreat contribution to the relay velocity.
#[derive(Clone, Copy, Debug)]
pub struct AvoidanceTerm {
    pub upsilon: Vec2,
    pub eta: f64,
    pub a_r: f64,
    /// Retreat direction; always the cone bisector.
    pub f_r: UnitVec2,
}

impl AvoidanceTerm {
    /// No-op term used when avoidance is disabled or nobody is alerted.
    pub fn inactive(fov: &FovConfig, eta: f64) -> Self {
        AvoidanceTerm {
            upsilon: Vec2::ZERO,
            eta,
            a_r: 0.0,
            f_r: fov.bisector(),
        }
    }
}

/// Full avoidance response for the current world state.
pub fn avoidance_term(
    world: &WorldState,
    cfg: &SafetyConfig,
    fov: &FovConfig,
    v_max: f64,
    u_r: Vec2,
) -> Result<AvoidanceTerm, AvoidanceError> {
    let prox = proximity(world, cfg, fov, v_max)?;
    let eta = alert(prox.d_r, cfg);
    let a_r = avoidance_effort(&prox, u_r, fov)?;
    let f_r = fov.bisector();
    Ok(AvoidanceTerm {
        upsilon: f_r.as_vec2() * (-eta * a_r),
        eta,
        a_r,
        f_r,
    })
}

/// Commanded relay velocity: tracking plus retreat.
pub fn relay_velocity(u_r: Vec2, term: &AvoidanceTerm) -> Vec2 {
    u_r + term.upsilon
}
