//! Ready-made experiment setups.
//!
//! Each builder returns a fully validated [`Scenario`]. The worst-case pairs
//! place agents on the cone borders with escape velocities that saturate the
//! critical-gain condition, so the gain multiplier alone decides whether the
//! relay holds the cone. The richer setups exercise branch switching and the
//! collision-avoidance layer.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::avoidance::SafetyConfig;
use crate::controller::{control_general, critical_gain, BearingSet, GainSpec};
use crate::geometry::{make_fov, projector, FovConfig, UnitVec2, Vec2};
use crate::qgamma;

use super::{AgentModel, Scenario, WorldState};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_T_FINAL: f64 = 30.0;
pub const DEFAULT_V_MAX: f64 = 5.0;
pub const DEFAULT_D0: f64 = 30.0;

fn down() -> UnitVec2 {
    UnitVec2::new(0.0, -1.0).expect("unit by construction")
}

fn base(
    fov: FovConfig,
    gains: GainSpec,
    agents: Vec<(Vec2, AgentModel)>,
    avoidance: bool,
) -> Scenario {
    let (positions, models) = agents.into_iter().unzip();
    Scenario {
        fov,
        gains,
        safety: SafetyConfig::default(),
        avoidance_enabled: avoidance,
        agent_models: models,
        initial: WorldState {
            t: 0.0,
            p_r: Vec2::ZERO,
            agents: positions,
        },
        dt: DEFAULT_DT,
        t_final: DEFAULT_T_FINAL,
    }
}

/// Single agent pinned to a cone border, fleeing perpendicular to it at full
/// speed: the configuration that maximizes the bearing rate the relay must
/// cancel. With `k_mult = 1` the relay gain sits exactly at the single-agent
/// critical value; below it the agent must leave the cone, above it the
/// bearing is pushed back toward the bisector.
///
/// # Panics
/// On invalid `gamma`, non-positive `v_max`/`k_mult`, or `d0` inside the
/// default safety floor.
pub fn scenario_single_worst_case(gamma: f64, v_max: f64, k_mult: f64, d0: f64) -> Scenario {
    assert!(v_max > 0.0 && k_mult > 0.0, "positive speed and gain");
    let fov = make_fov(down(), gamma).expect("valid half-angle");
    let safety = SafetyConfig::default();
    assert!(d0 >= safety.epsilon, "start outside the safety floor");
    let k_r = k_mult * critical_gain(v_max, gamma, 1);
    let agent_pos = fov.border1().as_vec2() * d0;
    let escape = fov.escape_perp(1).as_vec2() * v_max;
    base(
        fov,
        GainSpec {
            v_max,
            gamma,
            n: 1,
            k_r,
        },
        vec![(agent_pos, AgentModel::ConstantVelocity { velocity: escape })],
        false,
    )
}

/// Two agents in the split-cone worst case: one pinned to border 1 escaping
/// outward, the other held at the capacity-minimizing offset inside border 2.
/// The second agent's constant velocity is the projection of the relay's own
/// initial command onto the plane normal to its bearing, so it keeps pace
/// with the relay and the first agent saturates the two-agent critical gain.
pub fn scenario_two_agent_worst_case(gamma: f64, v_max: f64, k_mult: f64, d0: f64) -> Scenario {
    assert!(v_max > 0.0 && k_mult > 0.0, "positive speed and gain");
    let fov = make_fov(down(), gamma).expect("valid half-angle");
    let safety = SafetyConfig::default();
    assert!(d0 >= safety.epsilon, "start outside the safety floor");
    let k_r = k_mult * critical_gain(v_max, gamma, 2);

    let g1 = fov.border1();
    let phi_star = qgamma::phi_star(gamma).expect("valid half-angle").phi_star;
    let g2 = fov.border2().rotated(-phi_star);

    let escape = fov.escape_perp(1).as_vec2() * v_max;
    let set = BearingSet::new(vec![g1, g2]).expect("two bearings");
    let u0 = control_general(&set, &fov, k_r).u_r;
    let hold = projector(g2).apply(u0).clamp_norm(v_max);

    base(
        fov,
        GainSpec {
            v_max,
            gamma,
            n: 2,
            k_r,
        },
        vec![
            (
                g1.as_vec2() * d0,
                AgentModel::ConstantVelocity { velocity: escape },
            ),
            (
                g2.as_vec2() * d0,
                AgentModel::ConstantVelocity { velocity: hold },
            ),
        ],
        false,
    )
}

/// `n`-agent setup that forces repeated law switches: `n - 1` agents sit in a
/// static column left of the bisector while the last agent sweeps across it
/// harmonically, flipping the group between the one-sided and split branches
/// about `crossings` times over the run. Collision avoidance is on (and stays
/// inert — nothing approaches the relay).
///
/// # Panics
/// If `n < 2` or `crossings < 1`.
pub fn scenario_dancing(n: usize, crossings: usize) -> Scenario {
    assert!(n >= 2, "need a static group plus the sweeping agent");
    assert!(crossings >= 1, "at least one sweep");
    let gamma = FRAC_PI_4;
    let v_max = DEFAULT_V_MAX;
    let fov = make_fov(down(), gamma).expect("valid half-angle");
    let k_r = critical_gain(v_max, gamma, n);

    let mut agents: Vec<(Vec2, AgentModel)> = (0..n - 1)
        .map(|i| (Vec2::new(-4.0, -50.0 - 6.0 * i as f64), AgentModel::Static))
        .collect();

    let omega = (crossings as f64 + 1.5) * PI / DEFAULT_T_FINAL;
    let amplitude = (0.95 * v_max / omega).min(9.0);
    let anchor = Vec2::new(0.0, -38.0);
    agents.push((
        anchor,
        AgentModel::BisectorOscillator {
            anchor,
            amplitude,
            omega,
            drift: Vec2::ZERO,
        },
    ));

    base(
        fov,
        GainSpec {
            v_max,
            gamma,
            n,
            k_r,
        },
        agents,
        true,
    )
}

/// Five-agent patrol: one agent circles the group clockwise (crossing the
/// bisector once), three loop between waypoints inside the circle, and one
/// holds the center. Collision avoidance is on.
pub fn scenario_patrol(radius: f64, center: Vec2) -> Scenario {
    assert!(radius > 0.0, "positive patrol radius");
    let gamma = FRAC_PI_4;
    let v_max = DEFAULT_V_MAX;
    let fov = make_fov(down(), gamma).expect("valid half-angle");
    let n = 5;
    let k_r = critical_gain(v_max, gamma, n);

    let theta0 = FRAC_PI_2 + 0.11;
    let circler_pos = center + Vec2::new(radius * theta0.cos(), radius * theta0.sin());
    let tri = |offsets: [(f64, f64); 3]| -> Vec<Vec2> {
        offsets
            .iter()
            .map(|(x, y)| center + Vec2::new(*x, *y))
            .collect()
    };

    let t2 = tri([(-14.0, 8.0), (-7.0, 12.0), (-9.0, 3.0)]);
    let t3 = tri([(-13.0, -4.0), (-6.0, 0.0), (-10.0, -10.0)]);
    let t4 = tri([(-16.0, 2.0), (-11.0, 5.0), (-14.0, -6.0)]);

    let agents = vec![
        (
            circler_pos,
            AgentModel::CirclePath {
                center,
                radius,
                angular_rate: -0.1,
            },
        ),
        (
            t2[0],
            AgentModel::WaypointLoop {
                points: t2.clone(),
                speed: 2.5,
            },
        ),
        (
            t3[0],
            AgentModel::WaypointLoop {
                points: t3.clone(),
                speed: 2.0,
            },
        ),
        (
            t4[0],
            AgentModel::WaypointLoop {
                points: t4.clone(),
                speed: 3.0,
            },
        ),
        (center, AgentModel::Static),
    ];

    let mut sc = base(
        fov,
        GainSpec {
            v_max,
            gamma,
            n,
            k_r,
        },
        agents,
        true,
    );
    sc.initial.p_r = Vec2::new(4.0, 0.0);
    sc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{angular_margin, bearing, in_fov};
    use crate::simulator::run;

    #[test]
    fn single_worst_case_starts_on_border_with_zero_margin() {
        let sc = scenario_single_worst_case(FRAC_PI_4, 5.0, 1.0, 30.0);
        sc.validate().unwrap();
        let g = bearing(sc.initial.p_r, sc.initial.agents[0]).unwrap();
        assert!(angular_margin(g, &sc.fov).abs() < 1e-12);
        assert!(in_fov(g, &sc.fov));
        // Escape direction is perpendicular to the initial bearing.
        if let AgentModel::ConstantVelocity { velocity } = &sc.agent_models[0] {
            assert!(velocity.dot(g.as_vec2()).abs() < 1e-9);
            assert!((velocity.norm() - 5.0).abs() < 1e-12);
        } else {
            panic!("expected constant velocity");
        }
    }

    #[test]
    fn two_agent_worst_case_geometry() {
        let sc = scenario_two_agent_worst_case(FRAC_PI_4, 5.0, 1.0, 30.0);
        sc.validate().unwrap();
        let g2 = bearing(sc.initial.p_r, sc.initial.agents[1]).unwrap();
        // Second agent sits phi* inside border 2.
        let expect = qgamma::phi_star(FRAC_PI_4).unwrap().phi_star;
        assert!((angular_margin(g2, &sc.fov) - expect).abs() < 1e-9);
        // Its hold velocity is admissible and perpendicular-projected.
        if let AgentModel::ConstantVelocity { velocity } = &sc.agent_models[1] {
            assert!(velocity.norm() <= 5.0 + 1e-12);
            assert!(velocity.dot(g2.as_vec2()).abs() < 1e-9);
        } else {
            panic!("expected constant velocity");
        }
    }

    #[test]
    fn dancing_validates_and_oscillator_spans_bisector() {
        for (n, crossings) in [(2usize, 5usize), (5, 3)] {
            let sc = scenario_dancing(n, crossings);
            sc.validate().unwrap();
            match sc.agent_models.last().unwrap() {
                AgentModel::BisectorOscillator {
                    amplitude, omega, ..
                } => {
                    assert!(*amplitude > 4.0, "sweep must clear the static column");
                    assert!(*amplitude * *omega <= 0.96 * DEFAULT_V_MAX);
                }
                other => panic!("expected oscillator, got {other:?}"),
            }
        }
    }

    #[test]
    fn patrol_validates_and_keeps_everyone_in_view() {
        let sc = scenario_patrol(20.0, Vec2::new(0.0, -60.0));
        sc.validate().unwrap();
        for p in &sc.initial.agents {
            let g = bearing(sc.initial.p_r, *p).unwrap();
            assert!(in_fov(g, &sc.fov));
        }
    }

    #[test]
    fn short_dancing_run_stays_clean() {
        let mut sc = scenario_dancing(2, 5);
        sc.t_final = 2.0;
        let trace = run(&sc).unwrap();
        assert!(trace.events.fov_violations.is_empty());
        assert!(trace.events.min_distance > sc.safety.epsilon);
    }
}
