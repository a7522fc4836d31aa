//! Self-check battery: every release criterion of the library, run end to
//! end with its stated tolerance. `fovrelay verify` prints one line per
//! check; the integration test suite asserts them all.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fovrelay::avoidance::{self, SafetyConfig};
use fovrelay::controller::{chi_2, chi_n, control_general, critical_gain, BearingSet};
use fovrelay::geometry::{make_fov, projector, UnitVec2, Vec2};
use fovrelay::qgamma;
use fovrelay::simulator::scenarios::{
    scenario_dancing, scenario_patrol, scenario_single_worst_case, scenario_two_agent_worst_case,
};
use fovrelay::simulator::{run, SimTrace, WorldState};

use crate::config::{parse_config, serialize_config};
use crate::trace::write_trace;

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name,
        passed,
        detail,
    }
}

fn run_or_fail(name: &'static str, sc: &fovrelay::Scenario) -> Result<SimTrace, CheckResult> {
    run(sc).map_err(|e| check(name, false, format!("simulation error: {e}")))
}

/// Run the whole battery. Deterministic: fixed seeds, fixed scenarios.
pub fn run_battery() -> Vec<CheckResult> {
    let mut out = vec![
        critical_gain_values(),
        q_star_values(),
        q_oracle_agreement(),
        q_derivative_fd(),
        q_second_derivative_fd(),
    ];
    out.extend(single_worst_case_panels());
    out.extend(two_agent_panels());
    out.extend(avoidance_panels());
    out.extend(dancing_switching());
    out.push(patrol_regime());
    out.push(chi_equivalence());
    out.push(projector_algebra());
    out.push(admissibility());
    out.push(alert_ramp());
    out.push(retreat_speed_bounds());
    out.push(determinism());
    out
}

/// Print one line per check; true iff everything passed.
pub fn print_battery(results: &[CheckResult]) -> bool {
    let mut all = true;
    for r in results {
        println!(
            "{} {:<28} {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        all &= r.passed;
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} checks, {} failed", results.len(), failed);
    all
}

// --- gains and capacity profile -------------------------------------------

fn critical_gain_values() -> CheckResult {
    let k1 = critical_gain(5.0, FRAC_PI_4, 1);
    let k2 = critical_gain(5.0, FRAC_PI_4, 2);
    let ok = (k1 - 7.0711).abs() <= 1e-4 && (k2 - 8.9181).abs() <= 1e-4;
    check(
        "gain-critical-values",
        ok,
        format!("K1 = {k1:.6} (want 7.0711 +/- 1e-4), K2 = {k2:.6} (want 8.9181 +/- 1e-4)"),
    )
}

fn q_star_values() -> CheckResult {
    let r = qgamma::phi_star(FRAC_PI_4).expect("valid");
    let ok = (r.q_star - 0.5607).abs() <= 1e-4 && r.phi_star == FRAC_PI_8;
    check(
        "q-minimum-values",
        ok,
        format!(
            "q* = {:.6} (want 0.5607 +/- 1e-4), phi* = {:.17} ({} pi/8 bit-exact)",
            r.q_star,
            r.phi_star,
            if r.phi_star == FRAC_PI_8 { "==" } else { "!=" }
        ),
    )
}

fn q_oracle_agreement() -> CheckResult {
    let mut worst_dq: f64 = 0.0;
    let mut worst_dphi: f64 = 0.0;
    for i in 0..200 {
        let gamma = (i as f64 + 1.0) / 200.0 * FRAC_PI_2;
        let closed = qgamma::phi_star(gamma).expect("valid");
        let (phi_bf, q_bf) = qgamma::q_min_bruteforce(gamma, 4001).expect("valid");
        worst_dq = worst_dq.max((q_bf - closed.q_star).abs());
        worst_dphi = worst_dphi.max((phi_bf - closed.phi_star).abs());
    }
    let ok = worst_dq <= 1e-6 && worst_dphi <= 1e-4;
    check(
        "q-bruteforce-oracle",
        ok,
        format!("200 half-angles: max |dq| = {worst_dq:.2e} (<= 1e-6), max |dphi| = {worst_dphi:.2e} (<= 1e-4)"),
    )
}

fn q_derivative_fd() -> CheckResult {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut samples = 0usize;
    for i in 0..40 {
        let gamma = 0.05 + (i as f64) / 39.0 * (FRAC_PI_2 - 0.05);
        let kink = if (FRAC_PI_4..FRAC_PI_2).contains(&gamma) {
            Some(2.0 * gamma - FRAC_PI_2)
        } else {
            None
        };
        for j in 1..25 {
            let phi = gamma * (j as f64) / 25.0;
            if phi < 2.0 * h || phi > gamma - 2.0 * h {
                continue;
            }
            if let Some(k) = kink {
                if (phi - k).abs() <= 1e-4 {
                    continue;
                }
            }
            let fd = (qgamma::q_gamma(gamma, phi + h).unwrap()
                - qgamma::q_gamma(gamma, phi - h).unwrap())
                / (2.0 * h);
            let an = qgamma::q_derivative(gamma, phi).unwrap();
            worst = worst.max((fd - an).abs());
            samples += 1;
        }
    }
    check(
        "q-derivative-fd",
        worst <= 1e-5 && samples > 500,
        format!("{samples} interior points: max |fd - analytic| = {worst:.2e} (<= 1e-5)"),
    )
}

fn q_second_derivative_fd() -> CheckResult {
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    let mut samples = 0usize;
    for i in 0..40 {
        let gamma = 0.05 + (i as f64) / 39.0 * (FRAC_PI_2 - 0.05);
        for j in 1..25 {
            let phi = gamma * (j as f64) / 25.0;
            if phi < 2.0 * h || phi > gamma - 2.0 * h {
                continue;
            }
            let an = match qgamma::q_second_derivative(gamma, phi) {
                Ok(v) => v,
                Err(_) => continue,
            };
            // Keep the FD stencil clear of the slope breakpoint.
            if (FRAC_PI_4..FRAC_PI_2).contains(&gamma)
                && (phi - (2.0 * gamma - FRAC_PI_2)).abs() <= 1e-3
            {
                continue;
            }
            let fd = (qgamma::q_gamma(gamma, phi + h).unwrap()
                - 2.0 * qgamma::q_gamma(gamma, phi).unwrap()
                + qgamma::q_gamma(gamma, phi - h).unwrap())
                / (h * h);
            worst = worst.max((fd - an).abs());
            samples += 1;
        }
    }
    check(
        "q-second-derivative-fd",
        worst <= 1e-4 && samples > 300,
        format!("{samples} interior points: max |fd - analytic| = {worst:.2e} (<= 1e-4)"),
    )
}

// --- worst-case gain panels ------------------------------------------------

fn single_worst_case_panels() -> Vec<CheckResult> {
    let mut out = Vec::new();

    let sc = scenario_single_worst_case(FRAC_PI_4, 5.0, 0.9, 30.0);
    out.push(match run_or_fail("single-0.9-violation", &sc) {
        Err(c) => c,
        Ok(trace) => {
            let first = trace.events.fov_violations.first().map(|v| v.t);
            let ok = first.is_some_and(|t| t <= 1.0);
            check(
                "single-0.9-violation",
                ok,
                format!("first violation at t = {first:?} (want within 1 s)"),
            )
        }
    });

    let sc = scenario_single_worst_case(FRAC_PI_4, 5.0, 1.0, 30.0);
    out.push(match run_or_fail("single-1.0-margin", &sc) {
        Err(c) => c,
        Ok(trace) => check(
            "single-1.0-margin",
            trace.events.min_margin >= -1e-3,
            format!(
                "min margin = {:+.3e} rad (want >= -1e-3)",
                trace.events.min_margin
            ),
        ),
    });

    let sc = scenario_single_worst_case(FRAC_PI_4, 5.0, 1.1, 30.0);
    out.push(match run_or_fail("single-1.1-alignment", &sc) {
        Err(c) => c,
        Ok(trace) => {
            let last = trace.records.last().expect("nonempty");
            let g = fovrelay::geometry::bearing(last.p_r, last.agents[0]).expect("apart");
            let end = sc.fov.bisector().angle_to(g).abs();
            let initial = FRAC_PI_4;
            // The constant world-frame escape stalls the bearing at the
            // gain-balance angle (~0.6947 rad for this setup), so this check
            // documents the miss rather than passing: see the test notes.
            check(
                "single-1.1-alignment",
                end < 0.1 * initial,
                format!(
                    "angle at t = 30 s: {end:.4} rad = {:.1}% of initial (want < 10%)",
                    100.0 * end / initial
                ),
            )
        }
    });

    out
}

fn two_agent_panels() -> Vec<CheckResult> {
    let mut out = Vec::new();

    let sc = scenario_two_agent_worst_case(FRAC_PI_4, 5.0, 0.9, 30.0);
    out.push(match run_or_fail("two-0.9-violation", &sc) {
        Err(c) => c,
        Ok(trace) => {
            let first = trace.events.fov_violations.first().map(|v| v.t);
            check(
                "two-0.9-violation",
                first.is_some(),
                format!("first violation at t = {first:?} (want present)"),
            )
        }
    });

    let sc = scenario_two_agent_worst_case(FRAC_PI_4, 5.0, 1.0, 30.0);
    out.push(match run_or_fail("two-1.0-margins", &sc) {
        Err(c) => c,
        Ok(trace) => check(
            "two-1.0-margins",
            trace.events.min_margin >= -1e-3,
            format!(
                "min margin over both agents = {:+.3e} rad (want >= -1e-3)",
                trace.events.min_margin
            ),
        ),
    });

    out
}

fn avoidance_panels() -> Vec<CheckResult> {
    let mut out = Vec::new();
    let mut sc = scenario_single_worst_case(FRAC_PI_4, 5.0, 1.5, 30.0);

    sc.avoidance_enabled = true;
    let floor = sc.safety.epsilon - sc.gains.v_max * sc.dt;
    out.push(match run_or_fail("avoidance-on-floor", &sc) {
        Err(c) => c,
        Ok(trace) => check(
            "avoidance-on-floor",
            trace.events.min_distance >= floor,
            format!(
                "min distance = {:.4} m (want >= {floor} m)",
                trace.events.min_distance
            ),
        ),
    });

    sc.avoidance_enabled = false;
    out.push(match run_or_fail("avoidance-off-breach", &sc) {
        Err(c) => c,
        Ok(trace) => check(
            "avoidance-off-breach",
            trace.events.min_distance < sc.safety.epsilon,
            format!(
                "min distance = {:.4} m (want < {} m)",
                trace.events.min_distance, sc.safety.epsilon
            ),
        ),
    });

    out
}

fn dancing_switching() -> Vec<CheckResult> {
    let mut out = Vec::new();
    let mut du_detail = Vec::new();
    let mut du_ok = true;

    for (name, n, crossings, min_switches) in [
        ("dancing-2-switches", 2usize, 5usize, 5usize),
        ("dancing-5-switches", 5, 3, 3),
    ] {
        let sc = scenario_dancing(n, crossings);
        match run_or_fail(name, &sc) {
            Err(c) => out.push(c),
            Ok(trace) => {
                let switches = trace.events.chi_switches.len();
                let violations = trace.events.fov_violations.len();
                out.push(check(
                    name,
                    switches >= min_switches && violations == 0,
                    format!(
                        "{switches} branch switches (want >= {min_switches}), {violations} violations (want 0)"
                    ),
                ));
                let ratio = trace.max_switch_du_ratio(sc.gains.k_r);
                if let Some(r) = ratio {
                    du_ok &= r <= 4.0;
                    du_detail.push(format!("n={n}: {r:.3}"));
                }
            }
        }
    }

    out.push(check(
        "switch-continuity",
        du_ok && !du_detail.is_empty(),
        format!(
            "per-switch |du| / (K dtheta) max: {} (want <= 4)",
            du_detail.join(", ")
        ),
    ));
    out
}

fn patrol_regime() -> CheckResult {
    let sc = scenario_patrol(20.0, Vec2::new(0.0, -60.0));
    match run_or_fail("patrol-regime", &sc) {
        Err(c) => c,
        Ok(trace) => {
            let switches = trace.events.chi_switches.len();
            let violations = trace.events.fov_violations.len();
            check(
                "patrol-regime",
                violations == 0 && switches >= 1,
                format!("{switches} regime changes (want >= 1), {violations} violations (want 0)"),
            )
        }
    }
}

// --- randomized property suites --------------------------------------------

fn chi_equivalence() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut mismatches = 0usize;
    for _ in 0..100_000 {
        let gamma: f64 = rng.random_range(0.05..=FRAC_PI_2);
        let beta: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let fov = make_fov(UnitVec2::from_angle(beta), gamma).expect("valid");
        let t1: f64 = rng.random_range(-gamma..=gamma);
        let t2: f64 = rng.random_range(-gamma..=gamma);
        let g1 = fov.bisector().rotated(t1);
        let g2 = fov.bisector().rotated(t2);
        let pair = chi_2(g1, g2, &fov);
        let set = BearingSet::new(vec![g1, g2]).expect("two");
        if pair != chi_n(&set, &fov) {
            mismatches += 1;
        }
    }
    check(
        "chi-pair-equivalence",
        mismatches == 0,
        format!("100000 random pairs: {mismatches} mismatches (want 0)"),
    )
}

fn projector_algebra() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        let g = UnitVec2::from_angle(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
        let p = projector(g);
        // Annihilates its own direction.
        worst = worst.max(p.apply(g.as_vec2()).norm());
        // Idempotent.
        let v = Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        worst = worst.max((p.apply(p.apply(v)) - p.apply(v)).norm());
        // Symmetric and unit-trace.
        worst = worst.max((p.m[0][1] - p.m[1][0]).abs());
        worst = worst.max((p.m[0][0] + p.m[1][1] - 1.0).abs());
    }
    check(
        "projector-algebra",
        worst <= 1e-12,
        format!("100000 samples: max deviation = {worst:.2e} (<= 1e-12)"),
    )
}

fn admissibility() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let gamma: f64 = rng.random_range(0.05..=FRAC_PI_2);
        let fov =
            make_fov(UnitVec2::from_angle(rng.random_range(-3.0..3.0)), gamma).expect("valid");
        let n = rng.random_range(1..=8);
        let bearings: Vec<UnitVec2> = (0..n)
            .map(|_| fov.bisector().rotated(rng.random_range(-gamma..=gamma)))
            .collect();
        let set = BearingSet::new(bearings).expect("nonempty");
        let d = control_general(&set, &fov, rng.random_range(0.5..20.0));
        worst = worst.max(d.u_r.dot(fov.bisector().as_vec2()));
    }
    check(
        "command-admissibility",
        worst <= 1e-12,
        format!("10000 random bearing sets: max u.g* = {worst:+.2e} (<= 1e-12)"),
    )
}

fn alert_ramp() -> CheckResult {
    let cfg = SafetyConfig::default();
    let mid = avoidance::alert(5.025, &cfg);
    let mut monotone = true;
    let mut last = f64::INFINITY;
    for i in 0..=2000 {
        let d = 4.0 + 8.0 * (i as f64) / 2000.0;
        let eta = avoidance::alert(d, &cfg);
        monotone &= eta <= last + 1e-15 && (0.0..=1.0).contains(&eta);
        last = eta;
    }
    let ok = (mid - 0.5).abs() <= 1e-12
        && avoidance::alert(5.0, &cfg) == 1.0
        && avoidance::alert(10.0, &cfg) == 0.0
        && monotone;
    check(
        "alert-ramp",
        ok,
        format!("eta(5.025) = {mid} (want 0.5), saturation and monotonicity on [4, 12]"),
    )
}

fn retreat_speed_bounds() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let v_max = 5.0;
    let cfg = SafetyConfig::default();
    let mut vbar_ok = true;
    let mut retreat_ok = true;
    let mut worst_vbar: f64 = 0.0;
    let mut worst_retreat = f64::INFINITY;
    for _ in 0..10_000 {
        let gamma: f64 = rng.random_range(0.05..FRAC_PI_2 - 0.01);
        let fov = make_fov(UnitVec2::from_angle(rng.random_range(-3.0..3.0)), gamma).expect("ok");
        let n = rng.random_range(1..=5);
        // Everyone inside the hard floor: the alert is saturated.
        let agents: Vec<Vec2> = (0..n)
            .map(|_| {
                let d = rng.random_range(0.5 * cfg.epsilon..=0.98 * cfg.epsilon);
                fov.bisector()
                    .rotated(rng.random_range(-gamma..=gamma))
                    .as_vec2()
                    * d
            })
            .collect();
        let world = WorldState {
            t: 0.0,
            p_r: Vec2::ZERO,
            agents,
        };
        let prox = avoidance::proximity(&world, &cfg, &fov, v_max).expect("not degenerate");
        if prox.v_r.is_empty() {
            continue;
        }
        let lo = v_max - 1e-9;
        let hi = v_max / gamma.cos() + 1e-9;
        vbar_ok &= prox.v_bar >= lo && prox.v_bar <= hi;
        worst_vbar = worst_vbar.max(prox.v_bar * gamma.cos() / v_max);

        // Worst-case retreat: tracking command from the live bearings, all
        // alerted agents charging head-on.
        let bearings: Vec<UnitVec2> = world
            .agents
            .iter()
            .map(|p| fovrelay::geometry::bearing(world.p_r, *p).expect("apart"))
            .collect();
        let set = BearingSet::new(bearings).expect("nonempty");
        let u = control_general(&set, &fov, critical_gain(v_max, gamma, n)).u_r;
        let term = avoidance::avoidance_term(&world, &cfg, &fov, v_max, u).expect("ok");
        let v_r = avoidance::relay_velocity(u, &term);
        let retreat = v_r.dot(prox.n_r.as_vec2() * -1.0);
        retreat_ok &= retreat >= prox.v_bar - 1e-9;
        worst_retreat = worst_retreat.min(retreat - prox.v_bar);
    }
    check(
        "retreat-speed-bounds",
        vbar_ok && retreat_ok,
        format!(
            "10000 saturated configs: vbar within [vM, vM/cos gamma] ({}), retreat - vbar >= {worst_retreat:+.2e} (want >= -1e-9)",
            if vbar_ok { "ok" } else { "violated" }
        ),
    )
}

fn determinism() -> CheckResult {
    let mut sc = scenario_two_agent_worst_case(FRAC_PI_4, 5.0, 1.0, 30.0);
    sc.t_final = 5.0;
    let text = serialize_config(&sc);
    let render = |t: &str| -> Result<String, String> {
        let sc = parse_config(t).map_err(|e| e.to_string())?;
        let trace = run(&sc).map_err(|e| e.to_string())?;
        Ok(write_trace(&trace))
    };
    match (render(&text), render(&text), run(&sc)) {
        (Ok(a), Ok(b), Ok(direct)) => {
            let direct_text = write_trace(&direct);
            let ok = a == b && a == direct_text;
            check(
                "trace-determinism",
                ok,
                format!(
                    "two parses + direct run: {} bytes each, byte-identical = {ok}",
                    a.len()
                ),
            )
        }
        (a, b, c) => check(
            "trace-determinism",
            false,
            format!(
                "runs failed: {:?} / {:?} / {:?}",
                a.err(),
                b.err(),
                c.err().map(|e| e.to_string())
            ),
        ),
    }
}
