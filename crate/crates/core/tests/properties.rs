//! Property-based invariants for the geometry, controller, q-profile, and
//! avoidance layers. Each property states an algebraic fact the library
//! promises for *all* inputs in the stated domain, so shrinkable random
//! sampling is the right tool.

use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;

use fovrelay::avoidance::{alert, avoidance_term, proximity, relay_velocity, SafetyConfig};
use fovrelay::controller::{
    chi_2, chi_n, conservative_gain_bound, control_general, critical_gain, BearingSet,
};
use fovrelay::geometry::{
    angular_margin, bearing, in_fov, make_fov, projector, rotate, Mat2, UnitVec2, Vec2,
};
use fovrelay::qgamma::{q_gamma, q_gamma_radical, q_star};
use fovrelay::simulator::WorldState;

/// Half-angles kept away from 0 and pi/2 so cone borders stay well separated
/// and the retreat-direction denominator `n_r . g*` stays bounded below.
fn interior_gamma() -> impl Strategy<Value = f64> {
    0.05f64..(FRAC_PI_2 - 0.05)
}

/// Any admissible half-angle, including the open/closed endpoints we support.
fn full_gamma() -> impl Strategy<Value = f64> {
    0.01f64..=FRAC_PI_2
}

fn angle() -> impl Strategy<Value = f64> {
    -PI..PI
}

fn finite_vec(limit: f64) -> impl Strategy<Value = Vec2> {
    (-limit..limit, -limit..limit).prop_map(|(x, y)| Vec2::new(x, y))
}

proptest! {
    // ---- projector algebra -------------------------------------------------

    #[test]
    fn projector_annihilates_its_axis(theta in angle()) {
        let g = UnitVec2::from_angle(theta);
        let p = projector(g);
        let residual = p.apply(g.as_vec2()).norm();
        prop_assert!(residual <= 1e-12, "P g = {residual:e}");
    }

    #[test]
    fn projector_is_idempotent_symmetric_rank_one(theta in angle(), v in finite_vec(1e3)) {
        let g = UnitVec2::from_angle(theta);
        let p = projector(g);
        // Idempotent: P(Pv) = Pv.
        let once = p.apply(v);
        let twice = p.apply(once);
        prop_assert!((twice - once).norm() <= 1e-9 * (1.0 + v.norm()));
        // Symmetric.
        let pt = p.transpose();
        prop_assert_eq!(p.m, pt.m);
        // Trace 1 for a unit axis in the plane.
        prop_assert!((p.m[0][0] + p.m[1][1] - 1.0).abs() <= 1e-12);
        // Pv is orthogonal to g.
        prop_assert!(once.dot(g.as_vec2()).abs() <= 1e-9 * (1.0 + v.norm()));
    }

    // ---- rotations ---------------------------------------------------------

    #[test]
    fn rotation_round_trips(alpha in angle(), v in finite_vec(1e3)) {
        let back = rotate(-alpha, rotate(alpha, v));
        prop_assert!((back - v).norm() <= 1e-9 * (1.0 + v.norm()));
    }

    #[test]
    fn unit_rotation_composes(theta in angle(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let g = UnitVec2::from_angle(theta);
        let chained = g.rotated(a).rotated(b);
        let direct = g.rotated(a + b);
        prop_assert!(chained.angle_to(direct).abs() <= 1e-9);
    }

    // ---- bearings ----------------------------------------------------------

    #[test]
    fn bearing_is_antisymmetric(a in finite_vec(1e3), b in finite_vec(1e3)) {
        prop_assume!(a.distance(b) > 1e-6);
        let ab = bearing(a, b).unwrap();
        let ba = bearing(b, a).unwrap();
        prop_assert!((ab.as_vec2() + ba.as_vec2()).norm() <= 1e-12);
    }

    #[test]
    fn clamp_norm_caps_speed(v in finite_vec(1e4), cap in 0.01f64..50.0) {
        let c = v.clamp_norm(cap);
        prop_assert!(c.norm() <= cap * (1.0 + 1e-12));
        if v.norm() <= cap {
            prop_assert_eq!(c, v); // under the cap the vector is untouched
        } else if v.norm() > 1e-9 {
            // Direction preserved when clamping.
            let cos = c.dot(v) / (c.norm() * v.norm());
            prop_assert!(cos >= 1.0 - 1e-9);
        }
    }

    // ---- FoV membership vs margin ------------------------------------------

    #[test]
    fn membership_matches_margin_outside_tolerance_band(
        base in angle(),
        gamma in interior_gamma(),
        offset in -3.0f64..3.0,
    ) {
        let fov = make_fov(UnitVec2::from_angle(base), gamma).unwrap();
        let g = fov.bisector().rotated(offset);
        let margin = angular_margin(g, &fov);
        // Inside the +-1e-6 band the boundary tolerance may decide either way;
        // beyond it membership and margin must agree.
        if margin >= 1e-6 {
            prop_assert!(in_fov(g, &fov));
        } else if margin <= -1e-6 {
            prop_assert!(!in_fov(g, &fov));
        }
        // The margin itself is the distance to the nearest border.
        let to1 = g.angle_to(fov.border1()).abs();
        let to2 = g.angle_to(fov.border2()).abs();
        if in_fov(g, &fov) {
            prop_assert!((margin - to1.min(to2)).abs() <= 1e-9);
        }
    }

    // ---- side discriminator ------------------------------------------------

    #[test]
    fn pair_discriminator_agrees_with_general(
        base in angle(),
        gamma in interior_gamma(),
        o1 in -3.0f64..3.0,
        o2 in -3.0f64..3.0,
    ) {
        let fov = make_fov(UnitVec2::from_angle(base), gamma).unwrap();
        let g1 = fov.bisector().rotated(o1);
        let g2 = fov.bisector().rotated(o2);
        let pair = chi_2(g1, g2, &fov);
        let set = BearingSet::new(vec![g1, g2]).unwrap();
        let general = chi_n(&set, &fov);
        prop_assert_eq!(pair, general);
    }

    // ---- control command ---------------------------------------------------

    #[test]
    fn command_never_pushes_along_bisector(
        base in angle(),
        gamma in interior_gamma(),
        offsets in prop::collection::vec(-0.9f64..0.9, 1..6),
        k_mult in 0.2f64..3.0,
    ) {
        let fov = make_fov(UnitVec2::from_angle(base), gamma).unwrap();
        let bearings: Vec<UnitVec2> = offsets
            .iter()
            .map(|o| fov.bisector().rotated(o * gamma))
            .collect();
        let n = bearings.len();
        let set = BearingSet::new(bearings).unwrap();
        let k_r = k_mult * critical_gain(5.0, gamma, n);
        let decision = control_general(&set, &fov, k_r);
        // Admissible motion: no positive component along the bisector.
        let along = decision.u_r.dot(fov.bisector().as_vec2());
        prop_assert!(along <= 1e-12 * k_r.max(1.0), "u . g* = {along:e}");
        prop_assert!(decision.u_r.is_finite());
    }

    #[test]
    fn gain_ordering_holds(gamma in full_gamma(), v in 0.5f64..20.0, n in 2usize..8) {
        let single = critical_gain(v, gamma, 1);
        let multi = critical_gain(v, gamma, n);
        let bound = conservative_gain_bound(v, gamma);
        // Worst-case efficiency never exceeds sin(gamma), so the multi-agent
        // gain dominates the single-agent one; the cubic bound dominates both.
        prop_assert!(multi >= single * (1.0 - 1e-12));
        prop_assert!(bound >= multi * (1.0 - 1e-12));
    }

    // ---- q profile ---------------------------------------------------------

    #[test]
    fn q_profile_bounds_and_floor(gamma in full_gamma(), frac in 0.0f64..=1.0) {
        let phi = frac * gamma;
        let q = q_gamma(gamma, phi).unwrap();
        let floor = q_star(gamma).unwrap();
        let s = gamma.sin();
        prop_assert!(q > 0.0);
        prop_assert!(q <= 2.0 + 1e-12);
        // The first term alone gives a hard floor.
        prop_assert!(q >= s * s * s - 1e-12);
        // The closed-form minimum really is a minimum.
        prop_assert!(q >= floor - 1e-9, "q({gamma},{phi}) = {q} < q* = {floor}");
    }

    #[test]
    fn q_radical_form_agrees(gamma in full_gamma(), frac in 0.0f64..=1.0) {
        let phi = frac * gamma;
        let plain = q_gamma(gamma, phi).unwrap();
        let radical = q_gamma_radical(gamma, phi).unwrap();
        // The radical form squares the third term, so cancellation near that
        // term's zeros costs ~sqrt(eps) absolute accuracy; elsewhere the two
        // forms agree tightly.
        let third = gamma.cos() * phi.sin() * (2.0 * gamma - phi).cos().abs();
        let tol = if third > 1e-3 { 1e-10 } else { 5e-8 };
        prop_assert!((plain - radical).abs() <= tol, "|{plain} - {radical}| at ({gamma},{phi})");
    }

    // ---- collision alert ---------------------------------------------------

    #[test]
    fn alert_ramp_is_monotone_and_clamped(
        d1 in 0.1f64..20.0,
        d2 in 0.1f64..20.0,
        eps in 1.0f64..6.0,
        delta in 0.001f64..0.2,
    ) {
        let cfg = SafetyConfig::new(eps, 2.0 * eps, delta);
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let a_lo = alert(lo, &cfg);
        let a_hi = alert(hi, &cfg);
        prop_assert!((0.0..=1.0).contains(&a_lo));
        prop_assert!((0.0..=1.0).contains(&a_hi));
        prop_assert!(a_lo >= a_hi - 1e-12, "alert not monotone: {a_lo} < {a_hi}");
        if hi <= eps {
            prop_assert_eq!(a_lo, 1.0);
        }
        if lo >= 2.0 * eps {
            prop_assert_eq!(a_hi, 0.0);
        }
    }

    // ---- retreat guarantee -------------------------------------------------

    #[test]
    fn full_alert_retreat_reaches_required_speed(
        base in angle(),
        gamma in 0.1f64..(FRAC_PI_2 - 0.05),
        offset_frac in -0.8f64..0.8,
        dist_frac in 0.1f64..0.9,
        v_max in 1.0f64..10.0,
        k_mult in 0.5f64..2.0,
    ) {
        let fov = make_fov(UnitVec2::from_angle(base), gamma).unwrap();
        let cfg = SafetyConfig::default();
        // One agent strictly inside the cone, inside the hard alert radius.
        let g_agent = fov.bisector().rotated(offset_frac * gamma);
        let p_agent = g_agent.as_vec2() * (dist_frac * cfg.epsilon);
        let world = WorldState { t: 0.0, p_r: Vec2::ZERO, agents: vec![p_agent] };

        let set = BearingSet::new(vec![g_agent]).unwrap();
        let k_r = k_mult * critical_gain(v_max, gamma, 1);
        let u_r = control_general(&set, &fov, k_r).u_r;

        let prox = proximity(&world, &cfg, &fov, v_max).unwrap();
        prop_assert!(prox.v_bar >= 0.0);
        prop_assert!((prox.n_r.as_vec2().norm() - 1.0).abs() <= 1e-12);

        let term = avoidance_term(&world, &cfg, &fov, v_max, u_r).unwrap();
        prop_assert!((term.eta - 1.0).abs() <= 1e-12, "inside epsilon must be full alert");
        let v_cmd = relay_velocity(u_r, &term);
        // Retreat component along -n_r meets the demanded escape speed.
        let retreat = v_cmd.dot(-prox.n_r.as_vec2());
        prop_assert!(
            retreat >= prox.v_bar - 1e-9,
            "retreat {retreat} < required {}",
            prox.v_bar
        );
    }
}

// A couple of deterministic identities that do not need random sampling but
// belong with the algebra above.

#[test]
fn projector_matches_outer_product_definition() {
    let g = UnitVec2::from_angle(0.3);
    let p = projector(g);
    let (x, y) = (g.x(), g.y());
    let expect = Mat2 {
        m: [[1.0 - x * x, -x * y], [-x * y, 1.0 - y * y]],
    };
    assert_eq!(p.m, expect.m);
}

#[test]
fn q_floor_equals_branch_formulas() {
    use std::f64::consts::FRAC_PI_6;
    // Shallow branch: 2 sin^3(gamma).
    let g = 0.4;
    assert!((q_star(g).unwrap() - 2.0 * g.sin().powi(3)).abs() <= 1e-15);
    // Steep branch: 1.5 sin(gamma) - 0.5.
    let g = 1.2;
    assert!((q_star(g).unwrap() - (1.5 * g.sin() - 0.5)).abs() <= 1e-15);
    // The two branches agree at the changeover.
    let lo = q_star(FRAC_PI_6 - 1e-12).unwrap();
    let hi = q_star(FRAC_PI_6 + 1e-12).unwrap();
    assert!((lo - hi).abs() <= 1e-9);
}
