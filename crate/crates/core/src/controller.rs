//! Switching bearing-only control for the relay vehicle.
//!
//! The relay measures unit bearings to the agents and steers so that all of
//! them stay inside its sensing cone. Depending on whether the agents sit on
//! one or both sides of the cone bisector, the law tracks either the single
//! bearing closest to a border or one bearing per border.

use std::f64::consts::FRAC_PI_2;

use crate::geometry::{projector, FovConfig, UnitVec2, Vec2};
use crate::qgamma;

/// Zero band of the side discriminator: bearings this close to the bisector
/// plane count as on it, keeping the label stable under round-off.
pub const TOL_SIDE: f64 = 1e-12;

/// Zero band of the pairwise side test in [`chi_2`].
pub const TOL_SIGN: f64 = 1e-12;

/// Non-empty collection of unit bearings, indexed as given.
#[derive(Clone, Debug)]
pub struct BearingSet {
    bearings: Vec<UnitVec2>,
}

impl BearingSet {
    /// At least one bearing is required.
    pub fn new(bearings: Vec<UnitVec2>) -> Option<Self> {
        if bearings.is_empty() {
            None
        } else {
            Some(BearingSet { bearings })
        }
    }

    pub fn len(&self) -> usize {
        self.bearings.len()
    }

    pub fn is_empty(&self) -> bool {
        // Empty sets are rejected at construction.
        self.bearings.is_empty()
    }

    pub fn get(&self, i: usize) -> UnitVec2 {
        self.bearings[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = UnitVec2> + '_ {
        self.bearings.iter().copied()
    }
}

/// Position of a bearing relative to the cone bisector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SideLabel {
    OnBisector = 1,
    Left = 2,
    Right = 3,
}

/// Tally of side labels over a bearing set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SideCounts {
    pub on_bisector: usize,
    pub left: usize,
    pub right: usize,
}

/// Which branch of the switching law produced a command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// All off-bisector bearings share a side; one bearing is tracked.
    SameSide,
    /// Bearings straddle the bisector; one bearing per border is tracked.
    OppositeSides,
}

/// Velocity command together with the switching state that produced it.
#[derive(Clone, Debug)]
pub struct ControlDecision {
    pub u_r: Vec2,
    pub chi_n: i32,
    /// Indices of the bearings entering the active branch.
    pub selected: Vec<usize>,
    pub branch: Branch,
}

/// Gain bundle for a scenario: agent count, speed cap and relay gain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainSpec {
    pub v_max: f64,
    pub gamma: f64,
    pub n: usize,
    pub k_r: f64,
}

/// Side of the bisector the bearing lies on. The discriminant is the
/// projection onto the border chord, which points from border 1 (left) to
/// border 2 (right).
pub fn side(g: UnitVec2, fov: &FovConfig) -> SideLabel {
    let chord = fov.border2().as_vec2() - fov.border1().as_vec2();
    let t = g.as_vec2().dot(chord);
    if t.abs() <= TOL_SIDE {
        SideLabel::OnBisector
    } else if t < 0.0 {
        SideLabel::Left
    } else {
        SideLabel::Right
    }
}

pub fn side_counts(labels: &[SideLabel]) -> SideCounts {
    let mut c = SideCounts::default();
    for l in labels {
        match l {
            SideLabel::OnBisector => c.on_bisector += 1,
            SideLabel::Left => c.left += 1,
            SideLabel::Right => c.right += 1,
        }
    }
    c
}

/// Switching signal over the whole bearing set: +1 when at least two
/// bearings share a side and none sits on the other, 0 when at most one
/// bearing is off the bisector, -1 when both sides are occupied.
pub fn chi_n(bearings: &BearingSet, fov: &FovConfig) -> i32 {
    let labels: Vec<SideLabel> = bearings.iter().map(|g| side(g, fov)).collect();
    let c = side_counts(&labels);
    let n = bearings.len();
    let one_sided = c.left.max(c.right);
    if one_sided == n - c.on_bisector && one_sided >= 2 {
        1
    } else if c.on_bisector >= n - 1 {
        0
    } else {
        -1
    }
}

/// Two-agent switching signal from the sign of the projected bearing pair.
/// Agrees with [`chi_n`] on two-element sets away from the zero bands.
pub fn chi_2(g1: UnitVec2, g2: UnitVec2, fov: &FovConfig) -> i32 {
    let p = projector(fov.bisector());
    let t = g1.as_vec2().dot(p.apply(g2.as_vec2()));
    if t.abs() <= TOL_SIGN {
        0
    } else if t > 0.0 {
        1
    } else {
        -1
    }
}

/// Index of the bearing closest to either border; ties resolve to the
/// lowest index.
pub fn closest_to_border(bearings: &BearingSet, fov: &FovConfig) -> usize {
    let mut best = 0usize;
    let mut best_dot = f64::NEG_INFINITY;
    for (i, g) in bearings.iter().enumerate() {
        let d = g.dot(fov.border1()).max(g.dot(fov.border2()));
        if d > best_dot {
            best_dot = d;
            best = i;
        }
    }
    best
}

/// Indices of the bearings closest to border 1 and border 2 respectively;
/// ties resolve to the lowest index.
pub fn closest_per_border(bearings: &BearingSet, fov: &FovConfig) -> (usize, usize) {
    let mut best = [0usize; 2];
    let mut best_dot = [f64::NEG_INFINITY; 2];
    for (i, g) in bearings.iter().enumerate() {
        for (j, border) in [fov.border1(), fov.border2()].into_iter().enumerate() {
            let d = g.dot(border);
            if d > best_dot[j] {
                best_dot[j] = d;
                best[j] = i;
            }
        }
    }
    (best[0], best[1])
}

/// Single-agent law: push the bearing toward the bisector.
pub fn control_single(g: UnitVec2, fov: &FovConfig, k_r: f64) -> Vec2 {
    debug_assert!(k_r > 0.0);
    projector(g).apply(fov.bisector().as_vec2()) * (-k_r)
}

/// General switching law over a bearing set.
pub fn control_general(bearings: &BearingSet, fov: &FovConfig, k_r: f64) -> ControlDecision {
    debug_assert!(k_r > 0.0);
    let chi = chi_n(bearings, fov);
    let g_star = fov.bisector().as_vec2();
    if chi >= 0 {
        let i = closest_to_border(bearings, fov);
        ControlDecision {
            u_r: projector(bearings.get(i)).apply(g_star) * (-k_r),
            chi_n: chi,
            selected: vec![i],
            branch: Branch::SameSide,
        }
    } else {
        let (i1, i2) = closest_per_border(bearings, fov);
        let p = projector(bearings.get(i1)) + projector(bearings.get(i2));
        ControlDecision {
            u_r: p.apply(g_star) * (-k_r),
            chi_n: chi,
            selected: vec![i1, i2],
            branch: Branch::OppositeSides,
        }
    }
}

/// Smallest gain that holds the worst-case escape: `v_max / sin(gamma)` for
/// one agent, `v_max / q_star(gamma)` for several.
pub fn critical_gain(v_max: f64, gamma: f64, n: usize) -> f64 {
    assert!(v_max > 0.0, "agent speed cap must be positive");
    assert!(
        gamma > 0.0 && gamma <= FRAC_PI_2,
        "half-angle outside (0, pi/2]"
    );
    assert!(n >= 1, "at least one agent");
    if n == 1 {
        v_max / gamma.sin()
    } else {
        v_max / qgamma::q_star(gamma).expect("gamma validated above")
    }
}

/// Gain bound `v_max / sin^3(gamma)`, sufficient for any agent count but
/// far more conservative than [`critical_gain`].
pub fn conservative_gain_bound(v_max: f64, gamma: f64) -> f64 {
    assert!(v_max > 0.0, "agent speed cap must be positive");
    assert!(
        gamma > 0.0 && gamma <= FRAC_PI_2,
        "half-angle outside (0, pi/2]"
    );
    let s = gamma.sin();
    v_max / (s * s * s)
}
