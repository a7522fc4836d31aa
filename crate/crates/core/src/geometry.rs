//! Planar vectors, rotations, orthogonal projectors and the field-of-view cone.
//!
//! Conventions: world frame is right-handed, angles are radians, positive
//! rotations are counter-clockwise. A field of view is a closed cone of
//! half-angle `gamma` around a unit bisector anchored at the relay.

use std::f64::consts::FRAC_PI_2;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use thiserror::Error;

/// Two points closer than this are treated as coincident and yield no bearing.
pub const TOL_COINCIDENT: f64 = 1e-9;

/// Squared-norm slack accepted by [`UnitVec2::new`].
pub const TOL_UNIT: f64 = 1e-12;

/// Slack on the cone border tests so that boundary bearings count as inside.
pub const TOL_FOV: f64 = 1e-9;

/// True when `x` is finite and strictly greater than `floor`.
///
/// Validation and division guards use this instead of a bare `x > floor` so
/// that NaN and infinity land on the rejecting side: a NaN compares false
/// against everything, which silently inverts any negated comparison, and an
/// infinite norm or distance would otherwise flow into a division and come
/// out as NaN components.
#[inline]
#[must_use]
pub fn finite_above(x: f64, floor: f64) -> bool {
    x.is_finite() && x > floor
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("points are coincident (distance {distance:.3e} m)")]
    CoincidentPoints { distance: f64 },
    #[error("vector ({x}, {y}) is not unit length")]
    NotUnit { x: f64, y: f64 },
    #[error("field-of-view half-angle {gamma} outside (0, pi/2]")]
    InvalidAngle { gamma: f64 },
    #[error("transient margin infeasible: T_r * v_max = {product} exceeds epsilon = {epsilon}")]
    MarginInfeasible { product: f64, epsilon: f64 },
}

/// Plain planar vector. Components are expected finite; constructors on the
/// validated types below reject anything else.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product; positive when `other` lies
    /// counter-clockwise of `self`.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (other - self).norm()
    }

    /// Counter-clockwise quarter turn.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn normalize(self) -> Result<UnitVec2, GeometryError> {
        let n = self.norm();
        if !finite_above(n, TOL_COINCIDENT) {
            return Err(GeometryError::CoincidentPoints { distance: n });
        }
        Ok(UnitVec2 {
            x: self.x / n,
            y: self.y / n,
        })
    }

    /// Rescale to `max_norm` if longer, preserving direction.
    pub fn clamp_norm(self, max_norm: f64) -> Vec2 {
        let n = self.norm();
        if n > max_norm {
            self * (max_norm / n)
        } else {
            self
        }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Unit-length direction. The constructor accepts components whose squared
/// norm is within [`TOL_UNIT`] of one and keeps them bit-for-bit, so a
/// serialized direction reconstructs exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitVec2 {
    x: f64,
    y: f64,
}

impl UnitVec2 {
    pub fn new(x: f64, y: f64) -> Result<Self, GeometryError> {
        let n2 = x * x + y * y;
        let off_unit = (n2 - 1.0).abs();
        if off_unit.is_nan() || off_unit > TOL_UNIT {
            return Err(GeometryError::NotUnit { x, y });
        }
        Ok(UnitVec2 { x, y })
    }

    pub fn from_angle(theta: f64) -> Self {
        UnitVec2 {
            x: theta.cos(),
            y: theta.sin(),
        }
    }

    pub fn x(self) -> f64 {
        self.x
    }

    pub fn y(self) -> f64 {
        self.y
    }

    pub fn as_vec2(self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn dot(self, other: UnitVec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: UnitVec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    /// Signed angle from `self` to `other` in (-pi, pi].
    pub fn angle_to(self, other: UnitVec2) -> f64 {
        self.cross(other).atan2(self.dot(other))
    }

    /// Rotation preserves length, so no revalidation is needed.
    pub fn rotated(self, alpha: f64) -> UnitVec2 {
        let v = rotate(alpha, self.as_vec2());
        UnitVec2 { x: v.x, y: v.y }
    }

    pub fn perp(self) -> UnitVec2 {
        UnitVec2 {
            x: -self.y,
            y: self.x,
        }
    }
}

impl Neg for UnitVec2 {
    type Output = UnitVec2;
    fn neg(self) -> UnitVec2 {
        UnitVec2 {
            x: -self.x,
            y: -self.y,
        }
    }
}

/// Row-major 2x2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        m: [[1.0, 0.0], [0.0, 1.0]],
    };

    pub fn apply(self, v: Vec2) -> Vec2 {
        Vec2::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y,
            self.m[1][0] * v.x + self.m[1][1] * v.y,
        )
    }

    pub fn transpose(self) -> Mat2 {
        Mat2 {
            m: [[self.m[0][0], self.m[1][0]], [self.m[0][1], self.m[1][1]]],
        }
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        Mat2 {
            m: [
                [self.m[0][0] + rhs.m[0][0], self.m[0][1] + rhs.m[0][1]],
                [self.m[1][0] + rhs.m[1][0], self.m[1][1] + rhs.m[1][1]],
            ],
        }
    }
}

/// Unit bearing from `from` to `to`.
pub fn bearing(from: Vec2, to: Vec2) -> Result<UnitVec2, GeometryError> {
    (to - from).normalize()
}

/// Orthogonal projector onto the line perpendicular to `g`: I - g g^T.
/// Symmetric, idempotent, and annihilates `g`.
pub fn projector(g: UnitVec2) -> Mat2 {
    let (x, y) = (g.x(), g.y());
    Mat2 {
        m: [[1.0 - x * x, -x * y], [-x * y, 1.0 - y * y]],
    }
}

/// Counter-clockwise rotation of `v` by `alpha`.
pub fn rotate(alpha: f64, v: Vec2) -> Vec2 {
    let (s, c) = alpha.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

pub fn rotation(alpha: f64) -> Mat2 {
    let (s, c) = alpha.sin_cos();
    Mat2 {
        m: [[c, -s], [s, c]],
    }
}

/// Sensing cone of half-angle `gamma` around `bisector`.
///
/// `border1` sits at `-gamma` from the bisector, `border2` at `+gamma`;
/// their mutual angle is `2 gamma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FovConfig {
    bisector: UnitVec2,
    border1: UnitVec2,
    border2: UnitVec2,
    gamma: f64,
}

impl FovConfig {
    pub fn bisector(&self) -> UnitVec2 {
        self.bisector
    }

    pub fn border1(&self) -> UnitVec2 {
        self.border1
    }

    pub fn border2(&self) -> UnitVec2 {
        self.border2
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Outward escape direction perpendicular to the given border (1 or 2).
    pub fn escape_perp(&self, border: usize) -> UnitVec2 {
        match border {
            1 => self.border1.rotated(-FRAC_PI_2),
            2 => self.border2.rotated(FRAC_PI_2),
            _ => panic!("border index must be 1 or 2"),
        }
    }
}

/// Build a cone from its bisector and half-angle `gamma` in (0, pi/2].
pub fn make_fov(bisector: UnitVec2, gamma: f64) -> Result<FovConfig, GeometryError> {
    if !(gamma > 0.0 && gamma <= FRAC_PI_2) {
        return Err(GeometryError::InvalidAngle { gamma });
    }
    Ok(FovConfig {
        bisector,
        border1: bisector.rotated(-gamma),
        border2: bisector.rotated(gamma),
        gamma,
    })
}

/// Closed-cone membership with [`TOL_FOV`] slack, so borders are inside.
pub fn in_fov(g: UnitVec2, fov: &FovConfig) -> bool {
    let n1 = fov.border1.perp(); // inward normal of border 1
    let n2 = fov.border2.perp(); // outward normal of border 2
    n1.dot(g) >= -TOL_FOV && n2.dot(g) <= TOL_FOV
}

/// Signed angular distance from `g` to the nearest cone border: `gamma` on
/// the bisector, zero on a border, negative outside the cone.
pub fn angular_margin(g: UnitVec2, fov: &FovConfig) -> f64 {
    fov.gamma - fov.bisector.angle_to(g).abs()
}

/// Extra margin `lambda* = asin(T_r v_max / epsilon)` absorbing a reaction
/// delay `T_r` before the avoidance response engages.
pub fn transient_margin(t_r: f64, v_max: f64, epsilon: f64) -> Result<f64, GeometryError> {
    let product = t_r * v_max;
    if product.is_nan() || product > epsilon {
        return Err(GeometryError::MarginInfeasible { product, epsilon });
    }
    Ok((product / epsilon).asin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};

    const HALF_SQRT_2: f64 = SQRT_2 / 2.0;

    fn down() -> UnitVec2 {
        UnitVec2::new(0.0, -1.0).unwrap()
    }

    #[test]
    fn bearing_unit_and_direction() {
        let g = bearing(Vec2::new(1.0, 1.0), Vec2::new(4.0, 5.0)).unwrap();
        assert!((g.x() - 0.6).abs() < 1e-15);
        assert!((g.y() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn bearing_rejects_coincident_points() {
        let p = Vec2::new(2.0, -3.0);
        let q = Vec2::new(2.0, -3.0 + 0.5e-9);
        assert!(matches!(
            bearing(p, q),
            Err(GeometryError::CoincidentPoints { .. })
        ));
    }

    #[test]
    fn bearing_rejects_non_finite() {
        assert!(bearing(Vec2::new(0.0, 0.0), Vec2::new(f64::NAN, 1.0)).is_err());
    }

    #[test]
    fn projector_of_diagonal_unit() {
        let g = UnitVec2::new(HALF_SQRT_2, HALF_SQRT_2).unwrap();
        let p = projector(g);
        for (i, j, want) in [(0, 0, 0.5), (0, 1, -0.5), (1, 0, -0.5), (1, 1, 0.5)] {
            assert!((p.m[i][j] - want).abs() < 1e-15, "entry ({i},{j})");
        }
    }

    #[test]
    fn rotate_quarter_turn() {
        let v = rotate(FRAC_PI_2, Vec2::new(1.0, 0.0));
        assert!(v.x.abs() < 1e-15 && (v.y - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fov_borders_match_quarter_cone() {
        let fov = make_fov(down(), FRAC_PI_4).unwrap();
        assert!((fov.border1().x() + HALF_SQRT_2).abs() < 1e-15);
        assert!((fov.border1().y() + HALF_SQRT_2).abs() < 1e-15);
        assert!((fov.border2().x() - HALF_SQRT_2).abs() < 1e-15);
        assert!((fov.border2().y() + HALF_SQRT_2).abs() < 1e-15);
        assert!((fov.border1().dot(fov.border2()) - (2.0 * FRAC_PI_4).cos()).abs() < 1e-10);
    }

    #[test]
    fn make_fov_rejects_bad_angles() {
        for gamma in [0.0, -0.1, FRAC_PI_2 + 1e-6, PI] {
            assert!(matches!(
                make_fov(down(), gamma),
                Err(GeometryError::InvalidAngle { .. })
            ));
        }
        assert!(make_fov(down(), FRAC_PI_2).is_ok());
    }

    #[test]
    fn in_fov_boundary_and_outside() {
        let fov = make_fov(down(), FRAC_PI_4).unwrap();
        assert!(in_fov(fov.bisector(), &fov));
        assert!(in_fov(fov.border1(), &fov));
        assert!(in_fov(fov.border2(), &fov));
        assert!(!in_fov(down().rotated(FRAC_PI_4 + 1e-6), &fov));
        assert!(!in_fov(-fov.bisector(), &fov));
    }

    #[test]
    fn margin_values() {
        let fov = make_fov(down(), FRAC_PI_4).unwrap();
        assert!((angular_margin(fov.bisector(), &fov) - FRAC_PI_4).abs() < 1e-15);
        assert!(angular_margin(fov.border1(), &fov).abs() < 1e-15);
        let inside = down().rotated(FRAC_PI_4 / 2.0);
        assert!((angular_margin(inside, &fov) - FRAC_PI_4 / 2.0).abs() < 1e-12);
        assert!(angular_margin(down().rotated(FRAC_PI_4 + 0.1), &fov) < 0.0);
    }

    #[test]
    fn escape_perp_points_out_of_cone() {
        let fov = make_fov(down(), FRAC_PI_4).unwrap();
        let e1 = fov.escape_perp(1);
        assert!((e1.x() + HALF_SQRT_2).abs() < 1e-15);
        assert!((e1.y() - HALF_SQRT_2).abs() < 1e-15);
        // Perpendicular to its border and on the non-bisector side.
        assert!(e1.dot(fov.border1()).abs() < 1e-15);
        assert!(e1.dot(fov.bisector()) < 0.0);
        let e2 = fov.escape_perp(2);
        assert!(e2.dot(fov.border2()).abs() < 1e-15);
        assert!(e2.dot(fov.bisector()) < 0.0);
    }

    #[test]
    fn transient_margin_values() {
        let lambda = transient_margin(0.1, 5.0, 5.0).unwrap();
        assert!((lambda - 0.1f64.asin()).abs() < 1e-15);
        assert_eq!(transient_margin(0.0, 5.0, 5.0).unwrap(), 0.0);
        assert!(matches!(
            transient_margin(1.1, 5.0, 5.0),
            Err(GeometryError::MarginInfeasible { .. })
        ));
    }

    #[test]
    fn unit_vec_rejects_non_unit() {
        assert!(UnitVec2::new(0.5, 0.5).is_err());
        assert!(UnitVec2::new(f64::NAN, 0.0).is_err());
        assert!(UnitVec2::new(1.0, 0.0).is_ok());
    }
}
