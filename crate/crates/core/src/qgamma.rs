//! Capacity profile of the dual-projector control branch.
//!
//! `q_gamma(gamma, phi)` is the speed per unit gain that the two-projector
//! law delivers along the escape direction of an agent pinned on one cone
//! border, when the other selected bearing sits `phi` inside the opposite
//! border. Its minimum over `phi` fixes the critical gain: any gain at least
//! `v_max / q_star(gamma)` can hold the worst-case geometry.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6};

use thiserror::Error;

/// Bracket width at which the golden-section refinement stops.
const BRUTEFORCE_TOL: f64 = 1e-10;

/// Inverse golden ratio, the section step of the refinement loop.
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Half-width of the interval around the slope breakpoint that
/// [`q_derivative`] refuses to evaluate.
const TOL_KINK: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum QGammaError {
    #[error("arguments outside domain: gamma = {gamma}, phi = {phi}")]
    DomainError { gamma: f64, phi: f64 },
    #[error("profile is not differentiable at phi = {phi} for gamma = {gamma}")]
    NotDifferentiable { gamma: f64, phi: f64 },
}

/// Which expression attains the minimum of the profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GammaBranch {
    /// `gamma <= pi/6`: the profile is increasing, minimum at `phi = 0`.
    SmallGamma,
    /// `gamma > pi/6`: interior minimum at `phi = 3 gamma / 2 - pi / 4`.
    LargeGamma,
}

/// Minimizer of the capacity profile together with the attained value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QGammaResult {
    pub phi_star: f64,
    pub q_star: f64,
    pub branch: GammaBranch,
}

fn check_domain(gamma: f64, phi: f64) -> Result<(), QGammaError> {
    if gamma > 0.0 && gamma <= FRAC_PI_2 && phi >= 0.0 && phi <= gamma {
        Ok(())
    } else {
        Err(QGammaError::DomainError { gamma, phi })
    }
}

/// Profile value on the validated domain; shared by the public entry points.
fn q_eval(gamma: f64, phi: f64) -> f64 {
    let sg = gamma.sin();
    let sd = (gamma - phi).sin();
    sg * sg * sg + sg * sd * sd + gamma.cos() * phi.sin() * (2.0 * gamma - phi).cos().abs()
}

/// Capacity profile `q_gamma(phi)` for `gamma` in (0, pi/2], `phi` in [0, gamma].
pub fn q_gamma(gamma: f64, phi: f64) -> Result<f64, QGammaError> {
    check_domain(gamma, phi)?;
    Ok(q_eval(gamma, phi))
}

/// Radical form of the profile, kept as an independent cross-check of
/// [`q_gamma`]. The radicand is mathematically a perfect square; it is
/// clamped at zero against round-off.
pub fn q_gamma_radical(gamma: f64, phi: f64) -> Result<f64, QGammaError> {
    check_domain(gamma, phi)?;
    let sg = gamma.sin();
    let sd = (gamma - phi).sin();
    let s2 = sg * sg + sd * sd;
    let radicand = s2 - 2.0 * (2.0 * gamma - phi).cos() * sg * sd - s2 * s2;
    Ok(sg * sg * sg + sg * sd * sd + gamma.cos() * radicand.max(0.0).sqrt())
}

/// Minimum of the profile over `phi`.
pub fn q_star(gamma: f64) -> Result<f64, QGammaError> {
    Ok(phi_star(gamma)?.q_star)
}

/// Closed-form minimizer of the profile.
pub fn phi_star(gamma: f64) -> Result<QGammaResult, QGammaError> {
    check_domain(gamma, 0.0)?;
    if gamma <= FRAC_PI_6 {
        let s = gamma.sin();
        Ok(QGammaResult {
            phi_star: 0.0,
            q_star: 2.0 * s * s * s,
            branch: GammaBranch::SmallGamma,
        })
    } else {
        Ok(QGammaResult {
            phi_star: 1.5 * gamma - FRAC_PI_4,
            q_star: 1.5 * gamma.sin() - 0.5,
            branch: GammaBranch::LargeGamma,
        })
    }
}

/// Breakpoint of the absolute-value factor, where the slope jumps.
/// Interior to the domain only for `gamma` in [pi/4, pi/2).
pub fn kink(gamma: f64) -> Option<f64> {
    if (FRAC_PI_4..FRAC_PI_2).contains(&gamma) {
        Some(2.0 * gamma - FRAC_PI_2)
    } else {
        None
    }
}

/// First derivative of the profile in `phi`.
pub fn q_derivative(gamma: f64, phi: f64) -> Result<f64, QGammaError> {
    check_domain(gamma, phi)?;
    if let Some(k) = kink(gamma) {
        if (phi - k).abs() <= TOL_KINK {
            return Err(QGammaError::NotDifferentiable { gamma, phi });
        }
    }
    let sign = (2.0 * gamma - phi).cos().signum();
    let two_d = 2.0 * (gamma - phi);
    Ok(sign * gamma.cos() * two_d.cos() - gamma.sin() * two_d.sin())
}

/// Second derivative `2 sin(3 gamma - 2 phi)`, defined where the profile is
/// twice differentiable: right of the slope breakpoint for `gamma` in
/// [pi/4, pi/2), everywhere for `gamma < pi/4` or `gamma = pi/2`.
pub fn q_second_derivative(gamma: f64, phi: f64) -> Result<f64, QGammaError> {
    check_domain(gamma, phi)?;
    if gamma < FRAC_PI_2 {
        if let Some(k) = kink(gamma) {
            if !(phi > k && phi < gamma) {
                return Err(QGammaError::DomainError { gamma, phi });
            }
        }
    }
    Ok(2.0 * (3.0 * gamma - 2.0 * phi).sin())
}

/// Grid scan plus golden-section refinement of the profile minimum.
///
/// Independent of [`phi_star`]; used to validate the closed form. The profile
/// is unimodal, so the bracket around the best grid point contains the
/// minimum and the section search converges on it.
pub fn q_min_bruteforce(gamma: f64, samples: usize) -> Result<(f64, f64), QGammaError> {
    check_domain(gamma, 0.0)?;
    assert!(samples >= 1000, "grid too coarse for a reliable bracket");

    let step = gamma / (samples - 1) as f64;
    let mut best = 0usize;
    let mut best_q = f64::INFINITY;
    for i in 0..samples {
        let q = q_eval(gamma, (i as f64) * step);
        if q < best_q {
            best_q = q;
            best = i;
        }
    }

    let mut lo = if best > 0 {
        (best - 1) as f64 * step
    } else {
        0.0
    };
    let mut hi = ((best + 1).min(samples - 1)) as f64 * step;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut q1 = q_eval(gamma, x1);
    let mut q2 = q_eval(gamma, x2);
    while hi - lo > BRUTEFORCE_TOL {
        if q1 < q2 {
            hi = x2;
            x2 = x1;
            q2 = q1;
            x1 = hi - INV_PHI * (hi - lo);
            q1 = q_eval(gamma, x1);
        } else {
            lo = x1;
            x1 = x2;
            q1 = q2;
            x2 = lo + INV_PHI * (hi - lo);
            q2 = q_eval(gamma, x2);
        }
    }
    let phi = 0.5 * (lo + hi);
    Ok((phi, q_eval(gamma, phi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_8, PI, SQRT_2};

    #[test]
    fn half_pi_profile_is_one_plus_cos_squared() {
        for phi in [0.0, 0.3, FRAC_PI_4, 1.2, FRAC_PI_2] {
            let want = 1.0 + phi.cos() * phi.cos();
            assert!((q_gamma(FRAC_PI_2, phi).unwrap() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn endpoint_values() {
        for gamma in [0.2, FRAC_PI_6, 0.7, FRAC_PI_4, 1.3, FRAC_PI_2] {
            let s = gamma.sin();
            assert!((q_gamma(gamma, 0.0).unwrap() - 2.0 * s * s * s).abs() < 1e-14);
            assert!((q_gamma(gamma, gamma).unwrap() - s).abs() < 1e-14);
        }
    }

    #[test]
    fn quarter_pi_minimum() {
        let want = (3.0 * SQRT_2 - 2.0) / 4.0;
        assert!((q_gamma(FRAC_PI_4, FRAC_PI_8).unwrap() - want).abs() < 1e-15);
        let r = phi_star(FRAC_PI_4).unwrap();
        assert_eq!(r.phi_star, FRAC_PI_8);
        assert!((r.q_star - want).abs() < 1e-15);
        assert_eq!(r.branch, GammaBranch::LargeGamma);
    }

    #[test]
    fn branch_boundary_is_continuous() {
        let small = phi_star(FRAC_PI_6).unwrap();
        assert_eq!(small.branch, GammaBranch::SmallGamma);
        assert_eq!(small.phi_star, 0.0);
        assert!((small.q_star - 0.25).abs() < 1e-15);
        let just_above = phi_star(FRAC_PI_6 + 1e-9).unwrap();
        assert_eq!(just_above.branch, GammaBranch::LargeGamma);
        assert!((just_above.q_star - 0.25).abs() < 1e-8);
        assert!(just_above.phi_star.abs() < 1e-8);
    }

    #[test]
    fn minimum_satisfies_profile() {
        for gamma in [0.05, 0.4, FRAC_PI_6, 0.6, FRAC_PI_4, 1.0, 1.4, FRAC_PI_2] {
            let r = phi_star(gamma).unwrap();
            let q = q_gamma(gamma, r.phi_star).unwrap();
            assert!((q - r.q_star).abs() <= 1e-12, "gamma = {gamma}");
        }
    }

    #[test]
    fn radical_form_agrees() {
        for gamma in [0.1, 0.5, FRAC_PI_4, 1.1, FRAC_PI_2] {
            for i in 0..=100 {
                let phi = gamma * (i as f64) / 100.0;
                let a = q_gamma(gamma, phi).unwrap();
                let b = q_gamma_radical(gamma, phi).unwrap();
                // The radicand cancels to ~0 where the third term vanishes;
                // the square root turns 1e-16 round-off into ~1e-8 there.
                let third = phi.sin() * (2.0 * gamma - phi).cos();
                let tol = if third.abs() > 1e-3 { 1e-10 } else { 5e-8 };
                assert!((a - b).abs() <= tol, "gamma = {gamma}, phi = {phi}");
            }
        }
    }

    #[test]
    fn radicand_is_the_squared_third_term() {
        for gamma in [0.1, 0.5, FRAC_PI_4, 1.1, FRAC_PI_2] {
            for i in 0..=100 {
                let phi = gamma * (i as f64) / 100.0;
                let sg = gamma.sin();
                let sd = (gamma - phi).sin();
                let s2 = sg * sg + sd * sd;
                let radicand = s2 - 2.0 * (2.0 * gamma - phi).cos() * sg * sd - s2 * s2;
                let third = phi.sin() * (2.0 * gamma - phi).cos();
                assert!(
                    (radicand - third * third).abs() <= 1e-12,
                    "gamma = {gamma}, phi = {phi}"
                );
            }
        }
    }

    #[test]
    fn derivative_matches_half_pi_closed_form() {
        for phi in [0.0, 0.4, FRAC_PI_4, 1.0, FRAC_PI_2] {
            let want = -(2.0 * phi).sin();
            assert!((q_derivative(FRAC_PI_2, phi).unwrap() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_vanishes_at_interior_minimum() {
        // phi_star(pi/3) = pi/4, so the slope there is exactly zero.
        let d = q_derivative(FRAC_PI_3, FRAC_PI_4).unwrap();
        assert!(d.abs() < 1e-15);
    }

    #[test]
    fn derivative_kink_is_rejected() {
        assert!(matches!(
            q_derivative(FRAC_PI_4, 0.0),
            Err(QGammaError::NotDifferentiable { .. })
        ));
        assert!(matches!(
            q_derivative(FRAC_PI_3, 2.0 * FRAC_PI_3 - FRAC_PI_2),
            Err(QGammaError::NotDifferentiable { .. })
        ));
        // No breakpoint inside the domain for small gamma or gamma = pi/2.
        assert!(q_derivative(0.5, 0.0).is_ok());
        assert!(q_derivative(FRAC_PI_2, FRAC_PI_2).is_ok());
    }

    #[test]
    fn second_derivative_values_and_region() {
        assert!((q_second_derivative(FRAC_PI_3, FRAC_PI_4).unwrap() - 2.0).abs() < 1e-14);
        assert!((q_second_derivative(FRAC_PI_2, 0.0).unwrap() + 2.0).abs() < 1e-14);
        assert!(q_second_derivative(FRAC_PI_2, FRAC_PI_4).unwrap().abs() < 1e-14);
        // Left of the slope breakpoint the expression does not apply.
        assert!(q_second_derivative(FRAC_PI_3, 0.1).is_err());
        assert!(q_second_derivative(0.5, 0.1).is_ok());
    }

    #[test]
    fn domain_errors() {
        assert!(q_gamma(0.0, 0.0).is_err());
        assert!(q_gamma(FRAC_PI_2 + 1e-9, 0.0).is_err());
        assert!(q_gamma(FRAC_PI_4, -1e-12).is_err());
        assert!(q_gamma(FRAC_PI_4, FRAC_PI_4 + 1e-9).is_err());
        assert!(q_gamma(PI, 0.1).is_err());
    }

    #[test]
    fn bruteforce_matches_closed_form_spot_checks() {
        for gamma in [0.3, FRAC_PI_6, 0.7, FRAC_PI_4, 1.2, FRAC_PI_2] {
            let (phi, q) = q_min_bruteforce(gamma, 4000).unwrap();
            let r = phi_star(gamma).unwrap();
            assert!((phi - r.phi_star).abs() <= 1e-4, "gamma = {gamma}");
            assert!((q - r.q_star).abs() <= 1e-6, "gamma = {gamma}");
        }
    }
}
