//! Collision probabilities of the supported families and the exponents they
//! induce for the hypercube index.
//!
//! Logarithms in exponents are base 2, matching `n = 2^{d'}`.

use std::f64::consts::{FRAC_2_PI, LOG2_E, PI, SQRT_2};

use crate::error::{parameter, Result};

/// Collision probability of the random-line family at distance `eta` with
/// bucket width `w`:
///
/// `erf(w / (√2·eta)) − √(2/π)·(eta / w)·(1 − exp(−w² / (2·eta²)))`,
///
/// the closed form of `∫_0^w 2/(√(2π)·eta)·exp(−t²/(2·eta²))·(1 − t/w) dt`.
/// `erf` comes from `libm` (a port of the FreeBSD msun implementation, well
/// under 1e-15 absolute error).
pub fn collision_prob_l2(eta: f64, w: f64) -> Result<f64> {
    if !(eta > 0.0 && eta.is_finite()) || !(w > 0.0 && w.is_finite()) {
        return Err(parameter(format!("distance and width must be positive, got ({eta}, {w})")));
    }
    let s = w / eta;
    let p = libm::erf(s / SQRT_2) - FRAC_2_PI.sqrt() / s * -libm::expm1(-0.5 * s * s);
    Ok(p.clamp(0.0, 1.0))
}

/// Collision probability of `k` concatenated hyperplane hashes for two unit
/// vectors at angle `theta`: `(1 − θ/π)^k`.
pub fn collision_prob_hyperplane(theta: f64, k: u32) -> Result<f64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(parameter(format!("angle must be in [0, π], got {theta}")));
    }
    Ok((1.0 - theta / PI).powi(k as i32))
}

/// The exponent `δ = (p1 − p2)² / (1 − p2) · log2(e) / 4` governing the
/// `n^{1−δ}` candidate bound of the hypercube index.
pub fn delta_exponent(p1: f64, p2: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p2) || !(p1 > p2 && p1 <= 1.0) {
        return Err(parameter(format!("need 0 <= p2 < p1 <= 1, got p1={p1}, p2={p2}")));
    }
    Ok((p1 - p2).powi(2) / (1.0 - p2) * LOG2_E / 4.0)
}

/// Binary entropy in bits, with `H(0) = H(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(parameter(format!("entropy argument must be in [0, 1], got {x}")));
    }
    let term = |y: f64| if y == 0.0 { 0.0 } else { -y * y.log2() };
    Ok(term(x) + term(1.0 - x))
}

/// `(p1, p2, r1, r2)` sensitivity of a family: pairs within `r1` collide with
/// probability at least `p1`, pairs beyond `r2` with probability at most `p2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityParams {
    pub p1: f64,
    pub p2: f64,
    pub r1: f64,
    pub r2: f64,
}

impl SensitivityParams {
    pub fn new(p1: f64, p2: f64, r1: f64, r2: f64) -> Result<Self> {
        if !(p1 > 0.0 && p1 <= 1.0) || !(0.0..1.0).contains(&p2) || p1 <= p2 {
            return Err(parameter(format!("need 0 <= p2 < p1 <= 1, got p1={p1}, p2={p2}")));
        }
        if !(r1 > 0.0 && r1 < r2 && r2.is_finite()) {
            return Err(parameter(format!("need 0 < r1 < r2, got r1={r1}, r2={r2}")));
        }
        Ok(Self { p1, p2, r1, r2 })
    }

    /// Sensitivity of the random-line family at radius `r` and approximation `c`
    /// with bucket width `w`.
    pub fn random_line(r: f64, c: f64, w: f64) -> Result<Self> {
        check_c(c)?;
        Self::new(collision_prob_l2(r, w)?, collision_prob_l2(c * r, w)?, r, c * r)
    }

    /// Sensitivity of `k` concatenated shifted grids of side `α·r` under ℓ1:
    /// `p1 = (1 − 1/α)^k`, `p2 = (1 − c/(c + α))^k`.
    pub fn grid_l1(r: f64, c: f64, alpha: f64, k: u32) -> Result<Self> {
        check_c(c)?;
        if !(alpha > 1.0) {
            return Err(parameter(format!("grid scale alpha must exceed 1, got {alpha}")));
        }
        let p1 = (1.0 - 1.0 / alpha).powi(k as i32);
        let p2 = (1.0 - c / (c + alpha)).powi(k as i32);
        Self::new(p1, p2, r, c * r)
    }

    pub fn delta(&self) -> f64 {
        delta_exponent(self.p1, self.p2).expect("validated on construction")
    }
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 1.0 && c.is_finite()) {
        return Err(parameter(format!("approximation factor must exceed 1, got {c}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_buckets_always_collide() {
        // the deficit decays like √(2/π)/w
        let p = collision_prob_l2(1.0, 100.0).unwrap();
        let expected = 1.0 - FRAC_2_PI.sqrt() / 100.0;
        assert!((p - expected).abs() < 1e-12, "{p}");
        let p = collision_prob_l2(1.0, 1e7).unwrap();
        assert!((p - 1.0).abs() < 1e-6, "{p}");
    }

    #[test]
    fn scale_pairs() {
        let a = collision_prob_l2(2.0, 2.0).unwrap();
        let b = collision_prob_l2(1.0, 1.0).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_positive_inputs() {
        assert!(collision_prob_l2(0.0, 1.0).is_err());
        assert!(collision_prob_l2(1.0, -1.0).is_err());
        assert!(collision_prob_l2(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn delta_at_extremes() {
        let d = delta_exponent(1.0, 0.0).unwrap();
        assert!((d - LOG2_E / 4.0).abs() < 1e-15);
        assert!((d - 0.3607).abs() < 1e-4);
        assert!(delta_exponent(0.3, 0.4).is_err());
        assert!(delta_exponent(0.4, 0.4).is_err());
    }

    #[test]
    fn delta_for_c_two() {
        let s = SensitivityParams::random_line(1.0, 2.0, 2.0).unwrap();
        assert!(s.delta() >= 0.03);
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.11).unwrap() - binary_entropy(0.89).unwrap()).abs() < 1e-15);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn grid_sensitivity_formula() {
        let s = SensitivityParams::grid_l1(1.0, 2.0, 10.0, 10).unwrap();
        assert!((s.p1 - 0.9f64.powi(10)).abs() < 1e-15);
        assert!((s.p2 - (10.0f64 / 12.0).powi(10)).abs() < 1e-15);
    }

    #[test]
    fn hyperplane_probability() {
        assert_eq!(collision_prob_hyperplane(0.0, 3).unwrap(), 1.0);
        assert!((collision_prob_hyperplane(PI / 2.0, 2).unwrap() - 0.25).abs() < 1e-15);
        assert!(collision_prob_hyperplane(4.0, 1).is_err());
    }
}
