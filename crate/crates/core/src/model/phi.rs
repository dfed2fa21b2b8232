//! Odd increasing gradient shapes `phi(s)` used by separable fluxes.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_2_PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phi {
    /// `phi(s) = s`.
    Linear,
    /// `phi(s) = s / (1 + |s|^p)^(1/p)`, saturating at 1.
    RatioP(f64),
    /// `phi(s) = (2/pi) atan(s)`, saturating at 1.
    Atan,
}

impl Phi {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Phi::Linear => s,
            Phi::RatioP(p) => {
                let x = s.abs();
                let v = if x <= 1.0 {
                    x / (1.0 + x.powf(p)).powf(1.0 / p)
                } else {
                    (1.0 + x.powf(-p)).powf(-1.0 / p)
                };
                v.copysign(s)
            }
            Phi::Atan => FRAC_2_PI * s.atan(),
        }
    }

    pub fn deriv(&self, s: f64) -> f64 {
        match *self {
            Phi::Linear => 1.0,
            Phi::RatioP(p) => {
                let x = s.abs();
                if x <= 1.0 {
                    (1.0 + x.powf(p)).powf(-1.0 / p - 1.0)
                } else {
                    x.powf(-(p + 1.0)) * (1.0 + x.powf(-p)).powf(-(p + 1.0) / p)
                }
            }
            Phi::Atan => FRAC_2_PI / (1.0 + s * s),
        }
    }

    /// Supremum of `phi` over `s > 0`.
    pub fn sup(&self) -> f64 {
        match self {
            Phi::Linear => f64::INFINITY,
            Phi::RatioP(_) | Phi::Atan => 1.0,
        }
    }

    /// Inverse on `[0, sup)`; returns `+inf` at or above the supremum.
    pub fn inverse(&self, t: f64) -> f64 {
        if t >= self.sup() {
            return f64::INFINITY;
        }
        match *self {
            Phi::Linear => t,
            Phi::RatioP(p) => {
                let x = t.abs();
                (x / (1.0 - x.powf(p)).powf(1.0 / p)).copysign(t)
            }
            Phi::Atan => (t / FRAC_2_PI).tan(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            Phi::RatioP(p) if !(p.is_finite() && p > 0.0) => Err(format!("ratio_p exponent must be positive, got {p}")),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trips() {
        for phi in [Phi::Linear, Phi::RatioP(2.0), Phi::RatioP(1.5), Phi::Atan] {
            for &s in &[1e-9, 0.01, 0.5, 1.0, 3.0, 40.0] {
                let back = phi.inverse(phi.eval(s));
                assert!((back - s).abs() <= 1e-9 * s.max(1.0), "{phi:?} s={s} back={back}");
            }
        }
    }

    #[test]
    fn ratio_two_matches_closed_form() {
        let phi = Phi::RatioP(2.0);
        let s = 3f64.sqrt();
        assert!((phi.eval(s) - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((phi.inverse(0.6) - 0.75).abs() < 1e-15);
        assert!((phi.deriv(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        for phi in [Phi::RatioP(2.0), Phi::RatioP(3.0), Phi::Atan] {
            for &s in &[0.2, 0.9, 1.0, 1.7, 6.0] {
                let h = 1e-6;
                let fd = (phi.eval(s + h) - phi.eval(s - h)) / (2.0 * h);
                assert!((fd - phi.deriv(s)).abs() < 1e-8, "{phi:?} at {s}");
            }
        }
    }
}
