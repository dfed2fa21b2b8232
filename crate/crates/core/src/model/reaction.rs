use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::tolerances::REACTION_FD_STEP;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReactionKind {
    /// `k u (1 - u)`.
    Logistic { k: f64 },
    /// `sum_i c_i u^i`.
    Polynomial { coeffs: Vec<f64> },
}

/// Reaction `f(u)` with endpoint slopes `df0 = f'(0)` and `df1 = f'(1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReactionModel {
    pub kind: ReactionKind,
    pub df0: f64,
    pub df1: f64,
}

fn poly_eval(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
}

impl ReactionModel {
    pub fn logistic(k: f64) -> Self {
        Self { kind: ReactionKind::Logistic { k }, df0: k, df1: -k }
    }

    /// Polynomial reaction; endpoint slopes come from one-sided fourth-order differences.
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        let kind = ReactionKind::Polynomial { coeffs };
        let mut r = Self { kind, df0: 0.0, df1: 0.0 };
        let h = REACTION_FD_STEP;
        let f = |u: f64| r.f(u);
        let df0 = (-25.0 * f(0.0) + 48.0 * f(h) - 36.0 * f(2.0 * h) + 16.0 * f(3.0 * h) - 3.0 * f(4.0 * h)) / (12.0 * h);
        let df1 =
            (25.0 * f(1.0) - 48.0 * f(1.0 - h) + 36.0 * f(1.0 - 2.0 * h) - 16.0 * f(1.0 - 3.0 * h) + 3.0 * f(1.0 - 4.0 * h))
                / (12.0 * h);
        r.df0 = df0;
        r.df1 = df1;
        r
    }

    pub fn f(&self, u: f64) -> f64 {
        match &self.kind {
            ReactionKind::Logistic { k } => k * u * (1.0 - u),
            ReactionKind::Polynomial { coeffs } => poly_eval(coeffs, u),
        }
    }

    /// Checks `f(0) = f(1) = 0` and `f > 0` on the open interval, by sampling.
    pub fn check_logistic_type(&self) -> Result<(), ModelError> {
        let violation = |detail: String| ModelError::HypothesisViolation { hypothesis: "l".into(), detail };
        if self.f(0.0).abs() > 1e-12 || self.f(1.0).abs() > 1e-12 {
            return Err(violation(format!("f(0) = {}, f(1) = {}", self.f(0.0), self.f(1.0))));
        }
        for i in 1..2000 {
            let u = i as f64 / 2000.0;
            let v = self.f(u);
            if !(v > 0.0) {
                return Err(violation(format!("f({u}) = {v} is not positive")));
            }
        }
        if self.df0 < 0.0 || self.df1 > 0.0 {
            return Err(violation(format!("endpoint slopes f'(0) = {}, f'(1) = {}", self.df0, self.df1)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_endpoint_slopes() {
        // 3u - 5u^2 + 2u^3 = u (1 - u)(3 - 2u): f'(0) = 3, f'(1) = -1.
        let r = ReactionModel::polynomial(vec![0.0, 3.0, -5.0, 2.0]);
        assert!((r.df0 - 3.0).abs() < 1e-10, "{}", r.df0);
        assert!((r.df1 + 1.0).abs() < 1e-10, "{}", r.df1);
        r.check_logistic_type().unwrap();
    }

    #[test]
    fn negative_reaction_is_rejected() {
        let r = ReactionModel::polynomial(vec![0.0, -4.0, 4.0]);
        assert!((r.f(0.5) + 1.0).abs() < 1e-15);
        match r.check_logistic_type() {
            Err(ModelError::HypothesisViolation { hypothesis, .. }) => assert_eq!(hypothesis, "l"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
