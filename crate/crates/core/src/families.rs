//! Ultra-degenerate toy families built from `a(u, s) = D(u) phi(s)` and their
//! characteristic values.
//!
//! * Example 1: `D = D1`, zero on `[0, u1]`, convex on `(u1, 1]`.
//! * Example 2: `D = D2`, convex on `[0, u2)`, zero on `[u2, 1]`.
//! * Example 3: `D2` below `u2`, zero on `[u2, u1]`, `D1` above `u1`.
//! * Example 4: Example 3 with a bump `lambda * D~` supported on `[delta, kappa]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::halfplane::{integrate_halfplane, HalfplaneError, IntegrationOptions, Mode};
use crate::model::{DiffSpec, Diffusivity, FluxModel, FluxSpec, Phi, PhiSpec, Piece, Poly, ReactionModel};
use crate::roots::bisect_sign;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error("family spec violates `{0}`")]
    SpecViolation(String),
    #[error("root not bracketed: {0}")]
    RootNotBracketed(String),
    #[error(transparent)]
    Integration(#[from] HalfplaneError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    /// `c (u - u_i)^2`: C1 joins.
    Quadratic,
    /// `c |u - u_i|^3`: C2 joins.
    Cubic,
}

impl Smoothness {
    fn power(self) -> usize {
        match self {
            Smoothness::Quadratic => 2,
            Smoothness::Cubic => 3,
        }
    }
}

/// Parameters of the degenerate families. Defaults are the shipped presets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegenerateFamilySpec {
    pub u1: f64,
    pub u2: f64,
    /// `D1(u) = c1 (u - u1)^n` on `(u1, 1]`.
    pub c1: f64,
    /// `D2(u) = c2 (u2 - u)^n` on `[0, u2)`.
    pub c2: f64,
    /// Logistic rate, `f(u) = k u (1 - u)`.
    pub k: f64,
    pub phi: Phi,
    pub lambda: f64,
    /// Bump support `[delta, kappa]`.
    pub delta: f64,
    pub kappa: f64,
    pub smoothness: Smoothness,
}

impl Default for DegenerateFamilySpec {
    fn default() -> Self {
        Self {
            u1: 0.6,
            u2: 0.3,
            c1: DEFAULT_C1,
            c2: DEFAULT_C2,
            k: DEFAULT_K,
            phi: Phi::RatioP(2.0),
            lambda: 0.0,
            delta: DEFAULT_DELTA,
            kappa: DEFAULT_KAPPA,
            smoothness: Smoothness::Quadratic,
        }
    }
}

const DEFAULT_C1: f64 = 10.0;
const DEFAULT_C2: f64 = 0.05;
const DEFAULT_K: f64 = 1.0;
const DEFAULT_DELTA: f64 = 0.15;
const DEFAULT_KAPPA: f64 = 0.68;

impl DegenerateFamilySpec {
    fn check(&self) -> Result<(), FamilyError> {
        let bad = |what: &str| Err(FamilyError::SpecViolation(what.into()));
        if !(self.u2 > 0.0 && self.u2 < self.u1 && self.u1 < 1.0) {
            return bad("0 < u2 < u1 < 1");
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return bad("c1, c2 > 0");
        }
        if !(self.k > 0.0) {
            return bad("k > 0");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda >= 0");
        }
        self.phi.validate().map_err(FamilyError::SpecViolation)?;
        if self.phi.sup().is_infinite() {
            return bad("phi bounded");
        }
        Ok(())
    }

    pub fn d1(&self) -> Poly {
        Poly::power(self.c1, self.u1, self.smoothness.power())
    }

    pub fn d2(&self) -> Poly {
        let n = self.smoothness.power();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        Poly::power(sign * self.c2, self.u2, n)
    }

    /// Normalised bump `((u - delta)(kappa - u))^3 / max` on `[delta, kappa]`.
    pub fn bump(&self) -> Diffusivity {
        let half = 0.5 * (self.kappa - self.delta);
        let q = Poly::new(0.0, vec![-self.delta * self.kappa, self.delta + self.kappa, -1.0]);
        let cube = q.mul(&q).mul(&q).scale(1.0 / half.powi(6));
        let mut pieces = Vec::new();
        if self.delta > 0.0 {
            pieces.push(Piece { lo: 0.0, hi: self.delta, poly: Poly::zero() });
        }
        pieces.push(Piece { lo: self.delta, hi: self.kappa, poly: cube });
        if self.kappa < 1.0 {
            pieces.push(Piece { lo: self.kappa, hi: 1.0, poly: Poly::zero() });
        }
        Diffusivity::Piecewise(pieces)
    }

    pub fn reaction(&self) -> ReactionModel {
        ReactionModel::logistic(self.k)
    }

    /// `D` of Example `n` (1, 2 or 3).
    pub fn diffusivity(&self, n: u8) -> Diffusivity {
        let (u1, u2) = (self.u1, self.u2);
        let pieces = match n {
            1 => vec![Piece { lo: 0.0, hi: u1, poly: Poly::zero() }, Piece { lo: u1, hi: 1.0, poly: self.d1() }],
            2 => vec![Piece { lo: 0.0, hi: u2, poly: self.d2() }, Piece { lo: u2, hi: 1.0, poly: Poly::zero() }],
            _ => vec![
                Piece { lo: 0.0, hi: u2, poly: self.d2() },
                Piece { lo: u2, hi: u1, poly: Poly::zero() },
                Piece { lo: u1, hi: 1.0, poly: self.d1() },
            ],
        };
        Diffusivity::Piecewise(pieces)
    }

    /// `D^lambda = D + lambda D~` of Example 4.
    pub fn diffusivity4(&self) -> Diffusivity {
        self.diffusivity(3).add_scaled(&self.bump(), self.lambda)
    }
}

/// Example 1, 2 or 3 flux with its logistic reaction.
pub fn make_example(n: u8, spec: &DegenerateFamilySpec) -> Result<(FluxModel, ReactionModel), FamilyError> {
    if !(1..=3).contains(&n) {
        return Err(FamilyError::SpecViolation(format!("example index {n} not in 1..=3")));
    }
    spec.check()?;
    Ok((FluxModel::separable(spec.diffusivity(n), spec.phi), spec.reaction()))
}

/// Example 4 flux `D^lambda phi`. Checks `0 < delta < u2 < u1 < kappa < 1`; the
/// placement relative to `gamma` and `alpha` needs a solve and lives in [`verify_example4`].
pub fn make_example4(spec: &DegenerateFamilySpec) -> Result<(FluxModel, ReactionModel), FamilyError> {
    spec.check()?;
    if !(spec.delta > 0.0 && spec.delta < spec.u2 && spec.u1 < spec.kappa && spec.kappa < 1.0) {
        return Err(FamilyError::SpecViolation("0 < delta < u2 < u1 < kappa < 1".into()));
    }
    Ok((FluxModel::separable(spec.diffusivity4(), spec.phi), spec.reaction()))
}

/// Stall level and axis intercept at speed `sigma` for an Example 1 or 3 flux.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaBeta {
    pub sigma: f64,
    pub alpha: f64,
    /// `V(alpha)`, equal to `D1(alpha)` when `alpha > u1`.
    pub v_alpha: f64,
    /// `alpha - V(alpha) / sigma`.
    pub beta: f64,
}

/// `alpha_sigma` from a classic-mode solve and `beta_sigma = alpha - V(alpha)/sigma`.
pub fn alpha_beta(m: &FluxModel, r: &ReactionModel, sigma: f64) -> Result<AlphaBeta, FamilyError> {
    let sol = integrate_halfplane(m, r, sigma, Mode::Classic, &IntegrationOptions::probe())?;
    let alpha = sol.alpha.unwrap_or(0.0);
    let v_alpha = *sol.v_values.last().unwrap_or(&0.0);
    let beta = if sigma > 0.0 { alpha - v_alpha / sigma } else { f64::NEG_INFINITY };
    Ok(AlphaBeta { sigma, alpha, v_alpha, beta })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicValues {
    /// Root of `sigma = D1'(alpha_sigma)`.
    pub tau: f64,
    /// `alpha_tau` (left limit).
    pub alpha_tau: f64,
    /// Speed with `beta = u2`.
    pub sigma_tilde: f64,
    pub at_sigma_tilde: AlphaBeta,
}

/// `tau` and `sigma~` of the family, both by bisection to `tol`.
pub fn characteristic_values(spec: &DegenerateFamilySpec, tol: f64) -> Result<CharacteristicValues, FamilyError> {
    let (m, r) = make_example(1, spec)?;
    let d1 = spec.d1();
    let u1 = spec.u1;
    // Negative below tau, positive above.
    let gap = |s: f64| -> f64 {
        match alpha_beta(&m, &r, s) {
            Ok(ab) if ab.alpha > u1 => s - d1.deriv(ab.alpha),
            Ok(_) => s,
            Err(_) => f64::NAN,
        }
    };
    let mut hi = 1.0;
    while gap(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(FamilyError::RootNotBracketed("tau".into()));
        }
    }
    let lo = 1e-3 * hi;
    if !(gap(lo) < 0.0) {
        return Err(FamilyError::RootNotBracketed("tau".into()));
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if gap(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    // The left end keeps the continuous branch alpha > u1.
    let tau = a;
    let alpha_tau = alpha_beta(&m, &r, tau)?.alpha;

    let beta = |s: f64| alpha_beta(&m, &r, s).map(|ab| ab.beta).unwrap_or(f64::NAN);
    let mut s_lo = 0.5 * tau;
    while beta(s_lo) >= spec.u2 {
        s_lo *= 0.5;
        if s_lo < 1e-8 {
            return Err(FamilyError::RootNotBracketed("sigma_tilde".into()));
        }
    }
    let sigma_tilde = bisect_sign(|s| beta(s) - spec.u2, s_lo, tau, tol)
        .ok_or_else(|| FamilyError::RootNotBracketed("sigma_tilde".into()))?;
    Ok(CharacteristicValues { tau, alpha_tau, sigma_tilde, at_sigma_tilde: alpha_beta(&m, &r, sigma_tilde)? })
}

/// Levels of the saturated span of the `sigma_bar` solution of the Example 3 flux.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Example4Layout {
    pub sigma_bar: f64,
    pub gamma: f64,
    pub alpha: f64,
}

/// Confirms `gamma < delta < u2 < u1 < kappa < alpha` for the Example 3 solution at
/// `sigma_bar` (the caller computes `sigma_bar` as the singular speed of the Example 3 flux).
pub fn verify_example4(spec: &DegenerateFamilySpec, sigma_bar: f64) -> Result<Example4Layout, FamilyError> {
    let (m, r) = make_example(3, spec)?;
    let sol = integrate_halfplane(&m, &r, sigma_bar, Mode::Extended, &IntegrationOptions::default())?;
    let span = sol
        .saturated_spans
        .iter()
        .find(|s| s[0] < spec.u2 && s[1] > spec.u1)
        .copied()
        .ok_or_else(|| FamilyError::SpecViolation("saturated span covering [u2, u1]".into()))?;
    let layout = Example4Layout { sigma_bar, gamma: span[0], alpha: span[1] };
    if !(layout.gamma < spec.delta && spec.kappa < layout.alpha) {
        return Err(FamilyError::SpecViolation(format!(
            "gamma < delta and kappa < alpha (gamma = {}, alpha = {})",
            layout.gamma, layout.alpha
        )));
    }
    Ok(layout)
}

/// The linear bound `2 sqrt(D2(0) phi'(0) f'(0))` against the singular speed of Example 2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct E4Check {
    pub bound: f64,
    pub sigma_s2: f64,
    /// `sigma_s2` exceeds `bound` by more than twice the bisection tolerance.
    pub strict: bool,
}

pub fn check_e4(spec: &DegenerateFamilySpec, tol: f64) -> Result<E4Check, FamilyError> {
    let (m, r) = make_example(2, spec)?;
    let rep = crate::speeds::find_sigma_s(&m, &r, tol).map_err(|e| FamilyError::RootNotBracketed(format!("sigma_s of example 2: {e}")))?;
    Ok(E4Check { bound: rep.lower_bound, sigma_s2: rep.sigma_s, strict: rep.sigma_s > rep.lower_bound + 2.0 * tol })
}

/// Rate of the `bounded` preset reaction.
pub const BOUNDED_K: f64 = 1.0;

/// Separable flux `(d0 + d1 u^2) s / sqrt(1 + s^2)`: bounded flux whose singular speed
/// exceeds the linear bound.
pub fn bounded_preset_spec() -> FluxSpec {
    FluxSpec::Separable { d: DiffSpec::Poly { poly: vec![0.05, 0.0, 2.0], shift: 0.0 }, phi: PhiSpec::RatioP { ratio_p: 2.0 } }
}

/// Linear flux `d s` with `f = k u (1 - u)`.
pub fn fisher(d: f64, k: f64) -> (FluxModel, ReactionModel) {
    (FluxModel::linear(d), ReactionModel::logistic(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn supports_of_examples() {
        let spec = DegenerateFamilySpec::default();
        let (m1, _) = make_example(1, &spec).unwrap();
        assert_eq!(m1.td_intervals(), &[[0.0, 0.6]]);
        let (m2, _) = make_example(2, &spec).unwrap();
        assert_eq!(m2.td_intervals(), &[[0.3, 1.0]]);
        let (m3, _) = make_example(3, &spec).unwrap();
        assert_eq!(m3.td_intervals(), &[[0.3, 0.6]]);
    }

    #[test]
    fn pieces_are_convex_and_continuous() {
        for smooth in [Smoothness::Quadratic, Smoothness::Cubic] {
            let spec = DegenerateFamilySpec { smoothness: smooth, ..Default::default() };
            let d = spec.diffusivity(3);
            for &x in &[spec.u1, spec.u2] {
                assert!(d.eval(x - 1e-12).abs() < 1e-10 && d.eval(x + 1e-12).abs() < 1e-10);
                assert!(d.deriv(x - 1e-9).abs() < 1e-6 && d.deriv(x + 1e-9).abs() < 1e-6);
            }
            let (h, u) = (1e-4, 0.8);
            assert!(d.eval(u + h) - 2.0 * d.eval(u) + d.eval(u - h) > 0.0);
            let u = 0.1;
            assert!(d.eval(u + h) - 2.0 * d.eval(u) + d.eval(u - h) > 0.0);
            assert!(d.deriv(0.1) < 0.0);
        }
    }

    #[test]
    fn bump_is_c2_with_unit_peak() {
        let spec = DegenerateFamilySpec::default();
        let b = spec.bump();
        let mid = 0.5 * (spec.delta + spec.kappa);
        assert!((b.eval(mid) - 1.0).abs() < 1e-12);
        assert_eq!(b.eval(spec.delta - 1e-3), 0.0);
        assert!(b.eval(spec.delta + 1e-3) < 1e-6);
        assert!(b.eval(spec.kappa - 1e-3) < 1e-6);
    }

    #[test]
    fn lambda_zero_keeps_example3() {
        let spec = DegenerateFamilySpec::default();
        let (m4, _) = make_example4(&spec).unwrap();
        let (m3, _) = make_example(3, &spec).unwrap();
        for i in 0..=100 {
            let u = i as f64 / 100.0;
            assert_eq!(m4.a_plus(u), m3.a_plus(u));
        }
        assert_eq!(m4.td_intervals(), m3.td_intervals());
    }

    #[test]
    fn positive_lambda_removes_degenerate_levels() {
        let spec = DegenerateFamilySpec { lambda: 0.01, ..Default::default() };
        let (m, _) = make_example4(&spec).unwrap();
        assert!(m.td_intervals().is_empty());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = DegenerateFamilySpec { u2: 0.7, ..Default::default() };
        assert!(matches!(make_example(3, &bad), Err(FamilyError::SpecViolation(_))));
        let bad = DegenerateFamilySpec { delta: 0.35, ..Default::default() };
        assert!(matches!(make_example4(&bad), Err(FamilyError::SpecViolation(_))));
        let bad = DegenerateFamilySpec { phi: Phi::Linear, ..Default::default() };
        assert!(make_example(1, &bad).is_err());
    }
}
