use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::diffusivity::Diffusivity;
use super::phi::Phi;
use super::tabulated::TabulatedFlux;
use super::ModelError;
use crate::roots::{invert_increasing, RootFailure};
use crate::tolerances::{TOL_G, TOL_TD};

/// User-supplied flux. Implementations must be odd and nondecreasing in `s`.
pub trait FluxFunction: Send + Sync {
    fn a(&self, u: f64, s: f64) -> f64;
    fn da_ds(&self, u: f64, s: f64) -> f64;
    fn a_plus(&self, u: f64) -> f64;
    fn omega_plus(&self, _u: f64) -> f64 {
        f64::INFINITY
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindHint {
    Linear,
    Separable,
    Piecewise,
    ViscosityWrapped,
    Custom,
}

#[derive(Clone)]
enum FluxKind {
    Linear { d: f64 },
    Separable { d: Diffusivity, phi: Phi },
    Viscous { base: FluxModel, eps: f64 },
    Tabulated(TabulatedFlux),
    Custom(Arc<dyn FluxFunction>),
}

/// An immutable flux `a(u, s)` with its saturation curve and degenerate set.
#[derive(Clone)]
pub struct FluxModel {
    kind: Arc<FluxKind>,
    td: Arc<Vec<[f64; 2]>>,
    td_exact: bool,
}

impl fmt::Debug for FluxModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.kind {
            FluxKind::Linear { d } => write!(f, "FluxModel::Linear(d={d})"),
            FluxKind::Separable { d, phi } => write!(f, "FluxModel::Separable({d:?}, {phi:?})"),
            FluxKind::Viscous { base, eps } => write!(f, "FluxModel::Viscous({base:?}, eps={eps})"),
            FluxKind::Tabulated(_) => write!(f, "FluxModel::Tabulated"),
            FluxKind::Custom(_) => write!(f, "FluxModel::Custom"),
        }
    }
}

impl FluxModel {
    fn build(kind: FluxKind) -> Self {
        let mut model = Self { kind: Arc::new(kind), td: Arc::new(Vec::new()), td_exact: true };
        let (td, exact) = match &*model.kind {
            FluxKind::Linear { d } => (if *d == 0.0 { vec![[0.0, 1.0]] } else { Vec::new() }, true),
            FluxKind::Separable { d, .. } => (d.zero_intervals(), true),
            FluxKind::Viscous { .. } => (Vec::new(), true),
            FluxKind::Tabulated(_) | FluxKind::Custom(_) => (model.sampled_td_levels(512), false),
        };
        model.td = Arc::new(td);
        model.td_exact = exact;
        model
    }

    /// `a(u, s) = d s`.
    pub fn linear(d: f64) -> Self {
        Self::build(FluxKind::Linear { d })
    }

    /// `a(u, s) = D(u) phi(s)`.
    pub fn separable(d: Diffusivity, phi: Phi) -> Self {
        Self::build(FluxKind::Separable { d, phi })
    }

    pub fn tabulated(t: TabulatedFlux) -> Self {
        Self::build(FluxKind::Tabulated(t))
    }

    pub fn custom(f: Arc<dyn FluxFunction>) -> Self {
        Self::build(FluxKind::Custom(f))
    }

    /// `a^eps(u, s) = a(u, s) + eps s`. Unbounded and over-elliptic by construction.
    pub fn with_viscosity(&self, eps: f64) -> Self {
        assert!(eps > 0.0, "viscosity coefficient must be positive");
        Self::build(FluxKind::Viscous { base: self.clone(), eps })
    }

    pub fn kind_hint(&self) -> KindHint {
        match &*self.kind {
            FluxKind::Linear { .. } => KindHint::Linear,
            FluxKind::Separable { d: Diffusivity::Poly(_), .. } => KindHint::Separable,
            FluxKind::Separable { d: Diffusivity::Piecewise(_), .. } => KindHint::Piecewise,
            FluxKind::Viscous { .. } => KindHint::ViscosityWrapped,
            FluxKind::Tabulated(_) | FluxKind::Custom(_) => KindHint::Custom,
        }
    }

    /// Separable parts `(D, phi)` when the flux has that form.
    pub fn separable_parts(&self) -> Option<(&Diffusivity, Phi)> {
        match &*self.kind {
            FluxKind::Separable { d, phi } => Some((d, *phi)),
            _ => None,
        }
    }

    /// Viscosity coefficient and base flux for viscosity-wrapped models.
    pub fn viscosity(&self) -> Option<(f64, &FluxModel)> {
        match &*self.kind {
            FluxKind::Viscous { base, eps } => Some((*eps, base)),
            _ => None,
        }
    }

    /// Raw evaluation of `a(u, s)` without domain checks.
    pub fn a(&self, u: f64, s: f64) -> f64 {
        match &*self.kind {
            FluxKind::Linear { d } => d * s,
            FluxKind::Separable { d, phi } => {
                let dv = d.eval(u);
                if dv == 0.0 {
                    0.0
                } else {
                    dv * phi.eval(s)
                }
            }
            FluxKind::Viscous { base, eps } => base.a(u, s) + eps * s,
            FluxKind::Tabulated(t) => t.a(u, s),
            FluxKind::Custom(f) => f.a(u, s),
        }
    }

    pub fn da_ds(&self, u: f64, s: f64) -> f64 {
        match &*self.kind {
            FluxKind::Linear { d } => *d,
            FluxKind::Separable { d, phi } => {
                let dv = d.eval(u);
                if dv == 0.0 {
                    0.0
                } else {
                    dv * phi.deriv(s)
                }
            }
            FluxKind::Viscous { base, eps } => base.da_ds(u, s) + eps,
            FluxKind::Tabulated(t) => t.da_ds(u, s),
            FluxKind::Custom(f) => f.da_ds(u, s),
        }
    }

    /// Saturation value `a_+(u) = lim_{s -> omega_+} a(u, s)`, possibly infinite.
    pub fn a_plus(&self, u: f64) -> f64 {
        match &*self.kind {
            FluxKind::Linear { d } => {
                if *d == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            FluxKind::Separable { d, phi } => {
                let dv = d.eval(u);
                if dv == 0.0 {
                    0.0
                } else {
                    dv * phi.sup()
                }
            }
            FluxKind::Viscous { .. } => f64::INFINITY,
            FluxKind::Tabulated(t) => t.a_plus(u),
            FluxKind::Custom(f) => f.a_plus(u),
        }
    }

    pub fn omega_plus(&self, u: f64) -> f64 {
        match &*self.kind {
            FluxKind::Custom(f) => f.omega_plus(u),
            FluxKind::Viscous { base, .. } => base.omega_plus(u),
            _ => f64::INFINITY,
        }
    }

    /// Totally degenerate level intervals `L_td`.
    pub fn td_intervals(&self) -> &[[f64; 2]] {
        &self.td
    }

    /// Whether `L_td` comes from the model parameters rather than sampling.
    pub fn td_is_exact(&self) -> bool {
        self.td_exact
    }

    pub fn is_td(&self, u: f64) -> bool {
        self.td.iter().any(|iv| u >= iv[0] && u <= iv[1])
    }

    /// Interior levels where the flux changes its piecewise definition.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = match &*self.kind {
            FluxKind::Separable { d, .. } => d.breakpoints(),
            FluxKind::Viscous { base, .. } => base.breakpoints(),
            FluxKind::Tabulated(t) => t.knots_u().to_vec(),
            _ => Vec::new(),
        };
        for iv in self.td.iter() {
            pts.push(iv[0]);
            pts.push(iv[1]);
        }
        pts.retain(|&x| x > 0.0 && x < 1.0);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn sampled_td_levels(&self, n: usize) -> Vec<[f64; 2]> {
        let probes: Vec<f64> = (0..=40).map(|k| 10f64.powf(-3.0 + 0.15 * k as f64)).collect();
        let mut out: Vec<[f64; 2]> = Vec::new();
        let mut run: Option<[f64; 2]> = None;
        for i in 0..=n {
            let u = i as f64 / n as f64;
            let omega = self.omega_plus(u);
            let max_a = probes
                .iter()
                .filter(|&&s| s < omega)
                .map(|&s| self.a(u, s).abs())
                .fold(self.a_plus(u).min(f64::MAX), f64::max);
            if max_a < TOL_TD {
                run = Some(match run {
                    Some([lo, _]) => [lo, u],
                    None => [u, u],
                });
            } else if let Some(r) = run.take() {
                out.push(r);
            }
        }
        if let Some(r) = run {
            out.push(r);
        }
        out
    }

    /// `a(u, s)`, rejecting gradients outside `(-omega_+(u), omega_+(u))`.
    pub fn eval_flux(&self, u: f64, s: f64) -> Result<f64, ModelError> {
        let omega = self.omega_plus(u);
        if s.abs() >= omega {
            return Err(ModelError::DomainViolation { u, s, omega });
        }
        Ok(self.a(u, s))
    }

    /// The unique `s >= 0` with `a(u, s) = v`, for `0 <= v < a_+(u)`.
    pub fn invert_flux(&self, u: f64, v: f64) -> Result<f64, ModelError> {
        if v < 0.0 {
            return self.invert_flux(u, -v).map(|s| -s);
        }
        if v == 0.0 {
            return Ok(0.0);
        }
        if self.is_td(u) {
            return Err(ModelError::Degenerate { u });
        }
        let a_plus = self.a_plus(u);
        if v >= a_plus {
            return Err(ModelError::Saturated { u, v, a_plus });
        }
        self.g(u, v).map_err(|_| ModelError::Saturated { u, v, a_plus })
    }

    /// Inverse of `s -> a(u, s)` assuming `0 < v < a_+(u)` and `u` not degenerate.
    pub(crate) fn g(&self, u: f64, v: f64) -> Result<f64, RootFailure> {
        match &*self.kind {
            FluxKind::Linear { d } => Ok(v / d),
            FluxKind::Separable { d, phi } => {
                let s = phi.inverse(v / d.eval(u));
                if s.is_finite() {
                    Ok(s)
                } else {
                    Err(RootFailure::Unreachable)
                }
            }
            _ => {
                let slope0 = self.da_ds(u, 0.0);
                let guess = if slope0 > 0.0 { v / slope0 } else { 1.0 };
                let omega = self.omega_plus(u);
                let s_max = if omega.is_finite() { omega * (1.0 - 1e-12) } else { f64::INFINITY };
                invert_increasing(|s| self.a(u, s), v, guess, s_max, TOL_G)
            }
        }
    }

    /// `H(u, V)`: `1/g(u, V)` below saturation, exactly 0 at or above `a_+(u)` and on `L_td`.
    pub fn h_reciprocal(&self, u: f64, v: f64) -> f64 {
        if self.is_td(u) {
            return 0.0;
        }
        if v >= self.a_plus(u) {
            return 0.0;
        }
        if v <= 0.0 {
            return f64::INFINITY;
        }
        match self.g(u, v) {
            Ok(s) if s > 0.0 => 1.0 / s,
            Ok(_) => f64::INFINITY,
            Err(_) => 0.0,
        }
    }

    /// `V / g(u, V)`, which tends to `da/ds(u, 0)` as `V -> 0`.
    pub(crate) fn v_over_g(&self, u: f64, v: f64) -> f64 {
        if v <= 1e-150 {
            return self.da_ds(u, 0.0);
        }
        match self.g(u, v) {
            Ok(s) if s > 0.0 => v / s,
            Ok(_) => self.da_ds(u, 0.0),
            Err(_) => 0.0,
        }
    }
}
