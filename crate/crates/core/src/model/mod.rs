//! Flux and reaction models, hypothesis checks and config loading.

mod classify;
mod config;
mod diffusivity;
mod flux;
mod phi;
mod reaction;
mod tabulated;

pub use classify::{classify_flux, FluxClassification};
pub use config::{load_model, preset_config, DiffSpec, FamilyParams, FluxSpec, LoadedModel, ModelConfig, PhiSpec, ReactionSpec};
pub use diffusivity::{Diffusivity, Piece, Poly};
pub use flux::{FluxFunction, FluxModel, KindHint};
pub use phi::Phi;
pub use reaction::{ReactionKind, ReactionModel};
pub use tabulated::TabulatedFlux;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("gradient {s} outside the flux domain |s| < {omega} at u = {u}")]
    DomainViolation { u: f64, s: f64, omega: f64 },
    #[error("flow {v} is at or above the saturation value {a_plus} at u = {u}")]
    Saturated { u: f64, v: f64, a_plus: f64 },
    #[error("level u = {u} is totally degenerate")]
    Degenerate { u: f64 },
    #[error("flux is not odd in s: |a(u,s) + a(u,-s)| = {residual:e} at u = {u}, s = {s}")]
    SymmetryViolation { u: f64, s: f64, residual: f64 },
    #[error("classification grid {requested} is below the minimum {minimum}")]
    InvalidGrid { requested: usize, minimum: usize },
    #[error("config parse error: {0}")]
    ParseError(String),
    #[error("hypothesis ({hypothesis}) violated: {detail}")]
    HypothesisViolation { hypothesis: String, detail: String },
}

/// `gamma_0 = da/ds(0, 0) f'(0)`.
pub fn gamma0(m: &FluxModel, r: &ReactionModel) -> f64 {
    m.da_ds(0.0, 0.0) * r.df0
}

/// `2 sqrt(da/ds(0,0) f'(0))`, the lower estimate for every admissible speed.
pub fn lower_speed_bound(m: &FluxModel, r: &ReactionModel) -> Result<f64, ModelError> {
    if m.is_td(0.0) {
        return Err(ModelError::Degenerate { u: 0.0 });
    }
    Ok(2.0 * gamma0(m, r).max(0.0).sqrt())
}
