//! JSON model configs.
//!
//! ```json
//! {"flux": {"kind": "separable", "D": {"poly": [0.05, 0.0, 1.0]}, "phi": {"ratio_p": 2}},
//!  "reaction": {"kind": "logistic", "k": 1.0},
//!  "viscosity": 0.01}
//! ```

use serde::{Deserialize, Serialize};

use super::classify::{classify_flux, FluxClassification};
use super::diffusivity::{Diffusivity, Piece, Poly};
use super::flux::FluxModel;
use super::phi::Phi;
use super::reaction::ReactionModel;
use super::tabulated::TabulatedFlux;
use super::ModelError;
use crate::families::{self, DegenerateFamilySpec, Smoothness};
use crate::tolerances::MIN_CLASSIFY_GRID;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DiffSpec {
    Constant(f64),
    Poly {
        poly: Vec<f64>,
        #[serde(default)]
        shift: f64,
    },
    Pieces {
        pieces: Vec<Piece>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhiSpec {
    Named(String),
    RatioP { ratio_p: f64 },
}

/// Overrides for the degenerate example families; unset fields keep the shipped defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyParams {
    pub u1: Option<f64>,
    pub u2: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub k: Option<f64>,
    #[serde(alias = "λ")]
    pub lambda: Option<f64>,
    pub delta: Option<f64>,
    pub kappa: Option<f64>,
    /// `"quadratic"` (C1 joins) or `"cubic"` (C2 joins).
    pub smooth: Option<String>,
    pub phi: Option<PhiSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FluxSpec {
    Linear {
        d: f64,
    },
    Separable {
        #[serde(rename = "D")]
        d: DiffSpec,
        phi: PhiSpec,
    },
    Example1(FamilyParams),
    Example2(FamilyParams),
    Example3(FamilyParams),
    Example4(FamilyParams),
    Tabulated {
        u: Vec<f64>,
        s: Vec<f64>,
        a: Vec<Vec<f64>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReactionSpec {
    Logistic {
        #[serde(default = "one")]
        k: f64,
    },
    /// Polynomial `sum_i poly[i] u^i`.
    Custom { poly: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub flux: FluxSpec,
    /// Optional for the example families, which carry their own reaction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reaction: Option<ReactionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viscosity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classify_grid: Option<usize>,
}

/// A fully constructed model with its classification.
#[derive(Clone, Debug)]
pub struct LoadedModel {
    pub flux: FluxModel,
    pub reaction: ReactionModel,
    pub classification: FluxClassification,
    pub config: ModelConfig,
}

fn parse_err<E: std::fmt::Display>(e: E) -> ModelError {
    ModelError::ParseError(e.to_string())
}

impl PhiSpec {
    pub fn to_phi(&self) -> Result<Phi, ModelError> {
        let phi = match self {
            PhiSpec::Named(name) => match name.as_str() {
                "atan" => Phi::Atan,
                "linear" => Phi::Linear,
                other => return Err(parse_err(format!("unknown phi `{other}`"))),
            },
            PhiSpec::RatioP { ratio_p } => Phi::RatioP(*ratio_p),
        };
        phi.validate().map_err(parse_err)?;
        Ok(phi)
    }
}

impl DiffSpec {
    pub fn to_diffusivity(&self) -> Result<Diffusivity, ModelError> {
        let d = match self {
            DiffSpec::Constant(c) => Diffusivity::constant(*c),
            DiffSpec::Poly { poly, shift } => Diffusivity::Poly(Poly::new(*shift, poly.clone())),
            DiffSpec::Pieces { pieces } => Diffusivity::Piecewise(pieces.clone()),
        };
        d.validate().map_err(parse_err)?;
        for i in 0..=1000 {
            let u = i as f64 / 1000.0;
            let v = d.eval(u);
            if !(v >= 0.0) {
                return Err(ModelError::HypothesisViolation {
                    hypothesis: "nc".into(),
                    detail: format!("D({u}) = {v} is negative"),
                });
            }
        }
        Ok(d)
    }
}

impl FamilyParams {
    pub fn to_spec(&self) -> Result<DegenerateFamilySpec, ModelError> {
        let mut spec = DegenerateFamilySpec::default();
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { spec.$f = v; } )* };
        }
        set!(u1, u2, c1, c2, k, lambda, delta, kappa);
        if let Some(s) = &self.smooth {
            spec.smoothness = match s.as_str() {
                "quadratic" => Smoothness::Quadratic,
                "cubic" => Smoothness::Cubic,
                other => return Err(parse_err(format!("unknown smoothness `{other}`"))),
            };
        }
        if let Some(p) = &self.phi {
            spec.phi = p.to_phi()?;
        }
        Ok(spec)
    }
}

impl ReactionSpec {
    pub fn to_reaction(&self) -> ReactionModel {
        match self {
            ReactionSpec::Logistic { k } => ReactionModel::logistic(*k),
            ReactionSpec::Custom { poly } => ReactionModel::polynomial(poly.clone()),
        }
    }
}

impl ModelConfig {
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(parse_err)
    }

    /// Builds the flux and reaction without running hypothesis checks.
    pub fn build(&self) -> Result<(FluxModel, ReactionModel), ModelError> {
        let family = |n: u8, p: &FamilyParams| -> Result<(FluxModel, ReactionModel), ModelError> {
            let spec = p.to_spec()?;
            let built = if n == 4 { families::make_example4(&spec) } else { families::make_example(n, &spec) };
            built.map_err(|e| ModelError::HypothesisViolation { hypothesis: format!("example{n}"), detail: e.to_string() })
        };
        let (flux, family_reaction) = match &self.flux {
            FluxSpec::Linear { d } => {
                if !(*d >= 0.0) {
                    return Err(parse_err(format!("linear coefficient must be nonnegative, got {d}")));
                }
                (FluxModel::linear(*d), None)
            }
            FluxSpec::Separable { d, phi } => (FluxModel::separable(d.to_diffusivity()?, phi.to_phi()?), None),
            FluxSpec::Example1(p) => {
                let (f, r) = family(1, p)?;
                (f, Some(r))
            }
            FluxSpec::Example2(p) => {
                let (f, r) = family(2, p)?;
                (f, Some(r))
            }
            FluxSpec::Example3(p) => {
                let (f, r) = family(3, p)?;
                (f, Some(r))
            }
            FluxSpec::Example4(p) => {
                let (f, r) = family(4, p)?;
                (f, Some(r))
            }
            FluxSpec::Tabulated { u, s, a } => {
                (FluxModel::tabulated(TabulatedFlux::new(u.clone(), s.clone(), a.clone()).map_err(parse_err)?), None)
            }
        };
        let reaction = match (&self.reaction, family_reaction) {
            (Some(spec), _) => spec.to_reaction(),
            (None, Some(r)) => r,
            (None, None) => return Err(parse_err("missing `reaction`")),
        };
        let flux = match self.viscosity {
            Some(eps) if eps > 0.0 => flux.with_viscosity(eps),
            Some(eps) => return Err(parse_err(format!("viscosity must be positive, got {eps}"))),
            None => flux,
        };
        Ok((flux, reaction))
    }
}

fn check_flux_hypotheses(m: &FluxModel, grid: usize) -> Result<FluxClassification, ModelError> {
    let class = classify_flux(m, grid).map_err(|e| match e {
        ModelError::SymmetryViolation { .. } => ModelError::HypothesisViolation { hypothesis: "nc".into(), detail: e.to_string() },
        other => other,
    })?;
    for i in 0..grid {
        let u = i as f64 / (grid - 1) as f64;
        let omega = m.omega_plus(u);
        if omega.is_finite() && m.a_plus(u).is_finite() {
            return Err(ModelError::HypothesisViolation {
                hypothesis: "hm".into(),
                detail: format!("omega_+({u}) = {omega} is finite but a_+ = {} is bounded", m.a_plus(u)),
            });
        }
        let mut prev = 0.0f64;
        for j in 1..=grid {
            let s = 10f64.powf(-4.0 + 8.0 * j as f64 / grid as f64);
            if s >= omega {
                break;
            }
            let a = m.a(u, s);
            if a < prev - 1e-12 * (1.0 + prev.abs()) {
                return Err(ModelError::HypothesisViolation {
                    hypothesis: "nc".into(),
                    detail: format!("a({u}, .) decreases near s = {s}"),
                });
            }
            prev = a;
        }
    }
    Ok(class)
}

/// Parses a JSON config, builds the models and checks the structural hypotheses.
pub fn load_model(text: &str) -> Result<LoadedModel, ModelError> {
    let config = ModelConfig::parse(text)?;
    load_config(config)
}

pub(crate) fn load_config(config: ModelConfig) -> Result<LoadedModel, ModelError> {
    let (flux, reaction) = config.build()?;
    reaction.check_logistic_type()?;
    let grid = config.classify_grid.unwrap_or(MIN_CLASSIFY_GRID);
    let classification = check_flux_hypotheses(&flux, grid)?;
    Ok(LoadedModel { flux, reaction, classification, config })
}

impl LoadedModel {
    pub fn from_config(config: ModelConfig) -> Result<Self, ModelError> {
        load_config(config)
    }
}

/// Named presets: `fisher`, `bounded`, `example1` .. `example4`.
pub fn preset_config(name: &str) -> Option<ModelConfig> {
    let flux = match name {
        "fisher" => FluxSpec::Linear { d: 1.0 },
        "bounded" => families::bounded_preset_spec(),
        "example1" => FluxSpec::Example1(FamilyParams::default()),
        "example2" => FluxSpec::Example2(FamilyParams::default()),
        "example3" => FluxSpec::Example3(FamilyParams::default()),
        "example4" => FluxSpec::Example4(FamilyParams::default()),
        _ => return None,
    };
    let reaction = match name {
        "fisher" => Some(ReactionSpec::Logistic { k: 1.0 }),
        "bounded" => Some(ReactionSpec::Logistic { k: families::BOUNDED_K }),
        _ => None,
    };
    Some(ModelConfig { flux, reaction, viscosity: None, classify_grid: None })
}
