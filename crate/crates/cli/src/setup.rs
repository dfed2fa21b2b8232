//! Model resolution and the exit-code map.

use std::fmt;
use std::path::Path;

use satwave::families::FamilyError;
use satwave::model::FluxSpec;
use satwave::profile::ProfileError;
use satwave::{preset_config, DegenerateFamilySpec, HalfplaneError, LoadedModel, ModelConfig, ModelError, PdeError, SpeedError};
use serde_json::Value;

use crate::args::GlobalArgs;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;
pub const EXIT_BRACKET: i32 = 4;
pub const EXIT_BELOW_SIGMA_S: i32 = 5;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        let code = match e {
            ModelError::ParseError(_) | ModelError::InvalidGrid { .. } => EXIT_USAGE,
            ModelError::HypothesisViolation { .. } | ModelError::SymmetryViolation { .. } | ModelError::Degenerate { .. } => {
                EXIT_HYPOTHESIS
            }
            _ => EXIT_FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

impl From<SpeedError> for Failure {
    fn from(e: SpeedError) -> Self {
        let code = match e {
            SpeedError::BracketNotClosed { .. } => EXIT_BRACKET,
            SpeedError::InvalidInput(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

impl From<HalfplaneError> for Failure {
    fn from(e: HalfplaneError) -> Self {
        Self::new(EXIT_FAILURE, e.to_string())
    }
}

impl From<ProfileError> for Failure {
    fn from(e: ProfileError) -> Self {
        let code = match e {
            ProfileError::BelowSigmaS { .. } => EXIT_BELOW_SIGMA_S,
            ProfileError::BadGrid => EXIT_USAGE,
            _ => EXIT_FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

impl From<PdeError> for Failure {
    fn from(e: PdeError) -> Self {
        let code = match e {
            PdeError::NotOverElliptic => EXIT_HYPOTHESIS,
            PdeError::InvalidGrid(_) | PdeError::InsufficientWindow { .. } | PdeError::CflViolation { .. } => EXIT_USAGE,
        };
        Self::new(code, e.to_string())
    }
}

impl From<FamilyError> for Failure {
    fn from(e: FamilyError) -> Self {
        let code = match e {
            FamilyError::SpecViolation(_) => EXIT_HYPOTHESIS,
            FamilyError::RootNotBracketed(_) => EXIT_BRACKET,
            FamilyError::Integration(_) => EXIT_FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::new(EXIT_FAILURE, format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self::new(EXIT_FAILURE, format!("csv error: {e}"))
    }
}

/// Reads `--model` as a file if one exists at that path, else as a preset name.
pub fn base_config(model: Option<&str>) -> Result<ModelConfig, Failure> {
    let model = model.ok_or_else(|| Failure::usage("--model is required for this command"))?;
    if Path::new(model).is_file() {
        let text = std::fs::read_to_string(model).map_err(|e| Failure::usage(format!("cannot read {model}: {e}")))?;
        return Ok(ModelConfig::parse(&text)?);
    }
    preset_config(model).ok_or_else(|| Failure::usage(format!("{model}: no such file or preset")))
}

fn set_path(root: &mut Value, path: &[&str], value: Value) -> Result<(), Failure> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut node = root;
    for key in parents {
        node = node
            .as_object_mut()
            .and_then(|m| m.get_mut(*key))
            .ok_or_else(|| Failure::usage(format!("unknown parameter path `{}`", path.join("."))))?;
    }
    let obj = node.as_object_mut().ok_or_else(|| Failure::usage(format!("`{}` is not an object", parents.join("."))))?;
    obj.insert((*last).to_string(), value);
    Ok(())
}

fn get_path<'a>(root: &'a Value, path: &[&str]) -> Option<&'a Value> {
    path.iter().try_fold(root, |node, key| node.get(*key))
}

/// Applies `--lambda` and `--param` overrides and rejects keys the config does not know.
pub fn apply_overrides(config: ModelConfig, g: &GlobalArgs) -> Result<ModelConfig, Failure> {
    let mut pairs: Vec<(String, Value)> = Vec::new();
    if let Some(lam) = g.lambda {
        pairs.push(("flux.lambda".into(), Value::from(lam)));
    }
    for p in &g.params {
        let (key, raw) = p.split_once('=').ok_or_else(|| Failure::usage(format!("--param expects KEY=VALUE, got `{p}`")))?;
        let key = key.trim();
        let path = if key.contains('.') { key.to_string() } else { format!("flux.{key}") };
        let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
        pairs.push((path, value));
    }
    if pairs.is_empty() {
        return Ok(config);
    }
    let mut root = serde_json::to_value(&config).map_err(|e| Failure::usage(e.to_string()))?;
    for (path, value) in &pairs {
        let parts: Vec<&str> = path.split('.').collect();
        set_path(&mut root, &parts, value.clone())?;
    }
    let parsed: ModelConfig = serde_json::from_value(root).map_err(|e| Failure::usage(format!("invalid override: {e}")))?;
    // Keys the model type does not carry are dropped on parse; catch them here.
    let check = serde_json::to_value(&parsed).map_err(|e| Failure::usage(e.to_string()))?;
    for (path, _) in &pairs {
        let parts: Vec<&str> = path.split('.').collect();
        if get_path(&check, &parts).is_none() {
            return Err(Failure::usage(format!("`{path}` does not apply to this model")));
        }
    }
    Ok(parsed)
}

pub fn resolve_model(g: &GlobalArgs) -> Result<LoadedModel, Failure> {
    let config = apply_overrides(base_config(g.model.as_deref())?, g)?;
    Ok(LoadedModel::from_config(config)?)
}

/// Family spec behind an example config.
pub fn family_spec(config: &ModelConfig) -> Result<DegenerateFamilySpec, Failure> {
    match &config.flux {
        FluxSpec::Example1(p) | FluxSpec::Example2(p) | FluxSpec::Example3(p) | FluxSpec::Example4(p) => Ok(p.to_spec()?),
        _ => Err(Failure::usage("not an example family")),
    }
}
