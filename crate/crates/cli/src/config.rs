//! Scenario configuration files (TOML, or JSON by extension).
//!
//! ```toml
//! variant = "ewfs"          # wfs | ewfs
//! mode = "unitary"          # unitary | collapse
//! coupling = "first_order"  # first_order | exact
//! gamma = 0.01
//! sigma = 1.0
//! seed = 0
//! environment = true
//!
//! [lab1]
//! probe = "spin"            # none | spin | pointer | environment
//! observable = "pi_plus"    # preset name, or { re = [[..]], im = [[..]] }
//!
//! [lab2]
//! probe = "pointer"
//! observable = { re = [[0, 0, 0], [0, 1, 0], [0, 0, -1]] }
//! env_unitary = [0, 2, 1]   # permutation of (ready, out0, out1), or a matrix
//! ```
//!
//! Spin matrices are written in (down, up) order. Record matrices are 3×3
//! over (ready, out0, out1) with the outcomes in the Friend's basis order:
//! (+, -) for lab 1 and (down, up) for lab 2. A 2×2 observable given for a
//! pointer or environment probe is lifted onto the outcome block.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use weakfriend_core::linalg::{c, CMatrix};
use weakfriend_core::observable::{Observable, Preset};
use weakfriend_core::scenario::{Coupling, Lab, LabConfig, Mode, ProbeTarget, ScenarioConfig, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    Wfs,
    Ewfs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Unitary,
    Collapse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingName {
    FirstOrder,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetName {
    None,
    Spin,
    Pointer,
    Environment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Preset(String),
    Matrix(MatrixSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UnitarySpec {
    Permutation(Vec<usize>),
    Matrix(MatrixSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabSection {
    #[serde(default = "no_probe")]
    pub probe: TargetName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<ObservableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env_unitary: Option<UnitarySpec>,
}

impl Default for LabSection {
    fn default() -> Self {
        LabSection {
            probe: TargetName::None,
            observable: None,
            env_unitary: None,
        }
    }
}

/// The file contents with defaults filled in; serializing this gives the
/// canonical form stored in manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub variant: VariantName,
    pub mode: ModeName,
    #[serde(default = "first_order")]
    pub coupling: CouplingName,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "yes")]
    pub environment: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lab1: Option<LabSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lab2: Option<LabSection>,
}

fn no_probe() -> TargetName {
    TargetName::None
}

fn first_order() -> CouplingName {
    CouplingName::FirstOrder
}

fn default_gamma() -> f64 {
    1e-2
}

fn default_sigma() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source: String,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() || self.field == "." {
            write!(f, "{}: {}", self.source, self.message)
        } else {
            write!(f, "{}: field `{}`: {}", self.source, self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Toml,
        }
    }
}

/// Read, parse and validate a config file.
pub fn parse_config(path: &Path) -> Result<(ConfigFile, ScenarioConfig), ConfigError> {
    let source = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        source: source.clone(),
        field: String::new(),
        message: e.to_string(),
    })?;
    parse_str(&text, Format::from_path(path), &source)
}

pub fn parse_str(text: &str, format: Format, source: &str) -> Result<(ConfigFile, ScenarioConfig), ConfigError> {
    let file = deserialize(text, format, source)?;
    let scenario = file.to_scenario().map_err(|(field, message)| ConfigError {
        source: source.into(),
        field,
        message,
    })?;
    Ok((file, scenario))
}

// serde's wording for untagged enums names Rust types
fn readable(message: String) -> String {
    message
        .replace(
            "data did not match any variant of untagged enum ObservableSpec",
            "expected a preset name or a table { re = [[..]], im = [[..]] }",
        )
        .replace(
            "data did not match any variant of untagged enum UnitarySpec",
            "expected a permutation [a, b, c] or a table { re = [[..]], im = [[..]] }",
        )
}

fn deserialize(text: &str, format: Format, source: &str) -> Result<ConfigFile, ConfigError> {
    let err = |field: String, message: String| ConfigError {
        source: source.into(),
        field,
        message: readable(message),
    };
    match format {
        Format::Toml => {
            let de = toml::Deserializer::parse(text).map_err(|e| err(String::new(), e.to_string().trim_end().into()))?;
            serde_path_to_error::deserialize(de).map_err(|e| err(e.path().to_string(), e.inner().to_string().trim_end().into()))
        }
        Format::Json => {
            let mut de = serde_json::Deserializer::from_str(text);
            serde_path_to_error::deserialize(&mut de).map_err(|e| err(e.path().to_string(), e.inner().to_string()))
        }
    }
}

type FieldResult<T> = Result<T, (String, String)>;

fn matrix(spec: &MatrixSpec, field: &str) -> FieldResult<CMatrix> {
    let n = spec.re.len();
    let bad = |m: String| Err((field.to_string(), m));
    if n == 0 || spec.re.iter().any(|r| r.len() != n) {
        return bad("`re` must be a non-empty square array of rows".into());
    }
    if let Some(im) = &spec.im {
        if im.len() != n || im.iter().any(|r| r.len() != n) {
            return bad(format!("`im` must be {n}x{n} like `re`"));
        }
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        c(spec.re[i][j], spec.im.as_ref().map_or(0.0, |m| m[i][j]))
    }))
}

fn observable(spec: &ObservableSpec, target: TargetName, lab: Lab, field: &str) -> FieldResult<Observable> {
    let obs = match spec {
        ObservableSpec::Preset(name) => match Preset::from_name(name) {
            Some(p) => p.observable(),
            None => {
                let known: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
                return Err((field.into(), format!("unknown preset `{name}` (known: {})", known.join(", "))));
            }
        },
        ObservableSpec::Matrix(m) => Observable::new(matrix(m, field)?).map_err(|e| (field.to_string(), e.to_string()))?,
    };
    let record = matches!(target, TargetName::Pointer | TargetName::Environment);
    if record && obs.dim() == 2 {
        return obs
            .lift_to_record(lab.friend_basis())
            .map_err(|e| (field.to_string(), e.to_string()));
    }
    Ok(obs)
}

fn unitary(spec: &UnitarySpec, field: &str) -> FieldResult<CMatrix> {
    match spec {
        UnitarySpec::Permutation(p) => {
            let mut seen = [false; 3];
            if p.len() != 3 || p.iter().any(|&k| k >= 3 || std::mem::replace(&mut seen[k], true)) {
                return Err((field.into(), "a permutation must list 0, 1, 2 once each".into()));
            }
            // column k is the record vector that label k is sent to
            Ok(CMatrix::from_fn(
                3,
                3,
                |i, j| if p[j] == i { c(1.0, 0.0) } else { c(0.0, 0.0) },
            ))
        }
        UnitarySpec::Matrix(m) => {
            let u = matrix(m, field)?;
            if u.nrows() != 3 {
                return Err((field.into(), "env_unitary must be 3x3".into()));
            }
            weakfriend_core::linalg::check_unitary(&u).map_err(|e| (field.to_string(), e.to_string()))?;
            Ok(u)
        }
    }
}

impl ConfigFile {
    pub fn to_scenario(&self) -> FieldResult<ScenarioConfig> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(("gamma".into(), format!("must be a finite number >= 0, found {}", self.gamma)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(("sigma".into(), format!("must be a finite number > 0, found {}", self.sigma)));
        }
        let variant = match self.variant {
            VariantName::Wfs => Variant::Wfs,
            VariantName::Ewfs => Variant::Ewfs,
        };
        if variant == Variant::Wfs && self.lab2.is_some() {
            return Err(("lab2".into(), "only the ewfs variant has a second lab".into()));
        }
        let mode = match self.mode {
            ModeName::Unitary => Mode::Unitary,
            ModeName::Collapse => Mode::Collapse,
        };
        let mut cfg = ScenarioConfig::new(variant, mode);
        cfg.coupling = match self.coupling {
            CouplingName::FirstOrder => Coupling::FirstOrder,
            CouplingName::Exact => Coupling::Exact,
        };
        cfg.gamma = self.gamma;
        cfg.sigma = self.sigma;
        cfg.seed = self.seed;
        cfg.environment = self.environment;
        for lab in cfg.lab_list() {
            let name = format!("lab{}", lab.number());
            let section = match lab {
                Lab::One => self.lab1.clone(),
                Lab::Two => self.lab2.clone(),
            }
            .unwrap_or_default();
            let target = section.probe;
            let observable = match (&section.observable, target) {
                (None, TargetName::None) => None,
                (Some(_), TargetName::None) => {
                    return Err((format!("{name}.observable"), "given but `probe` is \"none\"".into()));
                }
                (None, _) => return Err((format!("{name}.observable"), "required when a probe is attached".into())),
                (Some(spec), t) => Some(observable(spec, t, lab, &format!("{name}.observable"))?),
            };
            let env_unitary = match &section.env_unitary {
                Some(u) => {
                    if !self.environment {
                        return Err((format!("{name}.env_unitary"), "needs `environment = true`".into()));
                    }
                    Some(unitary(u, &format!("{name}.env_unitary"))?)
                }
                None => None,
            };
            cfg.labs[lab.number() - 1] = LabConfig {
                probe: match target {
                    TargetName::None => ProbeTarget::None,
                    TargetName::Spin => ProbeTarget::Spin,
                    TargetName::Pointer => ProbeTarget::Pointer,
                    TargetName::Environment => ProbeTarget::Environment,
                },
                observable,
                env_unitary,
            };
        }
        cfg.validate().map_err(|e| (String::new(), e.to_string()))?;
        Ok(cfg)
    }

    /// Canonical JSON form (defaults filled, fixed key order).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
