//! Problem-spec documents: parsing, validation and serialization.
//!
//! ```json
//! {
//!   "spec_version": 1,
//!   "model": "gaussian",
//!   "dimension": 2,
//!   "index_set": [1, 2],
//!   "params": { "covariance": [[1, 0], [0, 1]] },
//!   "options": { "max_index_size": 20 }
//! }
//! ```
//!
//! Indices are 1-based. A file may also hold an array of such documents.

use std::fmt;

use isserlis::{
    CovarianceMatrix, DetPolicy, GigParams, HyperbolicModel, LocationMixtureModel, MixingDistribution, MultiIndex,
    Summation,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub const SPEC_VERSION: u32 = 1;
pub const DEFAULT_MAX_INDEX_SIZE: usize = 20;
pub const DEFAULT_SAMPLES: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },

    #[error("{path}: {message}")]
    Field { path: String, message: String },

    #[error("model: unknown model kind \"{0}\" (expected gaussian, location_mixture or hyperbolic)")]
    UnknownModel(String),

    #[error("spec_version: unsupported version {0} (this build reads version {SPEC_VERSION})")]
    UnsupportedVersion(u64),

    #[error("{field}: dimension mismatch, expected {expected} but found {found}")]
    DimensionMismatch {
        field: String,
        expected: usize,
        found: usize,
    },

    #[error("index_set[{position}]: index out of range, {index} is not in 1..={dimension}")]
    IndexOutOfRange {
        position: usize,
        index: usize,
        dimension: usize,
    },

    #[error("{field}: {source}")]
    Model {
        field: &'static str,
        #[source]
        source: isserlis::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Gaussian,
    LocationMixture,
    Hyperbolic,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Gaussian => "gaussian",
            ModelKind::LocationMixture => "location_mixture",
            ModelKind::Hyperbolic => "hyperbolic",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummationKind {
    #[default]
    Plain,
    Compensated,
}

impl From<SummationKind> for Summation {
    fn from(s: SummationKind) -> Self {
        match s {
            SummationKind::Plain => Summation::Plain,
            SummationKind::Compensated => Summation::Compensated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    pub max_index_size: usize,
    pub strict_det: bool,
    pub seed: u64,
    pub samples: u64,
    pub summation: SummationKind,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            max_index_size: DEFAULT_MAX_INDEX_SIZE,
            strict_det: false,
            seed: 0,
            samples: DEFAULT_SAMPLES,
            summation: SummationKind::Plain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianParams {
    pub covariance: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MixingSpec {
    Deterministic { location: Vec<f64> },
    Bernoulli { mu: Vec<f64> },
    Discrete { locations: Vec<Vec<f64>>, probabilities: Vec<f64> },
    /// Independent components, each a list of `[value, probability]` atoms.
    Product { marginals: Vec<Vec<(f64, f64)>> },
}

/// `general` uses the mixed moments `E[μ_S]`; `independent` uses products of
/// means and needs distinct indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    #[default]
    General,
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureParams {
    pub covariance: Vec<Vec<f64>>,
    pub mixing: MixingSpec,
    #[serde(default)]
    pub formula: Formula,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperbolicParams {
    pub mu: Vec<f64>,
    pub beta: Vec<f64>,
    pub delta: Vec<Vec<f64>>,
    pub psi: f64,
    pub chi: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Gaussian(GaussianParams),
    LocationMixture(MixtureParams),
    Hyperbolic(HyperbolicParams),
}

/// A validated problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub dimension: usize,
    pub index_set: Vec<usize>,
    pub params: Params,
    pub options: Options,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    spec_version: u64,
    model: String,
    dimension: usize,
    index_set: Vec<usize>,
    params: Value,
    #[serde(default)]
    options: Options,
}

/// Engine inputs built from a spec.
pub enum Model {
    Gaussian(CovarianceMatrix),
    LocationMixture(LocationMixtureModel, Formula),
    Hyperbolic(HyperbolicModel),
}

fn field_error(prefix: &str, err: serde_path_to_error::Error<serde_json::Error>) -> SpecError {
    let inner = err.path().to_string();
    let path = match (prefix, inner.as_str()) {
        ("", p) => p.to_string(),
        (pre, ".") => pre.to_string(),
        (pre, p) if p.starts_with('[') => format!("{pre}{p}"),
        (pre, p) => format!("{pre}.{p}"),
    };
    let path = if path == "." || path.is_empty() { "<document>".to_string() } else { path };
    SpecError::Field {
        path,
        message: err.into_inner().to_string(),
    }
}

fn from_value<T: DeserializeOwned>(value: Value, prefix: &str) -> Result<T, SpecError> {
    serde_path_to_error::deserialize(value).map_err(|e| field_error(prefix, e))
}

fn check_matrix(field: &str, rows: &[Vec<f64>], d: usize) -> Result<(), SpecError> {
    if rows.len() != d {
        return Err(SpecError::DimensionMismatch {
            field: field.to_string(),
            expected: d,
            found: rows.len(),
        });
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(SpecError::DimensionMismatch {
                field: format!("{field}[{i}]"),
                expected: d,
                found: row.len(),
            });
        }
    }
    Ok(())
}

fn check_vector(field: &str, v: &[f64], d: usize) -> Result<(), SpecError> {
    if v.len() != d {
        return Err(SpecError::DimensionMismatch {
            field: field.to_string(),
            expected: d,
            found: v.len(),
        });
    }
    Ok(())
}

impl ProblemSpec {
    /// Parses one document.
    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        let value = parse_value(text)?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self, SpecError> {
        let raw: RawSpec = from_value(value, "")?;
        if raw.spec_version != u64::from(SPEC_VERSION) {
            return Err(SpecError::UnsupportedVersion(raw.spec_version));
        }
        let d = raw.dimension;
        if d == 0 {
            return Err(SpecError::Field {
                path: "dimension".into(),
                message: "must be at least 1".into(),
            });
        }
        for (position, &index) in raw.index_set.iter().enumerate() {
            if index == 0 || index > d {
                return Err(SpecError::IndexOutOfRange {
                    position,
                    index,
                    dimension: d,
                });
            }
        }
        let params = match raw.model.as_str() {
            "gaussian" => {
                let p: GaussianParams = from_value(raw.params, "params")?;
                check_matrix("params.covariance", &p.covariance, d)?;
                Params::Gaussian(p)
            }
            "location_mixture" => {
                let p: MixtureParams = from_value(raw.params, "params")?;
                check_matrix("params.covariance", &p.covariance, d)?;
                match &p.mixing {
                    MixingSpec::Deterministic { location } => check_vector("params.mixing.location", location, d)?,
                    MixingSpec::Bernoulli { mu } => check_vector("params.mixing.mu", mu, d)?,
                    MixingSpec::Discrete { locations, .. } => {
                        for (i, loc) in locations.iter().enumerate() {
                            check_vector(&format!("params.mixing.locations[{i}]"), loc, d)?;
                        }
                    }
                    MixingSpec::Product { marginals } => {
                        if marginals.len() != d {
                            return Err(SpecError::DimensionMismatch {
                                field: "params.mixing.marginals".into(),
                                expected: d,
                                found: marginals.len(),
                            });
                        }
                    }
                }
                Params::LocationMixture(p)
            }
            "hyperbolic" => {
                let p: HyperbolicParams = from_value(raw.params, "params")?;
                check_vector("params.mu", &p.mu, d)?;
                check_vector("params.beta", &p.beta, d)?;
                check_matrix("params.delta", &p.delta, d)?;
                Params::Hyperbolic(p)
            }
            other => return Err(SpecError::UnknownModel(other.to_string())),
        };
        let spec = ProblemSpec {
            dimension: d,
            index_set: raw.index_set,
            params,
            options: raw.options,
        };
        // surface numeric validation (symmetry, PSD, probabilities) at parse time
        spec.build()?;
        Ok(spec)
    }

    pub fn kind(&self) -> ModelKind {
        match self.params {
            Params::Gaussian(_) => ModelKind::Gaussian,
            Params::LocationMixture(_) => ModelKind::LocationMixture,
            Params::Hyperbolic(_) => ModelKind::Hyperbolic,
        }
    }

    pub fn index(&self) -> MultiIndex {
        MultiIndex::from_one_based(&self.index_set, self.dimension).expect("validated at parse time")
    }

    /// Builds the engine model. The determinant check follows
    /// `options.strict_det`.
    pub fn build(&self) -> Result<Model, SpecError> {
        let model_err = |field| move |source| SpecError::Model { field, source };
        Ok(match &self.params {
            Params::Gaussian(p) => {
                Model::Gaussian(CovarianceMatrix::from_rows(&p.covariance).map_err(model_err("params.covariance"))?)
            }
            Params::LocationMixture(p) => {
                let cov = CovarianceMatrix::from_rows(&p.covariance).map_err(model_err("params.covariance"))?;
                let mixing = match &p.mixing {
                    MixingSpec::Deterministic { location } => MixingDistribution::deterministic(location.clone()),
                    MixingSpec::Bernoulli { mu } => MixingDistribution::bernoulli(mu.clone()),
                    MixingSpec::Discrete {
                        locations,
                        probabilities,
                    } => MixingDistribution::discrete(locations.clone(), probabilities.clone()),
                    MixingSpec::Product { marginals } => MixingDistribution::product_of_marginals(marginals),
                }
                .map_err(model_err("params.mixing"))?;
                let model = LocationMixtureModel::new(mixing, cov).map_err(model_err("params.mixing"))?;
                Model::LocationMixture(model, p.formula)
            }
            Params::Hyperbolic(p) => {
                let delta = CovarianceMatrix::from_rows(&p.delta).map_err(model_err("params.delta"))?;
                let gig = GigParams::new(p.psi, p.chi, p.lambda).map_err(model_err("params.psi/chi/lambda"))?;
                let policy = if self.options.strict_det {
                    DetPolicy::Strict
                } else {
                    DetPolicy::Lenient
                };
                let model = HyperbolicModel::with_policy(p.mu.clone(), p.beta.clone(), delta, gig, policy)
                    .map_err(model_err("params.delta"))?;
                Model::Hyperbolic(model)
            }
        })
    }

    pub fn to_value(&self) -> Value {
        let params = match &self.params {
            Params::Gaussian(p) => serde_json::to_value(p),
            Params::LocationMixture(p) => serde_json::to_value(p),
            Params::Hyperbolic(p) => serde_json::to_value(p),
        }
        .expect("params serialize");
        serde_json::to_value(RawSpec {
            spec_version: u64::from(SPEC_VERSION),
            model: self.kind().name().to_string(),
            dimension: self.dimension,
            index_set: self.index_set.clone(),
            params,
            options: self.options.clone(),
        })
        .expect("spec serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("spec serializes")
    }
}

fn parse_value(text: &str) -> Result<Value, SpecError> {
    serde_json::from_str(text).map_err(|e| SpecError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Parses a document holding one spec or an array of specs. Errors inside an
/// array are prefixed with the element position.
pub fn parse_specs(text: &str) -> Result<Vec<ProblemSpec>, SpecError> {
    match parse_value(text)? {
        Value::Array(items) => items
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                ProblemSpec::from_value(v).map_err(|e| SpecError::Field {
                    path: format!("[{i}]"),
                    message: e.to_string(),
                })
            })
            .collect(),
        v => Ok(vec![ProblemSpec::from_value(v)?]),
    }
}

/// Reads specs from a file, or standard input for `-`.
pub fn read_specs(path: &str) -> Result<Vec<ProblemSpec>, SpecError> {
    let text = if path == "-" {
        std::io::read_to_string(std::io::stdin())
    } else {
        std::fs::read_to_string(path)
    }
    .map_err(|e| SpecError::Io {
        path: path.to_string(),
        message: e.to_string(),
    })?;
    parse_specs(&text)
}
