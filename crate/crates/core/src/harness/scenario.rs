//! Scenario files and process construction.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chaos::TruncationSpec;
use crate::error::{Result, WnsError};
use crate::filters::{DensityOptions, JointModel};
use crate::lift::ProcessSpec;
use crate::linalg::{self, CMat};
use crate::opwiener::FactorOptions;

pub const SCHEMA_VERSION: u32 = 1;

/// Noise covariance: a positive scalar (times identity) or a full matrix on
/// the degree-`W` basis, rows of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseCovariance {
    Scalar(f64),
    Matrix(Vec<Vec<Complex64>>),
}

impl NoiseCovariance {
    pub fn to_matrix(&self, dim: usize) -> Result<CMat> {
        match self {
            Self::Scalar(v) => {
                if !(*v > 0.0) || !v.is_finite() {
                    return Err(WnsError::Invalid(format!("noise variance must be positive, got {v}")));
                }
                Ok(linalg::identity(dim) * Complex64::new(*v, 0.0))
            }
            Self::Matrix(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(WnsError::DimensionMismatch(format!("V0 must be {dim}x{dim}")));
                }
                Ok(CMat::from_fn(dim, dim, |i, j| rows[i][j]))
            }
        }
    }

    /// The scalar variance when `V₀` is a multiple of the identity.
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Self::Scalar(v) => Some(*v),
            Self::Matrix(rows) => {
                let v = rows.first()?.first()?.re;
                let scalar = rows.iter().enumerate().all(|(i, r)| {
                    r.iter().enumerate().all(|(j, z)| {
                        let target = if i == j { Complex64::new(v, 0.0) } else { Complex64::default() };
                        (z - target).norm() == 0.0
                    })
                });
                scalar.then_some(v)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservationSpec {
    Explicit { process: ProcessSpec },
    AdditiveNoise { signal: ProcessSpec, v0: NoiseCovariance },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSelection {
    Noncausal,
    Causal,
    Both,
}

impl ModeSelection {
    pub fn noncausal(self) -> bool {
        matches!(self, Self::Noncausal | Self::Both)
    }

    pub fn causal(self) -> bool {
        matches!(self, Self::Causal | Self::Both)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub wiener_hopf: f64,
    pub orthogonality: f64,
    pub factorization: f64,
    pub oracle: f64,
    pub closed_form: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            wiener_hopf: 1e-6,
            orthogonality: 1e-6,
            factorization: 1e-8,
            oracle: 1e-6,
            closed_form: 1e-8,
        }
    }
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_window() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub truncation: TruncationSpec,
    pub target: ProcessSpec,
    pub observation: ObservationSpec,
    pub lag_band: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_band: Option<usize>,
    pub mode: ModeSelection,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub factor: FactorOptions,
    #[serde(default)]
    pub density: DensityOptions,
    /// Half-width of the `(l, j)` window for the Gram-product orthogonality check.
    #[serde(default = "default_window")]
    pub orthogonality_window: usize,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| WnsError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(WnsError::Invalid(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.truncation.validate()?;
        self.joint_model()?.validate(&self.truncation)
    }

    pub fn basis_dim(&self) -> usize {
        self.truncation.basis_size() as usize
    }

    pub fn out_band(&self) -> usize {
        self.out_band.unwrap_or(4 * self.lag_band.max(1))
    }

    pub fn joint_model(&self) -> Result<JointModel> {
        Ok(match &self.observation {
            ObservationSpec::Explicit { process } => JointModel::explicit(self.target.clone(), process.clone()),
            ObservationSpec::AdditiveNoise { signal, v0 } => {
                JointModel::additive_noise(self.target.clone(), signal.clone(), v0.to_matrix(self.basis_dim())?)
            }
        })
    }

    /// True when every element of the model is a scalar multiple of `H_∅`.
    pub fn is_deterministic(&self) -> bool {
        let obs = match &self.observation {
            ObservationSpec::Explicit { process } => process.is_deterministic(),
            ObservationSpec::AdditiveNoise { signal, v0 } => signal.is_deterministic() && v0.as_scalar().is_some(),
        };
        self.target.is_deterministic() && obs
    }
}

/// Parses and validates a process description.
pub fn build_process(fragment: &serde_json::Value, spec: &TruncationSpec) -> Result<ProcessSpec> {
    let p: ProcessSpec = serde_json::from_value(fragment.clone())?;
    p.validate(spec)?;
    Ok(p)
}
