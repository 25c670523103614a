//! Scenario configuration: a TOML document describing two plants, a classical
//! controller, the wiring between them, and optional initial covariance and
//! time grid. Complex entries are written as `[re, im]` pairs.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Top-level scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Output file prefix for CSV and summary artifacts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub plants: PlantsConfig,
    pub controller: ControllerConfig,
    pub wiring: WiringConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_grid: Option<TimeGridConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantsConfig {
    pub one: PlantConfig,
    pub two: PlantConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    /// Symmetric 2x2 Hamiltonian matrix.
    pub r: Vec<Vec<f64>>,
    /// Complex m x 2 coupling matrix, entries as `[re, im]`.
    pub k: Vec<Vec<[f64; 2]>>,
    /// Complex unitary m x m scattering matrix.
    pub s: Vec<Vec<[f64; 2]>>,
    /// Field statistics: `"vacuum"` or an explicit `S_w` matrix.
    #[serde(default = "FieldConfig::vacuum")]
    pub field: FieldConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldConfig {
    Named(String),
    Custom { s_w: Vec<Vec<f64>> },
}

impl FieldConfig {
    fn vacuum() -> Self {
        FieldConfig::Named("vacuum".to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub a_c: Vec<Vec<f64>>,
    /// Input map, one column per measured quadrature (plant-1 measurements
    /// first). Leave empty when nothing is measured.
    #[serde(default)]
    pub b_c: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub c_ham_one: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub c_ham_two: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub c_mod_one: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub c_mod_two: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WiringConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub measure_one: Vec<MeasureConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub measure_two: Vec<MeasureConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modulate_one: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modulate_two: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ham_one: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ham_two: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub field: usize,
    /// `"q"` (amplitude) or `"p"` (phase).
    pub quadrature: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// 4x4 covariance of the two quantum modes.
    pub p11: Vec<Vec<f64>>,
    /// Optional covariance of the classical controller state (defaults to 0).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classical: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGridConfig {
    pub t_end: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    /// Verdict threshold on LMI margins and E_N (default 1e-9).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<f64>,
    /// Uncertainty-LMI validity threshold for initial covariances (default 1e-8).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heisenberg: Option<f64>,
}

/// A config error carrying the offending field path.
#[derive(Debug, Clone)]
pub struct BuildError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for BuildError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for BuildError {}

pub(crate) fn err(field: &str, message: impl std::fmt::Display) -> BuildError {
    BuildError {
        field: field.to_string(),
        message: message.to_string(),
    }
}

/// Rectangular `Vec<Vec<f64>>` to a dense matrix.
pub fn real_matrix(rows: &[Vec<f64>], field: &str) -> Result<DMatrix<f64>, BuildError> {
    if rows.is_empty() {
        return Ok(DMatrix::zeros(0, 0));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(err(field, "rows have inconsistent lengths"));
    }
    let mut m = DMatrix::zeros(rows.len(), cols);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(err(field, format!("entry ({i}, {j}) is not finite")));
            }
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

/// Rectangular `Vec<Vec<[re, im]>>` to a dense complex matrix.
pub fn complex_matrix(
    rows: &[Vec<[f64; 2]>],
    field: &str,
) -> Result<DMatrix<Complex64>, BuildError> {
    if rows.is_empty() {
        return Ok(DMatrix::zeros(0, 0));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(err(field, "rows have inconsistent lengths"));
    }
    let mut m = DMatrix::zeros(rows.len(), cols);
    for (i, row) in rows.iter().enumerate() {
        for (j, &[re, im]) in row.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(err(field, format!("entry ({i}, {j}) is not finite")));
            }
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok(m)
}
