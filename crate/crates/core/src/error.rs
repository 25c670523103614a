use thiserror::Error;

/// Errors produced by construction, composition, and solver routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("{what} must be symmetric (asymmetry {residual:.3e})")]
    NotSymmetric { what: &'static str, residual: f64 },

    #[error("scattering matrix must be unitary (deviation {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{what} kept an imaginary residue of {residual:.3e} after quadrature conversion")]
    ImaginaryResidue { what: &'static str, residual: f64 },

    #[error("matrix is not Hurwitz (spectral abscissa {abscissa:.6e})")]
    NotHurwitz { abscissa: f64 },

    #[error("linear solve failed: singular system")]
    Singular,

    #[error("{what} produced non-finite values")]
    NonFinite { what: &'static str },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("not a valid quantum covariance: uncertainty LMI minimum eigenvalue {min_eig:.3e}")]
    InvalidCovariance { min_eig: f64 },

    #[error("numeric domain violation in {what}: {value:.3e}")]
    NumericDomain { what: &'static str, value: f64 },

    #[error(
        "separability criteria disagree: LMI margin {sep_min_eig:.3e}, \
         log-negativity {log_negativity:.3e}"
    )]
    CriterionDisagreement {
        sep_min_eig: f64,
        log_negativity: f64,
    },

    #[error("plant {plant}: field {field} is wired for both measurement and modulation")]
    WiringOverlap { plant: usize, field: usize },

    #[error("plant {plant}: field index {field} out of range ({fields} fields)")]
    FieldOutOfRange {
        plant: usize,
        field: usize,
        fields: usize,
    },

    #[error("plant {plant}: more than one quadrature of field {field} is measured")]
    DuplicateMeasurement { plant: usize, field: usize },

    #[error("{what}: commutation identity residual {residual:.3e}")]
    Realizability { what: &'static str, residual: f64 },

    #[error("{what}: gave up after {attempts} attempts")]
    SamplingExhausted { what: &'static str, attempts: usize },

    #[error("{0}")]
    Invalid(String),
}
