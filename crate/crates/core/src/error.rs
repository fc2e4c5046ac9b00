use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, DiracError>;

#[derive(Debug, Error)]
pub enum DiracError {
    #[error("invalid boundary form: {0}")]
    InvalidForm(String),

    #[error("boundary conditions are not Birkhoff-regular (|J14*J23| = {margin:.3e})")]
    NotRegular { margin: f64 },

    #[error("Lebesgue exponent must lie in [1, inf], got {0}")]
    InvalidExponent(f64),

    #[error("power singularity with exponent {alpha} is not integrable")]
    NotIntegrable { alpha: f64 },

    #[error("grid functions live on different meshes")]
    MeshMismatch,

    #[error("|Im lambda| = {im:.3} exceeds the configured cap {cap}")]
    LambdaCap { im: f64, cap: f64 },

    #[error("lambda = {lambda} is not an eigenvalue (|Delta| = {residual:.3e}, tolerance {tolerance:.3e})")]
    NotAnEigenvalue {
        lambda: Complex64,
        residual: f64,
        tolerance: f64,
    },

    #[error("lambda = {lambda} is a pole of the resolvent (nearest eigenvalue {nearest})")]
    Pole {
        lambda: Complex64,
        nearest: Complex64,
    },

    #[error("argument tracking did not converge on {contour}; adjust the contour")]
    WindingFailed { contour: String },

    #[error("contour validation failed: {0}")]
    ContourValidation(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("index window covers |n| <= {available}, requested m = {requested}")]
    WindowTooSmall { requested: usize, available: usize },

    #[error("kappa = {0} is outside the theorem range (1, inf]")]
    OutsideTheorem(f64),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<DiracError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl DiracError {
    pub fn at_stage(self, stage: &'static str) -> Self {
        DiracError::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at_stage(stage))
    }
}
