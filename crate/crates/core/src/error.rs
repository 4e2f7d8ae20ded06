use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("point {point:?} lies outside the {domain} domain")]
    Domain { point: Vec<f64>, domain: &'static str },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("region selects no grid nodes")]
    EmptyRegion,

    #[error("oscillation vanishes on the fit window (field is constant at these scales)")]
    DegenerateProfile,

    #[error("profile has {available} scales, the fit window needs at least {needed}")]
    Window { needed: usize, available: usize },

    #[error("|x - y| = {distance:e} is below the regularization floor {floor:e}")]
    NearSingularity { distance: f64, floor: f64 },

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("compatibility residual {residual:e} exceeds tolerance {tolerance:e}: {context}")]
    Compatibility {
        residual: f64,
        tolerance: f64,
        context: &'static str,
    },

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl LabError {
    /// Stable short code used in failure logs.
    pub fn code(&self) -> &'static str {
        match self {
            LabError::Parameter(_) => "E_PARAM",
            LabError::Domain { .. } => "E_DOMAIN",
            LabError::Input(_) => "E_INPUT",
            LabError::Shape(_) => "E_SHAPE",
            LabError::EmptyRegion => "E_EMPTY_REGION",
            LabError::DegenerateProfile => "E_DEGENERATE",
            LabError::Window { .. } => "E_WINDOW",
            LabError::NearSingularity { .. } => "E_SINGULAR",
            LabError::Resolution(_) => "E_RESOLUTION",
            LabError::Compatibility { .. } => "E_COMPAT",
            LabError::UnknownExperiment(_) => "E_EXPERIMENT",
            LabError::Format(_) => "E_FORMAT",
            LabError::Io(_) => "E_IO",
            LabError::Csv(_) => "E_CSV",
        }
    }
}
