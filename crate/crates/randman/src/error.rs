use serde::Serialize;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("squared separation must be nonnegative, got {0}")]
    NegativeRho(f64),
    #[error("cone undefined: sine {0} exceeds 1")]
    ConeUndefined(f64),
    #[error("guarantee vacuous: g = {0}")]
    GuaranteeVacuous(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("rows or columns are not orthonormal (deviation {0:e})")]
    NonOrthogonal(f64),
    #[error("too few samples: need {need}, have {have}")]
    TooFewSamples { need: usize, have: usize },
    #[error("target distortion {target} not reached; smallest quantile {best}")]
    Unachievable { target: f64, best: f64 },
    #[error("rank-deficient design")]
    RankDeficient,
    #[error("invalid manifold spec: {0}")]
    InvalidSpec(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("unknown figure kind `{0}`")]
    UnknownKind(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Machine-readable error record for stderr.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub code: &'static str,
    pub module: &'static str,
    pub message: String,
    pub params: serde_json::Value,
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NegativeRho(_) => "negative_rho",
            Error::ConeUndefined(_) => "cone_undefined",
            Error::GuaranteeVacuous(_) => "guarantee_vacuous",
            Error::Domain(_) => "domain",
            Error::NumericalBreakdown(_) => "numerical_breakdown",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::ZeroVector => "zero_vector",
            Error::NonOrthogonal(_) => "non_orthogonal",
            Error::TooFewSamples { .. } => "too_few_samples",
            Error::Unachievable { .. } => "unachievable",
            Error::RankDeficient => "rank_deficient",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::InvalidConfig(_) => "invalid_config",
            Error::UnknownKind(_) => "unknown_kind",
            Error::Io(_) => "io",
        }
    }

    /// The module that usually raises this error.
    pub fn module(&self) -> &'static str {
        match self {
            Error::NegativeRho(_) | Error::ConeUndefined(_) | Error::InvalidSpec(_) => {
                "manifold_model"
            }
            Error::NumericalBreakdown(_) | Error::IndexOutOfRange { .. } => "gp_sampler",
            Error::DimensionMismatch { .. } | Error::ZeroVector | Error::NonOrthogonal(_) => {
                "projector"
            }
            Error::GuaranteeVacuous(_) => "cone_guarantees",
            Error::Domain(_) => "theory",
            Error::TooFewSamples { .. }
            | Error::Unachievable { .. }
            | Error::RankDeficient
            | Error::UnknownKind(_) => "experiments",
            Error::InvalidConfig(_) | Error::Io(_) => "harness",
        }
    }

    pub fn record(&self) -> ErrorRecord {
        use serde_json::json;
        let params = match self {
            Error::DimensionMismatch { expected, got } => json!({"expected": expected, "got": got}),
            Error::NegativeRho(v)
            | Error::ConeUndefined(v)
            | Error::GuaranteeVacuous(v)
            | Error::NonOrthogonal(v) => json!({ "value": v }),
            Error::IndexOutOfRange { index, len } => json!({"index": index, "len": len}),
            Error::TooFewSamples { need, have } => json!({"need": need, "have": have}),
            Error::Unachievable { target, best } => json!({"target": target, "best": best}),
            Error::UnknownKind(k) => json!({ "kind": k }),
            _ => json!({}),
        };
        ErrorRecord {
            code: self.code(),
            module: self.module(),
            message: self.to_string(),
            params,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
