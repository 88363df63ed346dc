use thiserror::Error;

/// Which boundary of the ergoregion a trajectory crossed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// The ergosphere S.
    Outer,
    /// The inner boundary S1.
    Inner,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::Outer => write!(f, "outer boundary (ergosphere)"),
            Boundary::Inner => write!(f, "inner boundary"),
        }
    }
}

/// One failed precondition found while validating a scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub hypothesis: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {} [{}]", self.field, self.message, self.hypothesis)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("metric matrix is singular at {point:?} (|det| = {det:e})")]
    SingularMetric { point: Vec<f64>, det: f64 },
    #[error("metric is not hyperbolic at {point:?}: eigenvalues {eigenvalues:?}")]
    NotHyperbolic { point: Vec<f64>, eigenvalues: Vec<f64> },
    #[error("quadratic for xi0 has complex roots (discriminant {discriminant:e})")]
    ComplexRoots { discriminant: f64 },
    #[error("spatial covector is zero")]
    ZeroCovector,
    #[error("gauge transform Jacobian is singular at {point:?}")]
    SingularJacobian { point: Vec<f64> },
    #[error("gauge inverse did not converge at {point:?}")]
    GaugeInverse { point: Vec<f64> },
    #[error("flow is superluminal at {point:?} (|w| = {speed}, c = {c})")]
    SuperluminalFlow { point: Vec<f64>, speed: f64, c: f64 },
    #[error("flow stagnates at {point:?}")]
    StagnationPoint { point: Vec<f64> },
    #[error("medium kind mismatch: expected {expected}")]
    WrongMediumKind { expected: &'static str },
    #[error("covector is not characteristic (residual {residual:e}); zero xi0 launch needs a characteristic covector")]
    NotNull { residual: f64 },
    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("integrator step fell below {h_min:e} at s = {s}")]
    StepFailure { s: f64, h_min: f64 },
    #[error("spatial block has rank zero at {point:?}")]
    RankCollapse { point: Vec<f64> },
    #[error("point {point:?} is not on the ergosphere (delta = {delta:e})")]
    NotOnErgosphere { point: Vec<f64>, delta: f64 },
    #[error("kernel direction has no time coupling at {point:?}")]
    ZeroTimeCoupling { point: Vec<f64> },
    #[error("inner boundary is characteristic at {point:?}")]
    CharacteristicS1 { point: Vec<f64> },
    #[error("hypothesis violated: {clause}")]
    HypothesisViolation { clause: String },
    #[error("metric depends on the azimuth (mismatch {mismatch:e})")]
    NotAxisymmetric { mismatch: f64 },
    #[error("no ergoregion found")]
    NoErgoregion,
    #[error("ergoregion invalid: {0}")]
    InvalidRegion(String),
    #[error("limit cycle search did not converge after {windings} windings")]
    NoConvergence { windings: usize },
    #[error("closed orbit is not a simple curve (winding {winding})")]
    NonSimpleOrbit { winding: i32 },
    #[error("trajectory escaped the ergoregion through the {0}")]
    EscapedRegion(Boundary),
    #[error("closed curve is not characteristic (normal residual {residual:e})")]
    NotCharacteristic { residual: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("scenario validation failed: {}", format_violations(.0))]
    Validation(Vec<Violation>),
    #[error("gridded data schema error: {0}")]
    Schema(String),
    #[error("gridded data contains a non-finite value at row {row}")]
    NonFiniteData { row: usize },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
