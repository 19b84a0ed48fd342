use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("register `{register}` has the wrong kind for this operation (expected {expected})")]
    RegisterKind { register: String, expected: &'static str },
    #[error("duplicate register id `{0}`")]
    DuplicateRegister(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("matrix is not unitary (max |U†U - I| = {defect:.3e})")]
    NotUnitary { defect: f64 },
    #[error("matrix is not Hermitian (max |A - A†| = {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("eigen-decomposition does not reconstruct the matrix (residual {residual:.3e})")]
    EigenReconstruction { residual: f64 },
    #[error("no control entry for label `{0}`")]
    MissingControlEntry(String),
    #[error("unknown basis label `{label}` for register `{register}`")]
    UnknownLabel { register: String, label: String },
    #[error("tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),
    #[error("probe widths differ ({0} vs {1})")]
    WidthMismatch(f64, f64),
    #[error("probe width must be positive and finite, got {0}")]
    InvalidWidth(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("post-selection is orthogonal to the evolved pre-selection (|denominator| = {0:.3e})")]
    OrthogonalPostSelection(f64),
    #[error("coupling strength must be non-negative and finite, got {0}")]
    InvalidCoupling(f64),
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("degenerate grid: {0}")]
    DegenerateGrid(&'static str),
    #[error("protocol order violated: {0}")]
    ProtocolOrder(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("conditioning on a zero-probability outcome")]
    ZeroProbability,
    #[error("no outcome row matches {0}")]
    NoSuchOutcome(String),
    #[error("{0} outcome rows match {1}; add more outcomes to the conditioning")]
    AmbiguousOutcome(usize, String),
    #[error("lab state leaves the record subspace (lost weight {0:.3e})")]
    OutsideRecordSpan(f64),
    #[error("operation needs at least two probes, found {0}")]
    NeedsTwoProbes(usize),
    #[error("invalid scan: {0}")]
    InvalidScan(&'static str),
    #[error("no samples match the conditioning")]
    EmptyConditioning,
    #[error("only {found} samples match the conditioning, at least {required} needed")]
    InsufficientSamples { found: usize, required: usize },
    #[error("rejection sampler accepted nothing in {0} proposals")]
    SamplerStalled(usize),
}
