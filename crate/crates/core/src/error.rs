use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field modulus: {0}")]
    InvalidModulus(String),
    #[error("inverse of zero")]
    InverseOfZero,
    #[error("non-canonical field element encoding")]
    NonCanonical,

    #[error("variable {0} is not allocated")]
    UnallocatedVariable(u32),
    #[error("assignment length {got} does not match the {expected} allocated variables")]
    WitnessLength { expected: usize, got: usize },
    #[error("expected {expected} public inputs, got {got}")]
    PublicInputCount { expected: usize, got: usize },
    #[error("missing witness value for `{0}`")]
    MissingWitness(String),
    #[error("witness value for `{label}` does not fit in {width} bits")]
    WitnessOutOfRange { label: String, width: u32 },

    #[error("unsupported precision w={w}: {reason}")]
    Precision { w: u32, reason: String },
    #[error("exponent {0} outside the signed 8-bit range")]
    ExponentOverflow(i64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot encode negative value")]
    NegativeValue,
    #[error("precision mismatch: {0} vs {1}")]
    PrecisionMismatch(u32, u32),
    #[error("malformed float: {0}")]
    MalformedFloat(String),

    #[error("invalid sponge parameters: {0}")]
    SpongeParams(String),

    #[error("invalid answer matrix: {0}")]
    Answers(String),
    #[error("task {0} has no answers")]
    EmptyTask(usize),
    #[error("task {0} has only zero-weight answers")]
    ZeroWeights(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid prior factors: {0}")]
    Prior(String),

    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("circuit is not satisfied at constraint {index} ({region})")]
    Unsatisfied { index: usize, region: String },
    #[error("bundle format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
