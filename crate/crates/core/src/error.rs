use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("level mismatch: {0} vs {1}")]
    LevelMismatch(u32, u32),

    #[error("cannot embed an element of level {from} into level {to}")]
    BadEmbedding { from: u32, to: u32 },

    #[error("ζ_(2^{k}) is not available at level {level}")]
    RootTooFine { k: u32, level: u32 },

    #[error(
        "coefficient vector of length {got} does not match level {level} (expected {expected})"
    )]
    BadLength {
        level: u32,
        expected: usize,
        got: usize,
    },

    #[error("congruence modulus is zero")]
    ZeroModulus,

    #[error("{0} is not square-free")]
    NotSquareFree(u64),

    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),

    #[error("invalid character: {0}")]
    InvalidCharacter(String),

    #[error("character {spec} is not primitive (conductor {conductor}, modulus {modulus})")]
    NotPrimitive {
        spec: String,
        conductor: u64,
        modulus: u64,
    },

    #[error(
        "summation modulus {d0} is not a positive multiple of the character modulus {modulus}"
    )]
    BadSummationModulus { d0: u64, modulus: u64 },

    #[error("size guard: 2^{n}·{d} exceeds 2^24 terms; pass an explicit override to allow it")]
    SizeGuard { n: u32, d: u64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported field: {0}")]
    UnsupportedField(String),

    #[error("arithmetic inconsistency: {0}")]
    Inconsistent(String),

    #[error("cache error: {0}")]
    Cache(String),

    #[error("cache poisoned: {0}")]
    CachePoisoned(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
