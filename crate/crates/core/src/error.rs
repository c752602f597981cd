use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus {modulus:?} is reducible over GF({p})")]
    ReducibleModulus { p: u32, modulus: Vec<u32> },
    #[error("GF({p}^{k}) needs an explicit modulus (built-in table covers q = 4, 8, 9)")]
    MissingModulus { p: u32, k: u32 },
    #[error("invalid modulus: {0}")]
    InvalidModulus(String),
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("operation {0} needs a second operand")]
    MissingOperand(&'static str),
    #[error("element {0:?} does not belong to the field")]
    ForeignElement(Vec<u32>),

    #[error("invalid strength t = {t}: need 1 <= t <= {max}")]
    InvalidStrength { t: usize, max: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("column ({block}, {depth}) out of range for {n} blocks of depth {r}")]
    ColumnOutOfRange { block: usize, depth: usize, n: usize, r: usize },
    #[error("symbol {symbol} at row {row} is outside 0..{q}")]
    SymbolOutOfRange { row: usize, symbol: u32, q: u32 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{rows} rows is not a multiple of q^t = {qt}")]
    NonDivisibleRows { rows: usize, qt: u64 },
    #[error("supplied lambda {supplied} disagrees with M / q^t = {inferred}")]
    LambdaMismatch { supplied: u64, inferred: u64 },
    #[error("{subsets} column subsets exceeds the cap of {cap}")]
    CombinatorialBlowup { subsets: u128, cap: u128 },
    #[error("instance too large: {0}")]
    ScaleExceeded(String),

    #[error("fewer field elements ({q}) than blocks ({n})")]
    TooFewPoints { q: u32, n: usize },
    #[error("evaluation points are not distinct")]
    DuplicatePoints,
    #[error("coordinate {0} has no exact base-q expansion of the declared precision")]
    InexactCoordinate(String),
    #[error("parameters are outside the net/OOA correspondence: {0}")]
    NotInvertible(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
