use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("order {m} does not divide the group order")]
    OrderNotDividing { m: u64 },
    #[error("zero element has no logarithm")]
    ZeroElement,
    #[error("group order shares a factor with p")]
    BadDecomposition,
    #[error("operands live in different rings")]
    MixedAmbient,
    #[error("precision N={n} too small for divisor sum {sum}")]
    InsufficientPrecision { n: u32, sum: u32 },
    #[error("matrix too large for cofactor expansion ({0} rows)")]
    SizeGuard(usize),
    #[error("p={p} ramifies in K (D={d})")]
    Ramified { p: u64, d: u64 },
    #[error("chi(p)=1 for p={p}, D={d}")]
    SplitP { p: u64, d: u64 },
    #[error("p divides the degree of K")]
    DegreeDivisible,
    #[error("{0} is not a positive fundamental discriminant")]
    NotFundamental(u64),
    #[error("search budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("evaluation prime {q} divides the conductor {m}")]
    ConductorClash { q: u64, m: u64 },
    #[error("splitting precondition fails: {0}")]
    NotSplit(String),
    #[error("{ell} divides the auxiliary modulus {n}")]
    DividesAux { ell: u64, n: u64 },
    #[error("{ell} does not divide {n}")]
    NotDividing { ell: u64, n: u64 },
    #[error("p^N={pn} does not exceed |A|={order}")]
    PrecisionTooLow { pn: u64, order: u64 },
    #[error("no weight supplied for {0}")]
    MissingWeight(u64),
    #[error("product is not well-ordered: {0:?}")]
    NotWellOrdered(Vec<u64>),
    #[error("rewriting did not reach zero: {0}")]
    ReductionFailure(String),
    #[error("sample outside the Fitting ideal: {0}")]
    Soundness(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("inconsistent field data: {0}")]
    InconsistentField(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
