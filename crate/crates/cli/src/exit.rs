//! Process exit codes. 0, 2 and 3 summarize a verification; 4 and up
//! name the input error that stopped the run.

use cycfit::Error;

pub const OK: i32 = 0;
pub const INCONCLUSIVE: i32 = 2;
pub const BUG: i32 = 3;
pub const INVALID_INPUT: i32 = 4;
pub const NOT_PRIME: i32 = 5;
pub const NOT_FUNDAMENTAL: i32 = 6;
pub const RAMIFIED: i32 = 7;
pub const SPLIT_P: i32 = 8;
pub const SCHEMA: i32 = 9;
pub const INCONSISTENT_FIELD: i32 = 10;
pub const PRECISION: i32 = 11;
pub const BUDGET: i32 = 12;
pub const NOT_SPLIT: i32 = 13;
pub const NOT_WELL_ORDERED: i32 = 14;
pub const IO: i32 = 15;

pub fn code_for(e: &Error) -> i32 {
    match e {
        Error::Soundness(_)
        | Error::ReductionFailure(_)
        | Error::MixedAmbient
        | Error::BadDecomposition
        | Error::ZeroElement
        | Error::OrderNotDividing { .. } => BUG,
        Error::InvalidInput(_) => INVALID_INPUT,
        Error::NotPrime(_) => NOT_PRIME,
        Error::NotFundamental(_) => NOT_FUNDAMENTAL,
        Error::Ramified { .. } => RAMIFIED,
        Error::SplitP { .. } | Error::DegreeDivisible => SPLIT_P,
        Error::SchemaViolation(_) => SCHEMA,
        Error::InconsistentField(_) => INCONSISTENT_FIELD,
        Error::InsufficientPrecision { .. } | Error::PrecisionTooLow { .. } => PRECISION,
        Error::BudgetExceeded(_) | Error::BudgetExhausted(_) | Error::SizeGuard(_) => BUDGET,
        Error::NotSplit(_) | Error::DividesAux { .. } | Error::NotDividing { .. } | Error::ConductorClash { .. } => {
            NOT_SPLIT
        }
        Error::NotWellOrdered(_) | Error::MissingWeight(_) => NOT_WELL_ORDERED,
    }
}

/// Errors that more budget could cure.
pub fn is_budget(e: &Error) -> bool {
    code_for(e) == BUDGET
}
