//! Kolyvagin derivatives of circular units over real quadratic fields,
//! finite-level cyclotomic ideals, and their comparison with higher Fitting
//! ideals of the p-part of the class group.

pub mod arith;
pub mod circ_units;
pub mod classgroup;
pub mod cyc_ideals;
pub mod error;
pub mod eval_maps;
pub mod field_ctx;
pub mod fitting;
pub mod group_ring;
pub mod json;
pub mod kurihara;

pub use error::{Error, Result};
