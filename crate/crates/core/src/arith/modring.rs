use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The ring Z/p^N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModRing {
    pub p: u64,
    pub n: u32,
    pub modulus: u64,
}

impl ModRing {
    pub fn new(p: u64, n: u32) -> Result<Self> {
        if p < 3 || !super::is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if n == 0 {
            return Err(Error::InvalidInput("precision N must be at least 1".into()));
        }
        let modulus = p
            .checked_pow(n)
            .filter(|&m| m < 1 << 62)
            .ok_or_else(|| Error::BudgetExceeded(format!("{p}^{n}")))?;
        Ok(ModRing { p, n, modulus })
    }

    #[inline]
    pub fn reduce(&self, a: u64) -> u64 {
        a % self.modulus
    }

    pub fn from_i64(&self, a: i64) -> u64 {
        a.rem_euclid(self.modulus as i64) as u64
    }

    pub fn from_big(&self, a: &BigUint) -> u64 {
        (a % self.modulus).try_into().unwrap_or(0)
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        super::add_mod(a, b, self.modulus)
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        super::sub_mod(a, b, self.modulus)
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.modulus - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        super::mul_mod(a, b, self.modulus)
    }

    pub fn pow(&self, a: u64, e: u64) -> u64 {
        super::pow_mod(a, e, self.modulus)
    }

    pub fn inv(&self, a: u64) -> Option<u64> {
        super::inv_mod(a, self.modulus)
    }

    /// Valuation of a residue; N for zero.
    pub fn valuation(&self, a: u64) -> u32 {
        let a = a % self.modulus;
        if a == 0 {
            self.n
        } else {
            super::valuation(a, self.p)
        }
    }

    /// Writes a nonzero residue as p^v times a unit, returning (v, unit).
    pub fn split_unit(&self, a: u64) -> (u32, u64) {
        let v = self.valuation(a);
        if v == self.n {
            return (v, 0);
        }
        let mut u = a % self.modulus;
        for _ in 0..v {
            u /= self.p;
        }
        (v, u)
    }

    pub fn p_pow(&self, e: u32) -> u64 {
        if e >= self.n {
            0
        } else {
            self.p.pow(e)
        }
    }
}
