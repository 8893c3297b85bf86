//! The real quadratic field K, the layer F_m, the Galois group of F_m/Q
//! realized on residue classes, Kolyvagin primes and well-ordered products.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::arith::{
    crt, is_fundamental_discriminant, is_prime, kronecker, lcm, mul_mod, pow_mod, primitive_root_prime_power,
    valuation, ModRing,
};
use crate::error::{Error, Result};
use crate::group_ring::{Character, FiniteAbelianGroup, GroupRing};

/// K = Q(sqrt d) with F_m = K Q(mu_{p^{m+1}})^+.
#[derive(Debug, Clone)]
pub struct AbelianFieldCtx {
    pub p: u64,
    pub d: u64,
    pub m: u32,
    pub n: u32,
    pub ring: ModRing,
    /// Gal(F_m/Q) = Z/2 (sign of chi_d) x Z/((p-1)/2) x Z/p^m, trivial factors dropped.
    pub group: FiniteAbelianGroup,
    pub chi: Character,
    pub gal_ring: Arc<GroupRing>,
    pub chi_ring: Arc<GroupRing>,
    /// p^{m+1}
    pub pm1: u64,
    /// smallest primitive root modulo p^{m+1}
    pub r: u64,
    /// smallest b in (Z/d)^x with chi_d(b) = -1
    pub b0: u64,
    /// |(Z/p^{m+1})^x / +-1|
    pub half: u64,
    half_p: u64,
    p_m: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KolyvaginPrime {
    pub ell: u64,
    /// ord_p(ell - 1)
    pub n_ell: u32,
    /// the generator s_ell of (Z/ell)^x defining sigma_ell
    pub s_ell: u64,
}

impl KolyvaginPrime {
    pub fn new(ell: u64, p: u64) -> Self {
        KolyvaginPrime { ell, n_ell: valuation(ell - 1, p), s_ell: crate::arith::primitive_root(ell) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WellOrderedProduct {
    pub primes: Vec<u64>,
    pub n: u64,
    pub precision: u32,
}

impl WellOrderedProduct {
    pub fn one(precision: u32) -> Self {
        WellOrderedProduct { primes: vec![], n: 1, precision }
    }

    pub fn eps(&self) -> usize {
        self.primes.len()
    }
}

/// The congruence part of well-orderedness:
/// l_{i+1} = 1 mod p^N l_1 ... l_i for every i.
pub fn is_well_ordered(primes: &[u64], p: u64, n: u32) -> bool {
    let mut modulus = p.pow(n) as u128;
    for (i, &l) in primes.iter().enumerate() {
        if primes[..i].contains(&l) || (l as u128 - 1) % modulus != 0 {
            return false;
        }
        modulus *= l as u128;
    }
    true
}

impl AbelianFieldCtx {
    pub fn build(p: u64, d: u64, m: u32, n: u32) -> Result<Self> {
        if p < 3 || !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if !is_fundamental_discriminant(d) {
            return Err(Error::NotFundamental(d));
        }
        if d % p == 0 {
            return Err(Error::Ramified { p, d });
        }
        if kronecker(d as i64, p) == 1 {
            return Err(Error::SplitP { p, d });
        }
        // [K:Q] = 2 is prime to the odd prime p, so DegreeDivisible never fires here
        let ring = ModRing::new(p, n)?;
        let pm1 = p.pow(m + 1);
        let half_p = (p - 1) / 2;
        let p_m = p.pow(m);
        let mut divisors = vec![2u64];
        if half_p > 1 {
            divisors.push(half_p);
        }
        let delta_rank = divisors.len();
        if p_m > 1 {
            divisors.push(p_m);
        }
        let group = FiniteAbelianGroup::new(divisors, delta_rank);
        let mut values = vec![ring.neg(1)];
        if half_p > 1 {
            values.push(1);
        }
        let chi = Character::new(group.delta(), values, ring)?;
        let b0 = (2..d).find(|&b| kronecker(d as i64, b) == -1 && crate::arith::gcd(b, d) == 1).expect("chi_d is nontrivial");
        Ok(AbelianFieldCtx {
            p,
            d,
            m,
            n,
            ring,
            gal_ring: GroupRing::new(group.clone(), ring),
            chi_ring: GroupRing::new(group.gamma(), ring),
            group,
            chi,
            pm1,
            r: primitive_root_prime_power(p, m + 1),
            b0,
            half: half_p * p_m,
            half_p,
            p_m,
        })
    }

    /// chi_d(t) as +-1, 0 when not coprime; (d|.) has period d since
    /// d = 0, 1 mod 4.
    pub fn chi_d(&self, t: u64) -> i32 {
        kronecker(self.d as i64, t % self.d)
    }

    /// (sign, j) coordinates of a group element.
    pub fn coords(&self, idx: usize) -> (u64, u64) {
        let e = self.group.element(idx);
        let s = e[0];
        let mut res = vec![];
        let mut k = 1;
        if self.half_p > 1 {
            res.push((e[k], self.half_p));
            k += 1;
        }
        if self.p_m > 1 {
            res.push((e[k], self.p_m));
        }
        (s, crt(&res).0)
    }

    pub fn from_coords(&self, s: u64, j: u64) -> usize {
        let mut e = vec![s % 2];
        if self.half_p > 1 {
            e.push(j % self.half_p);
        }
        if self.p_m > 1 {
            e.push(j % self.p_m);
        }
        self.group.index(&e)
    }

    /// The Galois element of F_m/Q restricting t in (Z/p^{m+1} d)^x.
    pub fn galois_of(&self, t: u64) -> usize {
        let s = if self.chi_d(t) == -1 { 1 } else { 0 };
        let tp = t % self.pm1;
        let mut x = 1u64;
        let mut j = 0u64;
        while x != tp && x != self.pm1 - tp {
            x = mul_mod(x, self.r, self.pm1);
            j += 1;
        }
        self.from_coords(s, j % self.half)
    }

    /// Arithmetic Frobenius of an unramified prime.
    pub fn frobenius(&self, ell: u64) -> usize {
        self.galois_of(ell)
    }

    /// Lift of a group element to (Z/M)^x with M = p^{m+1} d n, normalized
    /// to be 1 modulo n. `n` must be coprime to p d.
    pub fn lift(&self, idx: usize, n: u64) -> (u64, u64) {
        let (s, j) = self.coords(idx);
        let tp = pow_mod(self.r, j, self.pm1);
        let td = if s == 0 { 1 } else { self.b0 };
        let mut parts = vec![(tp, self.pm1), (td, self.d)];
        if n > 1 {
            parts.push((1, n));
        }
        crt(&parts)
    }

    pub fn in_s_n(&self, ell: u64) -> bool {
        ell != self.p
            && is_prime(ell)
            && (ell - 1) % self.ring.modulus == 0
            && self.d % ell != 0
            && kronecker(self.d as i64, ell) == 1
    }

    /// Kolyvagin primes l = 1 mod p^N extra, chi_d(l) = 1, increasing.
    pub fn kolyvagin_primes(&self, extra: u64, budget: u64) -> KolyvaginPrimes<'_> {
        KolyvaginPrimes { ctx: self, step: self.ring.modulus * extra, k: 0, budget, done: false }
    }

    pub fn is_well_ordered(&self, primes: &[u64]) -> bool {
        primes.iter().all(|&l| self.in_s_n(l)) && is_well_ordered(primes, self.p, self.n)
    }

    /// Depth-first enumeration of well-ordered products of length r, taking
    /// up to `branch` choices at each level.
    pub fn well_ordered_chains(&self, r: usize, branch: usize, budget: u64) -> Result<Vec<WellOrderedProduct>> {
        let mut out = Vec::new();
        let mut prefix = Vec::new();
        self.chains_rec(r, branch, budget, &mut prefix, &mut out)?;
        if out.is_empty() {
            return Err(Error::BudgetExhausted(format!("no well-ordered chain of length {r}")));
        }
        Ok(out)
    }

    /// The chain l_1 < ... < l_r taking the least admissible prime at each step.
    pub fn least_chain(&self, r: usize, budget: u64) -> Result<Vec<u64>> {
        let mut out: Vec<u64> = Vec::with_capacity(r);
        let mut extra = 1u64;
        for step in 0..r {
            if step > 0 {
                extra = extra
                    .checked_mul(out[step - 1])
                    .ok_or_else(|| Error::BudgetExceeded(format!("chain after {out:?} leaves u64")))?;
            }
            let ell = match self.kolyvagin_primes(extra, budget).next() {
                Some(k) => k?.ell,
                None => return Err(Error::BudgetExceeded(format!("chain after {out:?} leaves u64"))),
            };
            out.push(ell);
        }
        Ok(out)
    }

    fn chains_rec(
        &self,
        r: usize,
        branch: usize,
        budget: u64,
        prefix: &mut Vec<u64>,
        out: &mut Vec<WellOrderedProduct>,
    ) -> Result<()> {
        if prefix.len() == r {
            let n = prefix
                .iter()
                .try_fold(1u64, |acc, &l| acc.checked_mul(l))
                .ok_or_else(|| Error::BudgetExceeded(format!("product of {prefix:?} overflows")))?;
            out.push(WellOrderedProduct { primes: prefix.clone(), n, precision: self.n });
            return Ok(());
        }
        let extra: u64 = prefix.iter().product();
        let found: Vec<u64> = self
            .kolyvagin_primes(extra, budget)
            .take(branch)
            .filter_map(|x| x.ok())
            .map(|k| k.ell)
            .collect();
        for ell in found {
            prefix.push(ell);
            self.chains_rec(r, branch, budget, prefix, out)?;
            prefix.pop();
        }
        Ok(())
    }

    /// q splits completely in F_m(mu_n).
    pub fn splits_completely(&self, q: u64, n: u64) -> bool {
        let tp = q % self.pm1;
        q % n.max(1) == 1 % n.max(1) && (tp == 1 || tp == self.pm1 - 1) && kronecker(self.d as i64, q) == 1
    }

    /// Modulus L with q = 1 mod L making every root of unity in the basic
    /// units of F_m(mu_n) rational over F_q.
    pub fn evaluation_modulus(&self, n: u64) -> u64 {
        lcm(lcm(self.ring.modulus, self.pm1 * self.d), n)
    }
}

pub struct KolyvaginPrimes<'a> {
    ctx: &'a AbelianFieldCtx,
    step: u64,
    k: u64,
    budget: u64,
    done: bool,
}

impl Iterator for KolyvaginPrimes<'_> {
    type Item = Result<KolyvaginPrime>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        while self.k < self.budget {
            self.k += 1;
            let ell = self.step.checked_mul(self.k)?.checked_add(1)?;
            if self.ctx.in_s_n(ell) {
                return Some(Ok(KolyvaginPrime::new(ell, self.ctx.p)));
            }
        }
        self.done = true;
        Some(Err(Error::BudgetExhausted(format!("{} candidates modulo {}", self.budget, self.step))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_examples() {
        let ctx = AbelianFieldCtx::build(3, 257, 0, 3).unwrap();
        assert_eq!(ctx.group.order(), 2);
        assert_eq!(ctx.chi_ring.rank(), 1);
        assert_eq!(AbelianFieldCtx::build(3, 12, 0, 2).unwrap_err(), Error::Ramified { p: 3, d: 12 });
        assert_eq!(AbelianFieldCtx::build(3, 13, 0, 2).unwrap_err(), Error::SplitP { p: 3, d: 13 });
        assert_eq!(AbelianFieldCtx::build(3, 15, 0, 2).unwrap_err(), Error::NotFundamental(15));
    }

    #[test]
    fn kolyvagin_prime_examples() {
        let ctx = AbelianFieldCtx::build(3, 257, 0, 1).unwrap();
        let first = ctx.kolyvagin_primes(1, 1000).next().unwrap().unwrap();
        assert_eq!(first.ell, 13);
        // sieve oracle for extra = 13
        let second = ctx.kolyvagin_primes(13, 1000).next().unwrap().unwrap();
        let want = (2..100000u64)
            .find(|&l| {
                (2..l).take_while(|x| x * x <= l).all(|x| l % x != 0)
                    && l % 39 == 1
                    && (1..l).any(|x| x * x % l == 257 % l)
            })
            .unwrap();
        assert_eq!(second.ell, want);
        let mut empty = ctx.kolyvagin_primes(1, 0);
        assert!(matches!(empty.next(), Some(Err(Error::BudgetExhausted(_)))));
        assert!(empty.next().is_none());
    }

    #[test]
    fn well_ordered_examples() {
        let ctx = AbelianFieldCtx::build(3, 257, 0, 2).unwrap();
        assert_eq!(ctx.well_ordered_chains(0, 3, 100).unwrap(), vec![WellOrderedProduct::one(2)]);
        assert!(is_well_ordered(&[19, 2053], 3, 2));
        assert!(!is_well_ordered(&[19, 37], 3, 2));
        assert!(!is_well_ordered(&[37, 19], 3, 2));
        let chains = ctx.well_ordered_chains(2, 2, 100_000).unwrap();
        assert_eq!(chains.len(), 4);
        for c in chains {
            assert!(ctx.is_well_ordered(&c.primes));
            assert!(ctx.is_well_ordered(&c.primes[..1]));
        }
    }

    #[test]
    fn frobenius_is_multiplicative() {
        let ctx = AbelianFieldCtx::build(5, 13, 1, 2).unwrap();
        let modulus = ctx.pm1 * ctx.d;
        let units: Vec<u64> = (1..modulus).filter(|&t| crate::arith::gcd(t, modulus) == 1).collect();
        for &a in units.iter().step_by(7) {
            for &b in units.iter().step_by(11) {
                let ab = mul_mod(a, b, modulus);
                assert_eq!(ctx.galois_of(ab), ctx.group.add(ctx.galois_of(a), ctx.galois_of(b)));
            }
        }
        for idx in 0..ctx.group.order() {
            let (t, _) = ctx.lift(idx, 7);
            assert_eq!(ctx.galois_of(t), idx);
            assert_eq!(t % 7, 1);
        }
    }

    #[test]
    fn kolyvagin_primes_split_by_trial() {
        let ctx = AbelianFieldCtx::build(3, 257, 0, 2).unwrap();
        for kp in ctx.kolyvagin_primes(1, 10_000).take(30) {
            let l = kp.unwrap().ell;
            assert_eq!(l % 9, 1);
            assert!((0..l).any(|x| (x * x) % l == 257 % l));
            assert_eq!(ctx.frobenius(l), 0);
        }
    }
}
