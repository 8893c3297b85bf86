use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{add_mod, factor, gcd, inv_mod, is_prime, lcm, mul_mod, mult_order, pow_mod, primitive_root, sub_mod};
use crate::error::{Error, Result};

/// Default bound on log2(q^k) for `make_field`.
pub const DEFAULT_FIELD_BITS: u32 = 62;
/// Default bound on k*log2(q) for evaluation fields.
pub const DEFAULT_EVAL_BITS: u32 = 4096;

const LEX_TRIES: usize = 4;
const MODULUS_SEED: u64 = 0x6d6f_6475_6c75_73;

/// Minimal field interface shared by the prime-field fast path and extensions.
pub trait GaloisField: Sync + Send {
    type Elem: Clone + PartialEq + Send + Sync + std::fmt::Debug;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    /// 1 - a
    fn one_minus(&self, a: &Self::Elem) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn from_coeffs(&self, c: &[u64]) -> Self::Elem;
    fn to_coeffs(&self, a: &Self::Elem) -> Vec<u64>;
    /// The constant term, if `a` lies in the prime field.
    fn to_base(&self, a: &Self::Elem) -> Option<u64>;
    fn inv(&self, a: &Self::Elem) -> Self::Elem;

    fn pow(&self, a: &Self::Elem, mut e: u64) -> Self::Elem {
        let mut r = self.one();
        let mut b = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(&r, &b);
            }
            e >>= 1;
            if e > 0 {
                b = self.mul(&b, &b);
            }
        }
        r
    }

    fn pow_big(&self, a: &Self::Elem, e: &BigUint) -> Self::Elem {
        let mut r = self.one();
        for i in (0..e.bits()).rev() {
            r = self.mul(&r, &r);
            if e.bit(i) {
                r = self.mul(&r, a);
            }
        }
        r
    }
}

/// The prime field F_q with its smallest primitive root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeField {
    pub q: u64,
    pub g: u64,
}

impl PrimeField {
    pub fn new(q: u64) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        Ok(PrimeField { q, g: primitive_root(q) })
    }

    /// Full discrete logarithm of `y` to base `b` (b of order q-1), by
    /// Pohlig-Hellman over the factorization of q-1 with baby-step giant-step.
    pub fn dlog(&self, b: u64, y: u64) -> Option<u64> {
        let q = self.q;
        let n = q - 1;
        let mut parts = Vec::new();
        for (r, e) in factor(n) {
            let re = r.pow(e);
            let bb = pow_mod(b, n / re, q);
            let yy = pow_mod(y, n / re, q);
            let gr = pow_mod(bb, re / r, q);
            let mut x = 0u64;
            let mut rk = 1u64;
            for _ in 0..e {
                let t = mul_mod(yy, pow_mod(inv_mod(bb, q)?, x, q), q);
                let t = pow_mod(t, re / (rk * r), q);
                x += rk * bsgs(gr, t, r, q)?;
                rk *= r;
            }
            parts.push((x, re));
        }
        Some(super::crt(&parts).0)
    }
}

fn bsgs(b: u64, y: u64, order: u64, q: u64) -> Option<u64> {
    let m = super::isqrt(order) + 1;
    let mut table = std::collections::HashMap::with_capacity(m as usize);
    let mut cur = 1u64;
    for j in 0..m {
        table.entry(cur).or_insert(j);
        cur = mul_mod(cur, b, q);
    }
    let giant = inv_mod(pow_mod(b, m, q), q)?;
    let mut g = y;
    for i in 0..=m {
        if let Some(&j) = table.get(&g) {
            return Some((i * m + j) % order);
        }
        g = mul_mod(g, giant, q);
    }
    None
}

impl GaloisField for PrimeField {
    type Elem = u64;

    #[inline]
    fn zero(&self) -> u64 {
        0
    }
    #[inline]
    fn one(&self) -> u64 {
        1
    }
    #[inline]
    fn add(&self, a: &u64, b: &u64) -> u64 {
        add_mod(*a, *b, self.q)
    }
    #[inline]
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        mul_mod(*a, *b, self.q)
    }
    #[inline]
    fn one_minus(&self, a: &u64) -> u64 {
        sub_mod(1, *a, self.q)
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    fn from_coeffs(&self, c: &[u64]) -> u64 {
        c.first().copied().unwrap_or(0) % self.q
    }
    fn to_coeffs(&self, a: &u64) -> Vec<u64> {
        vec![*a]
    }
    fn to_base(&self, a: &u64) -> Option<u64> {
        Some(*a)
    }
    fn inv(&self, a: &u64) -> u64 {
        inv_mod(*a, self.q).expect("nonzero element")
    }
}

/// F_{q^k} = F_q[x]/(f) with f monic irreducible, coefficients low to high.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtField {
    pub q: u64,
    pub k: usize,
    pub modulus: Vec<u64>,
}

impl ExtField {
    fn reduce_wide(&self, wide: &mut [u64]) -> Vec<u64> {
        let (q, k) = (self.q, self.k);
        // the smallest irreducible is usually sparse
        let terms: Vec<(usize, u64)> =
            self.modulus[..k].iter().enumerate().filter(|(_, &c)| c != 0).map(|(j, &c)| (j, c)).collect();
        for i in (k..wide.len()).rev() {
            let c = wide[i];
            if c == 0 {
                continue;
            }
            wide[i] = 0;
            for &(j, m) in &terms {
                let t = mul_mod(c, m, q);
                wide[i - k + j] = sub_mod(wide[i - k + j], t, q);
            }
        }
        wide[..k].to_vec()
    }
}

impl GaloisField for ExtField {
    type Elem = Vec<u64>;

    fn zero(&self) -> Vec<u64> {
        vec![0; self.k]
    }

    fn one(&self) -> Vec<u64> {
        let mut v = vec![0; self.k];
        v[0] = 1;
        v
    }

    fn add(&self, a: &Vec<u64>, b: &Vec<u64>) -> Vec<u64> {
        a.iter().zip(b).map(|(&x, &y)| add_mod(x, y, self.q)).collect()
    }

    fn mul(&self, a: &Vec<u64>, b: &Vec<u64>) -> Vec<u64> {
        let (q, k) = (self.q, self.k);
        let mut acc = vec![0u128; 2 * k - 1];
        if q < 1 << 32 {
            // products stay below 2^64, so 2^64 of them fit in a u128
            for (i, &x) in a.iter().enumerate() {
                if x == 0 {
                    continue;
                }
                for (j, &y) in b.iter().enumerate() {
                    acc[i + j] += (x * y) as u128;
                }
            }
            let mut wide: Vec<u64> = acc.iter().map(|&s| (s % q as u128) as u64).collect();
            self.reduce_wide(&mut wide)
        } else {
            let mut wide = vec![0u64; 2 * k - 1];
            for (i, &x) in a.iter().enumerate() {
                for (j, &y) in b.iter().enumerate() {
                    wide[i + j] = add_mod(wide[i + j], mul_mod(x, y, q), q);
                }
            }
            self.reduce_wide(&mut wide)
        }
    }

    fn one_minus(&self, a: &Vec<u64>) -> Vec<u64> {
        let q = self.q;
        let mut r: Vec<u64> = a.iter().map(|&c| if c == 0 { 0 } else { q - c }).collect();
        r[0] = add_mod(r[0], 1, q);
        r
    }

    fn is_zero(&self, a: &Vec<u64>) -> bool {
        a.iter().all(|&c| c == 0)
    }

    fn from_coeffs(&self, c: &[u64]) -> Vec<u64> {
        let mut v = vec![0; self.k];
        for (i, &x) in c.iter().enumerate().take(self.k) {
            v[i] = x % self.q;
        }
        v
    }

    fn to_coeffs(&self, a: &Vec<u64>) -> Vec<u64> {
        a.clone()
    }

    fn to_base(&self, a: &Vec<u64>) -> Option<u64> {
        if a[1..].iter().all(|&c| c == 0) {
            Some(a[0])
        } else {
            None
        }
    }

    fn inv(&self, a: &Vec<u64>) -> Vec<u64> {
        let e = BigUint::from(self.q).pow(self.k as u32) - 2u32;
        self.pow_big(a, &e)
    }
}

// ---- polynomial helpers over F_q (coefficients low to high) ----

fn trim(mut a: Vec<u64>) -> Vec<u64> {
    while a.len() > 1 && *a.last().unwrap() == 0 {
        a.pop();
    }
    a
}

fn poly_rem(a: &[u64], b: &[u64], q: u64) -> Vec<u64> {
    let mut r = trim(a.to_vec());
    let b = trim(b.to_vec());
    let db = b.len() - 1;
    let inv_lead = inv_mod(b[db], q).expect("nonzero leading coefficient");
    while r.len() > db && !(r.len() == 1 && r[0] == 0) {
        let dr = r.len() - 1;
        let c = mul_mod(r[dr], inv_lead, q);
        for j in 0..=db {
            let t = mul_mod(c, b[j], q);
            r[dr - db + j] = sub_mod(r[dr - db + j], t, q);
        }
        r = trim(r);
        if dr == 0 {
            break;
        }
    }
    r
}

fn poly_gcd(a: &[u64], b: &[u64], q: u64) -> Vec<u64> {
    let mut a = trim(a.to_vec());
    let mut b = trim(b.to_vec());
    while !(b.len() == 1 && b[0] == 0) {
        let r = poly_rem(&a, &b, q);
        a = b;
        b = r;
    }
    a
}

/// Ben-Or irreducibility test; aborts at the first small factor found.
fn is_irreducible(f: &[u64], q: u64) -> bool {
    let k = f.len() - 1;
    if k == 1 {
        return true;
    }
    if f[0] == 0 {
        return false;
    }
    let ext = ExtField { q, k, modulus: f.to_vec() };
    let x = ext.from_coeffs(&[0, 1]);
    let mut h = x.clone();
    for _ in 1..=k / 2 {
        h = ext.pow(&h, q);
        let mut diff = h.clone();
        diff[1] = sub_mod(diff[1], 1, q);
        let g = poly_gcd(f, &diff, q);
        if g.len() > 1 {
            return false;
        }
    }
    true
}

/// Decodes j in base q into k coefficients (low degree first).
fn digits(mut j: u128, q: u64, k: usize) -> Vec<u64> {
    let mut c = vec![0u64; k];
    for slot in c.iter_mut() {
        *slot = (j % q as u128) as u64;
        j /= q as u128;
    }
    c
}

/// Monic irreducible of degree k. The first `LEX_TRIES * k` candidates are
/// scanned in order of their non-leading coefficients read as a base-q
/// number, which keeps small fields on the smallest modulus. Sparse
/// polynomials of large degree are often reducible for long stretches, so
/// past that prefix we draw dense candidates from a fixed seed instead.
fn smallest_irreducible(q: u64, k: usize) -> Vec<u64> {
    if k == 1 {
        return vec![0, 1];
    }
    let lex_end = 1 + (LEX_TRIES * k) as u128;
    for j in 1..lex_end {
        let mut f = digits(j, q, k);
        f.push(1);
        if is_irreducible(&f, q) {
            return f;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(MODULUS_SEED ^ (q << 16) ^ k as u64);
    loop {
        let mut f: Vec<u64> = (0..k).map(|_| rng.random_range(0..q)).collect();
        f.push(1);
        if is_irreducible(&f, q) {
            return f;
        }
    }
}

fn q_pow_k(q: u64, k: usize) -> BigUint {
    BigUint::from(q).pow(k as u32)
}

/// A finite field with a distinguished element `gen` of order `gen_order`.
/// For `make_field` this is a full generator of F_{q^k}^x; evaluation fields
/// only carry an element whose order covers the roots of unity in use.
/// In both cases gen^(gen_order/(q-1)) equals the smallest primitive root of
/// F_q, so roots of unity agree with the ones of the prime field.
#[derive(Debug, Clone)]
pub struct FieldCtx {
    pub q: u64,
    pub k: usize,
    pub modulus: Vec<u64>,
    pub base: PrimeField,
    ext: Option<ExtField>,
    pub gen: Vec<u64>,
    pub gen_order: BigUint,
    pub order: BigUint,
}

pub fn make_field(q: u64, k: usize) -> Result<FieldCtx> {
    FieldCtx::new(q, k, DEFAULT_FIELD_BITS)
}

impl FieldCtx {
    /// F_{q^k} with a verified full generator; q^k must stay below 2^bits.
    pub fn new(q: u64, k: usize, bits: u32) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        if k == 0 {
            return Err(Error::InvalidInput("extension degree must be at least 1".into()));
        }
        let order_plus = q_pow_k(q, k);
        if order_plus.bits() > bits as u64 || (order_plus.bits() == bits as u64 && bits >= 64) {
            return Err(Error::BudgetExceeded(format!("{q}^{k} exceeds 2^{bits}")));
        }
        let base = PrimeField::new(q)?;
        let order = &order_plus - 1u32;
        if k == 1 {
            return Ok(FieldCtx {
                q,
                k,
                modulus: vec![0, 1],
                gen: vec![base.g],
                gen_order: order.clone(),
                order,
                base,
                ext: None,
            });
        }
        let modulus = smallest_irreducible(q, k);
        let ext = ExtField { q, k, modulus: modulus.clone() };
        let n = order.to_u64().expect("budget keeps q^k below 2^64");
        let primes: Vec<u64> = factor(n).into_iter().map(|(r, _)| r).collect();
        let norm_exp = BigUint::from(n / (q - 1));
        let mut j: u128 = q as u128;
        let gen = loop {
            let cand = digits(j, q, k);
            j += 1;
            let c = ext.from_coeffs(&cand);
            if ext.to_base(&ext.pow_big(&c, &norm_exp)) != Some(base.g) {
                continue;
            }
            if primes.iter().all(|&r| ext.to_base(&ext.pow(&c, n / r)) != Some(1)) {
                break c;
            }
        };
        Ok(FieldCtx { q, k, modulus, base, ext: Some(ext), gen, gen_order: order.clone(), order })
    }

    /// The field F_q(zeta_m) of degree ord_m(q), carrying an element of order
    /// lcm(m, q-1). Budget is on k*log2(q).
    pub fn for_conductor(q: u64, m: u64, bits: u32) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        if gcd(q, m) != 1 {
            return Err(Error::ConductorClash { q, m });
        }
        let k = mult_order(q % m.max(1), m.max(1)) as usize;
        let qbits = 64 - q.leading_zeros();
        if k as u64 * qbits as u64 > bits as u64 {
            return Err(Error::BudgetExceeded(format!("degree {k} over F_{q}")));
        }
        let base = PrimeField::new(q)?;
        let order = q_pow_k(q, k) - 1u32;
        if k == 1 {
            return Ok(FieldCtx {
                q,
                k,
                modulus: vec![0, 1],
                gen: vec![base.g],
                gen_order: BigUint::from(q - 1),
                order,
                base,
                ext: None,
            });
        }
        let l = lcm(m, q - 1);
        let modulus = smallest_irreducible(q, k);
        let ext = ExtField { q, k, modulus: modulus.clone() };
        let cofactor = &order / l;
        let primes: Vec<u64> = factor(l).into_iter().map(|(r, _)| r).collect();
        let mut j: u128 = q as u128;
        let z = loop {
            let cand = ext.from_coeffs(&digits(j, q, k));
            j += 1;
            let z = ext.pow_big(&cand, &cofactor);
            if ext.is_zero(&z) {
                continue;
            }
            if primes.iter().all(|&r| ext.to_base(&ext.pow(&z, l / r)) != Some(1)) {
                break z;
            }
        };
        // rescale so that z^(l/(q-1)) is the primitive root g of F_q
        let w = ext.to_base(&ext.pow(&z, l / (q - 1))).expect("power lands in F_q");
        let mut v = base.dlog(w, base.g).expect("w generates F_q^x");
        while gcd(v, l) != 1 {
            v += q - 1;
        }
        let gen = ext.pow(&z, v);
        Ok(FieldCtx { q, k, modulus, base, ext: Some(ext), gen, gen_order: BigUint::from(l), order })
    }

    pub fn ext(&self) -> Option<&ExtField> {
        self.ext.as_ref()
    }

    pub fn one(&self) -> Vec<u64> {
        let mut v = vec![0; self.k];
        v[0] = 1;
        v
    }

    pub fn elem(&self, c: &[u64]) -> Vec<u64> {
        match &self.ext {
            Some(e) => e.from_coeffs(c),
            None => vec![self.base.from_coeffs(c)],
        }
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        match &self.ext {
            Some(e) => e.mul(&a.to_vec(), &b.to_vec()),
            None => vec![mul_mod(a[0], b[0], self.q)],
        }
    }

    pub fn pow_big(&self, a: &[u64], e: &BigUint) -> Vec<u64> {
        match &self.ext {
            Some(x) => x.pow_big(&a.to_vec(), e),
            None => vec![self.base.pow_big(&a[0], e)],
        }
    }

    pub fn pow(&self, a: &[u64], e: u64) -> Vec<u64> {
        self.pow_big(a, &BigUint::from(e))
    }

    pub fn is_zero(&self, a: &[u64]) -> bool {
        a.iter().all(|&c| c == 0)
    }

    /// zeta_M = gen^(gen_order/M).
    pub fn root_of_unity(&self, m: u64) -> Result<Vec<u64>> {
        if m == 0 || !(&self.gen_order % m).is_zero() {
            return Err(Error::OrderNotDividing { m });
        }
        Ok(self.pow_big(&self.gen, &(&self.gen_order / m)))
    }

    /// Exponent d in Z/p^N with x^((q^k-1)/p^N) = (zeta_{p^N})^d.
    pub fn dlog_p_part(&self, x: &[u64], p: u64, n: u32) -> Result<u64> {
        let pn = p.pow(n);
        if !(&self.gen_order % pn).is_zero() {
            return Err(Error::OrderNotDividing { m: pn });
        }
        if self.is_zero(x) {
            return Err(Error::ZeroElement);
        }
        let y = self.pow_big(x, &(&self.order / pn));
        let zeta = self.root_of_unity(pn)?;
        Ok(match &self.ext {
            None => p_part_log(&self.base, &y[0], &zeta[0], p, n),
            Some(e) => p_part_log(e, &y.to_vec(), &zeta.to_vec(), p, n),
        })
    }
}

/// Solves y = zeta^d for d mod p^n, zeta of exact order p^n and y in <zeta>,
/// by lifting one base-p digit at a time against a table of p-th roots.
pub fn p_part_log<F: GaloisField>(f: &F, y: &F::Elem, zeta: &F::Elem, p: u64, n: u32) -> u64 {
    let pn1 = p.pow(n - 1);
    let zp = f.pow(zeta, pn1);
    let table: Vec<F::Elem> = (0..p).map(|j| f.pow(&zp, j)).collect();
    let zeta_inv = f.pow(zeta, p.pow(n) - 1);
    let mut d = 0u64;
    let mut pk = 1u64;
    for i in 0..n {
        let t = f.mul(y, &f.pow(&zeta_inv, d));
        let t = f.pow(&t, p.pow(n - 1 - i));
        let digit = table.iter().position(|e| *e == t).expect("element lies in the p-power subgroup") as u64;
        d += digit * pk;
        pk *= p;
    }
    d
}

/// Ready-made dlog on the prime field: (q-1)/p^n power compared with g.
pub fn prime_dlog_p_part(f: &PrimeField, x: u64, p: u64, n: u32) -> Result<u64> {
    let pn = p.pow(n);
    if (f.q - 1) % pn != 0 {
        return Err(Error::OrderNotDividing { m: pn });
    }
    if x % f.q == 0 {
        return Err(Error::ZeroElement);
    }
    let e = (f.q - 1) / pn;
    let y = pow_mod(x, e, f.q);
    let zeta = pow_mod(f.g, e, f.q);
    Ok(p_part_log(f, &y, &zeta, p, n))
}

impl FieldCtx {
    pub fn order_u64(&self) -> Option<u64> {
        self.order.to_u64()
    }

    pub fn is_one(&self, a: &[u64]) -> bool {
        a[0] == 1 && a[1..].iter().all(|&c| c == 0)
    }

    pub fn order_of(&self, a: &[u64]) -> Option<u64> {
        let n = self.order.to_u64()?;
        let mut ord = n;
        for (r, _) in factor(n) {
            while ord % r == 0 && self.is_one(&self.pow(a, ord / r)) {
                ord /= r;
            }
        }
        Some(ord)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_field_examples() {
        let f7 = make_field(7, 1).unwrap();
        assert_eq!(f7.gen, vec![3]);
        assert_eq!(f7.root_of_unity(1).unwrap(), vec![1]);
        assert_eq!(f7.root_of_unity(3).unwrap(), vec![2]);
        assert_eq!(f7.root_of_unity(5), Err(Error::OrderNotDividing { m: 5 }));
        let f25 = make_field(5, 2).unwrap();
        assert_eq!(f25.order_of(&f25.gen), Some(24));
        assert_eq!(make_field(4, 1).unwrap_err(), Error::NotPrime(4));
        assert!(matches!(make_field(1_000_003, 4), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn spec_dlog_examples() {
        let f7 = make_field(7, 1).unwrap();
        assert_eq!(f7.dlog_p_part(&[1], 3, 1).unwrap(), 0);
        assert_eq!(f7.dlog_p_part(&[3], 3, 1).unwrap(), 1);
        assert_eq!(f7.dlog_p_part(&[2], 3, 1).unwrap(), 2);
        assert_eq!(f7.dlog_p_part(&[0], 3, 1), Err(Error::ZeroElement));
        assert!(f7.dlog_p_part(&[2], 3, 2).is_err());
    }

    fn all_elems(f: &FieldCtx) -> Vec<Vec<u64>> {
        let n = f.order_u64().unwrap() + 1;
        (1..n as u128).map(|j| digits(j, f.q, f.k)).collect()
    }

    #[test]
    fn dlog_matches_exhaustive_search() {
        for (q, k, p, n) in [(7u64, 1usize, 3u64, 1u32), (19, 1, 3, 2), (2, 6, 3, 2), (5, 2, 3, 1), (7, 3, 3, 2), (109, 1, 3, 3), (11, 2, 5, 1), (7, 4, 5, 2)] {
            let f = make_field(q, k).unwrap();
            let pn = p.pow(n);
            let total = f.order_u64().unwrap();
            let zeta = f.pow(&f.gen, total / pn);
            for x in all_elems(&f) {
                let y = f.pow(&x, total / pn);
                let brute = (0..pn).find(|&d| f.pow(&zeta, d) == y).unwrap();
                assert_eq!(f.dlog_p_part(&x, p, n).unwrap(), brute, "F_{q}^{k} x={x:?}");
            }
        }
    }

    #[test]
    fn root_compatibility_and_norm_of_generator() {
        let f = make_field(7, 3).unwrap();
        let total = f.order_u64().unwrap();
        for m in crate::arith::divisors(total) {
            for m2 in crate::arith::divisors(total).into_iter().filter(|d| d % m == 0) {
                let z2 = f.root_of_unity(m2).unwrap();
                assert_eq!(f.pow(&z2, m2 / m), f.root_of_unity(m).unwrap());
            }
        }
        // zeta_6 agrees with the prime field's choice
        let z6 = f.root_of_unity(6).unwrap();
        assert_eq!(z6, f.elem(&[pow_mod(3, 1, 7)]));
    }

    #[test]
    fn conductor_fields_share_prime_roots() {
        // F_13(zeta_257): degree ord_257(13)
        let f = FieldCtx::for_conductor(13, 257 * 3, DEFAULT_EVAL_BITS).unwrap();
        assert_eq!(f.k as u64, mult_order(13, 257 * 3));
        let z = f.root_of_unity(257).unwrap();
        assert!(!f.is_one(&z));
        assert!(f.is_one(&f.pow(&z, 257)));
        let z12 = f.root_of_unity(12).unwrap();
        assert_eq!(z12, f.elem(&[2]));
        let x = f.elem(&[5]);
        let y = f.elem(&[7, 1]);
        let a = f.dlog_p_part(&x, 3, 1).unwrap();
        let b = f.dlog_p_part(&y, 3, 1).unwrap();
        assert_eq!(f.dlog_p_part(&f.mul(&x, &y), 3, 1).unwrap(), (a + b) % 3);
    }

    #[test]
    fn irreducibility_test_agrees_with_root_free_cubics() {
        // a cubic over F_q is irreducible iff it has no root
        let q = 5u64;
        for j in 0..125u128 {
            let mut f = digits(j, q, 3);
            f.push(1);
            let has_root = (0..q).any(|x| {
                f.iter().rev().fold(0u64, |acc, &c| add_mod(mul_mod(acc, x, q), c, q)) == 0
            });
            assert_eq!(is_irreducible(&f, q), !has_root, "{f:?}");
        }
    }

    #[test]
    fn full_dlog() {
        let f = PrimeField::new(1_000_003).unwrap();
        for y in [2u64, 17, 999_999, 123_456] {
            let d = f.dlog(f.g, y).unwrap();
            assert_eq!(pow_mod(f.g, d, f.q), y);
        }
    }
}
