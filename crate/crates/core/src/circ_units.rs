//! Basic circular units of F_m(mu_n), Kolyvagin derivatives and their
//! reduction modulo auxiliary primes.
//!
//! Nothing here is an algebraic number. A unit is a recipe: a primitive
//! M-th root exponent `x`, a set `T` of residues mod M whose product of
//! (1 - zeta_M^(x t)) is the relative norm, and Galois elements act by
//! multiplying exponents. Reduction at a prime above q picks zeta_M inside
//! a finite field.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{
    crt, gcd, inv_mod, lcm, mul_mod, pow_mod, prime_dlog_p_part, ExtField, FieldCtx, GaloisField, PrimeField,
    DEFAULT_EVAL_BITS,
};
use crate::error::{Error, Result};
use crate::field_ctx::{AbelianFieldCtx, KolyvaginPrime};
use crate::group_ring::GroupRingElement;

/// Default bound on the number of multi-indices in a D_n expansion.
pub const DEFAULT_EXPANSION_CAP: u64 = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UnitKind {
    /// eta^d_m(n), d | f_K, d > 1
    D(u64),
    /// eta^{1,a}_m(n), p does not divide a
    A(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolFactor {
    pub kind: UnitKind,
    /// Coefficients over Gal(F_m/Q), indexed like `ctx.group`.
    pub exponent: Vec<i64>,
}

/// A word in the basic circular units of F_m(mu_n). Changing `n` keeps
/// the word, which is how an Euler system family is carried around.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircularUnitSymbol {
    pub m: u32,
    pub n: u64,
    pub factors: Vec<SymbolFactor>,
}

impl CircularUnitSymbol {
    pub fn new(ctx: &AbelianFieldCtx, n: u64, factors: Vec<SymbolFactor>) -> Result<Self> {
        if n == 0 || gcd(n, ctx.p * ctx.d) != 1 {
            return Err(Error::InvalidInput(format!("n = {n} must be prime to p f_K")));
        }
        for f in &factors {
            match f.kind {
                UnitKind::D(d) if d <= 1 || ctx.d % d != 0 => {
                    return Err(Error::InvalidInput(format!("d = {d} must be a divisor > 1 of {}", ctx.d)))
                }
                UnitKind::A(a) if a % ctx.p == 0 => {
                    return Err(Error::InvalidInput(format!("a = {a} must be prime to {}", ctx.p)))
                }
                _ => {}
            }
            if f.exponent.len() != ctx.group.order() {
                return Err(Error::MixedAmbient);
            }
        }
        Ok(CircularUnitSymbol { m: ctx.m, n, factors })
    }

    /// A single basic unit with exponent 1.
    pub fn basic(ctx: &AbelianFieldCtx, kind: UnitKind, n: u64) -> Result<Self> {
        let mut e = vec![0i64; ctx.group.order()];
        e[0] = 1;
        Self::new(ctx, n, vec![SymbolFactor { kind, exponent: e }])
    }

    /// eta^{f_K}_m(n), the unit the chi-part is built from.
    pub fn eta(ctx: &AbelianFieldCtx, n: u64) -> Result<Self> {
        Self::basic(ctx, UnitKind::D(ctx.d), n)
    }

    pub fn with_n(&self, n: u64) -> Self {
        CircularUnitSymbol { n, ..self.clone() }
    }

    pub fn is_trivial(&self) -> bool {
        self.factors.iter().all(|f| f.exponent.iter().all(|&c| c == 0))
    }

    /// Product of two words.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.n != other.n || self.m != other.m {
            return Err(Error::MixedAmbient);
        }
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Ok(CircularUnitSymbol { m: self.m, n: self.n, factors })
    }

    /// Integer power.
    pub fn pow(&self, e: i64) -> Self {
        let factors = self
            .factors
            .iter()
            .map(|f| SymbolFactor { kind: f.kind, exponent: f.exponent.iter().map(|c| c * e).collect() })
            .collect();
        CircularUnitSymbol { factors, ..self.clone() }
    }

    /// Apply the group element g to the word.
    pub fn act(&self, ctx: &AbelianFieldCtx, g: usize) -> Self {
        let order = ctx.group.order();
        let factors = self
            .factors
            .iter()
            .map(|f| {
                let mut e = vec![0i64; order];
                for (h, &c) in f.exponent.iter().enumerate() {
                    e[ctx.group.add(g, h)] += c;
                }
                SymbolFactor { kind: f.kind, exponent: e }
            })
            .collect();
        CircularUnitSymbol { factors, ..self.clone() }
    }

    /// Conductor of every root of unity the word touches.
    pub fn conductor(&self, ctx: &AbelianFieldCtx) -> u64 {
        self.factors.iter().fold(1, |acc, f| lcm(acc, unit_modulus(ctx, f.kind, self.n)))
    }
}

/// D_n = prod_i D_{l_i}, kept as its list of primes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivativeOperator {
    pub primes: Vec<KolyvaginPrime>,
}

impl DerivativeOperator {
    pub fn new(primes: Vec<KolyvaginPrime>) -> Self {
        DerivativeOperator { primes }
    }

    pub fn n(&self) -> u64 {
        self.primes.iter().map(|l| l.ell).product()
    }

    /// Number of multi-indices (k_1, ..., k_r) in the expansion.
    pub fn expansion_size(&self) -> u128 {
        self.primes.iter().map(|l| (l.ell - 2) as u128).product()
    }
}

/// kappa_{m,N}(n), carried as eta(n)^{D_n}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivativeClass {
    pub symbol: CircularUnitSymbol,
    pub op: DerivativeOperator,
    pub precision: u32,
    pub m: u32,
}

impl DerivativeClass {
    /// `family` is re-based at n = product of `primes`; every prime must lie
    /// in S_N and the product must be square-free.
    pub fn new(ctx: &AbelianFieldCtx, family: &CircularUnitSymbol, primes: &[u64]) -> Result<Self> {
        let mut seen = primes.to_vec();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != primes.len() {
            return Err(Error::InvalidInput("n must be square-free".into()));
        }
        if let Some(&l) = primes.iter().find(|&&l| !ctx.in_s_n(l)) {
            return Err(Error::InvalidInput(format!("{l} is not a Kolyvagin prime for N = {}", ctx.n)));
        }
        let op = DerivativeOperator::new(primes.iter().map(|&l| KolyvaginPrime::new(l, ctx.p)).collect());
        let n = op.n();
        CircularUnitSymbol::new(ctx, n, family.factors.clone())?;
        Ok(DerivativeClass { symbol: family.with_n(n), op, precision: ctx.n, m: ctx.m })
    }

    pub fn n(&self) -> u64 {
        self.symbol.n
    }

    /// Same family over n / ell.
    pub fn drop_prime(&self, ell: u64) -> Result<Self> {
        if self.n() % ell != 0 {
            return Err(Error::NotDividing { ell, n: self.n() });
        }
        let primes: Vec<KolyvaginPrime> = self.op.primes.iter().copied().filter(|l| l.ell != ell).collect();
        let op = DerivativeOperator::new(primes);
        Ok(DerivativeClass { symbol: self.symbol.with_n(op.n()), op, ..self.clone() })
    }
}

/// Root-of-unity order M for a basic unit over F_m(mu_n).
pub fn unit_modulus(ctx: &AbelianFieldCtx, kind: UnitKind, n: u64) -> u64 {
    match kind {
        UnitKind::D(d) => ctx.pm1 * n * d,
        UnitKind::A(_) => ctx.pm1 * n,
    }
}

/// Exponent data of a basic unit: value = prod_{t in T} (1 - z^(x t)) over
/// prod_{t in T} (1 - z^(x' t)) when a denominator is present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitData {
    pub modulus: u64,
    pub x: u64,
    pub x_den: Option<u64>,
    pub norm_set: Vec<u64>,
}

pub fn unit_data(ctx: &AbelianFieldCtx, kind: UnitKind, n: u64) -> UnitData {
    let pm1 = ctx.pm1;
    let p_m = ctx.p.pow(ctx.m);
    let big_m = unit_modulus(ctx, kind, n);
    let mut signs = vec![1u64];
    if pm1 - 1 != 1 {
        signs.push(pm1 - 1);
    }
    match kind {
        UnitKind::D(d) => {
            // zeta_d^{p^-m} zeta_{n p^{m+1}}
            let c = inv_mod(p_m % d, d).expect("p prime to d");
            let x = ((big_m / d) as u128 * c as u128 + d as u128) as u64 % big_m;
            // images of ker chi_{f_K} in (Z/d)^x
            let mut bs: Vec<u64> =
                (1..ctx.d).filter(|&b| ctx.chi_d(b) == 1).map(|b| b % d).collect();
            bs.sort_unstable();
            bs.dedup();
            let mut t = Vec::with_capacity(signs.len() * bs.len());
            for &s in &signs {
                for &b in &bs {
                    let mut parts = vec![(s, pm1), (b, d)];
                    if n > 1 {
                        parts.push((1, n));
                    }
                    t.push(crt(&parts).0);
                }
            }
            t.sort_unstable();
            t.dedup();
            UnitData { modulus: big_m, x, x_den: None, norm_set: t }
        }
        UnitKind::A(a) => {
            // zeta_n^{p^-m} zeta_{p^{m+1}}^a over the same with a = 1
            let c = if n > 1 { inv_mod(p_m % n, n).expect("p prime to n") } else { 0 };
            let xa = |a: u64| ((pm1 as u128 * c as u128 + n as u128 * a as u128) % big_m as u128) as u64;
            let mut t: Vec<u64> = signs
                .iter()
                .map(|&s| if n > 1 { crt(&[(s, pm1), (1, n)]).0 } else { s })
                .collect();
            t.sort_unstable();
            t.dedup();
            UnitData { modulus: big_m, x: xa(a % pm1), x_den: Some(xa(1)), norm_set: t }
        }
    }
}

/// Sign conventions and limits shared by every evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    pub cap: u64,
    pub field_bits: u32,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { cap: DEFAULT_EXPANSION_CAP, field_bits: DEFAULT_EVAL_BITS }
    }
}

/// The residue field at the distinguished prime above q of F_m(mu_n),
/// together with the roots of unity that make it distinguished.
pub struct Evaluator<'a> {
    pub ctx: &'a AbelianFieldCtx,
    pub q: u64,
    pub n: u64,
    pub field: FieldCtx,
    /// p^{m+1} f_K n
    pub conductor: u64,
}

impl<'a> Evaluator<'a> {
    pub fn new(ctx: &'a AbelianFieldCtx, q: u64, n: u64, bits: u32) -> Result<Self> {
        let conductor = (ctx.pm1 as u128 * ctx.d as u128 * n as u128)
            .try_into()
            .ok()
            .filter(|&c: &u64| c < 1 << 62)
            .ok_or_else(|| Error::BudgetExceeded(format!("conductor of F_m(mu_{n})")))?;
        if q == ctx.p || gcd(q, conductor) != 1 {
            return Err(Error::ConductorClash { q, m: conductor });
        }
        let field = FieldCtx::for_conductor(q, conductor, bits)?;
        Ok(Evaluator { ctx, q, n, field, conductor })
    }

    pub fn root(&self, m: u64) -> Result<Vec<u64>> {
        self.field.root_of_unity(m)
    }

    /// Reduction of tau(sym) where tau acts by t -> t * tau on exponents.
    /// `tau` is a unit modulo the conductor.
    pub fn symbol_value(&self, sym: &CircularUnitSymbol, tau: u64) -> Result<Vec<u64>> {
        if sym.n != self.n {
            return Err(Error::MixedAmbient);
        }
        match self.field.ext() {
            None => Ok(vec![symbol_value_in(&self.field.base, self, sym, tau)?]),
            Some(e) => symbol_value_in(e, self, sym, tau),
        }
    }

    /// `(tau_g, modulus)` lifting g to the conductor, 1 modulo n.
    pub fn lift(&self, g: usize) -> u64 {
        self.ctx.lift(g, self.n).0
    }

    /// Weighted logs of tau(eta)^{D_n} for each tau in `taus`.
    fn derivative_logs(
        &self,
        data: &UnitData,
        primes: &[KolyvaginPrime],
        taus: &[u64],
        opts: &EvalOptions,
    ) -> Result<Vec<u64>> {
        let z = self.root(data.modulus)?;
        let (p, nn) = (self.ctx.p, self.ctx.n);
        let split = primes.len() >= 2;
        match self.field.ext() {
            None => derivative_logs_in(&self.field.base, &self.field.base, &z[0], data, primes, taus, p, nn, opts, split),
            Some(e) => derivative_logs_in(e, &self.field.base, &z, data, primes, taus, p, nn, opts, split),
        }
    }

    /// The conjugate vector of dlogs of the class at the primes above q:
    /// coefficient of g is dlog(iota(g^-1 kappa)), summed over factors.
    pub fn kappa_vector(&self, cls: &DerivativeClass, twist: u64, opts: &EvalOptions) -> Result<GroupRingElement> {
        let ctx = self.ctx;
        let ring = ctx.gal_ring.clone();
        let order = ctx.group.order();
        let conductor = self.conductor;
        let taus: Vec<u64> = (0..order)
            .map(|g| {
                let t = self.lift(g);
                mul_mod(inv_mod(t, conductor).expect("lift is a unit"), twist, conductor)
            })
            .collect();
        let mut total = ring.zero();
        let mut cache: Vec<(UnitKind, GroupRingElement)> = Vec::new();
        for f in &cls.symbol.factors {
            if f.exponent.iter().all(|&c| c == 0) {
                continue;
            }
            let v = match cache.iter().find(|(k, _)| *k == f.kind) {
                Some((_, v)) => v.clone(),
                None => {
                    let data = unit_data(ctx, f.kind, cls.n());
                    let local: Vec<u64> = taus.iter().map(|&t| t % data.modulus).collect();
                    let logs = self.derivative_logs(&data, &cls.op.primes, &local, opts)?;
                    let v = ring.from_residues(logs);
                    cache.push((f.kind, v.clone()));
                    v
                }
            };
            total = total.add(&ring.from_coeffs(&f.exponent).mul(&v)?)?;
        }
        Ok(total)
    }
}

fn symbol_value_in<F: GaloisField>(
    f: &F,
    ev: &Evaluator<'_>,
    sym: &CircularUnitSymbol,
    tau: u64,
) -> Result<F::Elem> {
    let ctx = ev.ctx;
    let mut acc = f.one();
    for fac in &sym.factors {
        let data = unit_data(ctx, fac.kind, sym.n);
        let z = f.from_coeffs(&ev.root(data.modulus)?);
        for (h, &c) in fac.exponent.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let t = mul_mod(tau % data.modulus, ev.lift(h) % data.modulus, data.modulus);
            let mut v = norm_product(f, &z, data.x, &data.norm_set, t, data.modulus);
            if let Some(xd) = data.x_den {
                let den = norm_product(f, &z, xd, &data.norm_set, t, data.modulus);
                v = f.mul(&v, &f.inv(&den));
            }
            let v = if c > 0 { v } else { f.inv(&v) };
            acc = f.mul(&acc, &f.pow(&v, c.unsigned_abs()));
        }
    }
    Ok(acc)
}

fn norm_product<F: GaloisField>(f: &F, z: &F::Elem, x: u64, set: &[u64], tau: u64, m: u64) -> F::Elem {
    set.iter().fold(f.one(), |acc, &t| {
        let e = mul_mod(mul_mod(x, t, m), tau, m);
        f.mul(&acc, &f.one_minus(&f.pow(z, e)))
    })
}

/// Idempotent of Z/M that is 1 modulo `a` and 0 modulo M/a.
fn idempotent(a: u64, big_m: u64) -> u64 {
    let b = big_m / a;
    if b == 1 {
        return 1 % big_m;
    }
    crt(&[(1, a), (0, b)]).0
}

/// For every tau, sum over multi-indices k of (k_1 ... k_r) dlog iota(tau
/// sigma^k eta). Multi-indices sharing the weight mod p^N are multiplied
/// together first, so only p^N dlogs are taken per tau.
#[allow(clippy::too_many_arguments)]
fn derivative_logs_in<F: GaloisField>(
    f: &F,
    base: &PrimeField,
    z: &F::Elem,
    data: &UnitData,
    primes: &[KolyvaginPrime],
    taus: &[u64],
    p: u64,
    nn: u32,
    opts: &EvalOptions,
    split: bool,
) -> Result<Vec<u64>> {
    let size: u128 = primes.iter().map(|l| (l.ell - 2) as u128).product();
    if size > opts.cap as u128 {
        return Err(Error::BudgetExhausted(format!("D_n expansion of {size} terms exceeds {}", opts.cap)));
    }
    let pn = p.pow(nn);
    let big_m = data.modulus;
    let n: u64 = primes.iter().map(|l| l.ell).product();
    let e_rest = idempotent(big_m / n, big_m);
    let mut out = Vec::with_capacity(taus.len());
    for &tau in taus {
        // the n-free part of each exponent, for numerator and denominator
        let z_part = |x: u64| -> Vec<F::Elem> {
            data.norm_set
                .iter()
                .map(|&t| {
                    let e = mul_mod(mul_mod(mul_mod(x, t, big_m), tau, big_m), e_rest, big_m);
                    f.pow(z, e)
                })
                .collect()
        };
        let zn = z_part(data.x);
        let zd = data.x_den.map(z_part);
        // W_i[k] = zeta^(E_i (c_i s_i^k mod l_i)), with c_i = x tau mod l_i
        let tables: Vec<Vec<F::Elem>> = primes
            .iter()
            .map(|l| {
                let e_i = idempotent(l.ell, big_m);
                let c = mul_mod(data.x % l.ell, tau % l.ell, l.ell);
                (1..=l.ell - 2)
                    .map(|k| {
                        let r = mul_mod(c, pow_mod(l.s_ell, k, l.ell), l.ell);
                        f.pow(z, mul_mod(e_i, r, big_m))
                    })
                    .collect()
            })
            .collect();
        let (num, den) = if split {
            split_terms(f, &zn, zd.as_deref(), &tables, pn)?
        } else {
            direct_terms(f, &zn, zd.as_deref(), &tables, pn)?
        };
        let mut total = 0u64;
        for w in 1..pn {
            let a = base_log(f, base, &num[w as usize], p, nn)?;
            let b = base_log(f, base, &den[w as usize], p, nn)?;
            let diff = (a + pn - b) % pn;
            total = (total + w * diff) % pn;
        }
        out.push(total);
    }
    Ok(out)
}

type Buckets<E> = (Vec<E>, Vec<E>);

fn rational<F: GaloisField>(f: &F, v: F::Elem) -> Result<F::Elem> {
    if f.to_base(&v).is_none() {
        return Err(Error::InconsistentField("conjugate of a basic unit is not rational at a split prime".into()));
    }
    Ok(v)
}

fn merge<F: GaloisField>(f: &F, (a, b): Buckets<F::Elem>, (c, d): Buckets<F::Elem>) -> Buckets<F::Elem> {
    let num = a.iter().zip(&c).map(|(x, y)| f.mul(x, y)).collect();
    let den = b.iter().zip(&d).map(|(x, y)| f.mul(x, y)).collect();
    (num, den)
}

/// Products of prod_t (1 - z_t y_k) over the multi-indices k, bucketed by
/// the weight (k_1 + 1)...(k_r + 1) mod p^N, one term at a time.
fn direct_terms<F: GaloisField>(
    f: &F,
    zn: &[F::Elem],
    zd: Option<&[F::Elem]>,
    tables: &[Vec<F::Elem>],
    pn: u64,
) -> Result<Buckets<F::Elem>> {
    let first_len = tables.first().map_or(1, |t| t.len());
    let rest = if tables.is_empty() { tables } else { &tables[1..] };
    let init = || (vec![f.one(); pn as usize], vec![f.one(); pn as usize]);
    (0..first_len)
        .into_par_iter()
        .map(|k1| -> Result<Buckets<F::Elem>> {
            let (mut num, mut den) = init();
            let (y0, w0) = match tables.first() {
                Some(t) => (t[k1].clone(), (k1 as u64 + 1) % pn),
                None => (f.one(), 1 % pn),
            };
            let mut idx = vec![0usize; rest.len()];
            loop {
                let mut y = y0.clone();
                let mut w = w0;
                for (t, &k) in rest.iter().zip(&idx) {
                    y = f.mul(&y, &t[k]);
                    w = w * ((k as u64 + 1) % pn) % pn;
                }
                let term = |zs: &[F::Elem]| {
                    rational(f, zs.iter().fold(f.one(), |acc, zt| f.mul(&acc, &f.one_minus(&f.mul(zt, &y)))))
                };
                num[w as usize] = f.mul(&num[w as usize], &term(zn)?);
                if let Some(zd) = zd {
                    den[w as usize] = f.mul(&den[w as usize], &term(zd)?);
                }
                // odometer
                let mut i = 0;
                while i < idx.len() {
                    idx[i] += 1;
                    if idx[i] < rest[i].len() {
                        break;
                    }
                    idx[i] = 0;
                    i += 1;
                }
                if i == idx.len() {
                    break;
                }
            }
            Ok((num, den))
        })
        .try_reduce(init, |a, b| Ok(merge(f, a, b)))
}

/// Coefficients of prod_t (1 - z_t Y).
fn norm_poly<F: GaloisField>(f: &F, zs: &[F::Elem]) -> Vec<F::Elem> {
    let minus_one = f.one_minus(&f.from_coeffs(&[2]));
    let mut c = vec![f.one()];
    for zt in zs {
        let m = f.mul(&minus_one, zt);
        c.push(f.zero());
        for j in (1..c.len()).rev() {
            let t = f.mul(&m, &c[j - 1]);
            c[j] = f.add(&c[j], &t);
        }
    }
    c
}

/// Same buckets as `direct_terms`. Each term is P(y) with P the norm
/// polynomial and y = y_1 rho, y_1 of order l_1 and rho built from the other
/// primes. For fixed rho the coefficients a_j rho^j are folded modulo
/// Y^{l_1} - 1, and every y_1 then costs min(l_1, deg P + 1) steps of Horner
/// in place of deg P multiplications.
fn split_terms<F: GaloisField>(
    f: &F,
    zn: &[F::Elem],
    zd: Option<&[F::Elem]>,
    tables: &[Vec<F::Elem>],
    pn: u64,
) -> Result<Buckets<F::Elem>> {
    let (first, rest) = tables.split_first().expect("at least one prime");
    let l1 = first.len() + 2;
    let polys: Vec<Vec<F::Elem>> = std::iter::once(zn).chain(zd).map(|zs| norm_poly(f, zs)).collect();
    let outer: usize = rest.iter().map(|t| t.len()).product();
    let init = || (vec![f.one(); pn as usize], vec![f.one(); pn as usize]);
    (0..outer)
        .into_par_iter()
        .map(|mut code| -> Result<Buckets<F::Elem>> {
            let (mut num, mut den) = init();
            let mut rho = f.one();
            let mut w_rest = 1 % pn;
            for t in rest {
                let k = code % t.len();
                code /= t.len();
                rho = f.mul(&rho, &t[k]);
                w_rest = w_rest * ((k as u64 + 1) % pn) % pn;
            }
            for (which, a) in polys.iter().enumerate() {
                let width = l1.min(a.len());
                let mut folded = vec![f.zero(); width];
                let mut power = f.one();
                for (j, aj) in a.iter().enumerate() {
                    let t = f.mul(aj, &power);
                    folded[j % width] = f.add(&folded[j % width], &t);
                    power = f.mul(&power, &rho);
                }
                let bucket = if which == 0 { &mut num } else { &mut den };
                for (k1, y1) in first.iter().enumerate() {
                    let v = folded.iter().rev().fold(f.zero(), |acc, c| f.add(&f.mul(&acc, y1), c));
                    let w = ((k1 as u64 + 1) % pn * w_rest % pn) as usize;
                    bucket[w] = f.mul(&bucket[w], &rational(f, v)?);
                }
            }
            Ok((num, den))
        })
        .try_reduce(init, |a, b| Ok(merge(f, a, b)))
}

fn base_log<F: GaloisField>(f: &F, base: &PrimeField, v: &F::Elem, p: u64, nn: u32) -> Result<u64> {
    let b = f.to_base(v).ok_or_else(|| Error::InconsistentField("product left the prime field".into()))?;
    prime_dlog_p_part(base, b, p, nn)
}

/// Checks the evaluation hypotheses: q = 1 mod p^N, q split in F_m(mu_n).
pub fn check_split(ctx: &AbelianFieldCtx, q: u64, n: u64) -> Result<()> {
    if !crate::arith::is_prime(q) {
        return Err(Error::NotPrime(q));
    }
    if n % q == 0 {
        return Err(Error::NotSplit(format!("{q} divides n = {n}")));
    }
    if (q - 1) % ctx.ring.modulus != 0 {
        return Err(Error::NotSplit(format!("{q} is not 1 mod {}", ctx.ring.modulus)));
    }
    if !ctx.splits_completely(q, n) {
        return Err(Error::NotSplit(format!("{q} does not split completely in F_{}(mu_{n})", ctx.m)));
    }
    Ok(())
}

/// Conjugate vector of dlog residues of kappa(n) at the primes above q.
pub fn evaluate_kappa(ctx: &AbelianFieldCtx, cls: &DerivativeClass, q: u64) -> Result<GroupRingElement> {
    evaluate_kappa_with(ctx, cls, q, 1, &EvalOptions::default())
}

/// As `evaluate_kappa`, after acting by the element of Gal(F_m(mu_n)/F_m)
/// that is `twist` modulo n.
pub fn evaluate_kappa_with(
    ctx: &AbelianFieldCtx,
    cls: &DerivativeClass,
    q: u64,
    twist: u64,
    opts: &EvalOptions,
) -> Result<GroupRingElement> {
    let n = cls.n();
    check_split(ctx, q, n)?;
    let ev = Evaluator::new(ctx, q, n, opts.field_bits)?;
    let t = if n > 1 { crt(&[(1, ctx.pm1 * ctx.d), (twist % n, n)]).0 } else { 1 };
    ev.kappa_vector(cls, t, opts)
}

/// Reduction of conj(sym) at the distinguished prime above q.
pub fn evaluate_symbol(ctx: &AbelianFieldCtx, sym: &CircularUnitSymbol, q: u64, conj: usize) -> Result<Vec<u64>> {
    let ev = Evaluator::new(ctx, q, sym.n, DEFAULT_EVAL_BITS)?;
    ev.symbol_value(sym, ev.lift(conj))
}

/// Whether Frob_ell acts trivially on every basic unit of the word over
/// F_m(mu_{n/ell}); the norm relation holds in its stated form exactly then.
fn frobenius_twist_trivial(ctx: &AbelianFieldCtx, sym: &CircularUnitSymbol, ell: u64) -> bool {
    sym.factors.iter().all(|f| match f.kind {
        UnitKind::D(d) => d != ctx.d || ctx.chi_d(ell) == 1,
        UnitKind::A(_) => ell % ctx.pm1 == 1 || ell % ctx.pm1 == ctx.pm1 - 1,
    })
}

/// N_{F_m(mu_n)/F_m(mu_{n/l})} eta(n) = eta(n/l)^{1 - Frob_l^{-1}}, compared
/// exactly in the residue field at q.
pub fn norm_relation_check(
    ctx: &AbelianFieldCtx,
    family: &CircularUnitSymbol,
    n: u64,
    ell: u64,
    q: u64,
) -> Result<bool> {
    if n % ell != 0 || ell == 1 {
        return Err(Error::NotDividing { ell, n });
    }
    if !frobenius_twist_trivial(ctx, family, ell) {
        return Err(Error::NotSplit(format!("Frob_{ell} moves the base unit")));
    }
    norm_relation_unchecked(ctx, family, n, ell, q)
}

fn norm_relation_unchecked(
    ctx: &AbelianFieldCtx,
    family: &CircularUnitSymbol,
    n: u64,
    ell: u64,
    q: u64,
) -> Result<bool> {
    let sym_n = CircularUnitSymbol::new(ctx, n, family.factors.clone())?;
    let sym_m = sym_n.with_n(n / ell);
    let big = Evaluator::new(ctx, q, n, DEFAULT_EVAL_BITS)?;
    let rest = big.conductor / ell;
    let mut lhs = big.field.one();
    for h in 1..ell {
        let t = crt(&[(h, ell), (1, rest)]).0;
        lhs = big.field.mul(&lhs, &big.symbol_value(&sym_n, t)?);
    }
    // eta(n/l) is evaluated in the same field so the roots of unity agree
    let lifted = Evaluator { ctx, q, n: n / ell, field: big.field.clone(), conductor: rest };
    let a = lifted.symbol_value(&sym_m, 1)?;
    let frob_inv = inv_mod(ell % rest, rest).expect("ell prime to the conductor");
    let b = lifted.symbol_value(&sym_m, frob_inv)?;
    let rhs = match big.field.ext() {
        None => vec![mul_mod(a[0], inv_mod(b[0], q).ok_or(Error::ZeroElement)?, q)],
        Some(e) => e.mul(&a, &e.inv(&b)),
    };
    Ok(lhs == rhs)
}

/// Field wrapper used when a caller holds raw coefficient vectors.
pub fn field_inverse(f: &FieldCtx, a: &[u64]) -> Vec<u64> {
    match f.ext() {
        None => vec![inv_mod(a[0], f.q).expect("nonzero")],
        Some(e) => <ExtField as GaloisField>::inv(e, &a.to_vec()),
    }
}
