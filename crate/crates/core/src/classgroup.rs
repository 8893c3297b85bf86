//! Narrow class groups of real quadratic fields from indefinite binary
//! quadratic forms, used as an oracle for the p-part of the class group.
//!
//! Only odd p is ever asked about, and the kernel of the narrow-to-wide map
//! has order at most 2, so the narrow group gives the right p-part.

use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;
use std::path::Path;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{is_fundamental_discriminant, is_prime, isqrt, kronecker, valuation};
use crate::error::{Error, Result};

/// Integer types forms can be built over.
pub trait FormInt: Integer + Signed + Clone + FromPrimitive + ToPrimitive + Debug + Hash + Send + Sync {}
impl<T: Integer + Signed + Clone + FromPrimitive + ToPrimitive + Debug + Hash + Send + Sync> FormInt for T {}

/// a x^2 + b x y + c y^2
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadForm<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

fn t<T: FormInt>(v: i64) -> T {
    T::from_i64(v).expect("small constant fits")
}

impl<T: FormInt> QuadForm<T> {
    pub fn new(a: T, b: T, c: T) -> Self {
        QuadForm { a, b, c }
    }

    /// The form (a, b, (b^2 - d)/4a) when that is integral.
    pub fn from_ab(a: T, b: T, d: &T) -> Option<Self> {
        let num = b.clone() * b.clone() - d.clone();
        let den = t::<T>(4) * a.clone();
        if den.is_zero() || !num.is_multiple_of(&den) {
            return None;
        }
        Some(QuadForm { a, b, c: num / den })
    }

    pub fn discriminant(&self) -> T {
        self.b.clone() * self.b.clone() - t::<T>(4) * self.a.clone() * self.c.clone()
    }

    /// 0 < b < sqrt D and sqrt D - b < 2|a| < sqrt D + b, with s = floor(sqrt D)
    /// and D not a square.
    pub fn is_reduced(&self, s: &T) -> bool {
        let two_a = t::<T>(2) * self.a.abs();
        self.b.is_positive()
            && self.b <= *s
            && two_a >= s.clone() - self.b.clone() + T::one()
            && two_a <= s.clone() + self.b.clone()
    }

    /// The reduction operator rho(a, b, c) = (c, b', (b'^2 - D)/4c) with
    /// b' = -b mod 2c normalized into the standard window.
    pub fn rho(&self, d: &T, s: &T) -> Self {
        let c_abs = self.c.abs();
        let m = t::<T>(2) * c_abs.clone();
        let low = if c_abs > *s { -c_abs } else { s.clone() - m.clone() };
        // b' in (low, low + m], b' = -b mod m
        let r = (-self.b.clone() - low.clone() - T::one()).mod_floor(&m);
        let b = low + T::one() + r;
        let num = b.clone() * b.clone() - d.clone();
        let c = num / (t::<T>(4) * self.c.clone());
        QuadForm { a: self.c.clone(), b, c }
    }

    /// Applies rho until the form is reduced.
    pub fn reduce(&self, d: &T, s: &T) -> Result<Self> {
        let mut f = self.clone();
        let bits = self.a.abs().bit_len() + self.c.abs().bit_len();
        for _ in 0..(64 + 4 * bits) {
            if f.is_reduced(s) {
                return Ok(f);
            }
            f = f.rho(d, s);
        }
        Err(Error::ReductionFailure(format!("{f:?}")))
    }

    /// The inverse class, which is also the Galois conjugate.
    pub fn inverse(&self) -> Self {
        QuadForm { a: self.a.clone(), b: -self.b.clone(), c: self.c.clone() }
    }

    pub fn principal(d: &T, s: &T) -> Self {
        // largest b <= s with b = d mod 2
        let b = if (s.clone() - d.clone()).is_even() { s.clone() } else { s.clone() - T::one() };
        Self::from_ab(T::one(), b, d).expect("principal form is integral")
    }

    /// Gauss composition (Shanks' formulation); the result is not reduced.
    pub fn compose(&self, other: &Self, d: &T) -> Self {
        let (f1, f2) = if self.a.abs() > other.a.abs() { (other, self) } else { (self, other) };
        let two = t::<T>(2);
        let s = (f1.b.clone() + f2.b.clone()) / two.clone();
        let n = f2.b.clone() - s.clone();
        let (y1, dd) = if f2.a.is_multiple_of(&f1.a) {
            (T::zero(), f1.a.clone())
        } else {
            let e = f2.a.extended_gcd(&f1.a);
            (e.x, e.gcd)
        };
        let (x2, y2, d1) = if s.is_multiple_of(&dd) {
            (T::zero(), -T::one(), dd.clone())
        } else {
            let e = s.extended_gcd(&dd);
            (e.x, -e.y, e.gcd)
        };
        let v1 = f1.a.clone() / d1.clone();
        let v2 = f2.a.clone() / d1;
        let r = (y1 * y2 * n - x2 * f2.c.clone()).mod_floor(&v1);
        let b3 = f2.b.clone() + two * v2.clone() * r;
        let a3 = v1 * v2;
        Self::from_ab(a3, b3, d).expect("composition stays integral")
    }
}

/// Bit length, used to bound the number of reduction steps.
trait BitLen {
    fn bit_len(&self) -> usize;
}

impl<T: FormInt> BitLen for T {
    fn bit_len(&self) -> usize {
        let mut x = self.abs();
        let two = t::<T>(2);
        let mut bits = 0;
        while !x.is_zero() {
            x = x / two.clone();
            bits += 1;
        }
        bits
    }
}

/// The narrow class group as a multiplication table on reduction cycles.
#[derive(Debug, Clone)]
pub struct FormClassGroup {
    pub d: u64,
    /// One representative per class, the smallest form of its cycle.
    pub reps: Vec<QuadForm<i128>>,
    pub cycles: Vec<Vec<QuadForm<i128>>>,
    pub table: Vec<Vec<usize>>,
    pub identity: usize,
    index: HashMap<QuadForm<i128>, usize>,
}

/// All reduced forms of discriminant d.
pub fn reduced_forms(d: u64, budget: usize) -> Result<Vec<QuadForm<i128>>> {
    let s = isqrt(d) as i128;
    let di = d as i128;
    let mut out = Vec::new();
    for b in 1..=s {
        if (b - di).rem_euclid(2) != 0 {
            continue;
        }
        let num = di - b * b; // = -4ac > 0
        let lo = (s - b + 2) / 2; // 2|a| >= s - b + 1
        let hi = (s + b) / 2;
        for a in lo.max(1)..=hi {
            if num % (4 * a) != 0 {
                continue;
            }
            for sa in [a, -a] {
                out.push(QuadForm::new(sa, b, -num / (4 * sa)));
                if out.len() > budget {
                    return Err(Error::BudgetExhausted(format!("more than {budget} reduced forms for D = {d}")));
                }
            }
        }
    }
    Ok(out)
}

impl FormClassGroup {
    pub fn s(&self) -> i128 {
        isqrt(self.d) as i128
    }

    pub fn order(&self) -> usize {
        self.reps.len()
    }

    /// Class of an arbitrary form of discriminant d.
    pub fn class_of(&self, f: &QuadForm<i128>) -> Result<usize> {
        let d = self.d as i128;
        if f.discriminant() != d {
            return Err(Error::InvalidInput(format!("{f:?} has discriminant {}", f.discriminant())));
        }
        let r = f.reduce(&d, &self.s())?;
        self.index.get(&r).copied().ok_or_else(|| Error::ReductionFailure(format!("{r:?} is in no cycle")))
    }

    pub fn mul(&self, x: usize, y: usize) -> usize {
        self.table[x][y]
    }

    pub fn pow(&self, x: usize, mut e: u64) -> usize {
        let (mut r, mut b) = (self.identity, x);
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        r
    }

    pub fn element_order(&self, x: usize) -> u64 {
        let mut y = x;
        let mut k = 1;
        while y != self.identity {
            y = self.mul(y, x);
            k += 1;
        }
        k
    }

    /// Class of principal ideals with a generator of negative norm; it is
    /// the identity exactly when the fundamental unit has norm -1.
    pub fn negative_principal(&self) -> usize {
        let d = self.d as i128;
        let f = QuadForm::principal(&d, &self.s());
        self.class_of(&QuadForm::new(-f.a, f.b, -f.c)).expect("form of discriminant d")
    }

    /// Order of x in the wide class group.
    pub fn wide_order(&self, x: usize) -> u64 {
        let theta = self.negative_principal();
        let mut y = x;
        let mut k = 1;
        while y != self.identity && y != theta {
            y = self.mul(y, x);
            k += 1;
        }
        k
    }

    pub fn inverse(&self, x: usize) -> usize {
        self.class_of(&self.reps[x].inverse()).expect("inverse of a class")
    }

    /// Elementary divisors of the p-part, largest first, from the counts
    /// |G[p^k]|.
    pub fn p_part(&self, p: u64) -> Vec<u64> {
        let h = self.order() as u64;
        let vp = valuation(h, p);
        let mut counts = vec![1u64];
        for k in 1..=vp {
            let pk = p.pow(k);
            counts.push((0..self.order()).filter(|&x| self.pow(x, pk) == self.identity).count() as u64);
        }
        // r_k = number of cyclic factors of order >= p^k
        let ranks: Vec<u32> = (1..counts.len()).map(|k| valuation(counts[k] / counts[k - 1], p)).collect();
        let mut divs = Vec::new();
        for (k, &r) in ranks.iter().enumerate() {
            let next = ranks.get(k + 1).copied().unwrap_or(0);
            for _ in 0..(r - next) {
                divs.push(p.pow(k as u32 + 1));
            }
        }
        divs.sort_unstable_by(|a, b| b.cmp(a));
        divs
    }

    /// Projection of a class to the p-part: x^(h / p^v).
    pub fn p_component(&self, x: usize, p: u64) -> usize {
        let h = self.order() as u64;
        let pv = p.pow(valuation(h, p));
        self.pow(x, h / pv)
    }

    /// Exponents of the p-part of x against `basis`.
    pub fn coordinates(&self, x: usize, p: u64, basis: &[(usize, u64)]) -> Option<Vec<u64>> {
        let target = self.p_component(x, p);
        let mut e = vec![0u64; basis.len()];
        loop {
            let y = basis.iter().zip(&e).fold(self.identity, |acc, (&(g, _), &k)| self.mul(acc, self.pow(g, k)));
            if y == target {
                return Some(e);
            }
            let mut i = 0;
            while i < e.len() {
                e[i] += 1;
                if e[i] < basis[i].1 {
                    break;
                }
                e[i] = 0;
                i += 1;
            }
            if i == e.len() {
                return None;
            }
        }
    }

    /// A basis of the p-part matching `p_part(p)`, by exhaustive search.
    pub fn p_basis(&self, p: u64) -> Vec<(usize, u64)> {
        let divs = self.p_part(p);
        let elems: Vec<usize> =
            (0..self.order()).map(|x| self.p_component(x, p)).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let mut basis = Vec::new();
        self.basis_rec(&divs, &elems, &mut basis);
        basis
    }

    fn span(&self, gens: &[(usize, u64)]) -> Vec<usize> {
        let mut set = vec![self.identity];
        for &(g, _) in gens {
            let mut next = set.clone();
            let mut y = g;
            while y != self.identity {
                for &s in &set {
                    next.push(self.mul(s, y));
                }
                y = self.mul(y, g);
            }
            next.sort_unstable();
            next.dedup();
            set = next;
        }
        set
    }

    fn basis_rec(&self, divs: &[u64], elems: &[usize], basis: &mut Vec<(usize, u64)>) -> bool {
        if basis.len() == divs.len() {
            return true;
        }
        let want = divs[basis.len()];
        let size: u64 = divs[..=basis.len()].iter().product();
        for &g in elems {
            if self.element_order(g) != want {
                continue;
            }
            basis.push((g, want));
            if self.span(basis).len() as u64 == size && self.basis_rec(divs, elems, basis) {
                return true;
            }
            basis.pop();
        }
        false
    }
}

/// Narrow class group of the positive fundamental discriminant d.
pub fn narrow_class_group(d: u64, budget: usize) -> Result<FormClassGroup> {
    if !is_fundamental_discriminant(d) {
        return Err(Error::NotFundamental(d));
    }
    let forms = reduced_forms(d, budget)?;
    let di = d as i128;
    let s = isqrt(d) as i128;
    let pos: HashMap<QuadForm<i128>, usize> = forms.iter().cloned().enumerate().map(|(i, f)| (f, i)).collect();
    let mut cycle_of = vec![usize::MAX; forms.len()];
    let mut cycles: Vec<Vec<QuadForm<i128>>> = Vec::new();
    for i in 0..forms.len() {
        if cycle_of[i] != usize::MAX {
            continue;
        }
        let mut cyc = Vec::new();
        let mut f = forms[i].clone();
        loop {
            let j = *pos.get(&f).ok_or_else(|| Error::ReductionFailure(format!("rho left the reduced set at {f:?}")))?;
            if cycle_of[j] != usize::MAX {
                break;
            }
            cycle_of[j] = cycles.len();
            cyc.push(f.clone());
            f = f.rho(&di, &s);
        }
        cycles.push(cyc);
    }
    let reps: Vec<QuadForm<i128>> = cycles
        .iter()
        .map(|c| c.iter().min_by_key(|f| (f.a.abs(), f.a.is_negative(), f.b)).unwrap().clone())
        .collect();
    let index: HashMap<QuadForm<i128>, usize> = forms.iter().cloned().zip(cycle_of.iter().copied()).collect();
    let identity = index[&QuadForm::principal(&di, &s).reduce(&di, &s)?];
    let h = reps.len();
    let mut g = FormClassGroup { d, reps, cycles, table: vec![], identity, index };
    let mut table = vec![vec![0usize; h]; h];
    for x in 0..h {
        for y in x..h {
            let z = g.class_of(&g.reps[x].compose(&g.reps[y], &di))?;
            table[x][y] = z;
            table[y][x] = z;
        }
    }
    g.table = table;
    // the conjugate of a class is its inverse
    for x in 0..h {
        if g.mul(x, g.inverse(x)) != g.identity {
            return Err(Error::ReductionFailure(format!("class {x} times its conjugate is not principal")));
        }
    }
    Ok(g)
}

/// The smallest b >= 0 with b^2 = d mod 4 ell.
pub fn prime_form_b(d: u64, ell: u64) -> Option<u64> {
    let fits = |b: u64| (b as u128 * b as u128) % (4 * ell as u128) == d as u128 % (4 * ell as u128);
    if ell == 2 || d % ell == 0 || !is_prime(ell) {
        return (0..2 * ell).find(|&b| fits(b));
    }
    // b is +-r mod ell with the parity of d
    let r = crate::arith::sqrt_mod(d % ell, ell)?;
    [r, r + ell, ell - r, 2 * ell - r].into_iter().filter(|&b| b < 2 * ell && fits(b)).min()
}

/// Class of ell_F = <ell, (-b + sqrt D)/2>, i.e. of the form (ell, b, c).
pub fn ideal_class_of_prime(ell: u64, group: &FormClassGroup) -> Result<usize> {
    let d = group.d;
    if ell == 2 || !is_prime(ell) || d % ell == 0 || kronecker(d as i64, ell) != 1 {
        return Err(Error::NotSplit(format!("{ell} does not split in Q(sqrt {d})")));
    }
    let b = prime_form_b(d, ell).expect("split prime has a square root");
    let f = QuadForm::from_ab(ell as i128, b as i128, &(d as i128)).expect("b^2 = D mod 4 ell");
    group.class_of(&f)
}

/// Fundamental unit (x + y sqrt D)/2 and its norm, from the continued
/// fraction of (1 + sqrt D)/2 or sqrt(D/4).
pub fn fundamental_unit(d: u64) -> Result<(BigInt, BigInt, i32)> {
    if !is_fundamental_discriminant(d) {
        return Err(Error::NotFundamental(d));
    }
    let (p0, q0, rad) = if d % 4 == 1 { (1i128, 2i128, d as i128) } else { (0, 1, (d / 4) as i128) };
    let s = isqrt(rad as u64) as i128;
    let (mut p, mut q) = (p0, q0);
    let (mut a2, mut a1) = (BigInt::zero(), BigInt::one());
    let (mut b2, mut b1) = (BigInt::one(), BigInt::zero());
    loop {
        let ai = Integer::div_floor(&(p + s), &q);
        let a0 = BigInt::from(ai) * &a1 + &a2;
        let b0 = BigInt::from(ai) * &b1 + &b2;
        a2 = std::mem::replace(&mut a1, a0);
        b2 = std::mem::replace(&mut b1, b0);
        p = ai * q - p;
        q = (rad - p * p) / q;
        if q == q0 {
            break;
        }
    }
    let g = BigInt::from(q0) * &a1 - BigInt::from(p0) * &b1;
    let (x, y) = if d % 4 == 1 { (g, b1) } else { (g * 2, b1) };
    let norm4 = &x * &x - BigInt::from(d) * &y * &y;
    let sign = if norm4 == BigInt::from(4) {
        1
    } else if norm4 == BigInt::from(-4) {
        -1
    } else {
        return Err(Error::ReductionFailure(format!("unit search for D = {d} ended at norm {norm4}")));
    };
    Ok((x, y, sign))
}

/// Closed interval [lo, hi] of reals at fixed scale 2^-FRAC.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Iv {
    lo: BigInt,
    hi: BigInt,
}

const FRAC: u32 = 160;

impl Iv {
    fn exact_int(v: &BigInt) -> Iv {
        let x = v << FRAC;
        Iv { lo: x.clone(), hi: x }
    }
    fn add(&self, o: &Iv) -> Iv {
        Iv { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }
    fn mul(&self, o: &Iv) -> Iv {
        let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Iv { lo: lo.div_floor(&(BigInt::one() << FRAC)), hi: ceil_div(&hi, &(BigInt::one() << FRAC)) }
    }
    /// Division by a positive interval.
    fn div(&self, o: &Iv) -> Iv {
        assert!(o.lo.is_positive());
        let c = [
            (&self.lo << FRAC, &o.lo),
            (&self.lo << FRAC, &o.hi),
            (&self.hi << FRAC, &o.lo),
            (&self.hi << FRAC, &o.hi),
        ];
        let lo = c.iter().map(|(n, d)| n.div_floor(d)).min().unwrap();
        let hi = c.iter().map(|(n, d)| ceil_div(n, d)).max().unwrap();
        Iv { lo, hi }
    }
    fn widen(&self, e: &BigInt) -> Iv {
        Iv { lo: &self.lo - e, hi: &self.hi + e }
    }
}

fn ceil_div(n: &BigInt, d: &BigInt) -> BigInt {
    -((-n).div_floor(d))
}

/// sqrt(v) for a nonnegative integer v.
fn sqrt_iv(v: u64) -> Iv {
    let x = BigInt::from(v) << (2 * FRAC);
    let r = x.sqrt();
    let hi = if &r * &r == x { r.clone() } else { &r + 1 };
    Iv { lo: r, hi }
}

/// log(z) for an interval z >= 1, via log z = k log 2 + 2 atanh((u-1)/(u+1)).
fn log_iv(z: &Iv) -> Iv {
    let one = BigInt::one() << FRAC;
    let ln2 = atanh_iv(&Iv { lo: one.clone(), hi: one.clone() }.div(&Iv::exact_int(&BigInt::from(3))));
    let ln2 = ln2.add(&ln2);
    let mut lo_hi = [BigInt::zero(), BigInt::zero()];
    for (slot, v) in [&z.lo, &z.hi].into_iter().enumerate() {
        let k = v.bits() as i64 - 1 - FRAC as i64;
        let k = k.max(0) as u32;
        let u = Iv { lo: v >> k, hi: ceil_div(v, &(BigInt::one() << k)) };
        let num = u.add(&Iv { lo: -&one, hi: -&one });
        let den = u.add(&Iv { lo: one.clone(), hi: one.clone() });
        let at = atanh_iv(&num.div(&den));
        let lg = at.add(&at).add(&ln2.mul(&Iv::exact_int(&BigInt::from(k))));
        lo_hi[slot] = if slot == 0 { lg.lo } else { lg.hi };
    }
    let [lo, hi] = lo_hi;
    Iv { lo, hi }
}

/// atanh(w) for 0 <= w <= 1/3. Each step rounds by at most one unit and the
/// dropped tail is below 9/8 of the first omitted power.
fn atanh_iv(w: &Iv) -> Iv {
    let w2 = w.mul(w);
    let mut term = w.clone();
    let mut sum = Iv { lo: BigInt::zero(), hi: BigInt::zero() };
    let mut k = 1u64;
    loop {
        sum = sum.add(&term.div(&Iv::exact_int(&BigInt::from(k))));
        term = term.mul(&w2);
        k += 2;
        if term.hi.abs() < BigInt::from(8) {
            return sum.widen(&(&term.hi * 2 + BigInt::from(4 * k)));
        }
    }
}

/// Range of narrow class numbers compatible with
/// h+ log(eps+) = sqrt(D) L(1, chi_D), using sum_{n <= x} chi(n)/n and the
/// tail bound |sum_{n > x}| <= D / (x + 1).
pub fn analytic_class_number_band(d: u64, x: u64) -> Result<(u64, u64)> {
    let (ux, uy, sign) = fundamental_unit(d)?;
    let one = BigInt::one() << FRAC;
    // eps = (x + y sqrt d)/2, eps+ = eps or eps^2
    let sd = sqrt_iv(d);
    let eps = Iv::exact_int(&ux).add(&Iv::exact_int(&uy).mul(&sd)).div(&Iv::exact_int(&BigInt::from(2)));
    let eps_plus = if sign == 1 { eps } else { eps.mul(&eps) };
    let reg = log_iv(&eps_plus);
    let mut l = BigInt::zero();
    for n in 1..=x {
        let c = kronecker(d as i64, n);
        if c != 0 {
            // each floor loses less than one unit
            l += BigInt::from(c) * (&one / BigInt::from(n));
        }
    }
    let err = BigInt::from(x) + ((BigInt::from(d) << FRAC) / BigInt::from(x + 1)) + 1;
    let lser = Iv { lo: &l - &err, hi: &l + &err };
    let h = sd.mul(&lser).div(&reg);
    let lo = ceil_div(&h.lo, &one).max(BigInt::one());
    let hi = h.hi.div_floor(&one);
    Ok((lo.to_u64().unwrap_or(0), hi.to_u64().unwrap_or(u64::MAX)))
}

/// External class-group record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassRecord {
    pub field: FieldDescriptor,
    pub p: u64,
    pub divisors: Vec<u64>,
    #[serde(default)]
    pub classes: Vec<PrimeClass>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldDescriptor {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conductor: Option<u64>,
    pub degree: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimeClass {
    pub prime: u64,
    pub exponents: Vec<u64>,
}

impl FormClassGroup {
    /// Oracle output in the external schema, with classes of `primes`.
    pub fn to_record(&self, p: u64, primes: &[u64]) -> Result<ClassRecord> {
        let basis = self.p_basis(p);
        let mut classes = Vec::new();
        for &ell in primes {
            let c = ideal_class_of_prime(ell, self)?;
            let exponents = self.coordinates(c, p, &basis).expect("basis spans the p-part");
            classes.push(PrimeClass { prime: ell, exponents });
        }
        Ok(ClassRecord {
            field: FieldDescriptor { kind: "quadratic".into(), d: Some(self.d), conductor: None, degree: 2 },
            p,
            divisors: basis.iter().map(|&(_, o)| o).collect(),
            classes,
        })
    }
}

/// Parses and validates an external class-group record; quadratic records
/// are cross-checked against the form oracle.
pub fn ingest_str(text: &str) -> Result<ClassRecord> {
    let rec: ClassRecord = serde_json::from_str(text).map_err(|e| Error::SchemaViolation(e.to_string()))?;
    if rec.p < 3 || !is_prime(rec.p) {
        return Err(Error::SchemaViolation(format!("p = {} is not an odd prime", rec.p)));
    }
    if rec.field.degree == 0 {
        return Err(Error::SchemaViolation("degree must be positive".into()));
    }
    if rec.field.degree % rec.p == 0 {
        return Err(Error::InconsistentField(format!("p = {} divides the degree {}", rec.p, rec.field.degree)));
    }
    for &dv in &rec.divisors {
        if dv < rec.p || rec.p.pow(valuation(dv, rec.p)) != dv {
            return Err(Error::InconsistentField(format!("divisor {dv} is not a power of {}", rec.p)));
        }
    }
    for c in &rec.classes {
        if c.exponents.len() != rec.divisors.len() || c.exponents.iter().zip(&rec.divisors).any(|(e, dv)| e >= dv) {
            return Err(Error::InconsistentField(format!("exponents of prime {} do not fit the divisors", c.prime)));
        }
    }
    match (rec.field.kind.as_str(), rec.field.d) {
        ("quadratic", Some(d)) => {
            if rec.field.degree != 2 {
                return Err(Error::InconsistentField("quadratic field of degree other than 2".into()));
            }
            let g = narrow_class_group(d, 1 << 20)?;
            let mut want = g.p_part(rec.p);
            let mut got = rec.divisors.clone();
            want.sort_unstable();
            got.sort_unstable();
            if want != got {
                return Err(Error::InconsistentField(format!("oracle gives {want:?}, record gives {got:?}")));
            }
            for c in &rec.classes {
                let cls = ideal_class_of_prime(c.prime, &g)?;
                let ord = c.exponents.iter().zip(&rec.divisors).fold(1u64, |acc, (&e, &dv)| {
                    let o = if e == 0 { 1 } else { dv / num_integer::gcd(e, dv) };
                    num_integer::lcm(acc, o)
                });
                let oracle = g.element_order(g.p_component(cls, rec.p));
                if ord != oracle {
                    return Err(Error::InconsistentField(format!("class of {} has order {oracle}, record says {ord}", c.prime)));
                }
            }
        }
        ("quadratic", None) => return Err(Error::SchemaViolation("quadratic record without D".into())),
        ("abelian", _) => {
            if rec.field.conductor.is_none() {
                return Err(Error::SchemaViolation("abelian record without conductor".into()));
            }
        }
        (k, _) => return Err(Error::SchemaViolation(format!("unknown field type {k}"))),
    }
    Ok(rec)
}

pub fn ingest_external(path: &Path) -> Result<ClassRecord> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::SchemaViolation(format!("{}: {e}", path.display())))?;
    ingest_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(limit: u64) -> Vec<u64> {
        (5..limit).filter(|&d| is_fundamental_discriminant(d)).collect()
    }

    #[test]
    fn prime_form_b_is_the_least_root() {
        for d in [5u64, 8, 12, 13, 257, 1229] {
            for ell in (2u64..400).filter(|&l| is_prime(l)) {
                let brute = (0..2 * ell).find(|&b| (b * b) % (4 * ell) == d % (4 * ell));
                assert_eq!(prime_form_b(d, ell), brute, "d = {d}, ell = {ell}");
            }
        }
    }

    #[test]
    fn reduced_forms_match_exhaustive_scan() {
        for d in corpus(300) {
            let s = isqrt(d) as i128;
            let mut want = Vec::new();
            for a in -(d as i128)..=(d as i128) {
                for b in -(d as i128)..=(d as i128) {
                    if let Some(f) = QuadForm::from_ab(a, b, &(d as i128)) {
                        if f.is_reduced(&s) {
                            want.push(f);
                        }
                    }
                }
            }
            let mut got = reduced_forms(d, 1 << 20).unwrap();
            want.sort_by_key(|f| (f.a, f.b));
            got.sort_by_key(|f| (f.a, f.b));
            assert_eq!(got, want, "D = {d}");
        }
    }

    #[test]
    fn generic_forms_agree_across_integer_types() {
        let d = 1997u64;
        let g = narrow_class_group(d, 1 << 20).unwrap();
        let s = isqrt(d) as i64;
        for x in &g.reps {
            for y in &g.reps {
                let small = |f: &QuadForm<i128>| QuadForm::new(f.a as i64, f.b as i64, f.c as i64);
                let big = |f: &QuadForm<i128>| QuadForm::new(BigInt::from(f.a), BigInt::from(f.b), BigInt::from(f.c));
                let r64 = small(x).compose(&small(y), &(d as i64)).reduce(&(d as i64), &s).unwrap();
                let rbig = big(x).compose(&big(y), &BigInt::from(d)).reduce(&BigInt::from(d), &BigInt::from(s)).unwrap();
                assert_eq!(QuadForm::new(BigInt::from(r64.a), BigInt::from(r64.b), BigInt::from(r64.c)), rbig);
                assert_eq!(rbig.discriminant(), BigInt::from(d));
            }
        }
    }

    #[test]
    fn small_class_groups() {
        let g = narrow_class_group(257, 1 << 20).unwrap();
        assert_eq!(g.order(), 3);
        assert_eq!(g.p_part(3), vec![3]);
        assert_eq!(narrow_class_group(5, 1 << 20).unwrap().order(), 1);
        assert_eq!(narrow_class_group(12, 1 << 20).unwrap().p_part(3), Vec::<u64>::new());
        // h+ = 2 h when the unit has norm +1
        assert_eq!(narrow_class_group(12, 1 << 20).unwrap().order(), 2);
        assert!(matches!(narrow_class_group(15, 10), Err(Error::NotFundamental(15))));
        assert!(matches!(narrow_class_group(1997, 3), Err(Error::BudgetExhausted(_))));
        for d in corpus(500) {
            let g = narrow_class_group(d, 1 << 20).unwrap();
            let sign = fundamental_unit(d).unwrap().2;
            assert_eq!(g.negative_principal() == g.identity, sign == -1, "D = {d}");
        }
    }

    #[test]
    fn group_axioms_hold() {
        for d in corpus(500) {
            let g = narrow_class_group(d, 1 << 20).unwrap();
            let h = g.order();
            for x in 0..h {
                assert_eq!(g.mul(x, g.identity), x);
                assert_eq!(g.mul(x, g.inverse(x)), g.identity);
                for y in 0..h {
                    for z in 0..h {
                        assert_eq!(g.mul(g.mul(x, y), z), g.mul(x, g.mul(y, z)), "D = {d}");
                    }
                }
            }
            let prod: u64 = g.p_part(3).iter().product();
            assert_eq!(prod, 3u64.pow(valuation(h as u64, 3)));
        }
    }

    #[test]
    fn fundamental_units_match_pell_search() {
        assert_eq!(fundamental_unit(257).unwrap(), (BigInt::from(32), BigInt::from(2), -1));
        assert_eq!(fundamental_unit(12).unwrap(), (BigInt::from(4), BigInt::from(1), 1));
        for d in corpus(120) {
            // smallest y > 0 with D y^2 +- 4 a square
            let (x, y, sign) = (1u64..)
                .find_map(|y| {
                    for (sgn, v) in [(-1i32, d * y * y - 4), (1, d * y * y + 4)] {
                        let r = isqrt(v);
                        if r * r == v {
                            return Some((r, y, sgn));
                        }
                    }
                    None
                })
                .unwrap();
            assert_eq!(fundamental_unit(d).unwrap(), (BigInt::from(x), BigInt::from(y), sign), "D = {d}");
        }
    }

    #[test]
    fn prime_classes_multiply_like_ideals() {
        let d = 1901u64;
        let g = narrow_class_group(d, 1 << 20).unwrap();
        let split: Vec<u64> =
            (3..300).filter(|&l| is_prime(l) && d % l != 0 && kronecker(d as i64, l) == 1).take(8).collect();
        for &l in &split {
            for &m in &split {
                if l == m {
                    continue;
                }
                let (bl, bm) = (prime_form_b(d, l).unwrap(), prime_form_b(d, m).unwrap());
                // B = bl mod 2l, B = bm mod 2m, B^2 = D mod 4lm
                let b = (0..2 * l * m)
                    .find(|&b| b % (2 * l) == bl % (2 * l) && b % (2 * m) == bm % (2 * m))
                    .unwrap();
                let f = QuadForm::from_ab((l * m) as i128, b as i128, &(d as i128)).unwrap();
                let want = g.class_of(&f).unwrap();
                let got = g.mul(ideal_class_of_prime(l, &g).unwrap(), ideal_class_of_prime(m, &g).unwrap());
                assert_eq!(got, want, "{l} {m}");
            }
        }
    }

    #[test]
    fn principal_representations_give_identity() {
        let d = 257i128;
        let g = narrow_class_group(257, 1 << 20).unwrap();
        let pf = QuadForm::principal(&d, &(isqrt(257) as i128));
        let mut seen = 0;
        for x in -40i128..40 {
            for y in 1i128..40 {
                let v = pf.a * x * x + pf.b * x * y + pf.c * y * y;
                if v > 2 && is_prime(v as u64) && kronecker(257, v as u64) == 1 {
                    assert_eq!(ideal_class_of_prime(v as u64, &g).unwrap(), g.identity, "{v}");
                    seen += 1;
                }
            }
        }
        assert!(seen > 5);
        let c13 = ideal_class_of_prime(13, &g).unwrap();
        assert!([1, 3].contains(&g.element_order(g.p_component(c13, 3))));
        assert!(matches!(ideal_class_of_prime(5, &g), Err(Error::NotSplit(_))));
    }

    #[test]
    fn analytic_band_contains_the_form_count() {
        for d in [5u64, 8, 12, 229, 257, 401, 469] {
            let h = narrow_class_group(d, 1 << 20).unwrap().order() as u64;
            let (lo, hi) = analytic_class_number_band(d, 20_000).unwrap();
            assert!(lo <= h && h <= hi, "D = {d}: {h} not in [{lo}, {hi}]");
        }
    }

    #[test]
    fn external_records() {
        let g = narrow_class_group(257, 1 << 20).unwrap();
        let split: Vec<u64> = (3..200).filter(|&l| is_prime(l) && kronecker(257, l) == 1).take(6).collect();
        let rec = g.to_record(3, &split).unwrap();
        let text = serde_json::to_string(&rec).unwrap();
        assert_eq!(ingest_str(&text).unwrap(), rec);
        let mut bad = rec.clone();
        bad.field.degree = 6;
        assert!(matches!(ingest_str(&serde_json::to_string(&bad).unwrap()), Err(Error::InconsistentField(_))));
        let mut wrong = rec.clone();
        wrong.divisors = vec![9];
        assert!(matches!(ingest_str(&serde_json::to_string(&wrong).unwrap()), Err(Error::InconsistentField(_))));
        assert!(matches!(ingest_str("{\"field\": 3}"), Err(Error::SchemaViolation(_))));
        assert!(matches!(ingest_str("not json"), Err(Error::SchemaViolation(_))));
    }
}
