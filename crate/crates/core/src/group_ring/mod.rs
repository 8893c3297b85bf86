//! The rings Z/p^N[G] for finite abelian G = Delta x Gamma, characters of
//! Delta, and ideals in normal form.

mod ideal;

pub use ideal::IdealNF;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::arith::{gcd, ModRing};
use crate::error::{Error, Result};

/// Product of cyclic groups Z/d_1 x ... x Z/d_t. The first `delta_rank`
/// factors form Delta, the rest form Gamma.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiniteAbelianGroup {
    pub divisors: Vec<u64>,
    pub delta_rank: usize,
}

impl FiniteAbelianGroup {
    pub fn new(divisors: Vec<u64>, delta_rank: usize) -> Self {
        assert!(divisors.iter().all(|&d| d >= 1) && delta_rank <= divisors.len());
        FiniteAbelianGroup { divisors, delta_rank }
    }

    pub fn trivial() -> Self {
        FiniteAbelianGroup { divisors: vec![], delta_rank: 0 }
    }

    pub fn cyclic(n: u64) -> Self {
        FiniteAbelianGroup { divisors: vec![n], delta_rank: 0 }
    }

    pub fn order(&self) -> usize {
        self.divisors.iter().product::<u64>() as usize
    }

    pub fn delta(&self) -> FiniteAbelianGroup {
        FiniteAbelianGroup::new(self.divisors[..self.delta_rank].to_vec(), self.delta_rank)
    }

    pub fn gamma(&self) -> FiniteAbelianGroup {
        FiniteAbelianGroup::new(self.divisors[self.delta_rank..].to_vec(), 0)
    }

    pub fn delta_order(&self) -> u64 {
        self.divisors[..self.delta_rank].iter().product()
    }

    /// Mixed-radix index, first component fastest.
    pub fn index(&self, exps: &[u64]) -> usize {
        let mut idx = 0usize;
        for (i, &d) in self.divisors.iter().enumerate().rev() {
            idx = idx * d as usize + (exps[i] % d) as usize;
        }
        idx
    }

    pub fn element(&self, mut idx: usize) -> Vec<u64> {
        self.divisors
            .iter()
            .map(|&d| {
                let e = idx % d as usize;
                idx /= d as usize;
                e as u64
            })
            .collect()
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        let (x, y) = (self.element(a), self.element(b));
        let s: Vec<u64> = x.iter().zip(&y).map(|(u, v)| u + v).collect();
        self.index(&s)
    }

    pub fn neg(&self, a: usize) -> usize {
        let x = self.element(a);
        let s: Vec<u64> = x.iter().zip(&self.divisors).map(|(u, d)| (d - u) % d).collect();
        self.index(&s)
    }

    /// Splits an index into (Delta index, Gamma index).
    pub fn split(&self, idx: usize) -> (usize, usize) {
        let d = self.delta_order() as usize;
        (idx % d, idx / d)
    }

    /// Element generating the given cyclic factor.
    pub fn generator(&self, factor: usize) -> usize {
        let mut e = vec![0u64; self.divisors.len()];
        e[factor] = 1;
        self.index(&e)
    }
}

/// Descriptor of Z/p^N[G].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupRing {
    pub group: FiniteAbelianGroup,
    pub ring: ModRing,
}

impl GroupRing {
    pub fn new(group: FiniteAbelianGroup, ring: ModRing) -> Arc<Self> {
        Arc::new(GroupRing { group, ring })
    }

    pub fn rank(&self) -> usize {
        self.group.order()
    }

    pub fn zero(self: &Arc<Self>) -> GroupRingElement {
        GroupRingElement { ring: self.clone(), coeffs: vec![0; self.rank()] }
    }

    pub fn one(self: &Arc<Self>) -> GroupRingElement {
        self.monomial(0)
    }

    pub fn monomial(self: &Arc<Self>, g: usize) -> GroupRingElement {
        self.scalar_monomial(1, g)
    }

    pub fn scalar(self: &Arc<Self>, c: i64) -> GroupRingElement {
        self.scalar_monomial(c, 0)
    }

    pub fn scalar_monomial(self: &Arc<Self>, c: i64, g: usize) -> GroupRingElement {
        let mut x = self.zero();
        x.coeffs[g] = self.ring.from_i64(c);
        x
    }

    pub fn from_coeffs(self: &Arc<Self>, coeffs: &[i64]) -> GroupRingElement {
        assert_eq!(coeffs.len(), self.rank());
        GroupRingElement {
            ring: self.clone(),
            coeffs: coeffs.iter().map(|&c| self.ring.from_i64(c)).collect(),
        }
    }

    pub fn from_residues(self: &Arc<Self>, coeffs: Vec<u64>) -> GroupRingElement {
        assert_eq!(coeffs.len(), self.rank());
        let coeffs = coeffs.into_iter().map(|c| self.ring.reduce(c)).collect();
        GroupRingElement { ring: self.clone(), coeffs }
    }

    /// Same group over Z/p^M.
    pub fn with_precision(&self, n: u32) -> Result<Arc<Self>> {
        Ok(GroupRing::new(self.group.clone(), ModRing::new(self.ring.p, n)?))
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GroupRingElement {
    pub ring: Arc<GroupRing>,
    pub coeffs: Vec<u64>,
}

impl fmt::Debug for GroupRingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for GroupRingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(g, c)| if g == 0 { format!("{c}") } else { format!("{c}*g{:?}", self.ring.group.element(g)) })
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

impl GroupRingElement {
    fn check(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.ring, &other.ring) || self.ring == other.ring {
            Ok(())
        } else {
            Err(Error::MixedAmbient)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let r = &self.ring.ring;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| r.add(a, b)).collect();
        Ok(GroupRingElement { ring: self.ring.clone(), coeffs })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let r = &self.ring.ring;
        GroupRingElement { ring: self.ring.clone(), coeffs: self.coeffs.iter().map(|&a| r.neg(a)).collect() }
    }

    pub fn scale(&self, c: u64) -> Self {
        let r = &self.ring.ring;
        GroupRingElement { ring: self.ring.clone(), coeffs: self.coeffs.iter().map(|&a| r.mul(a, c)).collect() }
    }

    /// Multiplication by the group element g.
    pub fn shift(&self, g: usize) -> Self {
        let grp = &self.ring.group;
        let mut coeffs = vec![0; self.coeffs.len()];
        for (h, &c) in self.coeffs.iter().enumerate() {
            coeffs[grp.add(g, h)] = c;
        }
        GroupRingElement { ring: self.ring.clone(), coeffs }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let r = &self.ring.ring;
        let grp = &self.ring.group;
        let mut coeffs = vec![0u64; self.coeffs.len()];
        for (g, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (h, &b) in other.coeffs.iter().enumerate() {
                if b == 0 {
                    continue;
                }
                let gh = grp.add(g, h);
                coeffs[gh] = r.add(coeffs[gh], r.mul(a, b));
            }
        }
        Ok(GroupRingElement { ring: self.ring.clone(), coeffs })
    }

    pub fn pow(&self, mut e: u64) -> Result<Self> {
        let mut acc = self.ring.one();
        let mut b = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b)?;
            }
            b = b.mul(&b)?;
            e >>= 1;
        }
        Ok(acc)
    }

    /// The involution sum c_g g -> sum c_g g^{-1}.
    pub fn invert_group(&self) -> Self {
        let grp = &self.ring.group;
        let mut coeffs = vec![0; self.coeffs.len()];
        for (g, &c) in self.coeffs.iter().enumerate() {
            coeffs[grp.neg(g)] = c;
        }
        GroupRingElement { ring: self.ring.clone(), coeffs }
    }

    /// Scalar value when the group is trivial.
    pub fn as_scalar(&self) -> Option<u64> {
        (self.coeffs.len() == 1).then(|| self.coeffs[0])
    }
}

/// A character of Delta with values in (Z/p^N)^x, given on the generators of
/// the cyclic factors of Delta.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Character {
    pub delta: FiniteAbelianGroup,
    pub values: Vec<u64>,
    pub ring: ModRing,
}

impl Character {
    pub fn new(delta: FiniteAbelianGroup, values: Vec<u64>, ring: ModRing) -> Result<Self> {
        if values.len() != delta.divisors.len() {
            return Err(Error::InvalidInput("one character value per cyclic factor".into()));
        }
        for (&v, &d) in values.iter().zip(&delta.divisors) {
            if ring.pow(v, d) != 1 || ring.pow(v, ring.p - 1) != 1 {
                return Err(Error::InvalidInput(format!("character value {v} has wrong order")));
            }
        }
        Ok(Character { delta, values, ring })
    }

    pub fn trivial(delta: FiniteAbelianGroup, ring: ModRing) -> Self {
        let values = vec![1; delta.divisors.len()];
        Character { delta, values, ring }
    }

    pub fn value(&self, delta_idx: usize) -> u64 {
        let e = self.delta.element(delta_idx);
        e.iter().zip(&self.values).fold(1, |acc, (&k, &v)| self.ring.mul(acc, self.ring.pow(v, k)))
    }
}

/// x -> sum_{g in Gamma} (sum_{delta} chi(delta) x[delta, g]) g.
pub fn chi_project(x: &GroupRingElement, chi: &Character) -> Result<GroupRingElement> {
    let grp = &x.ring.group;
    let r = x.ring.ring;
    if gcd(grp.delta_order(), r.p) != 1 {
        return Err(Error::BadDecomposition);
    }
    if grp.delta() != chi.delta || chi.ring != r {
        return Err(Error::MixedAmbient);
    }
    let target = GroupRing::new(grp.gamma(), r);
    let mut out = vec![0u64; target.rank()];
    let dord = grp.delta_order() as usize;
    let table: Vec<u64> = (0..dord).map(|d| chi.value(d)).collect();
    for (idx, &c) in x.coeffs.iter().enumerate() {
        let (d, g) = grp.split(idx);
        out[g] = r.add(out[g], r.mul(table[d], c));
    }
    Ok(GroupRingElement { ring: target, coeffs: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z2() -> (Arc<GroupRing>, Character) {
        let r = ModRing::new(3, 2).unwrap();
        let g = FiniteAbelianGroup::new(vec![2], 1);
        let chi = Character::new(g.delta(), vec![8], r).unwrap();
        (GroupRing::new(g, r), chi)
    }

    #[test]
    fn spec_projection_examples() {
        let (rg, chi) = z2();
        let one = chi_project(&rg.one(), &chi).unwrap();
        assert_eq!(one.coeffs, vec![1]);
        let norm = rg.from_coeffs(&[1, 1]);
        assert!(chi_project(&norm, &chi).unwrap().is_zero());
        let diff = rg.from_coeffs(&[1, -1]);
        assert_eq!(chi_project(&diff, &chi).unwrap().coeffs, vec![2]);
    }

    #[test]
    fn bad_decomposition() {
        let r = ModRing::new(3, 2).unwrap();
        let g = FiniteAbelianGroup::new(vec![3], 1);
        let rg = GroupRing::new(g.clone(), r);
        let chi = Character::trivial(g.delta(), r);
        assert_eq!(chi_project(&rg.one(), &chi), Err(Error::BadDecomposition));
    }

    #[test]
    fn projection_is_multiplicative() {
        let r = ModRing::new(5, 3).unwrap();
        // Delta = Z/2 x Z/4, Gamma = Z/5
        let g = FiniteAbelianGroup::new(vec![2, 4, 5], 2);
        let rg = GroupRing::new(g.clone(), r);
        // 2 generates (Z/125)^x, so 2^25 has order 4
        let i4 = r.pow(2, 25);
        let chi = Character::new(g.delta(), vec![124, i4], r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let x = rg.from_residues((0..40).map(|_| rng.random_range(0..125)).collect());
            let y = rg.from_residues((0..40).map(|_| rng.random_range(0..125)).collect());
            let lhs = chi_project(&x.mul(&y).unwrap(), &chi).unwrap();
            let rhs = chi_project(&x, &chi).unwrap().mul(&chi_project(&y, &chi).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
            let triv = Character::trivial(g.delta(), r);
            let s = chi_project(&x, &triv).unwrap();
            for gam in 0..5 {
                let want = (0..8).fold(0, |acc, d| r.add(acc, x.coeffs[d + 8 * gam]));
                assert_eq!(s.coeffs[gam], want);
            }
        }
    }

    #[test]
    fn group_indexing_round_trips() {
        let g = FiniteAbelianGroup::new(vec![2, 3, 9], 2);
        for i in 0..g.order() {
            assert_eq!(g.index(&g.element(i)), i);
            assert_eq!(g.add(i, g.neg(i)), 0);
        }
    }
}
