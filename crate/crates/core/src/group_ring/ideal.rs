use std::fmt;
use std::sync::Arc;

use super::{GroupRing, GroupRingElement};
use crate::error::{Error, Result};

/// An ideal of Z/p^N[G] stored as the Howell form of its additive lattice:
/// rows with strictly increasing pivot columns, pivot entries p^e, entries
/// above each pivot reduced below p^e, and closure under multiplication by
/// p^(N-e). The form is unique, so ideals compare by structural equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IdealNF {
    pub ring: Arc<GroupRing>,
    pub rows: Vec<HowellRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HowellRow {
    pub pivot: usize,
    pub exp: u32,
    pub entries: Vec<u64>,
}

impl IdealNF {
    /// The ideal generated by `gens`: Howell form of the span of all
    /// group translates.
    pub fn generated(ring: &Arc<GroupRing>, gens: &[GroupRingElement]) -> Result<Self> {
        let mut vecs = Vec::new();
        for g in gens {
            if *g.ring != **ring {
                return Err(Error::MixedAmbient);
            }
            if g.is_zero() {
                continue;
            }
            for h in 0..ring.rank() {
                vecs.push(g.shift(h).coeffs);
            }
        }
        Ok(IdealNF { ring: ring.clone(), rows: howell(vecs, ring) })
    }

    /// Howell form of the Z/p^N-span of the given vectors alone (no group
    /// translates); used for submodules of free modules.
    pub fn span(ring: &Arc<GroupRing>, vecs: &[GroupRingElement]) -> Self {
        let vecs = vecs.iter().map(|v| v.coeffs.clone()).collect();
        IdealNF { ring: ring.clone(), rows: howell(vecs, ring) }
    }

    pub fn zero(ring: &Arc<GroupRing>) -> Self {
        IdealNF { ring: ring.clone(), rows: vec![] }
    }

    pub fn unit(ring: &Arc<GroupRing>) -> Self {
        Self::generated(ring, &[ring.one()]).expect("same ring")
    }

    /// (p^e) in the given ring; e >= N gives the zero ideal.
    pub fn p_power(ring: &Arc<GroupRing>, e: u32) -> Self {
        let x = ring.scalar(ring.ring.p_pow(e) as i64);
        Self::generated(ring, &[x]).expect("same ring")
    }

    fn check(&self, ring: &GroupRing) -> Result<()> {
        if *self.ring == *ring {
            Ok(())
        } else {
            Err(Error::MixedAmbient)
        }
    }

    pub fn contains(&self, x: &GroupRingElement) -> Result<bool> {
        self.check(&x.ring)?;
        Ok(self.reduce(&x.coeffs).iter().all(|&c| c == 0))
    }

    /// Remainder of a vector against the echelon basis.
    pub fn reduce(&self, v: &[u64]) -> Vec<u64> {
        let r = &self.ring.ring;
        let mut x = v.to_vec();
        for row in &self.rows {
            let c = x[row.pivot];
            if c == 0 {
                continue;
            }
            let pe = r.p.pow(row.exp);
            let t = c / pe;
            if t == 0 {
                continue;
            }
            for (xi, &ri) in x.iter_mut().zip(&row.entries).skip(row.pivot) {
                *xi = r.sub(*xi, r.mul(t, ri));
            }
        }
        x
    }

    pub fn is_subset_of(&self, other: &IdealNF) -> Result<bool> {
        other.check(&self.ring)?;
        Ok(self.rows.iter().all(|row| other.reduce(&row.entries).iter().all(|&c| c == 0)))
    }

    pub fn join(&self, other: &IdealNF) -> Result<IdealNF> {
        other.check(&self.ring)?;
        let vecs = self.rows.iter().chain(&other.rows).map(|r| r.entries.clone()).collect();
        Ok(IdealNF { ring: self.ring.clone(), rows: howell(vecs, &self.ring) })
    }

    pub fn add_element(&self, x: &GroupRingElement) -> Result<IdealNF> {
        self.join(&IdealNF::generated(&self.ring, std::slice::from_ref(x))?)
    }

    pub fn product(&self, other: &IdealNF) -> Result<IdealNF> {
        other.check(&self.ring)?;
        let mut gens = Vec::new();
        for a in &self.rows {
            for b in &other.rows {
                let x = self.ring.from_residues(a.entries.clone());
                let y = self.ring.from_residues(b.entries.clone());
                gens.push(x.mul(&y)?);
            }
        }
        IdealNF::generated(&self.ring, &gens)
    }

    /// log_p of the number of elements.
    pub fn log_size(&self) -> u32 {
        let n = self.ring.ring.n;
        self.rows.iter().map(|r| n - r.exp).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_unit(&self) -> bool {
        self.contains(&self.ring.one()).unwrap_or(false)
    }

    /// Basis vectors as ring elements.
    pub fn basis(&self) -> Vec<GroupRingElement> {
        self.rows.iter().map(|r| self.ring.from_residues(r.entries.clone())).collect()
    }

    /// In a chain ring Z/p^N (trivial group) the ideal is (p^e); returns e,
    /// with e = N for the zero ideal.
    pub fn chain_exponent(&self) -> Option<u32> {
        if self.ring.rank() != 1 {
            return None;
        }
        Some(self.rows.first().map_or(self.ring.ring.n, |r| r.exp))
    }
}

fn howell(vecs: Vec<Vec<u64>>, ring: &GroupRing) -> Vec<HowellRow> {
    let r = &ring.ring;
    let n = ring.rank();
    let mut pool: Vec<Vec<u64>> = vecs.into_iter().filter(|v| v.iter().any(|&c| c != 0)).collect();
    let mut rows: Vec<HowellRow> = Vec::new();
    for c in 0..n {
        let best = pool
            .iter()
            .enumerate()
            .filter(|(_, v)| v[c] != 0)
            .min_by_key(|(_, v)| r.valuation(v[c]))
            .map(|(i, _)| i);
        let Some(bi) = best else { continue };
        let mut piv = pool.swap_remove(bi);
        let (e, u) = r.split_unit(piv[c]);
        let uinv = r.inv(u).expect("unit part");
        for x in piv.iter_mut() {
            *x = r.mul(*x, uinv);
        }
        let pe = r.p.pow(e);
        for v in pool.iter_mut() {
            if v[c] != 0 {
                let t = v[c] / pe;
                for (x, &y) in v.iter_mut().zip(&piv).skip(c) {
                    *x = r.sub(*x, r.mul(t, y));
                }
            }
        }
        let lift = r.p_pow(r.n - e);
        let extra: Vec<u64> = piv.iter().map(|&x| r.mul(x, lift)).collect();
        pool.retain(|v| v.iter().any(|&x| x != 0));
        if extra.iter().any(|&x| x != 0) {
            pool.push(extra);
        }
        rows.push(HowellRow { pivot: c, exp: e, entries: piv });
    }
    // reduce entries above each pivot
    for i in 0..rows.len() {
        let (c, pe) = (rows[i].pivot, r.p.pow(rows[i].exp));
        let (head, tail) = rows.split_at_mut(i);
        let piv = &tail[0].entries;
        for row in head.iter_mut() {
            let t = row.entries[c] / pe;
            if t != 0 {
                for (x, &y) in row.entries.iter_mut().zip(piv).skip(c) {
                    *x = r.sub(*x, r.mul(t, y));
                }
            }
        }
    }
    rows
}

impl fmt::Debug for IdealNF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for IdealNF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(e) = self.chain_exponent() {
            let p = self.ring.ring.p;
            return match e {
                0 => write!(f, "(1)"),
                e if e >= self.ring.ring.n => write!(f, "(0)"),
                1 => write!(f, "({p})"),
                e => write!(f, "({p}^{e})"),
            };
        }
        let gens: Vec<String> = self.basis().iter().map(|x| x.to_string()).collect();
        write!(f, "<{}>", gens.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ModRing;
    use crate::group_ring::FiniteAbelianGroup;
    use std::collections::HashSet;

    fn chain(n: u32) -> Arc<GroupRing> {
        GroupRing::new(FiniteAbelianGroup::trivial(), ModRing::new(3, n).unwrap())
    }

    fn z9_z3() -> Arc<GroupRing> {
        GroupRing::new(FiniteAbelianGroup::cyclic(3), ModRing::new(3, 2).unwrap())
    }

    /// All elements of the ideal generated by `gens`, by closing the additive
    /// span of translates.
    fn brute_span(ring: &Arc<GroupRing>, gens: &[GroupRingElement]) -> HashSet<Vec<u64>> {
        let mut set: HashSet<Vec<u64>> = HashSet::new();
        set.insert(ring.zero().coeffs);
        let mut transl = Vec::new();
        for g in gens {
            for h in 0..ring.rank() {
                transl.push(g.shift(h));
            }
        }
        loop {
            let before = set.len();
            let cur: Vec<Vec<u64>> = set.iter().cloned().collect();
            for v in cur {
                for t in &transl {
                    let s = ring.from_residues(v.clone()).add(t).unwrap();
                    set.insert(s.coeffs);
                }
            }
            if set.len() == before {
                return set;
            }
        }
    }

    #[test]
    fn chain_ring_examples() {
        let r = chain(3);
        let z = IdealNF::generated(&r, &[r.scalar(0)]).unwrap();
        assert!(z.is_zero());
        let i = IdealNF::generated(&r, &[r.scalar(6), r.scalar(9)]).unwrap();
        assert_eq!(i, IdealNF::p_power(&r, 1));
        assert_eq!(i.chain_exponent(), Some(1));
        assert!(i.contains(&r.scalar(6)).unwrap());
        assert!(!i.contains(&r.scalar(1)).unwrap());
    }

    #[test]
    fn augmentation_ideal_matches_enumeration() {
        let r = z9_z3();
        let gm1 = r.from_coeffs(&[-1, 1, 0]);
        let i = IdealNF::generated(&r, &[gm1.clone()]).unwrap();
        let brute = brute_span(&r, &[gm1]);
        assert_eq!(3u64.pow(i.log_size()) as usize, brute.len());
        assert_eq!(brute.len(), 81); // index 9 in the 729-element ring
        for v in &brute {
            assert!(i.contains(&r.from_residues(v.clone())).unwrap());
        }
        let mut count = 0;
        for idx in 0..729u64 {
            let v = vec![idx % 9, (idx / 9) % 9, idx / 81];
            if i.contains(&r.from_residues(v.clone())).unwrap() {
                count += 1;
                assert!(brute.contains(&v));
            }
        }
        assert_eq!(count, 81);
    }

    #[test]
    fn membership_example() {
        let r = z9_z3();
        let i = IdealNF::generated(&r, &[r.from_coeffs(&[-1, 1, 0]), r.scalar(3)]).unwrap();
        let x = r.from_coeffs(&[-1, 0, 1]);
        assert!(i.contains(&x).unwrap());
        let brute = brute_span(&r, &[r.from_coeffs(&[-1, 1, 0]), r.scalar(3)]);
        assert!(brute.contains(&x.coeffs));
        assert_eq!(brute.len() as u64, 3u64.pow(i.log_size()));
    }

    #[test]
    fn normal_form_is_canonical() {
        let r = GroupRing::new(FiniteAbelianGroup::new(vec![2, 3], 1), ModRing::new(3, 3).unwrap());
        let a = r.from_coeffs(&[3, 0, 1, -1, 0, 9]);
        let b = r.from_coeffs(&[0, 9, 3, 0, 1, 1]);
        let c = r.from_coeffs(&[27, 3, 0, 0, 0, 3]);
        let i1 = IdealNF::generated(&r, &[a.clone(), b.clone(), c.clone()]).unwrap();
        let i2 = IdealNF::generated(&r, &[c.clone(), a.clone(), b.clone()]).unwrap();
        let i3 = IdealNF::generated(&r, &[b.clone(), c, a.add(&b).unwrap()]).unwrap();
        assert_eq!(i1, i2);
        assert_eq!(i1, i3);
        let again = IdealNF::generated(&r, &i1.basis()).unwrap();
        assert_eq!(again, i1);
        let small = IdealNF::generated(&r, &[a]).unwrap();
        assert!(small.is_subset_of(&i1).unwrap());
    }

    #[test]
    fn mixed_ambient_rejected() {
        let r1 = chain(2);
        let r2 = chain(3);
        assert_eq!(IdealNF::generated(&r1, &[r2.one()]).unwrap_err(), Error::MixedAmbient);
        assert_eq!(IdealNF::unit(&r1).contains(&r2.one()).unwrap_err(), Error::MixedAmbient);
    }
}
