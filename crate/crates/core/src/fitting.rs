//! Higher Fitting ideals of finitely presented modules over Z/p^N[G].

use std::collections::HashMap;
use std::sync::Arc;

use crate::group_ring::{FiniteAbelianGroup, GroupRing, GroupRingElement, IdealNF};
use crate::arith::ModRing;
use crate::error::{Error, Result};

/// Largest number of rows accepted by the cofactor expansion.
pub const MAX_ROWS: usize = 12;

/// coker(A: R^m -> R^n); relations are the columns of A.
#[derive(Clone, Debug)]
pub struct Presentation {
    pub ring: Arc<GroupRing>,
    pub n: usize,
    pub m: usize,
    /// row-major n x m
    pub a: Vec<Vec<GroupRingElement>>,
}

impl Presentation {
    pub fn new(ring: &Arc<GroupRing>, a: Vec<Vec<GroupRingElement>>, n: usize) -> Result<Self> {
        if n == 0 || a.len() != n {
            return Err(Error::InvalidInput("presentation needs n >= 1 rows".into()));
        }
        let m = a[0].len();
        for row in &a {
            if row.len() != m {
                return Err(Error::InvalidInput("ragged matrix".into()));
            }
            if row.iter().any(|x| *x.ring != **ring) {
                return Err(Error::MixedAmbient);
            }
        }
        Ok(Presentation { ring: ring.clone(), n, m, a })
    }

    /// n generators with no relations.
    pub fn free(ring: &Arc<GroupRing>, n: usize) -> Self {
        Presentation { ring: ring.clone(), n, m: 0, a: vec![vec![]; n] }
    }

    pub fn diagonal(ring: &Arc<GroupRing>, diag: &[GroupRingElement]) -> Self {
        let n = diag.len();
        let a = (0..n)
            .map(|i| (0..n).map(|j| if i == j { diag[i].clone() } else { ring.zero() }).collect())
            .collect();
        Presentation { ring: ring.clone(), n, m: n, a }
    }

    pub fn column(&self, j: usize) -> Vec<GroupRingElement> {
        self.a.iter().map(|row| row[j].clone()).collect()
    }

    /// log_p of |coker A|.
    pub fn cokernel_log_size(&self) -> u32 {
        let g = self.ring.rank();
        let outer = GroupRing::new(
            FiniteAbelianGroup::new(vec![(self.n * g) as u64], 0),
            self.ring.ring,
        );
        // columns and their group translates, flattened into Z/p^N^(n|G|)
        let mut gens = Vec::new();
        for j in 0..self.m {
            for h in 0..g {
                let mut v = Vec::with_capacity(self.n * g);
                for i in 0..self.n {
                    v.extend(self.a[i][j].shift(h).coeffs);
                }
                gens.push(outer.from_residues(v));
            }
        }
        let image = IdealNF::span(&outer, &gens);
        self.ring.ring.n * (self.n * g) as u32 - image.log_size()
    }
}

struct MinorCache<'a> {
    p: &'a Presentation,
    memo: HashMap<(u64, u64), GroupRingElement>,
}

impl MinorCache<'_> {
    /// Determinant of the submatrix on the given row and column masks
    /// (equal popcounts), by expansion along the first row.
    fn det(&mut self, rows: u64, cols: u64) -> GroupRingElement {
        if rows == 0 {
            return self.p.ring.one();
        }
        if let Some(v) = self.memo.get(&(rows, cols)) {
            return v.clone();
        }
        let r0 = rows.trailing_zeros() as usize;
        let rest = rows & (rows - 1);
        let mut acc = self.p.ring.zero();
        let mut sign_pos = 0;
        let mut cm = cols;
        while cm != 0 {
            let c = cm.trailing_zeros() as usize;
            cm &= cm - 1;
            let entry = &self.p.a[r0][c];
            if !entry.is_zero() {
                let sub = self.det(rest, cols & !(1u64 << c));
                let term = entry.mul(&sub).expect("same ring");
                acc = if sign_pos % 2 == 0 { acc.add(&term) } else { acc.sub(&term) }.expect("same ring");
            }
            sign_pos += 1;
        }
        self.memo.insert((rows, cols), acc.clone());
        acc
    }
}

fn subsets(n: usize, k: usize) -> Vec<u64> {
    (0u64..1 << n).filter(|s| s.count_ones() as usize == k).collect()
}

/// The ideal generated by all k x k minors.
pub fn minors_ideal(p: &Presentation, k: usize) -> Result<IdealNF> {
    if p.n > MAX_ROWS {
        return Err(Error::SizeGuard(p.n));
    }
    if p.m > 63 {
        return Err(Error::SizeGuard(p.m));
    }
    let mut cache = MinorCache { p, memo: HashMap::new() };
    let mut gens = Vec::new();
    for rs in subsets(p.n, k) {
        for cs in subsets(p.m, k) {
            let d = cache.det(rs, cs);
            if !d.is_zero() {
                gens.push(d);
            }
        }
    }
    IdealNF::generated(&p.ring, &gens)
}

/// Fitt_i of coker(A).
pub fn fitting_ideal(p: &Presentation, i: usize) -> Result<IdealNF> {
    if i >= p.n {
        return Ok(IdealNF::unit(&p.ring));
    }
    let k = p.n - i;
    if p.m < k {
        return Ok(IdealNF::zero(&p.ring));
    }
    minors_ideal(p, k)
}

/// Fitt_i over Z/p^N of the abelian p-group with elementary divisors
/// Z/p^{d_j}.
pub fn fitting_of_p_group(divisors: &[u32], i: usize, p: u64, n: u32) -> Result<IdealNF> {
    let sum: u32 = divisors.iter().sum();
    if n <= sum {
        return Err(Error::InsufficientPrecision { n, sum });
    }
    let ring = GroupRing::new(FiniteAbelianGroup::trivial(), ModRing::new(p, n)?);
    let mut d = divisors.to_vec();
    d.sort_unstable_by(|a, b| b.cmp(a));
    if i >= d.len() {
        return Ok(IdealNF::unit(&ring));
    }
    Ok(IdealNF::p_power(&ring, d[i..].iter().sum()))
}

/// Presentation of an extension 0 -> L -> M -> N -> 0 as the block matrix
/// [[A, star], [0, B]].
pub fn block_extension(l: &Presentation, n_mod: &Presentation, star: Vec<Vec<GroupRingElement>>) -> Result<Presentation> {
    let ring = &l.ring;
    if star.len() != l.n || star.iter().any(|r| r.len() != n_mod.m) {
        return Err(Error::InvalidInput("off-diagonal block has wrong shape".into()));
    }
    let mut a = Vec::new();
    for i in 0..l.n {
        let mut row = l.a[i].clone();
        row.extend(star[i].iter().cloned());
        a.push(row);
    }
    for i in 0..n_mod.n {
        let mut row = vec![ring.zero(); l.m];
        row.extend(n_mod.a[i].iter().cloned());
        a.push(row);
    }
    Presentation::new(ring, a, l.n + n_mod.n)
}

/// The four extension containments for index i:
/// Fitt_i(M) in Fitt_i(L), Fitt_i(M) in Fitt_i(N),
/// Fitt_i(L)Fitt_0(N) in Fitt_i(M), Fitt_0(L)Fitt_i(N) in Fitt_i(M).
pub fn extension_containments(l: &Presentation, n_mod: &Presentation, m: &Presentation, i: usize) -> Result<[bool; 4]> {
    let fm = fitting_ideal(m, i)?;
    let fl = fitting_ideal(l, i)?;
    let fnn = fitting_ideal(n_mod, i)?;
    let fl0 = fitting_ideal(l, 0)?;
    let fn0 = fitting_ideal(n_mod, 0)?;
    Ok([
        fm.is_subset_of(&fl)?,
        fm.is_subset_of(&fnn)?,
        fl.product(&fn0)?.is_subset_of(&fm)?,
        fl0.product(&fnn)?.is_subset_of(&fm)?,
    ])
}

/// A random ring element biased towards non-units, so that random
/// presentations have nontrivial cokernels.
pub fn random_nonunit<R: rand::Rng>(ring: &Arc<GroupRing>, rng: &mut R) -> GroupRingElement {
    let r = ring.ring;
    let mut x = ring.zero();
    for c in x.coeffs.iter_mut() {
        *c = rng.random_range(0..r.modulus);
    }
    match rng.random_range(0..4) {
        0 => x,
        1 => x.scale(r.p),
        2 if ring.rank() > 1 => {
            // times (g - 1) for a generator g of the first cyclic factor
            let g = ring.group.generator(0);
            x.mul(&ring.monomial(g).sub(&ring.one()).expect("same ring")).expect("same ring")
        }
        _ => x.scale(r.p_pow(rng.random_range(1..=r.n))),
    }
}

pub fn random_presentation<R: rand::Rng>(ring: &Arc<GroupRing>, rng: &mut R, n: usize, m: usize) -> Presentation {
    let a = (0..n).map(|_| (0..m).map(|_| random_nonunit(ring, rng)).collect()).collect();
    Presentation { ring: ring.clone(), n, m, a }
}

/// A random extension instance (L, N, M) whose block presentation really
/// is a short exact sequence, i.e. |M| = |L||N|. Gives up after `tries`.
pub fn random_extension<R: rand::Rng>(
    ring: &Arc<GroupRing>,
    rng: &mut R,
    tries: usize,
) -> Option<(Presentation, Presentation, Presentation)> {
    for _ in 0..tries {
        let (r1, r2) = (rng.random_range(1..=2), rng.random_range(1..=2));
        let (s1, s2) = (r1 + rng.random_range(0..=1), r2 + rng.random_range(0..=1));
        let l = random_presentation(ring, rng, r1, s1);
        let nm = random_presentation(ring, rng, r2, s2);
        let star = (0..r1).map(|_| (0..s2).map(|_| random_nonunit(ring, rng)).collect()).collect();
        let m = block_extension(&l, &nm, star).ok()?;
        if m.cokernel_log_size() == l.cokernel_log_size() + nm.cokernel_log_size() {
            return Some((l, nm, m));
        }
    }
    None
}
