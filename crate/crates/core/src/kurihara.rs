//! Kurihara elements x_{nu,q} as formal combinations of derivative classes,
//! a small rewriter in which the bracket and phi-bar rules are axioms, and
//! numeric phi-bar evaluation of the same elements.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circ_units::{check_split, CircularUnitSymbol, DerivativeClass, EvalOptions, Evaluator};
use crate::error::{Error, Result};
use crate::eval_maps::{orientation, phi_bar_with, Convention};
use crate::field_ctx::AbelianFieldCtx;
use crate::group_ring::{chi_project, GroupRingElement};

pub const DEFAULT_EPS_BOUND: usize = 3;

/// Primes of n, ascending. A well-ordered product can only be ordered one
/// way, since each prime is 1 modulo all earlier ones.
pub type Support = Vec<u64>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Kappa(Support),
    /// [kappa(n)]^s
    Bracket(u64, Support),
    /// phi-bar^l(kappa(n))
    Phi(u64, Support),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = |s: &Support| s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("*");
        match self {
            Atom::Kappa(s) => write!(f, "k({})", n(s)),
            Atom::Bracket(l, s) => write!(f, "[k({})]^{l}", n(s)),
            Atom::Phi(l, s) => write!(f, "phi^{l}(k({}))", n(s)),
        }
    }
}

/// Integer polynomial in commuting weights wbar_l; a monomial is the sorted
/// list of its labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly(BTreeMap<Vec<u64>, i64>);

impl Poly {
    pub fn monomial(labels: &[u64], c: i64) -> Self {
        let mut m = labels.to_vec();
        m.sort_unstable();
        let mut p = Poly::default();
        p.add_term(m, c);
        p
    }

    fn add_term(&mut self, m: Vec<u64>, c: i64) {
        let slot = self.0.entry(m.clone()).or_insert(0);
        *slot += c;
        if *slot == 0 {
            self.0.remove(&m);
        }
    }

    pub fn add(&mut self, other: &Poly) {
        for (m, &c) in &other.0 {
            self.add_term(m.clone(), c);
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::default();
        for (a, &x) in &self.0 {
            for (b, &y) in &other.0 {
                let mut m: Vec<u64> = a.iter().chain(b).copied().collect();
                m.sort_unstable();
                out.add_term(m, x * y);
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u64>, i64)> {
        self.0.iter().map(|(m, &c)| (m, c))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(m, c)| {
                let w: Vec<String> = m.iter().map(|l| format!("w{l}")).collect();
                if w.is_empty() {
                    c.to_string()
                } else {
                    format!("{c}*{}", w.join("*"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Element of the free module on atoms over the weight polynomials.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Expr(BTreeMap<Atom, Poly>);

impl Expr {
    pub fn atom(a: Atom, c: Poly) -> Self {
        let mut e = Expr::default();
        e.add_atom(a, &c);
        e
    }

    fn add_atom(&mut self, a: Atom, c: &Poly) {
        let slot = self.0.entry(a.clone()).or_default();
        slot.add(c);
        if slot.is_zero() {
            self.0.remove(&a);
        }
    }

    pub fn add(&mut self, other: &Expr) {
        for (a, c) in &other.0 {
            self.add_atom(a.clone(), c);
        }
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        let mut out = self.clone();
        for (a, c) in &other.0 {
            out.add_atom(a.clone(), &c.mul(&Poly::monomial(&[], -1)));
        }
        out
    }

    pub fn scale(&self, c: &Poly) -> Expr {
        let mut out = Expr::default();
        for (a, x) in &self.0 {
            out.add_atom(a.clone(), &x.mul(c));
        }
        out
    }

    fn map_kappa(&self, f: impl Fn(&Support) -> Atom) -> Result<Expr> {
        let mut out = Expr::default();
        for (a, c) in &self.0 {
            match a {
                Atom::Kappa(s) => out.add_atom(f(s), c),
                other => return Err(Error::ReductionFailure(format!("operator applied to non-class atom {other}"))),
            }
        }
        Ok(out)
    }

    /// [.]^s applied termwise.
    pub fn bracket(&self, s: u64) -> Result<Expr> {
        self.map_kappa(|n| Atom::Bracket(s, n.clone()))
    }

    /// phi-bar^l applied termwise.
    pub fn phi(&self, l: u64) -> Result<Expr> {
        self.map_kappa(|n| Atom::Phi(l, n.clone()))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Atom, &Poly)> {
        self.0.iter()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.0.iter().map(|(a, c)| format!("({c}) {a}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    /// [kappa(n)]^s = 0 for s not dividing n
    A1,
    /// [kappa(n)]^l = phi-bar^l(kappa(n/l)) for l | n
    A2,
    /// phi-bar^l(kappa(n)) = 0 for l | n, n well-ordered
    A3,
}

/// Rewrites to normal form. Every rule consumes the atom it matches and
/// only A2 produces a new one, which A3 may then remove, so the system
/// terminates and the rules never overlap.
pub fn normalize(e: &Expr, well_ordered: &dyn Fn(&[u64]) -> bool, log: &mut Vec<Rule>) -> Expr {
    let mut cur = e.clone();
    loop {
        let mut next = Expr::default();
        let mut changed = false;
        for (a, c) in &cur.0 {
            match a {
                Atom::Bracket(s, n) if !n.contains(s) => {
                    log.push(Rule::A1);
                    changed = true;
                }
                Atom::Bracket(l, n) => {
                    let rest: Support = n.iter().copied().filter(|x| x != l).collect();
                    next.add_atom(Atom::Phi(*l, rest), c);
                    log.push(Rule::A2);
                    changed = true;
                }
                Atom::Phi(l, n) if n.contains(l) && well_ordered(n) => {
                    log.push(Rule::A3);
                    changed = true;
                }
                other => next.add_atom(other.clone(), c),
            }
        }
        if !changed {
            return next;
        }
        cur = next;
    }
}

/// One term wbar_e * kappa(q nu/e) of x_{nu,q}; `tags` lists the H_l
/// factors in the order the tensor product was formed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalTerm {
    pub weight: Vec<u64>,
    pub class: Support,
    pub tags: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalClass {
    pub nu: Support,
    pub q: u64,
    pub terms: Vec<FormalTerm>,
}

impl FormalClass {
    pub fn to_expr(&self) -> Expr {
        let mut e = Expr::default();
        for t in &self.terms {
            e.add(&Expr::atom(Atom::Kappa(t.class.clone()), Poly::monomial(&t.weight, 1)));
        }
        e
    }

    pub fn eps(&self) -> usize {
        self.nu.len()
    }
}

fn subsets(primes: &[u64]) -> Vec<Vec<u64>> {
    (0..1usize << primes.len())
        .map(|mask| primes.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &l)| l).collect())
        .collect()
}

fn sorted_support(nu: &[u64], q: u64) -> Support {
    let mut s: Support = nu.iter().copied().chain([q]).collect();
    s.sort_unstable();
    s
}

/// x_{nu,q} = sum over e | nu of wbar_e kappa(q nu/e). The tagged element
/// w_e (x) kappa~_{nu/e,q} carries one sigma_l for every l | nu; the tags are
/// checked against that and then stripped.
pub fn build_x<W>(ctx: &AbelianFieldCtx, nu: &[u64], q: u64, weights: &BTreeMap<u64, W>) -> Result<FormalClass> {
    let mut nu: Support = nu.to_vec();
    nu.sort_unstable();
    let full = sorted_support(&nu, q);
    if full.windows(2).any(|w| w[0] == w[1]) || !ctx.is_well_ordered(&full) {
        return Err(Error::NotWellOrdered(full));
    }
    if let Some(&l) = nu.iter().find(|l| !weights.contains_key(l)) {
        return Err(Error::MissingWeight(l));
    }
    let mut terms = Vec::new();
    for e in subsets(&nu) {
        let rest: Vec<u64> = nu.iter().copied().filter(|l| !e.contains(l)).collect();
        let tags: Vec<u64> = e.iter().chain(&rest).copied().collect();
        let mut stripped = tags.clone();
        stripped.sort_unstable();
        if stripped != nu {
            return Err(Error::ReductionFailure(format!("tag mismatch {tags:?} for nu = {nu:?}")));
        }
        terms.push(FormalTerm { weight: e, class: sorted_support(&rest, q), tags });
    }
    Ok(FormalClass { nu, q, terms })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityResult {
    /// "bracket-away", "bracket-at" or "phi-at"
    pub identity: String,
    #[serde(with = "crate::json")]
    pub prime: u64,
    pub residual: String,
    pub rules: Vec<Rule>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormalReport {
    #[serde(with = "crate::json::vec")]
    pub nu: Vec<u64>,
    #[serde(with = "crate::json")]
    pub q: u64,
    pub results: Vec<IdentityResult>,
}

/// Checks, with symbolic weights:
///   [x_{nu,q}]^s = 0 for a prime s not dividing q nu,
///   [x_{nu,q}]^l = phi^l(x_{nu/l,q}) for l | nu,
///   phi^l(x_{nu,q}) = wbar_l phi^l(x_{nu/l,q}) for l | nu.
pub fn formal_check(ctx: &AbelianFieldCtx, nu: &[u64], q: u64, eps_bound: usize) -> Result<FormalReport> {
    if nu.len() > eps_bound {
        return Err(Error::BudgetExceeded(format!("eps(nu) = {} above {eps_bound}", nu.len())));
    }
    let weights: BTreeMap<u64, ()> = nu.iter().map(|&l| (l, ())).collect();
    let x = build_x(ctx, nu, q, &weights)?;
    let wo = |s: &[u64]| ctx.is_well_ordered(s);
    let mut results = Vec::new();
    let mut record = |identity: &str, prime: u64, diff: Expr| {
        let mut rules = Vec::new();
        let r = normalize(&diff, &wo, &mut rules);
        results.push(IdentityResult {
            identity: identity.into(),
            prime,
            residual: r.to_string(),
            rules,
            pass: r.is_zero(),
        });
    };
    let xe = x.to_expr();
    let s = (2u64..).find(|s| crate::arith::is_prime(*s) && *s != q && !nu.contains(s)).expect("primes are infinite");
    record("bracket-away", s, xe.bracket(s)?);
    for &l in &x.nu {
        let rest: Vec<u64> = x.nu.iter().copied().filter(|&y| y != l).collect();
        let lower = build_x(ctx, &rest, q, &weights)?.to_expr();
        record("bracket-at", l, xe.bracket(l)?.sub(&lower.phi(l)?));
        record("phi-at", l, xe.phi(l)?.sub(&lower.phi(l)?.scale(&Poly::monomial(&[l], 1))));
    }
    if let Some(bad) = results.iter().find(|r| !r.pass) {
        return Err(Error::ReductionFailure(format!(
            "{} at {} for nu = {:?}, q = {q}: residual {}",
            bad.identity, bad.prime, x.nu, bad.residual
        )));
    }
    Ok(FormalReport { nu: x.nu, q, results })
}

/// `formal_check` over several (nu, q) in parallel, results in input order.
pub fn formal_check_many(ctx: &AbelianFieldCtx, cases: &[(Vec<u64>, u64)], eps_bound: usize) -> Vec<Result<FormalReport>> {
    cases.par_iter().map(|(nu, q)| formal_check(ctx, nu, *q, eps_bound)).collect()
}

fn weight_of(x: &[u64], weights: &BTreeMap<u64, GroupRingElement>, one: &GroupRingElement) -> Result<GroupRingElement> {
    x.iter().try_fold(one.clone(), |acc, l| acc.mul(weights.get(l).ok_or(Error::MissingWeight(*l))?))
}

fn check_fresh(x: &FormalClass, qp: u64) -> Result<()> {
    if qp == x.q || x.nu.contains(&qp) {
        let n = x.nu.iter().product::<u64>() * x.q;
        return Err(Error::DividesAux { ell: qp, n });
    }
    Ok(())
}

/// phi-bar^{q'}(x_{nu,q}) = sum_e wbar_e phi-bar^{q'}(kappa(q nu/e)), with
/// weights in R_{0,N,chi}.
pub fn numeric_phi_on_x(
    ctx: &AbelianFieldCtx,
    x: &FormalClass,
    family: &CircularUnitSymbol,
    qp: u64,
    weights: &BTreeMap<u64, GroupRingElement>,
    conv: Convention,
) -> Result<GroupRingElement> {
    check_fresh(x, qp)?;
    let opts = EvalOptions::default();
    let mut acc = ctx.chi_ring.zero();
    for t in &x.terms {
        let cls = DerivativeClass::new(ctx, family, &t.class)?;
        let v = phi_bar_with(ctx, qp, &cls, conv, &opts)?;
        acc = acc.add(&weight_of(&t.weight, weights, &ctx.chi_ring.one())?.mul(&v)?)?;
    }
    Ok(acc)
}

/// Same value along a second path: the raw conjugate vectors are combined
/// in Z/p^N[Gal(F/Q)] first, then oriented once and projected once.
pub fn numeric_phi_on_x_combined(
    ctx: &AbelianFieldCtx,
    x: &FormalClass,
    family: &CircularUnitSymbol,
    qp: u64,
    weights: &BTreeMap<u64, GroupRingElement>,
    conv: Convention,
) -> Result<GroupRingElement> {
    check_fresh(x, qp)?;
    let opts = EvalOptions::default();
    let dord = ctx.group.delta_order() as usize;
    let embed = |w: &GroupRingElement| {
        let mut c = vec![0u64; ctx.gal_ring.rank()];
        for (g, &v) in w.coeffs.iter().enumerate() {
            c[g * dord] = v;
        }
        ctx.gal_ring.from_residues(c)
    };
    let mut acc = ctx.gal_ring.zero();
    let mut shift = None;
    for t in &x.terms {
        let cls = DerivativeClass::new(ctx, family, &t.class)?;
        let n = cls.n();
        check_split(ctx, qp, n)?;
        let ev = Evaluator::new(ctx, qp, n, opts.field_bits)?;
        let o = orientation(&ev)?;
        if *shift.get_or_insert(o) != o {
            return Err(Error::InconsistentField(format!("orientation at {qp} depends on n")));
        }
        let v = ev.kappa_vector(&cls, 1, &opts)?;
        acc = acc.add(&embed(&weight_of(&t.weight, weights, &ctx.chi_ring.one())?).mul(&v)?)?;
    }
    let v = acc.shift(shift.unwrap_or(0));
    let v = match conv {
        Convention::Standard => v.neg(),
        Convention::Inverse => v,
    };
    chi_project(&v, &ctx.chi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> AbelianFieldCtx {
        AbelianFieldCtx::build(3, 257, 0, 2).unwrap()
    }

    /// l_1 < l_2 < ... with each l_i the least Kolyvagin prime that is 1
    /// modulo the product of the earlier ones.
    fn chain(ctx: &AbelianFieldCtx, r: usize) -> Vec<u64> {
        let out = ctx.least_chain(r, 1 << 24).unwrap();
        assert!(ctx.is_well_ordered(&out));
        out
    }

    fn labels(nu: &[u64]) -> BTreeMap<u64, ()> {
        nu.iter().map(|&l| (l, ())).collect()
    }

    #[test]
    fn expansion_shapes() {
        let c = ctx();
        let p = chain(&c, 3);
        let (q, l1, l2) = (p[0], p[1], p[2]);
        let x1 = build_x(&c, &[], q, &labels(&[])).unwrap();
        assert_eq!(x1.to_expr(), Expr::atom(Atom::Kappa(vec![q]), Poly::monomial(&[], 1)));
        let x2 = build_x(&c, &[l1], q, &labels(&[l1])).unwrap();
        let mut want = Expr::atom(Atom::Kappa(vec![q, l1]), Poly::monomial(&[], 1));
        want.add(&Expr::atom(Atom::Kappa(vec![q]), Poly::monomial(&[l1], 1)));
        assert_eq!(x2.to_expr(), want);
        let x3 = build_x(&c, &[l2, l1], q, &labels(&[l1, l2])).unwrap();
        let coeffs: Vec<(Vec<u64>, Vec<u64>)> = x3.terms.iter().map(|t| (t.weight.clone(), t.class.clone())).collect();
        assert_eq!(coeffs.len(), 4);
        for (w, cl) in [(vec![], vec![q, l1, l2]), (vec![l1], vec![q, l2]), (vec![l2], vec![q, l1]), (vec![l1, l2], vec![q])] {
            assert!(coeffs.contains(&(w, cl)));
        }
        for t in &x3.terms {
            assert_eq!(t.tags.len(), 2);
        }
    }

    #[test]
    fn expansion_recursion() {
        // x_{nu,q} = x_{nu/l, q l} + wbar_l x_{nu/l, q} on the level of terms
        let c = ctx();
        let p = chain(&c, 3);
        let (q, l1, l2) = (p[0], p[1], p[2]);
        let w = labels(&[l1, l2]);
        let x = build_x(&c, &[l1, l2], q, &w).unwrap().to_expr();
        let lower = build_x(&c, &[l1], q, &w).unwrap().to_expr();
        let mut rebuilt = Expr::default();
        for (a, coef) in lower.iter() {
            let Atom::Kappa(s) = a else { unreachable!() };
            let mut up = s.clone();
            up.push(l2);
            up.sort_unstable();
            rebuilt.add(&Expr::atom(Atom::Kappa(up), coef.clone()));
        }
        rebuilt.add(&lower.scale(&Poly::monomial(&[l2], 1)));
        assert_eq!(x, rebuilt);
    }

    #[test]
    fn identities_hold_up_to_three_primes() {
        let c = ctx();
        let p = chain(&c, 4);
        let mut cases = Vec::new();
        for r in 0..=3 {
            cases.push((p[1..=r].to_vec(), p[0]));
        }
        // q need not be the smallest prime
        cases.push((vec![p[0], p[2]], p[1]));
        for res in formal_check_many(&c, &cases, DEFAULT_EPS_BOUND) {
            let rep = res.unwrap();
            assert_eq!(rep.results.len(), 1 + 2 * rep.nu.len());
            assert!(rep.results.iter().all(|r| r.pass && r.residual == "0"));
        }
    }

    #[test]
    fn single_prime_phi_identity_uses_a3() {
        let c = ctx();
        let p = chain(&c, 2);
        let rep = formal_check(&c, &p[1..], p[0], 3).unwrap();
        let phi = rep.results.iter().find(|r| r.identity == "phi-at").unwrap();
        assert!(phi.rules.contains(&Rule::A3));
        let away = &rep.results[0];
        assert!(away.rules.iter().all(|&r| r == Rule::A1));
    }

    #[test]
    fn dropping_a3_breaks_the_phi_identity() {
        let c = ctx();
        let p = chain(&c, 2);
        let x = build_x(&c, &p[1..], p[0], &labels(&p[1..])).unwrap().to_expr();
        let lower = build_x(&c, &[], p[0], &labels(&[])).unwrap().to_expr();
        let diff = x.phi(p[1]).unwrap().sub(&lower.phi(p[1]).unwrap().scale(&Poly::monomial(&[p[1]], 1)));
        let never = |_: &[u64]| false;
        let r = normalize(&diff, &never, &mut Vec::new());
        assert_eq!(r, Expr::atom(Atom::Phi(p[1], vec![p[0], p[1]]), Poly::monomial(&[], 1)));
    }

    #[test]
    fn build_errors() {
        let c = ctx();
        let p = chain(&c, 2);
        assert_eq!(build_x(&c, &p[1..], p[0], &labels(&[])).unwrap_err(), Error::MissingWeight(p[1]));
        assert!(matches!(build_x(&c, &[7], p[0], &labels(&[7])), Err(Error::NotWellOrdered(_))));
        assert!(matches!(formal_check(&c, &[11, 13, 17, 19], 7, 3), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn numeric_paths_agree() {
        let c = ctx();
        let eta = CircularUnitSymbol::eta(&c, 1).unwrap();
        let p = chain(&c, 2);
        let (q, l) = (p[0], p[1]);
        let mut w = BTreeMap::new();
        w.insert(l, c.chi_ring.scalar(4));
        let x = build_x(&c, &[l], q, &w).unwrap();
        let qp = c
            .kolyvagin_primes(q * l * 257, 1 << 20)
            .map(|k| k.unwrap().ell)
            .find(|&t| c.splits_completely(t, q * l))
            .unwrap();
        let a = numeric_phi_on_x(&c, &x, &eta, qp, &w, Convention::Standard).unwrap();
        let b = numeric_phi_on_x_combined(&c, &x, &eta, qp, &w, Convention::Standard).unwrap();
        assert_eq!(a, b);
        let top = phi_bar_with(&c, qp, &DerivativeClass::new(&c, &eta, &[q, l]).unwrap(), Convention::Standard, &EvalOptions::default()).unwrap();
        let bottom = phi_bar_with(&c, qp, &DerivativeClass::new(&c, &eta, &[q]).unwrap(), Convention::Standard, &EvalOptions::default()).unwrap();
        assert_eq!(a, top.add(&bottom.scale(4)).unwrap());
        w.insert(l, c.chi_ring.zero());
        assert_eq!(numeric_phi_on_x(&c, &x, &eta, qp, &w, Convention::Standard).unwrap(), top);
        let x1 = build_x(&c, &[], q, &w).unwrap();
        let bottom_again = numeric_phi_on_x(&c, &x1, &eta, qp, &w, Convention::Standard).unwrap();
        assert_eq!(bottom_again, bottom);
        assert!(matches!(numeric_phi_on_x(&c, &x, &eta, l, &w, Convention::Standard), Err(Error::DividesAux { .. })));
    }
}
