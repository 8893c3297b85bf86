//! Lower approximations of the cyclotomic ideals C_{i,0,N,chi}: chi-parts of
//! Kolyvagin derivatives kappa(n), eps(n) <= i, reduced at sampled primes q
//! and accumulated into an ideal of R_{0,N,chi} = Z/p^N.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{divisors, gcd, is_prime, valuation};
use crate::circ_units::{evaluate_kappa_with, CircularUnitSymbol, DerivativeClass, EvalOptions, UnitKind};
use crate::error::{Error, Result};
use crate::field_ctx::AbelianFieldCtx;
use crate::fitting::fitting_of_p_group;
use crate::group_ring::{chi_project, IdealNF};

pub const DEFAULT_WINDOW: usize = 50;
pub const DEFAULT_BATCH: usize = 8;
/// q = L k + 1 with k drawn below this bound, then the next prime.
pub const DEFAULT_K_RANGE: u64 = 1 << 20;

/// Least N with p^N > order, plus one.
pub fn auto_precision(p: u64, order: u64) -> u32 {
    let mut n = 0u32;
    let mut pn = 1u128;
    while pn <= order as u128 {
        pn *= p as u128;
        n += 1;
    }
    n + 1
}

/// Basic units generating W(n): eta^d for d | f_K, d > 1, and the first
/// `a_count` of eta^{1,a} with a running over residues mod p^{m+1} other
/// than 0 and 1.
pub fn basic_units(ctx: &AbelianFieldCtx, a_count: usize) -> Vec<UnitKind> {
    let mut out: Vec<UnitKind> = divisors(ctx.d).into_iter().filter(|&d| d > 1).map(UnitKind::D).collect();
    out.extend((2..ctx.pm1).filter(|a| a % ctx.p != 0).take(a_count).map(UnitKind::A));
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleConfig {
    pub i: usize,
    /// number of (n, q) evaluations allowed
    pub budget: usize,
    pub seed: u64,
    pub window: usize,
    pub batch: usize,
    pub k_range: u64,
    pub a_count: usize,
    /// exponents of the elementary divisors of A_{0,chi}; enables the
    /// per-sample containment check and the stop on a match
    pub oracle: Option<Vec<u32>>,
    pub eval: EvalOptions,
}

impl SampleConfig {
    pub fn new(i: usize, budget: usize, seed: u64) -> Self {
        SampleConfig {
            i,
            budget,
            seed,
            window: DEFAULT_WINDOW,
            batch: DEFAULT_BATCH,
            k_range: DEFAULT_K_RANGE,
            a_count: 1,
            oracle: None,
            eval: EvalOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    #[serde(with = "crate::json")]
    pub n: u64,
    #[serde(with = "crate::json::vec")]
    pub primes: Vec<u64>,
    #[serde(with = "crate::json")]
    pub q: u64,
    pub unit: UnitKind,
    /// chi-projection of the conjugate vector
    pub value: Vec<u64>,
    /// p-adic valuation of the value, absent for 0
    pub valuation: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    #[serde(with = "crate::json::vec")]
    pub primes: Vec<u64>,
    #[serde(with = "crate::json")]
    pub q: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RunStatus {
    /// reached the unit ideal, or matched the oracle and stayed there for
    /// a full window
    Complete,
    /// budget ran out first; the ideal is only a lower bound
    Partial,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycIdealRun {
    pub p: u64,
    #[serde(rename = "D")]
    pub d: u64,
    pub m: u32,
    #[serde(rename = "N")]
    pub precision: u32,
    pub i: usize,
    #[serde(with = "crate::json")]
    pub seed: u64,
    pub budget: usize,
    pub evaluations: usize,
    /// leading samples replayed from a run at a lower index
    #[serde(default)]
    pub inherited: usize,
    pub samples: Vec<Sample>,
    pub skipped: Vec<Skipped>,
    /// the ideal is (p^e); e = N is the zero ideal
    pub ideal_exponent: u32,
    /// number of samples recorded when the ideal last grew
    pub last_growth: usize,
    /// exponent of Fitt_i from the oracle, when one was supplied
    pub target_exponent: Option<u32>,
    pub status: RunStatus,
}

impl CycIdealRun {
    pub fn ideal(&self, ctx: &AbelianFieldCtx) -> IdealNF {
        IdealNF::p_power(&ctx.chi_ring, self.ideal_exponent)
    }

    pub fn is_unit(&self) -> bool {
        self.ideal_exponent == 0
    }

    pub fn matches_target(&self) -> Option<bool> {
        self.target_exponent.map(|t| t == self.ideal_exponent)
    }
}

/// True iff the last `window` samples did not enlarge the ideal.
pub fn stabilized(run: &CycIdealRun, window: usize) -> bool {
    if run.is_unit() {
        return true;
    }
    !run.samples.is_empty() && run.samples.len() - run.last_growth >= window
}

/// A planned evaluation: kappa(n) for n = prod primes at q.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Plan {
    primes: Vec<u64>,
    n: u64,
    q: u64,
}

/// Index tuples of a fixed length in order of increasing sum, so that no
/// coordinate is starved.
struct Diagonal {
    len: usize,
    sum: usize,
    pending: Vec<Vec<usize>>,
}

impl Diagonal {
    fn new(len: usize) -> Self {
        Diagonal { len, sum: 0, pending: compositions(len, 0) }
    }

    fn next_tuple(&mut self) -> Vec<usize> {
        while self.pending.is_empty() {
            self.sum += 1;
            self.pending = compositions(self.len, self.sum);
        }
        self.pending.remove(0)
    }
}

/// All tuples of `len` non-negative integers summing to `sum`, lexicographic.
fn compositions(len: usize, sum: usize) -> Vec<Vec<usize>> {
    if len == 1 {
        return vec![vec![sum]];
    }
    (0..=sum)
        .flat_map(|h| compositions(len - 1, sum - h).into_iter().map(move |mut t| {
            t.insert(0, h);
            t
        }))
        .collect()
}

fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Round-robin over eps = 0..=i. Within one eps the tuple (a_1, ..., a_eps, j)
/// selects l_1 as the a_1-th Kolyvagin prime, l_k as the a_k-th one that is
/// 1 modulo l_1 ... l_{k-1}, and the j-th prime q for that n. The stream
/// for a given eps does not depend on i or on the budget.
struct Schedule<'a> {
    ctx: &'a AbelianFieldCtx,
    seed: u64,
    k_range: u64,
    streams: Vec<Diagonal>,
    turn: usize,
    chains: HashMap<Vec<u64>, Vec<u64>>,
}

const CHAIN_SEARCH: u64 = 1 << 24;

impl<'a> Schedule<'a> {
    fn new(ctx: &'a AbelianFieldCtx, i: usize, seed: u64, k_range: u64) -> Self {
        Schedule {
            ctx,
            seed,
            k_range,
            streams: (0..=i).map(|e| Diagonal::new(e + 1)).collect(),
            turn: 0,
            chains: HashMap::new(),
        }
    }

    /// The a-th Kolyvagin prime that is 1 modulo the product of `prefix`.
    fn chain_prime(&mut self, prefix: &[u64], a: usize) -> Option<u64> {
        let ctx = self.ctx;
        let extra = prefix.iter().try_fold(1u64, |acc, &l| acc.checked_mul(l))?;
        let found = self.chains.entry(prefix.to_vec()).or_default();
        if found.len() <= a {
            let start = found.len();
            let more: Vec<u64> = ctx
                .kolyvagin_primes(extra, CHAIN_SEARCH)
                .skip(start)
                .take(a + 1 - start)
                .map_while(|k| k.ok().map(|k| k.ell))
                .collect();
            found.extend(more);
        }
        found.get(a).copied()
    }

    /// q = L k + 1 prime, with L making every root of unity rational over
    /// F_q; k starts at a seeded draw depending only on (seed, n, j).
    fn eval_prime(&self, n: u64, j: usize) -> Option<u64> {
        let l = self.ctx.evaluation_modulus(n);
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.seed ^ mix(n ^ mix(j as u64))));
        let mut k = rng.random_range(1..=self.k_range);
        loop {
            let q = l.checked_mul(k)?.checked_add(1)?;
            if is_prime(q) && q != self.ctx.p && gcd(q, n) == 1 {
                return Some(q);
            }
            k += 1;
        }
    }

    fn next_plan(&mut self) -> Option<Plan> {
        let eps = self.turn % self.streams.len();
        self.turn += 1;
        // a tuple whose chain cannot be formed is skipped; give up after a
        // long run of those rather than loop forever
        for _ in 0..10_000 {
            let t = self.streams[eps].next_tuple();
            let (idx, j) = t.split_at(eps);
            let mut primes = Vec::with_capacity(eps);
            let mut ok = true;
            for &a in idx {
                match self.chain_prime(&primes, a) {
                    Some(l) => primes.push(l),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let Some(n) = primes.iter().try_fold(1u64, |acc, &l| acc.checked_mul(l)) else { continue };
            if let Some(q) = self.eval_prime(n, j[0]) {
                return Some(Plan { primes, n, q });
            }
        }
        None
    }
}

fn evaluate_plan(ctx: &AbelianFieldCtx, plan: &Plan, units: &[UnitKind], opts: &EvalOptions) -> Result<Vec<Sample>> {
    let mut out = Vec::with_capacity(units.len());
    for &unit in units {
        let family = CircularUnitSymbol::basic(ctx, unit, 1)?;
        let cls = DerivativeClass::new(ctx, &family, &plan.primes)?;
        let v = chi_project(&evaluate_kappa_with(ctx, &cls, plan.q, 1, opts)?, &ctx.chi)?;
        let valuation = v.coeffs.iter().filter(|&&c| c != 0).map(|&c| valuation(c, ctx.p)).min();
        out.push(Sample { n: plan.n, primes: plan.primes.clone(), q: plan.q, unit, value: v.coeffs, valuation });
    }
    Ok(out)
}

/// `sample_with` without an oracle and with default tuning.
pub fn sample_cyclotomic_ideal(ctx: &AbelianFieldCtx, i: usize, budget: usize, seed: u64) -> Result<CycIdealRun> {
    sample_with(ctx, &SampleConfig::new(i, budget, seed))
}

/// Evaluations run a batch at a time in parallel and are merged in plan
/// order, so the transcript does not depend on scheduling.
pub fn sample_with(ctx: &AbelianFieldCtx, cfg: &SampleConfig) -> Result<CycIdealRun> {
    sample_continuing(ctx, cfg, None)
}

/// Adds one sample to the run; true once the run is complete.
fn absorb(run: &mut CycIdealRun, ideal: &mut IdealNF, target: Option<&IdealNF>, s: Sample, window: usize) -> Result<bool> {
    let v = ideal.ring.from_residues(s.value.clone());
    if let Some(t) = target {
        if !t.contains(&v)? {
            return Err(Error::Soundness(format!(
                "kappa({:?}) for {:?} at q = {} has value {:?}, outside Fitt_{}",
                s.primes, s.unit, s.q, s.value, run.i
            )));
        }
    }
    run.samples.push(s);
    if !ideal.contains(&v)? {
        *ideal = ideal.add_element(&v)?;
        run.last_growth = run.samples.len();
        run.ideal_exponent = ideal.chain_exponent().expect("chi-ring at m = 0 is Z/p^N");
    }
    let matched = run.target_exponent == Some(run.ideal_exponent);
    if run.is_unit() || (matched && stabilized(run, window)) {
        run.status = RunStatus::Complete;
    }
    Ok(run.status == RunStatus::Complete)
}

/// As `sample_with`, starting from the transcript of a run at a lower
/// index: its samples are witnesses with eps(n) < i, so they are replayed
/// first (and checked against Fitt_i), and their (n, q) are not evaluated
/// again. Only new evaluations count against the budget.
pub fn sample_continuing(ctx: &AbelianFieldCtx, cfg: &SampleConfig, prior: Option<&CycIdealRun>) -> Result<CycIdealRun> {
    if ctx.m != 0 {
        return Err(Error::InvalidInput("cyclotomic ideals are sampled at m = 0".into()));
    }
    if let Some(pr) = prior {
        if (pr.p, pr.d, pr.m, pr.precision) != (ctx.p, ctx.d, ctx.m, ctx.n) || pr.i >= cfg.i {
            return Err(Error::InvalidInput(format!("run for i = {} cannot seed i = {}", pr.i, cfg.i)));
        }
    }
    let target = match &cfg.oracle {
        Some(divs) => Some(fitting_of_p_group(divs, cfg.i, ctx.p, ctx.n)?),
        None => None,
    };
    let units = basic_units(ctx, cfg.a_count);
    let mut run = CycIdealRun {
        p: ctx.p,
        d: ctx.d,
        m: ctx.m,
        precision: ctx.n,
        i: cfg.i,
        seed: cfg.seed,
        budget: cfg.budget,
        evaluations: 0,
        inherited: 0,
        samples: Vec::new(),
        skipped: Vec::new(),
        ideal_exponent: ctx.n,
        last_growth: 0,
        target_exponent: target.as_ref().and_then(|t| t.chain_exponent()),
        status: RunStatus::Partial,
    };
    let mut ideal = IdealNF::zero(&ctx.chi_ring);
    let mut seen: HashSet<(Vec<u64>, u64)> = HashSet::new();
    if let Some(pr) = prior {
        for s in &pr.samples {
            seen.insert((s.primes.clone(), s.q));
            run.inherited += 1;
            if absorb(&mut run, &mut ideal, target.as_ref(), s.clone(), cfg.window)? {
                return Ok(run);
            }
        }
        seen.extend(pr.skipped.iter().map(|s| (s.primes.clone(), s.q)));
    }
    let mut sched = Schedule::new(ctx, cfg.i, cfg.seed, cfg.k_range);
    'outer: while run.evaluations < cfg.budget {
        let take = cfg.batch.max(1).min(cfg.budget - run.evaluations);
        let mut plans: Vec<Plan> = Vec::with_capacity(take);
        while plans.len() < take {
            match sched.next_plan() {
                Some(pl) if seen.contains(&(pl.primes.clone(), pl.q)) => continue,
                Some(pl) => plans.push(pl),
                None => break,
            }
        }
        if plans.is_empty() {
            break;
        }
        let results: Vec<Result<Vec<Sample>>> =
            plans.par_iter().map(|pl| evaluate_plan(ctx, pl, &units, &cfg.eval)).collect();
        for (plan, res) in plans.iter().zip(results) {
            run.evaluations += 1;
            let samples = match res {
                Ok(s) => s,
                Err(e @ (Error::BudgetExhausted(_) | Error::BudgetExceeded(_))) => {
                    run.skipped.push(Skipped { primes: plan.primes.clone(), q: plan.q, reason: e.to_string() });
                    continue;
                }
                Err(e) => return Err(e),
            };
            for s in samples {
                if absorb(&mut run, &mut ideal, target.as_ref(), s, cfg.window)? {
                    break 'outer;
                }
            }
        }
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> AbelianFieldCtx {
        AbelianFieldCtx::build(3, 257, 0, 2).unwrap()
    }

    #[test]
    fn precision_rule() {
        assert_eq!(auto_precision(3, 1), 2);
        assert_eq!(auto_precision(3, 3), 3);
        assert_eq!(auto_precision(3, 8), 3);
        assert_eq!(auto_precision(3, 9), 4);
        assert_eq!(auto_precision(5, 125), 5);
    }

    #[test]
    fn diagonal_covers_every_tuple_once() {
        let mut d = Diagonal::new(3);
        let seen: Vec<Vec<usize>> = (0..35).map(|_| d.next_tuple()).collect();
        // 1 + 3 + 6 + 10 + 15 tuples have sum at most 4
        for a in 0..5 {
            for b in 0..5 - a {
                for c in 0..5 - a - b {
                    assert_eq!(seen.iter().filter(|t| **t == vec![a, b, c]).count(), 1);
                }
            }
        }
    }

    #[test]
    fn schedule_plans_are_admissible() {
        let c = ctx();
        let mut s = Schedule::new(&c, 2, 7, DEFAULT_K_RANGE);
        for _ in 0..12 {
            let pl = s.next_plan().unwrap();
            assert!(c.is_well_ordered(&pl.primes));
            assert!(is_prime(pl.q));
            assert!(c.splits_completely(pl.q, pl.n));
            assert_eq!((pl.q - 1) % c.evaluation_modulus(pl.n), 0);
        }
    }

    #[test]
    fn zero_budget_is_partial_zero() {
        let run = sample_cyclotomic_ideal(&ctx(), 0, 0, 1).unwrap();
        assert_eq!(run.status, RunStatus::Partial);
        assert_eq!(run.ideal_exponent, 2);
        assert!(run.ideal(&ctx()).is_zero());
        assert!(!stabilized(&run, 1));
    }

    #[test]
    fn level_zero_gives_three() {
        let c = ctx();
        let mut cfg = SampleConfig::new(0, 60, 3);
        cfg.window = 20;
        cfg.oracle = Some(vec![1]);
        let run = sample_with(&c, &cfg).unwrap();
        assert_eq!(run.ideal_exponent, 1);
        assert_eq!(run.status, RunStatus::Complete);
        assert!(stabilized(&run, 20));
        assert!(run.samples.iter().all(|s| s.primes.is_empty() && s.valuation != Some(0)));
    }

    #[test]
    fn level_one_reaches_the_unit_ideal() {
        let c = ctx();
        let mut cfg = SampleConfig::new(1, 200, 3);
        cfg.oracle = Some(vec![1]);
        let run = sample_with(&c, &cfg).unwrap();
        assert!(run.is_unit(), "{run:?}");
        assert_eq!(run.status, RunStatus::Complete);
        assert!(stabilized(&run, 1000));
        let w = run.samples.iter().find(|s| s.valuation == Some(0)).unwrap();
        assert_eq!(w.primes.len(), 1);
    }

    #[test]
    fn runs_are_reproducible_and_monotone() {
        let c = ctx();
        let a = sample_cyclotomic_ideal(&c, 0, 10, 11).unwrap();
        let b = sample_cyclotomic_ideal(&c, 0, 10, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        // eps = 0 plans of the i = 0 run reappear at even turns of the i = 1 run
        let up = sample_cyclotomic_ideal(&c, 1, 20, 11).unwrap();
        let lower: Vec<(u64, u64)> = a.samples.iter().map(|s| (s.n, s.q)).collect();
        let upper: Vec<(u64, u64)> = up.samples.iter().filter(|s| s.n == 1).map(|s| (s.n, s.q)).collect();
        if up.status == RunStatus::Partial {
            assert_eq!(lower, upper);
        }
        assert!(up.ideal_exponent <= a.ideal_exponent);
    }

    #[test]
    fn higher_levels_continue_from_lower_ones() {
        let c = ctx();
        let mut cfg = SampleConfig::new(0, 60, 3);
        cfg.window = 20;
        cfg.oracle = Some(vec![1]);
        let r0 = sample_with(&c, &cfg).unwrap();
        cfg.i = 1;
        let r1 = sample_continuing(&c, &cfg, Some(&r0)).unwrap();
        assert!(r1.is_unit());
        assert_eq!(r1.inherited, r0.samples.len());
        assert_eq!(r1.samples[..r0.samples.len()], r0.samples[..]);
        // no (n, q) is evaluated twice
        let mut keys: Vec<(Vec<u64>, u64, UnitKind)> = r1.samples.iter().map(|s| (s.primes.clone(), s.q, s.unit)).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), r1.samples.len());
        // a unit ideal carries straight over
        cfg.i = 2;
        let r2 = sample_continuing(&c, &cfg, Some(&r1)).unwrap();
        assert!(r2.is_unit() && r2.evaluations == 0 && r2.status == RunStatus::Complete);
        cfg.i = 1;
        assert!(matches!(sample_continuing(&c, &cfg, Some(&r2)), Err(Error::InvalidInput(_))));
        let other = AbelianFieldCtx::build(3, 257, 0, 3).unwrap();
        cfg.i = 3;
        assert!(matches!(sample_continuing(&other, &cfg, Some(&r2)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn a_wrong_oracle_trips_the_containment_check() {
        // pretend A is Z/9: Fitt_0 = (9) = 0 in Z/9, yet kappa(1) has valuation 1
        let c = ctx();
        let mut cfg = SampleConfig::new(0, 10, 3);
        cfg.oracle = Some(vec![2]);
        let c3 = AbelianFieldCtx::build(3, 257, 0, 3).unwrap();
        assert!(matches!(sample_with(&c3, &cfg), Err(Error::Soundness(_))));
        assert!(matches!(sample_with(&c, &cfg), Err(Error::InsufficientPrecision { .. })));
    }

    #[test]
    fn transcript_round_trips() {
        let run = sample_cyclotomic_ideal(&ctx(), 1, 4, 5).unwrap();
        let s = serde_json::to_string(&run).unwrap();
        let back: CycIdealRun = serde_json::from_str(&s).unwrap();
        assert_eq!(back, run);
        assert!(s.contains("\"D\":257"));
    }
}
