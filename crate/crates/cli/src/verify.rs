//! The verify pipeline: oracle, Fitting ideals, sampled cyclotomic ideals,
//! then the annihilation and formal suites, folded into one report.

use std::path::Path;

use cycfit::arith::valuation;
use cycfit::classgroup::{ingest_external, narrow_class_group, FormClassGroup};
use cycfit::cyc_ideals::{auto_precision, sample_continuing, CycIdealRun, RunStatus, SampleConfig};
use cycfit::eval_maps::{annihilation_check, AnnihilationReport, Verdict};
use cycfit::field_ctx::AbelianFieldCtx;
use cycfit::fitting::fitting_of_p_group;
use cycfit::kurihara::{formal_check_many, FormalReport};
use cycfit::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::cache::{kolyvagin_list, PrimeCache};
use crate::config::RunConfig;
use crate::exit;

pub const SCHEMA: &str = "cycfit.verify/1";
pub const ORACLE_BUDGET: usize = 1 << 22;
const CHAIN_BUDGET: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Outcome {
    Pass,
    Match,
    Inconclusive,
    Bug,
}

impl Outcome {
    pub fn is_ok(self) -> bool {
        matches!(self, Outcome::Pass | Outcome::Match)
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass | Outcome::Match => exit::OK,
            Outcome::Inconclusive => exit::INCONCLUSIVE,
            Outcome::Bug => exit::BUG,
        }
    }
}

/// Class-group data for K and the field context at the chosen precision.
#[derive(Debug)]
pub struct Resolved {
    pub ctx: AbelianFieldCtx,
    pub group: FormClassGroup,
    /// p-power elementary divisors of A_chi
    pub divisors: Vec<u64>,
    pub source: &'static str,
}

impl Resolved {
    pub fn exponents(&self) -> Vec<u32> {
        self.divisors.iter().map(|&d| valuation(d, self.ctx.p)).collect()
    }

    pub fn order(&self) -> u64 {
        self.divisors.iter().product()
    }
}

/// Validates the field, runs the oracle, and fixes N. With an external
/// record the divisors come from the record, which ingest has already
/// checked against the forms.
pub fn resolve(p: u64, d: Option<u64>, external: Option<&Path>, m: u32, n: Option<u32>) -> Result<Resolved> {
    let (d, record) = match (d, external) {
        (_, Some(path)) => {
            let rec = ingest_external(path)?;
            let d = match (rec.field.kind.as_str(), rec.field.d) {
                ("quadratic", Some(d)) => d,
                _ => return Err(Error::InvalidInput("only quadratic records describe a field K".into())),
            };
            if rec.p != p {
                return Err(Error::InconsistentField(format!("record is for p = {}, run uses p = {p}", rec.p)));
            }
            (d, Some(rec))
        }
        (Some(d), None) => (d, None),
        (None, None) => return Err(Error::InvalidInput("either D or an external record is required".into())),
    };
    if n == Some(0) {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    // field checks first, so that bad input fails before the oracle runs
    AbelianFieldCtx::build(p, d, m, 1)?;
    let group = narrow_class_group(d, ORACLE_BUDGET)?;
    let (divisors, source) = match record {
        Some(r) => (r.divisors, "external"),
        None => (group.p_part(p), "forms"),
    };
    let order: u64 = divisors.iter().product();
    let n = n.unwrap_or_else(|| auto_precision(p, order));
    let ctx = AbelianFieldCtx::build(p, d, m, n)?;
    Ok(Resolved { ctx, group, divisors, source })
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub source: &'static str,
    pub narrow_class_number: usize,
    /// elementary divisors of the p-part
    pub p_part: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub i: usize,
    /// Fitt_i = (p^e); e = N is the zero ideal
    pub fitting_exponent: u32,
    pub sampled_exponent: Option<u32>,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<CycIdealRun>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnnihilationEntry {
    #[serde(with = "cycfit::json")]
    pub ell: u64,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<AnnihilationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FormalEntry {
    #[serde(with = "cycfit::json::vec")]
    pub nu: Vec<u64>,
    #[serde(with = "cycfit::json")]
    pub q: u64,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<FormalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema: &'static str,
    pub config: RunConfig,
    #[serde(rename = "N")]
    pub precision: u32,
    pub oracle: OracleSummary,
    pub levels: Vec<LevelReport>,
    pub annihilation: Vec<AnnihilationEntry>,
    pub formal: Vec<FormalEntry>,
    pub outcome: Outcome,
    pub exit_code: i32,
}

fn level(res: &Resolved, cfg: &RunConfig, i: usize, prior: Option<&CycIdealRun>) -> Result<LevelReport> {
    let ctx = &res.ctx;
    let exps = res.exponents();
    let target = fitting_of_p_group(&exps, i, ctx.p, ctx.n)?.chain_exponent().expect("Z/p^N is a chain ring");
    let mut sc = SampleConfig::new(i, cfg.budget, cfg.seed);
    sc.window = cfg.window;
    sc.oracle = Some(exps);
    let (outcome, detail, run) = match sample_continuing(ctx, &sc, prior) {
        Ok(run) => {
            let outcome = if run.status == RunStatus::Complete && run.ideal_exponent == target {
                Outcome::Match
            } else {
                Outcome::Inconclusive
            };
            let detail = (outcome != Outcome::Match).then(|| {
                format!("sampled (p^{}) after {} evaluations, status {:?}", run.ideal_exponent, run.evaluations, run.status)
            });
            (outcome, detail, Some(run))
        }
        Err(e @ Error::Soundness(_)) => (Outcome::Bug, Some(e.to_string()), None),
        Err(e) if exit::is_budget(&e) => (Outcome::Inconclusive, Some(e.to_string()), None),
        Err(e) => return Err(e),
    };
    let sampled_exponent = run.as_ref().map(|r| r.ideal_exponent);
    Ok(LevelReport { i, fitting_exponent: target, sampled_exponent, outcome, detail, run })
}

fn classify(e: &Error) -> Outcome {
    if exit::is_budget(e) {
        Outcome::Inconclusive
    } else {
        Outcome::Bug
    }
}

fn annihilation_suite(res: &Resolved, cfg: &RunConfig) -> Result<Vec<AnnihilationEntry>> {
    if cfg.annihilation == 0 {
        return Ok(Vec::new());
    }
    let cache = PrimeCache::resolve(cfg.cache_dir.as_deref());
    let primes = match kolyvagin_list(&res.ctx, cfg.convention, cfg.annihilation, cache.as_ref()) {
        Ok(p) => p,
        Err(e) if exit::is_budget(&e) => {
            return Ok(vec![AnnihilationEntry { ell: 0, outcome: Outcome::Inconclusive, report: None, error: Some(e.to_string()) }])
        }
        Err(e) => return Err(e),
    };
    Ok(primes
        .par_iter()
        .map(|&ell| match annihilation_check(&res.ctx, ell, &res.group, cfg.convention) {
            Ok(r) => {
                let outcome = if r.verdict == Verdict::Pass { Outcome::Pass } else { Outcome::Bug };
                AnnihilationEntry { ell, outcome, report: Some(r), error: None }
            }
            Err(e) => AnnihilationEntry { ell, outcome: classify(&e), report: None, error: Some(e.to_string()) },
        })
        .collect())
}

/// Every position of q inside the least chains of length 1..=eps+1.
pub fn formal_shapes(ctx: &AbelianFieldCtx, eps: usize) -> Result<Vec<(Vec<u64>, u64)>> {
    let chain = ctx.least_chain(eps + 1, CHAIN_BUDGET)?;
    let mut cases = Vec::new();
    for r in 1..=chain.len() {
        for pos in 0..r {
            let mut nu = chain[..r].to_vec();
            let q = nu.remove(pos);
            cases.push((nu, q));
        }
    }
    Ok(cases)
}

fn formal_suite(res: &Resolved, cfg: &RunConfig) -> Result<Vec<FormalEntry>> {
    let Some(eps) = cfg.formal_eps else { return Ok(Vec::new()) };
    let cases = match formal_shapes(&res.ctx, eps) {
        Ok(c) => c,
        Err(e) if exit::is_budget(&e) => {
            return Ok(vec![FormalEntry { nu: vec![], q: 0, outcome: Outcome::Inconclusive, report: None, error: Some(e.to_string()) }])
        }
        Err(e) => return Err(e),
    };
    let results = formal_check_many(&res.ctx, &cases, eps);
    Ok(cases
        .into_iter()
        .zip(results)
        .map(|((nu, q), r)| match r {
            Ok(rep) => {
                let outcome = if rep.results.iter().all(|x| x.pass) { Outcome::Pass } else { Outcome::Bug };
                FormalEntry { nu, q, outcome, report: Some(rep), error: None }
            }
            Err(e) => FormalEntry { nu, q, outcome: classify(&e), report: None, error: Some(e.to_string()) },
        })
        .collect())
}

/// Runs everything; input errors come back as `Err`, mathematical outcomes
/// as the report's `outcome`.
pub fn cmd_verify(cfg: &RunConfig) -> Result<VerifyReport> {
    let external = cfg.external.as_deref().map(Path::new);
    let d = if external.is_some() { None } else { Some(cfg.d) };
    let res = resolve(cfg.p, d, external, cfg.m, cfg.n)?;
    let mut cfg = cfg.clone();
    cfg.d = res.ctx.d;
    // each level starts from the last completed transcript below it
    let mut levels: Vec<LevelReport> = Vec::new();
    for i in 0..=cfg.i_max {
        let prior = levels.iter().rev().find_map(|l| l.run.as_ref());
        let l = level(&res, &cfg, i, prior)?;
        levels.push(l);
    }
    let annihilation = annihilation_suite(&res, &cfg)?;
    let formal = formal_suite(&res, &cfg)?;
    let all: Vec<Outcome> = levels
        .iter()
        .map(|l| l.outcome)
        .chain(annihilation.iter().map(|a| a.outcome))
        .chain(formal.iter().map(|f| f.outcome))
        .collect();
    let outcome = if all.contains(&Outcome::Bug) {
        Outcome::Bug
    } else if all.contains(&Outcome::Inconclusive) {
        Outcome::Inconclusive
    } else {
        Outcome::Match
    };
    Ok(VerifyReport {
        schema: SCHEMA,
        precision: res.ctx.n,
        oracle: OracleSummary { source: res.source, narrow_class_number: res.group.order(), p_part: res.divisors.clone() },
        config: cfg,
        levels,
        annihilation,
        formal,
        outcome,
        exit_code: outcome.exit_code(),
    })
}

/// One line per level and suite, for stderr.
pub fn render(r: &VerifyReport) -> String {
    let mut out = format!(
        "p = {}, D = {}, N = {}, oracle ({}) p-part {:?}\n",
        r.config.p, r.config.d, r.precision, r.oracle.source, r.oracle.p_part
    );
    for l in &r.levels {
        let sampled = l.sampled_exponent.map_or("-".to_string(), |e| format!("(p^{e})"));
        out += &format!("  i = {}: Fitt = (p^{}), sampled {sampled}: {:?}\n", l.i, l.fitting_exponent, l.outcome);
    }
    let count = |v: &mut dyn Iterator<Item = Outcome>| {
        let all: Vec<Outcome> = v.collect();
        (all.iter().filter(|o| o.is_ok()).count(), all.len())
    };
    let (a_ok, a_n) = count(&mut r.annihilation.iter().map(|a| a.outcome));
    let (f_ok, f_n) = count(&mut r.formal.iter().map(|f| f.outcome));
    out += &format!("  annihilation ({}): {a_ok}/{a_n} pass\n", r.config.convention.name());
    out += &format!("  formal identities: {f_ok}/{f_n} pass\n");
    out += &format!("{:?} (exit {})\n", r.outcome, r.exit_code);
    out
}
