//! Subcommands. Each returns its JSON document, a human summary and the
//! exit code; `run` turns input errors into their codes.

use cycfit::arith::{is_prime, valuation};
use cycfit::circ_units::{evaluate_kappa, CircularUnitSymbol, DerivativeClass, UnitKind};
use cycfit::classgroup::{ingest_external, narrow_class_group};
use cycfit::cyc_ideals::{sample_with, SampleConfig};
use cycfit::eval_maps::Convention;
use cycfit::fitting::fitting_of_p_group;
use cycfit::group_ring::chi_project;
use cycfit::kurihara::formal_check_many;
use cycfit::{Error, Result};
use serde::Serialize;
use serde_json::json;

use crate::cache::{kolyvagin_list, PrimeCache};
use crate::config::{
    ClassgroupArgs, Command, FieldArgs, FittingArgs, FormalArgs, IdealArgs, KappaArgs, PrimesArgs, RunConfig, VerifyArgs,
};
use crate::exit;
use crate::verify::{cmd_verify, formal_shapes, render, resolve, Resolved, ORACLE_BUDGET};

pub struct Output {
    pub json: String,
    pub text: String,
    pub code: i32,
}

fn out<T: Serialize>(v: &T, text: String, code: i32) -> Result<Output> {
    let json = serde_json::to_string_pretty(v).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(Output { json, text, code })
}

fn field(f: &FieldArgs) -> Result<Resolved> {
    resolve(f.p, f.d, f.external.as_deref(), f.m, f.n)
}

fn as_json_int(v: u64) -> serde_json::Value {
    if v > cycfit::json::SAFE_MAX {
        json!(v.to_string())
    } else {
        json!(v)
    }
}

fn json_ints(v: &[u64]) -> serde_json::Value {
    v.iter().map(|&x| as_json_int(x)).collect()
}

pub fn verify_config(a: &VerifyArgs) -> RunConfig {
    let f = &a.field;
    RunConfig {
        p: f.p,
        d: f.d.unwrap_or(0),
        external: f.external.as_ref().map(|p| p.display().to_string()),
        m: f.m,
        n: f.n,
        i_max: a.i_max,
        budget: a.budget,
        window: a.window,
        seed: a.seed,
        annihilation: a.annihilation,
        formal_eps: usize::try_from(a.formal_eps).ok(),
        convention: a.convention.into(),
        cache_dir: a.cache_dir.clone(),
    }
}

fn verify(a: &VerifyArgs) -> Result<Output> {
    let r = cmd_verify(&verify_config(a))?;
    out(&r, render(&r), r.exit_code)
}

fn primes(a: &PrimesArgs) -> Result<Output> {
    let res = field(&a.field)?;
    let ctx = &res.ctx;
    let (kind, list) = match a.chain {
        Some(r) => ("chain", ctx.least_chain(r, 1 << 24)?),
        None if a.extra == 1 => {
            let cache = PrimeCache::resolve(a.cache_dir.as_deref());
            ("kolyvagin", kolyvagin_list(ctx, Convention::Standard, a.count, cache.as_ref())?)
        }
        None => (
            "kolyvagin",
            ctx.kolyvagin_primes(a.extra, 1 << 24).take(a.count).map(|k| k.map(|k| k.ell)).collect::<Result<_>>()?,
        ),
    };
    let doc = json!({
        "p": ctx.p, "D": ctx.d, "N": ctx.n, "kind": kind, "extra": as_json_int(a.extra),
        "well_ordered": ctx.is_well_ordered(&list), "primes": json_ints(&list),
    });
    let text = format!("{} {kind} primes for p = {}, D = {}, N = {}: {list:?}\n", list.len(), ctx.p, ctx.d, ctx.n);
    out(&doc, text, exit::OK)
}

fn classgroup(a: &ClassgroupArgs) -> Result<Output> {
    if let Some(path) = &a.field.external {
        let rec = ingest_external(path)?;
        let text = format!("record for {:?} validated, p-part {:?}\n", rec.field, rec.divisors);
        return out(&json!({ "validated": true, "record": rec }), text, exit::OK);
    }
    let d = a.field.d.ok_or_else(|| Error::InvalidInput("D is required".into()))?;
    let g = narrow_class_group(d, ORACLE_BUDGET)?;
    for &l in &a.primes {
        if !is_prime(l) {
            return Err(Error::NotPrime(l));
        }
    }
    let rec = g.to_record(a.field.p, &a.primes)?;
    let doc = json!({ "D": d, "narrow_class_number": g.order(), "p_part": g.p_part(a.field.p), "record": rec });
    let text = format!("h+(Q(sqrt {d})) = {}, {}-part {:?}\n", g.order(), a.field.p, g.p_part(a.field.p));
    out(&doc, text, exit::OK)
}

fn parse_unit(s: &str) -> Result<UnitKind> {
    let bad = || Error::InvalidInput(format!("unit {s:?} is not d<k> or a<k>"));
    let (head, tail) = s.split_at(1.min(s.len()));
    let k: u64 = tail.parse().map_err(|_| bad())?;
    match head {
        "d" | "D" => Ok(UnitKind::D(k)),
        "a" | "A" => Ok(UnitKind::A(k)),
        _ => Err(bad()),
    }
}

fn kappa(a: &KappaArgs) -> Result<Output> {
    let res = field(&a.field)?;
    let ctx = &res.ctx;
    if !ctx.is_well_ordered(&a.primes) {
        return Err(Error::NotWellOrdered(a.primes.clone()));
    }
    let n = a
        .primes
        .iter()
        .try_fold(1u64, |acc, &l| acc.checked_mul(l))
        .ok_or_else(|| Error::BudgetExceeded("n overflows u64".into()))?;
    let unit = match &a.unit {
        Some(s) => parse_unit(s)?,
        None => UnitKind::D(ctx.d),
    };
    let q = match a.q {
        Some(q) => q,
        None => {
            let l = ctx.evaluation_modulus(n);
            (1u64..1 << 24)
                .filter_map(|k| l.checked_mul(k).map(|x| x + 1))
                .find(|&q| is_prime(q) && ctx.splits_completely(q, n))
                .ok_or_else(|| Error::BudgetExhausted(format!("no evaluation prime 1 mod {l}")))?
        }
    };
    let family = CircularUnitSymbol::basic(ctx, unit, 1)?;
    let cls = DerivativeClass::new(ctx, &family, &a.primes)?;
    let conj = evaluate_kappa(ctx, &cls, q)?;
    let chi = chi_project(&conj, &ctx.chi)?;
    let val = chi.coeffs.iter().filter(|&&c| c != 0).map(|&c| valuation(c, ctx.p)).min();
    let doc = json!({
        "p": ctx.p, "D": ctx.d, "m": ctx.m, "N": ctx.n, "n": as_json_int(n), "primes": json_ints(&a.primes),
        "q": as_json_int(q), "unit": unit, "conjugates": conj.coeffs, "chi_value": chi.coeffs, "valuation": val,
    });
    let text = format!("kappa({n}) for {unit:?} at q = {q}: chi-value {:?}\n", chi.coeffs);
    out(&doc, text, exit::OK)
}

fn ideal(a: &IdealArgs) -> Result<Output> {
    let res = field(&a.field)?;
    let mut sc = SampleConfig::new(a.i, a.budget, a.seed);
    sc.window = a.window;
    if !a.blind {
        sc.oracle = Some(res.exponents());
    }
    let run = sample_with(&res.ctx, &sc)?;
    let text = format!(
        "C_{} = (p^{}) from {} samples, {:?}\n",
        a.i,
        run.ideal_exponent,
        run.samples.len(),
        run.status
    );
    out(&run, text, exit::OK)
}

fn fitting(a: &FittingArgs) -> Result<Output> {
    if a.n == 0 {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    if !is_prime(a.p) {
        return Err(Error::NotPrime(a.p));
    }
    let e = fitting_of_p_group(&a.divisors, a.i, a.p, a.n)?.chain_exponent().expect("Z/p^N is a chain ring");
    let doc = json!({ "p": a.p, "N": a.n, "divisors": a.divisors, "i": a.i, "exponent": e });
    let text = format!("Fitt_{} = (p^{e}) in Z/{}^{}\n", a.i, a.p, a.n);
    out(&doc, text, exit::OK)
}

fn formal(a: &FormalArgs) -> Result<Output> {
    let res = field(&a.field)?;
    let cases = formal_shapes(&res.ctx, a.eps)?;
    let reports = formal_check_many(&res.ctx, &cases, a.eps).into_iter().collect::<Result<Vec<_>>>()?;
    let pass = reports.iter().all(|r| r.results.iter().all(|x| x.pass));
    let text = format!("{} shapes up to eps = {}: {}\n", reports.len(), a.eps, if pass { "all pass" } else { "FAIL" });
    out(&json!({ "eps": a.eps, "reports": reports }), text, if pass { exit::OK } else { exit::BUG })
}

pub fn dispatch(cmd: &Command) -> Result<Output> {
    match cmd {
        Command::Verify(a) => verify(a),
        Command::Primes(a) => primes(a),
        Command::Classgroup(a) => classgroup(a),
        Command::Kappa(a) => kappa(a),
        Command::Ideal(a) => ideal(a),
        Command::Fitting(a) => fitting(a),
        Command::Formal(a) => formal(a),
    }
}

/// Prints and returns the exit code.
pub fn run(cmd: &Command) -> i32 {
    match dispatch(cmd) {
        Ok(o) => {
            println!("{}", o.json);
            eprint!("{}", o.text);
            o.code
        }
        Err(e) => {
            let code = exit::code_for(&e);
            println!("{}", json!({ "error": e.to_string(), "exit_code": code }));
            eprintln!("error: {e}");
            code
        }
    }
}
