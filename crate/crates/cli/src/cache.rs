//! On-disk cache of Kolyvagin prime lists, keyed by (p, D, N, convention).
//! Entries carry a SHA-256 digest of their content and every prime is
//! re-checked against the field when loaded.

use std::fs;
use std::path::{Path, PathBuf};

use cycfit::eval_maps::Convention;
use cycfit::field_ctx::AbelianFieldCtx;
use cycfit::Result;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const ENV_DIR: &str = "CYCFIT_CACHE_DIR";
const SEARCH_BUDGET: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Entry {
    p: u64,
    #[serde(rename = "D")]
    d: u64,
    #[serde(rename = "N")]
    n: u32,
    convention: Convention,
    #[serde(with = "cycfit::json::vec")]
    primes: Vec<u64>,
    sha256: String,
}

fn digest(p: u64, d: u64, n: u32, conv: Convention, primes: &[u64]) -> String {
    let list: Vec<String> = primes.iter().map(|l| l.to_string()).collect();
    let text = format!("{p}|{d}|{n}|{}|{}", conv.name(), list.join(","));
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone)]
pub struct PrimeCache {
    dir: PathBuf,
}

impl PrimeCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        PrimeCache { dir: dir.into() }
    }

    /// An explicit directory wins over the environment; no directory, no cache.
    pub fn resolve(explicit: Option<&Path>) -> Option<Self> {
        explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(ENV_DIR).filter(|v| !v.is_empty()).map(PathBuf::from))
            .map(PrimeCache::new)
    }

    pub fn path(&self, ctx: &AbelianFieldCtx, conv: Convention) -> PathBuf {
        let key = format!("p={};D={};N={};convention={}", ctx.p, ctx.d, ctx.n, conv.name());
        let name = hex::encode(&Sha256::digest(key.as_bytes())[..12]);
        self.dir.join(format!("primes-{name}.json"))
    }

    /// The first `count` cached primes, or `None` when the entry is missing,
    /// too short, or fails validation.
    pub fn load(&self, ctx: &AbelianFieldCtx, conv: Convention, count: usize) -> Option<Vec<u64>> {
        let text = fs::read_to_string(self.path(ctx, conv)).ok()?;
        let e: Entry = serde_json::from_str(&text).ok()?;
        let valid = (e.p, e.d, e.n, e.convention) == (ctx.p, ctx.d, ctx.n, conv)
            && e.sha256 == digest(e.p, e.d, e.n, e.convention, &e.primes)
            && e.primes.windows(2).all(|w| w[0] < w[1])
            && e.primes.iter().all(|&l| ctx.in_s_n(l));
        (valid && e.primes.len() >= count).then(|| e.primes[..count].to_vec())
    }

    pub fn store(&self, ctx: &AbelianFieldCtx, conv: Convention, primes: &[u64]) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let e = Entry {
            p: ctx.p,
            d: ctx.d,
            n: ctx.n,
            convention: conv,
            primes: primes.to_vec(),
            sha256: digest(ctx.p, ctx.d, ctx.n, conv, primes),
        };
        let text = serde_json::to_string_pretty(&e).map_err(std::io::Error::other)?;
        // write then rename so a concurrent reader never sees half a file
        let path = self.path(ctx, conv);
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, text)?;
        fs::rename(tmp, path)
    }
}

/// The `count` least primes of S_N, through the cache when one is given.
/// A failed write only costs the next run a recomputation.
pub fn kolyvagin_list(
    ctx: &AbelianFieldCtx,
    conv: Convention,
    count: usize,
    cache: Option<&PrimeCache>,
) -> Result<Vec<u64>> {
    if let Some(hit) = cache.and_then(|c| c.load(ctx, conv, count)) {
        return Ok(hit);
    }
    let primes = ctx
        .kolyvagin_primes(1, SEARCH_BUDGET)
        .take(count)
        .map(|k| k.map(|k| k.ell))
        .collect::<Result<Vec<u64>>>()?;
    if let Some(c) = cache {
        let _ = c.store(ctx, conv, &primes);
    }
    Ok(primes)
}
