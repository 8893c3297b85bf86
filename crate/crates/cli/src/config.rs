use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cycfit::eval_maps::Convention;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "cycfit", version, about = "Fitting ideals of class groups against higher cyclotomic ideals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Oracle, Fitting ideals, sampled cyclotomic ideals and the side suites.
    Verify(VerifyArgs),
    /// Kolyvagin primes and well-ordered chains.
    Primes(PrimesArgs),
    /// Narrow class group of K, or validation of an external record.
    Classgroup(ClassgroupArgs),
    /// The derivative class kappa(n) evaluated at a split prime q.
    Kappa(KappaArgs),
    /// A single sampled cyclotomic ideal with its transcript.
    Ideal(IdealArgs),
    /// Fitt_i of a finite p-group over Z/p^N.
    Fitting(FittingArgs),
    /// Symbolic identities of the Kurihara elements.
    Formal(FormalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Standard,
    Inverse,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Standard => Convention::Standard,
            ConventionArg::Inverse => Convention::Inverse,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FieldArgs {
    #[arg(short, long, default_value_t = 3)]
    pub p: u64,
    /// positive fundamental discriminant of K
    #[arg(short = 'D', long = "disc", required_unless_present = "external", conflicts_with = "external")]
    pub d: Option<u64>,
    /// external class-group record (JSON) in place of D
    #[arg(long)]
    pub external: Option<PathBuf>,
    #[arg(short, long, default_value_t = 0)]
    pub m: u32,
    /// precision N; default is the least N with p^N > |A|, plus one
    #[arg(short = 'N', long = "precision")]
    pub n: Option<u32>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, default_value_t = 2)]
    pub i_max: usize,
    /// (n, q) evaluations per level
    #[arg(long, default_value_t = 500)]
    pub budget: usize,
    #[arg(long, default_value_t = cycfit::cyc_ideals::DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Kolyvagin primes in the annihilation suite
    #[arg(long, default_value_t = 4)]
    pub annihilation: usize,
    /// largest eps(nu) in the formal suite; negative skips it. At N >= 3 a
    /// well-ordered chain of four primes no longer fits in 64 bits.
    #[arg(long, default_value_t = 2, allow_negative_numbers = true)]
    pub formal_eps: i64,
    #[arg(long, value_enum, default_value_t = ConventionArg::Standard)]
    pub convention: ConventionArg,
    /// prime-list cache; CYCFIT_CACHE_DIR is used when absent
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PrimesArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    /// multiply the congruence modulus by this
    #[arg(long, default_value_t = 1)]
    pub extra: u64,
    /// print the least well-ordered chain of this length instead
    #[arg(long)]
    pub chain: Option<usize>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ClassgroupArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// split primes whose classes go into the record
    #[arg(long, value_delimiter = ',')]
    pub primes: Vec<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct KappaArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// the primes of n, comma separated, in well-ordered order
    #[arg(long, value_delimiter = ',')]
    pub primes: Vec<u64>,
    /// evaluation prime; default is the least admissible one
    #[arg(short, long)]
    pub q: Option<u64>,
    /// basic unit: d<k> for eta^k or a<k> for eta^{1,k}; default d<D>
    #[arg(long)]
    pub unit: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct IdealArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(short, long, default_value_t = 0)]
    pub i: usize,
    #[arg(long, default_value_t = 500)]
    pub budget: usize,
    #[arg(long, default_value_t = cycfit::cyc_ideals::DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// sample without the oracle: no containment check, no early stop
    #[arg(long)]
    pub blind: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FittingArgs {
    #[arg(short, long, default_value_t = 3)]
    pub p: u64,
    #[arg(short = 'N', long = "precision")]
    pub n: u32,
    /// exponents of the elementary divisors p^{e_1}, ..., p^{e_r}
    #[arg(long, value_delimiter = ',')]
    pub divisors: Vec<u32>,
    #[arg(short, long, default_value_t = 0)]
    pub i: usize,
}

#[derive(Debug, Clone, Args)]
pub struct FormalArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// largest eps(nu); every position of q in the least chain is checked
    #[arg(long, default_value_t = 3)]
    pub eps: usize,
}

/// Resolved run parameters, echoed in every verify report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunConfig {
    pub p: u64,
    #[serde(rename = "D")]
    pub d: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub external: Option<String>,
    pub m: u32,
    /// requested precision; `None` means automatic
    #[serde(rename = "N")]
    pub n: Option<u32>,
    pub i_max: usize,
    pub budget: usize,
    pub window: usize,
    #[serde(with = "cycfit::json")]
    pub seed: u64,
    pub annihilation: usize,
    pub formal_eps: Option<usize>,
    pub convention: Convention,
    #[serde(skip)]
    pub cache_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults of `verify` for a discriminant.
    pub fn new(p: u64, d: u64) -> Self {
        RunConfig {
            p,
            d,
            external: None,
            m: 0,
            n: None,
            i_max: 2,
            budget: 500,
            window: cycfit::cyc_ideals::DEFAULT_WINDOW,
            seed: 1,
            annihilation: 4,
            formal_eps: Some(2),
            convention: Convention::Standard,
            cache_dir: None,
        }
    }
}
