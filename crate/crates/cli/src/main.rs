use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use floorsum_core::Error;

mod commands;

#[derive(Parser, Debug)]
#[command(name = "floorsum", version, about = "Floor-quotient sums, their error terms and the exponential sums behind them")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Seed for every randomized choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory for cached sieve tables.
    #[arg(long, global = true, env = "FLOORSUM_CACHE")]
    pub cache_dir: Option<PathBuf>,
    /// Largest number of summands any single computation may touch.
    #[arg(long, global = true, default_value_t = 1_000_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_terms: u64,
    /// Largest number of table entries held in memory at once.
    #[arg(long, global = true, default_value_t = 1 << 27, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_entries: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Direct,
    Blocked,
    Dual,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Monomial,
    Bilinear,
    Triple,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum LemmaArg {
    Vdc,
    Lwy,
    Rs,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tabulate an arithmetic function on [lo, hi).
    ///
    /// CSV columns: n,value. For lambda the value is log p (0 off prime powers).
    Sieve {
        /// lambda, mu, tau2, tau3, ...
        #[arg(long = "f")]
        f: String,
        #[arg(long)]
        lo: u64,
        #[arg(long)]
        hi: u64,
    },
    /// Evaluate S_f(x) = sum over n <= x of f(floor(x/n)).
    ///
    /// CSV columns: f,x,method,value (dual adds split,s1,s2,tail_terms,straddling_d).
    Floorsum {
        #[arg(long = "f")]
        f: String,
        #[arg(long)]
        x: u64,
        #[arg(long, value_enum, default_value_t = Method::Blocked)]
        method: Method,
        /// Split point for the dual method; defaults to floor(x^(7/15)).
        #[arg(long = "n")]
        split: Option<u64>,
    },
    /// Certified bracket for the constant sum f(n)/(n(n+1)).
    ///
    /// CSV columns: kind,k,terms,lo,hi.
    Constant {
        #[arg(long = "f")]
        f: String,
        /// Number of exactly summed terms.
        #[arg(long = "n", default_value_t = 10_000_000)]
        terms: u64,
    },
    /// Error term E(x) = S_f(x) - C_f x on a doubling grid, with a power-law fit.
    ///
    /// CSV columns: x,S,E,C_lo,C_hi, followed by `# fit` comment lines.
    Errfit {
        #[arg(long = "f")]
        f: String,
        #[arg(long, default_value_t = 10_000)]
        lo: u64,
        #[arg(long, default_value_t = 100_000_000)]
        hi: u64,
        /// Terms used for the constant bracket.
        #[arg(long = "n", default_value_t = 10_000_000)]
        terms: u64,
    },
    /// Check |psi* - psi| <= delta on a grid.
    ///
    /// CSV columns: h,points,max_violation,worst_x,min_delta,max_abs_error,mean_abs_error.
    VaalerCheck {
        #[arg(long = "h", required = true)]
        h: Vec<u32>,
        #[arg(long, default_value_t = 10_000)]
        points: usize,
        /// Rationals p/q with q up to this bound are added to the grid.
        #[arg(long, default_value_t = 12)]
        max_den: u32,
        #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
        lo: f64,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        hi: f64,
    },
    /// Verify the Vaughan split against a direct sum for random unimodular weights.
    ///
    /// CSV columns: sample,D,D1,U,abs_err,rel_err.
    VaughanCheck {
        #[arg(long = "d")]
        d: u64,
        /// Upper end of the range; defaults to 2D.
        #[arg(long = "d1")]
        d1: Option<u64>,
        #[arg(long, default_value_t = 10)]
        samples: u32,
    },
    /// Apply a word in the A and B processes to an exponent pair.
    ///
    /// CSV columns: kappa,lambda.
    Exppair {
        #[arg(long)]
        word: String,
        #[arg(long, default_value = "1/2,1/2")]
        base: String,
    },
    /// Minimise the maximum of affine forms, or evaluate them with --at.
    ///
    /// CSV columns: item,name,value (items are param, value, active).
    Balance {
        #[arg(long = "param")]
        params: Vec<String>,
        #[arg(long = "form", required = true)]
        forms: Vec<String>,
        /// Box for one parameter as name=lo:hi; an empty end is unbounded.
        /// Parameters without a box use [0, 1].
        #[arg(long = "bound")]
        bounds: Vec<String>,
        /// Evaluate at name=value instead of optimising.
        #[arg(long = "at")]
        at: Vec<String>,
    },
    /// Evaluate an exponential sum and compare it with a bound formula.
    ///
    /// CSV columns: id,shape,ranges,measured,bound,ratio,case.
    Expsum {
        #[arg(long, value_enum, default_value_t = ShapeArg::Monomial)]
        shape: ShapeArg,
        /// Lower end of the (H, 2H] range for the triple shape.
        #[arg(long = "h-range", default_value_t = 1)]
        h_range: u64,
        #[arg(long = "m", default_value_t = 1)]
        m: u64,
        #[arg(long = "n", default_value_t = 1000)]
        n: u64,
        #[arg(long)]
        x: u64,
        #[arg(long = "h", default_value_t = 1)]
        h: u64,
        #[arg(long, default_value_t = 0)]
        delta: u8,
        /// unit, mu, lambda or random.
        #[arg(long = "coef", default_value = "unit")]
        coef: String,
        #[arg(long, value_enum, default_value_t = LemmaArg::Vdc)]
        lemma: LemmaArg,
        #[arg(long, default_value = "13/84,55/84")]
        pair: String,
        /// Use the trilinear scenario at D = x^(8/15) instead of the explicit ranges.
        #[arg(long)]
        regime: bool,
    },
    /// Classify a dyadic factorization D_1 <= ... <= D_k of D.
    ///
    /// CSV columns: k,D,factors,case,t,L1,L2.
    Classify {
        #[arg(long = "k")]
        k: usize,
        #[arg(long = "d")]
        d: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        factors: Vec<u64>,
    },
}

fn exit_code(e: &Error) -> u8 {
    if e.is_budget() {
        4
    } else if e.is_domain() {
        3
    } else if matches!(e, Error::Parse(_) | Error::InvalidArgument(_) | Error::MissingParameter(_)) {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = Vec::new();
    match commands::run(&cli, &mut out) {
        Ok(()) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(&out).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
