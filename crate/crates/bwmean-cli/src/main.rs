//! `bwm`: tables and reports for the distribution of the Bernoulli-weighted
//! mean. Flags override config-file entries; every output embeds its fully
//! resolved configuration so any artifact can be reproduced from its own
//! header.

mod commands;
mod config;
mod fail;
mod report;

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use fail::CliResult;

const EXIT_HELP: &str = "\
Exit codes:
  0  success
  2  configuration error (bad flag or config value, unknown or missing key)
  3  I/O error (unreadable config file, unwritable output path)
  4  domain error (a library precondition rejected the computation)
  5  invariant failure (the computation ran but a promised check did not hold)

Config files are flat `key = value` text with one `[section]` per subcommand;
flags override file entries. The BWM_OUT_DIR environment variable prefixes
relative --out paths.";

#[derive(Parser)]
#[command(
    name = "bwm",
    version,
    about = "Bernoulli-weighted-mean distribution toolkit",
    after_help = EXIT_HELP,
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct CommonArgs {
    /// Config file; the [<subcommand>] section supplies defaults for flags
    /// not given on the command line
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output file (default: stdout); relative paths are prefixed by
    /// $BWM_OUT_DIR when set
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Output format: csv or json
    #[arg(long, value_name = "FMT")]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate the closed-form expansion CDF on a grid (CSV: x,cdf)
    Expand {
        #[command(flatten)]
        common: CommonArgs,
        /// Distribution spec, e.g. "family=exponential rate=1"
        #[arg(long)]
        dist: Option<String>,
        /// Number of Bernoulli weights
        #[arg(long)]
        n: Option<u64>,
        /// Weight success probability in (0, 1]
        #[arg(long)]
        p: Option<f64>,
        /// Expansion order, 3 or 4
        #[arg(long)]
        q: Option<u32>,
        /// Evaluation grid lo:hi:step, or "default"
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
    },

    /// Tabulate the mixture CDF, exact-oracle and/or per-k-expansion modes
    /// (CSV: x,oracle,edgeworth)
    Mixture {
        #[command(flatten)]
        common: CommonArgs,
        /// Distribution spec, e.g. "family=exponential rate=1"
        #[arg(long)]
        dist: Option<String>,
        /// Number of Bernoulli weights
        #[arg(long)]
        n: Option<u64>,
        /// Weight success probability in (0, 1]
        #[arg(long)]
        p: Option<f64>,
        /// Expansion order, 3 or 4
        #[arg(long)]
        q: Option<u32>,
        /// Per-k terms: oracle, edgeworth, or both
        #[arg(long)]
        mode: Option<String>,
        /// Evaluation grid lo:hi:step, or "default"
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
    },

    /// Sup-error sweep over sample sizes with a fitted convergence slope
    /// (CSV: n,p,q,family,supError,scaledError,fittedSlope)
    Convergence {
        #[command(flatten)]
        common: CommonArgs,
        /// Distribution spec, e.g. "family=exponential rate=1"
        #[arg(long)]
        dist: Option<String>,
        /// Weight success probability in (0, 1]
        #[arg(long)]
        p: Option<f64>,
        /// Expansion order, 3 or 4
        #[arg(long)]
        q: Option<u32>,
        /// Comma-separated, strictly increasing sample sizes
        #[arg(long)]
        sizes: Option<String>,
        /// Reference mixture: oracle or edgeworth
        #[arg(long)]
        mode: Option<String>,
        /// Evaluation grid lo:hi:step, or "default"
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
    },

    /// Inverse-moment values, expansion coefficients, and remainder orders
    /// (CSV: n,x,f,truncation,residual,scaledResidual)
    InverseMoment {
        #[command(flatten)]
        common: CommonArgs,
        /// Moment order alpha > 0
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        /// Coefficients kept in the truncation (leading 1 included); the
        /// remainder then falls off one inverse power faster per unit
        #[arg(long)]
        k: Option<u64>,
        /// Weight success probability in (0, 1]
        #[arg(long)]
        p: Option<f64>,
        /// Comma-separated sample sizes
        #[arg(long)]
        sizes: Option<String>,
    },

    /// Classify a support as Lattice / SemiLattice / NonLattice and scan the
    /// characteristic-function modulus along t* (json only)
    LatticeCheck {
        #[command(flatten)]
        common: CommonArgs,
        /// Built-in case: bernoulli, irrational, hypercube, linear-image, gated
        #[arg(long)]
        preset: Option<String>,
        /// Comma-separated 1-D atoms; integers and a/b are exact, e and pi
        /// symbolic, anything else floating-point
        #[arg(long, allow_hyphen_values = true)]
        atoms: Option<String>,
        /// Comma-separated probabilities matching --atoms (default uniform)
        #[arg(long)]
        probs: Option<String>,
        /// Scan window upper end
        #[arg(long)]
        rmax: Option<f64>,
        /// Scan step
        #[arg(long)]
        step: Option<f64>,
    },

    /// Monte-Carlo empirical CDF vs the exact mixture with a DKW band
    /// (CSV: x,empirical,exact,absDeviation)
    Mc {
        #[command(flatten)]
        common: CommonArgs,
        /// Distribution spec, e.g. "family=exponential rate=1"
        #[arg(long)]
        dist: Option<String>,
        /// Number of Bernoulli weights
        #[arg(long)]
        n: Option<u64>,
        /// Weight success probability in (0, 1]
        #[arg(long)]
        p: Option<f64>,
        /// Expansion order, 3 or 4
        #[arg(long)]
        q: Option<u32>,
        /// Replications
        #[arg(long)]
        reps: Option<u64>,
        /// RNG seed
        #[arg(long)]
        seed: Option<u64>,
        /// Parallel chunk count (output is independent of it)
        #[arg(long)]
        streams: Option<u64>,
        /// DKW band confidence in (0, 1)
        #[arg(long)]
        confidence: Option<f64>,
        /// Evaluation grid lo:hi:step, or "default"
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
    },

    /// Weighted-sum identity and tail-bound grids
    /// (CSV: check,n,p,param,lhs,rhs,margin)
    Identities {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated weight counts
        #[arg(long)]
        ns: Option<String>,
        /// Comma-separated success probabilities
        #[arg(long)]
        ps: Option<String>,
        /// Comma-separated moment orders for the sum identity
        #[arg(long, allow_hyphen_values = true)]
        alphas: Option<String>,
    },
}

/// Config-file section merged under the command-line flags: a flag that was
/// given wins over the file entry of the same key.
fn merged(
    common: &CommonArgs,
    section: &str,
    overrides: Vec<(&str, Option<String>)>,
) -> CliResult<BTreeMap<String, String>> {
    let mut map = match &common.config {
        Some(path) => config::read_section(path, section)?,
        None => BTreeMap::new(),
    };
    if let Some(fmt) = &common.format {
        map.insert("format".into(), fmt.clone());
    }
    for (key, value) in overrides {
        if let Some(value) = value {
            map.insert(key.into(), value);
        }
    }
    Ok(map)
}

fn num<T: ToString>(v: Option<T>) -> Option<String> {
    v.map(|x| x.to_string())
}

fn dispatch(cmd: Cmd) -> CliResult<()> {
    match cmd {
        Cmd::Expand { common, dist, n, p, q, grid } => {
            let map = merged(
                &common,
                "expand",
                vec![
                    ("dist", dist),
                    ("n", num(n)),
                    ("p", num(p)),
                    ("q", num(q)),
                    ("grid", grid),
                ],
            )?;
            commands::run_expand(map, common.out.as_deref())
        }
        Cmd::Mixture { common, dist, n, p, q, mode, grid } => {
            let map = merged(
                &common,
                "mixture",
                vec![
                    ("dist", dist),
                    ("n", num(n)),
                    ("p", num(p)),
                    ("q", num(q)),
                    ("mode", mode),
                    ("grid", grid),
                ],
            )?;
            commands::run_mixture(map, common.out.as_deref())
        }
        Cmd::Convergence { common, dist, p, q, sizes, mode, grid } => {
            let map = merged(
                &common,
                "convergence",
                vec![
                    ("dist", dist),
                    ("p", num(p)),
                    ("q", num(q)),
                    ("sizes", sizes),
                    ("mode", mode),
                    ("grid", grid),
                ],
            )?;
            commands::run_convergence(map, common.out.as_deref())
        }
        Cmd::InverseMoment { common, alpha, k, p, sizes } => {
            let map = merged(
                &common,
                "inverse-moment",
                vec![
                    ("alpha", num(alpha)),
                    ("k", num(k)),
                    ("p", num(p)),
                    ("sizes", sizes),
                ],
            )?;
            commands::run_inverse_moment(map, common.out.as_deref())
        }
        Cmd::LatticeCheck { common, preset, atoms, probs, rmax, step } => {
            let map = merged(
                &common,
                "lattice-check",
                vec![
                    ("preset", preset),
                    ("atoms", atoms),
                    ("probs", probs),
                    ("rmax", num(rmax)),
                    ("step", num(step)),
                ],
            )?;
            commands::run_lattice_check(map, common.out.as_deref())
        }
        Cmd::Mc { common, dist, n, p, q, reps, seed, streams, confidence, grid } => {
            let map = merged(
                &common,
                "mc",
                vec![
                    ("dist", dist),
                    ("n", num(n)),
                    ("p", num(p)),
                    ("q", num(q)),
                    ("reps", num(reps)),
                    ("seed", num(seed)),
                    ("streams", num(streams)),
                    ("confidence", num(confidence)),
                    ("grid", grid),
                ],
            )?;
            commands::run_mc(map, common.out.as_deref())
        }
        Cmd::Identities { common, ns, ps, alphas } => {
            let map = merged(
                &common,
                "identities",
                vec![("ns", ns), ("ps", ps), ("alphas", alphas)],
            )?;
            commands::run_identities(map, common.out.as_deref())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(failure) = dispatch(cli.cmd) {
        eprintln!("bwm: {failure}");
        std::process::exit(failure.exit_code());
    }
}
