use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gausscouple::cli::{self, ConstantFlags, CouplingFlags, Outcome};
use gausscouple::profiles::Profile;

#[derive(Parser)]
#[command(name = "gausscouple", version, about = "Gaussian max-entropy couplings and entropy inequality constants")]
struct Args {
    /// Worker threads for grid evaluations (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scaling and dimension conditions for a datum.
    Feasibility {
        datum: PathBuf,
        /// Random subspace tuples tried on top of the enumerated ones.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Maximum-entropy Gaussian coupling of the given marginals.
    MaxCoupling {
        datum: PathBuf,
        marginals: PathBuf,
        #[arg(long, default_value_t = 1e-9, value_parser = positive)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iters: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Also solve the dual and report the duality gap.
        #[arg(long)]
        certify: bool,
    },
    /// Best constant at fixed exponents or over the exponent simplex.
    Constant {
        datum: PathBuf,
        /// Comma-separated exponents; defaults to the datum's `c`.
        #[arg(long, value_parser = exponent_list, conflicts_with = "best_c")]
        c: Option<Exponents>,
        #[arg(long)]
        best_c: bool,
        /// Use the correlation bounds in the datum file (default: none).
        #[arg(long)]
        nu_from_datum: bool,
        #[arg(long, default_value_t = 1e-9, value_parser = positive)]
        tol: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Dependent entropy power bound.
    Depepi {
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = finite, allow_hyphen_values = true)]
        h1: f64,
        #[arg(long, value_parser = finite, allow_hyphen_values = true)]
        h2: f64,
        #[arg(long, value_parser = budget)]
        zeta: f64,
    },
    /// Value of the information-budget game and a deviation test.
    Saddle {
        #[arg(long)]
        n: usize,
        #[arg(long = "P", value_parser = positive)]
        signal: f64,
        #[arg(long = "N", value_parser = positive)]
        noise: f64,
        #[arg(long, value_parser = budget)]
        zeta: f64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, value_parser = profile)]
        profile: Profile,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn finite(s: &str) -> Result<f64, String> {
    let x: f64 = s.trim().parse().map_err(|_| format!("{s:?} is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{s:?} must be finite"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let x = finite(s)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("{s:?} must be positive"))
    }
}

/// Non-negative number or `inf`.
fn budget(s: &str) -> Result<f64, String> {
    let x: f64 = s.trim().parse().map_err(|_| format!("{s:?} is not a number or inf"))?;
    if x >= 0.0 {
        Ok(x)
    } else {
        Err(format!("{s:?} must be >= 0"))
    }
}

#[derive(Clone)]
struct Exponents(Vec<f64>);

fn exponent_list(s: &str) -> Result<Exponents, String> {
    s.split(',').map(finite).collect::<Result<_, _>>().map(Exponents)
}

fn profile(s: &str) -> Result<Profile, String> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = Profile::ALL.iter().map(|p| p.as_str()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

fn read(path: &Path) -> Result<String, Outcome> {
    std::fs::read_to_string(path).map_err(|e| Outcome::usage(format!("{}: {e}", path.display())))
}

fn seed(flag: Option<u64>) -> Result<u64, Outcome> {
    cli::resolve_seed(flag).map_err(Outcome::usage)
}

fn dispatch(command: Command) -> Result<Outcome, Outcome> {
    Ok(match command {
        Command::Feasibility { datum, trials, seed: s } => cli::feasibility(&read(&datum)?, trials, seed(s)?),
        Command::MaxCoupling {
            datum,
            marginals,
            tol,
            max_iters,
            seed: s,
            certify,
        } => cli::max_coupling_cmd(
            &read(&datum)?,
            &read(&marginals)?,
            CouplingFlags {
                tol,
                max_iters,
                seed: seed(s)?,
                certify,
            },
        ),
        Command::Constant {
            datum,
            c,
            best_c,
            nu_from_datum,
            tol,
            seed: s,
        } => cli::constant(
            &read(&datum)?,
            &ConstantFlags {
                c: c.map(|e| e.0),
                best_c,
                nu_from_datum,
                tol,
                seed: seed(s)?,
            },
        ),
        Command::Depepi { n, h1, h2, zeta } => cli::depepi(n, h1, h2, zeta),
        Command::Saddle {
            n,
            signal,
            noise,
            zeta,
            trials,
            seed: s,
        } => cli::saddle(n, signal, noise, zeta, trials, seed(s)?),
        Command::Verify { profile, seed: s } => cli::verify(profile, seed(s)?),
    })
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be >= 1");
            return ExitCode::from(cli::EXIT_USAGE as u8);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("warning: {e}");
        }
    }
    let outcome = dispatch(args.command).unwrap_or_else(|o| o);
    if let Some(msg) = &outcome.message {
        eprintln!("{msg}");
    }
    if let Some(report) = &outcome.report {
        print!("{}", report.render());
    }
    ExitCode::from(outcome.code as u8)
}
