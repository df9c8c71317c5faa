//! Subcommand logic behind the `gausscouple` binary. Each command turns its
//! inputs into a [`RunReport`] and an exit code.

use serde_json::{json, Value};

use crate::coupling::max_coupling;
use crate::datum::{
    check_dimension_condition, check_marginals, check_scaling, parse_datum_json, parse_marginals_json,
    ConstraintFunction, Datum, Verdict,
};
use crate::dual::{duality_gap, solve_dual};
use crate::error::Error;
use crate::frbl::{best_constant, compute_dg, ConstantReport, Status};
use crate::inequalities::{dep_epi_bound, game_value_gaussian, saddle_deviation_test, EntropyPower, GameSpec};
use crate::options::SolverOptions;
use crate::profiles::{self, CheckVerdict, Profile};
use crate::report::{self, num, nums, opt_num, RunReport};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NON_SURJECTIVE: i32 = 3;
pub const EXIT_NO_CONVERGENCE: i32 = 4;

pub const SEED_ENV: &str = "GAUSSCOUPLE_SEED";

/// What a command prints and how the process exits.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Option<RunReport>,
    pub code: i32,
    /// Printed to stderr.
    pub message: Option<String>,
}

impl Outcome {
    fn report(report: RunReport, code: i32) -> Self {
        Self {
            report: Some(report),
            code,
            message: None,
        }
    }

    fn error(e: &Error) -> Self {
        Self {
            report: None,
            code: exit_code(e),
            message: Some(format!("error: {e}")),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            report: None,
            code: EXIT_USAGE,
            message: Some(format!("error: {}", message.into())),
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonSurjectiveMap { .. } => EXIT_NON_SURJECTIVE,
        Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
        Error::InvalidInput(_) | Error::DimensionMismatch(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

/// `--seed`, else `GAUSSCOUPLE_SEED`, else 0.
pub fn resolve_seed(flag: Option<u64>) -> std::result::Result<u64, String> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
        Err(_) => Ok(0),
    }
}

fn parse_value(what: &str, text: &str) -> std::result::Result<Value, Outcome> {
    serde_json::from_str(text).map_err(|e| Outcome::usage(format!("{what}: {e}")))
}

fn load_datum(text: &str) -> std::result::Result<(Value, Datum, ConstraintFunction), Outcome> {
    let raw = parse_value("datum", text)?;
    let (datum, nu) = parse_datum_json(text).map_err(|e| Outcome::error(&e))?;
    Ok((raw, datum, nu))
}

fn non_surjective(datum: &Datum) -> Option<Outcome> {
    datum.check_surjective().err().map(|e| Outcome::error(&e))
}

pub fn feasibility(datum_text: &str, trials: usize, seed: u64) -> Outcome {
    let (raw, datum, _) = match load_datum(datum_text) {
        Ok(x) => x,
        Err(o) => return o,
    };
    if let Some(o) = non_surjective(&datum) {
        return o;
    }
    let input = json!({"datum": raw, "trials": trials, "seed": seed});
    let scaling = check_scaling(&datum);
    let dim = match check_dimension_condition(&datum, trials, seed) {
        Ok(d) => d,
        Err(e) => return Outcome::error(&e),
    };
    let pass = scaling && dim.verdict == Verdict::Pass;
    let check = report::dimension_check(&dim);
    let result = json!({
        "scaling": scaling,
        "dimension": dim.verdict,
        "witness": check["witness"],
        "witness_kind": check["witness_kind"],
        "violation": check["violation"],
    });
    let diagnostics = json!({
        "coordinate_tuples": dim.coordinate_tuples,
        "structured_tuples": dim.structured_tuples,
        "random_tuples": dim.random_tuples,
        "weighted_domain_dim": num(datum.weighted_domain_dim(datum.c())),
        "weighted_codomain_dim": num(datum.weighted_codomain_dim()),
    });
    let report = RunReport::new("feasibility", &input, result, diagnostics);
    Outcome::report(report, if pass { EXIT_PASS } else { EXIT_FAIL })
}

#[derive(Debug, Clone, Copy)]
pub struct CouplingFlags {
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub certify: bool,
}

pub fn max_coupling_cmd(datum_text: &str, marginals_text: &str, flags: CouplingFlags) -> Outcome {
    let (raw, datum, nu) = match load_datum(datum_text) {
        Ok(x) => x,
        Err(o) => return o,
    };
    let raw_m = match parse_value("marginals", marginals_text) {
        Ok(v) => v,
        Err(o) => return o,
    };
    let marginals = match parse_marginals_json(marginals_text) {
        Ok(m) => m,
        Err(e) => return Outcome::error(&e),
    };
    if let Err(e) = check_marginals(datum.decomposition(), &marginals) {
        return Outcome::error(&e);
    }
    if let Some(o) = non_surjective(&datum) {
        return o;
    }
    if flags.certify && !nu.is_unconstrained() {
        return Outcome::usage("--certify applies to unconstrained couplings only");
    }
    let input = json!({
        "datum": raw,
        "marginals": raw_m,
        "tol": num(flags.tol),
        "max_iters": flags.max_iters,
        "seed": flags.seed,
        "certify": flags.certify,
    });
    let opts = SolverOptions::default()
        .with_tol(flags.tol)
        .with_max_iters(flags.max_iters)
        .with_seed(flags.seed);
    let sol = match max_coupling(&datum, &marginals, &nu, &opts) {
        Ok(s) => s,
        Err(e) => return Outcome::error(&e),
    };
    let multipliers: Vec<Value> = sol
        .multipliers
        .iter()
        .map(|(s, l)| json!({"subset": report::subset(s), "lambda": num(*l)}))
        .collect();
    let mut result = json!({
        "value": num(sol.value),
        "optimizer": report::sym(sol.optimizer.matrix()),
        "multipliers": multipliers,
        "active_constraints": sol.active_constraints.iter().map(report::subset).collect::<Vec<_>>(),
        "boundary": sol.boundary,
    });
    let mut diagnostics = json!({
        "iterations": sol.iterations,
        "converged": sol.converged,
        "stages": sol.history.len(),
    });
    let mut code = if sol.converged { EXIT_PASS } else { EXIT_NO_CONVERGENCE };
    if flags.certify {
        match solve_dual(&datum, &marginals, &opts) {
            Ok(cert) => {
                let gap = duality_gap(&datum, &sol, &cert);
                result["dual_value"] = num(cert.value);
                result["gap"] = num(gap);
                diagnostics["dual_iterations"] = json!(cert.iterations);
                diagnostics["dual_converged"] = json!(cert.converged);
                if !cert.converged {
                    code = EXIT_NO_CONVERGENCE;
                } else if code == EXIT_PASS && gap.abs() > opts.gap_tol {
                    code = EXIT_FAIL;
                }
            }
            Err(e) => return Outcome::error(&e),
        }
    }
    Outcome::report(RunReport::new("max-coupling", &input, result, diagnostics), code)
}

#[derive(Debug, Clone)]
pub struct ConstantFlags {
    pub c: Option<Vec<f64>>,
    pub best_c: bool,
    pub nu_from_datum: bool,
    pub tol: f64,
    pub seed: u64,
}

fn constant_payload(r: &ConstantReport, c: Option<&[f64]>) -> (Value, Value) {
    let mut result = json!({
        "status": r.status.as_str(),
        "value": num(r.value),
        "inner_value": num(r.inner_value),
        "witnesses": r.witnesses.iter().map(report::pd).collect::<Vec<_>>(),
    });
    if let Some(c) = c {
        result["c"] = nums(c);
    }
    if r.status == Status::Infinite {
        if let Some(check) = &r.dimension_check {
            result["dimension_check"] = report::dimension_check(check);
        }
    }
    let diagnostics = json!({
        "iterations": r.iterations,
        "stationarity": num(r.stationarity),
        "distance": num(r.distance),
        "certificate_gap": num(r.certificate_gap),
    });
    (result, diagnostics)
}

pub fn constant(datum_text: &str, flags: &ConstantFlags) -> Outcome {
    let (raw, datum, file_nu) = match load_datum(datum_text) {
        Ok(x) => x,
        Err(o) => return o,
    };
    if let Some(o) = non_surjective(&datum) {
        return o;
    }
    let nu = if flags.nu_from_datum {
        file_nu
    } else {
        ConstraintFunction::unconstrained()
    };
    if flags.best_c && !nu.is_unconstrained() {
        return Outcome::usage("--best-c applies to unconstrained couplings only");
    }
    if flags.best_c && flags.c.is_some() {
        return Outcome::usage("--c and --best-c are exclusive");
    }
    let opts = SolverOptions::default().with_tol(flags.tol).with_seed(flags.seed);
    let input = json!({
        "datum": raw,
        "c": flags.c.as_deref().map(nums),
        "best_c": flags.best_c,
        "nu_from_datum": flags.nu_from_datum,
        "tol": num(flags.tol),
        "seed": flags.seed,
    });
    if flags.best_c {
        let r = match best_constant(&datum, &opts) {
            Ok(r) => r,
            Err(e) => return Outcome::error(&e),
        };
        let c_norm = r.c_star.as_ref().map(|p| p.c().to_vec());
        let (mut result, diagnostics) = constant_payload(&r, c_norm.as_deref());
        // the search runs with d scaled to sum_j d_j dim E^j = 1
        let s = r.scale;
        result["value"] = num(s * r.value);
        result["normalized_value"] = num(r.value);
        result["scale"] = num(s);
        if let Some(c) = &c_norm {
            result["c"] = nums(&c.iter().map(|x| s * x).collect::<Vec<_>>());
            result["normalized_c"] = nums(c);
        }
        result["minimax"] = json!({
            "lhs": num(r.inner_value),
            "rhs": opt_num(r.minimax_rhs),
            "residual": num(r.certificate_gap),
            "c_from_rhs": r.c_from_rhs.as_deref().map(nums),
        });
        return Outcome::report(RunReport::new("constant", &input, result, diagnostics), EXIT_PASS);
    }
    let c = flags.c.clone().unwrap_or_else(|| datum.c().to_vec());
    if c.len() != datum.k() {
        return Outcome::usage(format!("--c has {} entries, datum has k = {}", c.len(), datum.k()));
    }
    let r = match compute_dg(&datum, &c, &nu, &opts) {
        Ok(r) => r,
        Err(e) => return Outcome::error(&e),
    };
    let (result, diagnostics) = constant_payload(&r, Some(&c));
    Outcome::report(RunReport::new("constant", &input, result, diagnostics), EXIT_PASS)
}

pub fn depepi(n: usize, h1: f64, h2: f64, zeta: f64) -> Outcome {
    let input = json!({"n": n, "h1": num(h1), "h2": num(h2), "zeta": num(zeta)});
    let run = || -> crate::Result<Value> {
        let p1 = EntropyPower::from_entropy(n, h1)?;
        let p2 = EntropyPower::from_entropy(n, h2)?;
        let bound = dep_epi_bound(&p1, &p2, zeta)?;
        Ok(json!({
            "n1": num(p1.power),
            "n2": num(p2.power),
            "bound_power": num(bound),
            "bound_entropy": num(0.5 * n as f64 * bound.ln()),
        }))
    };
    match run() {
        Ok(result) => Outcome::report(RunReport::new("depepi", &input, result, json!({})), EXIT_PASS),
        Err(e) => Outcome::error(&e),
    }
}

pub fn saddle(n: usize, signal: f64, noise: f64, zeta: f64, trials: usize, seed: u64) -> Outcome {
    let input = json!({
        "n": n,
        "P": num(signal),
        "N": num(noise),
        "zeta": num(zeta),
        "trials": trials,
        "seed": seed,
    });
    let spec = match GameSpec::new(n, signal, noise, zeta) {
        Ok(s) => s,
        Err(e) => return Outcome::error(&e),
    };
    let value = game_value_gaussian(&spec);
    if zeta.is_infinite() || trials == 0 {
        let result = json!({"value": num(value), "deviation_test": Value::Null});
        return Outcome::report(RunReport::new("saddle", &input, result, json!({})), EXIT_PASS);
    }
    let r = match saddle_deviation_test(&spec, trials, seed, &SolverOptions::default()) {
        Ok(r) => r,
        Err(e) => return Outcome::error(&e),
    };
    let result = json!({
        "value": num(value),
        "deviation_test": {
            "isotropic_payoff": num(r.isotropic_payoff),
            "worst_signal_excess": num(r.worst_signal_excess),
            "worst_noise_deficit": num(r.worst_noise_deficit),
            "trials": r.trials,
            "passed": r.passed,
        },
    });
    let code = if r.passed { EXIT_PASS } else { EXIT_FAIL };
    Outcome::report(RunReport::new("saddle", &input, result, json!({})), code)
}

pub fn verify(profile: Profile, seed: u64) -> Outcome {
    let input = json!({"profile": profile.as_str(), "seed": seed});
    let rows = match profiles::run(profile, seed, &SolverOptions::default()) {
        Ok(r) => r,
        Err(e) => return Outcome::error(&e),
    };
    let count = |v: CheckVerdict| rows.iter().filter(|r| r.verdict == v).count();
    let failed = count(CheckVerdict::Fail);
    let result = json!({
        "profile": profile.as_str(),
        "checks": rows.iter().map(|r| r.to_value()).collect::<Vec<_>>(),
        "passed": count(CheckVerdict::Pass),
        "failed": failed,
        "inconclusive": count(CheckVerdict::Inconclusive),
    });
    let code = if failed == 0 { EXIT_PASS } else { EXIT_FAIL };
    Outcome::report(RunReport::new("verify", &input, result, json!({})), code)
}
