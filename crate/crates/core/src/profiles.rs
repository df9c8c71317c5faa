//! Named verification suites run by `gausscouple verify`.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::datum::{scalar_sum_datum, ConstraintFunction};
use crate::error::{Error, Result};
use crate::frbl::{binary_entropy, compute_dg};
use crate::inequalities::{
    brunn_minkowski_check, dep_epi_bound, max_coupled_sum_entropy, saddle_deviation_test, EntropyPower, GameSpec,
};
use crate::options::SolverOptions;
use crate::oracles::{comparison_spot_check, Density1D, SpotVerdict};
use crate::report::num;
use crate::sample::random_pd;

const EPI_TOL: f64 = 1e-5;
const EPI_FREE_TOL: f64 = 1e-4;
const DEPEPI_TOL: f64 = 1e-6;
const BM_TOL: f64 = 1e-6;
pub const ZETA_GRID: [f64; 7] = [0.0, 0.05, 0.2, 0.5, 1.0, 3.0, f64::INFINITY];
pub const COMPARISON_ZETAS: [f64; 5] = [0.0, 0.1, 0.5, 1.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Epi,
    Bm,
    DepepiGrid,
    SaddleGrid,
    ComparisonNongaussian,
}

impl Profile {
    pub const ALL: [Profile; 5] = [
        Profile::Epi,
        Profile::Bm,
        Profile::DepepiGrid,
        Profile::SaddleGrid,
        Profile::ComparisonNongaussian,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Epi => "epi",
            Profile::Bm => "bm",
            Profile::DepepiGrid => "depepi-grid",
            Profile::SaddleGrid => "saddle-grid",
            Profile::ComparisonNongaussian => "comparison-nongaussian",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Profile::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown profile {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CheckVerdict {
    Pass,
    Fail,
    Inconclusive,
}

/// One row of a verification table.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub verdict: CheckVerdict,
    pub fields: Value,
}

impl Check {
    fn new(name: String, passed: bool, fields: Value) -> Self {
        Self {
            name,
            verdict: if passed { CheckVerdict::Pass } else { CheckVerdict::Fail },
            fields,
        }
    }

    pub fn to_value(&self) -> Value {
        json!({"name": self.name, "verdict": self.verdict, "values": self.fields})
    }
}

pub fn run(profile: Profile, seed: u64, opts: &SolverOptions) -> Result<Vec<Check>> {
    match profile {
        Profile::Epi => epi(opts),
        Profile::Bm => bm(),
        Profile::DepepiGrid => depepi_grid(seed, opts),
        Profile::SaddleGrid => saddle_grid(seed, opts),
        Profile::ComparisonNongaussian => comparison_nongaussian(),
    }
}

fn epi(opts: &SolverOptions) -> Result<Vec<Check>> {
    let mut rows = Vec::new();
    for i in 1..=9 {
        let lambda = i as f64 / 10.0;
        let datum = scalar_sum_datum([lambda, 1.0 - lambda]);
        let h2 = binary_entropy(lambda);
        let indep = compute_dg(&datum, datum.c(), &ConstraintFunction::independent(2), opts)?;
        let free = compute_dg(&datum, datum.c(), &ConstraintFunction::unconstrained(), opts)?;
        let e_indep = (indep.value + 0.5 * h2).abs();
        let e_free = (free.value + h2).abs();
        rows.push(Check::new(
            format!("lambda={lambda:.1} independent"),
            e_indep <= EPI_TOL,
            json!({"lambda": num(lambda), "value": num(indep.value), "expected": num(-0.5 * h2), "error": num(e_indep)}),
        ));
        rows.push(Check::new(
            format!("lambda={lambda:.1} unconstrained"),
            e_free <= EPI_FREE_TOL,
            json!({"lambda": num(lambda), "value": num(free.value), "expected": num(-h2), "error": num(e_free)}),
        ));
    }
    Ok(rows)
}

fn bm() -> Result<Vec<Check>> {
    let mut rows = Vec::new();
    for (a, b) in [(1.0, 1.0), (1.0, 2.0), (0.5, 3.0)] {
        let r = brunn_minkowski_check(a, b, 2)?;
        // comonotone uniforms sum to a uniform on the Minkowski sum
        let err = (r.copula_lower_bound - r.lhs).abs() / r.lhs;
        rows.push(Check::new(
            format!("intervals {a} + {b}"),
            err <= BM_TOL && r.copula_lower_bound <= r.rhs_upper * (1.0 + BM_TOL),
            json!({
                "lhs": num(r.lhs),
                "rhs_upper": num(r.rhs_upper),
                "copula_lower_bound": num(r.copula_lower_bound),
                "best_rho": num(r.best_rho),
                "relative_error": num(err),
            }),
        ));
    }
    Ok(rows)
}

fn depepi_grid(seed: u64, opts: &SolverOptions) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for n in 1..=3 {
        let k1 = random_pd(&mut rng, n, 10.0);
        let alpha = 2.5;
        let k2 = k1.scale(alpha)?;
        let p1 = EntropyPower::of_gaussian(&k1);
        let p2 = EntropyPower::of_gaussian(&k2);
        for zeta in ZETA_GRID {
            let h = max_coupled_sum_entropy(&k1, &k2, zeta, opts)?;
            let bound = dep_epi_bound(&p1, &p2, zeta)?;
            let h_bound = 0.5 * n as f64 * bound.ln();
            let err = (h - h_bound).abs();
            rows.push(Check::new(
                format!("n={n} zeta={zeta}"),
                err <= DEPEPI_TOL,
                json!({
                    "n": n,
                    "zeta": num(zeta),
                    "max_coupling_entropy": num(h),
                    "bound_entropy": num(h_bound),
                    "bound_power": num(bound),
                    "error": num(err),
                }),
            ));
        }
    }
    Ok(rows)
}

fn saddle_grid(seed: u64, opts: &SolverOptions) -> Result<Vec<Check>> {
    let mut rows = Vec::new();
    for (n, p, q, zeta) in [(1, 1.0, 1.0, 0.0), (1, 2.0, 1.0, 0.5), (2, 1.0, 1.0, 0.3), (3, 2.0, 3.0, 1.0)] {
        let spec = GameSpec::new(n, p, q, zeta)?;
        let r = saddle_deviation_test(&spec, 20, seed, opts)?;
        rows.push(Check::new(
            format!("n={n} P={p} N={q} zeta={zeta}"),
            r.passed,
            json!({
                "value": num(r.saddle_value),
                "isotropic_payoff": num(r.isotropic_payoff),
                "worst_signal_excess": num(r.worst_signal_excess),
                "worst_noise_deficit": num(r.worst_noise_deficit),
                "trials": r.trials,
            }),
        ));
    }
    Ok(rows)
}

fn comparison_nongaussian() -> Result<Vec<Check>> {
    let u = Density1D::uniform(0.0, 1.0)?;
    let l = Density1D::laplace(0.0, 1.0)?;
    let mut rows = Vec::new();
    for (name, p1, p2) in [("uniform", u, u), ("laplace", l, l), ("uniform+laplace", u, l)] {
        for zeta in COMPARISON_ZETAS {
            let s = comparison_spot_check(&p1, &p2, zeta, 1)?;
            rows.push(Check {
                name: format!("{name} zeta={zeta}"),
                verdict: match s.verdict {
                    SpotVerdict::Pass => CheckVerdict::Pass,
                    SpotVerdict::Inconclusive => CheckVerdict::Inconclusive,
                },
                fields: json!({
                    "zeta": num(s.zeta),
                    "rho_max": num(s.rho_max),
                    "best_rho": num(s.best_rho),
                    "h1": num(s.h1),
                    "h2": num(s.h2),
                    "lhs_lower_bound": num(s.lhs_lower_bound),
                    "rhs": num(s.rhs),
                    "margin": num(s.margin),
                }),
            });
        }
    }
    Ok(rows)
}
