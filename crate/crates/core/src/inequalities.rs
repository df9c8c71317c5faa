//! Closed-form bounds around the entropy power inequality with a mutual
//! information budget, the functional (integral) form of the Gaussian
//! constant, and the budgeted mutual-information game.
//!
//! A budget `zeta = +inf` is `f64::INFINITY`; every formula takes the limit
//! `1 - e^{-2 zeta / n} -> 1`.

use std::f64::consts::{E, PI};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coupling::max_coupling;
use crate::datum::{ConstraintFunction, Datum};
use crate::error::{Error, Result};
use crate::options::SolverOptions;
use crate::pd::{block_diagonal, PdMatrix, SymMatrix};
use crate::sample::random_pd;

/// Slack allowed on the quadratic-form dominance in the majorization test.
pub const MAJORIZATION_TOL: f64 = 1e-10;
/// Tolerance of the saddle-point deviation test.
pub const SADDLE_TOL: f64 = 1e-6;

/// `N = e^{2h/n}` for an `n`-dimensional vector with entropy `h` (nats).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyPower {
    pub n: usize,
    pub h: f64,
    pub power: f64,
}

impl EntropyPower {
    pub fn from_entropy(n: usize, h: f64) -> Result<Self> {
        if n == 0 || !h.is_finite() {
            return Err(Error::InvalidInput(format!("entropy power needs n >= 1 and finite h, got n = {n}, h = {h}")));
        }
        Ok(Self {
            n,
            h,
            power: (2.0 * h / n as f64).exp(),
        })
    }

    pub fn from_power(n: usize, power: f64) -> Result<Self> {
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::InvalidInput(format!("entropy power must be positive, got {power}")));
        }
        Self::from_entropy(n, 0.5 * n as f64 * power.ln())
    }

    /// Entropy power of `N(0, K)`: `2 pi e det(K)^{1/n}`.
    pub fn of_gaussian(k: &PdMatrix) -> Self {
        let n = k.dim();
        let h = 0.5 * (n as f64 * (2.0 * PI * E).ln() + k.log_det());
        Self::from_entropy(n, h).expect("PD covariance has finite entropy")
    }
}

/// `1 - e^{-2 zeta / n}`, the squared correlation that spends the budget.
pub fn budget_correlation_sq(zeta: f64, n: usize) -> f64 {
    if zeta == f64::INFINITY {
        1.0
    } else {
        -(-2.0 * zeta / n as f64).exp_m1()
    }
}

fn check_zeta(zeta: f64) -> Result<()> {
    if zeta >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("budget must be >= 0, got {zeta}")))
    }
}

/// Lower bound on `N(X_1 + X_2)` over couplings with `I(X_1; X_2) <= zeta`:
/// `N_1 + N_2 + 2 sqrt((1 - e^{-2 zeta/n}) N_1 N_2)`.
pub fn dep_epi_bound(n1: &EntropyPower, n2: &EntropyPower, zeta: f64) -> Result<f64> {
    if n1.n != n2.n {
        return Err(Error::DimensionMismatch(format!("entropy powers in dims {} and {}", n1.n, n2.n)));
    }
    check_zeta(zeta)?;
    let r = budget_correlation_sq(zeta, n1.n);
    Ok(n1.power + n2.power + 2.0 * (r * n1.power * n2.power).sqrt())
}

/// `N(Z_1 + Z_2)` for `Z_1 = rho S_1 S_2^{-1} Z_2 + sqrt(1 - rho^2) W`,
/// `S_i = K_i^{1/2}`, `rho^2 = 1 - e^{-2 zeta/n}`.
pub fn gaussian_coupled_sum_power(k1: &PdMatrix, k2: &PdMatrix, zeta: f64) -> Result<f64> {
    if k1.dim() != k2.dim() {
        return Err(Error::DimensionMismatch(format!("covariances of dims {} and {}", k1.dim(), k2.dim())));
    }
    check_zeta(zeta)?;
    let n = k1.dim();
    let rho = budget_correlation_sq(zeta, n).sqrt();
    let s1 = k1.sqrt();
    let s2 = k2.sqrt();
    let cross = s1.as_matrix() * s2.as_matrix();
    let sum = k1.as_matrix() + k2.as_matrix() + (&cross + cross.transpose()) * rho;
    let sum = PdMatrix::from_sym(SymMatrix::new(crate::pd::symmetrize(sum))?)?;
    Ok(2.0 * PI * E * (sum.log_det() / n as f64).exp())
}

/// Two-block datum `(X, Z) -> X + Z` in dimension `n` with `d = 1`.
pub fn sum_datum(n: usize) -> Datum {
    let mut b = DMatrix::zeros(n, 2 * n);
    for i in 0..n {
        b[(i, i)] = 1.0;
        b[(i, n + i)] = 1.0;
    }
    let c = 0.5 / n as f64;
    Datum::from_parts(vec![n, n], vec![c, c], vec![1.0], vec![b]).expect("sum datum is well formed")
}

/// `nu({1,2}) = zeta` on two blocks.
pub fn budget_constraint(zeta: f64) -> Result<ConstraintFunction> {
    check_zeta(zeta)?;
    if zeta == 0.0 {
        Ok(ConstraintFunction::independent(2))
    } else {
        ConstraintFunction::total_correlation(2, zeta)
    }
}

/// `max h(X_1 + X_2)` over Gaussian couplings of `N(0, K_1)`, `N(0, K_2)`
/// with `I(X_1; X_2) <= zeta`, by the constrained coupling solver.
pub fn max_coupled_sum_entropy(k1: &PdMatrix, k2: &PdMatrix, zeta: f64, opts: &SolverOptions) -> Result<f64> {
    if k1.dim() != k2.dim() {
        return Err(Error::DimensionMismatch(format!("covariances of dims {} and {}", k1.dim(), k2.dim())));
    }
    let n = k1.dim();
    let sol = max_coupling(&sum_datum(n), &[k1.clone(), k2.clone()], &budget_constraint(zeta)?, opts)?;
    Ok(0.5 * (n as f64 * (2.0 * PI * E).ln() + sol.value))
}

/// Interval lengths versus the entropy of the best coupled sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BrunnMinkowski {
    /// `len_1 + len_2`.
    pub lhs: f64,
    /// `exp h(X_1 + X_2)` can never exceed the length of the support of the
    /// sum, `len_1 + len_2`.
    pub rhs_upper: f64,
    /// `exp` of the best copula-family entropy for uniform marginals.
    pub copula_lower_bound: f64,
    pub best_rho: f64,
}

/// One-dimensional Brunn-Minkowski endpoint for intervals, with the copula
/// family supplying couplings of the uniform laws.
pub fn brunn_minkowski_check(len1: f64, len2: f64, rho_grid: usize) -> Result<BrunnMinkowski> {
    use crate::oracles::{coupled_sum_entropy, Density1D};
    if !(len1 > 0.0 && len2 > 0.0) {
        return Err(Error::InvalidInput("interval lengths must be positive".into()));
    }
    let u1 = Density1D::uniform(0.0, len1)?;
    let u2 = Density1D::uniform(0.0, len2)?;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..=rho_grid.max(1) {
        let rho = i as f64 / rho_grid.max(1) as f64;
        let h = coupled_sum_entropy(&u1, &u2, rho)?;
        if h > best.0 {
            best = (h, rho);
        }
    }
    Ok(BrunnMinkowski {
        lhs: len1 + len2,
        rhs_upper: len1 + len2,
        copula_lower_bound: best.0.exp(),
        best_rho: best.1,
    })
}

/// Power budgets and the information budget of the game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GameSpec {
    pub n: usize,
    pub signal_power: f64,
    pub noise_power: f64,
    pub zeta: f64,
}

impl GameSpec {
    pub fn new(n: usize, signal_power: f64, noise_power: f64, zeta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("game dimension must be >= 1".into()));
        }
        if !(signal_power > 0.0 && noise_power > 0.0) || !signal_power.is_finite() || !noise_power.is_finite() {
            return Err(Error::InvalidInput("power budgets must be positive and finite".into()));
        }
        check_zeta(zeta)?;
        Ok(Self {
            n,
            signal_power,
            noise_power,
            zeta,
        })
    }

    pub fn isotropic_signal(&self) -> PdMatrix {
        PdMatrix::identity(self.n).scale(self.signal_power / self.n as f64).expect("positive power")
    }

    pub fn isotropic_noise(&self) -> PdMatrix {
        PdMatrix::identity(self.n).scale(self.noise_power / self.n as f64).expect("positive power")
    }
}

/// Value at the isotropic Gaussian saddle point:
/// `(n/2) log(1 + N_X/N_Z + 2 sqrt((1 - e^{-2 zeta/n}) N_X/N_Z)) + zeta`.
pub fn game_value_gaussian(spec: &GameSpec) -> f64 {
    let ratio = spec.signal_power / spec.noise_power;
    let r = budget_correlation_sq(spec.zeta, spec.n);
    0.5 * spec.n as f64 * (1.0 + ratio + 2.0 * (r * ratio).sqrt()).ln() + spec.zeta
}

/// Payoff of Gaussian strategies: `max h(X + Z) - h(Z) + zeta` over Gaussian
/// couplings with `I(X; Z) <= zeta`.
pub fn gaussian_payoff(signal: &PdMatrix, noise: &PdMatrix, zeta: f64, opts: &SolverOptions) -> Result<f64> {
    if zeta == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let n = noise.dim() as f64;
    let h_sum = max_coupled_sum_entropy(signal, noise, zeta, opts)?;
    let h_noise = 0.5 * (n * (2.0 * PI * E).ln() + noise.log_det());
    Ok(h_sum - h_noise + zeta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaddleReport {
    pub saddle_value: f64,
    /// Payoff at the isotropic pair computed by the solver.
    pub isotropic_payoff: f64,
    /// Largest `payoff(X, Z*) - value` over signal deviations.
    pub worst_signal_excess: f64,
    /// Largest `value - payoff(X*, Z)` over noise deviations.
    pub worst_noise_deficit: f64,
    pub trials: usize,
    pub passed: bool,
}

fn random_strategy(rng: &mut ChaCha8Rng, n: usize, power: f64) -> PdMatrix {
    let k = random_pd(rng, n, 50.0);
    let scale = rng.random_range(0.3..=1.0) * power / k.as_sym().trace();
    k.scale(scale).expect("positive trace")
}

/// Samples Gaussian strategies within the power budgets and checks that no
/// unilateral deviation from the isotropic pair improves on the saddle value.
pub fn saddle_deviation_test(spec: &GameSpec, trials: usize, seed: u64, opts: &SolverOptions) -> Result<SaddleReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be >= 1".into()));
    }
    if spec.zeta == f64::INFINITY {
        return Err(Error::InvalidInput("deviation test needs a finite budget".into()));
    }
    let value = game_value_gaussian(spec);
    let x_star = spec.isotropic_signal();
    let z_star = spec.isotropic_noise();
    let isotropic_payoff = gaussian_payoff(&x_star, &z_star, spec.zeta, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut excess = isotropic_payoff - value;
    let mut deficit = value - isotropic_payoff;
    for t in 0..trials {
        if t % 2 == 0 {
            let x = random_strategy(&mut rng, spec.n, spec.signal_power);
            excess = excess.max(gaussian_payoff(&x, &z_star, spec.zeta, opts)? - value);
        } else {
            let z = random_strategy(&mut rng, spec.n, spec.noise_power);
            deficit = deficit.max(value - gaussian_payoff(&x_star, &z, spec.zeta, opts)?);
        }
    }
    Ok(SaddleReport {
        saddle_value: value,
        isotropic_payoff,
        worst_signal_excess: excess,
        worst_noise_deficit: deficit,
        trials,
        passed: excess <= SADDLE_TOL && deficit <= SADDLE_TOL,
    })
}

/// Max-min and min-max of the payoff over finite strategy sets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameBracket {
    pub max_min: f64,
    pub min_max: f64,
}

pub fn strategy_bracket(signals: &[PdMatrix], noises: &[PdMatrix], zeta: f64, opts: &SolverOptions) -> Result<GameBracket> {
    let mut table = Vec::with_capacity(signals.len());
    for x in signals {
        let row: Result<Vec<f64>> = noises.iter().map(|z| gaussian_payoff(x, z, zeta, opts)).collect();
        table.push(row?);
    }
    let max_min = table
        .iter()
        .map(|row| row.iter().cloned().fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max);
    let min_max = (0..noises.len())
        .map(|j| table.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min);
    Ok(GameBracket { max_min, min_max })
}

/// `x -> exp(log_scale - x^T A x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalGaussian {
    pub quadratic: PdMatrix,
    pub log_scale: f64,
}

impl FunctionalGaussian {
    pub fn new(quadratic: PdMatrix, log_scale: f64) -> Self {
        Self { quadratic, log_scale }
    }

    pub fn domain_dim(&self) -> usize {
        self.quadratic.dim()
    }

    /// `log` of `e^s pi^{n/2} det(A)^{-1/2}`.
    pub fn log_integral(&self) -> f64 {
        self.log_scale + 0.5 * self.domain_dim() as f64 * PI.ln() - 0.5 * self.quadratic.log_det()
    }

    /// Gaussian density of `N(0, K)` in this form (`A = K^{-1}/2`).
    pub fn density(k: &PdMatrix) -> Self {
        let n = k.dim() as f64;
        let a = k.inverse().scale(0.5).expect("positive scale");
        Self::new(a, -0.5 * (n * (2.0 * PI).ln() + k.log_det()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalCheck {
    pub majorization_holds: bool,
    pub inequality_holds: bool,
    /// `sum c_i log int f_i`.
    pub lhs: f64,
    /// `D_g + sum d_j log int g_j`.
    pub rhs: f64,
    /// Smallest eigenvalue of `blockdiag(c_i A_i) - sum d_j B_j^T G_j B_j`.
    pub dominance_margin: f64,
}

/// Checks `prod f_i^{c_i}(pi_i x) <= prod g_j^{d_j}(B_j x)` for all `x`
/// and then `prod (int f_i)^{c_i} <= e^{D_g} prod (int g_j)^{d_j}`.
pub fn verify_functional_gaussian(
    datum: &Datum,
    dg: f64,
    f: &[FunctionalGaussian],
    g: &[FunctionalGaussian],
) -> Result<FunctionalCheck> {
    let dec = datum.decomposition();
    if f.len() != datum.k() || g.len() != datum.m() {
        return Err(Error::DimensionMismatch(format!(
            "{} f and {} g functions for k = {}, m = {}",
            f.len(),
            g.len(),
            datum.k(),
            datum.m()
        )));
    }
    for (i, fi) in f.iter().enumerate() {
        if fi.domain_dim() != dec.dim(i) {
            return Err(Error::DimensionMismatch(format!("f_{} lives on dim {}, block has {}", i + 1, fi.domain_dim(), dec.dim(i))));
        }
    }
    for (j, gj) in g.iter().enumerate() {
        if gj.domain_dim() != datum.codomain_dim(j) {
            return Err(Error::DimensionMismatch(format!(
                "g_{} lives on dim {}, map has {} rows",
                j + 1,
                gj.domain_dim(),
                datum.codomain_dim(j)
            )));
        }
    }
    let c = datum.c();
    let d = datum.d();
    let scaled: Vec<DMatrix<f64>> = f.iter().zip(c).map(|(fi, ci)| fi.quadratic.as_matrix() * *ci).collect();
    let mut q = block_diagonal(&scaled.iter().collect::<Vec<_>>());
    for ((b, gj), dj) in datum.maps().iter().zip(g).zip(d) {
        q -= b.transpose() * gj.quadratic.as_matrix() * b * *dj;
    }
    let margin = SymMatrix::new(crate::pd::symmetrize(q))?.min_eigenvalue();
    let scale_f: f64 = f.iter().zip(c).map(|(fi, ci)| ci * fi.log_scale).sum();
    let scale_g: f64 = g.iter().zip(d).map(|(gj, dj)| dj * gj.log_scale).sum();
    let majorization_holds = scale_f <= scale_g + MAJORIZATION_TOL && margin >= -MAJORIZATION_TOL;

    let lhs: f64 = f.iter().zip(c).map(|(fi, ci)| ci * fi.log_integral()).sum();
    let rhs = dg + g.iter().zip(d).map(|(gj, dj)| dj * gj.log_integral()).sum::<f64>();
    Ok(FunctionalCheck {
        majorization_holds,
        inequality_holds: lhs <= rhs + 1e-9,
        lhs,
        rhs,
        dominance_margin: margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> EntropyPower {
        EntropyPower::from_power(1, 2.0 * PI * E).unwrap()
    }

    #[test]
    fn dep_epi_endpoints() {
        let n = unit();
        assert!((dep_epi_bound(&n, &n, 0.0).unwrap() - 4.0 * PI * E).abs() < 1e-12);
        assert!((dep_epi_bound(&n, &n, f64::INFINITY).unwrap() - 8.0 * PI * E).abs() < 1e-12);
        let half = 0.5 * (4.0f64 / 3.0).ln();
        assert!((dep_epi_bound(&n, &n, half).unwrap() - 6.0 * PI * E).abs() < 1e-11);
    }

    #[test]
    fn entropy_power_round_trip() {
        let k = PdMatrix::from_row_slice(2, &[2.0, 0.3, 0.3, 1.0]).unwrap();
        let p = EntropyPower::of_gaussian(&k);
        assert!((p.power - 2.0 * PI * E * k.det().sqrt()).abs() < 1e-12);
        let q = EntropyPower::from_power(2, p.power).unwrap();
        assert!((q.h - p.h).abs() < 1e-12);
    }

    #[test]
    fn coupled_sum_power_proportional_equality() {
        let k1 = PdMatrix::from_row_slice(2, &[2.0, 0.3, 0.3, 1.0]).unwrap();
        let k2 = k1.scale(3.0).unwrap();
        for zeta in [0.0, 0.2, 1.0, f64::INFINITY] {
            let bound = dep_epi_bound(&EntropyPower::of_gaussian(&k1), &EntropyPower::of_gaussian(&k2), zeta).unwrap();
            let power = gaussian_coupled_sum_power(&k1, &k2, zeta).unwrap();
            assert!((power - bound).abs() < 1e-9 * bound, "{zeta}: {power} vs {bound}");
        }
        let z = gaussian_coupled_sum_power(&k1, &k2, 0.0).unwrap();
        let sum = PdMatrix::from_sym(k1.as_sym().add(k2.as_sym())).unwrap();
        assert!((z - 2.0 * PI * E * sum.det().sqrt()).abs() < 1e-9);
    }

    #[test]
    fn game_values() {
        let g = GameSpec::new(1, 1.0, 1.0, 0.0).unwrap();
        assert!((game_value_gaussian(&g) - 0.5 * 2f64.ln()).abs() < 1e-15);
        let g = GameSpec::new(1, 1.0, 1.0, 0.5 * (4.0f64 / 3.0).ln()).unwrap();
        assert!((game_value_gaussian(&g) - 2f64.ln()).abs() < 1e-15);
        let g = GameSpec::new(1, 1.0, 1.0, f64::INFINITY).unwrap();
        assert!(game_value_gaussian(&g).is_infinite());
    }

    #[test]
    fn isotropic_payoff_matches_value() {
        let opts = SolverOptions::default();
        for zeta in [0.0, 0.1, 0.7] {
            let g = GameSpec::new(2, 2.0, 1.5, zeta).unwrap();
            let p = gaussian_payoff(&g.isotropic_signal(), &g.isotropic_noise(), zeta, &opts).unwrap();
            assert!((p - game_value_gaussian(&g)).abs() < 1e-6, "{zeta}: {p}");
        }
    }

    #[test]
    fn functional_identity_datum() {
        let datum = Datum::from_parts(vec![2], vec![1.0], vec![1.0], vec![DMatrix::identity(2, 2)]).unwrap();
        let f = FunctionalGaussian::new(PdMatrix::from_row_slice(2, &[1.0, 0.2, 0.2, 2.0]).unwrap(), 0.3);
        let r = verify_functional_gaussian(&datum, 0.0, &[f.clone()], &[f]).unwrap();
        assert!(r.majorization_holds && r.inequality_holds);
        assert!((r.lhs - r.rhs).abs() < 1e-14);
    }

    #[test]
    fn functional_log_integral() {
        let k = PdMatrix::from_row_slice(2, &[2.0, 0.5, 0.5, 1.0]).unwrap();
        assert!(FunctionalGaussian::density(&k).log_integral().abs() < 1e-14);
    }
}
