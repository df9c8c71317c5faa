//! Gaussian constants `D_g(c, d, B; nu) = -1/2 inf_K F(c, K)`, the best
//! constant over the exponent simplex, and comparison Gaussians.
//!
//! `F(c, (K_i)) = max_{K in Pi(K_1..K_k; nu)} sum_j d_j log det(B_j K B_j^T)
//!                - sum_i c_i log det K_i`
//! is geodesically convex in `(K_i)`, so the infimum is found by Riemannian
//! gradient descent along `exp_map` geodesics. The Euclidean gradient of the
//! inner maximum with respect to `K_i` is the value-function gradient `U_i`
//! returned by the coupling solver.

use std::f64::consts::{E, PI};

use crate::coupling::max_coupling;
use crate::datum::{
    check_dimension_condition, check_scaling, ConstraintFunction, Datum, DimensionCheck,
};
use crate::dual::solve_dual;
use crate::error::{Error, Result};
use crate::options::SolverOptions;
use crate::pd::{delta2, try_exp_map, PdMatrix, SymMatrix};

/// Descents that end farther than this (in `delta_2` from the start) are
/// reported as approaching an infimum that is not attained.
pub const ATTAINMENT_RADIUS: f64 = 10.0;
const ARMIJO: f64 = 1e-4;
const INNER_TOL: f64 = 1e-12;
const GOLDEN_TOL: f64 = 1e-7;
const SIMPLEX_STEPS: usize = 200;
/// Squared gradient norm above which a stalled descent beyond
/// [`ATTAINMENT_RADIUS`] counts as divergent.
const RUNAWAY_SLOPE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Finite,
    Infinite,
    ExtremalNotAttained,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Finite => "finite",
            Status::Infinite => "infinite",
            Status::ExtremalNotAttained => "extremal-not-attained",
        }
    }
}

/// Exponents `c >= 0` with `sum_i c_i dim E_i = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    c: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(dims: &[usize], c: Vec<f64>) -> Result<Self> {
        if c.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} exponents for {} blocks",
                c.len(),
                dims.len()
            )));
        }
        if c.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidInput("simplex entries must be >= 0".into()));
        }
        let w: f64 = c.iter().zip(dims).map(|(c, &n)| c * n as f64).sum();
        if (w - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("weighted sum is {w}, expected 1")));
        }
        Ok(Self { c })
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }
}

/// Outcome of [`compute_dg`] and [`best_constant`].
#[derive(Debug, Clone)]
pub struct ConstantReport {
    /// `D_g`, `+inf` when infinite.
    pub value: f64,
    pub status: Status,
    /// Minimizing exponents (best-constant mode, normalized scale).
    pub c_star: Option<SimplexPoint>,
    /// Infimizing marginals, normalized so that `sum_i log det K_i = 0`.
    pub witnesses: Vec<PdMatrix>,
    /// `inf F`, i.e. `-2 D_g`.
    pub inner_value: f64,
    /// Unconstrained: duality gap of the inner maximum at the witnesses.
    /// Best-constant mode: difference of the two sides of the minimax
    /// identity.
    pub certificate_gap: f64,
    /// Riemannian gradient norm at the witnesses.
    pub stationarity: f64,
    /// `delta_2` distance of the witnesses from the starting point.
    pub distance: f64,
    pub iterations: usize,
    pub dimension_check: Option<DimensionCheck>,
    /// Best-constant mode: `inf` over det-one marginals of the maximum
    /// coupling value, and the exponents read off its multipliers.
    pub minimax_rhs: Option<f64>,
    pub c_from_rhs: Option<Vec<f64>>,
    /// Factor `sum_j d_j dim E^j` removed by the normalization; the constant
    /// for the original `d` at exponents `scale * c_star` is `scale * value`.
    pub scale: f64,
}

impl ConstantReport {
    fn infinite(dimension_check: Option<DimensionCheck>) -> Self {
        Self {
            value: f64::INFINITY,
            status: Status::Infinite,
            c_star: None,
            witnesses: Vec::new(),
            inner_value: f64::NEG_INFINITY,
            certificate_gap: f64::NAN,
            stationarity: f64::NAN,
            distance: f64::NAN,
            iterations: 0,
            dimension_check,
            minimax_rhs: None,
            c_from_rhs: None,
            scale: 1.0,
        }
    }
}

/// Outcome of [`comparison_gaussians`].
#[derive(Debug, Clone)]
pub struct ComparisonResult {
    pub z_covariances: Vec<PdMatrix>,
    /// `h(N(0, Z_i))`, equal to the targets.
    pub entropies: Vec<f64>,
    /// `sum_j d_j h(B_j Z)` at the constrained maximum coupling of the `Z_i`.
    pub lhs_reference: f64,
    pub status: Status,
    pub stationarity: f64,
    pub iterations: usize,
}

/// `h(N(0, K)) = 1/2 log((2 pi e)^n det K)`.
pub fn gaussian_entropy(k: &PdMatrix) -> f64 {
    0.5 * (k.dim() as f64 * (2.0 * PI * E).ln() + k.log_det())
}

/// `log det` of a covariance with entropy `h` in dimension `n`.
pub fn log_det_for_entropy(h: f64, n: usize) -> f64 {
    2.0 * h - n as f64 * (2.0 * PI * E).ln()
}

fn inner_opts(opts: &SolverOptions) -> SolverOptions {
    let mut o = opts.clone();
    o.tol = opts.tol.min(INNER_TOL);
    o
}

/// `F(c, (K_i))` for unconstrained couplings.
pub fn evaluate_f(datum: &Datum, c: &[f64], marginals: &[PdMatrix]) -> Result<f64> {
    evaluate_f_with(datum, c, marginals, &ConstraintFunction::unconstrained(), &SolverOptions::default())
}

/// `F_nu(c, (K_i))`: the inner maximum runs over `nu`-constrained couplings.
pub fn evaluate_f_with(
    datum: &Datum,
    c: &[f64],
    marginals: &[PdMatrix],
    nu: &ConstraintFunction,
    opts: &SolverOptions,
) -> Result<f64> {
    if c.len() != datum.k() {
        return Err(Error::DimensionMismatch(format!("{} exponents for k = {}", c.len(), datum.k())));
    }
    let v = max_coupling(datum, marginals, nu, &inner_opts(opts))?.value;
    Ok(v - c.iter().zip(marginals).map(|(c, k)| c * k.log_det()).sum::<f64>())
}

/// Riemannian gradient of `F_nu(c, .)` in the affine-invariant metric,
/// `xi_i = K_i U_i K_i - c_i K_i` with `U_i` the gradient of the maximum
/// coupling value in `K_i`. The Euclidean gradient is `K_i^{-1} xi_i K_i^{-1}`.
pub fn riemannian_gradient(
    datum: &Datum,
    c: &[f64],
    marginals: &[PdMatrix],
    nu: &ConstraintFunction,
    opts: &SolverOptions,
) -> Result<Vec<SymMatrix>> {
    if c.len() != datum.k() {
        return Err(Error::DimensionMismatch(format!("{} exponents for k = {}", c.len(), datum.k())));
    }
    let point = evaluate_point(datum, nu, &Manifold::Free { c }, marginals.to_vec(), &inner_opts(opts))?;
    Ok(point.xi)
}

enum Manifold<'a> {
    /// Minimize `F(c, .)`; common rescaling is a symmetry (scaling condition).
    Free { c: &'a [f64] },
    /// Minimize the maximum-coupling value with `log det K_i` pinned.
    DetFixed { log_dets: &'a [f64] },
}

struct Descent {
    marginals: Vec<PdMatrix>,
    value: f64,
    grad_norm: f64,
    distance: f64,
    iterations: usize,
    diverged: bool,
    /// `tr(U_i K_i) / dim E_i` at the final point.
    trace_ratios: Vec<f64>,
}

struct Point {
    marginals: Vec<PdMatrix>,
    value: f64,
    /// Riemannian gradient per block.
    xi: Vec<SymMatrix>,
    grad_sq: f64,
    trace_ratios: Vec<f64>,
}

fn evaluate_point(
    datum: &Datum,
    nu: &ConstraintFunction,
    manifold: &Manifold,
    marginals: Vec<PdMatrix>,
    opts: &SolverOptions,
) -> Result<Point> {
    let sol = max_coupling(datum, &marginals, nu, opts)?;
    let u = sol
        .marginal_gradient
        .ok_or_else(|| Error::NoConvergence { iterations: sol.iterations, residual: f64::NAN })?;
    let mut value = sol.value;
    let mut xi = Vec::with_capacity(marginals.len());
    let mut grad_sq = 0.0;
    let mut trace_ratios = Vec::with_capacity(marginals.len());
    for (i, k) in marginals.iter().enumerate() {
        let kuk = u[i].congruence(k.as_matrix());
        let n = k.dim() as f64;
        let ratio = u[i].inner(k.as_sym()) / n;
        trace_ratios.push(ratio);
        let step = match manifold {
            Manifold::Free { c } => {
                value -= c[i] * k.log_det();
                kuk.sub(&k.as_sym().scale(c[i]))
            }
            Manifold::DetFixed { .. } => kuk.sub(&k.as_sym().scale(ratio)),
        };
        // squared norm in the affine-invariant metric at K
        let white = step.congruence(k.inv_sqrt().as_matrix());
        grad_sq += white.inner(&white);
        xi.push(step);
    }
    Ok(Point {
        marginals,
        value,
        xi,
        grad_sq,
        trace_ratios,
    })
}

/// Applies the gauge: common rescaling to `sum log det = 0` (free case) or
/// exact determinants (pinned case).
fn normalize(manifold: &Manifold, marginals: Vec<PdMatrix>) -> Vec<PdMatrix> {
    match manifold {
        Manifold::Free { .. } => {
            let total: f64 = marginals.iter().map(|k| k.dim() as f64).sum();
            let ld: f64 = marginals.iter().map(|k| k.log_det()).sum();
            let alpha = (-ld / total).exp();
            marginals
                .into_iter()
                .map(|k| k.scale(alpha).expect("positive rescaling keeps PD"))
                .collect()
        }
        Manifold::DetFixed { log_dets } => marginals
            .into_iter()
            .zip(log_dets.iter())
            .map(|(k, &target)| {
                let alpha = ((target - k.log_det()) / k.dim() as f64).exp();
                k.scale(alpha).expect("positive rescaling keeps PD")
            })
            .collect(),
    }
}

fn tuple_distance(a: &[PdMatrix], b: &[PdMatrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| delta2(x, y).powi(2)).sum::<f64>().sqrt()
}

fn descend(
    datum: &Datum,
    nu: &ConstraintFunction,
    manifold: Manifold,
    start: Vec<PdMatrix>,
    opts: &SolverOptions,
) -> Result<Descent> {
    let inner = inner_opts(opts);
    let start = normalize(&manifold, start);
    let mut point = evaluate_point(datum, nu, &manifold, start.clone(), &inner)?;
    let mut t = 1.0;
    let mut iterations = 0;
    let mut diverged = false;
    let grad_tol = opts.tol;

    while iterations < opts.outer_iters {
        if point.grad_sq <= grad_tol {
            break;
        }
        iterations += 1;
        let mut next = None;
        while t > 1e-14 {
            let trial: Result<Vec<PdMatrix>> = point
                .marginals
                .iter()
                .zip(&point.xi)
                .map(|(k, xi)| try_exp_map(k, &xi.scale(-t)))
                .collect();
            let trial = trial.map(|m| normalize(&manifold, m));
            if let Ok(p) = trial.and_then(|m| evaluate_point(datum, nu, &manifold, m, &inner)) {
                if p.value <= point.value - ARMIJO * t * point.grad_sq {
                    next = Some(p);
                    break;
                }
            }
            t *= 0.5;
        }
        let Some(p) = next else {
            break;
        };
        let decrease = point.value - p.value;
        point = p;
        t = (t * 2.0).min(1e3);
        let distance = tuple_distance(&point.marginals, &start);
        if distance > opts.divergence_radius && decrease > opts.tol {
            diverged = true;
            break;
        }
        if decrease <= 1e-3 * opts.tol {
            break;
        }
    }

    let distance = tuple_distance(&point.marginals, &start);
    // stalled far from the start (typically the inner problem breaking down
    // numerically) while F is still falling steeply: a runaway direction
    if distance > ATTAINMENT_RADIUS && point.grad_sq > RUNAWAY_SLOPE {
        diverged = true;
    }
    Ok(Descent {
        value: point.value,
        grad_norm: point.grad_sq.sqrt(),
        distance,
        iterations,
        diverged,
        trace_ratios: point.trace_ratios,
        marginals: point.marginals,
    })
}

fn identity_start(datum: &Datum) -> Vec<PdMatrix> {
    datum.decomposition().dims().iter().map(|&n| PdMatrix::identity(n)).collect()
}

/// `D_g(c, d, B; nu)` starting the descent from identity marginals.
pub fn compute_dg(datum: &Datum, c: &[f64], nu: &ConstraintFunction, opts: &SolverOptions) -> Result<ConstantReport> {
    compute_dg_from(datum, c, nu, None, opts)
}

/// As [`compute_dg`], optionally warm-started from given marginals.
pub fn compute_dg_from(
    datum: &Datum,
    c: &[f64],
    nu: &ConstraintFunction,
    start: Option<&[PdMatrix]>,
    opts: &SolverOptions,
) -> Result<ConstantReport> {
    let datum = datum.with_exponents(c.to_vec(), datum.d().to_vec())?;
    datum.check_surjective()?;
    if !check_scaling(&datum) {
        return Ok(ConstantReport::infinite(None));
    }
    let dim = check_dimension_condition(&datum, opts.dimension_trials, opts.seed)?;
    if dim.is_conclusive_failure() {
        return Ok(ConstantReport::infinite(Some(dim)));
    }

    let start = start.map(|s| s.to_vec()).unwrap_or_else(|| identity_start(&datum));
    let d = descend(&datum, nu, Manifold::Free { c }, start, opts)?;
    if d.diverged {
        let mut r = ConstantReport::infinite(Some(dim));
        r.witnesses = d.marginals;
        r.distance = d.distance;
        r.iterations = d.iterations;
        r.stationarity = d.grad_norm;
        return Ok(r);
    }
    let status = if d.distance > ATTAINMENT_RADIUS {
        Status::ExtremalNotAttained
    } else {
        Status::Finite
    };
    let certificate_gap = if nu.is_unconstrained() {
        let inner = inner_opts(opts);
        match (
            max_coupling(&datum, &d.marginals, nu, &inner),
            solve_dual(&datum, &d.marginals, &inner),
        ) {
            (Ok(primal), Ok(cert)) => crate::dual::duality_gap(&datum, &primal, &cert),
            _ => f64::NAN,
        }
    } else {
        f64::NAN
    };
    Ok(ConstantReport {
        value: -0.5 * d.value,
        status,
        c_star: None,
        witnesses: d.marginals,
        inner_value: d.value,
        certificate_gap,
        stationarity: d.grad_norm,
        distance: d.distance,
        iterations: d.iterations,
        dimension_check: Some(dim),
        minimax_rhs: None,
        c_from_rhs: None,
        scale: 1.0,
    })
}

/// Euclidean projection onto `{c >= 0, sum_i w_i c_i = 1}`.
fn project_simplex(y: &[f64], w: &[f64]) -> Vec<f64> {
    let eval = |tau: f64| -> f64 { y.iter().zip(w).map(|(y, w)| w * (y - tau * w).max(0.0)).sum() };
    let (mut lo, mut hi) = (-1.0, 1.0);
    while eval(lo) < 1.0 {
        lo *= 2.0;
    }
    while eval(hi) > 1.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eval(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    let mut c: Vec<f64> = y.iter().zip(w).map(|(y, w)| (y - tau * w).max(0.0)).collect();
    let s: f64 = c.iter().zip(w).map(|(c, w)| c * w).sum();
    for x in &mut c {
        *x /= s;
    }
    c
}

/// Minimum of `D_g(c, d, B)` over the exponent simplex, with both sides of
/// the minimax identity computed independently:
/// `max_c inf_K F(c, K) = inf_{det K_i = 1} max-coupling value`.
pub fn best_constant(datum: &Datum, opts: &SolverOptions) -> Result<ConstantReport> {
    datum.check_surjective()?;
    let scale = datum.weighted_codomain_dim();
    let dims: Vec<f64> = datum.decomposition().dims().iter().map(|&n| n as f64).collect();
    let k = datum.k();
    let d_norm: Vec<f64> = datum.d().iter().map(|d| d / scale).collect();
    let uniform: Vec<f64> = dims.iter().map(|n| 1.0 / (k as f64 * n)).collect();
    let normalized = datum.with_exponents(uniform.clone(), d_norm)?;
    let nu = ConstraintFunction::unconstrained();

    // inner objective phi(c) = inf_K F(c, K), concave in c
    let mut warm: Option<Vec<PdMatrix>> = None;
    let mut phi = |c: &[f64]| -> Result<(f64, ConstantReport)> {
        let r = compute_dg_from(&normalized, c, &nu, warm.as_deref(), opts)?;
        if r.status == Status::Finite {
            warm = Some(r.witnesses.clone());
        }
        Ok((r.inner_value, r))
    };

    let (c_best, report) = match k {
        1 => {
            let c = vec![1.0 / dims[0]];
            let (_, r) = phi(&c)?;
            (c, r)
        }
        2 => {
            let point = |theta: f64| vec![theta / dims[0], (1.0 - theta) / dims[1]];
            let g = (5f64.sqrt() - 1.0) / 2.0;
            let (mut a, mut b) = (0.0, 1.0);
            let mut x1 = b - g * (b - a);
            let mut x2 = a + g * (b - a);
            let mut f1 = phi(&point(x1))?;
            let mut f2 = phi(&point(x2))?;
            while b - a > GOLDEN_TOL {
                if f1.0 >= f2.0 {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - g * (b - a);
                    f1 = phi(&point(x1))?;
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + g * (b - a);
                    f2 = phi(&point(x2))?;
                }
            }
            if f1.0 >= f2.0 {
                (point(x1), f1.1)
            } else {
                (point(x2), f2.1)
            }
        }
        _ => {
            let mut c = uniform.clone();
            let (mut val, mut rep) = phi(&c)?;
            let mut t = 1.0;
            for _ in 0..SIMPLEX_STEPS {
                // supergradient of phi: -log det K_i at the infimizer
                let g: Vec<f64> = rep.witnesses.iter().map(|k| -k.log_det()).collect();
                let mut moved = false;
                while t > 1e-10 {
                    let y: Vec<f64> = c.iter().zip(&g).map(|(c, g)| c + t * g).collect();
                    let cand = project_simplex(&y, &dims);
                    let step: f64 = cand.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    if step < 1e-9 {
                        break;
                    }
                    let ascent: f64 = g.iter().zip(cand.iter().zip(&c)).map(|(g, (a, b))| g * (a - b)).sum();
                    let (v, r) = phi(&cand)?;
                    if r.status != Status::Infinite && v >= val + ARMIJO * ascent {
                        c = cand;
                        val = v;
                        rep = r;
                        moved = true;
                        break;
                    }
                    t *= 0.5;
                }
                if !moved {
                    break;
                }
                t = (2.0 * t).min(1e3);
            }
            (c, rep)
        }
    };

    // independent route: det-one marginals, minimize the coupling value
    let zeros = vec![0.0; k];
    let rhs = descend(
        &normalized,
        &nu,
        Manifold::DetFixed { log_dets: &zeros },
        identity_start(&normalized),
        opts,
    )?;

    let lhs = report.inner_value;
    Ok(ConstantReport {
        value: -0.5 * lhs,
        status: if rhs.diverged { Status::Infinite } else { report.status },
        c_star: Some(SimplexPoint::new(datum.decomposition().dims(), c_best.clone()).unwrap_or(SimplexPoint { c: c_best })),
        witnesses: report.witnesses,
        inner_value: lhs,
        certificate_gap: lhs - rhs.value,
        stationarity: report.stationarity,
        distance: report.distance,
        iterations: report.iterations + rhs.iterations,
        dimension_check: report.dimension_check,
        minimax_rhs: Some(rhs.value),
        c_from_rhs: Some(rhs.trace_ratios),
        scale,
    })
}

/// Gaussians `Z_i` with the prescribed entropies minimizing the
/// `nu`-constrained maximum of `sum_j d_j h(B_j Z)`.
pub fn comparison_gaussians(
    datum: &Datum,
    entropies: &[f64],
    nu: &ConstraintFunction,
    opts: &SolverOptions,
) -> Result<ComparisonResult> {
    datum.check_surjective()?;
    if entropies.len() != datum.k() {
        return Err(Error::DimensionMismatch(format!(
            "{} entropies for k = {}",
            entropies.len(),
            datum.k()
        )));
    }
    if entropies.iter().any(|h| !h.is_finite()) {
        return Err(Error::InvalidInput("entropies must be finite".into()));
    }
    let dims = datum.decomposition().dims();
    let log_dets: Vec<f64> = entropies.iter().zip(dims).map(|(&h, &n)| log_det_for_entropy(h, n)).collect();
    let start: Vec<PdMatrix> = dims.iter().map(|&n| PdMatrix::identity(n)).collect();
    let d = descend(datum, nu, Manifold::DetFixed { log_dets: &log_dets }, start, opts)?;
    let status = if d.diverged {
        Status::Infinite
    } else if d.distance > ATTAINMENT_RADIUS {
        Status::ExtremalNotAttained
    } else {
        Status::Finite
    };
    let lhs_reference = 0.5 * d.value + 0.5 * (2.0 * PI * E).ln() * datum.weighted_codomain_dim();
    Ok(ComparisonResult {
        entropies: d.marginals.iter().map(gaussian_entropy).collect(),
        z_covariances: d.marginals,
        lhs_reference,
        status,
        stationarity: d.grad_norm,
        iterations: d.iterations,
    })
}

/// `sum_j d_j h(B_j Z)` maximized over `nu`-constrained Gaussian couplings
/// of the given marginals (entropy form of the coupling value).
pub fn max_entropy_value(
    datum: &Datum,
    marginals: &[PdMatrix],
    nu: &ConstraintFunction,
    opts: &SolverOptions,
) -> Result<f64> {
    let v = max_coupling(datum, marginals, nu, opts)?.value;
    Ok(0.5 * v + 0.5 * (2.0 * PI * E).ln() * datum.weighted_codomain_dim())
}

/// Binary entropy in nats.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// Convenience for tests and examples: `K_i = diag(values)` scalars.
pub fn scalar_marginals(values: &[f64]) -> Result<Vec<PdMatrix>> {
    values.iter().map(|&v| PdMatrix::from_diagonal(&[v])).collect()
}
