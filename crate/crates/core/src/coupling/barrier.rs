//! Path-following barrier method for the coupling problem.
//!
//! The unknowns are the entries of the off-diagonal blocks of `K`, so the
//! prescribed marginals are kept exactly. For a barrier weight `mu` the
//! centering problem maximizes
//!
//! ```text
//! sum_j d_j log det(B_j K B_j^T) + mu log det K + mu sum_S log g_S(K)
//! ```
//!
//! with `g_S = nu(S) - I_S(K)`. Every term is a log-det of an affine function
//! of the unknowns (or the log of one), so gradient and Hessian come from one
//! formula: for `A(x) = C K(x) C^T` and `W = C^T A^{-1} C`, the unknown
//! `x_a` at position `(r, s)` gives `d log det A / dx_a = 2 W[r,s]` and
//! `d^2 / dx_a dx_b = -2 (W[s,t] W[r,u] + W[s,u] W[r,t])` for `x_b` at `(t, u)`.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::datum::{ConstraintFunction, Datum, Subset};
use crate::options::SolverOptions;
use crate::pd::PdMatrix;

const MU_START: f64 = 1.0;
const MU_FACTOR: f64 = 0.1;
const MAX_CENTERING_STEPS: usize = 200;
const ARMIJO: f64 = 0.25;
/// Squared decrement below which the line search is dropped.
const ROUNDING_DECREMENT: f64 = 1e-12;
/// Full Newton steps taken in that regime.
const PURE_NEWTON_STEPS: usize = 4;
/// Squared Newton decrement (over `mu`) accepted as centered.
const STAGE_CENTERING: f64 = 1e-2;
/// Tighter centering where multipliers are read off: off the central path
/// `mu K^{-1}` is a poor estimate of the PSD multiplier.
const POLISH_CENTERING: f64 = 1e-12;
/// Multipliers are read at the first stage with `mu` below this. Smaller
/// weights leave `K` numerically singular and `mu K^{-1}` imprecise, while the
/// value keeps improving.
const MULTIPLIER_MU: f64 = 1.0000001e-9;
/// Slacks below this are too close to cancellation for `mu / g_S`.
const TIGHT_SLACK: f64 = 1e-4;

struct ConstraintTerm {
    subset: Subset,
    coords: Vec<usize>,
    nu: f64,
    /// `1/2 sum_{i in S} log det K_i`.
    half_marginal_logdet: f64,
}

pub(crate) struct BarrierProblem<'a> {
    datum: &'a Datum,
    base: DMatrix<f64>,
    vars: Vec<(usize, usize)>,
    constraints: Vec<ConstraintTerm>,
    /// Subsets pinned to independence (`nu(S) = 0`).
    pub(crate) pinned: Vec<Subset>,
}

pub(crate) struct BarrierOutcome {
    pub k: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the end of each centering stage.
    pub history: Vec<f64>,
    /// `(subset, g_S)` at the final iterate.
    pub slacks: Vec<(Subset, f64)>,
    pub multiplier_point: MultiplierPoint,
}

/// Well-centered iterate used for multipliers and the value gradient.
pub(crate) struct MultiplierPoint {
    pub k: DMatrix<f64>,
    pub mu: f64,
    /// `lambda(S)` for each constraint.
    pub lambdas: Vec<(Subset, f64)>,
}

struct Evaluation {
    phi: f64,
    f: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

/// `(log det A, A^{-1})`, or `None` when `A` is not numerically PD.
fn logdet_inverse(a: &DMatrix<f64>) -> Option<(f64, DMatrix<f64>)> {
    let chol = Cholesky::new(a.clone())?;
    let l = chol.l_dirty();
    let mut ld = 0.0;
    for i in 0..a.nrows() {
        let d = l[(i, i)];
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        ld += 2.0 * d.ln();
    }
    Some((ld, chol.inverse()))
}

fn logdet(a: &DMatrix<f64>) -> Option<f64> {
    let chol = Cholesky::new(a.clone())?;
    let l = chol.l_dirty();
    let mut ld = 0.0;
    for i in 0..a.nrows() {
        let d = l[(i, i)];
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        ld += 2.0 * d.ln();
    }
    Some(ld)
}

fn accumulate(
    vars: &[(usize, usize)],
    w: &DMatrix<f64>,
    weight: f64,
    grad: &mut DVector<f64>,
    hess: &mut DMatrix<f64>,
) {
    for (a, &(r, s)) in vars.iter().enumerate() {
        grad[a] += 2.0 * weight * w[(r, s)];
        for (b, &(t, u)) in vars.iter().enumerate().skip(a) {
            let h = -2.0 * weight * (w[(s, t)] * w[(r, u)] + w[(s, u)] * w[(r, t)]);
            hess[(a, b)] += h;
            if a != b {
                hess[(b, a)] += h;
            }
        }
    }
}

fn accumulate_gradient(vars: &[(usize, usize)], w: &DMatrix<f64>, weight: f64, grad: &mut DVector<f64>) {
    for (a, &(r, s)) in vars.iter().enumerate() {
        grad[a] += 2.0 * weight * w[(r, s)];
    }
}

impl<'a> BarrierProblem<'a> {
    pub(crate) fn new(datum: &'a Datum, marginals: &[PdMatrix], nu: &ConstraintFunction) -> Self {
        let dec = datum.decomposition();
        let blocks: Vec<&DMatrix<f64>> = marginals.iter().map(|m| m.as_matrix()).collect();
        let base = crate::pd::block_diagonal(&blocks);

        let pinned: Vec<Subset> = nu
            .iter()
            .filter(|(_, b)| *b == 0.0)
            .map(|(s, _)| s.clone())
            .collect();
        let free_pair = |i: usize, j: usize| !pinned.iter().any(|s| s.contains(i) && s.contains(j));

        let mut vars = Vec::new();
        for i in 0..dec.k() {
            for j in (i + 1)..dec.k() {
                if !free_pair(i, j) {
                    continue;
                }
                for r in 0..dec.dim(i) {
                    for s in 0..dec.dim(j) {
                        vars.push((dec.offset(i) + r, dec.offset(j) + s));
                    }
                }
            }
        }

        let constraints = nu
            .iter()
            .filter(|(_, b)| *b > 0.0)
            .map(|(s, b)| ConstraintTerm {
                subset: s.clone(),
                coords: dec.coordinates(s),
                nu: b,
                half_marginal_logdet: 0.5
                    * s.indices()
                        .iter()
                        .map(|&i| marginals[i].log_det())
                        .sum::<f64>(),
            })
            .collect();

        Self {
            datum,
            base,
            vars,
            constraints,
            pinned,
        }
    }

    fn matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut k = self.base.clone();
        for (a, &(r, s)) in self.vars.iter().enumerate() {
            k[(r, s)] = x[a];
            k[(s, r)] = x[a];
        }
        k
    }

    fn principal(k: &DMatrix<f64>, coords: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(coords.len(), coords.len(), |a, b| k[(coords[a], coords[b])])
    }

    /// Objective `sum_j d_j log det(B_j K B_j^T)`, `None` outside the domain.
    pub(crate) fn objective(&self, k: &DMatrix<f64>) -> Option<f64> {
        let mut f = 0.0;
        for (b, d) in self.datum.maps().iter().zip(self.datum.d()) {
            f += d * logdet(&(b * k * b.transpose()))?;
        }
        Some(f)
    }

    fn slack(&self, c: &ConstraintTerm, k: &DMatrix<f64>) -> Option<f64> {
        let ld = logdet(&Self::principal(k, &c.coords))?;
        let g = c.nu + 0.5 * ld - c.half_marginal_logdet;
        (g > 0.0).then_some(g)
    }

    fn phi(&self, x: &DVector<f64>, mu: f64) -> Option<f64> {
        let k = self.matrix(x);
        let mut phi = self.objective(&k)? + mu * logdet(&k)?;
        for c in &self.constraints {
            phi += mu * self.slack(c, &k)?.ln();
        }
        Some(phi)
    }

    fn evaluate(&self, x: &DVector<f64>, mu: f64) -> Option<Evaluation> {
        let p = self.vars.len();
        let n = self.base.nrows();
        let k = self.matrix(x);
        let mut grad = DVector::zeros(p);
        let mut hess = DMatrix::zeros(p, p);

        let mut f = 0.0;
        for (b, &d) in self.datum.maps().iter().zip(self.datum.d()) {
            let (ld, inv) = logdet_inverse(&(b * &k * b.transpose()))?;
            f += d * ld;
            let w = b.transpose() * inv * b;
            accumulate(&self.vars, &w, d, &mut grad, &mut hess);
        }
        let (ldk, kinv) = logdet_inverse(&k)?;
        let mut phi = f + mu * ldk;
        accumulate(&self.vars, &kinv, mu, &mut grad, &mut hess);

        for c in &self.constraints {
            let ks = Self::principal(&k, &c.coords);
            let (ld, inv) = logdet_inverse(&ks)?;
            let g = c.nu + 0.5 * ld - c.half_marginal_logdet;
            if !(g > 0.0) {
                return None;
            }
            phi += mu * g.ln();
            let mut w = DMatrix::zeros(n, n);
            for (a, &ra) in c.coords.iter().enumerate() {
                for (b, &rb) in c.coords.iter().enumerate() {
                    w[(ra, rb)] = inv[(a, b)];
                }
            }
            let mut gg = DVector::zeros(p);
            let mut gh = DMatrix::zeros(p, p);
            accumulate(&self.vars, &w, 0.5, &mut gg, &mut gh);
            grad += &gg * (mu / g);
            hess += gh * (mu / g) - (&gg * gg.transpose()) * (mu / (g * g));
        }
        Some(Evaluation { phi, f, grad, hess })
    }

    /// Newton direction for the concave centering objective, solved with a
    /// diagonal rescaling and a ridge fallback.
    fn direction(grad: &DVector<f64>, hess: &DMatrix<f64>) -> Option<DVector<f64>> {
        let p = grad.len();
        let neg = -hess;
        let scale: Vec<f64> = (0..p)
            .map(|i| {
                let d = neg[(i, i)];
                if d > 0.0 && d.is_finite() {
                    1.0 / d.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let scaled = DMatrix::from_fn(p, p, |i, j| neg[(i, j)] * scale[i] * scale[j]);
        let rhs = DVector::from_fn(p, |i, _| grad[i] * scale[i]);
        let mut ridge = 0.0;
        for _ in 0..12 {
            let mut m = scaled.clone();
            for i in 0..p {
                m[(i, i)] += ridge;
            }
            if let Some(chol) = Cholesky::new(m) {
                let y = chol.solve(&rhs);
                let dir = DVector::from_fn(p, |i, _| y[i] * scale[i]);
                if dir.iter().all(|v| v.is_finite()) {
                    return Some(dir);
                }
            }
            ridge = if ridge == 0.0 { 1e-14 } else { ridge * 100.0 };
        }
        None
    }

    /// Newton centering at fixed `mu` until the squared decrement drops below
    /// `target * mu`. Returns whether that happened.
    fn center(
        &self,
        x: &mut DVector<f64>,
        mu: f64,
        target: f64,
        iterations: &mut usize,
        max_iters: usize,
    ) -> bool {
        let mut stalled = 0;
        for _ in 0..MAX_CENTERING_STEPS {
            if *iterations >= max_iters {
                return false;
            }
            let Some(ev) = self.evaluate(x, mu) else {
                return false;
            };
            let Some(dir) = Self::direction(&ev.grad, &ev.hess) else {
                return false;
            };
            let dec2 = ev.grad.dot(&dir);
            if dec2 <= target * mu || dec2 <= 1e-24 {
                return true;
            }
            if dec2 <= ROUNDING_DECREMENT * (1.0 + ev.phi.abs()) {
                // phi no longer resolves the gain; full Newton steps still
                // converge, so only feasibility is checked
                if stalled >= PURE_NEWTON_STEPS {
                    return true;
                }
                let mut t = 1.0;
                while self.phi(&(&*x + &dir * t), mu).is_none() {
                    t *= 0.5;
                    if t < 1e-14 {
                        return true;
                    }
                }
                *x += &dir * t;
                *iterations += 1;
                stalled += 1;
                continue;
            }
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-14 {
                let trial = &*x + &dir * t;
                if let Some(v) = self.phi(&trial, mu) {
                    if v >= ev.phi + ARMIJO * t * dec2 {
                        *x = trial;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            *iterations += 1;
            if !accepted {
                // no further progress is representable at this mu
                return dec2 <= 1e-8 * (1.0 + ev.f.abs());
            }
        }
        false
    }

    fn slacks_at(&self, k: &DMatrix<f64>) -> Vec<(Subset, f64)> {
        self.constraints
            .iter()
            .map(|c| (c.subset.clone(), self.slack(c, k).unwrap_or(0.0)))
            .collect()
    }

    pub(crate) fn solve(&self, opts: &SolverOptions) -> BarrierOutcome {
        let p = self.vars.len();
        let mut x = DVector::zeros(p);
        let barrier_weight = (self.base.nrows() + self.constraints.len()) as f64;
        let mu_final = (opts.tol / barrier_weight).min(MU_START);
        let mut mu = if p == 0 { 0.0 } else { MU_START };
        let mut iterations = 0;
        let mut history = Vec::new();
        let mut converged = p == 0;
        let mut snapshot = None;

        if p > 0 {
            loop {
                let centered =
                    self.center(&mut x, mu, STAGE_CENTERING, &mut iterations, opts.max_iters);
                let last = mu <= mu_final || iterations >= opts.max_iters;
                if snapshot.is_none() && (mu <= MULTIPLIER_MU || last) {
                    snapshot = Some(self.polish(&x, mu));
                }
                history.push(
                    self.objective(&self.matrix(&x))
                        .unwrap_or(f64::NEG_INFINITY),
                );
                if last {
                    converged = centered && mu <= mu_final;
                    break;
                }
                mu = (mu * MU_FACTOR).max(mu_final);
            }
        }

        let k = self.matrix(&x);
        if p == 0 {
            history.push(self.objective(&k).unwrap_or(f64::NEG_INFINITY));
        }
        let slacks = self.slacks_at(&k);
        let multiplier_point = snapshot.unwrap_or_else(|| MultiplierPoint {
            lambdas: self.multipliers_at(&k, mu, &slacks),
            k: k.clone(),
            mu,
        });
        BarrierOutcome {
            k,
            iterations,
            converged,
            history,
            slacks,
            multiplier_point,
        }
    }

    fn polish(&self, x: &DVector<f64>, mu: f64) -> MultiplierPoint {
        let mut polished = x.clone();
        let mut spare = 0;
        self.center(&mut polished, mu, POLISH_CENTERING, &mut spare, MAX_CENTERING_STEPS);
        let k = self.matrix(&polished);
        let slacks = self.slacks_at(&k);
        MultiplierPoint {
            lambdas: self.multipliers_at(&k, mu, &slacks),
            k,
            mu,
        }
    }

    /// `lambda(S) = mu / g_S` on the central path. For tight constraints `g_S`
    /// carries too few significant digits, so their multipliers are fitted to
    /// the stationarity condition instead.
    fn multipliers_at(&self, k: &DMatrix<f64>, mu: f64, slacks: &[(Subset, f64)]) -> Vec<(Subset, f64)> {
        let naive: Vec<(Subset, f64)> = slacks
            .iter()
            .map(|(s, g)| (s.clone(), if *g > 0.0 { mu / g } else { 0.0 }))
            .collect();
        let tight: Vec<usize> = (0..slacks.len()).filter(|&i| slacks[i].1 < TIGHT_SLACK).collect();
        let p = self.vars.len();
        if tight.is_empty() || tight.len() > p {
            return naive;
        }
        let n = self.base.nrows();
        let mut residual = DVector::zeros(p);
        for (b, &d) in self.datum.maps().iter().zip(self.datum.d()) {
            let Some((_, inv)) = logdet_inverse(&(b * k * b.transpose())) else {
                return naive;
            };
            accumulate_gradient(&self.vars, &(b.transpose() * inv * b), d, &mut residual);
        }
        let Some((_, kinv)) = logdet_inverse(k) else {
            return naive;
        };
        accumulate_gradient(&self.vars, &kinv, mu, &mut residual);
        let mut columns = DMatrix::zeros(p, tight.len());
        for (i, c) in self.constraints.iter().enumerate() {
            let Some((_, inv)) = logdet_inverse(&Self::principal(k, &c.coords)) else {
                return naive;
            };
            let mut w = DMatrix::zeros(n, n);
            for (a, &ra) in c.coords.iter().enumerate() {
                for (b, &rb) in c.coords.iter().enumerate() {
                    w[(ra, rb)] = inv[(a, b)];
                }
            }
            let mut gg = DVector::zeros(p);
            accumulate_gradient(&self.vars, &w, 0.5, &mut gg);
            match tight.iter().position(|&t| t == i) {
                Some(col) => columns.set_column(col, &gg),
                None => residual += gg * naive[i].1,
            }
        }
        let Ok(fit) = columns.svd(true, true).solve(&(-residual), 1e-12) else {
            return naive;
        };
        let mut out = naive;
        for (col, &i) in tight.iter().enumerate() {
            if fit[col].is_finite() {
                out[i].1 = fit[col].max(0.0);
            }
        }
        out
    }
}
