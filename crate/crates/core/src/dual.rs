//! Dual of the unconstrained coupling problem:
//!
//! ```text
//! inf  sum_i <U_i, K_i> - sum_j d_j log det V_j
//! s.t. sum_j d_j B_j^T V_j B_j <= diag(U_1, ..., U_k)
//! ```
//!
//! whose value equals the primal maximum plus `sum_j d_j dim E^j`. The solver
//! is a barrier method on the slack, started from a strictly feasible point
//! built from the marginals alone, so it never looks at a primal solution.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::coupling::CouplingSolution;
use crate::datum::{check_marginals, Datum};
use crate::error::{Error, Result};
use crate::options::SolverOptions;
use crate::pd::{block_diagonal, PdMatrix, SymMatrix};

/// Slack eigenvalues above `-SLACK_TOL * max diag(U)` count as feasible.
pub const SLACK_TOL: f64 = 1e-9;
const MU_START: f64 = 1.0;
const MU_FACTOR: f64 = 0.1;
const MAX_CENTERING_STEPS: usize = 200;

/// Dual feasible point `(U, V)` with its value and slack.
#[derive(Debug, Clone)]
pub struct DualCertificate {
    pub u: Vec<PdMatrix>,
    pub v: Vec<PdMatrix>,
    /// `sum_i <U_i, K_i> - sum_j d_j log det V_j`.
    pub value: f64,
    /// `diag(U) - sum_j d_j B_j^T V_j B_j`.
    pub slack: SymMatrix,
    pub iterations: usize,
    pub converged: bool,
}

impl DualCertificate {
    /// Assembles a certificate from explicit `(U, V)`, checking the operator
    /// inequality.
    pub fn from_parts(
        datum: &Datum,
        marginals: &[PdMatrix],
        u: Vec<PdMatrix>,
        v: Vec<PdMatrix>,
    ) -> Result<Self> {
        check_marginals(datum.decomposition(), marginals)?;
        if u.len() != datum.k() || v.len() != datum.m() {
            return Err(Error::DimensionMismatch(format!(
                "certificate has {} U and {} V blocks, datum needs {} and {}",
                u.len(),
                v.len(),
                datum.k(),
                datum.m()
            )));
        }
        for (j, vj) in v.iter().enumerate() {
            if vj.dim() != datum.codomain_dim(j) {
                return Err(Error::DimensionMismatch(format!(
                    "V_{} has the wrong size",
                    j + 1
                )));
            }
        }
        let slack = slack_matrix(datum, &u, &v);
        let scale = u
            .iter()
            .map(|x| x.as_sym().max_diagonal())
            .fold(0.0f64, f64::max);
        let min = slack.min_eigenvalue();
        if min < -SLACK_TOL * scale {
            return Err(Error::InvalidInput(format!(
                "operator inequality violated (slack eigenvalue {min:.3e})"
            )));
        }
        let value = dual_value(datum, marginals, &u, &v);
        Ok(Self {
            u,
            v,
            value,
            slack,
            iterations: 0,
            converged: true,
        })
    }
}

/// `sum_i <U_i, K_i> - sum_j d_j log det V_j` (no feasibility check).
pub fn dual_value(datum: &Datum, marginals: &[PdMatrix], u: &[PdMatrix], v: &[PdMatrix]) -> f64 {
    let lin: f64 = u
        .iter()
        .zip(marginals)
        .map(|(u, k)| u.as_sym().inner(k.as_sym()))
        .sum();
    let ld: f64 = v.iter().zip(datum.d()).map(|(v, d)| d * v.log_det()).sum();
    lin - ld
}

fn slack_matrix(datum: &Datum, u: &[PdMatrix], v: &[PdMatrix]) -> SymMatrix {
    let blocks: Vec<&DMatrix<f64>> = u.iter().map(|x| x.as_matrix()).collect();
    let mut s = block_diagonal(&blocks);
    for ((b, vj), d) in datum.maps().iter().zip(v).zip(datum.d()) {
        s -= b.transpose() * vj.as_matrix() * b * *d;
    }
    SymMatrix::from_matrix_unchecked(crate::pd::symmetrize(s))
}

/// `cert.value - (primal.value + sum_j d_j dim E^j)`.
pub fn duality_gap(datum: &Datum, primal: &CouplingSolution, cert: &DualCertificate) -> f64 {
    cert.value - (primal.value + datum.weighted_codomain_dim())
}

/// Symmetric unit `e_p e_q^T + e_q e_p^T` (or `e_p e_p^T`).
fn sym_unit(n: usize, p: usize, q: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(n, n);
    e[(p, q)] = 1.0;
    e[(q, p)] = 1.0;
    e
}

enum Var {
    U { block: usize, p: usize, q: usize },
    V { map: usize, p: usize, q: usize },
}

struct DualProblem<'a> {
    datum: &'a Datum,
    marginals: &'a [PdMatrix],
    vars: Vec<Var>,
    /// Linear objective coefficients.
    cost: DVector<f64>,
    /// Direction of the slack for each variable.
    slack_dirs: Vec<DMatrix<f64>>,
}

impl<'a> DualProblem<'a> {
    fn new(datum: &'a Datum, marginals: &'a [PdMatrix]) -> Self {
        let dec = datum.decomposition();
        let n = dec.total();
        let mut vars = Vec::new();
        let mut cost = Vec::new();
        let mut slack_dirs = Vec::new();
        for i in 0..dec.k() {
            let ni = dec.dim(i);
            for p in 0..ni {
                for q in p..ni {
                    vars.push(Var::U { block: i, p, q });
                    let e = sym_unit(ni, p, q);
                    cost.push(SymMatrix::from_matrix_unchecked(e).inner(marginals[i].as_sym()));
                    slack_dirs.push(sym_unit(n, dec.offset(i) + p, dec.offset(i) + q));
                }
            }
        }
        for (j, b) in datum.maps().iter().enumerate() {
            let r = b.nrows();
            for p in 0..r {
                for q in p..r {
                    vars.push(Var::V { map: j, p, q });
                    cost.push(0.0);
                    slack_dirs.push(-(b.transpose() * sym_unit(r, p, q) * b) * datum.d()[j]);
                }
            }
        }
        Self {
            datum,
            marginals,
            vars,
            cost: DVector::from_vec(cost),
            slack_dirs,
        }
    }

    fn unpack(&self, y: &DVector<f64>) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
        let dec = self.datum.decomposition();
        let mut u: Vec<DMatrix<f64>> = (0..dec.k())
            .map(|i| DMatrix::zeros(dec.dim(i), dec.dim(i)))
            .collect();
        let mut v: Vec<DMatrix<f64>> = (0..self.datum.m())
            .map(|j| DMatrix::zeros(self.datum.codomain_dim(j), self.datum.codomain_dim(j)))
            .collect();
        for (a, var) in self.vars.iter().enumerate() {
            let (m, p, q) = match *var {
                Var::U { block, p, q } => (&mut u[block], p, q),
                Var::V { map, p, q } => (&mut v[map], p, q),
            };
            m[(p, q)] = y[a];
            m[(q, p)] = y[a];
        }
        (u, v)
    }

    fn pack(&self, u: &[DMatrix<f64>], v: &[DMatrix<f64>]) -> DVector<f64> {
        DVector::from_iterator(
            self.vars.len(),
            self.vars.iter().map(|var| match *var {
                Var::U { block, p, q } => u[block][(p, q)],
                Var::V { map, p, q } => v[map][(p, q)],
            }),
        )
    }

    fn slack(&self, u: &[DMatrix<f64>], v: &[DMatrix<f64>]) -> DMatrix<f64> {
        let blocks: Vec<&DMatrix<f64>> = u.iter().collect();
        let mut s = block_diagonal(&blocks);
        for ((b, vj), d) in self.datum.maps().iter().zip(v).zip(self.datum.d()) {
            s -= b.transpose() * vj * b * *d;
        }
        s
    }

    /// Centering objective `cost.y - sum_j d_j log det V_j - mu log det S`.
    fn psi(&self, y: &DVector<f64>, mu: f64) -> Option<f64> {
        let (u, v) = self.unpack(y);
        let mut val = self.cost.dot(y);
        for (vj, d) in v.iter().zip(self.datum.d()) {
            val -= d * logdet(vj)?;
        }
        val -= mu * logdet(&self.slack(&u, &v))?;
        Some(val)
    }

    fn gradient_hessian(
        &self,
        y: &DVector<f64>,
        mu: f64,
    ) -> Option<(f64, DVector<f64>, DMatrix<f64>)> {
        let nv = self.vars.len();
        let (u, v) = self.unpack(y);
        let mut val = self.cost.dot(y);
        let mut grad = self.cost.clone();
        let mut hess = DMatrix::zeros(nv, nv);

        // -d_j log det V_j
        for (j, (vj, d)) in v.iter().zip(self.datum.d()).enumerate() {
            let chol = Cholesky::new(vj.clone())?;
            val -= d * chol_logdet(&chol)?;
            let inv = chol.inverse();
            let idx: Vec<usize> = (0..nv)
                .filter(|&a| matches!(self.vars[a], Var::V { map, .. } if map == j))
                .collect();
            let r = vj.nrows();
            let ms: Vec<DMatrix<f64>> = idx
                .iter()
                .map(|&a| match self.vars[a] {
                    Var::V { p, q, .. } => &inv * sym_unit(r, p, q),
                    Var::U { .. } => unreachable!(),
                })
                .collect();
            for (x, &a) in idx.iter().enumerate() {
                grad[a] -= d * ms[x].trace();
                for (z, &b) in idx.iter().enumerate().skip(x) {
                    let h = d * trace_product(&ms[x], &ms[z]);
                    hess[(a, b)] += h;
                    if a != b {
                        hess[(b, a)] += h;
                    }
                }
            }
        }

        // -mu log det S
        let s = self.slack(&u, &v);
        let chol = Cholesky::new(s)?;
        val -= mu * chol_logdet(&chol)?;
        let inv = chol.inverse();
        let ms: Vec<DMatrix<f64>> = self.slack_dirs.iter().map(|e| &inv * e).collect();
        for a in 0..nv {
            grad[a] -= mu * ms[a].trace();
            for b in a..nv {
                let h = mu * trace_product(&ms[a], &ms[b]);
                hess[(a, b)] += h;
                if a != b {
                    hess[(b, a)] += h;
                }
            }
        }
        Some((val, grad, hess))
    }

    /// Strictly feasible start: `V_j = (B_j D B_j^T)^{-1}` with
    /// `D = diag(K_i)`, and `U_i = G_ii + t K_i^{-1}` where `G` is the
    /// implied operator and `t` exceeds the top eigenvalue of
    /// `D^{1/2} offdiag(G) D^{1/2}`.
    fn start(&self) -> DVector<f64> {
        let dec = self.datum.decomposition();
        let blocks: Vec<&DMatrix<f64>> = self.marginals.iter().map(|m| m.as_matrix()).collect();
        let d = block_diagonal(&blocks);
        let v: Vec<DMatrix<f64>> = self
            .datum
            .maps()
            .iter()
            .map(|b| {
                PdMatrix::new(b * &d * b.transpose())
                    .expect("surjective maps push a PD matrix forward to a PD matrix")
                    .inverse()
                    .as_matrix()
                    .clone()
            })
            .collect();
        let mut g = DMatrix::zeros(dec.total(), dec.total());
        for ((b, vj), dj) in self.datum.maps().iter().zip(&v).zip(self.datum.d()) {
            g += b.transpose() * vj * b * *dj;
        }
        let mut off = g.clone();
        for i in 0..dec.k() {
            let (o, n) = (dec.offset(i), dec.dim(i));
            off.view_mut((o, o), (n, n)).fill(0.0);
        }
        let roots: Vec<DMatrix<f64>> = self
            .marginals
            .iter()
            .map(|m| m.sqrt().as_matrix().clone())
            .collect();
        let root_refs: Vec<&DMatrix<f64>> = roots.iter().collect();
        let droot = block_diagonal(&root_refs);
        let t = SymMatrix::from_matrix_unchecked(crate::pd::symmetrize(&droot * off * &droot))
            .max_eigenvalue()
            .max(0.0)
            + 1.0;
        let u: Vec<DMatrix<f64>> = (0..dec.k())
            .map(|i| {
                let (o, n) = (dec.offset(i), dec.dim(i));
                g.view((o, o), (n, n)).into_owned() + self.marginals[i].inverse().as_matrix() * t
            })
            .collect();
        self.pack(&u, &v)
    }
}

fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    // tr(A B) = sum_{pq} A[p,q] B[q,p]
    let n = a.nrows();
    let mut s = 0.0;
    for p in 0..n {
        for q in 0..n {
            s += a[(p, q)] * b[(q, p)];
        }
    }
    s
}

fn chol_logdet(chol: &Cholesky<f64, nalgebra::Dyn>) -> Option<f64> {
    let l = chol.l_dirty();
    let mut ld = 0.0;
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        ld += 2.0 * d.ln();
    }
    Some(ld)
}

fn logdet(m: &DMatrix<f64>) -> Option<f64> {
    chol_logdet(&Cholesky::new(m.clone())?)
}

fn newton_direction(grad: &DVector<f64>, hess: &DMatrix<f64>) -> Option<DVector<f64>> {
    let p = grad.len();
    let scale: Vec<f64> = (0..p)
        .map(|i| {
            let d = hess[(i, i)];
            if d > 0.0 && d.is_finite() {
                1.0 / d.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let scaled = DMatrix::from_fn(p, p, |i, j| hess[(i, j)] * scale[i] * scale[j]);
    let rhs = DVector::from_fn(p, |i, _| -grad[i] * scale[i]);
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

/// Minimizes the dual objective. A run that exhausts its budget still
/// returns the best feasible certificate, with `converged = false`.
pub fn solve_dual(
    datum: &Datum,
    marginals: &[PdMatrix],
    opts: &SolverOptions,
) -> Result<DualCertificate> {
    check_marginals(datum.decomposition(), marginals)?;
    datum.check_surjective()?;
    let problem = DualProblem::new(datum, marginals);
    let mut y = problem.start();
    let n = datum.decomposition().total() as f64;
    let mu_final = (opts.tol / n).min(MU_START);
    let mut mu = MU_START;
    let mut iterations = 0;
    let mut converged = false;

    'outer: loop {
        let mut centered = false;
        for _ in 0..MAX_CENTERING_STEPS {
            if iterations >= opts.max_iters {
                break 'outer;
            }
            let Some((val, grad, hess)) = problem.gradient_hessian(&y, mu) else {
                break;
            };
            let Some(dir) = newton_direction(&grad, &hess) else {
                break;
            };
            let dec2 = -grad.dot(&dir);
            if dec2 <= 1e-2 * mu || dec2 <= 1e-24 {
                centered = true;
                break;
            }
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-14 {
                let trial = &y + &dir * t;
                if let Some(v) = problem.psi(&trial, mu) {
                    if v <= val - 0.25 * t * dec2 {
                        y = trial;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            iterations += 1;
            if !accepted {
                centered = dec2 <= 1e-8 * (1.0 + val.abs());
                break;
            }
        }
        if mu <= mu_final {
            converged = centered;
            break;
        }
        mu = (mu * MU_FACTOR).max(mu_final);
    }

    let (u, v) = problem.unpack(&y);
    let to_pd = |m: DMatrix<f64>| {
        PdMatrix::new(m).map_err(|_| Error::NoConvergence {
            iterations,
            residual: f64::NAN,
        })
    };
    let u: Vec<PdMatrix> = u.into_iter().map(to_pd).collect::<Result<_>>()?;
    let v: Vec<PdMatrix> = v.into_iter().map(to_pd).collect::<Result<_>>()?;
    let slack = slack_matrix(datum, &u, &v);
    let value = dual_value(datum, marginals, &u, &v);
    Ok(DualCertificate {
        u,
        v,
        value,
        slack,
        iterations,
        converged,
    })
}
