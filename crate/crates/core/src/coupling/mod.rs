//! Maximum log-det couplings: maximize `sum_j d_j log det(B_j K B_j^T)` over
//! covariances `K` with prescribed diagonal blocks, optionally under bounds on
//! S-correlations.

mod barrier;
mod projection;

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::datum::{
    check_marginals, s_correlation_gaussian, ConstraintFunction, Datum, Decomposition, Subset,
};
use crate::error::{Error, Result};
use crate::options::{Method, SolverOptions};
use crate::pd::{block_diagonal, cholesky, PdMatrix, SymMatrix};

pub use projection::project_feasible;

use barrier::BarrierProblem;

/// PSD tolerance relative to the largest diagonal entry.
pub const PSD_TOL: f64 = 1e-10;
/// Iterates whose smallest eigenvalue (relative to the largest diagonal
/// entry) falls below this are flagged as boundary points.
pub const BOUNDARY_TOL: f64 = 1e-6;
/// Constraints with slack `nu(S) - I_S` below this are reported active.
pub const ACTIVE_TOL: f64 = 1e-6;

/// A covariance on `E_0` whose diagonal blocks are the prescribed marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingCovariance {
    decomposition: Decomposition,
    matrix: SymMatrix,
}

impl CouplingCovariance {
    /// Validates that the blocks equal `marginals` exactly and that the
    /// matrix is PSD up to `PSD_TOL`.
    pub fn new(
        decomposition: Decomposition,
        marginals: &[PdMatrix],
        matrix: SymMatrix,
    ) -> Result<Self> {
        check_marginals(&decomposition, marginals)?;
        if matrix.dim() != decomposition.total() {
            return Err(Error::DimensionMismatch(format!(
                "coupling has dim {}, decomposition has total {}",
                matrix.dim(),
                decomposition.total()
            )));
        }
        for (i, m) in marginals.iter().enumerate() {
            if decomposition.block(&matrix, i).as_matrix() != m.as_matrix() {
                return Err(Error::InvalidInput(format!(
                    "block {} differs from its marginal",
                    i + 1
                )));
            }
        }
        let floor = -PSD_TOL * matrix.max_diagonal();
        let min = matrix.min_eigenvalue();
        if min < floor {
            return Err(Error::NotPositiveDefinite {
                index: 0,
                pivot: min,
            });
        }
        Ok(Self {
            decomposition,
            matrix,
        })
    }

    /// The independent coupling `blockdiag(K_1, ..., K_k)`.
    pub fn independent(decomposition: &Decomposition, marginals: &[PdMatrix]) -> Result<Self> {
        check_marginals(decomposition, marginals)?;
        let blocks: Vec<&DMatrix<f64>> = marginals.iter().map(|m| m.as_matrix()).collect();
        Ok(Self {
            decomposition: decomposition.clone(),
            matrix: SymMatrix::from_matrix_unchecked(block_diagonal(&blocks)),
        })
    }

    pub(crate) fn from_parts_unchecked(decomposition: Decomposition, matrix: SymMatrix) -> Self {
        Self {
            decomposition,
            matrix,
        }
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomposition
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn block(&self, i: usize) -> SymMatrix {
        self.decomposition.block(&self.matrix, i)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix.min_eigenvalue()
    }

    /// `I_S(K)`.
    pub fn s_correlation(&self, subset: &Subset) -> f64 {
        s_correlation_gaussian(&self.decomposition, &self.matrix, subset)
    }

    /// Smallest eigenvalue relative to the largest diagonal entry is below
    /// `BOUNDARY_TOL`.
    pub fn is_boundary(&self) -> bool {
        self.min_eigenvalue() < BOUNDARY_TOL * self.matrix.max_diagonal()
    }
}

/// Result of [`max_coupling`].
#[derive(Debug, Clone)]
pub struct CouplingSolution {
    pub optimizer: CouplingCovariance,
    /// `sum_j d_j log det(B_j K B_j^T)` at the optimizer.
    pub value: f64,
    /// `lambda(S)` for every constraint with a positive finite bound.
    pub multipliers: BTreeMap<Subset, f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Constraints holding with equality (those with `nu(S) = 0` always do).
    pub active_constraints: Vec<Subset>,
    /// The optimizer is singular up to `BOUNDARY_TOL`.
    pub boundary: bool,
    /// Objective value after each outer stage; non-decreasing.
    pub history: Vec<f64>,
    /// Gradient of the optimal value with respect to each marginal `K_i`
    /// (barrier method only).
    pub marginal_gradient: Option<Vec<SymMatrix>>,
}

/// `sum_j d_j log det(B_j K B_j^T)`.
pub fn coupling_value(datum: &Datum, k: &SymMatrix) -> Result<f64> {
    let mut v = 0.0;
    for (j, (b, d)) in datum.maps().iter().zip(datum.d()).enumerate() {
        let l = cholesky(&(b * k.as_matrix() * b.transpose()))
            .map_err(|_| Error::SingularPushforward { index: j + 1 })?;
        v += d * 2.0 * l.diagonal().iter().map(|x| x.ln()).sum::<f64>();
    }
    Ok(v)
}

/// `sum_j d_j B_j^T (B_j K B_j^T)^{-1} B_j`.
pub fn objective_gradient(datum: &Datum, k: &CouplingCovariance) -> Result<SymMatrix> {
    gradient_at(datum, k.matrix())
}

pub(crate) fn gradient_at(datum: &Datum, k: &SymMatrix) -> Result<SymMatrix> {
    let n = k.dim();
    let mut g = DMatrix::zeros(n, n);
    for (j, (b, d)) in datum.maps().iter().zip(datum.d()).enumerate() {
        let push = PdMatrix::from_sym(k.congruence(b))
            .map_err(|_| Error::SingularPushforward { index: j + 1 })?;
        let inv = push.inverse();
        g += (b.transpose() * inv.as_matrix() * b) * *d;
    }
    Ok(SymMatrix::from_matrix_unchecked(g))
}

fn check_inputs(datum: &Datum, marginals: &[PdMatrix]) -> Result<()> {
    check_marginals(datum.decomposition(), marginals)?;
    datum.check_surjective()
}

/// Maximizes `sum_j d_j log det(B_j K B_j^T)` over couplings of `marginals`
/// satisfying `I_S(K) <= nu(S)`.
pub fn max_coupling(
    datum: &Datum,
    marginals: &[PdMatrix],
    nu: &ConstraintFunction,
    opts: &SolverOptions,
) -> Result<CouplingSolution> {
    check_inputs(datum, marginals)?;
    if let Some((s, _)) = nu
        .iter()
        .find(|(s, _)| s.indices().iter().any(|&i| i >= datum.k()))
    {
        return Err(Error::InvalidInput(format!(
            "constraint subset {s} exceeds k = {}",
            datum.k()
        )));
    }
    match opts.method {
        Method::Barrier => solve_barrier(datum, marginals, nu, opts),
        Method::ProjectedGradient => {
            if !nu.is_unconstrained() {
                return Err(Error::InvalidInput(
                    "projected gradient handles unconstrained couplings only".into(),
                ));
            }
            projection::projected_gradient(datum, marginals, opts)
        }
    }
}

fn solve_barrier(
    datum: &Datum,
    marginals: &[PdMatrix],
    nu: &ConstraintFunction,
    opts: &SolverOptions,
) -> Result<CouplingSolution> {
    let dec = datum.decomposition().clone();
    let problem = BarrierProblem::new(datum, marginals, nu);
    let out = problem.solve(opts);
    let k = SymMatrix::from_matrix_unchecked(out.k);
    let value = coupling_value(datum, &k)?;

    let mut active: Vec<Subset> = problem.pinned.clone();
    for (s, g) in &out.slacks {
        if *g < ACTIVE_TOL {
            active.push(s.clone());
        }
    }
    active.sort();

    // multipliers and the value gradient come from a well-centered iterate:
    //   U_i = [G + mu K^{-1}]_ii + sum_{S containing i} lambda(S) (1/2 [K_S^{-1}]_ii - 1/2 K_i^{-1})
    let (multipliers, marginal_gradient) = read_multipliers(datum, marginals, &out.multiplier_point)?;

    let optimizer = CouplingCovariance::from_parts_unchecked(dec, k);
    let boundary = optimizer.is_boundary();
    Ok(CouplingSolution {
        optimizer,
        value,
        multipliers,
        iterations: out.iterations,
        converged: out.converged,
        active_constraints: active,
        boundary,
        history: out.history,
        marginal_gradient,
    })
}

/// Multipliers and the gradient of the optimal value in each marginal,
/// read off a centered barrier iterate.
fn read_multipliers(
    datum: &Datum,
    marginals: &[PdMatrix],
    point: &barrier::MultiplierPoint,
) -> Result<(BTreeMap<Subset, f64>, Option<Vec<SymMatrix>>)> {
    let dec = datum.decomposition();
    let multipliers: BTreeMap<Subset, f64> = point.lambdas.iter().cloned().collect();
    let km = SymMatrix::from_matrix_unchecked(point.k.clone());
    let g = gradient_at(datum, &km)?;
    let kinv = nalgebra::Cholesky::new(point.k.clone()).map(|c| c.inverse());
    let marginal_gradient = kinv.map(|kinv| {
        let full = g.as_matrix() + kinv * point.mu;
        (0..dec.k())
            .map(|i| {
                let (o, n) = (dec.offset(i), dec.dim(i));
                let mut u = full.view((o, o), (n, n)).into_owned();
                for (s, &lambda) in &multipliers {
                    if !s.contains(i) || lambda == 0.0 {
                        continue;
                    }
                    let coords = dec.coordinates(s);
                    let ks = km.principal(&coords);
                    if let Some(ch) = nalgebra::Cholesky::new(ks.as_matrix().clone()) {
                        let inv = ch.inverse();
                        let pos = coords.iter().position(|&c| c == o).expect("block inside subset");
                        let local = inv.view((pos, pos), (n, n)).into_owned();
                        u += (local - marginals[i].inverse().as_matrix()) * (0.5 * lambda);
                    }
                }
                SymMatrix::from_matrix_unchecked(crate::pd::symmetrize(u))
            })
            .collect()
    });
    Ok((multipliers, marginal_gradient))
}

/// Optimal value only.
pub fn max_coupling_value(
    datum: &Datum,
    marginals: &[PdMatrix],
    nu: &ConstraintFunction,
    opts: &SolverOptions,
) -> Result<f64> {
    Ok(max_coupling(datum, marginals, nu, opts)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datum::scalar_sum_datum;

    fn scalars(v: &[f64]) -> Vec<PdMatrix> {
        v.iter()
            .map(|&x| PdMatrix::from_diagonal(&[x]).unwrap())
            .collect()
    }

    #[test]
    fn scalar_sum_unconstrained_is_perfect_correlation() {
        let datum = scalar_sum_datum([0.5, 0.5]);
        let sol = max_coupling(
            &datum,
            &scalars(&[1.0, 4.0]),
            &ConstraintFunction::unconstrained(),
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(sol.converged);
        assert!((sol.value - 9f64.ln()).abs() < 1e-8, "{}", sol.value);
        assert!((sol.optimizer.matrix().get(0, 1) - 2.0).abs() < 1e-6);
        assert!(sol.boundary);
        for w in sol.history.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn scalar_sum_with_correlation_bound() {
        let datum = scalar_sum_datum([0.5, 0.5]);
        let nu = ConstraintFunction::total_correlation(2, 0.5 * 2f64.ln()).unwrap();
        let sol = max_coupling(
            &datum,
            &scalars(&[1.0, 4.0]),
            &nu,
            &SolverOptions::default(),
        )
        .unwrap();
        let expected = (5.0 + 2.0 * 2f64.sqrt()).ln();
        assert!(
            (sol.value - expected).abs() < 1e-8,
            "{} vs {}",
            sol.value,
            expected
        );
        assert!((sol.optimizer.matrix().get(0, 1) - 2f64.sqrt()).abs() < 1e-6);
        assert_eq!(sol.active_constraints, vec![Subset::full(2)]);
        assert!(sol.multipliers[&Subset::full(2)] > 0.0);
    }

    #[test]
    fn identity_map_prefers_independence() {
        let datum = Datum::from_parts(
            vec![1, 1],
            vec![0.5, 0.5],
            vec![0.5],
            vec![DMatrix::identity(2, 2)],
        )
        .unwrap();
        let sol = max_coupling(
            &datum,
            &scalars(&[1.0, 1.0]),
            &ConstraintFunction::unconstrained(),
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(sol.value.abs() < 1e-10);
        assert!(sol.optimizer.matrix().get(0, 1).abs() < 1e-8);
    }

    #[test]
    fn independent_constraint_pins_cross_blocks() {
        let datum = scalar_sum_datum([0.5, 0.5]);
        let sol = max_coupling(
            &datum,
            &scalars(&[1.0, 4.0]),
            &ConstraintFunction::independent(2),
            &SolverOptions::default(),
        )
        .unwrap();
        assert!((sol.value - 5f64.ln()).abs() < 1e-14);
        assert_eq!(sol.active_constraints, vec![Subset::full(2)]);
    }

    #[test]
    fn gradient_examples() {
        let datum = Datum::from_parts(
            vec![1, 1],
            vec![0.5, 0.5],
            vec![0.7],
            vec![DMatrix::identity(2, 2)],
        )
        .unwrap();
        let dec = datum.decomposition().clone();
        let k = CouplingCovariance::independent(&dec, &scalars(&[1.0, 1.0])).unwrap();
        let g = objective_gradient(&datum, &k).unwrap();
        assert!((g.as_matrix() - DMatrix::identity(2, 2) * 0.7).norm() < 1e-15);

        let singular = CouplingCovariance::from_parts_unchecked(
            dec.clone(),
            SymMatrix::from_row_slice(2, &[1.0, -1.0, -1.0, 1.0]).unwrap(),
        );
        let sum = scalar_sum_datum([0.5, 0.5]);
        assert_eq!(
            objective_gradient(&sum, &singular).unwrap_err(),
            Error::SingularPushforward { index: 1 }
        );
    }

    #[test]
    fn rejects_rank_deficient_maps() {
        let datum = Datum::from_parts(
            vec![1, 1],
            vec![0.5, 0.5],
            vec![1.0],
            vec![DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])],
        )
        .unwrap();
        let err = max_coupling(
            &datum,
            &scalars(&[1.0, 1.0]),
            &ConstraintFunction::unconstrained(),
            &SolverOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::NonSurjectiveMap {
                index: 1,
                rank: 1,
                rows: 2
            }
        ));
    }
}
