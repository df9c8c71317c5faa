//! Frobenius projection onto `{PSD} ∩ {prescribed diagonal blocks}` and the
//! projected-gradient variant of the coupling solver built on it.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{coupling_value, gradient_at, CouplingCovariance, CouplingSolution};
use crate::datum::{check_marginals, Datum, Decomposition};
use crate::error::{Error, Result};
use crate::options::SolverOptions;
use crate::pd::{PdMatrix, SymMatrix};

/// Stop once successive iterates differ by less than this (scaled by the
/// largest diagonal entry when it exceeds one).
pub const PROJECTION_TOL: f64 = 1e-11;
const DEFAULT_PROJ_ITERS: usize = 200_000;

fn project_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    SymMatrix::from_matrix_unchecked(m.clone())
        .map_spectrum(|l| l.max(0.0))
        .into_matrix()
}

fn set_blocks(dec: &Decomposition, marginals: &[PdMatrix], m: &mut DMatrix<f64>) {
    for (i, k) in marginals.iter().enumerate() {
        let (o, n) = (dec.offset(i), dec.dim(i));
        m.view_mut((o, o), (n, n)).copy_from(k.as_matrix());
    }
}

/// Nearest feasible coupling to `m` in Frobenius norm (Dykstra's alternating
/// projections).
pub fn project_feasible(
    dec: &Decomposition,
    marginals: &[PdMatrix],
    m: &SymMatrix,
) -> Result<CouplingCovariance> {
    project_feasible_with(dec, marginals, m, DEFAULT_PROJ_ITERS)
}

pub fn project_feasible_with(
    dec: &Decomposition,
    marginals: &[PdMatrix],
    m: &SymMatrix,
    max_iters: usize,
) -> Result<CouplingCovariance> {
    check_marginals(dec, marginals)?;
    if m.dim() != dec.total() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has dim {}, decomposition has total {}",
            m.dim(),
            dec.total()
        )));
    }
    let scale = marginals
        .iter()
        .map(|k| k.as_sym().max_diagonal())
        .fold(1.0f64, f64::max);
    let tol = PROJECTION_TOL * scale;

    let mut x = m.as_matrix().clone();
    set_blocks(dec, marginals, &mut x);
    let n = x.nrows();
    let mut p = DMatrix::zeros(n, n);
    let mut q = DMatrix::zeros(n, n);
    let mut change = f64::INFINITY;
    for _ in 0..max_iters {
        let y = project_psd(&(&x + &p));
        p = &x + &p - &y;
        let mut next = &y + &q;
        set_blocks(dec, marginals, &mut next);
        q = &y + &q - &next;
        change = (&next - &x).norm();
        let gap = (&next - &y).norm();
        x = next;
        if change < tol && gap < tol {
            let sym = SymMatrix::from_matrix_unchecked(crate::pd::symmetrize(x));
            return CouplingCovariance::new(dec.clone(), marginals, sym);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iters,
        residual: change,
    })
}

/// Projected gradient ascent with Armijo backtracking.
pub(crate) fn projected_gradient(
    datum: &Datum,
    marginals: &[PdMatrix],
    opts: &SolverOptions,
) -> Result<CouplingSolution> {
    let dec = datum.decomposition();
    let mut k = CouplingCovariance::independent(dec, marginals)?;
    let mut f = coupling_value(datum, k.matrix())?;
    let mut history = vec![f];
    let mut t = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    let stationarity_tol = 1e-8;

    while iterations < opts.max_iters {
        iterations += 1;
        let g = gradient_at(datum, k.matrix())?;
        let mut accepted = None;
        while t > 1e-16 {
            let step = k.matrix().add(&g.scale(t));
            let cand = project_feasible_with(dec, marginals, &step, opts.max_proj_iters)?;
            let d = cand.matrix().sub(k.matrix());
            let decrease = g.inner(&d);
            if let Ok(fc) = coupling_value(datum, cand.matrix()) {
                if fc >= f + 1e-4 * decrease {
                    accepted = Some((cand, fc, d.frobenius_norm() / t));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((cand, fc, mapping)) = accepted else {
            break;
        };
        k = cand;
        f = fc;
        history.push(f);
        if mapping < stationarity_tol {
            converged = true;
            break;
        }
        t = (2.0 * t).min(1e6);
    }

    let boundary = k.is_boundary();
    Ok(CouplingSolution {
        optimizer: k,
        value: f,
        multipliers: BTreeMap::new(),
        iterations,
        converged,
        active_constraints: Vec::new(),
        boundary,
        history,
        marginal_gradient: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_marginals() -> (Decomposition, Vec<PdMatrix>) {
        (
            Decomposition::new(vec![1, 1]).unwrap(),
            vec![PdMatrix::identity(1), PdMatrix::identity(1)],
        )
    }

    #[test]
    fn clips_correlation_to_the_psd_boundary() {
        let (dec, marg) = unit_marginals();
        let m = SymMatrix::from_row_slice(2, &[1.0, 3.0, 3.0, 1.0]).unwrap();
        let p = project_feasible(&dec, &marg, &m).unwrap();
        assert!(
            (p.matrix().get(0, 1) - 1.0).abs() < 1e-9,
            "{}",
            p.matrix().get(0, 1)
        );
    }

    #[test]
    fn feasible_input_is_a_fixed_point() {
        let (dec, marg) = unit_marginals();
        let m = SymMatrix::from_row_slice(2, &[1.0, 0.3, 0.3, 1.0]).unwrap();
        let p = project_feasible(&dec, &marg, &m).unwrap();
        assert!((p.matrix().as_matrix() - m.as_matrix()).norm() < 1e-12);
    }

    #[test]
    fn zero_projects_to_independence() {
        let dec = Decomposition::new(vec![1, 2]).unwrap();
        let marg = vec![
            PdMatrix::from_diagonal(&[2.0]).unwrap(),
            PdMatrix::from_row_slice(2, &[2.0, 0.5, 0.5, 1.0]).unwrap(),
        ];
        let p = project_feasible(&dec, &marg, &SymMatrix::zeros(3)).unwrap();
        let ind = CouplingCovariance::independent(&dec, &marg).unwrap();
        assert!((p.matrix().as_matrix() - ind.matrix().as_matrix()).norm() < 1e-12);
    }
}
