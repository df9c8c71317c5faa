//! Seeded random generators for matrices and data, shared by the randomized
//! checks, the examples and the test suites.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::pd::{PdMatrix, SymMatrix};

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// `cols` orthonormal columns in `R^rows` (Gram-Schmidt on a Gaussian draw).
pub fn random_orthonormal<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    assert!(
        cols <= rows,
        "cannot draw {cols} orthonormal vectors in R^{rows}"
    );
    loop {
        let g = gaussian_matrix(rng, rows, cols);
        let mut q = DMatrix::<f64>::zeros(rows, cols);
        let mut ok = true;
        for j in 0..cols {
            let mut v = g.column(j).into_owned();
            // two passes keep the basis orthonormal to working precision
            for _ in 0..2 {
                for k in 0..j {
                    let proj = q.column(k).dot(&v);
                    v -= q.column(k) * proj;
                }
            }
            let norm = v.norm();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            q.set_column(j, &(v / norm));
        }
        if ok {
            return q;
        }
    }
}

/// Random PD matrix `Q diag(lambda) Q^T` with eigenvalues log-uniform in
/// `[1/sqrt(cond), sqrt(cond)]`.
pub fn random_pd<R: Rng + ?Sized>(rng: &mut R, n: usize, cond: f64) -> PdMatrix {
    let q = random_orthonormal(rng, n, n);
    let half = 0.5 * cond.max(1.0).ln();
    let lambdas: Vec<f64> = (0..n)
        .map(|_| rng.random_range(-half..=half).exp())
        .collect();
    let d = SymMatrix::from_diagonal(&lambdas);
    PdMatrix::from_sym(d.congruence(&q)).expect("random_pd produces a PD matrix")
}

/// Random PSD matrix of the given rank (`G G^T` with `G` Gaussian `n x rank`).
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> SymMatrix {
    let g = gaussian_matrix(rng, n, rank);
    SymMatrix::new(&g * g.transpose()).expect("square by construction")
}
