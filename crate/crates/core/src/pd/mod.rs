//! Dense symmetric and positive-definite matrices.
//!
//! [`SymMatrix`] holds an element of `sym(E)`; [`PdMatrix`] adds a cached
//! Cholesky factor and is the only way into the PD cone, so every function
//! taking a `PdMatrix` can rely on positive definiteness. Fractional powers,
//! logarithms and exponentials all go through the Jacobi spectrum.
//!
//! The affine-invariant geometry lives here as well: weighted geometric means
//! `A #_t B`, the distance `delta2`, and the exponential/logarithm maps used by
//! the Riemannian solvers.

mod jacobi;

pub use jacobi::{eigh, Spectrum, JACOBI_TOL};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
pub(crate) use jacobi::symmetrize;

/// Cholesky pivots below this fraction of the largest diagonal entry are
/// treated as zero.
pub const PIVOT_TOL: f64 = 1e-12;

/// A symmetric matrix, stored fully and symmetrized on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidInput("matrix dimension must be >= 1".into()));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(Self { m: symmetrize(m) })
    }

    /// Builds from a square matrix that is known to be valid.
    pub(crate) fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self { m: symmetrize(m) }
    }

    pub fn from_row_slice(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: DMatrix::zeros(n, n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            m: DMatrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 }),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn eigen(&self) -> Spectrum {
        eigh(&self.m)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().min()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigen().max()
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.m[(i, i)])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    /// Hilbert-Schmidt inner product `tr(A B)`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        self.m.dot(&other.m)
    }

    pub fn scale(&self, alpha: f64) -> SymMatrix {
        Self { m: &self.m * alpha }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        Self {
            m: &self.m + &other.m,
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        Self {
            m: &self.m - &other.m,
        }
    }

    /// `C A C^T` for any (possibly rectangular) `C`.
    pub fn congruence(&self, c: &DMatrix<f64>) -> SymMatrix {
        assert_eq!(c.ncols(), self.dim(), "congruence: column mismatch");
        Self::from_matrix_unchecked(c * &self.m * c.transpose())
    }

    /// Principal submatrix on the contiguous index range `offset..offset+size`.
    pub fn block(&self, offset: usize, size: usize) -> SymMatrix {
        Self {
            m: self.m.view((offset, offset), (size, size)).into_owned(),
        }
    }

    /// Principal submatrix on an arbitrary sorted index set.
    pub fn principal(&self, indices: &[usize]) -> SymMatrix {
        let n = indices.len();
        Self {
            m: DMatrix::from_fn(n, n, |i, j| self.m[(indices[i], indices[j])]),
        }
    }

    /// Applies a scalar function to the spectrum.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        Self::from_matrix_unchecked(self.eigen().reconstruct_with(f))
    }

    /// Matrix exponential; always positive definite.
    pub fn expm(&self) -> PdMatrix {
        let s = self.eigen();
        let m = s.reconstruct_with(f64::exp);
        PdMatrix::from_sym(Self::from_matrix_unchecked(m))
            .expect("exponential of a symmetric matrix is positive definite")
    }

    pub fn to_pd(&self) -> Result<PdMatrix> {
        PdMatrix::from_sym(self.clone())
    }
}

/// Lower-triangular Cholesky factor with the relative pivot test.
pub fn cholesky(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let max_diag = (0..n).map(|i| m[(i, i)]).fold(0.0f64, f64::max);
    let floor = PIVOT_TOL * max_diag;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) || d <= 0.0 {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L X = B` for lower-triangular `L`.
fn forward_substitute(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for c in 0..b.ncols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

/// Solves `L^T X = B` for lower-triangular `L`.
fn backward_substitute(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for c in 0..b.ncols() {
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

/// A symmetric positive-definite matrix with its Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct PdMatrix {
    base: SymMatrix,
    chol: DMatrix<f64>,
}

impl PdMatrix {
    pub fn from_sym(base: SymMatrix) -> Result<Self> {
        let chol = cholesky(base.as_matrix())?;
        Ok(Self { base, chol })
    }

    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        Self::from_sym(SymMatrix::new(m)?)
    }

    pub fn from_row_slice(n: usize, entries: &[f64]) -> Result<Self> {
        Self::from_sym(SymMatrix::from_row_slice(n, entries)?)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            base: SymMatrix::identity(n),
            chol: DMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_sym(SymMatrix::from_diagonal(diag))
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.base
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        self.base.as_matrix()
    }

    pub fn cholesky(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.diagonal().iter().map(|x| x.ln()).sum::<f64>()
    }

    pub fn det(&self) -> f64 {
        self.log_det().exp()
    }

    /// Solves `A X = B`.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        backward_substitute(&self.chol, &forward_substitute(&self.chol, b))
    }

    pub fn inverse(&self) -> PdMatrix {
        let n = self.dim();
        let inv = self.solve(&DMatrix::identity(n, n));
        PdMatrix::new(inv).expect("inverse of a PD matrix is PD")
    }

    pub fn scale(&self, alpha: f64) -> Result<PdMatrix> {
        PdMatrix::from_sym(self.base.scale(alpha))
    }

    /// `A^t` through the spectrum.
    pub fn pow(&self, t: f64) -> PdMatrix {
        if t == 1.0 {
            return self.clone();
        }
        let m = self.base.eigen().reconstruct_with(|x| x.powf(t));
        PdMatrix::from_sym(SymMatrix::from_matrix_unchecked(m)).expect("power of a PD matrix is PD")
    }

    pub fn sqrt(&self) -> PdMatrix {
        self.pow(0.5)
    }

    pub fn inv_sqrt(&self) -> PdMatrix {
        self.pow(-0.5)
    }

    /// Principal matrix logarithm.
    pub fn logm(&self) -> SymMatrix {
        self.base.map_spectrum(f64::ln)
    }

    /// `C A C^T`; fails when the result is not PD (e.g. rank-deficient `C`).
    pub fn congruence(&self, c: &DMatrix<f64>) -> Result<PdMatrix> {
        PdMatrix::from_sym(self.base.congruence(c))
    }

    /// Weighted geometric mean `A #_t B = A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}`.
    pub fn geometric_mean(&self, other: &PdMatrix, t: f64) -> PdMatrix {
        geometric_mean(self, other, t)
    }

    pub fn delta2(&self, other: &PdMatrix) -> f64 {
        delta2(self, other)
    }
}

pub fn log_det(a: &PdMatrix) -> f64 {
    a.log_det()
}

pub fn sqrt_pd(a: &PdMatrix) -> PdMatrix {
    a.sqrt()
}

fn assert_same_dim(a: &PdMatrix, b: &PdMatrix) {
    assert_eq!(a.dim(), b.dim(), "PD matrices must have the same dimension");
}

/// Point at parameter `t` on the affine-invariant geodesic from `a` to `b`.
pub fn geometric_mean(a: &PdMatrix, b: &PdMatrix, t: f64) -> PdMatrix {
    assert_same_dim(a, b);
    if t == 0.0 {
        return a.clone();
    }
    if t == 1.0 {
        return b.clone();
    }
    let s = a.sqrt();
    let si = a.inv_sqrt();
    let inner = b.as_sym().congruence(si.as_matrix());
    let powered = inner.map_spectrum(|x| x.max(0.0).powf(t));
    PdMatrix::from_sym(powered.congruence(s.as_matrix())).expect("geodesic point is PD")
}

fn delta2_oriented(a: &PdMatrix, b: &PdMatrix) -> f64 {
    // eigenvalues of A^{-1}B equal those of L^{-1} B L^{-T}
    let l = a.cholesky();
    let x = forward_substitute(l, b.as_matrix());
    let w = forward_substitute(l, &x.transpose());
    let spec = eigh(&symmetrize(w));
    spec.eigenvalues
        .iter()
        .map(|&lam| {
            let g = lam.ln();
            g * g
        })
        .sum::<f64>()
        .sqrt()
}

/// Affine-invariant distance `(sum_i log^2 lambda_i(A^{-1} B))^{1/2}`.
///
/// Both orientations are evaluated and averaged so the result is exactly
/// symmetric in its arguments.
pub fn delta2(a: &PdMatrix, b: &PdMatrix) -> f64 {
    assert_same_dim(a, b);
    0.5 * (delta2_oriented(a, b) + delta2_oriented(b, a))
}

/// Riemannian exponential `A^{1/2} expm(A^{-1/2} T A^{-1/2}) A^{1/2}`.
///
/// Panics if the result is not numerically PD (extreme tangents); use
/// [`try_exp_map`] to handle that case.
pub fn exp_map(base: &PdMatrix, tangent: &SymMatrix) -> PdMatrix {
    try_exp_map(base, tangent).expect("exponential map lands in the PD cone")
}

pub fn try_exp_map(base: &PdMatrix, tangent: &SymMatrix) -> Result<PdMatrix> {
    assert_eq!(base.dim(), tangent.dim(), "exp_map: dimension mismatch");
    let si = base.inv_sqrt();
    let s = base.sqrt();
    let inner = tangent.congruence(si.as_matrix());
    let e = inner.map_spectrum(f64::exp);
    PdMatrix::from_sym(e.congruence(s.as_matrix()))
}

/// Inverse of [`exp_map`]: `A^{1/2} logm(A^{-1/2} B A^{-1/2}) A^{1/2}`.
pub fn log_map(base: &PdMatrix, target: &PdMatrix) -> SymMatrix {
    assert_same_dim(base, target);
    let si = base.inv_sqrt();
    let s = base.sqrt();
    let inner = target.as_sym().congruence(si.as_matrix());
    inner.map_spectrum(f64::ln).congruence(s.as_matrix())
}

/// Block-diagonal assembly of square blocks.
pub fn block_diagonal(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((off, off), (k, k)).copy_from(*b);
        off += k;
    }
    out
}
