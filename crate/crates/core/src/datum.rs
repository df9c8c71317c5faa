//! Block decompositions, the datum `(c, d, B)`, correlation constraints and
//! the finiteness tests (scaling and dimension conditions).

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pd::{cholesky, PdMatrix, SymMatrix};
use crate::sample::random_orthonormal;

/// Relative tolerance for numerical rank (against the largest singular value).
pub const RANK_TOL: f64 = 1e-9;
/// Relative slack for the scaling and dimension inequalities.
pub const CONDITION_TOL: f64 = 1e-9;
/// Largest `dim E_0` for which all coordinate subspace tuples are enumerated.
pub const MAX_ENUMERATED_DIM: usize = 22;

/// Orthogonal decomposition `E_0 = E_1 + ... + E_k` given by block sizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
}

impl Decomposition {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidInput(
                "decomposition needs at least one block".into(),
            ));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidInput("block dimensions must be >= 1".into()));
        }
        let mut offsets = Vec::with_capacity(dims.len());
        let mut total = 0;
        for &d in &dims {
            offsets.push(total);
            total += d;
        }
        Ok(Self {
            dims,
            offsets,
            total,
        })
    }

    pub fn k(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, i: usize) -> usize {
        self.dims[i]
    }

    pub fn offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Coordinates of `E_0` spanned by the blocks in `subset`, ascending.
    pub fn coordinates(&self, subset: &Subset) -> Vec<usize> {
        subset
            .indices()
            .iter()
            .flat_map(|&i| self.offsets[i]..self.offsets[i] + self.dims[i])
            .collect()
    }

    /// Projection matrix `pi_{E_i}` as a `dim_i x total` matrix.
    pub fn projection(&self, i: usize) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(self.dims[i], self.total);
        for r in 0..self.dims[i] {
            p[(r, self.offsets[i] + r)] = 1.0;
        }
        p
    }

    /// Diagonal block `i` of a matrix on `E_0`.
    pub fn block<'a>(&self, m: &'a SymMatrix, i: usize) -> SymMatrix {
        m.block(self.offsets[i], self.dims[i])
    }
}

/// A set of block indices (0-based, sorted, no duplicates).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subset(Vec<usize>);

impl Subset {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Subset(indices)
    }

    /// All blocks `0..k`.
    pub fn full(k: usize) -> Self {
        Subset((0..k).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// 1-based indices, as used in files.
    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

/// Constraint function `nu`: finite bounds on S-correlations. Subsets that are
/// absent carry the bound `+inf`, so the empty map is the unconstrained case.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintFunction {
    entries: BTreeMap<Subset, f64>,
}

impl ConstraintFunction {
    /// `nu = +inf` everywhere.
    pub fn unconstrained() -> Self {
        Self::default()
    }

    /// `nu = 0` everywhere: only the independent coupling is allowed.
    pub fn independent(k: usize) -> Self {
        let mut nu = Self::default();
        if k >= 2 {
            nu.entries.insert(Subset::full(k), 0.0);
        }
        nu
    }

    /// Same bound on the full index set.
    pub fn total_correlation(k: usize, bound: f64) -> Result<Self> {
        let mut nu = Self::default();
        nu.set(Subset::full(k), bound, k)?;
        Ok(nu)
    }

    /// Sets `nu(subset) = bound`. Infinite bounds remove the entry; subsets of
    /// size below two are rejected since their correlation is identically zero.
    pub fn set(&mut self, subset: Subset, bound: f64, k: usize) -> Result<()> {
        if subset.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "constraint subset {subset} must contain at least two blocks"
            )));
        }
        if subset.indices().iter().any(|&i| i >= k) {
            return Err(Error::InvalidInput(format!(
                "constraint subset {subset} refers to a block beyond k = {k}"
            )));
        }
        if bound.is_nan() || bound < 0.0 {
            return Err(Error::InvalidInput(format!(
                "constraint bound for {subset} must be >= 0, got {bound}"
            )));
        }
        if bound.is_infinite() {
            self.entries.remove(&subset);
        } else {
            self.entries.insert(subset, bound);
        }
        Ok(())
    }

    pub fn bound(&self, subset: &Subset) -> f64 {
        self.entries.get(subset).copied().unwrap_or(f64::INFINITY)
    }

    pub fn is_unconstrained(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Subset, f64)> {
        self.entries.iter().map(|(s, &b)| (s, b))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Pointwise `self <= other`, i.e. the coupling set of `self` is contained
    /// in that of `other`.
    pub fn is_tighter_than(&self, other: &ConstraintFunction) -> bool {
        other.entries.iter().all(|(s, &b)| self.bound(s) <= b)
    }
}

/// `T_i` inside block `E_i`, given by orthonormal columns in block coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    pub block_index: usize,
    pub basis: DMatrix<f64>,
}

impl Subspace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// The datum `(c, d, B)` over a block decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Datum {
    decomposition: Decomposition,
    c: Vec<f64>,
    d: Vec<f64>,
    maps: Vec<DMatrix<f64>>,
}

impl Datum {
    pub fn new(
        decomposition: Decomposition,
        c: Vec<f64>,
        d: Vec<f64>,
        maps: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let k = decomposition.k();
        if c.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "c has {} entries, expected k = {k}",
                c.len()
            )));
        }
        if c.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidInput(
                "c entries must be finite and >= 0".into(),
            ));
        }
        if maps.is_empty() {
            return Err(Error::InvalidInput(
                "datum needs at least one map (m >= 1)".into(),
            ));
        }
        if d.len() != maps.len() {
            return Err(Error::DimensionMismatch(format!(
                "d has {} entries but there are {} maps",
                d.len(),
                maps.len()
            )));
        }
        if d.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidInput(
                "d entries must be finite and > 0".into(),
            ));
        }
        for (j, b) in maps.iter().enumerate() {
            if b.ncols() != decomposition.total() {
                return Err(Error::DimensionMismatch(format!(
                    "map {} has {} columns, expected dim E_0 = {}",
                    j + 1,
                    b.ncols(),
                    decomposition.total()
                )));
            }
            if b.nrows() == 0 {
                return Err(Error::InvalidInput(format!("map {} has no rows", j + 1)));
            }
            if b.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "map {} has non-finite entries",
                    j + 1
                )));
            }
        }
        Ok(Self {
            decomposition,
            c,
            d,
            maps,
        })
    }

    /// Convenience constructor from block sizes.
    pub fn from_parts(
        dims: Vec<usize>,
        c: Vec<f64>,
        d: Vec<f64>,
        maps: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        Self::new(Decomposition::new(dims)?, c, d, maps)
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomposition
    }

    pub fn k(&self) -> usize {
        self.decomposition.k()
    }

    pub fn m(&self) -> usize {
        self.maps.len()
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn maps(&self) -> &[DMatrix<f64>] {
        &self.maps
    }

    pub fn map(&self, j: usize) -> &DMatrix<f64> {
        &self.maps[j]
    }

    /// `dim E^j`.
    pub fn codomain_dim(&self, j: usize) -> usize {
        self.maps[j].nrows()
    }

    /// `sum_j d_j dim E^j`.
    pub fn weighted_codomain_dim(&self) -> f64 {
        self.d
            .iter()
            .zip(&self.maps)
            .map(|(d, b)| d * b.nrows() as f64)
            .sum()
    }

    /// `sum_i c_i dim E_i` for the given exponents.
    pub fn weighted_domain_dim(&self, c: &[f64]) -> f64 {
        c.iter()
            .zip(self.decomposition.dims())
            .map(|(c, &n)| c * n as f64)
            .sum()
    }

    /// Same maps with new exponents.
    pub fn with_exponents(&self, c: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        Self::new(self.decomposition.clone(), c, d, self.maps.clone())
    }

    /// Checks that every `B_j` has full row rank.
    pub fn check_surjective(&self) -> Result<()> {
        for (j, b) in self.maps.iter().enumerate() {
            let r = numerical_rank(b);
            if r < b.nrows() {
                return Err(Error::NonSurjectiveMap {
                    index: j + 1,
                    rank: r,
                    rows: b.nrows(),
                });
            }
        }
        Ok(())
    }

    /// `true` iff `sum c_i dim E_i = sum d_j dim E^j` within relative slack.
    pub fn check_scaling(&self) -> bool {
        check_scaling_with(self, &self.c)
    }
}

pub fn check_scaling(datum: &Datum) -> bool {
    datum.check_scaling()
}

/// Scaling condition for explicit exponents `c`.
pub fn check_scaling_with(datum: &Datum, c: &[f64]) -> bool {
    let rhs = datum.weighted_codomain_dim();
    (datum.weighted_domain_dim(c) - rhs).abs() <= CONDITION_TOL * rhs
}

/// Numerical rank at `RANK_TOL` relative to the largest singular value.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let top = sv.iter().cloned().fold(0.0f64, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * top).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// How a violating tuple was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessKind {
    /// Spanned by standard basis vectors.
    Coordinate,
    /// Built from kernels and pulled-back images of the maps.
    Structured,
    Random,
}

/// Outcome of the dimension-condition test.
///
/// A `Pass` certifies the inequality only on the tuples that were tested:
/// every coordinate-aligned tuple, the structured tuples, and
/// `random_tuples` random ones.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionCheck {
    pub verdict: Verdict,
    /// Most violated tuple, one subspace per block.
    pub witness: Option<Vec<Subspace>>,
    pub witness_kind: Option<WitnessKind>,
    /// `sum c_i dim T_i - sum d_j dim B_j T` at the witness.
    pub violation: f64,
    pub coordinate_tuples: usize,
    pub structured_tuples: usize,
    pub random_tuples: usize,
}

impl DimensionCheck {
    /// A failure whose witness is a deterministic subspace tuple, so that the
    /// violation does not depend on sampling.
    pub fn is_conclusive_failure(&self) -> bool {
        self.verdict == Verdict::Fail
            && matches!(
                self.witness_kind,
                Some(WitnessKind::Coordinate | WitnessKind::Structured)
            )
    }
}

/// Orthonormal basis of `{x : m x = 0}`.
fn null_space(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.ncols();
    if m.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let gram = SymMatrix::from_matrix_unchecked(crate::pd::symmetrize(m.transpose() * m));
    let spec = gram.eigen();
    let top = spec.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let cols: Vec<usize> = (0..n)
        .filter(|&c| spec.eigenvalues[c] <= (RANK_TOL * RANK_TOL) * top.max(f64::MIN_POSITIVE))
        .collect();
    DMatrix::from_fn(n, cols.len(), |r, c| spec.eigenvectors[(r, cols[c])])
}

/// Orthonormal basis of the column space of `m`.
fn range(m: &DMatrix<f64>) -> DMatrix<f64> {
    let rank = numerical_rank(m);
    if rank == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    DMatrix::from_fn(m.nrows(), rank, |r, c| u[(r, order[c])])
}

/// Per-block candidates `E_i ∩ B_j^{-1}(B_j E_L)` over maps `j` and sets `L`
/// of other blocks (`L` empty gives the kernels), plus `0` and `E_i`.
fn structured_candidates(datum: &Datum) -> Vec<Vec<DMatrix<f64>>> {
    let dec = datum.decomposition();
    let k = dec.k();
    (0..k)
        .map(|i| {
            let ni = dec.dim(i);
            let mut out: Vec<DMatrix<f64>> = vec![DMatrix::zeros(ni, 0), DMatrix::identity(ni, ni)];
            for b in datum.maps() {
                let bi = b.columns(dec.offset(i), ni).into_owned();
                for mask in 0usize..(1 << k) {
                    if mask >> i & 1 == 1 {
                        continue;
                    }
                    let cols: Vec<usize> = (0..k)
                        .filter(|l| mask >> l & 1 == 1)
                        .flat_map(|l| dec.offset(l)..dec.offset(l) + dec.dim(l))
                        .collect();
                    let image = range(&b.select_columns(cols.iter()));
                    let residual = &bi - &image * (image.transpose() * &bi);
                    let v = null_space(&residual);
                    let dim = v.ncols();
                    if dim > 0 && dim < ni && !out.iter().any(|w| same_span(w, &v)) {
                        out.push(v);
                    }
                }
            }
            out
        })
        .collect()
}

fn same_span(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    a.ncols() == b.ncols() && (b - a * (a.transpose() * b)).norm() < 1e-8
}

const MAX_STRUCTURED_TUPLES: usize = 1 << 16;

fn tuple_excess(datum: &Datum, c: &[f64], t_dims: &[usize], t_basis: &DMatrix<f64>) -> f64 {
    let lhs: f64 = c.iter().zip(t_dims).map(|(c, &t)| c * t as f64).sum();
    let rhs: f64 = if t_basis.ncols() == 0 {
        0.0
    } else {
        datum
            .maps()
            .iter()
            .zip(datum.d())
            .map(|(b, d)| d * numerical_rank(&(b * t_basis)) as f64)
            .sum()
    };
    lhs - rhs
}

/// Tests `sum c_i dim T_i <= sum d_j dim(B_j T)` over all coordinate-aligned
/// tuples and `trials` random tuples drawn from `seed`.
pub fn check_dimension_condition(
    datum: &Datum,
    trials: usize,
    seed: u64,
) -> Result<DimensionCheck> {
    check_dimension_condition_with(datum, datum.c(), trials, seed)
}

pub fn check_dimension_condition_with(
    datum: &Datum,
    c: &[f64],
    trials: usize,
    seed: u64,
) -> Result<DimensionCheck> {
    let dec = datum.decomposition();
    let n = dec.total();
    if n > MAX_ENUMERATED_DIM {
        return Err(Error::InvalidInput(format!(
            "dim E_0 = {n} exceeds the enumeration limit {MAX_ENUMERATED_DIM}"
        )));
    }
    let slack = CONDITION_TOL * datum.weighted_codomain_dim().max(1.0);
    let mut worst: Option<(f64, Vec<Subspace>, WitnessKind)> = None;
    let mut consider = |excess: f64, tuple: &dyn Fn() -> Vec<Subspace>, kind: WitnessKind| {
        if excess > slack && worst.as_ref().map_or(true, |(w, _, _)| excess > *w + slack) {
            worst = Some((excess, tuple(), kind));
        }
    };
    let assemble = |subspaces: &[Subspace]| -> (Vec<usize>, DMatrix<f64>) {
        let t_dims: Vec<usize> = subspaces.iter().map(Subspace::dim).collect();
        let width: usize = t_dims.iter().sum();
        let mut basis = DMatrix::zeros(n, width);
        let mut col = 0;
        for s in subspaces {
            let off = dec.offset(s.block_index);
            for j in 0..s.dim() {
                for r in 0..s.basis.nrows() {
                    basis[(off + r, col)] = s.basis[(r, j)];
                }
                col += 1;
            }
        }
        (t_dims, basis)
    };

    let count = 1usize << n;
    for mask in 0..count {
        let cols: Vec<usize> = (0..n).filter(|b| mask >> b & 1 == 1).collect();
        let basis = DMatrix::from_fn(n, cols.len(), |r, c| if cols[c] == r { 1.0 } else { 0.0 });
        let t_dims: Vec<usize> = (0..dec.k())
            .map(|i| {
                cols.iter()
                    .filter(|&&x| x >= dec.offset(i) && x < dec.offset(i) + dec.dim(i))
                    .count()
            })
            .collect();
        let excess = tuple_excess(datum, c, &t_dims, &basis);
        let build = || {
            (0..dec.k())
                .map(|i| {
                    let local: Vec<usize> = cols
                        .iter()
                        .filter(|&&x| x >= dec.offset(i) && x < dec.offset(i) + dec.dim(i))
                        .map(|&x| x - dec.offset(i))
                        .collect();
                    Subspace {
                        block_index: i,
                        basis: DMatrix::from_fn(dec.dim(i), local.len(), |r, c| {
                            if local[c] == r {
                                1.0
                            } else {
                                0.0
                            }
                        }),
                    }
                })
                .collect()
        };
        consider(excess, &build, WitnessKind::Coordinate);
    }

    let families = structured_candidates(datum);
    let total: usize = families.iter().map(Vec::len).try_fold(1usize, |a, l| a.checked_mul(l)).unwrap_or(usize::MAX);
    let mut structured = 0;
    if total <= MAX_STRUCTURED_TUPLES {
        let mut idx = vec![0usize; families.len()];
        loop {
            let subspaces: Vec<Subspace> = idx
                .iter()
                .enumerate()
                .map(|(i, &x)| Subspace {
                    block_index: i,
                    basis: families[i][x].clone(),
                })
                .collect();
            let (t_dims, basis) = assemble(&subspaces);
            let excess = tuple_excess(datum, c, &t_dims, &basis);
            consider(excess, &|| subspaces.clone(), WitnessKind::Structured);
            structured += 1;
            let mut pos = 0;
            while pos < idx.len() {
                idx[pos] += 1;
                if idx[pos] < families[pos].len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == idx.len() {
                break;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let subspaces: Vec<Subspace> = (0..dec.k())
            .map(|i| {
                let t = rng.random_range(0..=dec.dim(i));
                Subspace {
                    block_index: i,
                    basis: random_orthonormal(&mut rng, dec.dim(i), t),
                }
            })
            .collect();
        let (t_dims, basis) = assemble(&subspaces);
        let excess = tuple_excess(datum, c, &t_dims, &basis);
        consider(excess, &|| subspaces.clone(), WitnessKind::Random);
    }

    Ok(match worst {
        Some((violation, witness, kind)) => DimensionCheck {
            verdict: Verdict::Fail,
            witness: Some(witness),
            witness_kind: Some(kind),
            violation,
            coordinate_tuples: count,
            structured_tuples: structured,
            random_tuples: trials,
        },
        None => DimensionCheck {
            verdict: Verdict::Pass,
            witness: None,
            witness_kind: None,
            violation: 0.0,
            coordinate_tuples: count,
            structured_tuples: structured,
            random_tuples: trials,
        },
    })
}

/// Gaussian S-correlation `1/2 (sum_{i in S} log det K_i - log det K_S)`.
///
/// Zero for `|S| <= 1`; `+inf` when `K_S` is singular at the Cholesky pivot
/// tolerance.
pub fn s_correlation_gaussian(dec: &Decomposition, k: &SymMatrix, subset: &Subset) -> f64 {
    if subset.len() <= 1 {
        return 0.0;
    }
    let mut marg = 0.0;
    for &i in subset.indices() {
        match cholesky(dec.block(k, i).as_matrix()) {
            Ok(l) => marg += 2.0 * l.diagonal().iter().map(|x| x.ln()).sum::<f64>(),
            Err(_) => return f64::INFINITY,
        }
    }
    let ks = k.principal(&dec.coordinates(subset));
    match cholesky(ks.as_matrix()) {
        Ok(l) => {
            let joint = 2.0 * l.diagonal().iter().map(|x| x.ln()).sum::<f64>();
            0.5 * (marg - joint)
        }
        Err(_) => f64::INFINITY,
    }
}

// ---------------------------------------------------------------------------
// File schema

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<f64>,
}

/// `"inf"` or a number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundSpec {
    Value(f64),
    Word(InfWord),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InfWord {
    #[serde(rename = "inf")]
    Inf,
}

impl BoundSpec {
    pub fn value(self) -> f64 {
        match self {
            BoundSpec::Value(v) => v,
            BoundSpec::Word(InfWord::Inf) => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NuSpec {
    /// 1-based block indices.
    pub subset: Vec<usize>,
    pub bound: BoundSpec,
}

/// On-disk datum:
/// `{"dims":[..], "c":[..], "d":[..], "maps":[{"rows","cols","entries"}], "nu":[{"subset","bound"}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumFile {
    pub dims: Vec<usize>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub maps: Vec<MapSpec>,
    #[serde(default)]
    pub nu: Vec<NuSpec>,
}

impl DatumFile {
    pub fn from_datum(datum: &Datum, nu: &ConstraintFunction) -> Self {
        Self {
            dims: datum.decomposition().dims().to_vec(),
            c: datum.c().to_vec(),
            d: datum.d().to_vec(),
            maps: datum
                .maps()
                .iter()
                .map(|b| MapSpec {
                    rows: b.nrows(),
                    cols: b.ncols(),
                    entries: (0..b.nrows())
                        .flat_map(|r| (0..b.ncols()).map(move |c| (r, c)))
                        .map(|(r, c)| b[(r, c)])
                        .collect(),
                })
                .collect(),
            nu: nu
                .iter()
                .map(|(s, b)| NuSpec {
                    subset: s.one_based(),
                    bound: BoundSpec::Value(b),
                })
                .collect(),
        }
    }

    pub fn into_datum(self) -> Result<(Datum, ConstraintFunction)> {
        let mut maps = Vec::with_capacity(self.maps.len());
        for (j, m) in self.maps.iter().enumerate() {
            if m.entries.len() != m.rows * m.cols {
                return Err(Error::InvalidInput(format!(
                    "maps[{j}]: {} entries for a {}x{} map",
                    m.entries.len(),
                    m.rows,
                    m.cols
                )));
            }
            maps.push(DMatrix::from_row_slice(m.rows, m.cols, &m.entries));
        }
        let datum = Datum::from_parts(self.dims, self.c, self.d, maps)?;
        let k = datum.k();
        let mut nu = ConstraintFunction::unconstrained();
        for (n, spec) in self.nu.iter().enumerate() {
            if spec.subset.iter().any(|&i| i == 0 || i > k) {
                return Err(Error::InvalidInput(format!(
                    "nu[{n}].subset: indices are 1-based and must lie in 1..={k}"
                )));
            }
            let subset = Subset::new(spec.subset.iter().map(|i| i - 1).collect());
            nu.set(subset, spec.bound.value(), k)
                .map_err(|e| Error::InvalidInput(format!("nu[{n}]: {e}")))?;
        }
        Ok((datum, nu))
    }
}

pub fn parse_datum_json(text: &str) -> Result<(Datum, ConstraintFunction)> {
    let file: DatumFile =
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("datum: {e}")))?;
    file.into_datum()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginalSpec {
    pub dim: usize,
    pub entries: Vec<f64>,
}

/// On-disk marginals: `{"marginals":[{"dim":n,"entries":[row-major]}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginalsFile {
    pub marginals: Vec<MarginalSpec>,
}

impl MarginalsFile {
    pub fn from_marginals(marginals: &[PdMatrix]) -> Self {
        Self {
            marginals: marginals
                .iter()
                .map(|k| MarginalSpec {
                    dim: k.dim(),
                    entries: k.as_matrix().transpose().iter().cloned().collect(),
                })
                .collect(),
        }
    }

    pub fn into_marginals(self) -> Result<Vec<PdMatrix>> {
        self.marginals
            .iter()
            .enumerate()
            .map(|(i, m)| {
                PdMatrix::from_row_slice(m.dim, &m.entries)
                    .map_err(|e| Error::InvalidInput(format!("marginals[{i}]: {e}")))
            })
            .collect()
    }
}

pub fn parse_marginals_json(text: &str) -> Result<Vec<PdMatrix>> {
    let file: MarginalsFile =
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("marginals: {e}")))?;
    file.into_marginals()
}

/// Checks that the marginals fit the decomposition.
pub fn check_marginals(dec: &Decomposition, marginals: &[PdMatrix]) -> Result<()> {
    if marginals.len() != dec.k() {
        return Err(Error::DimensionMismatch(format!(
            "{} marginals for k = {} blocks",
            marginals.len(),
            dec.k()
        )));
    }
    for (i, m) in marginals.iter().enumerate() {
        if m.dim() != dec.dim(i) {
            return Err(Error::DimensionMismatch(format!(
                "marginal {} has dim {}, block has dim {}",
                i + 1,
                m.dim(),
                dec.dim(i)
            )));
        }
    }
    Ok(())
}

/// Scalar-sum datum `k = 2`, `dims = (1, 1)`, `B = [1 1]`, `d = (1)`.
pub fn scalar_sum_datum(c: [f64; 2]) -> Datum {
    Datum::from_parts(
        vec![1, 1],
        c.to_vec(),
        vec![1.0],
        vec![DMatrix::from_row_slice(1, 2, &[1.0, 1.0])],
    )
    .expect("valid scalar-sum datum")
}
