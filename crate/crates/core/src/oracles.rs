//! Brute-force and quadrature oracles, independent of the convex solvers:
//! grid search for two scalar blocks, one-dimensional entropies, sums of
//! Gaussian-copula couplings, and finite-difference gradients.

use std::f64::consts::{E, PI, SQRT_2};
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::pd::SymMatrix;

/// Refinement stops once doubling the grid changes an entropy by less than
/// this.
pub const ENTROPY_TOL: f64 = 1e-7;
/// Truncation of unbounded supports, relative to the peak density.
pub const TRUNCATION: f64 = 1e-12;
/// Changes of an entropy under wider truncation above this are reported as
/// [`Error::UnstableTail`].
pub const TAIL_TOL: f64 = 1e-6;
pub const DEFAULT_GRID: usize = 4096;
pub const MAX_GRID: usize = 1 << 16;
/// Coupled-sum entropies refine until successive values differ by less
/// than this.
pub const SUM_ENTROPY_TOL: f64 = 1e-6;
const SUM_GRID: usize = 1024;
const MAX_SUM_GRID: usize = 1 << 14;
const W_PANEL: f64 = 1.0;
const PANEL_NODES: usize = 8;
const W_RANGE: f64 = 9.0;
const A_RANGE: f64 = 12.0;
/// Pass threshold of the non-Gaussian comparison spot check.
pub const COMPARISON_TOL: f64 = 1e-3;

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal quantile from the lower tail `p` and upper tail `q = 1-p`,
/// using whichever is smaller.
fn std_normal_quantile(p: f64, q: f64) -> f64 {
    if p <= q {
        -SQRT_2 * erfc_inv(2.0 * p)
    } else {
        SQRT_2 * erfc_inv(2.0 * q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum Shape {
    Gaussian { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
    Laplace { mean: f64, scale: f64 },
}

impl Shape {
    fn pdf(&self, x: f64) -> f64 {
        match *self {
            Shape::Gaussian { mean, sd } => std_normal_pdf((x - mean) / sd) / sd,
            Shape::Uniform { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Shape::Laplace { mean, scale } => (-(x - mean).abs() / scale).exp() / (2.0 * scale),
        }
    }

    /// `(F(x), 1 - F(x))`, each computed without cancellation.
    fn tails(&self, x: f64) -> (f64, f64) {
        match *self {
            Shape::Gaussian { mean, sd } => {
                let z = (x - mean) / sd;
                (std_normal_cdf(z), std_normal_cdf(-z))
            }
            Shape::Uniform { lo, hi } => {
                let l = hi - lo;
                (((x - lo) / l).clamp(0.0, 1.0), ((hi - x) / l).clamp(0.0, 1.0))
            }
            Shape::Laplace { mean, scale } => {
                let t = 0.5 * (-(x - mean).abs() / scale).exp();
                if x < mean {
                    (t, 1.0 - t)
                } else {
                    (1.0 - t, t)
                }
            }
        }
    }

    /// `Phi^{-1}(F(x))`.
    fn gaussian_coordinate(&self, x: f64) -> f64 {
        if let Shape::Gaussian { mean, sd } = *self {
            return (x - mean) / sd;
        }
        let (p, q) = self.tails(x);
        std_normal_quantile(p, q)
    }

    /// `F^{-1}(Phi(a))`.
    fn transform(&self, a: f64) -> f64 {
        match *self {
            Shape::Gaussian { mean, sd } => mean + sd * a,
            Shape::Uniform { lo, hi } => {
                if a <= 0.0 {
                    lo + (hi - lo) * std_normal_cdf(a)
                } else {
                    hi - (hi - lo) * std_normal_cdf(-a)
                }
            }
            Shape::Laplace { mean, scale } => {
                if a < 0.0 {
                    mean + scale * (2.0 * std_normal_cdf(a)).ln()
                } else {
                    mean - scale * (2.0 * std_normal_cdf(-a)).ln()
                }
            }
        }
    }

    /// Derivative of [`Shape::transform`].
    fn transform_slope(&self, a: f64) -> f64 {
        match *self {
            Shape::Gaussian { sd, .. } => sd,
            Shape::Uniform { lo, hi } => (hi - lo) * std_normal_pdf(a),
            Shape::Laplace { scale, .. } => scale * std_normal_pdf(a) / std_normal_cdf(-a.abs()),
        }
    }

    /// Gaussian coordinates that split the innovation integral: the slope
    /// kink of a Laplace transform, and a ladder of levels for compact laws
    /// whose transform saturates.
    fn breaks(&self) -> Vec<f64> {
        match self {
            Shape::Gaussian { .. } => Vec::new(),
            Shape::Laplace { .. } => vec![0.0],
            Shape::Uniform { .. } => (-8..=8).map(f64::from).collect(),
        }
    }

    fn natural_support(&self) -> (f64, f64) {
        match *self {
            Shape::Uniform { lo, hi } => (lo, hi),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Closed-form differential entropy of the untruncated law.
    pub fn entropy(&self) -> f64 {
        match *self {
            Shape::Gaussian { sd, .. } => 0.5 * (2.0 * PI * E * sd * sd).ln(),
            Shape::Uniform { lo, hi } => (hi - lo).ln(),
            Shape::Laplace { scale, .. } => 1.0 + (2.0 * scale).ln(),
        }
    }

    /// Half-width around the center where the density falls to `rel` times
    /// its peak.
    fn half_width(&self, rel: f64) -> f64 {
        match *self {
            Shape::Gaussian { sd, .. } => sd * (-2.0 * rel.ln()).sqrt(),
            Shape::Uniform { lo, hi } => 0.5 * (hi - lo),
            Shape::Laplace { scale, .. } => -scale * rel.ln(),
        }
    }

    fn center(&self) -> f64 {
        match *self {
            Shape::Gaussian { mean, .. } | Shape::Laplace { mean, .. } => mean,
            Shape::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }
}

/// A one-dimensional law together with the window used for quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Density1D {
    pub shape: Shape,
    pub lo: f64,
    pub hi: f64,
}

impl Density1D {
    fn truncated(shape: Shape) -> Self {
        let c = shape.center();
        let w = shape.half_width(TRUNCATION);
        Self {
            shape,
            lo: c - w,
            hi: c + w,
        }
    }

    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) || !mean.is_finite() || !sd.is_finite() {
            return Err(Error::InvalidInput(format!("gaussian needs finite mean and sd > 0, got {mean}, {sd}")));
        }
        Ok(Self::truncated(Shape::Gaussian { mean, sd }))
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput(format!("uniform needs lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self::truncated(Shape::Uniform { lo, hi }))
    }

    pub fn laplace(mean: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !mean.is_finite() || !scale.is_finite() {
            return Err(Error::InvalidInput(format!("laplace needs finite mean and scale > 0, got {mean}, {scale}")));
        }
        Ok(Self::truncated(Shape::Laplace { mean, scale }))
    }

    /// Replaces the quadrature window (clipped to the natural support).
    pub fn with_window(self, lo: f64, hi: f64) -> Result<Self> {
        let (a, b) = self.shape.natural_support();
        let (lo, hi) = (lo.max(a), hi.min(b));
        if !(hi > lo) {
            return Err(Error::InvalidInput("empty quadrature window".into()));
        }
        Ok(Self { lo, hi, ..self })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            0.0
        } else {
            self.shape.pdf(x)
        }
    }

    /// Mass of the law inside the window.
    pub fn normalization(&self) -> f64 {
        let (p_lo, _) = self.shape.tails(self.lo);
        let (_, q_hi) = self.shape.tails(self.hi);
        1.0 - p_lo - q_hi
    }

    /// Nodes and trapezoid weights of a uniform grid with `intervals` cells.
    pub fn grid(&self, intervals: usize) -> (Vec<f64>, Vec<f64>) {
        trapezoid(self.lo, self.hi, intervals)
    }

    /// Standard deviation of the Gaussian with the same entropy.
    pub fn entropy_matched_sd(h: f64) -> f64 {
        ((2.0 * h).exp() / (2.0 * PI * E)).sqrt()
    }
}

fn trapezoid(lo: f64, hi: f64, intervals: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (hi - lo) / intervals as f64;
    let xs = (0..=intervals)
        .map(|i| if i == intervals { hi } else { lo + h * i as f64 })
        .collect();
    let ws = (0..=intervals)
        .map(|i| if i == 0 || i == intervals { 0.5 * h } else { h })
        .collect();
    (xs, ws)
}

/// Composite Simpson nodes and weights; `intervals` must be even.
fn simpson(lo: f64, hi: f64, intervals: usize) -> (Vec<f64>, Vec<f64>) {
    debug_assert!(intervals % 2 == 0);
    let (xs, _) = trapezoid(lo, hi, intervals);
    let h = (hi - lo) / intervals as f64;
    let ws = (0..=intervals)
        .map(|i| {
            if i == 0 || i == intervals {
                h / 3.0
            } else if i % 2 == 1 {
                4.0 * h / 3.0
            } else {
                2.0 * h / 3.0
            }
        })
        .collect();
    (xs, ws)
}

fn neg_plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

fn entropy_on_window(p: &Density1D) -> Result<f64> {
    let mut n = DEFAULT_GRID;
    let mut prev = f64::NAN;
    loop {
        let (xs, ws) = p.grid(n);
        let h: f64 = xs.iter().zip(&ws).map(|(&x, w)| w * neg_plogp(p.pdf(x))).sum();
        if (h - prev).abs() < ENTROPY_TOL {
            return Ok(h);
        }
        if n >= MAX_GRID {
            return Err(Error::NoConvergence {
                iterations: n,
                residual: (h - prev).abs(),
            });
        }
        prev = h;
        n *= 2;
    }
}

/// `-int p log p` by the composite trapezoid rule with grid doubling.
///
/// Errors with [`Error::UnstableTail`] when widening the window by half its
/// width on each side moves the value by more than [`TAIL_TOL`].
pub fn entropy_quadrature(p: &Density1D) -> Result<f64> {
    let h = entropy_on_window(p)?;
    let w = 0.5 * (p.hi - p.lo);
    let (a, b) = p.shape.natural_support();
    let mut change = 0.0;
    for (lo, hi) in [((p.lo - w).max(a), p.lo), (p.hi, (p.hi + w).min(b))] {
        if hi > lo {
            let (xs, ws) = trapezoid(lo, hi, DEFAULT_GRID);
            change += xs.iter().zip(&ws).map(|(&x, w)| w * neg_plogp(p.shape.pdf(x))).sum::<f64>();
        }
    }
    let change = change.abs();
    if change > TAIL_TOL {
        return Err(Error::UnstableTail { change });
    }
    Ok(h)
}

/// Standard bivariate normal density with correlation `rho`.
fn bivariate_pdf(a: f64, b: f64, rho: f64) -> f64 {
    let s2 = 1.0 - rho * rho;
    (-(a * a - 2.0 * rho * a * b + b * b) / (2.0 * s2)).exp() / (2.0 * PI * s2.sqrt())
}

/// Cross-check route: density of `X_1 + X_2` at `s` for `0 <= rho < 1`, integrating over the
/// Gaussian coordinate `a` of `X_1` between the limits where `X_2 = s - X_1`
/// stays in its support. Smooth for `rho = 0`; for `rho > 0` and compact
/// supports the integrand has power-law cusps at the limits.
#[cfg(test)]
fn sum_density_over_a(p1: &Density1D, p2: &Density1D, rho: f64, s: f64, intervals: usize) -> f64 {
    let (lo2, hi2) = p2.shape.natural_support();
    let a_lo = if hi2.is_finite() {
        let x = s - hi2;
        let (n_lo, _) = p1.shape.natural_support();
        if x <= n_lo { -A_RANGE } else { p1.shape.gaussian_coordinate(x).max(-A_RANGE) }
    } else {
        -A_RANGE
    };
    let a_hi = if lo2.is_finite() {
        let x = s - lo2;
        let (_, n_hi) = p1.shape.natural_support();
        if x >= n_hi { A_RANGE } else { p1.shape.gaussian_coordinate(x).min(A_RANGE) }
    } else {
        A_RANGE
    };
    if !(a_hi > a_lo) {
        return 0.0;
    }
    let (xs, ws) = trapezoid(a_lo, a_hi, intervals);
    let sigma = (1.0 - rho * rho).sqrt();
    xs.iter()
        .zip(&ws)
        .map(|(&a, w)| {
            // the limits keep x2 in the support up to rounding
            let x2 = (s - p1.shape.transform(a)).clamp(lo2, hi2);
            let f2 = p2.shape.pdf(x2);
            if f2 == 0.0 {
                return 0.0;
            }
            // density of a given b, times the density of x2
            let z = if rho == 0.0 {
                a
            } else {
                (a - rho * p2.shape.gaussian_coordinate(x2)) / sigma
            };
            w * std_normal_pdf(z) / sigma * f2
        })
        .sum()
}

/// Root `a` of `T_1(a) + T_2(rho a + sigma w) = s` (increasing in `a`).
fn solve_root(p1: &Density1D, p2: &Density1D, rho: f64, sigma: f64, w: f64, s: f64, guess: f64) -> Option<f64> {
    let g = |a: f64| p1.shape.transform(a) + p2.shape.transform(rho * a + sigma * w) - s;
    let (mut lo, mut hi) = (-A_RANGE, A_RANGE);
    if g(lo) > 0.0 || g(hi) < 0.0 {
        return None;
    }
    let mut a = guess.clamp(lo, hi);
    for _ in 0..100 {
        let v = g(a);
        if v > 0.0 {
            hi = a;
        } else {
            lo = a;
        }
        let slope = p1.shape.transform_slope(a) + rho * p2.shape.transform_slope(rho * a + sigma * w);
        let mut next = a - v / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - a).abs() < 1e-13 * (1.0 + a.abs()) || hi - lo < 1e-13 {
            return Some(next);
        }
        a = next;
    }
    Some(a)
}

/// Density of `X_1 + X_2` at `s`, integrating over the
/// innovation `w`; the inner map `a -> s` is monotone so each `(s, w)` has
/// one root. Gauss-Legendre panels are split where either Gaussian
/// coordinate crosses one of its transform's breaks.
fn sum_density_over_w(p1: &Density1D, p2: &Density1D, rho: f64, s: f64, rule: &[(f64, f64)]) -> f64 {
    let sigma = (1.0 - rho * rho).max(0.0).sqrt();
    let panels = (2.0 * W_RANGE / W_PANEL).round() as usize;
    let mut cuts: Vec<f64> = (0..=panels).map(|i| -W_RANGE + W_PANEL * i as f64).collect();
    if sigma > 0.0 {
        let in_support = |p: &Density1D, x: f64| {
            let (lo, hi) = p.shape.natural_support();
            x > lo && x < hi
        };
        if rho == 0.0 {
            // the innovation is the second coordinate; compact support edges
            // of the first law become jumps
            let (lo1, hi1) = p1.shape.natural_support();
            for x1 in [lo1, hi1].into_iter().filter(|x| x.is_finite()) {
                if in_support(p2, s - x1) {
                    cuts.push(p2.shape.gaussian_coordinate(s - x1));
                }
            }
        }
        for k1 in p1.shape.breaks() {
            let x2 = s - p1.shape.transform(k1);
            if in_support(p2, x2) {
                cuts.push((p2.shape.gaussian_coordinate(x2) - rho * k1) / sigma);
            }
        }
        for k2 in p2.shape.breaks() {
            let x1 = s - p2.shape.transform(k2);
            if in_support(p1, x1) {
                cuts.push((k2 - rho * p1.shape.gaussian_coordinate(x1)) / sigma);
            }
        }
    }
    cuts.retain(|w| w.is_finite() && w.abs() <= W_RANGE);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut total = 0.0;
    let mut guess = A_RANGE;
    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for &(x, wt) in rule {
            let w = mid + half * x;
            let Some(a) = solve_root(p1, p2, rho, sigma, w, s, guess) else {
                continue;
            };
            guess = a;
            let slope = p1.shape.transform_slope(a) + rho * p2.shape.transform_slope(rho * a + sigma * w);
            if slope > 0.0 {
                total += half * wt * std_normal_pdf(w) * std_normal_pdf(a) / slope;
            }
        }
    }
    total
}

/// Gauss-Legendre nodes on `[-1, 1]`, ascending.
fn gauss_rule() -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(PANEL_NODES).unwrap());
    let mut pairs = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Nodes `s(t) = lo + (hi - lo)(1 - cos(pi t))/2` on a uniform `t` grid, with
/// trapezoid weights including `s'(t)`; clusters nodes at the window edges
/// where sums of compactly supported laws have cusps.
fn graded(lo: f64, hi: f64, intervals: usize) -> (Vec<f64>, Vec<f64>) {
    let (ts, ws) = simpson(0.0, 1.0, intervals);
    let len = hi - lo;
    let ss = ts.iter().map(|&t| lo + 0.5 * len * (1.0 - (PI * t).cos())).collect();
    let ws = ts.iter().zip(ws).map(|(&t, w)| w * 0.5 * len * PI * (PI * t).sin()).collect();
    (ss, ws)
}

fn sum_entropy_at(p1: &Density1D, p2: &Density1D, rho: f64, intervals: usize) -> (f64, f64) {
    let (ss, ws) = graded(p1.lo + p2.lo, p1.hi + p2.hi, intervals);
    let rule = gauss_rule();
    let dens: Vec<f64> = ss.par_iter().map(|&s| sum_density_over_w(p1, p2, rho, s, &rule)).collect();
    let mass: f64 = dens.iter().zip(&ws).map(|(f, w)| f * w).sum();
    let h: f64 = dens.iter().zip(&ws).map(|(&f, w)| w * neg_plogp(f)).sum();
    (h, mass)
}

/// `h(X_1 + X_2)` when `(X_1, X_2)` is coupled through a Gaussian copula
/// with parameter `rho in [0, 1]` (`rho = 1` is the comonotone coupling).
///
/// The joint law is `X_i = F_i^{-1}(Phi(G_i))` with `corr(G_1, G_2) = rho`;
/// its mutual information is `-1/2 log(1 - rho^2)` for any marginals.
pub fn coupled_sum_entropy(p1: &Density1D, p2: &Density1D, rho: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidInput(format!("copula parameter must lie in [0, 1], got {rho}")));
    }
    let mut n = SUM_GRID;
    let mut prev = f64::NAN;
    loop {
        let (h, mass) = sum_entropy_at(p1, p2, rho, n);
        let lost = (1.0 - mass).abs();
        if (h - prev).abs() < SUM_ENTROPY_TOL && lost <= TAIL_TOL {
            return Ok(h);
        }
        if n >= MAX_SUM_GRID {
            if (h - prev).abs() < SUM_ENTROPY_TOL {
                return Err(Error::UnstableTail { change: lost });
            }
            return Err(Error::NoConvergence {
                iterations: n,
                residual: (h - prev).abs(),
            });
        }
        prev = h;
        n *= 2;
    }
}

/// `-1/2 log(1 - rho^2)`.
pub fn copula_mutual_information(rho: f64) -> f64 {
    -0.5 * (-rho * rho).ln_1p()
}

/// Mutual information of the copula coupling by direct two-dimensional
/// quadrature of `int f log(f / (f_1 f_2))` on the windows.
pub fn copula_mutual_information_quadrature(p1: &Density1D, p2: &Density1D, rho: f64, intervals: usize) -> f64 {
    let (x1, w1) = p1.grid(intervals);
    let (x2, w2) = p2.grid(intervals);
    let a: Vec<f64> = x1.iter().map(|&x| p1.shape.gaussian_coordinate(x)).collect();
    let b: Vec<f64> = x2.iter().map(|&x| p2.shape.gaussian_coordinate(x)).collect();
    let f1: Vec<f64> = x1.iter().map(|&x| p1.pdf(x)).collect();
    let f2: Vec<f64> = x2.iter().map(|&x| p2.pdf(x)).collect();
    (0..x1.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..x2.len() {
                if !(a[i].is_finite() && b[j].is_finite()) {
                    continue;
                }
                let c = bivariate_pdf(a[i], b[j], rho) / (std_normal_pdf(a[i]) * std_normal_pdf(b[j]));
                if c > 0.0 && c.is_finite() {
                    acc += w2[j] * f2[j] * c * c.ln();
                }
            }
            w1[i] * f1[i] * acc
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SpotVerdict {
    Pass,
    /// The copula family did not reach the Gaussian value; a restricted
    /// family cannot refute the comparison.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpotCheck {
    pub zeta: f64,
    pub rho_max: f64,
    pub best_rho: f64,
    pub h1: f64,
    pub h2: f64,
    /// Largest copula-family `h(X_1 + X_2)` within the budget.
    pub lhs_lower_bound: f64,
    /// `1/2 log(2 pi e (s_1^2 + s_2^2 + 2 rho_bar s_1 s_2))` with
    /// entropy-matched `s_i`.
    pub rhs: f64,
    pub margin: f64,
    pub verdict: SpotVerdict,
}

/// Compares the best copula coupling within `I <= zeta` against the
/// Gaussian comparison value for scalar marginals.
pub fn comparison_spot_check(p1: &Density1D, p2: &Density1D, zeta: f64, rho_grid: usize) -> Result<SpotCheck> {
    if !(zeta >= 0.0) {
        return Err(Error::InvalidInput(format!("budget must be >= 0, got {zeta}")));
    }
    let h1 = entropy_quadrature(p1)?;
    let h2 = entropy_quadrature(p2)?;
    let rho_max = if zeta == f64::INFINITY { 1.0 } else { (-(-2.0 * zeta).exp_m1()).sqrt() };
    let steps = if rho_max > 0.0 { rho_grid.max(1) } else { 0 };
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..=steps {
        let rho = if steps == 0 { 0.0 } else { rho_max * i as f64 / steps as f64 };
        let h = coupled_sum_entropy(p1, p2, rho)?;
        if h > best.0 {
            best = (h, rho);
        }
    }
    let s1 = Density1D::entropy_matched_sd(h1);
    let s2 = Density1D::entropy_matched_sd(h2);
    let rhs = 0.5 * (2.0 * PI * E * (s1 * s1 + s2 * s2 + 2.0 * rho_max * s1 * s2)).ln();
    let margin = best.0 - rhs;
    Ok(SpotCheck {
        zeta,
        rho_max,
        best_rho: best.1,
        h1,
        h2,
        lhs_lower_bound: best.0,
        rhs,
        margin,
        verdict: if margin >= -COMPARISON_TOL {
            SpotVerdict::Pass
        } else {
            SpotVerdict::Inconclusive
        },
    })
}

/// Exhaustive grid over the cross-covariance `c` of two scalar blocks with
/// `I = -1/2 log(1 - c^2/(K_1 K_2)) <= nu`; returns
/// `max d log(b_1^2 K_1 + b_2^2 K_2 + 2 b_1 b_2 c)`.
pub fn grid_max_coupling_2x2(k1: f64, k2: f64, b: (f64, f64), d: f64, nu: f64, grid: usize) -> Result<f64> {
    if grid < 100 {
        return Err(Error::InvalidInput(format!("grid must be >= 100, got {grid}")));
    }
    if !(k1 > 0.0 && k2 > 0.0) || !(nu >= 0.0) {
        return Err(Error::InvalidInput("need K_1, K_2 > 0 and nu >= 0".into()));
    }
    let r = (k1 * k2).sqrt();
    let mut best = f64::NEG_INFINITY;
    for i in 0..=grid {
        let c = -r + 2.0 * r * i as f64 / grid as f64;
        let info = copula_mutual_information((c / r).clamp(-1.0, 1.0));
        if info > nu {
            continue;
        }
        let v = b.0 * b.0 * k1 + b.1 * b.1 * k2 + 2.0 * b.0 * b.1 * c;
        if v > 0.0 {
            best = best.max(d * v.ln());
        }
    }
    Ok(best)
}

/// Central differences along `E_rs + E_sr`, returned as the symmetric matrix
/// `G` with `f(X + t H) = f(X) + t <G, H> + O(t^2)`.
pub fn finite_difference_gradient(f: impl Fn(&SymMatrix) -> f64, at: &SymMatrix, h: f64) -> SymMatrix {
    let n = at.dim();
    let mut g = nalgebra::DMatrix::zeros(n, n);
    for r in 0..n {
        for s in r..n {
            let mut e = nalgebra::DMatrix::zeros(n, n);
            e[(r, s)] = 1.0;
            e[(s, r)] = 1.0;
            let plus = SymMatrix::from_matrix_unchecked(at.as_matrix() + &e * h);
            let minus = SymMatrix::from_matrix_unchecked(at.as_matrix() - &e * h);
            let dd = (f(&plus) - f(&minus)) / (2.0 * h);
            if r == s {
                g[(r, r)] = dd;
            } else {
                g[(r, s)] = 0.5 * dd;
                g[(s, r)] = 0.5 * dd;
            }
        }
    }
    SymMatrix::from_matrix_unchecked(g)
}
