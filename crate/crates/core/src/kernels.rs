//! Power series kernels and their truncated feature expansions.
//!
//! Two kernel families are supported, each with an explicit countable feature
//! system `K(x, x') = sum_n phi_n(x) phi_n(x')`:
//!
//! * Gaussian on R^d: `K(x, x') = exp(-sigma^2 ||x - x'||^2)` with
//!   `phi_n(x) = prod_j (2^{n_j}/n_j!)^{1/2} (sigma x_j)^{n_j} exp(-sigma^2 x_j^2)`
//!   indexed over n in N_0^d.
//! * Min on [0,1]^d: `K(x, x') = prod_j (min{x_j, x_j'} - x_j x_j')` with
//!   `phi_n(x) = prod_j sqrt(2)/(n_j pi) sin(n_j pi x_j)` indexed over n in N^d.
//!
//! Truncation keeps the first `M` multi-indices in graded lexicographic order
//! (ascending index sum, lexicographic within a degree), which is the order
//! the rest of the crate relies on for reproducibility.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{ipow, ln_factorial};

/// Relative singular value cutoff used by [`check_rank_assumption`] callers
/// that have no reason to pick their own.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Exponent threshold above which Gaussian feature factors are evaluated in
/// the log domain to avoid overflow of `2^n / n!` intermediates.
const GAUSSIAN_LOG_DOMAIN_MIN: u32 = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Gaussian,
    Min,
}

impl std::fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelFamily::Gaussian => write!(f, "gaussian"),
            KernelFamily::Min => write!(f, "min"),
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelFamily::Gaussian),
            "min" => Ok(KernelFamily::Min),
            other => Err(Error::Config(format!(
                "unknown kernel family {other:?}; expected \"gaussian\" or \"min\""
            ))),
        }
    }
}

/// A kernel family together with its input dimension and shape parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// Input dimension d >= 1.
    pub d: usize,
    /// Width parameter; required (positive) for Gaussian, absent for Min.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

impl KernelSpec {
    pub fn gaussian(d: usize, sigma: f64) -> Self {
        KernelSpec {
            family: KernelFamily::Gaussian,
            d,
            sigma: Some(sigma),
        }
    }

    pub fn min(d: usize) -> Self {
        KernelSpec {
            family: KernelFamily::Min,
            d,
            sigma: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("kernel dimension must be at least 1".into()));
        }
        match self.family {
            KernelFamily::Gaussian => match self.sigma {
                Some(s) if s.is_finite() && s > 0.0 => Ok(()),
                _ => Err(Error::Config(
                    "gaussian kernel requires a finite sigma > 0".into(),
                )),
            },
            KernelFamily::Min => {
                if self.sigma.is_some() {
                    return Err(Error::Config("min kernel takes no sigma parameter".into()));
                }
                Ok(())
            }
        }
    }

    /// Checks that `x` has the right dimension, finite coordinates, and lies
    /// in the kernel's domain ([0,1]^d for Min, all of R^d for Gaussian).
    pub fn validate_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::Data(format!(
                "point has dimension {}, kernel expects {}",
                x.len(),
                self.d
            )));
        }
        for (j, &v) in x.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "non-finite coordinate {v} at index {j}"
                )));
            }
        }
        if self.family == KernelFamily::Min {
            for (j, &v) in x.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Domain(format!(
                        "min kernel requires coordinates in [0,1]; got {v} at index {j}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A feature multi-index; one exponent (Gaussian) or frequency (Min) per
/// input dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

/// First `m_terms` multi-indices of `kernel` in graded lexicographic order.
///
/// Gaussian enumeration starts at the all-zeros index, Min at all-ones (its
/// feature system has no zero frequencies). Output depends only on the
/// arguments, never on iteration timing.
pub fn enumerate_multi_indices(kernel: &KernelSpec, m_terms: usize) -> Result<Vec<MultiIndex>> {
    kernel.validate()?;
    if m_terms == 0 {
        return Err(Error::Config("truncation level must be at least 1".into()));
    }
    let d = kernel.d;
    let shift = match kernel.family {
        KernelFamily::Gaussian => 0u32,
        KernelFamily::Min => 1u32,
    };
    let mut out = Vec::with_capacity(m_terms);
    let mut degree = 0u32;
    while out.len() < m_terms {
        push_compositions(
            d,
            degree,
            &mut Vec::with_capacity(d),
            shift,
            m_terms,
            &mut out,
        );
        degree += 1;
    }
    Ok(out)
}

/// Appends the compositions of `degree` into `d` parts in lexicographic
/// order, shifted by `shift` per entry, stopping once `out` holds `limit`.
fn push_compositions(
    d: usize,
    degree: u32,
    prefix: &mut Vec<u32>,
    shift: u32,
    limit: usize,
    out: &mut Vec<MultiIndex>,
) {
    if out.len() == limit {
        return;
    }
    if d == 1 {
        let mut idx = prefix.clone();
        idx.push(degree + shift);
        out.push(MultiIndex(idx));
        return;
    }
    for first in 0..=degree {
        prefix.push(first + shift);
        push_compositions(d - 1, degree - first, prefix, shift, limit, out);
        prefix.pop();
        if out.len() == limit {
            return;
        }
    }
}

/// Evaluates the feature function `phi_n` at `x`, validating the point first.
pub fn feature_value(kernel: &KernelSpec, n: &MultiIndex, x: &[f64]) -> Result<f64> {
    kernel.validate()?;
    kernel.validate_point(x)?;
    if n.0.len() != kernel.d {
        return Err(Error::Config(format!(
            "multi-index has {} entries, kernel expects {}",
            n.0.len(),
            kernel.d
        )));
    }
    Ok(feature_value_unchecked(kernel, &n.0, x))
}

/// `phi_n(x)` without validation; callers guarantee dimensions and domain.
pub(crate) fn feature_value_unchecked(kernel: &KernelSpec, n: &[u32], x: &[f64]) -> f64 {
    let mut prod = 1.0;
    match kernel.family {
        KernelFamily::Gaussian => {
            let sigma = kernel.sigma.expect("validated gaussian has sigma");
            for (&nj, &xj) in n.iter().zip(x) {
                prod *= gaussian_factor(sigma, nj, xj);
                if prod == 0.0 {
                    return 0.0;
                }
            }
        }
        KernelFamily::Min => {
            for (&nj, &xj) in n.iter().zip(x) {
                let freq = nj as f64;
                prod *= std::f64::consts::SQRT_2 / (freq * std::f64::consts::PI)
                    * (freq * std::f64::consts::PI * xj).sin();
            }
        }
    }
    prod
}

/// One Gaussian coordinate factor `(2^n/n!)^{1/2} (sigma x)^n exp(-sigma^2 x^2)`.
/// High exponents go through the log domain; `0^0 = 1` so the zero index is
/// well defined at the origin.
fn gaussian_factor(sigma: f64, n: u32, x: f64) -> f64 {
    let t = sigma * x;
    let decay = (-sigma * sigma * x * x).exp();
    if n < GAUSSIAN_LOG_DOMAIN_MIN {
        let coeff = (ipow(2.0, n) / factorial_small(n)).sqrt();
        coeff * ipow(t, n) * decay
    } else {
        if t == 0.0 {
            return 0.0;
        }
        let log_mag = 0.5 * (n as f64 * std::f64::consts::LN_2 - ln_factorial(n))
            + n as f64 * t.abs().ln()
            - sigma * sigma * x * x;
        let sign = if t < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
        sign * log_mag.exp()
    }
}

/// n! for the direct (non-log) Gaussian path; stays well inside f64 range up
/// to the log-domain threshold.
fn factorial_small(n: u32) -> f64 {
    let mut acc = 1.0;
    for k in 2..=n.max(1) {
        acc *= k as f64;
    }
    acc
}

/// Truncated feature matrix: `values[(n, i)] = phi_n(x_i)` for the first
/// `m_terms` multi-indices and the given points.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub kernel: KernelSpec,
    pub index_list: Vec<MultiIndex>,
    /// `m_terms x n_points`, entry (n, i) = phi_n(x_i).
    pub values: DMatrix<f64>,
}

impl FeatureMatrix {
    pub fn m_terms(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_points(&self) -> usize {
        self.values.ncols()
    }

    /// Wraps precomputed values. The caller asserts that `values` row `n`
    /// really is `phi` of `index_list[n]`; intended for synthetic studies
    /// and tests that need hand-built feature systems.
    pub fn from_raw(
        kernel: KernelSpec,
        index_list: Vec<MultiIndex>,
        values: DMatrix<f64>,
    ) -> Result<Self> {
        if index_list.len() != values.nrows() {
            return Err(Error::Config(format!(
                "{} indices for {} matrix rows",
                index_list.len(),
                values.nrows()
            )));
        }
        Ok(FeatureMatrix {
            kernel,
            index_list,
            values,
        })
    }
}

/// Builds the `m_terms x n_points` feature matrix for `points`.
///
/// Columns are independent, so the parallel build fills them concurrently;
/// every entry is computed by the same scalar evaluation either way and the
/// result is bit-identical across the two builds.
pub fn build_feature_matrix(
    kernel: &KernelSpec,
    m_terms: usize,
    points: &[Vec<f64>],
) -> Result<FeatureMatrix> {
    if points.is_empty() {
        return Err(Error::Data(
            "feature matrix needs at least one point".into(),
        ));
    }
    for p in points {
        kernel.validate_point(p)?;
    }
    let index_list = enumerate_multi_indices(kernel, m_terms)?;
    let n_points = points.len();
    let mut buf = vec![0.0f64; m_terms * n_points];
    // Column-major: chunk i is the feature column of point i.
    crate::exec::for_each_chunk_mut(&mut buf, m_terms, |i, col| {
        let x = &points[i];
        for (n, slot) in col.iter_mut().enumerate() {
            *slot = feature_value_unchecked(kernel, &index_list[n].0, x);
        }
    });
    let values = DMatrix::from_vec(m_terms, n_points, buf);
    FeatureMatrix::from_raw(kernel.clone(), index_list, values)
}

/// Closed-form kernel value `K(x, x')`.
pub fn kernel_eval_closed_form(kernel: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    kernel.validate()?;
    kernel.validate_point(x)?;
    kernel.validate_point(y)?;
    match kernel.family {
        KernelFamily::Gaussian => {
            let sigma = kernel.sigma.expect("validated gaussian has sigma");
            let sq_dist: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            Ok((-sigma * sigma * sq_dist).exp())
        }
        KernelFamily::Min => {
            let mut prod = 1.0;
            for (&a, &b) in x.iter().zip(y) {
                prod *= a.min(b) - a * b;
            }
            Ok(prod)
        }
    }
}

/// Partial sum `sum_{n < M} phi_n(x) phi_n(x')` of the kernel's feature
/// series, accumulated in enumeration order.
pub fn kernel_eval_truncated(
    kernel: &KernelSpec,
    m_terms: usize,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    kernel.validate()?;
    kernel.validate_point(x)?;
    kernel.validate_point(y)?;
    let indices = enumerate_multi_indices(kernel, m_terms)?;
    let mut acc = 0.0;
    for n in &indices {
        acc += feature_value_unchecked(kernel, &n.0, x) * feature_value_unchecked(kernel, &n.0, y);
    }
    Ok(acc)
}

/// Outcome of the feature-system rank test backing the solver's uniqueness
/// guarantee.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankCheck {
    /// True iff the rank matrix has full column rank `n(n+1)/2`.
    pub satisfied: bool,
    /// Numeric rank of the rank matrix; `None` when `m_terms < n(n+1)/2`
    /// makes full rank impossible and the decomposition is skipped.
    pub numeric_rank: Option<usize>,
    /// Required rank `n(n+1)/2`.
    pub required: usize,
}

/// Tests whether the vectorized outer products of the feature columns span
/// the space of symmetric `n x n` matrices.
///
/// Row `n` of the rank matrix is the upper triangle (diagonal included, row
/// major) of `phi_n phi_n^T` where `phi_n` is row `n` of the feature matrix.
/// Numeric rank counts singular values above `tol` times the largest one.
pub fn check_rank_assumption(fm: &FeatureMatrix, tol: f64) -> RankCheck {
    let n = fm.n_points();
    let m_terms = fm.m_terms();
    let required = n * (n + 1) / 2;
    if m_terms < required {
        return RankCheck {
            satisfied: false,
            numeric_rank: None,
            required,
        };
    }
    let mut rank_matrix = DMatrix::zeros(m_terms, required);
    for row in 0..m_terms {
        let mut col = 0;
        for i in 0..n {
            for j in i..n {
                rank_matrix[(row, col)] = fm.values[(row, i)] * fm.values[(row, j)];
                col += 1;
            }
        }
    }
    let svals = rank_matrix.singular_values();
    let max_sv = svals.iter().cloned().fold(0.0f64, f64::max);
    let rank = if max_sv == 0.0 {
        0
    } else {
        svals.iter().filter(|&&s| s > tol * max_sv).count()
    };
    RankCheck {
        satisfied: rank == required,
        numeric_rank: Some(rank),
        required,
    }
}

/// Truncation level large enough for the rank test to be satisfiable for
/// `n` training points, floored at 64 terms.
pub fn suggested_truncation(n: usize) -> usize {
    (n * (n + 1) / 2).max(64)
}
