//! Contractions of the symmetric coefficient tensor behind the trained
//! decision function.
//!
//! For a feature matrix with rows `phi_n` (one row per multi-index, one
//! column per training point) and order parameter `m`, the tensor
//! `A = sum_n phi_n^(x2m)` of order `2m` is never stored. Every quantity the
//! solver needs reduces to the inner products `u_n = phi_n . c`:
//!
//! * `A c^{2m}           = sum_n u_n^{2m}` (scalar, always >= 0)
//! * `(A c^{2m-1})_i     = sum_n u_n^{2m-1} phi_n[i]` (vector)
//! * `(A c^{2m-2})_{ij}  = sum_n u_n^{2m-2} phi_n[i] phi_n[j]` (matrix)
//!
//! so each contraction costs O(M n) or O(M n^2) instead of O(n^{2m}).
//! All sums run over `n` in enumeration order with a fixed blocked
//! association, making results reproducible and identical between the
//! parallel and sequential builds. [`TensorHandle::materialize`] builds the
//! dense tensor for small cases and exists so tests can check the shortcuts
//! against direct summation.

use nalgebra::{DMatrix, DVector};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::exec;
use crate::kernels::FeatureMatrix;
use crate::loss::{loss_eval, LossSpec};
use crate::num::ipow;

/// Hard cap on dense tensor entries; materialization refuses anything larger.
pub const MAX_MATERIALIZED_ENTRIES: usize = 1_000_000;

/// Lazy view of the order-`2m` symmetric tensor induced by a feature matrix.
#[derive(Debug, Clone)]
pub struct TensorHandle {
    /// `n_points x m_terms`; column `n` holds `phi_n` contiguously.
    features_t: DMatrix<f64>,
    m: usize,
    gram: OnceLock<DMatrix<f64>>,
}

impl TensorHandle {
    /// Builds a handle over a kernel feature matrix with order parameter `m`.
    pub fn from_feature_matrix(fm: &FeatureMatrix, m: usize) -> Result<Self> {
        Self::from_matrix(fm.values.clone(), m)
    }

    /// Builds a handle over a raw `m_terms x n_points` matrix whose rows act
    /// as the feature vectors. Used by tests and synthetic studies.
    pub fn from_matrix(features: DMatrix<f64>, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("order parameter m must be at least 1".into()));
        }
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(Error::Config("feature matrix must be nonempty".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(
                "feature matrix entries must be finite".into(),
            ));
        }
        Ok(TensorHandle {
            features_t: features.transpose(),
            m,
            gram: OnceLock::new(),
        })
    }

    /// Order parameter m.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Tensor order 2m.
    pub fn order(&self) -> usize {
        2 * self.m
    }

    /// Number of training points n (tensor dimension).
    pub fn n_points(&self) -> usize {
        self.features_t.nrows()
    }

    /// Number of retained feature terms M.
    pub fn m_terms(&self) -> usize {
        self.features_t.ncols()
    }

    fn check_len(&self, c: &DVector<f64>) -> Result<()> {
        if c.len() != self.n_points() {
            return Err(Error::Config(format!(
                "coefficient vector has length {}, tensor dimension is {}",
                c.len(),
                self.n_points()
            )));
        }
        Ok(())
    }

    /// Inner products `u_n = phi_n . c` for every retained term.
    pub fn feature_inner_products(&self, c: &DVector<f64>) -> DVector<f64> {
        let m_terms = self.m_terms();
        let mut u = DVector::zeros(m_terms);
        for n in 0..m_terms {
            u[n] = self.features_t.column(n).dot(c);
        }
        u
    }

    /// Full contraction `A c^{2m} = sum_n u_n^{2m}`. Nonnegative for every c.
    pub fn contract_full(&self, c: &DVector<f64>) -> Result<f64> {
        self.check_len(c)?;
        let u = self.feature_inner_products(c);
        let order = self.order() as u32;
        Ok(exec::blocked_sum(u.len(), |n| ipow(u[n], order)))
    }

    /// Gradient-direction contraction `A c^{2m-1}`, a vector of length n.
    pub fn contract_2m_minus_1(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(c)?;
        let u = self.feature_inner_products(c);
        let p = (self.order() - 1) as u32;
        let mut v = DVector::zeros(self.n_points());
        for n in 0..self.m_terms() {
            let w = ipow(u[n], p);
            if w != 0.0 {
                v.axpy(w, &self.features_t.column(n), 1.0);
            }
        }
        Ok(v)
    }

    /// Curvature contraction `A c^{2m-2}`, a symmetric PSD n x n matrix.
    ///
    /// For m = 1 the tensor itself is the second-order Gram matrix
    /// `sum_n phi_n phi_n^T`, returned for every c including c = 0; for
    /// m > 1 and c = 0 all weights vanish and the result is the zero matrix.
    pub fn contract_2m_minus_2(&self, c: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_len(c)?;
        if self.m == 1 {
            return Ok(self.gram().clone());
        }
        let u = self.feature_inner_products(c);
        let p = (self.order() - 2) as u32;
        let weights: Vec<f64> = (0..u.len()).map(|n| ipow(u[n], p)).collect();
        Ok(self.weighted_outer_sum(Some(&weights)))
    }

    /// Cached Gram matrix `sum_n phi_n phi_n^T`.
    pub fn gram(&self) -> &DMatrix<f64> {
        self.gram.get_or_init(|| self.weighted_outer_sum(None))
    }

    /// `sum_n w_n phi_n phi_n^T` accumulated in enumeration order on the
    /// upper triangle, then mirrored. `None` weights mean all ones.
    fn weighted_outer_sum(&self, weights: Option<&[f64]>) -> DMatrix<f64> {
        let n = self.n_points();
        let mut h = DMatrix::zeros(n, n);
        for idx in 0..self.m_terms() {
            let w = weights.map_or(1.0, |ws| ws[idx]);
            if w == 0.0 {
                continue;
            }
            let phi = self.features_t.column(idx);
            for j in 0..n {
                let s = w * phi[j];
                if s == 0.0 {
                    continue;
                }
                for i in 0..=j {
                    h[(i, j)] += s * phi[i];
                }
            }
        }
        for j in 0..n {
            for i in 0..j {
                h[(j, i)] = h[(i, j)];
            }
        }
        h
    }

    /// Dense tensor for oracle comparisons. Errors when `n^{2m}` exceeds
    /// [`MAX_MATERIALIZED_ENTRIES`].
    pub fn materialize(&self) -> Result<DenseTensor> {
        let n = self.n_points();
        let order = self.order();
        let mut entries: usize = 1;
        for _ in 0..order {
            entries = entries
                .checked_mul(n)
                .filter(|&e| e <= MAX_MATERIALIZED_ENTRIES)
                .ok_or_else(|| {
                    Error::Config(format!(
                        "dense tensor would exceed {MAX_MATERIALIZED_ENTRIES} entries"
                    ))
                })?;
        }
        let mut data = vec![0.0f64; entries];
        let mut idx = vec![0usize; order];
        for slot in data.iter_mut() {
            let mut acc = 0.0;
            for t in 0..self.m_terms() {
                let phi = self.features_t.column(t);
                let mut prod = 1.0;
                for &i in &idx {
                    prod *= phi[i];
                }
                acc += prod;
            }
            *slot = acc;
            // Odometer: last coordinate fastest.
            for k in (0..order).rev() {
                idx[k] += 1;
                if idx[k] < n {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(DenseTensor {
            dim: n,
            order,
            data,
        })
    }
}

/// Fully stored symmetric tensor; test oracle for the contraction shortcuts.
#[derive(Debug, Clone)]
pub struct DenseTensor {
    pub dim: usize,
    pub order: usize,
    data: Vec<f64>,
}

impl DenseTensor {
    /// Entry at the index tuple; the last coordinate varies fastest in the
    /// underlying storage.
    pub fn get(&self, indices: &[usize]) -> f64 {
        assert_eq!(indices.len(), self.order, "index tuple has wrong arity");
        let mut linear = 0usize;
        for &i in indices {
            assert!(i < self.dim, "index out of bounds");
            linear = linear * self.dim + i;
        }
        self.data[linear]
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }
}

/// Regularized empirical risk `(1/n) sum_i L(y_i, f(x_i)) + lambda A c^{2m}`
/// where `f(x_i) = (A c^{2m-1})_i` are the decision values at the training
/// points.
pub fn objective_value(
    t: &TensorHandle,
    c: &DVector<f64>,
    loss: &LossSpec,
    labels: &[f64],
    lambda: f64,
) -> Result<f64> {
    let n = t.n_points();
    if labels.len() != n {
        return Err(Error::Config(format!(
            "{} labels for tensor dimension {n}",
            labels.len()
        )));
    }
    let v = t.contract_2m_minus_1(c)?;
    let mut risk = 0.0;
    for i in 0..n {
        risk += loss_eval(loss, labels[i], v[i]);
    }
    Ok(risk / n as f64 + lambda * t.contract_full(c)?)
}

/// Augmented Lagrangian of the split problem,
/// `F(alpha) + G(c) + gamma . r + (beta/2) ||r||^2` with
/// `r = alpha - A c^{2m-1}`, `F` the averaged loss at `alpha`, and
/// `G(c) = lambda A c^{2m}`.
#[allow(clippy::too_many_arguments)]
pub fn augmented_lagrangian(
    t: &TensorHandle,
    alpha: &DVector<f64>,
    c: &DVector<f64>,
    gamma: &DVector<f64>,
    beta: f64,
    loss: &LossSpec,
    labels: &[f64],
    lambda: f64,
) -> Result<f64> {
    let n = t.n_points();
    if alpha.len() != n || gamma.len() != n || labels.len() != n {
        return Err(Error::Config(
            "alpha, gamma, and labels must all match the tensor dimension".into(),
        ));
    }
    let mut f_term = 0.0;
    for i in 0..n {
        f_term += loss_eval(loss, labels[i], alpha[i]);
    }
    f_term /= n as f64;
    let g_term = lambda * t.contract_full(c)?;
    let r = alpha - t.contract_2m_minus_1(c)?;
    Ok(f_term + g_term + gamma.dot(&r) + 0.5 * beta * r.norm_squared())
}
