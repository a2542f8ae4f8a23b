//! Trained models: evaluation, classification, and the on-disk format.
//!
//! A trained classifier is `f(x) = sum_n (phi_n . c)^{2m-1} phi_n(x)` over
//! the first M multi-indices, determined by the kernel, the training points,
//! and the coefficient vector c. The model file stores exactly those
//! ingredients; evaluation weights are rebuilt on load by the same
//! deterministic arithmetic, so decision values survive a save/load round
//! trip bit for bit.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernels::{build_feature_matrix, feature_value_unchecked, KernelSpec, MultiIndex};
use crate::num::ipow;
use crate::solver::{SolveResult, SolverConfig};
use crate::tensor::TensorHandle;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A trained classifier ready for evaluation.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub kernel: KernelSpec,
    pub m: usize,
    pub m_terms: usize,
    pub lambda: f64,
    pub beta: f64,
    /// Training objective reached by the winning restart.
    pub objective: f64,
    pub training_points: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    /// Cached expansion weights `(phi_n . c)^{2m-1}` in enumeration order.
    weights: Vec<f64>,
    index_list: Vec<MultiIndex>,
}

impl TrainedModel {
    /// Assembles a model and precomputes its evaluation weights.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kernel: KernelSpec,
        m: usize,
        m_terms: usize,
        lambda: f64,
        beta: f64,
        objective: f64,
        training_points: Vec<Vec<f64>>,
        c: Vec<f64>,
    ) -> Result<Self> {
        kernel.validate()?;
        if m == 0 {
            return Err(Error::Model("order parameter m must be at least 1".into()));
        }
        if training_points.is_empty() {
            return Err(Error::Model("model must keep its training points".into()));
        }
        if c.len() != training_points.len() {
            return Err(Error::Model(format!(
                "{} coefficients for {} training points",
                c.len(),
                training_points.len()
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Model("coefficients must be finite".into()));
        }
        if !objective.is_finite() {
            return Err(Error::Model("objective must be finite".into()));
        }
        let fm = build_feature_matrix(&kernel, m_terms, &training_points)?;
        let handle = TensorHandle::from_feature_matrix(&fm, m)?;
        let u = handle.feature_inner_products(&nalgebra::DVector::from_column_slice(&c));
        let p = (2 * m - 1) as u32;
        let weights: Vec<f64> = (0..u.len()).map(|n| ipow(u[n], p)).collect();
        Ok(TrainedModel {
            kernel,
            m,
            m_terms,
            lambda,
            beta,
            objective,
            training_points,
            c,
            weights,
            index_list: fm.index_list,
        })
    }

    /// Builds a model from a finished solve.
    pub fn from_training(
        kernel: KernelSpec,
        m_terms: usize,
        config: &SolverConfig,
        training_points: &[Vec<f64>],
        result: &SolveResult,
    ) -> Result<Self> {
        TrainedModel::new(
            kernel,
            config.m,
            m_terms,
            config.lambda,
            config.beta,
            result.objective,
            training_points.to_vec(),
            result.c.iter().cloned().collect(),
        )
    }

    /// Decision value `f(x) = sum_n w_n phi_n(x)`, summed in enumeration
    /// order.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        self.kernel.validate_point(x)?;
        let mut acc = 0.0;
        for (w, n) in self.weights.iter().zip(&self.index_list) {
            if *w != 0.0 {
                acc += w * feature_value_unchecked(&self.kernel, &n.0, x);
            }
        }
        Ok(acc)
    }

    /// Predicted label; the boundary `f(x) = 0` classifies as +1.
    pub fn classify(&self, x: &[f64]) -> Result<f64> {
        Ok(if self.decision_value(x)? >= 0.0 {
            1.0
        } else {
            -1.0
        })
    }

    /// Fraction of correctly classified points.
    pub fn evaluate_accuracy(&self, dataset: &Dataset) -> Result<f64> {
        let mut correct = 0usize;
        for (p, &y) in dataset.points().iter().zip(dataset.labels()) {
            if self.classify(p)? == y {
                correct += 1;
            }
        }
        Ok(correct as f64 / dataset.len() as f64)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            kernel: self.kernel.clone(),
            m: self.m,
            m_terms: self.m_terms,
            lambda: self.lambda,
            beta: self.beta,
            objective: self.objective,
            training_points: self.training_points.clone(),
            c: self.c.clone(),
        };
        let json = serde_json::to_string_pretty(&file)
            .map_err(|e| Error::Model(format!("serialization failed: {e}")))?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Model(format!("cannot read {}: {e}", path.display())))?;
        let file: ModelFile = serde_json::from_str(&text)
            .map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "{}: format version {} not supported (expected {})",
                path.display(),
                file.format_version,
                MODEL_FORMAT_VERSION
            )));
        }
        TrainedModel::new(
            file.kernel,
            file.m,
            file.m_terms,
            file.lambda,
            file.beta,
            file.objective,
            file.training_points,
            file.c,
        )
    }
}

/// On-disk model schema. Floats are written as shortest round-trip decimals,
/// which parse back to identical bits.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    kernel: KernelSpec,
    m: usize,
    #[serde(rename = "M")]
    m_terms: usize,
    lambda: f64,
    beta: f64,
    objective: f64,
    training_points: Vec<Vec<f64>>,
    c: Vec<f64>,
}
