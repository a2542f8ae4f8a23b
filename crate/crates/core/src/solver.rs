//! ADMM splitting solver for the regularized tensor problem.
//!
//! The training objective `(1/n) sum_i L(y_i, (A c^{2m-1})_i) + lambda A c^{2m}`
//! is split by introducing `alpha = A c^{2m-1}` and alternating:
//!
//! 1. per-coordinate proximal steps in `alpha` against the target
//!    `e = A c^{2m-1} - gamma / beta`,
//! 2. a Newton solve of the strictly convex subproblem
//!    `min_c H(c) = (1/2m) A c^{2m} + (m lambda / ((2m-1) beta)) ||c||^2 - r . c`
//!    with `r = alpha + gamma / beta`, whose optimality condition is the
//!    tensor equation `A c^{2m-1} + rho c = r`, `rho = 2 m lambda / ((2m-1) beta)`,
//! 3. the closed-form multiplier update `gamma = (2 m lambda / (2m-1)) c`.
//!
//! The outer loop stops when the primal residual `||alpha - A c^{2m-1}||`
//! drops below `eps2`. Multi-start wraps the loop over independently seeded
//! initial points and keeps the result with the smallest objective.

use nalgebra::{Cholesky, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec;
use crate::loss::{loss_eval, prox_step, LossSpec};
use crate::tensor::TensorHandle;

/// Relative gradient tolerance for accepting a Newton iterate early; kept a
/// factor 10 below the certificate tolerance used by the solver's tests.
const GRAD_TOL_REL: f64 = 1e-10;

/// Maximum step halvings per Newton iteration.
const BACKTRACK_MAX: usize = 30;

/// Primal residual above which the outer loop is declared divergent.
const DIVERGENCE_LIMIT: f64 = 1e8;

/// Relative slack for the descent audit of the augmented Lagrangian trace.
pub const DESCENT_SLACK: f64 = 1e-8;

/// Parameters of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Order parameter m >= 1; the trained norm exponent is 2m/(2m-1).
    pub m: usize,
    /// Regularization weight, positive.
    pub lambda: f64,
    /// Augmented Lagrangian penalty, positive.
    pub beta: f64,
    /// Newton step-norm tolerance.
    pub eps1: f64,
    /// Outer primal-residual tolerance.
    pub eps2: f64,
    pub max_outer: usize,
    pub max_newton: usize,
    /// Number of random initial points for multi-start.
    pub restarts: usize,
    /// Base seed; restart j draws its initial point from seed XOR j.
    pub seed: u64,
    /// Initial coefficients are uniform in [init_lo, init_hi)^n.
    pub init_lo: f64,
    pub init_hi: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            m: 1,
            lambda: 0.01,
            beta: 1.0,
            eps1: 1e-10,
            eps2: 1e-8,
            max_outer: 500,
            max_newton: 50,
            restarts: 20,
            seed: 0,
            init_lo: -1.0,
            init_hi: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Config("order parameter m must be at least 1".into()));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::Config(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::Config(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if !(self.eps1.is_finite() && self.eps1 > 0.0)
            || !(self.eps2.is_finite() && self.eps2 > 0.0)
        {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.max_outer == 0 || self.max_newton == 0 {
            return Err(Error::Config("iteration limits must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restart count must be positive".into()));
        }
        if !(self.init_lo.is_finite() && self.init_hi.is_finite() && self.init_lo < self.init_hi) {
            return Err(Error::Config("initial box must satisfy lo < hi".into()));
        }
        Ok(())
    }

    /// `rho = 2 m lambda / ((2m-1) beta)`, the Tikhonov shift of the Newton
    /// subproblem.
    pub fn rho(&self) -> f64 {
        let m = self.m as f64;
        2.0 * m * self.lambda / ((2.0 * m - 1.0) * self.beta)
    }

    /// `2 m lambda / (2m-1)`, the multiplier update factor.
    pub fn gamma_factor(&self) -> f64 {
        let m = self.m as f64;
        2.0 * m * self.lambda / (2.0 * m - 1.0)
    }
}

/// One row of the per-iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// Completed outer iterations (1-based).
    pub k: usize,
    pub lagrangian: f64,
    pub primal_residual: f64,
    pub psi_increment: f64,
    pub newton_iters: usize,
    pub objective: f64,
}

/// Outcome of the inner Newton solve.
#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub c: DVector<f64>,
    pub newton_iters: usize,
    pub grad_norm: f64,
}

/// Outcome of one solve (or the winning restart of a multi-start).
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub c: DVector<f64>,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    pub restart_index: usize,
    pub trace: Vec<TraceRecord>,
}

/// Per-coordinate proximal update: for each training point,
/// `alpha_i = argmin L(y_i, a)/n + (beta/2)(a - e_i)^2` with
/// `e_i = (A c^{2m-1})_i - gamma_i / beta`.
pub fn alpha_step(
    t: &TensorHandle,
    loss: &LossSpec,
    labels: &[f64],
    c: &DVector<f64>,
    gamma: &DVector<f64>,
    beta: f64,
) -> Result<DVector<f64>> {
    let n = t.n_points();
    if labels.len() != n || gamma.len() != n {
        return Err(Error::Config(
            "labels and gamma must match the tensor dimension".into(),
        ));
    }
    let v = t.contract_2m_minus_1(c)?;
    let mut alpha = DVector::zeros(n);
    for i in 0..n {
        let e = v[i] - gamma[i] / beta;
        alpha[i] = prox_step(loss, labels[i], e, beta, n)?;
    }
    Ok(alpha)
}

/// Multiplier update `gamma = (2 m lambda / (2m-1)) c`.
pub fn gamma_step(config: &SolverConfig, c: &DVector<f64>) -> DVector<f64> {
    c * config.gamma_factor()
}

/// Newton solve of the coefficient subproblem, warm started at `c_warm`.
///
/// Minimizes `H(c) = (1/2m) A c^{2m} + (rho/2)||c||^2 - r . c` with
/// `r = alpha + gamma / beta` by damped Newton steps on the gradient
/// `A c^{2m-1} + rho c - r`; the Hessian `(2m-1) A c^{2m-2} + rho I` is
/// symmetric positive definite for `rho > 0`, so each step is a dense
/// Cholesky solve. Stops when the step norm falls below `eps1` or the
/// gradient is negligible relative to `r`; for m = 1 the problem is a linear
/// system and one step suffices. Unlike the outer solver, `lambda = 0` is
/// accepted here (the subproblem may still be well posed away from c = 0).
pub fn newton_c_step(
    t: &TensorHandle,
    alpha: &DVector<f64>,
    gamma: &DVector<f64>,
    config: &SolverConfig,
    c_warm: &DVector<f64>,
) -> Result<NewtonOutcome> {
    if !(config.beta.is_finite() && config.beta > 0.0) {
        return Err(Error::Config(format!(
            "beta must be positive, got {}",
            config.beta
        )));
    }
    if config.m != t.m() {
        return Err(Error::Config(format!(
            "config order m={} does not match tensor order m={}",
            config.m,
            t.m()
        )));
    }
    let r = alpha + gamma / config.beta;
    let cache = if t.m() == 1 {
        Some(factor_m1_system(t, config.rho())?)
    } else {
        None
    };
    newton_with_cache(t, &r, config, c_warm, cache.as_ref())
}

/// Cholesky factor of the m = 1 system matrix `Gram + rho I`, which does not
/// depend on the iterate and can be shared across outer iterations and
/// restarts.
fn factor_m1_system(t: &TensorHandle, rho: f64) -> Result<Cholesky<f64, Dyn>> {
    let n = t.n_points();
    let mut a = t.gram().clone();
    for i in 0..n {
        a[(i, i)] += rho;
    }
    Cholesky::new(a)
        .ok_or_else(|| Error::Divergence("order-2 system matrix is not positive definite".into()))
}

fn newton_with_cache(
    t: &TensorHandle,
    r: &DVector<f64>,
    config: &SolverConfig,
    c_warm: &DVector<f64>,
    m1_factor: Option<&Cholesky<f64, Dyn>>,
) -> Result<NewtonOutcome> {
    let n = t.n_points();
    if r.len() != n || c_warm.len() != n {
        return Err(Error::Config(
            "vector lengths must match the tensor dimension".into(),
        ));
    }
    let rho = config.rho();
    let two_m = t.order() as f64;
    let gtol = GRAD_TOL_REL * (1.0 + r.norm());

    let grad = |c: &DVector<f64>| -> Result<DVector<f64>> {
        let mut g = t.contract_2m_minus_1(c)?;
        g.axpy(rho, c, 1.0);
        g -= r;
        Ok(g)
    };

    let mut c = c_warm.clone();
    let mut iters = 0usize;
    loop {
        let g = grad(&c)?;
        let gn = g.norm();
        if !gn.is_finite() {
            return Err(Error::Divergence(
                "non-finite gradient in Newton solve".into(),
            ));
        }
        if gn <= gtol || iters >= config.max_newton {
            return Ok(NewtonOutcome {
                c,
                newton_iters: iters,
                grad_norm: gn,
            });
        }
        let d = if let Some(factor) = m1_factor {
            // m = 1: constant SPD system, reuse the shared factorization.
            let mut d = -&g;
            factor.solve_mut(&mut d);
            d
        } else {
            let mut hess = t.contract_2m_minus_2(&c)?;
            hess *= two_m - 1.0;
            for i in 0..n {
                hess[(i, i)] += rho;
            }
            let factor = Cholesky::new(hess).ok_or_else(|| {
                Error::Divergence("Newton system is not positive definite".into())
            })?;
            let mut d = -&g;
            factor.solve_mut(&mut d);
            d
        };
        let step_norm = d.norm();
        if !step_norm.is_finite() {
            return Err(Error::Divergence("non-finite Newton step".into()));
        }
        // Halving line search on the gradient norm; a full step is taken if
        // no scaled step decreases it.
        let mut accepted = c.clone();
        accepted.axpy(1.0, &d, 1.0);
        let mut scale = 1.0;
        for _ in 0..BACKTRACK_MAX {
            if grad(&accepted)?.norm() < gn {
                break;
            }
            scale *= 0.5;
            accepted = c.clone();
            accepted.axpy(scale, &d, 1.0);
        }
        c = accepted;
        iters += 1;
        if step_norm < config.eps1 {
            let gn_final = grad(&c)?.norm();
            return Ok(NewtonOutcome {
                c,
                newton_iters: iters,
                grad_norm: gn_final,
            });
        }
    }
}

/// `psi` increment between consecutive iterates: the `2m`-norm
/// `(sum_n |phi_n . (c_next - c_prev)|^{2m})^{1/(2m)}` of the feature inner
/// products of the difference.
pub fn psi_increment(
    t: &TensorHandle,
    c_prev: &DVector<f64>,
    c_next: &DVector<f64>,
) -> Result<f64> {
    let diff = c_next - c_prev;
    Ok(t.contract_full(&diff)?.powf(1.0 / t.order() as f64))
}

/// Runs the ADMM loop from the initial point `c0`.
pub fn solve(
    t: &TensorHandle,
    loss: &LossSpec,
    labels: &[f64],
    config: &SolverConfig,
    c0: &DVector<f64>,
) -> Result<SolveResult> {
    config.validate()?;
    loss.validate()?;
    let cache = if config.m == 1 {
        Some(factor_m1_system(t, config.rho())?)
    } else {
        None
    };
    solve_with_cache(t, loss, labels, config, c0, 0, cache.as_ref())
}

fn solve_with_cache(
    t: &TensorHandle,
    loss: &LossSpec,
    labels: &[f64],
    config: &SolverConfig,
    c0: &DVector<f64>,
    restart_index: usize,
    m1_factor: Option<&Cholesky<f64, Dyn>>,
) -> Result<SolveResult> {
    let n = t.n_points();
    if labels.len() != n || c0.len() != n {
        return Err(Error::Config(
            "labels and c0 must match the tensor dimension".into(),
        ));
    }
    for &y in labels {
        if !(y == 1.0 || y == -1.0) {
            return Err(Error::Data(format!("labels must be +1 or -1, got {y}")));
        }
    }
    if c0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("initial coefficients must be finite".into()));
    }
    if config.m != t.m() {
        return Err(Error::Config(format!(
            "config order m={} does not match tensor order m={}",
            config.m,
            t.m()
        )));
    }

    let nf = n as f64;
    let beta = config.beta;
    let gamma_factor = config.gamma_factor();

    let mut c = c0.clone();
    let mut gamma = &c * gamma_factor;
    let mut converged = false;
    let mut trace: Vec<TraceRecord> = Vec::new();
    let mut objective = f64::INFINITY;

    for k in 0..config.max_outer {
        let alpha = alpha_step(t, loss, labels, &c, &gamma, beta)?;
        let r = &alpha + &gamma / beta;
        let newton = newton_with_cache(t, &r, config, &c, m1_factor)?;
        let c_next = newton.c;
        gamma = &c_next * gamma_factor;

        let v_next = t.contract_2m_minus_1(&c_next)?;
        let residual_vec = &alpha - &v_next;
        let residual = residual_vec.norm();
        let psi = psi_increment(t, &c, &c_next)?;
        let full = t.contract_full(&c_next)?;

        let mut risk_alpha = 0.0;
        let mut risk_v = 0.0;
        for i in 0..n {
            risk_alpha += loss_eval(loss, labels[i], alpha[i]);
            risk_v += loss_eval(loss, labels[i], v_next[i]);
        }
        let lagrangian = risk_alpha / nf
            + config.lambda * full
            + gamma.dot(&residual_vec)
            + 0.5 * beta * residual_vec.norm_squared();
        objective = risk_v / nf + config.lambda * full;

        trace.push(TraceRecord {
            k: k + 1,
            lagrangian,
            primal_residual: residual,
            psi_increment: psi,
            newton_iters: newton.newton_iters,
            objective,
        });

        if !residual.is_finite() || !lagrangian.is_finite() || residual > DIVERGENCE_LIMIT {
            return Err(Error::Divergence(format!(
                "restart {restart_index}: outer iteration {} produced residual {residual} \
                 and Lagrangian {lagrangian}",
                k + 1
            )));
        }

        c = c_next;
        if residual < config.eps2 {
            converged = true;
            break;
        }
    }

    Ok(SolveResult {
        c,
        objective,
        converged,
        iterations: trace.len(),
        restart_index,
        trace,
    })
}

/// Runs `config.restarts` independent solves from uniform initial points and
/// returns the one with the smallest objective; exact ties go to the
/// smallest restart index. Restart `j` draws its initial point from a
/// generator seeded with `seed XOR j`, so the set of runs is identical in
/// the parallel and sequential builds.
pub fn multi_start_solve(
    t: &TensorHandle,
    loss: &LossSpec,
    labels: &[f64],
    config: &SolverConfig,
) -> Result<SolveResult> {
    config.validate()?;
    loss.validate()?;
    let cache = if config.m == 1 {
        Some(factor_m1_system(t, config.rho())?)
    } else {
        None
    };
    let n = t.n_points();
    let outcomes: Vec<Result<SolveResult>> = exec::map_collect(config.restarts, |j| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ j as u64);
        let c0 = DVector::from_fn(n, |_, _| rng.random_range(config.init_lo..config.init_hi));
        solve_with_cache(t, loss, labels, config, &c0, j, cache.as_ref())
    });
    let mut best: Option<SolveResult> = None;
    for outcome in outcomes {
        let result = outcome?;
        let replace = match &best {
            None => true,
            Some(b) => result.objective < b.objective,
        };
        if replace {
            best = Some(result);
        }
    }
    best.ok_or_else(|| Error::Config("restart count must be positive".into()))
}

/// Result of auditing an augmented Lagrangian trace for monotonicity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescentAudit {
    /// First index from which the trace is nonincreasing (within slack) to
    /// the end.
    pub monotone_from: usize,
    /// Indices i where `L[i+1] > L[i] + slack`.
    pub violations: Vec<usize>,
}

/// Audits a Lagrangian trace: a violation at i means the value increased
/// beyond `DESCENT_SLACK * (1 + |L[i]|)` from step i to i+1.
pub fn descent_audit(lagrangians: &[f64]) -> DescentAudit {
    let mut violations = Vec::new();
    for i in 0..lagrangians.len().saturating_sub(1) {
        let slack = DESCENT_SLACK * (1.0 + lagrangians[i].abs());
        if lagrangians[i + 1] > lagrangians[i] + slack {
            violations.push(i);
        }
    }
    let monotone_from = violations.last().map_or(0, |&i| i + 1);
    DescentAudit {
        monotone_from,
        violations,
    }
}

/// Writes a trace as CSV with a fixed header; float formatting is the
/// shortest round-trip decimal, so identical traces serialize to identical
/// bytes.
pub fn write_trace_csv<W: std::io::Write>(
    trace: &[TraceRecord],
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(
        out,
        "k,lagrangian,primal_residual,psi_increment,newton_iters,objective"
    )?;
    for rec in trace {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            rec.k,
            rec.lagrangian,
            rec.primal_residual,
            rec.psi_increment,
            rec.newton_iters,
            rec.objective
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{build_feature_matrix, KernelSpec};
    use crate::loss::builtin;
    use crate::tensor::augmented_lagrangian;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand_chacha::ChaCha8Rng;

    fn handle(rows: &[&[f64]], m: usize) -> TensorHandle {
        let nrows = rows.len();
        let ncols = rows[0].len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        TensorHandle::from_matrix(DMatrix::from_row_slice(nrows, ncols, &flat), m).unwrap()
    }

    fn config(m: usize, lambda: f64, beta: f64) -> SolverConfig {
        SolverConfig {
            m,
            lambda,
            beta,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn gamma_step_scales_coefficients() {
        let cfg = config(2, 0.04, 1.0);
        let g = gamma_step(&cfg, &DVector::from_vec(vec![3.0]));
        assert_relative_eq!(g[0], 0.16, epsilon = 1e-15);
    }

    #[test]
    fn rho_reduces_to_two_lambda_over_beta_for_m1() {
        let cfg = config(1, 0.3, 1.5);
        assert_relative_eq!(cfg.rho(), 0.4, epsilon = 1e-15);
    }

    #[test]
    fn newton_m1_is_a_single_linear_solve() {
        // phi = (3), m = 1, lambda = beta = 1: (9 + 2) c = r.
        let t = handle(&[&[3.0]], 1);
        let cfg = config(1, 1.0, 1.0);
        let out = newton_c_step(
            &t,
            &DVector::from_vec(vec![22.0]),
            &DVector::zeros(1),
            &cfg,
            &DVector::zeros(1),
        )
        .unwrap();
        assert_relative_eq!(out.c[0], 2.0, epsilon = 1e-10);
        assert_eq!(out.newton_iters, 1);
    }

    #[test]
    fn newton_zero_target_returns_zero() {
        let t = handle(&[&[1.0, 0.5], &[0.0, 2.0]], 1);
        let cfg = config(1, 0.5, 2.0);
        let out = newton_c_step(
            &t,
            &DVector::zeros(2),
            &DVector::zeros(2),
            &cfg,
            &DVector::from_vec(vec![1.0, -1.0]),
        )
        .unwrap();
        assert!(out.c.norm() < 1e-12, "c = {}", out.c);
    }

    #[test]
    fn newton_scalar_cube_root() {
        // m = 2, phi = (1), lambda = 0: gradient is c^3 - r, so c -> r^{1/3}.
        let t = handle(&[&[1.0]], 2);
        let mut cfg = config(2, 1.0, 1.0);
        cfg.lambda = 0.0;
        cfg.eps1 = 1e-14;
        let out = newton_c_step(
            &t,
            &DVector::from_vec(vec![8.0]),
            &DVector::zeros(1),
            &cfg,
            &DVector::from_vec(vec![1.0]),
        )
        .unwrap();
        assert_relative_eq!(out.c[0], 2.0, epsilon = 1e-10);
    }

    #[test]
    fn newton_certificate_random_small() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let n = rng.random_range(1..=6);
            let mt = rng.random_range(1..=8);
            let m = rng.random_range(1..=3);
            let data: Vec<f64> = (0..n * mt).map(|_| rng.random_range(-1.5..1.5)).collect();
            let t = TensorHandle::from_matrix(DMatrix::from_vec(mt, n, data), m).unwrap();
            let cfg = config(m, rng.random_range(0.01..1.0), rng.random_range(0.1..2.0));
            let alpha = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
            let gamma = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let out = newton_c_step(&t, &alpha, &gamma, &cfg, &DVector::zeros(n)).unwrap();
            let r = &alpha + &gamma / cfg.beta;
            assert!(
                out.grad_norm <= 1e-9 * (1.0 + r.norm()),
                "m={m} grad={}",
                out.grad_norm
            );
            if m == 1 {
                assert_eq!(out.newton_iters, 1);
            }
        }
    }

    fn two_point_problem_m(m: usize) -> (TensorHandle, Vec<f64>) {
        let kernel = KernelSpec::gaussian(1, 1.0);
        let fm = build_feature_matrix(&kernel, 8, &[vec![-0.5], vec![0.5]]).unwrap();
        (
            TensorHandle::from_feature_matrix(&fm, m).unwrap(),
            vec![-1.0, 1.0],
        )
    }

    fn two_point_problem() -> (TensorHandle, Vec<f64>) {
        two_point_problem_m(1)
    }

    #[test]
    fn solve_separates_two_points() {
        let (t, labels) = two_point_problem();
        let mut cfg = config(1, 1e-4, 1.0);
        cfg.eps2 = 1e-9;
        let out = solve(&t, &builtin::hinge(), &labels, &cfg, &DVector::zeros(2)).unwrap();
        assert!(out.converged, "iterations = {}", out.iterations);
        // Weak regularization leaves both margins beyond 1: pure penalty
        // objective.
        let v = t.contract_2m_minus_1(&out.c).unwrap();
        assert!(-v[0] >= 1.0 - 1e-6 && v[1] >= 1.0 - 1e-6, "margins {v}");
        let penalty = cfg.lambda * t.contract_full(&out.c).unwrap();
        assert_relative_eq!(out.objective, penalty, epsilon = 1e-9);
    }

    #[test]
    fn trace_lagrangian_matches_recomputation() {
        // The streamed Lagrangian value must agree with the standalone
        // evaluation at the recorded iterates; replay the loop by hand.
        let (t, labels) = two_point_problem();
        let cfg = config(1, 0.05, 0.7);
        let loss = builtin::squared_hinge();
        let c0 = DVector::from_vec(vec![0.3, -0.2]);
        let out = solve(&t, &loss, &labels, &cfg, &c0).unwrap();

        let mut c = c0.clone();
        for rec in &out.trace {
            let gamma = gamma_step(&cfg, &c);
            let alpha = alpha_step(&t, &loss, &labels, &c, &gamma, cfg.beta).unwrap();
            let newton = newton_c_step(&t, &alpha, &gamma, &cfg, &c).unwrap();
            let gamma_next = gamma_step(&cfg, &newton.c);
            let lag = augmented_lagrangian(
                &t,
                &alpha,
                &newton.c,
                &gamma_next,
                cfg.beta,
                &loss,
                &labels,
                cfg.lambda,
            )
            .unwrap();
            assert_relative_eq!(rec.lagrangian, lag, epsilon = 1e-12, max_relative = 1e-12);
            c = newton.c;
        }
    }

    #[test]
    fn residual_tracks_coefficient_movement() {
        // With gamma = rho beta c_k and an exact subproblem solve, the primal
        // residual equals rho ||c_{k+1} - c_k|| up to the Newton gradient.
        let (t, labels) = two_point_problem();
        let cfg = config(1, 0.05, 0.7);
        let loss = builtin::hinge();
        let c = DVector::from_vec(vec![0.4, 0.1]);
        let gamma = gamma_step(&cfg, &c);
        let alpha = alpha_step(&t, &loss, &labels, &c, &gamma, cfg.beta).unwrap();
        let newton = newton_c_step(&t, &alpha, &gamma, &cfg, &c).unwrap();
        let v = t.contract_2m_minus_1(&newton.c).unwrap();
        let residual = (&alpha - &v).norm();
        let predicted = cfg.rho() * (&newton.c - &c).norm();
        assert!((residual - predicted).abs() <= 10.0 * newton.grad_norm + 1e-9);
    }

    #[test]
    fn solve_single_iteration_budget() {
        let (t, labels) = two_point_problem();
        let mut cfg = config(1, 0.1, 1.0);
        cfg.max_outer = 1;
        let out = solve(&t, &builtin::hinge(), &labels, &cfg, &DVector::zeros(2)).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn solve_rejects_bad_labels() {
        let (t, _) = two_point_problem();
        let cfg = config(1, 0.1, 1.0);
        let bad = vec![1.0, 0.5];
        assert!(solve(&t, &builtin::hinge(), &bad, &cfg, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn gamma_consistency_along_the_run() {
        // After each outer iteration gamma is exactly the scaled iterate; the
        // relation survives the whole run by construction.
        let (t, labels) = two_point_problem_m(2);
        let cfg = config(2, 0.05, 1.0);
        let out = solve(
            &t,
            &builtin::hinge(),
            &labels,
            &cfg,
            &DVector::from_vec(vec![0.2, 0.2]),
        );
        let out = out.unwrap();
        let gamma = gamma_step(&cfg, &out.c);
        assert_relative_eq!(
            (gamma - &out.c * cfg.gamma_factor()).norm(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn multi_start_is_deterministic() {
        let (t, labels) = two_point_problem_m(2);
        let mut cfg = config(2, 0.01, 1.0);
        cfg.restarts = 4;
        cfg.max_outer = 60;
        cfg.eps2 = 1e-7;
        let a = multi_start_solve(&t, &builtin::hinge(), &labels, &cfg).unwrap();
        let b = multi_start_solve(&t, &builtin::hinge(), &labels, &cfg).unwrap();
        assert_eq!(a.c, b.c);
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.restart_index, b.restart_index);
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn multi_start_picks_the_best_restart() {
        let (t, labels) = two_point_problem_m(2);
        let mut cfg = config(2, 0.01, 1.0);
        cfg.restarts = 5;
        cfg.max_outer = 60;
        cfg.eps2 = 1e-7;
        let best = multi_start_solve(&t, &builtin::hinge(), &labels, &cfg).unwrap();
        for j in 0..cfg.restarts {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ j as u64);
            let c0 = DVector::from_fn(2, |_, _| rng.random_range(cfg.init_lo..cfg.init_hi));
            let single = solve(&t, &builtin::hinge(), &labels, &cfg, &c0).unwrap();
            assert!(best.objective <= single.objective + 1e-15, "restart {j}");
            if j == best.restart_index {
                assert_eq!(best.c, single.c);
            }
        }
    }

    #[test]
    fn psi_increment_examples() {
        // Identity features, m = 2, step (1,1): (1^4 + 1^4)^{1/4}.
        let t = handle(&[&[1.0, 0.0], &[0.0, 1.0]], 2);
        let psi =
            psi_increment(&t, &DVector::zeros(2), &DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert_relative_eq!(psi, 2f64.powf(0.25), epsilon = 1e-12);

        let t1 = handle(&[&[1.0, 0.0]], 1);
        let psi1 =
            psi_increment(&t1, &DVector::zeros(2), &DVector::from_vec(vec![3.0, 7.0])).unwrap();
        assert_relative_eq!(psi1, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn descent_audit_examples() {
        let clean = descent_audit(&[5.0, 4.0, 3.0, 3.0, 2.5]);
        assert_eq!(clean.monotone_from, 0);
        assert!(clean.violations.is_empty());

        let bumpy = descent_audit(&[3.0, 5.0, 4.0, 3.0, 2.0]);
        assert_eq!(bumpy.monotone_from, 1);
        assert_eq!(bumpy.violations, vec![0]);
    }

    #[test]
    fn trace_csv_golden() {
        let trace = vec![
            TraceRecord {
                k: 1,
                lagrangian: 1.5,
                primal_residual: 0.25,
                psi_increment: 0.5,
                newton_iters: 2,
                objective: 1.25,
            },
            TraceRecord {
                k: 2,
                lagrangian: 1.0,
                primal_residual: 0.125,
                psi_increment: 0.25,
                newton_iters: 1,
                objective: 1.0,
            },
        ];
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "k,lagrangian,primal_residual,psi_increment,newton_iters,objective\n\
             1,1.5,0.25,0.5,2,1.25\n\
             2,1,0.125,0.25,1,1\n"
        );
    }

    #[test]
    fn alpha_step_mixed_labels_at_origin() {
        // c = 0, gamma = 0: every prox target is 0; with beta n = 1 both
        // labels land exactly on their margins.
        let t = handle(&[&[1.0, 0.0], &[0.0, 1.0]], 1);
        let labels = [1.0, -1.0];
        let alpha = alpha_step(
            &t,
            &builtin::hinge(),
            &labels,
            &DVector::zeros(2),
            &DVector::zeros(2),
            0.5,
        )
        .unwrap();
        assert_eq!(alpha[0], 1.0);
        assert_eq!(alpha[1], -1.0);
    }
}
