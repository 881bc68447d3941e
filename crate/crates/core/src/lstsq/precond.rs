//! Sketch-to-precondition solver: randomized Hadamard mixing, uniform row
//! sampling, QR of the sample, and LSQR on `A R⁻¹`.

use super::lsqr::lsqr;
use super::{solve_exact, LsMethod, LsSolution};
use crate::error::{Error, Result};
use crate::hadamard::RandomizedHadamard;
use crate::linalg::{cond1_estimate_upper, thin_qr};
use crate::matrix::DenseMatrix;
use crate::rng::RngSeed;
use crate::scalar::Real;

/// Upper-triangular preconditioner from one sampling attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct Preconditioner<T> {
    pub r: DenseMatrix<T>,
    /// Estimate of `κ₁(R)`.
    pub condition_estimate: T,
    /// Rows of the mixed matrix `HDA` that were sampled.
    pub rows: Vec<usize>,
}

impl<T: Real> Preconditioner<T> {
    /// Retry gate: `κ̃⁻¹ > 5 ε_mach`.
    pub fn acceptable(&self) -> bool {
        self.condition_estimate.finite() && T::one() / self.condition_estimate > T::lit(5.0) * T::machine_eps()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecondConfig {
    pub max_attempts: usize,
    pub lsqr_tol: f64,
    pub max_iter: usize,
    /// Skip the Hadamard mixing and sample rows of `A` directly.
    pub skip_mixing: bool,
}

impl Default for PrecondConfig {
    fn default() -> Self {
        Self { max_attempts: 3, lsqr_tol: 1e-14, max_iter: 1000, skip_mixing: false }
    }
}

/// Draws `r = ⌈γ n⌉` distinct rows uniformly from `HDA` (or `A` itself when
/// `mix` is false) and returns `R` from the QR of the sample.
pub fn build_preconditioner<T: Real>(a: &DenseMatrix<T>, gamma: f64, mix: bool, seed: RngSeed) -> Result<Preconditioner<T>> {
    let (m, n) = a.shape();
    if !(gamma >= 1.0) {
        return Err(Error::InvalidParameter(format!("gamma must be at least 1, got {gamma}")));
    }
    let r = ((gamma * n as f64).ceil() as usize).max(n);
    let (pool, transform) = if mix {
        let t = RandomizedHadamard::new(m, seed.child(0));
        (t.padded_dim, Some(t))
    } else {
        (m, None)
    };
    if r > pool {
        return Err(Error::InvalidParameter(format!("cannot sample {r} rows from {pool}")));
    }
    let mut rng = seed.child(1).rng();
    let mut perm: Vec<usize> = (0..pool).collect();
    for i in 0..r {
        let j = i + rng.index(pool - i);
        perm.swap(i, j);
    }
    perm.truncate(r);
    perm.sort_unstable();
    let sample = match &transform {
        Some(t) => t.apply_columns_select(a, &perm, T::one()),
        None => a.select_rows(&perm),
    };
    let (_, rr) = thin_qr(&sample);
    let condition_estimate = cond1_estimate_upper(&rr);
    Ok(Preconditioner { r: rr, condition_estimate, rows: perm })
}

pub fn solve_precond<T: Real>(a: &DenseMatrix<T>, b: &[T], gamma: f64, tol: f64, seed: RngSeed) -> Result<LsSolution<T>> {
    solve_precond_with(a, b, gamma, seed, &PrecondConfig { lsqr_tol: tol, ..Default::default() })
}

/// Up to `max_attempts` preconditioner draws; the first that passes the
/// condition gate drives LSQR. If every attempt fails, or LSQR does not
/// converge, the direct solver answers instead.
pub fn solve_precond_with<T: Real>(a: &DenseMatrix<T>, b: &[T], gamma: f64, seed: RngSeed, config: &PrecondConfig) -> Result<LsSolution<T>> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::IncompatibleRhs(format!("b has length {}, A has {m} rows", b.len())));
    }
    if m < 4 * n {
        return Err(Error::InvalidParameter(format!("preconditioned solver needs m >= 4n, got {m}x{n}")));
    }
    if !(gamma >= 1.5) {
        return Err(Error::InvalidParameter(format!("gamma must be at least 1.5, got {gamma}")));
    }
    let mut last_estimate = None;
    for attempt in 0..config.max_attempts {
        let pre = build_preconditioner(a, gamma, !config.skip_mixing, seed.child(attempt as u64))?;
        last_estimate = Some(pre.condition_estimate);
        if !pre.acceptable() {
            continue;
        }
        let mut sol = lsqr(a, b, Some(&pre.r), T::lit(config.lsqr_tol), config.max_iter)?;
        sol.method = LsMethod::Precond;
        sol.precond_condition_estimate = Some(pre.condition_estimate);
        sol.retries = attempt;
        if sol.success {
            return Ok(sol);
        }
        let mut exact = solve_exact(a, b)?;
        exact.method = LsMethod::Precond;
        exact.precond_condition_estimate = Some(pre.condition_estimate);
        exact.retries = attempt;
        exact.iterations = sol.iterations;
        exact.diagnostic = Some(format!("lsqr stopped after {} iterations; used the direct solver", sol.iterations));
        return Ok(exact);
    }
    let mut exact = solve_exact(a, b)?;
    exact.method = LsMethod::Precond;
    exact.precond_condition_estimate = last_estimate;
    exact.retries = config.max_attempts;
    exact.diagnostic = Some(format!("no acceptable preconditioner in {} attempts; used the direct solver", config.max_attempts));
    Ok(exact)
}
