//! Overdetermined least squares: direct baseline, sketch-and-solve, and the
//! sketch-preconditioned iterative solver.

mod lsqr;
mod precond;

pub use lsqr::lsqr;
pub use precond::{build_preconditioner, solve_precond, solve_precond_with, PrecondConfig, Preconditioner};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::leverage::{leverage_exact, leverage_fast};
use crate::linalg::{orthonormal_basis, pinv, singular_values, solve_upper, svd, thin_qr};
use crate::matrix::{norm2, sub_vec, DenseMatrix};
use crate::rng::RngSeed;
use crate::sampling::{sample_indices, Probabilities, SampleMode};
use crate::scalar::Real;
use crate::sketch::{make_sketch, SketchKind, SketchOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SketchStrategy {
    /// Row sampling by exact leverage scores.
    LeverageSample,
    /// Row sampling by fast approximate leverage scores.
    FastLeverageSample,
    /// Uniform row sampling.
    Uniform,
    Srht,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LsMethod {
    Exact,
    Sketched(SketchStrategy),
    Lsqr,
    Precond,
}

impl fmt::Display for LsMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LsMethod::Exact => "exact",
            LsMethod::Sketched(SketchStrategy::LeverageSample) => "leverage",
            LsMethod::Sketched(SketchStrategy::FastLeverageSample) => "fast-leverage",
            LsMethod::Sketched(SketchStrategy::Uniform) => "uniform",
            LsMethod::Sketched(SketchStrategy::Srht) => "srht",
            LsMethod::Sketched(SketchStrategy::Gaussian) => "gaussian",
            LsMethod::Lsqr => "lsqr",
            LsMethod::Precond => "precond",
        };
        f.write_str(s)
    }
}

impl FromStr for LsMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "exact" | "qr" => LsMethod::Exact,
            "leverage" | "leverage-sample" => LsMethod::Sketched(SketchStrategy::LeverageSample),
            "fast-leverage" => LsMethod::Sketched(SketchStrategy::FastLeverageSample),
            "uniform" => LsMethod::Sketched(SketchStrategy::Uniform),
            "srht" => LsMethod::Sketched(SketchStrategy::Srht),
            "gaussian" => LsMethod::Sketched(SketchStrategy::Gaussian),
            "lsqr" => LsMethod::Lsqr,
            "precond" | "blendenpik" => LsMethod::Precond,
            other => return Err(Error::InvalidParameter(format!("unknown least-squares method '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsSolution<T> {
    pub x: Vec<T>,
    /// `‖Ax − b‖`, recomputed from the inputs.
    pub residual_norm: T,
    pub method: LsMethod,
    pub iterations: usize,
    pub precond_condition_estimate: Option<T>,
    pub retries: usize,
    pub success: bool,
    pub diagnostic: Option<String>,
}

pub(crate) fn residual_norm<T: Real>(a: &DenseMatrix<T>, x: &[T], b: &[T]) -> T {
    norm2(&sub_vec(&a.matvec(x), b))
}

fn check_tall<T: Real>(a: &DenseMatrix<T>, b: &[T]) -> Result<()> {
    let (m, n) = a.shape();
    if a.is_empty() {
        return Err(Error::EmptyInput("least-squares matrix"));
    }
    if b.len() != m {
        return Err(Error::IncompatibleRhs(format!("b has length {}, A has {m} rows", b.len())));
    }
    if m < n {
        return Err(Error::DimensionMismatch(format!("least squares needs m >= n, got {m}x{n}")));
    }
    Ok(())
}

/// Minimal-norm least-squares solution. Full-rank systems go through a thin
/// QR (`R x = Qᵀ b`); rank-deficient ones through the pseudo-inverse.
pub fn solve_exact<T: Real>(a: &DenseMatrix<T>, b: &[T]) -> Result<LsSolution<T>> {
    check_tall(a, b)?;
    let n = a.cols();
    let (q, r) = thin_qr(a);
    let sv = singular_values(&r);
    let tol = crate::linalg::default_rank_tolerance(a.rows(), n, sv[0]);
    let full_rank = sv[0] > T::zero() && sv.iter().filter(|&&s| s > tol).count() == n;
    let x = if full_rank { solve_upper(&r, &q.t_matvec(b)) } else { pinv(a, None).matvec(b) };
    Ok(LsSolution {
        residual_norm: residual_norm(a, &x, b),
        x,
        method: LsMethod::Exact,
        iterations: 0,
        precond_condition_estimate: None,
        retries: 0,
        success: true,
        diagnostic: None,
    })
}

/// Sketch size `⌈c_r d ln d / ε²⌉` (with `ln d` floored at 1).
pub fn sketch_size(d: usize, eps: f64, c_r: f64) -> usize {
    let l = (d as f64).ln().max(1.0);
    (c_r * d as f64 * l / (eps * eps)).ceil() as usize
}

/// The sketching operator `X` (`r × m`) used by [`solve_sketched`].
pub fn ls_sketch<T: Real>(a: &DenseMatrix<T>, strategy: SketchStrategy, r: usize, seed: RngSeed) -> Result<SketchOperator<T>> {
    let m = a.rows();
    let sampled = |probs: Probabilities<T>| -> Result<SketchOperator<T>> {
        let s = sample_indices(&probs, r, SampleMode::ExactC, seed.child(1))?;
        Ok(SketchOperator::from_sample(s, seed))
    };
    match strategy {
        SketchStrategy::LeverageSample => sampled(leverage_exact(a)?.probs),
        SketchStrategy::FastLeverageSample => sampled(leverage_fast(a, 0.5, seed.child(2))?.probs),
        SketchStrategy::Uniform => sampled(Probabilities::uniform(m)),
        SketchStrategy::Srht => make_sketch(SketchKind::Srht, m, r, seed),
        SketchStrategy::Gaussian => make_sketch(SketchKind::Gaussian, m, r, seed),
    }
}

/// `x̃ = (XA)⁺ X b`. A rank-deficient `XA` yields `success = false`.
pub fn solve_sketched<T: Real>(a: &DenseMatrix<T>, b: &[T], strategy: SketchStrategy, r: usize, seed: RngSeed) -> Result<LsSolution<T>> {
    check_tall(a, b)?;
    let n = a.cols();
    if r < n {
        return Err(Error::InvalidParameter(format!("sketch size r = {r} is below n = {n}")));
    }
    let op = ls_sketch(a, strategy, r, seed)?;
    solve_with_operator(a, b, &op, LsMethod::Sketched(strategy))
}

/// Sketch-and-solve with a caller-supplied operator.
pub fn solve_with_operator<T: Real>(a: &DenseMatrix<T>, b: &[T], op: &SketchOperator<T>, method: LsMethod) -> Result<LsSolution<T>> {
    check_tall(a, b)?;
    let n = a.cols();
    let sa = op.apply_left(a)?;
    let sb = op.apply_vector(b)?;
    let s = svd(&sa);
    let rank = s.rank(None);
    let x = pinv(&sa, None).matvec(&sb);
    let success = rank == n;
    Ok(LsSolution {
        residual_norm: residual_norm(a, &x, b),
        x,
        method,
        iterations: 0,
        precond_condition_estimate: None,
        retries: 0,
        success,
        diagnostic: (!success).then(|| format!("sketched matrix has rank {rank} < {n}; re-seed or enlarge the sketch")),
    })
}

/// Structural quantities of a sketch `X` relative to `(A, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport<T> {
    /// `σ_min(X U_A)`.
    pub sigma_min_xu: T,
    /// `‖U_Aᵀ XᵀX b⊥‖²`.
    pub cross_term: T,
    /// `Z = ‖b⊥‖`, the optimal residual.
    pub z: T,
}

impl<T: Real> ConditionReport<T> {
    /// `σ²_min(X U_A) ≥ 1/√2`.
    pub fn condition_one(&self) -> bool {
        self.sigma_min_xu * self.sigma_min_xu >= T::one() / T::lit(2.0).sqrt()
    }

    /// `‖U_Aᵀ XᵀX b⊥‖² ≤ (ε/2) Z²`.
    pub fn condition_two(&self, eps: T) -> bool {
        self.cross_term <= eps / T::lit(2.0) * self.z * self.z
    }

    pub fn holds(&self, eps: T) -> bool {
        self.condition_one() && self.condition_two(eps)
    }
}

pub fn check_conditions<T: Real>(a: &DenseMatrix<T>, b: &[T], op: &SketchOperator<T>) -> Result<ConditionReport<T>> {
    check_tall(a, b)?;
    let u = orthonormal_basis(a, None);
    let proj = u.matvec(&u.t_matvec(b));
    let b_perp = sub_vec(b, &proj);
    let xu = op.apply_left(&u)?;
    let sv = singular_values(&xu);
    let sigma_min_xu = if xu.rows() < u.cols() { T::zero() } else { sv.last().copied().unwrap_or_else(T::zero) };
    let xb = op.apply_vector(&b_perp)?;
    let cross = xu.t_matvec(&xb);
    Ok(ConditionReport { sigma_min_xu, cross_term: crate::matrix::dot(&cross, &cross), z: norm2(&b_perp) })
}
