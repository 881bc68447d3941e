use crate::error::{Error, Result};
use crate::linalg::{pinv, svd};
use crate::matrix::DenseMatrix;
use crate::rng::RngSeed;
use crate::sampling::{sample_indices, Probabilities, SampleMode};
use crate::scalar::Real;

/// Output of [`linear_time_svd`].
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSketchSvd<T> {
    /// `m × c` rescaled sampled columns.
    pub c_mat: DenseMatrix<T>,
    /// `m × k` orthonormal, top left singular vectors of `C`.
    pub h_k: DenseMatrix<T>,
    pub sigma_c: Vec<T>,
    pub k: usize,
    pub indices: Vec<usize>,
    /// Set when `rank(C) < k` and `H` was truncated to `rank(C)` columns.
    pub truncated: bool,
}

impl<T: Real> ColumnSketchSvd<T> {
    /// `H_k H_kᵀ A`.
    pub fn project(&self, a: &DenseMatrix<T>) -> DenseMatrix<T> {
        self.h_k.matmul(&self.h_k.t_matmul(a))
    }
}

/// Samples `c` columns with `probs`, rescales by `1/√(c p_i)` and returns
/// the top-`k` left singular vectors of the sample.
pub fn linear_time_svd<T: Real>(a: &DenseMatrix<T>, c: usize, k: usize, probs: &Probabilities<T>, seed: RngSeed) -> Result<ColumnSketchSvd<T>> {
    let n = a.cols();
    if k == 0 || k > c || c > n {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= c <= n, got k={k}, c={c}, n={n}")));
    }
    if probs.len() != n {
        return Err(Error::DimensionMismatch(format!("{} probabilities for {n} columns", probs.len())));
    }
    let sample = sample_indices(probs, c, SampleMode::ExactC, seed)?;
    let c_mat = a.select_cols(&sample.indices).scale_cols(&sample.scales);
    let s = svd(&c_mat);
    let rank = s.rank(None);
    let kk = k.min(rank);
    Ok(ColumnSketchSvd {
        h_k: s.u_k(kk),
        sigma_c: s.sigma[..kk].to_vec(),
        k: kk,
        c_mat,
        indices: sample.indices,
        truncated: kk < k,
    })
}

/// Output of [`select_columns`].
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSelection<T> {
    /// Selected columns of `A`, unscaled, in selection order.
    pub c_mat: DenseMatrix<T>,
    pub indices: Vec<usize>,
    /// `‖A − CC⁺A‖_F` after each completed round.
    pub residuals: Vec<T>,
    /// Set when a round found a zero residual and stopped early.
    pub early_stop: bool,
}

/// `A − CC⁺A`.
pub fn projection_residual<T: Real>(a: &DenseMatrix<T>, c: &DenseMatrix<T>) -> DenseMatrix<T> {
    if c.cols() == 0 {
        return a.clone();
    }
    let proj = c.matmul(&pinv(c, None).matmul(a));
    a - &proj
}

/// `t` rounds of `c` columns each. Round `ℓ` samples with probabilities
/// proportional to the squared column norms of the residual
/// `E_ℓ = A − C C⁺ A` of everything selected so far.
pub fn select_columns<T: Real>(a: &DenseMatrix<T>, c: usize, rounds: usize, seed: RngSeed) -> Result<ColumnSelection<T>> {
    if c == 0 || rounds == 0 {
        return Err(Error::InvalidParameter("select_columns needs c >= 1 and t >= 1".into()));
    }
    if a.is_empty() || a.is_zero() {
        return Err(Error::ZeroMatrix("select_columns"));
    }
    let scale = a.frobenius_norm();
    let mut indices = Vec::new();
    let mut residuals = Vec::new();
    let mut residual = a.clone();
    let mut c_mat = DenseMatrix::zeros(a.rows(), 0);
    for round in 0..rounds {
        let weights = residual.col_norms_sq();
        let total = weights.iter().fold(T::zero(), |s, &w| s + w);
        if total.sqrt() <= T::lit(1e-13) * scale {
            return Ok(ColumnSelection { c_mat, indices, residuals, early_stop: true });
        }
        let probs = Probabilities::from_weights(&weights)?;
        let sample = sample_indices(&probs, c, SampleMode::ExactC, seed.child(round as u64))?;
        indices.extend_from_slice(&sample.indices);
        c_mat = a.select_cols(&indices);
        residual = projection_residual(a, &c_mat);
        residuals.push(residual.frobenius_norm());
    }
    Ok(ColumnSelection { c_mat, indices, residuals, early_stop: false })
}
