//! Approximate matrix multiplication by sampled outer products.
//!
//! `AB = Σ_k A^{(k)} B_{(k)}` is estimated from `c` i.i.d. draws of the
//! index `k` with probabilities `p_k`, each term rescaled by `1/(c p_k)`.
//! The estimator `CR` is entrywise unbiased whenever `p_k > 0` for every
//! `k` with a nonzero summand.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::RngSeed;
use crate::sampling::{sample_indices, Probabilities, SampleMode};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProbMode {
    /// `p_k ∝ ‖A^{(k)}‖·‖B_{(k)}‖`, minimizing `E‖AB − CR‖_F²`.
    Optimal,
    /// `p_k ∝ ‖A^{(k)}‖`.
    FromA,
    /// `p_k = ‖A^{(k)}‖² / ‖A‖_F²`.
    FromASquared,
    /// `p_k = 1/n`.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatmulSample<T> {
    /// `m × c`, rescaled sampled columns of `A`.
    pub c_mat: DenseMatrix<T>,
    /// `c × p`, rescaled sampled rows of `B` (same index sequence).
    pub r_mat: DenseMatrix<T>,
    pub indices: Vec<usize>,
    pub probs_used: Probabilities<T>,
    pub c: usize,
    /// `min_k p_k / p_k^{opt}`; equal to one for the optimal distribution.
    pub beta: T,
}

impl<T: Real> MatmulSample<T> {
    pub fn product(&self) -> DenseMatrix<T> {
        self.c_mat.matmul(&self.r_mat)
    }
}

fn check_inner<T: Real>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<()> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "inner dimensions differ: A is {}x{}, B is {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

/// Column norms of `A` times row norms of `B`, the optimal-probability weights.
fn optimal_weights<T: Real>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Vec<T> {
    let ac = a.col_norms_sq();
    let br = b.row_norms_sq();
    ac.iter().zip(&br).map(|(&x, &y)| x.sqrt() * y.sqrt()).collect()
}

/// Sampling distribution over the inner index `k ∈ [n]` of `AB`.
pub fn matmul_probs<T: Real>(a: &DenseMatrix<T>, b: Option<&DenseMatrix<T>>, mode: ProbMode) -> Result<Probabilities<T>> {
    if a.is_empty() || a.is_zero() {
        return Err(Error::DegenerateProbabilities);
    }
    match mode {
        ProbMode::Optimal => {
            let b = b.ok_or_else(|| Error::InvalidParameter("optimal probabilities need B".into()))?;
            check_inner(a, b)?;
            Probabilities::from_weights(&optimal_weights(a, b))
        }
        ProbMode::FromA => {
            let w: Vec<T> = a.col_norms_sq().into_iter().map(|x| x.sqrt()).collect();
            Probabilities::from_weights(&w)
        }
        ProbMode::FromASquared => Probabilities::from_weights(&a.col_norms_sq()),
        ProbMode::Uniform => Ok(Probabilities::uniform(a.cols())),
    }
}

/// Samples `c` outer products `A^{(i_t)} B_{(i_t)} / (c p_{i_t})`.
pub fn approx_multiply<T: Real>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    c: usize,
    probs: &Probabilities<T>,
    seed: RngSeed,
) -> Result<MatmulSample<T>> {
    check_inner(a, b)?;
    if probs.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!("{} probabilities for inner dimension {}", probs.len(), a.cols())));
    }
    let w = optimal_weights(a, b);
    if let Some(k) = (0..w.len()).find(|&k| probs.get(k) == T::zero() && w[k] > T::zero()) {
        return Err(Error::InvalidProbabilities(format!(
            "p_{k} = 0 but the k-th outer product is nonzero; the estimator would be biased"
        )));
    }
    let sample = sample_indices(probs, c, SampleMode::ExactC, seed)?;
    let c_mat = a.select_cols(&sample.indices).scale_cols(&sample.scales);
    let r_mat = b.select_rows(&sample.indices).scale_rows(&sample.scales);
    let beta = match Probabilities::from_weights(&w) {
        Ok(opt) => probs.beta_against(&opt),
        Err(_) => T::one(),
    };
    Ok(MatmulSample { c_mat, r_mat, indices: sample.indices, probs_used: probs.clone(), c, beta })
}

/// `C` with `CCᵀ ≈ AAᵀ` (the `B = Aᵀ` case of [`approx_multiply`]).
pub fn gram_sketch<T: Real>(a: &DenseMatrix<T>, c: usize, probs: &Probabilities<T>, seed: RngSeed) -> Result<DenseMatrix<T>> {
    if a.is_empty() || a.is_zero() {
        return Err(Error::ZeroMatrix("gram_sketch"));
    }
    if probs.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!("{} probabilities for {} columns", probs.len(), a.cols())));
    }
    let norms = a.col_norms_sq();
    if let Some(k) = (0..norms.len()).find(|&k| probs.get(k) == T::zero() && norms[k] > T::zero()) {
        return Err(Error::InvalidProbabilities(format!("p_{k} = 0 for a nonzero column")));
    }
    let sample = sample_indices(probs, c, SampleMode::ExactC, seed)?;
    Ok(a.select_cols(&sample.indices).scale_cols(&sample.scales))
}

/// Closed-form `E‖AB − CR‖_F² = (1/c)Σ_k ‖A^{(k)}‖²‖B_{(k)}‖²/p_k − (1/c)‖AB‖_F²`.
pub fn expected_squared_error<T: Real>(a: &DenseMatrix<T>, b: &DenseMatrix<T>, probs: &Probabilities<T>, c: usize) -> Result<T> {
    check_inner(a, b)?;
    let w = optimal_weights(a, b);
    let mut s = T::zero();
    for (k, &wk) in w.iter().enumerate() {
        if wk > T::zero() {
            s += wk * wk / probs.get(k);
        }
    }
    let cf = T::of_count(c);
    Ok((s - a.matmul(b).frobenius_norm_sq()) / cf)
}

/// Number of samples that makes `‖AB − CR‖₂ ≤ ε` with probability `1 − δ`
/// for `‖A‖₂ ≤ 1`: `⌈(96F/(βε²))·ln(96F/(βε²√δ))⌉` with `F = ‖A‖_F²`.
pub fn spectral_sample_size(frob_a2: f64, beta: f64, eps: f64, delta: f64) -> Result<usize> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParameter(format!("beta must lie in (0,1], got {beta}")));
    }
    if !(eps > 0.0 && eps < 1.0 + 1e-15) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0,1], got {eps}")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0,1], got {delta}")));
    }
    if !(frob_a2.is_finite() && frob_a2 >= 1.0 / 24.0) {
        return Err(Error::InvalidParameter(format!("squared Frobenius norm must be at least 1/24, got {frob_a2}")));
    }
    let base = 96.0 * frob_a2 / (beta * eps * eps);
    Ok((base * (base / delta.sqrt()).ln()).ceil() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probability_modes() {
        let i2 = DenseMatrix::<f64>::identity(2);
        let p = matmul_probs(&i2, Some(&i2), ProbMode::Optimal).unwrap();
        assert_eq!(p.as_slice(), &[0.5, 0.5]);
        let a = DenseMatrix::from_rows(&[[1.0f64, 0.0], [0.0, 2.0]]).unwrap();
        let p = matmul_probs(&a, None, ProbMode::FromASquared).unwrap();
        assert!((p.get(0) - 0.2).abs() < 1e-15 && (p.get(1) - 0.8).abs() < 1e-15);
        let z = DenseMatrix::from_rows(&[[1.0, 0.0, 3.0], [2.0, 0.0, 1.0]]).unwrap();
        for mode in [ProbMode::FromA, ProbMode::FromASquared] {
            assert_eq!(matmul_probs(&z, None, mode).unwrap().get(1), 0.0);
        }
        assert_eq!(matmul_probs(&z, Some(&DenseMatrix::identity(3)), ProbMode::Optimal).unwrap().get(1), 0.0);
        assert_eq!(matmul_probs(&DenseMatrix::<f64>::zeros(2, 2), None, ProbMode::Uniform), Err(Error::DegenerateProbabilities));
        assert!(matmul_probs(&a, None, ProbMode::Optimal).is_err());
    }

    #[test]
    fn single_nonzero_column_is_exact() {
        let a = DenseMatrix::from_rows(&[[0.0f64, 2.0, 0.0], [0.0, -1.0, 0.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[[1.0, 1.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        let p = matmul_probs(&a, Some(&b), ProbMode::Optimal).unwrap();
        for c in [1, 2, 7] {
            let s = approx_multiply(&a, &b, c, &p, RngSeed::from_seed(c as u64)).unwrap();
            assert!(s.product().max_abs_diff(&a.matmul(&b)) < 1e-12);
            assert!((s.beta - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_biased_and_empty_requests() {
        let a = DenseMatrix::<f64>::identity(2);
        let p = Probabilities::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(approx_multiply(&a, &a, 3, &p, RngSeed::default()), Err(Error::InvalidProbabilities(_))));
        let u = Probabilities::uniform(2);
        assert!(approx_multiply(&a, &a, 0, &u, RngSeed::default()).is_err());
        assert!(approx_multiply(&a, &DenseMatrix::identity(3), 1, &u, RngSeed::default()).is_err());
        assert_eq!(gram_sketch(&DenseMatrix::<f64>::zeros(2, 2), 1, &u, RngSeed::default()), Err(Error::ZeroMatrix("gram_sketch")));
    }

    #[test]
    fn rank_one_gram_is_exact() {
        let a = DenseMatrix::column(&[1.0, -2.0, 0.5]).matmul_t(&DenseMatrix::column(&[3.0, 1.0, 0.0, 2.0]));
        let p = matmul_probs(&a, Some(&a.transpose()), ProbMode::Optimal).unwrap();
        let c = gram_sketch(&a, 3, &p, RngSeed::from_seed(1)).unwrap();
        assert!(c.matmul_t(&c).max_abs_diff(&a.matmul_t(&a)) < 1e-12);
    }

    #[test]
    fn spectral_sample_size_examples() {
        assert_eq!(spectral_sample_size(1.0, 1.0, 1.0, 1.0).unwrap(), 439);
        let one = spectral_sample_size(3.0, 0.5, 0.3, 0.1).unwrap();
        let two = spectral_sample_size(6.0, 0.5, 0.3, 0.1).unwrap();
        assert!(two > 2 * one);
        assert!(spectral_sample_size(1.0 / 48.0, 1.0, 0.5, 0.5).is_err());
        assert!(spectral_sample_size(1.0, 0.0, 0.5, 0.5).is_err());
        assert!(spectral_sample_size(1.0, 1.0, 0.0, 0.5).is_err());
        assert!(spectral_sample_size(1.0, 1.0, 0.5, 0.0).is_err());
    }
}
