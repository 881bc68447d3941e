use super::column_svd::projection_residual;
use crate::error::{Error, Result};
use crate::linalg::{pivoted_qr_columns, singular_values, svd};
use crate::matrix::DenseMatrix;
use crate::rng::RngSeed;
use crate::sampling::{sample_indices, Probabilities, SampleMode};
use crate::scalar::Real;

/// Sampling constant `c_s` in `c = ⌈c_s k ln(k+1)⌉`.
pub const DEFAULT_CS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CsspMode {
    /// `p_i = ‖(V_k)_{(i)}‖² / k`.
    #[default]
    Frobenius,
    /// Even mixture of the leverage probabilities and the squared column
    /// norms of `A − A_k`.
    Spectral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsspResult<T> {
    /// Exactly `k` distinct column indices.
    pub indices: Vec<usize>,
    /// The chosen columns of `A`, unscaled.
    pub c_mat: DenseMatrix<T>,
    /// `σ_k(V_kᵀ S₁ D₁)` of the accepted randomized stage.
    pub sigma_k_stage1: T,
    /// `‖A − P_C A‖_F`.
    pub residual_fro: T,
    /// `‖A − A_k‖_F`.
    pub best_fro: T,
    /// Randomized-stage draws used (1 or 2).
    pub attempts: usize,
}

impl<T: Real> CsspResult<T> {
    /// `‖A − P_C A‖_F / ‖A − A_k‖_F` (zero over zero counts as one).
    pub fn frobenius_ratio(&self) -> T {
        if self.best_fro == T::zero() {
            if self.residual_fro == T::zero() {
                T::one()
            } else {
                T::lit(f64::INFINITY)
            }
        } else {
            self.residual_fro / self.best_fro
        }
    }
}

pub fn cssp_sample_size(k: usize) -> usize {
    (DEFAULT_CS * k as f64 * ((k + 1) as f64).ln()).ceil().max(k as f64) as usize
}

pub fn cssp<T: Real>(a: &DenseMatrix<T>, k: usize, seed: RngSeed) -> Result<CsspResult<T>> {
    cssp_with(a, k, CsspMode::Frobenius, seed)
}

/// Two-stage column subset selection: sample `c` columns by rank-`k`
/// leverage with rescaling, then keep the `k` pivots of a column-pivoted QR
/// of `V_kᵀ S₁ D₁`.
pub fn cssp_with<T: Real>(a: &DenseMatrix<T>, k: usize, mode: CsspMode, seed: RngSeed) -> Result<CsspResult<T>> {
    if a.is_empty() || a.is_zero() {
        return Err(Error::ZeroMatrix("cssp"));
    }
    let s = svd(a);
    let rank = s.rank(None);
    if k == 0 || k > rank {
        return Err(Error::InvalidParameter(format!("rank k = {k} outside [1, {rank}]")));
    }
    let vk = s.v_k(k);
    let lev = vk.row_norms_sq();
    let probs = match mode {
        CsspMode::Frobenius => Probabilities::from_weights(&lev)?,
        CsspMode::Spectral => {
            let lp = Probabilities::from_weights(&lev)?;
            let tail = a - &s.truncate(k);
            match Probabilities::from_weights(&tail.col_norms_sq()) {
                Ok(tp) => lp.mix(&tp, T::lit(0.5)),
                Err(_) => lp,
            }
        }
    };
    let c = cssp_sample_size(k);
    let vkt = vk.transpose();
    for attempt in 0..2 {
        let sample = sample_indices(&probs, c, SampleMode::ExactC, seed.child(attempt))?;
        let m = vkt.select_cols(&sample.indices).scale_cols(&sample.scales);
        let sv = singular_values(&m);
        let sigma_k = sv.get(k - 1).copied().unwrap_or_else(T::zero);
        let tol = crate::linalg::default_rank_tolerance(m.rows(), m.cols(), sv[0]);
        if sigma_k <= tol {
            continue;
        }
        let picks = pivoted_qr_columns(&m, k);
        let indices: Vec<usize> = picks.iter().map(|&p| sample.indices[p]).collect();
        let c_mat = a.select_cols(&indices);
        let residual_fro = projection_residual(a, &c_mat).frobenius_norm();
        let best_fro = s.sigma[k..].iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
        return Ok(CsspResult {
            indices,
            c_mat,
            sigma_k_stage1: sigma_k,
            residual_fro,
            best_fro,
            attempts: attempt as usize + 1,
        });
    }
    Err(Error::RankDeficient("V_k^T S1 D1 lost rank twice; increase c".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_block_selects_basis_columns() {
        let a = DenseMatrix::<f64>::identity(3).hstack(&DenseMatrix::zeros(3, 5));
        let r = cssp(&a, 3, RngSeed::from_seed(1)).unwrap();
        let mut idx = r.indices.clone();
        idx.sort_unstable();
        assert_eq!(idx, vec![0, 1, 2]);
        assert!(r.residual_fro < 1e-12);
    }

    #[test]
    fn exact_rank_k_spans() {
        let mut rng = RngSeed::from_seed(2).rng();
        let l = DenseMatrix::from_fn(25, 4, |_, _| rng.normal());
        let rr = DenseMatrix::from_fn(4, 30, |_, _| rng.normal());
        let a = l.matmul(&rr);
        for mode in [CsspMode::Frobenius, CsspMode::Spectral] {
            let r = cssp_with(&a, 4, mode, RngSeed::from_seed(3)).unwrap();
            assert_eq!(r.indices.len(), 4);
            assert!(r.residual_fro < 1e-8 * a.frobenius_norm());
        }
        assert!(cssp(&a, 5, RngSeed::default()).is_err());
    }
}
