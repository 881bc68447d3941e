//! Statistical leverage scores: exact, fast approximate (SRHT + Gaussian
//! sketches), rank-`k` scores and coherence.

use crate::error::{Error, Result};
use crate::linalg::{default_rank_tolerance, singular_values, solve_upper, svd, thin_qr};
use crate::matrix::DenseMatrix;
use crate::rng::RngSeed;
use crate::sampling::Probabilities;
use crate::scalar::Real;
use crate::sketch::{make_sketch, SketchKind, SketchPayload};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LeverageMethod {
    Exact,
    Fast,
    RankK,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeverageProfile<T> {
    /// Unnormalized scores `ℓ_i`, one per row.
    pub scores: Vec<T>,
    pub probs: Probabilities<T>,
    /// Rank parameter (numerical rank for exact scores).
    pub k: usize,
    pub beta: T,
    pub method: LeverageMethod,
    /// Power-iteration count for rank-`k` scores.
    pub q: Option<usize>,
}

impl<T: Real> LeverageProfile<T> {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn max_score(&self) -> T {
        self.scores.iter().fold(T::zero(), |a, &b| a.max(b))
    }
}

fn profile<T: Real>(scores: Vec<T>, k: usize, beta: T, method: LeverageMethod, q: Option<usize>) -> Result<LeverageProfile<T>> {
    let probs = Probabilities::from_weights(&scores)?;
    Ok(LeverageProfile { scores, probs, k, beta, method, q })
}

/// Row norms squared of an orthonormal basis for the numerical range of `a`.
fn basis_scores<T: Real>(a: &DenseMatrix<T>) -> (Vec<T>, usize) {
    let s = svd(a);
    let rank = s.rank(None);
    (s.u_k(rank).row_norms_sq(), rank)
}

/// Exact row leverage scores `ℓ_i = ‖U_{(i)}‖²` for any orthonormal basis `U`
/// of `range(A)`. Wide inputs are accepted; their scores are those of the
/// numerical column space.
pub fn leverage_exact<T: Real>(a: &DenseMatrix<T>) -> Result<LeverageProfile<T>> {
    if a.is_empty() || a.is_zero() {
        return Err(Error::ZeroMatrix("leverage_exact"));
    }
    let (scores, rank) = basis_scores(a);
    profile(scores, rank, T::one(), LeverageMethod::Exact, None)
}

/// Tuning constants for [`leverage_fast_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastLeverageConfig {
    pub c1: f64,
    pub c2: f64,
    /// Skip the second projection `Π₂` and return `‖(AR⁻¹)_{(i)}‖²` directly.
    pub skip_second_projection: bool,
}

impl Default for FastLeverageConfig {
    fn default() -> Self {
        Self { c1: 4.0, c2: 9.0, skip_second_projection: false }
    }
}

/// `(r₁, r₂) = (⌈c₁ n ln m / ε²⌉, ⌈c₂ ln m / ε²⌉)`.
pub fn fast_leverage_sizes(m: usize, n: usize, eps: f64, config: &FastLeverageConfig) -> (usize, usize) {
    let lm = (m as f64).ln();
    let r1 = (config.c1 * n as f64 * lm / (eps * eps)).ceil().max(1.0) as usize;
    let r2 = (config.c2 * lm / (eps * eps)).ceil().max(1.0) as usize;
    (r1, r2)
}

pub fn leverage_fast<T: Real>(a: &DenseMatrix<T>, eps: f64, seed: RngSeed) -> Result<LeverageProfile<T>> {
    leverage_fast_with(a, eps, seed, &FastLeverageConfig::default())
}

/// Fast approximate leverage scores of a tall matrix: `R` from a QR of
/// `Π₁A` (SRHT, `r₁` rows), then `ℓ̃_i = ‖(A R⁻¹ Π₂)_{(i)}‖²` with a
/// Gaussian `Π₂` of `r₂` columns. When `r₂ ≥ n` the second projection only
/// adds noise and is skipped.
pub fn leverage_fast_with<T: Real>(a: &DenseMatrix<T>, eps: f64, seed: RngSeed, config: &FastLeverageConfig) -> Result<LeverageProfile<T>> {
    let (m, n) = a.shape();
    if a.is_empty() || a.is_zero() {
        return Err(Error::ZeroMatrix("leverage_fast"));
    }
    if m < 4 * n {
        return Err(Error::InvalidParameter(format!("leverage_fast needs m >= 4n, got {m}x{n}")));
    }
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1/2], got {eps}")));
    }
    let (r1, r2) = fast_leverage_sizes(m, n, eps, config);
    let pi1 = make_sketch::<T>(SketchKind::Srht, m, r1, seed.child(1))?;
    let sketched = pi1.apply_left(a)?;
    let sv = singular_values(&sketched);
    let tol = default_rank_tolerance(sketched.rows(), n, sv[0]);
    let rank = sv.iter().filter(|&&s| s > tol).count();
    if rank < n {
        return Err(Error::SketchLostRank { rank, expected: n });
    }
    let (_, r) = thin_qr(&sketched);

    let omega = if config.skip_second_projection || r2 >= n {
        crate::linalg::right_solve_upper(a, &r)
    } else {
        // M = R⁻¹ Π₂, built one column at a time, then Ω = A M.
        let g = make_sketch::<T>(SketchKind::Gaussian, n, r2, seed.child(2))?;
        let gd = match &g.payload {
            SketchPayload::Dense(d) => d.clone(),
            _ => g.to_dense(),
        };
        let mut mm = DenseMatrix::zeros(n, r2);
        for t in 0..r2 {
            let col = solve_upper(&r, gd.row(t));
            for (i, &v) in col.iter().enumerate() {
                mm.set(i, t, v);
            }
        }
        a.matmul(&mm)
    };
    let beta = T::lit((1.0 - eps) / (1.0 + eps));
    profile(omega.row_norms_sq(), n, beta, LeverageMethod::Fast, None)
}

/// Approximate leverage scores relative to the best rank-`k` space:
/// scores of the tall matrix `B = (AAᵀ)^q A Π` with Gaussian `Π ∈ R^{n×2k}`.
/// The subspace iteration is re-orthonormalized after every multiply, which
/// leaves `range(B)` unchanged. `B` has only `2k` columns, so its scores are
/// computed from a thin SVD.
pub fn leverage_rank_k<T: Real>(a: &DenseMatrix<T>, k: usize, q: usize, seed: RngSeed) -> Result<LeverageProfile<T>> {
    let (m, n) = a.shape();
    if a.is_empty() || a.is_zero() {
        return Err(Error::ZeroMatrix("leverage_rank_k"));
    }
    if k == 0 || k > m.min(n) {
        return Err(Error::InvalidParameter(format!("rank k = {k} outside [1, {}]", m.min(n))));
    }
    let width = (2 * k).min(n);
    let pi = make_sketch::<T>(SketchKind::Gaussian, n, width, seed)?;
    let mut b = pi.apply_right(a)?;
    for _ in 0..q {
        let (qb, _) = thin_qr(&b);
        let (qz, _) = thin_qr(&a.t_matmul(&qb));
        b = a.matmul(&qz);
    }
    let (scores, rank) = basis_scores(&b);
    profile(scores, rank.min(width), T::one(), LeverageMethod::RankK, Some(q))
}

/// Coherence `μ(A) = max_i ℓ_i`.
pub fn coherence<T: Real>(a: &DenseMatrix<T>) -> Result<T> {
    Ok(leverage_exact(a)?.max_score())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hadamard::normalized_hadamard;

    fn gaussian(m: usize, n: usize, seed: u64) -> DenseMatrix<f64> {
        let mut rng = RngSeed::from_seed(seed).rng();
        DenseMatrix::from_fn(m, n, |_, _| rng.normal())
    }

    #[test]
    fn canonical_projection() {
        let a = DenseMatrix::<f64>::identity(3).vstack(&DenseMatrix::zeros(4, 3));
        let p = leverage_exact(&a).unwrap();
        assert_eq!(p.k, 3);
        for (i, &s) in p.scores.iter().enumerate() {
            let want = if i < 3 { 1.0 } else { 0.0 };
            assert!((s - want).abs() < 1e-12);
        }
        assert!((coherence(&a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_column() {
        let a = DenseMatrix::column(&[3.0f64, 0.0, 4.0]);
        let p = leverage_exact(&a).unwrap();
        let want = [9.0 / 25.0, 0.0, 16.0 / 25.0];
        assert!(p.scores.iter().zip(want).all(|(s, w)| (s - w).abs() < 1e-12));
    }

    #[test]
    fn flat_hadamard_slice() {
        let h = normalized_hadamard::<f64>(16).select_cols(&[0, 3, 5]);
        assert!((coherence(&h).unwrap() - 3.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_rejected() {
        let z = DenseMatrix::<f64>::zeros(8, 2);
        assert_eq!(leverage_exact(&z), Err(Error::ZeroMatrix("leverage_exact")));
        assert!(leverage_rank_k(&z, 1, 0, RngSeed::default()).is_err());
        assert!(leverage_fast(&z, 0.5, RngSeed::default()).is_err());
    }

    #[test]
    fn fast_preconditions() {
        let a = gaussian(10, 4, 1);
        assert!(matches!(leverage_fast(&a, 0.5, RngSeed::default()), Err(Error::InvalidParameter(_))));
        let a = gaussian(64, 4, 1);
        assert!(leverage_fast(&a, 0.75, RngSeed::default()).is_err());
        let mut rank_deficient = gaussian(64, 3, 2);
        rank_deficient = rank_deficient.hstack(&DenseMatrix::column(&rank_deficient.col(0)));
        assert!(matches!(leverage_fast(&rank_deficient, 0.5, RngSeed::default()), Err(Error::SketchLostRank { .. })));
    }

    #[test]
    fn fast_zero_row_is_exact_zero() {
        let mut a = gaussian(256, 3, 4);
        a.row_mut(17).iter_mut().for_each(|x| *x = 0.0);
        let config = FastLeverageConfig { skip_second_projection: false, c2: 0.05, ..Default::default() };
        let p = leverage_fast_with(&a, 0.5, RngSeed::from_seed(3), &config).unwrap();
        assert_eq!(p.scores[17], 0.0);
        let p = leverage_fast(&a, 0.5, RngSeed::from_seed(3)).unwrap();
        assert_eq!(p.scores[17], 0.0);
    }

    #[test]
    fn rank_k_of_exactly_low_rank() {
        let a = gaussian(40, 3, 5).matmul(&gaussian(3, 25, 6));
        let truth = leverage_exact(&a).unwrap();
        for q in [0, 2] {
            let p = leverage_rank_k(&a, 3, q, RngSeed::from_seed(7)).unwrap();
            assert_eq!(p.q, Some(q));
            let d = p.scores.iter().zip(&truth.scores).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(d < 1e-8, "deviation {d}");
        }
        assert!(leverage_rank_k(&a, 26, 0, RngSeed::default()).is_err());
    }
}
