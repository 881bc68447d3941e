use super::column_svd::projection_residual;
use crate::error::{Error, Result};
use crate::linalg::{pinv, svd};
use crate::matrix::DenseMatrix;
use crate::rng::RngSeed;
use crate::sampling::{sample_indices, Probabilities, SampleMode};
use crate::scalar::Real;

/// Sampling constant `c_k` in `c = ⌈c_k k ln(k+1) / ε²⌉`.
pub const DEFAULT_CK: f64 = 4.0;

pub fn cx_sample_size(k: usize, eps: f64) -> usize {
    (DEFAULT_CK * k as f64 * ((k + 1) as f64).ln() / (eps * eps)).ceil() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct CxFactors<T> {
    /// Sampled columns of `A`, unscaled (duplicates kept).
    pub c_mat: DenseMatrix<T>,
    /// `C⁺ A`.
    pub x: DenseMatrix<T>,
    pub indices: Vec<usize>,
    /// `‖A − CX‖_F`.
    pub residual: T,
    /// `‖A − A_k‖_F`.
    pub best_rank_k: T,
    /// `‖A − CX‖_F ≤ (1+ε)‖A − A_k‖_F` for this realization.
    pub success: bool,
}

impl<T: Real> CxFactors<T> {
    pub fn product(&self) -> DenseMatrix<T> {
        self.c_mat.matmul(&self.x)
    }
}

fn validate<T: Real>(a: &DenseMatrix<T>, k: usize, eps: f64) -> Result<()> {
    if a.is_empty() || a.is_zero() {
        return Err(Error::ZeroMatrix("low-rank decomposition"));
    }
    if k == 0 || k > a.rows().min(a.cols()) {
        return Err(Error::InvalidParameter(format!("rank k = {k} outside [1, {}]", a.rows().min(a.cols()))));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1], got {eps}")));
    }
    Ok(())
}

/// Rank-`k` column leverage probabilities `p_i = ‖(V_k)_{(i)}‖² / k` and
/// the tail `‖A − A_k‖_F`.
fn column_leverage<T: Real>(a: &DenseMatrix<T>, k: usize) -> Result<(Probabilities<T>, T)> {
    let s = svd(a);
    let rank = s.rank(None);
    if k > rank {
        return Err(Error::InvalidParameter(format!("rank k = {k} exceeds numerical rank {rank}")));
    }
    let tail = s.sigma[k..].iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
    Ok((Probabilities::from_weights(&s.v_k(k).row_norms_sq())?, tail))
}

fn success_test<T: Real>(residual: T, bound: T, a: &DenseMatrix<T>) -> bool {
    residual <= bound + T::lit(1e-10) * a.frobenius_norm()
}

/// Relative-error CX: columns sampled i.i.d. by rank-`k` column leverage,
/// `X = C⁺A`.
pub fn cx_decompose<T: Real>(a: &DenseMatrix<T>, k: usize, eps: f64, seed: RngSeed) -> Result<CxFactors<T>> {
    validate(a, k, eps)?;
    let (probs, best_rank_k) = column_leverage(a, k)?;
    let c = cx_sample_size(k, eps);
    let sample = sample_indices(&probs, c, SampleMode::ExactC, seed)?;
    let c_mat = a.select_cols(&sample.indices);
    let x = pinv(&c_mat, None).matmul(a);
    let residual = (a - &c_mat.matmul(&x)).frobenius_norm();
    let success = success_test(residual, T::lit(1.0 + eps) * best_rank_k, a);
    Ok(CxFactors { c_mat, x, indices: sample.indices, residual, best_rank_k, success })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurMode {
    /// Rows and columns chosen independently; `U = C⁺ A R⁺`.
    Weak,
    /// Rows chosen by the leverage of `C`'s column space; `U = W⁺`.
    Strong,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurFactors<T> {
    pub c_mat: DenseMatrix<T>,
    pub u: DenseMatrix<T>,
    /// Sampled rows of `A`, multiplied by `row_scales`.
    pub r_mat: DenseMatrix<T>,
    pub column_indices: Vec<usize>,
    pub row_indices: Vec<usize>,
    pub row_scales: Vec<T>,
    pub mode: CurMode,
    /// `‖A − CC⁺A‖_F`.
    pub cx_residual: T,
    /// `‖A − A_k‖_F`.
    pub best_rank_k: T,
}

impl<T: Real> CurFactors<T> {
    pub fn product(&self) -> DenseMatrix<T> {
        self.c_mat.matmul(&self.u).matmul(&self.r_mat)
    }

    pub fn residual(&self, a: &DenseMatrix<T>) -> T {
        (a - &self.product()).frobenius_norm()
    }
}

pub fn cur_decompose<T: Real>(a: &DenseMatrix<T>, k: usize, eps: f64, mode: CurMode, seed: RngSeed) -> Result<CurFactors<T>> {
    let cx = cx_decompose(a, k, eps, seed.child(0))?;
    let c_mat = cx.c_mat;
    match mode {
        CurMode::Weak => {
            let rows = cx_decompose(&a.transpose(), k, eps, seed.child(1))?;
            let r_mat = rows.c_mat.transpose();
            let u = pinv(&c_mat, None).matmul(a).matmul(&pinv(&r_mat, None));
            let row_scales = vec![T::one(); rows.indices.len()];
            Ok(CurFactors {
                c_mat,
                u,
                r_mat,
                column_indices: cx.indices,
                row_indices: rows.indices,
                row_scales,
                mode,
                cx_residual: cx.residual,
                best_rank_k: cx.best_rank_k,
            })
        }
        CurMode::Strong => {
            let s = svd(&c_mat);
            let rho = s.rank(None).max(1);
            let probs = Probabilities::from_weights(&s.u_k(rho).row_norms_sq())?;
            let r = cx_sample_size(rho, eps);
            let mut sample = sample_indices(&probs, r, SampleMode::ExpectedC, seed.child(2))?;
            if sample.is_empty() {
                sample = sample_indices(&probs, r, SampleMode::ExactC, seed.child(3))?;
            }
            let r_mat = a.select_rows(&sample.indices).scale_rows(&sample.scales);
            let w = c_mat.select_rows(&sample.indices).scale_rows(&sample.scales);
            let u = pinv(&w, None);
            Ok(CurFactors {
                c_mat,
                u,
                r_mat,
                column_indices: cx.indices,
                row_indices: sample.indices,
                row_scales: sample.scales,
                mode,
                cx_residual: cx.residual,
                best_rank_k: cx.best_rank_k,
            })
        }
    }
}

/// `‖A − CC⁺A‖_F` for an explicit column set.
pub fn column_residual<T: Real>(a: &DenseMatrix<T>, c: &DenseMatrix<T>) -> T {
    projection_residual(a, c).frobenius_norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn low_rank(m: usize, n: usize, k: usize, seed: u64) -> DenseMatrix<f64> {
        let mut rng = RngSeed::from_seed(seed).rng();
        let l = DenseMatrix::from_fn(m, k, |_, _| rng.normal());
        let r = DenseMatrix::from_fn(k, n, |_, _| rng.normal());
        l.matmul(&r)
    }

    #[test]
    fn exact_rank_k_is_recovered() {
        let a = low_rank(30, 40, 4, 1);
        let cx = cx_decompose(&a, 4, 0.5, RngSeed::from_seed(2)).unwrap();
        assert!(cx.success);
        assert!(cx.residual <= 1e-8 * a.frobenius_norm());
        let cur = cur_decompose(&a, 4, 0.5, CurMode::Strong, RngSeed::from_seed(3)).unwrap();
        assert!(cur.residual(&a) <= 1e-7 * a.frobenius_norm());
        let weak = cur_decompose(&a, 4, 0.5, CurMode::Weak, RngSeed::from_seed(4)).unwrap();
        assert!(weak.residual(&a) <= 1e-7 * a.frobenius_norm());
    }

    #[test]
    fn factors_are_rows_and_columns_of_input() {
        let a = low_rank(12, 15, 3, 5);
        let cur = cur_decompose(&a, 2, 1.0, CurMode::Strong, RngSeed::from_seed(6)).unwrap();
        for (t, &j) in cur.column_indices.iter().enumerate() {
            assert_eq!(cur.c_mat.col(t), a.col(j));
        }
        for (t, &i) in cur.row_indices.iter().enumerate() {
            let want: Vec<f64> = a.row(i).iter().map(|v| v * cur.row_scales[t]).collect();
            assert_eq!(cur.r_mat.row(t), &want[..]);
        }
    }

    #[test]
    fn full_rank_k_spans_everything() {
        let mut rng = RngSeed::from_seed(7).rng();
        let a = DenseMatrix::from_fn(6, 9, |_, _| rng.normal());
        let cx = cx_decompose(&a, 6, 1.0, RngSeed::from_seed(8)).unwrap();
        assert!(cx.residual < 1e-9 * a.frobenius_norm());
    }

    #[test]
    fn invalid_parameters() {
        let a = low_rank(8, 8, 2, 9);
        assert!(cx_decompose(&a, 0, 0.5, RngSeed::default()).is_err());
        assert!(cx_decompose(&a, 3, 0.5, RngSeed::default()).is_err());
        assert!(cx_decompose(&a, 2, 0.0, RngSeed::default()).is_err());
        assert!(cx_decompose(&DenseMatrix::<f64>::zeros(3, 3), 1, 0.5, RngSeed::default()).is_err());
    }
}
