use crate::error::{Error, Result};
use crate::linalg::{pinv, sym_eigen};
use crate::matrix::DenseMatrix;
use crate::scalar::Real;
use crate::sketch::SketchOperator;

#[derive(Debug, Clone, PartialEq)]
pub struct NystromFactors<T> {
    /// `C = A S`.
    pub c_mat: DenseMatrix<T>,
    /// `(Sᵀ A S)⁺`, symmetrized.
    pub w_pinv: DenseMatrix<T>,
}

impl<T: Real> NystromFactors<T> {
    /// `C W⁺ Cᵀ`, symmetrized.
    pub fn approximation(&self) -> DenseMatrix<T> {
        symmetrize(&self.c_mat.matmul(&self.w_pinv).matmul_t(&self.c_mat))
    }
}

fn symmetrize<T: Real>(a: &DenseMatrix<T>) -> DenseMatrix<T> {
    let half = T::lit(0.5);
    DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| (a.get(i, j) + a.get(j, i)) * half)
}

/// Rejects inputs that are not symmetric (to `1e-10` relative) or have an
/// eigenvalue below `−1e-8` relative to the largest entry.
pub fn check_spsd<T: Real>(a: &DenseMatrix<T>) -> Result<()> {
    if a.rows() != a.cols() {
        return Err(Error::NotSpsd(format!("matrix is {}x{}", a.rows(), a.cols())));
    }
    let scale = a.max_abs().max(T::one());
    let asym = a.max_abs_diff(&a.transpose());
    if asym > T::lit(1e-10) * scale {
        return Err(Error::NotSpsd(format!("asymmetry {asym}")));
    }
    let (vals, _) = sym_eigen(a);
    if let Some(&lo) = vals.first() {
        if lo < -T::lit(1e-8) * scale {
            return Err(Error::NotSpsd(format!("eigenvalue {lo}")));
        }
    }
    Ok(())
}

/// Nyström approximation `C W⁺ Cᵀ` of an SPSD matrix from the column sketch
/// `S = Πᵀ` (`C = AΠᵀ`, `W = ΠAΠᵀ`).
pub fn nystrom<T: Real>(a: &DenseMatrix<T>, op: &SketchOperator<T>) -> Result<NystromFactors<T>> {
    check_spsd(a)?;
    let c_mat = op.apply_right(a)?;
    let w = symmetrize(&op.apply_left(&c_mat)?);
    let w_pinv = symmetrize(&pinv(&w, None));
    Ok(NystromFactors { c_mat, w_pinv })
}
