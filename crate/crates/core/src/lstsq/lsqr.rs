//! LSQR (Paige and Saunders), optionally right-preconditioned by an upper
//! triangular `R`: iterates on `min ‖A R⁻¹ y − b‖` and returns `x = R⁻¹ y`.

use super::{residual_norm, LsMethod, LsSolution};
use crate::error::{Error, Result};
use crate::linalg::{solve_upper, solve_upper_transpose};
use crate::matrix::{norm2, DenseMatrix};
use crate::scalar::Real;

struct Operator<'a, T> {
    a: &'a DenseMatrix<T>,
    r: Option<&'a DenseMatrix<T>>,
}

impl<T: Real> Operator<'_, T> {
    fn forward(&self, v: &[T]) -> Vec<T> {
        match self.r {
            Some(r) => self.a.matvec(&solve_upper(r, v)),
            None => self.a.matvec(v),
        }
    }

    fn adjoint(&self, u: &[T]) -> Vec<T> {
        let w = self.a.t_matvec(u);
        match self.r {
            Some(r) => solve_upper_transpose(r, &w),
            None => w,
        }
    }
}

fn normalize<T: Real>(v: &mut [T]) -> T {
    let n = norm2(v);
    if n > T::zero() {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Runs LSQR with `atol = btol = tol`. Stops when
/// `‖r‖ ≤ tol(‖b‖ + ‖Ā‖‖y‖)` or `‖Āᵀr‖ ≤ tol‖Ā‖‖r‖`, where `Ā = AR⁻¹` and
/// `‖Ā‖` is the Frobenius estimate accumulated from the bidiagonalization.
pub fn lsqr<T: Real>(a: &DenseMatrix<T>, b: &[T], precond_r: Option<&DenseMatrix<T>>, tol: T, max_iter: usize) -> Result<LsSolution<T>> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::IncompatibleRhs(format!("b has length {}, A has {m} rows", b.len())));
    }
    if tol <= T::zero() {
        return Err(Error::InvalidParameter("lsqr tolerance must be positive".into()));
    }
    if let Some(r) = precond_r {
        if r.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!("preconditioner is {}x{}, expected {n}x{n}", r.rows(), r.cols())));
        }
        if r.diagonal().iter().any(|&d| d == T::zero()) {
            return Err(Error::RankDeficient("preconditioner has a zero pivot".into()));
        }
    }
    let op = Operator { a, r: precond_r };
    let mut y = vec![T::zero(); n];
    let finish = |y: &[T], iterations: usize, success: bool| {
        let x = match precond_r {
            Some(r) => solve_upper(r, y),
            None => y.to_vec(),
        };
        let residual_norm = residual_norm(a, &x, b);
        LsSolution {
            x,
            residual_norm,
            method: LsMethod::Lsqr,
            iterations,
            precond_condition_estimate: None,
            retries: 0,
            success,
            diagnostic: None,
        }
    };

    let mut u = b.to_vec();
    let mut beta = normalize(&mut u);
    let bnorm = beta;
    if bnorm == T::zero() {
        return Ok(finish(&y, 0, true));
    }
    let mut v = op.adjoint(&u);
    let mut alpha = normalize(&mut v);
    if alpha == T::zero() {
        return Ok(finish(&y, 0, true));
    }
    let mut w = v.clone();
    let mut phibar = beta;
    let mut rhobar = alpha;
    let mut anorm_sq = T::zero();

    for itn in 1..=max_iter {
        let av = op.forward(&v);
        for (ui, &avi) in u.iter_mut().zip(&av) {
            *ui = avi - alpha * *ui;
        }
        beta = normalize(&mut u);
        anorm_sq += alpha * alpha + beta * beta;
        if beta > T::zero() {
            let atu = op.adjoint(&u);
            for (vi, &x) in v.iter_mut().zip(&atu) {
                *vi = x - beta * *vi;
            }
            alpha = normalize(&mut v);
        } else {
            alpha = T::zero();
        }

        let rho = (rhobar * rhobar + beta * beta).sqrt();
        let cs = rhobar / rho;
        let sn = beta / rho;
        let theta = sn * alpha;
        rhobar = -cs * alpha;
        let phi = cs * phibar;
        phibar = sn * phibar;

        let t1 = phi / rho;
        let t2 = -theta / rho;
        for ((yi, wi), &vi) in y.iter_mut().zip(w.iter_mut()).zip(&v) {
            *yi += t1 * *wi;
            *wi = vi + t2 * *wi;
        }

        let rnorm = phibar.abs();
        let arnorm = alpha * (sn * phi).abs();
        let anorm = anorm_sq.sqrt();
        let ynorm = norm2(&y);
        if rnorm <= tol * (bnorm + anorm * ynorm) || arnorm <= tol * anorm * rnorm || alpha == T::zero() {
            return Ok(finish(&y, itn, true));
        }
    }
    Ok(finish(&y, max_iter, false))
}
