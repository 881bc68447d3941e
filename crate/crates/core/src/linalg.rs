//! Deterministic dense kernels: QR, SVD, pseudo-inverse, triangular solves,
//! symmetric eigendecomposition and norm/condition estimates.
//!
//! Householder QR and Cholesky come from `nalgebra`; the SVD and the
//! symmetric eigensolver come from `faer` and run in `f64` whatever `T` is.
//! This module fixes conventions (sorted singular values, nonnegative `R`
//! diagonal, rank tolerances) and adds the remaining kernels.

use faer::Mat;

use crate::error::{Error, Result};
use crate::matrix::{dot, norm2, DenseMatrix};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactorKind {
    Qr,
    Svd,
    Pinv,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Factors<T> {
    /// Thin QR: `A = Q R` with `Q` of size `m × min(m,n)`.
    Qr { q: DenseMatrix<T>, r: DenseMatrix<T> },
    /// Thin SVD: `A = U diag(sigma) Vᵀ`, `sigma` nonincreasing.
    Svd { u: DenseMatrix<T>, sigma: Vec<T>, vt: DenseMatrix<T> },
    /// Moore–Penrose pseudo-inverse.
    Pinv { pinv: DenseMatrix<T> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationBundle<T> {
    pub kind: FactorKind,
    pub factors: Factors<T>,
    pub numerical_rank: usize,
    pub rank_tolerance: T,
}

impl<T: Real> FactorizationBundle<T> {
    /// Product of the factors: `QR`, `UΣVᵀ`, or the pseudo-inverse itself.
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        match &self.factors {
            Factors::Qr { q, r } => q.matmul(r),
            Factors::Svd { u, sigma, vt } => u.scale_cols(sigma).matmul(vt),
            Factors::Pinv { pinv } => pinv.clone(),
        }
    }
}

/// Thin SVD with singular values sorted in nonincreasing order.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: DenseMatrix<T>,
    pub sigma: Vec<T>,
    pub vt: DenseMatrix<T>,
}

impl<T: Real> Svd<T> {
    /// `#{σ_i > tol}` with the default tolerance when `tol` is `None`.
    pub fn rank(&self, tol: Option<T>) -> usize {
        let tol = tol.unwrap_or_else(|| default_rank_tolerance(self.u.rows(), self.vt.cols(), self.sigma_max()));
        self.sigma.iter().filter(|&&s| s > tol).count()
    }

    pub fn sigma_max(&self) -> T {
        self.sigma.first().copied().unwrap_or_else(T::zero)
    }

    /// Leading `k` left singular vectors.
    pub fn u_k(&self, k: usize) -> DenseMatrix<T> {
        self.u.top_left(self.u.rows(), k)
    }

    /// Leading `k` right singular vectors as an `n × k` matrix.
    pub fn v_k(&self, k: usize) -> DenseMatrix<T> {
        self.vt.top_left(k, self.vt.cols()).transpose()
    }

    /// Best rank-`k` approximation `U_k Σ_k V_kᵀ`.
    pub fn truncate(&self, k: usize) -> DenseMatrix<T> {
        let k = k.min(self.sigma.len());
        self.u_k(k).scale_cols(&self.sigma[..k]).matmul(&self.vt.top_left(k, self.vt.cols()))
    }
}

/// `max(m,n) · σ_max · ε`.
pub fn default_rank_tolerance<T: Real>(m: usize, n: usize, sigma_max: T) -> T {
    T::of_count(m.max(n)) * sigma_max * T::machine_eps()
}

fn to_faer<T: Real>(a: &DenseMatrix<T>) -> Mat<f64> {
    Mat::from_fn(a.rows(), a.cols(), |i, j| a.get(i, j).as_f64())
}

pub fn svd<T: Real>(a: &DenseMatrix<T>) -> Svd<T> {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return Svd { u: DenseMatrix::zeros(m, 0), sigma: vec![], vt: DenseMatrix::zeros(0, n) };
    }
    let dec = to_faer(a).thin_svd().expect("SVD did not converge");
    let (u, s, v) = (dec.U(), dec.S().column_vector(), dec.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let sigma = order.iter().map(|&i| T::lit(s[i].max(0.0))).collect();
    let u = DenseMatrix::from_fn(m, k, |i, j| T::lit(u[(i, order[j])]));
    let vt = DenseMatrix::from_fn(k, n, |i, j| T::lit(v[(j, order[i])]));
    Svd { u, sigma, vt }
}

pub fn singular_values<T: Real>(a: &DenseMatrix<T>) -> Vec<T> {
    if a.is_empty() {
        return vec![];
    }
    let mut s: Vec<f64> = to_faer(a).singular_values().expect("SVD did not converge");
    s.sort_by(|x, y| y.total_cmp(x));
    s.into_iter().map(|v| T::lit(v.max(0.0))).collect()
}

/// Thin Householder QR with the diagonal of `R` made nonnegative.
pub fn thin_qr<T: Real>(a: &DenseMatrix<T>) -> (DenseMatrix<T>, DenseMatrix<T>) {
    let (m, n) = a.shape();
    let qr = a.to_nalgebra().qr();
    let mut q = DenseMatrix::from_nalgebra(&qr.q());
    let mut r = DenseMatrix::from_nalgebra(&qr.r());
    for i in 0..m.min(n) {
        if r.get(i, i) < T::zero() {
            for j in 0..n {
                r.set(i, j, -r.get(i, j));
            }
            for row in 0..m {
                q.set(row, i, -q.get(row, i));
            }
        }
    }
    (q, r)
}

/// Moore–Penrose pseudo-inverse via the SVD; singular values at or below
/// `tol` (default [`default_rank_tolerance`]) are treated as zero.
pub fn pinv<T: Real>(a: &DenseMatrix<T>, tol: Option<T>) -> DenseMatrix<T> {
    let s = svd(a);
    pinv_from_svd(&s, a.rows(), a.cols(), tol)
}

fn pinv_from_svd<T: Real>(s: &Svd<T>, m: usize, n: usize, tol: Option<T>) -> DenseMatrix<T> {
    let r = s.rank(tol);
    if r == 0 {
        return DenseMatrix::zeros(n, m);
    }
    let inv: Vec<T> = s.sigma[..r].iter().map(|&x| T::one() / x).collect();
    // V_r Σ_r⁻¹ U_rᵀ
    s.v_k(r).scale_cols(&inv).matmul_t(&s.u_k(r))
}

/// Orthonormal basis (left singular vectors) of the numerical range of `a`.
pub fn orthonormal_basis<T: Real>(a: &DenseMatrix<T>, tol: Option<T>) -> DenseMatrix<T> {
    let s = svd(a);
    let r = s.rank(tol);
    s.u_k(r)
}

/// Factorization entry point: QR, SVD, or pseudo-inverse of a nonempty matrix.
pub fn factorize<T: Real>(a: &DenseMatrix<T>, kind: FactorKind, rank_tolerance: Option<T>) -> Result<FactorizationBundle<T>> {
    if a.is_empty() {
        return Err(Error::EmptyInput("factorize requires a nonempty matrix"));
    }
    let s = svd(a);
    let tol = rank_tolerance.unwrap_or_else(|| default_rank_tolerance(a.rows(), a.cols(), s.sigma_max()));
    let numerical_rank = s.rank(Some(tol));
    let factors = match kind {
        FactorKind::Qr => {
            let (q, r) = thin_qr(a);
            Factors::Qr { q, r }
        }
        FactorKind::Svd => Factors::Svd { u: s.u.clone(), sigma: s.sigma.clone(), vt: s.vt.clone() },
        FactorKind::Pinv => Factors::Pinv { pinv: pinv_from_svd(&s, a.rows(), a.cols(), Some(tol)) },
    };
    Ok(FactorizationBundle { kind, factors, numerical_rank, rank_tolerance: tol })
}

/// `‖A‖₂`. Exact (dense SVD) for small matrices; for matrices whose smaller
/// side exceeds 256, Golub–Kahan–Lanczos bidiagonalization with full
/// reorthogonalization, which converges to the top singular value to working
/// accuracy well before the step cap.
pub fn spectral_norm<T: Real>(a: &DenseMatrix<T>) -> T {
    if a.is_empty() {
        return T::zero();
    }
    if a.rows().min(a.cols()) <= 256 {
        return singular_values(a)[0];
    }
    lanczos_top_singular_value(a, 120)
}

fn lanczos_top_singular_value<T: Real>(a: &DenseMatrix<T>, max_steps: usize) -> T {
    let (m, n) = a.shape();
    let steps = max_steps.min(m.min(n));
    // deterministic, generic start vector
    let mut v: Vec<T> = (0..n).map(|j| T::one() + T::lit(((j * 7919) % 101) as f64 / 101.0)).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut vs: Vec<Vec<T>> = Vec::with_capacity(steps);
    let mut us: Vec<Vec<T>> = Vec::with_capacity(steps);
    let mut alphas = Vec::with_capacity(steps);
    let mut betas = Vec::with_capacity(steps);
    let mut beta = T::zero();
    let mut prev_u: Vec<T> = vec![T::zero(); m];
    let mut last = T::zero();
    for step in 0..steps {
        let mut u = a.matvec(&v);
        for (ui, pi) in u.iter_mut().zip(&prev_u) {
            *ui -= beta * *pi;
        }
        for q in &us {
            let c = dot(q, &u);
            u.iter_mut().zip(q).for_each(|(x, &y)| *x -= c * y);
        }
        let alpha = norm2(&u);
        if alpha == T::zero() {
            break;
        }
        u.iter_mut().for_each(|x| *x /= alpha);
        vs.push(v.clone());
        alphas.push(alpha);
        let mut w = a.t_matvec(&u);
        w.iter_mut().zip(&v).for_each(|(x, &y)| *x -= alpha * y);
        for q in &vs {
            let c = dot(q, &w);
            w.iter_mut().zip(q).for_each(|(x, &y)| *x -= c * y);
        }
        beta = norm2(&w);
        us.push(u.clone());
        prev_u = u;
        betas.push(beta);
        if step % 10 == 9 || beta == T::zero() || step + 1 == steps {
            let k = alphas.len();
            let b = DenseMatrix::from_fn(k + 1, k, |i, j| {
                if i == j {
                    alphas[j]
                } else if i == j + 1 {
                    betas[j]
                } else {
                    T::zero()
                }
            });
            let top = singular_values(&b)[0];
            let done = (top - last).abs() <= T::lit(1e-13) * top || beta == T::zero();
            last = top;
            if done {
                break;
            }
        }
        if beta == T::zero() {
            break;
        }
        v = w.into_iter().map(|x| x / beta).collect();
    }
    last
}

/// Stable rank `‖A‖_F² / ‖A‖₂²`.
pub fn stable_rank<T: Real>(a: &DenseMatrix<T>) -> Result<T> {
    if a.is_empty() || a.is_zero() {
        return Err(Error::UndefinedStableRank);
    }
    let s2 = spectral_norm(a);
    Ok(a.frobenius_norm_sq() / (s2 * s2))
}

/// Solves `R x = b` for upper-triangular `R` (only the upper triangle is read).
pub fn solve_upper<T: Real>(r: &DenseMatrix<T>, b: &[T]) -> Vec<T> {
    let n = r.cols();
    let mut x = b[..n].to_vec();
    for i in (0..n).rev() {
        let row = r.row(i);
        let mut s = x[i];
        for j in i + 1..n {
            s -= row[j] * x[j];
        }
        x[i] = s / row[i];
    }
    x
}

/// Solves `Rᵀ x = b` for upper-triangular `R`.
pub fn solve_upper_transpose<T: Real>(r: &DenseMatrix<T>, b: &[T]) -> Vec<T> {
    let n = r.cols();
    let mut x = b[..n].to_vec();
    for i in 0..n {
        x[i] /= r.get(i, i);
        let xi = x[i];
        let row = r.row(i);
        for j in i + 1..n {
            x[j] -= row[j] * xi;
        }
    }
    x
}

/// `A R⁻¹` for square upper-triangular `R`.
pub fn right_solve_upper<T: Real>(a: &DenseMatrix<T>, r: &DenseMatrix<T>) -> DenseMatrix<T> {
    let mut out = DenseMatrix::zeros(a.rows(), r.cols());
    for i in 0..a.rows() {
        // row_i(A R⁻¹) = solve Rᵀ y = row_i(A)ᵀ
        let y = solve_upper_transpose(r, a.row(i));
        out.row_mut(i).copy_from_slice(&y);
    }
    out
}

/// Matrix 1-norm (maximum absolute column sum).
pub fn norm1<T: Real>(a: &DenseMatrix<T>) -> T {
    let mut sums = vec![T::zero(); a.cols()];
    for i in 0..a.rows() {
        for (s, &v) in sums.iter_mut().zip(a.row(i)) {
            *s += v.abs();
        }
    }
    sums.into_iter().fold(T::zero(), |a, b| a.max(b))
}

/// Estimate of `κ₁(R) = ‖R‖₁‖R⁻¹‖₁` for a square upper-triangular `R`.
///
/// `‖R‖₁` is exact; `‖R⁻¹‖₁` uses Hager's power-type estimator, which only
/// needs solves with `R` and `Rᵀ` and returns a lower bound that is almost
/// always within a small factor of the truth. Returns `+∞` for a zero pivot.
pub fn cond1_estimate_upper<T: Real>(r: &DenseMatrix<T>) -> T {
    let n = r.cols();
    if n == 0 {
        return T::one();
    }
    if r.diagonal().iter().any(|&d| d == T::zero() || !d.finite()) {
        return T::lit(f64::INFINITY);
    }
    let mut x = vec![T::one() / T::of_count(n); n];
    let mut est = T::zero();
    for _ in 0..5 {
        let y = solve_upper(r, &x);
        let y1 = y.iter().fold(T::zero(), |a, &v| a + v.abs());
        if !y1.finite() {
            return T::lit(f64::INFINITY);
        }
        if y1 <= est {
            break;
        }
        est = y1;
        let xi: Vec<T> = y.iter().map(|&v| if v >= T::zero() { T::one() } else { -T::one() }).collect();
        let z = solve_upper_transpose(r, &xi);
        let (jmax, zmax) = z.iter().enumerate().fold((0, T::zero()), |(bj, bv), (j, &v)| if v.abs() > bv { (j, v.abs()) } else { (bj, bv) });
        if zmax <= dot(&z, &x) {
            break;
        }
        x = vec![T::zero(); n];
        x[jmax] = T::one();
    }
    // Higham's alternating-sign safeguard against unlucky cancellations.
    let alt: Vec<T> = (0..n)
        .map(|i| {
            let s = if i % 2 == 0 { T::one() } else { -T::one() };
            s * (T::one() + T::of_count(i) / T::of_count((n - 1).max(1)))
        })
        .collect();
    let y = solve_upper(r, &alt);
    let alt_est = T::lit(2.0) * y.iter().fold(T::zero(), |a, &v| a + v.abs()) / T::of_count(3 * n);
    norm1(r) * est.max(alt_est)
}

/// Symmetric eigendecomposition; eigenvalues ascending, eigenvectors as columns.
pub fn sym_eigen<T: Real>(a: &DenseMatrix<T>) -> (Vec<T>, DenseMatrix<T>) {
    let n = a.rows();
    if n == 0 {
        return (vec![], DenseMatrix::zeros(0, 0));
    }
    let sym = Mat::from_fn(n, n, |i, j| 0.5 * (a.get(i, j).as_f64() + a.get(j, i).as_f64()));
    let eig = sym.self_adjoint_eigen(faer::Side::Lower).expect("eigensolver did not converge");
    let (vals, vecs) = (eig.S().column_vector(), eig.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let values = order.iter().map(|&i| T::lit(vals[i])).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, j| T::lit(vecs[(i, order[j])]));
    (values, vectors)
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse<T: Real>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let chol = a
        .to_nalgebra()
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("matrix is not positive definite".into()))?;
    Ok(DenseMatrix::from_nalgebra(&chol.inverse()))
}

/// Largest entry of `|QᵀQ − I|`.
pub fn orthonormality_defect<T: Real>(q: &DenseMatrix<T>) -> T {
    let g = q.t_matmul(q);
    g.max_abs_diff(&DenseMatrix::identity(q.cols()))
}

/// Greedy column-pivoted QR (Businger–Golub) on `m`: returns the first `k`
/// pivot columns in selection order.
pub fn pivoted_qr_columns<T: Real>(m: &DenseMatrix<T>, k: usize) -> Vec<usize> {
    let n = m.cols();
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| m.col(j)).collect();
    let mut chosen = Vec::with_capacity(k);
    let mut active = vec![true; n];
    for _ in 0..k.min(n) {
        let mut best = None;
        let mut best_norm = T::zero();
        for j in 0..n {
            if active[j] {
                let nj = dot(&cols[j], &cols[j]);
                if best.is_none() || nj > best_norm {
                    best = Some(j);
                    best_norm = nj;
                }
            }
        }
        let Some(p) = best else { break };
        active[p] = false;
        chosen.push(p);
        let nrm = best_norm.sqrt();
        if nrm == T::zero() {
            continue;
        }
        let q: Vec<T> = cols[p].iter().map(|&v| v / nrm).collect();
        for j in 0..n {
            if active[j] {
                let c = dot(&q, &cols[j]);
                cols[j].iter_mut().zip(&q).for_each(|(x, &y)| *x -= c * y);
            }
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;

    fn gaussian(m: usize, n: usize, seed: u64) -> DenseMatrix<f64> {
        let mut r = RngSeed::from_seed(seed).rng();
        DenseMatrix::from_fn(m, n, |_, _| r.normal())
    }

    #[test]
    fn identity_qr_is_identity() {
        let f = factorize(&DenseMatrix::<f64>::identity(3), FactorKind::Qr, None).unwrap();
        let Factors::Qr { q, r } = f.factors else { panic!() };
        assert!(q.max_abs_diff(&DenseMatrix::identity(3)) < 1e-15);
        assert!(r.max_abs_diff(&DenseMatrix::identity(3)) < 1e-15);
    }

    #[test]
    fn pinv_of_singular_diagonal() {
        let a = DenseMatrix::from_diagonal(&[2.0, 0.0]);
        let f = factorize(&a, FactorKind::Pinv, None).unwrap();
        assert_eq!(f.numerical_rank, 1);
        let Factors::Pinv { pinv } = f.factors else { panic!() };
        assert!(pinv.max_abs_diff(&DenseMatrix::from_diagonal(&[0.5, 0.0])) < 1e-15);
    }

    #[test]
    fn pinv_left_inverse_of_full_rank() {
        let a = gaussian(5, 3, 1);
        let p = pinv(&a, None);
        assert!(p.matmul(&a).max_abs_diff(&DenseMatrix::identity(3)) < 1e-10);
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        let a = gaussian(7, 4, 2);
        for kind in [FactorKind::Qr, FactorKind::Svd] {
            let f = factorize(&a, kind, None).unwrap();
            assert!((&a - &f.reconstruct()).frobenius_norm() <= 1e-9 * a.frobenius_norm());
        }
        let s = svd(&a);
        assert!(orthonormality_defect(&s.u) < 1e-10);
        assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn empty_is_error() {
        assert!(factorize(&DenseMatrix::<f64>::zeros(0, 3), FactorKind::Svd, None).is_err());
    }

    #[test]
    fn stable_rank_examples() {
        assert!((stable_rank(&DenseMatrix::<f64>::identity(4)).unwrap() - 4.0).abs() < 1e-12);
        let u = DenseMatrix::column(&[1.0f64, 2.0, 3.0]);
        let rank1 = u.matmul_t(&DenseMatrix::column(&[4.0, -1.0]));
        assert!((stable_rank(&rank1).unwrap() - 1.0).abs() < 1e-12);
        assert!((stable_rank(&DenseMatrix::from_diagonal(&[2.0f64, 1.0, 1.0])).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(stable_rank(&DenseMatrix::<f64>::zeros(2, 2)), Err(Error::UndefinedStableRank));
    }

    #[test]
    fn lanczos_matches_dense() {
        let a = gaussian(300, 280, 3);
        let exact = singular_values(&a)[0];
        let est = lanczos_top_singular_value(&a, 120);
        assert!((exact - est).abs() <= 1e-8 * exact, "{exact} vs {est}");
    }

    #[test]
    fn triangular_solves() {
        let a = gaussian(6, 4, 4);
        let (_, r) = thin_qr(&a);
        let x = vec![1.0, -2.0, 0.5, 3.0];
        let b = r.matvec(&x);
        let y = solve_upper(&r, &b);
        assert!(y.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-12));
        let bt = r.t_matvec(&x);
        let yt = solve_upper_transpose(&r, &bt);
        assert!(yt.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-12));
        let ar = right_solve_upper(&a, &r);
        assert!(orthonormality_defect(&ar) < 1e-12);
    }

    #[test]
    fn condition_estimate_within_factor_three() {
        for seed in 0..20 {
            let a = gaussian(30, 8, 100 + seed);
            let scale: Vec<f64> = (0..8).map(|j| 10f64.powi(-(j as i32))).collect();
            let (_, r) = thin_qr(&a.scale_cols(&scale));
            let est = cond1_estimate_upper(&r);
            let rinv = DenseMatrix::from_nalgebra(&r.to_nalgebra().try_inverse().unwrap());
            let truth = norm1(&r) * norm1(&rinv);
            assert!(est <= truth * (1.0 + 1e-10) && est >= truth / 3.0, "est {est} truth {truth}");
        }
    }

    #[test]
    fn pivoted_qr_prefers_large_independent_columns() {
        let m = DenseMatrix::from_rows(&[[1.0, 0.0, 5.0, 5.0], [0.0, 2.0, 0.0, 0.1]]).unwrap();
        let p = pivoted_qr_columns(&m, 2);
        assert_eq!(p[0], 3);
        assert_eq!(p[1], 1);
    }
}
