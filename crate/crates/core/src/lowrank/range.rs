use crate::error::{Error, Result};
use crate::linalg::{svd, thin_qr, FactorKind, FactorizationBundle, Factors};
use crate::matrix::{dot, norm2, DenseMatrix};
use crate::rng::RngSeed;
use crate::scalar::Real;

/// `10 √(2/π)`, the probe-norm multiplier of the posterior estimator with
/// failure factor `1/10` per probe.
pub fn probe_multiplier() -> f64 {
    10.0 * (2.0 / std::f64::consts::PI).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeBasis<T> {
    /// `m × ℓ`, orthonormal columns.
    pub q: DenseMatrix<T>,
    pub ell: usize,
    pub k: usize,
    pub oversample_p: usize,
    pub power_q: usize,
    pub posterior_error_estimate: Option<T>,
    /// False when the adaptive loop exhausted `min(m, n)` columns.
    pub converged: bool,
}

impl<T: Real> RangeBasis<T> {
    /// `(I − QQᵀ) A`.
    pub fn residual(&self, a: &DenseMatrix<T>) -> DenseMatrix<T> {
        if self.ell == 0 {
            return a.clone();
        }
        a - &self.q.matmul(&self.q.t_matmul(a))
    }
}

fn gaussian_block<T: Real>(rows: usize, cols: usize, seed: RngSeed) -> DenseMatrix<T> {
    let mut rng = seed.rng();
    DenseMatrix::from_fn(rows, cols, |_, _| rng.normal_as())
}

/// Orthonormal basis for `(AAᵀ)^q A Π` with Gaussian `Π ∈ R^{n×ℓ}`,
/// `ℓ = k + p`. Every multiply by `A` or `Aᵀ` is followed by a QR.
pub fn range_finder<T: Real>(a: &DenseMatrix<T>, k: usize, p: usize, q: usize, seed: RngSeed) -> Result<RangeBasis<T>> {
    let (m, n) = a.shape();
    let ell = k + p;
    if k == 0 || ell > m.min(n) {
        return Err(Error::InvalidParameter(format!("need 1 <= k and k + p <= min(m, n), got k={k}, p={p}, {m}x{n}")));
    }
    let omega = gaussian_block(n, ell, seed);
    let (mut basis, _) = thin_qr(&a.matmul(&omega));
    for _ in 0..q {
        let (z, _) = thin_qr(&a.t_matmul(&basis));
        basis = thin_qr(&a.matmul(&z)).0;
    }
    Ok(RangeBasis { q: basis, ell, k, oversample_p: p, power_q: q, posterior_error_estimate: None, converged: true })
}

/// `10√(2/π) · max_i ‖(I − QQᵀ) A ω_i‖` over `r` Gaussian probes; bounds
/// `‖(I − QQᵀ)A‖₂` with probability at least `1 − 10^{−r}`.
pub fn posterior_error_estimate<T: Real>(a: &DenseMatrix<T>, q: &DenseMatrix<T>, r: usize, seed: RngSeed) -> T {
    let mut rng = seed.rng();
    let mut worst = T::zero();
    for _ in 0..r {
        let w: Vec<T> = (0..a.cols()).map(|_| rng.normal_as()).collect();
        let mut y = a.matvec(&w);
        project_out(q, &mut y);
        worst = worst.max(norm2(&y));
    }
    T::lit(probe_multiplier()) * worst
}

fn project_out<T: Real>(q: &DenseMatrix<T>, y: &mut [T]) {
    // two passes of classical Gram–Schmidt
    for _ in 0..2 {
        let c = q.t_matvec(y);
        let qc = q.matvec(&c);
        y.iter_mut().zip(&qc).for_each(|(a, &b)| *a -= b);
    }
}

/// Fixed-precision range finder. Each Gaussian probe `y = (I − QQᵀ)Aω` whose
/// norm exceeds `ε' = ε / (10√(2/π))` is normalized and appended to `Q`;
/// the loop stops once `r_probe` consecutive probes fall at or below `ε'`,
/// at which point `‖(I − QQᵀ)A‖₂ ≤ ε` with probability `1 − 10^{−r_probe}`.
pub fn adaptive_range_finder<T: Real>(a: &DenseMatrix<T>, eps: f64, r_probe: usize, seed: RngSeed) -> Result<RangeBasis<T>> {
    let (m, n) = a.shape();
    if !(eps > 0.0) || r_probe == 0 {
        return Err(Error::InvalidParameter(format!("need eps > 0 and r_probe >= 1, got {eps}, {r_probe}")));
    }
    let threshold = T::lit(eps / probe_multiplier());
    let cap = m.min(n);
    let mut cols: Vec<Vec<T>> = Vec::new();
    let mut quiet = 0usize;
    let mut quiet_max = T::zero();
    let mut rng = seed.rng();
    let mut converged = true;
    while quiet < r_probe {
        if cols.len() >= cap {
            converged = false;
            break;
        }
        let w: Vec<T> = (0..n).map(|_| rng.normal_as()).collect();
        let mut y = a.matvec(&w);
        for _ in 0..2 {
            for qc in &cols {
                let c = dot(qc, &y);
                y.iter_mut().zip(qc).for_each(|(v, &qv)| *v -= c * qv);
            }
        }
        let ny = norm2(&y);
        if ny > threshold {
            y.iter_mut().for_each(|v| *v /= ny);
            cols.push(y);
            quiet = 0;
            quiet_max = T::zero();
        } else {
            quiet += 1;
            quiet_max = quiet_max.max(ny);
        }
    }
    let ell = cols.len();
    let q = DenseMatrix::from_fn(m, ell, |i, j| cols[j][i]);
    let estimate = converged.then(|| T::lit(probe_multiplier()) * quiet_max);
    Ok(RangeBasis { q, ell, k: ell, oversample_p: 0, power_q: 0, posterior_error_estimate: estimate, converged })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisTarget {
    /// `A ≈ (Q Q₁) R₁` from the QR `QᵀA = Q₁R₁`.
    PartialQr,
    /// `A ≈ (Q Û) Σ Vᵀ` from the SVD `QᵀA = ÛΣVᵀ`.
    PartialSvd,
}

/// Converts a range basis into an approximate QR or SVD of `A`. The product
/// of the returned factors equals `QQᵀA`.
pub fn factor_from_basis<T: Real>(a: &DenseMatrix<T>, basis: &RangeBasis<T>, target: BasisTarget) -> Result<FactorizationBundle<T>> {
    if basis.q.rows() != a.rows() {
        return Err(Error::DimensionMismatch(format!("basis has {} rows, A has {}", basis.q.rows(), a.rows())));
    }
    let defect = crate::linalg::orthonormality_defect(&basis.q);
    if defect > T::lit(1e-8) {
        return Err(Error::NotOrthonormal(defect.as_f64()));
    }
    let b = basis.q.t_matmul(a);
    let s = svd(&b);
    let tol = crate::linalg::default_rank_tolerance(a.rows(), a.cols(), s.sigma_max());
    let numerical_rank = s.rank(Some(tol));
    let (kind, factors) = match target {
        BasisTarget::PartialQr => {
            let (q1, r1) = thin_qr(&b);
            (FactorKind::Qr, Factors::Qr { q: basis.q.matmul(&q1), r: r1 })
        }
        BasisTarget::PartialSvd => (FactorKind::Svd, Factors::Svd { u: basis.q.matmul(&s.u), sigma: s.sigma.clone(), vt: s.vt.clone() }),
    };
    Ok(FactorizationBundle { kind, factors, numerical_rank, rank_tolerance: tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{orthonormality_defect, spectral_norm};

    fn low_rank(m: usize, n: usize, k: usize, seed: u64) -> DenseMatrix<f64> {
        let mut rng = RngSeed::from_seed(seed).rng();
        let l = DenseMatrix::from_fn(m, k, |_, _| rng.normal());
        let r = DenseMatrix::from_fn(k, n, |_, _| rng.normal());
        l.matmul(&r)
    }

    #[test]
    fn fixed_rank_captures_low_rank() {
        let a = low_rank(40, 30, 5, 1);
        for q in [0, 2] {
            let b = range_finder(&a, 5, 2, q, RngSeed::from_seed(2)).unwrap();
            assert!(orthonormality_defect(&b.q) < 1e-10);
            assert!(b.residual(&a).frobenius_norm() < 1e-8 * a.frobenius_norm());
        }
        assert!(range_finder(&a, 25, 10, 0, RngSeed::default()).is_err());
    }

    #[test]
    fn adaptive_zero_and_low_rank() {
        let z = DenseMatrix::<f64>::zeros(10, 8);
        let b = adaptive_range_finder(&z, 1e-3, 4, RngSeed::from_seed(1)).unwrap();
        assert_eq!(b.ell, 0);
        assert_eq!(b.posterior_error_estimate, Some(0.0));

        let a = low_rank(50, 40, 6, 3);
        let b = adaptive_range_finder(&a, 1e-6, 10, RngSeed::from_seed(4)).unwrap();
        assert!(b.converged && b.ell >= 6 && b.ell <= 16);
        assert!(spectral_norm(&b.residual(&a)) < 1e-8);
    }

    #[test]
    fn adaptive_flags_exhausted_basis() {
        let mut rng = RngSeed::from_seed(5).rng();
        let a = DenseMatrix::from_fn(6, 6, |_, _| rng.normal());
        let b = adaptive_range_finder(&a, 1e-300, 2, RngSeed::from_seed(6)).unwrap();
        assert!(!b.converged && b.ell == 6);
        assert!(b.posterior_error_estimate.is_none());
    }

    #[test]
    fn factorizations_from_exact_basis() {
        let a = low_rank(20, 15, 3, 7);
        let b = range_finder(&a, 3, 1, 0, RngSeed::from_seed(8)).unwrap();
        for t in [BasisTarget::PartialQr, BasisTarget::PartialSvd] {
            let f = factor_from_basis(&a, &b, t).unwrap();
            assert!(f.reconstruct().max_abs_diff(&a) < 1e-9);
            if let Factors::Svd { u, .. } = &f.factors {
                assert!(orthonormality_defect(u) < 1e-10);
            }
        }
    }
}
