use crate::error::{Error, Result};
use crate::linalg::{pinv, singular_values, spectral_norm, svd};
use crate::matrix::DenseMatrix;
use crate::sampling::IndexSample;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    Spectral,
    Frobenius,
}

fn norm_of<T: Real>(a: &DenseMatrix<T>, kind: NormKind) -> T {
    match kind {
        NormKind::Spectral => spectral_norm(a),
        NormKind::Frobenius => a.frobenius_norm(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuralCheck<T> {
    /// `‖(I − P_C) A‖` with `C = AS`.
    pub lhs: T,
    /// `‖A − A_k‖ + ‖Σ₂ Ω₂ Ω₁⁺‖`, or `+∞` when `Ω₁` is rank deficient.
    pub rhs: T,
    /// `σ_min(Ω₁)`, `Ω₁ = V_kᵀ S`.
    pub omega1_min_sv: T,
    pub full_rank: bool,
}

/// Explicit `n × c` matrix `S D` of an index sample.
pub fn sampling_matrix<T: Real>(sample: &IndexSample<T>) -> DenseMatrix<T> {
    let mut s = DenseMatrix::zeros(sample.population, sample.len());
    for (t, (&i, &sc)) in sample.indices.iter().zip(&sample.scales).enumerate() {
        s.set(i, t, sc);
    }
    s
}

/// Evaluates both sides of `‖(I−P_C)A‖ ≤ ‖A−A_k‖ + ‖Σ₂Ω₂Ω₁⁺‖` exactly from a
/// full SVD of `A`, for a column sketch `S ∈ R^{n×c}`.
pub fn structural_bound_check<T: Real>(a: &DenseMatrix<T>, s_mat: &DenseMatrix<T>, k: usize, norm: NormKind) -> Result<StructuralCheck<T>> {
    let (m, n) = a.shape();
    if s_mat.rows() != n {
        return Err(Error::DimensionMismatch(format!("sketch has {} rows, A has {n} columns", s_mat.rows())));
    }
    let dec = svd(a);
    let rank = dec.rank(None);
    if k == 0 || k > rank {
        return Err(Error::InvalidParameter(format!("rank k = {k} outside [1, {rank}]")));
    }
    let c = a.matmul(s_mat);
    let proj = if c.cols() == 0 { DenseMatrix::zeros(m, n) } else { c.matmul(&pinv(&c, None).matmul(a)) };
    let lhs = norm_of(&(a - &proj), norm);

    let rho = dec.sigma.len();
    let vt = &dec.vt;
    let omega1 = vt.top_left(k, n).matmul(s_mat);
    let sv = singular_values(&omega1);
    let omega1_min_sv = if omega1.cols() < k { T::zero() } else { sv.get(k - 1).copied().unwrap_or_else(T::zero) };
    let tol = T::lit(1e-12).max(crate::linalg::default_rank_tolerance(k, omega1.cols(), sv.first().copied().unwrap_or_else(T::zero)));
    let tail = a - &dec.truncate(k);
    let best = norm_of(&tail, norm);
    if omega1_min_sv <= tol {
        return Ok(StructuralCheck { lhs, rhs: T::lit(f64::INFINITY), omega1_min_sv, full_rank: false });
    }
    let v2t = DenseMatrix::from_fn(rho - k, n, |i, j| vt.get(k + i, j));
    let omega2 = v2t.matmul(s_mat);
    let sigma2: Vec<T> = dec.sigma[k..].to_vec();
    let extra = omega2.scale_rows(&sigma2).matmul(&pinv(&omega1, None));
    let rhs = best + norm_of(&extra, norm);
    Ok(StructuralCheck { lhs, rhs, omega1_min_sv, full_rank: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;

    fn gaussian(m: usize, n: usize, seed: u64) -> DenseMatrix<f64> {
        let mut rng = RngSeed::from_seed(seed).rng();
        DenseMatrix::from_fn(m, n, |_, _| rng.normal())
    }

    #[test]
    fn top_singular_vectors_are_tight() {
        let a = gaussian(12, 10, 1);
        let vk = svd(&a).v_k(3);
        for kind in [NormKind::Spectral, NormKind::Frobenius] {
            let r = structural_bound_check(&a, &vk, 3, kind).unwrap();
            assert!(r.full_rank && (r.omega1_min_sv - 1.0).abs() < 1e-10);
            assert!((r.lhs - r.rhs).abs() < 1e-9 * r.rhs);
        }
    }

    #[test]
    fn annihilating_sketch_hits_sentinel() {
        let a = gaussian(12, 10, 2);
        let v = svd(&a).vt.transpose();
        let s = DenseMatrix::from_fn(10, 4, |i, j| v.get(i, 3 + j));
        let r = structural_bound_check(&a, &s, 3, NormKind::Frobenius).unwrap();
        assert!(!r.full_rank && r.rhs.is_infinite());
    }

    #[test]
    fn sampling_matrix_layout() {
        let s = IndexSample { indices: vec![2, 0], scales: vec![0.5, 2.0], mode: crate::sampling::SampleMode::ExactC, population: 3 };
        let m = sampling_matrix(&s);
        assert_eq!(m.as_slice(), &[0.0, 2.0, 0.0, 0.0, 0.5, 0.0]);
    }
}
