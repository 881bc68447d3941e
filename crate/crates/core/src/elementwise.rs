//! Element-wise sparsification and quantization, the one-pass `Sample(s, n)`
//! streaming sampler, and the rank-`k` perturbation check.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};
use crate::linalg::{singular_values, svd};
use crate::matrix::DenseMatrix;
use crate::rng::RngSeed;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SparsifyScheme {
    /// Keep each entry with probability `p`, value `A_ij / p`.
    UniformP,
    /// Keep with probability `p_ij = min(1, max(τ_ij, √(τ_ij F)))`,
    /// `τ_ij = p A_ij² / b²`, `F = (8 ln n)⁴ / n`; value `A_ij / p_ij`.
    Magnitude,
    /// Every entry becomes `±b`.
    Quantize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSample<T> {
    pub shape: (usize, usize),
    /// Kept entries `(i, j, value)` in row-major (or stream) order.
    pub entries: Vec<(usize, usize, T)>,
    pub scheme: SparsifyScheme,
    pub p: T,
    /// `max |A_ij|`.
    pub b: T,
    pub expected_nnz: T,
}

impl<T: Real> SparseSample<T> {
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let (m, n) = self.shape;
        let mut out = DenseMatrix::zeros(m, n);
        for &(i, j, v) in &self.entries {
            out.set(i, j, out.get(i, j) + v);
        }
        out
    }

    /// Matrix Market coordinate text.
    pub fn to_matrix_market(&self) -> String {
        crate::io::write_coordinate_string(self.shape, &self.entries)
    }
}

/// `(8 ln n)⁴ / n`.
pub fn floor_factor(n: usize) -> f64 {
    let n = n.max(2) as f64;
    (8.0 * n.ln()).powi(4) / n
}

/// Keep probability for the magnitude scheme.
pub fn magnitude_keep_probability(tau: f64, floor: f64) -> f64 {
    tau.max((tau * floor).sqrt()).min(1.0)
}

fn check_nonzero<T: Real>(a: &DenseMatrix<T>, what: &'static str) -> Result<T> {
    if a.is_empty() || a.is_zero() {
        return Err(Error::ZeroMatrix(what));
    }
    Ok(a.max_abs())
}

pub fn sparsify<T: Real>(a: &DenseMatrix<T>, p: f64, scheme: SparsifyScheme, seed: RngSeed) -> Result<SparseSample<T>> {
    let b = check_nonzero(a, "sparsify")?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("p must lie in (0, 1], got {p}")));
    }
    let (m, n) = a.shape();
    let mut rng = seed.rng();
    let mut entries = Vec::new();
    let mut expected = 0.0;
    match scheme {
        SparsifyScheme::UniformP => {
            let inv = T::lit(1.0 / p);
            for i in 0..m {
                for j in 0..n {
                    let v = a.get(i, j);
                    let u = rng.uniform();
                    if v != T::zero() {
                        expected += p;
                        if u < p {
                            entries.push((i, j, v * inv));
                        }
                    }
                }
            }
        }
        SparsifyScheme::Magnitude => {
            let floor = floor_factor(m.max(n));
            let bf = b.as_f64();
            for i in 0..m {
                for j in 0..n {
                    let v = a.get(i, j);
                    let u = rng.uniform();
                    if v == T::zero() {
                        continue;
                    }
                    let tau = p * (v.as_f64() / bf).powi(2);
                    let pij = magnitude_keep_probability(tau, floor);
                    expected += pij;
                    if u < pij {
                        entries.push((i, j, v / T::lit(pij)));
                    }
                }
            }
        }
        SparsifyScheme::Quantize => return quantize(a, seed),
    }
    Ok(SparseSample { shape: (m, n), entries, scheme, p: T::lit(p), b, expected_nnz: T::lit(expected) })
}

/// `Â_ij = +b` with probability `1/2 + A_ij/(2b)`, else `−b`.
pub fn quantize<T: Real>(a: &DenseMatrix<T>, seed: RngSeed) -> Result<SparseSample<T>> {
    let b = check_nonzero(a, "quantize")?;
    let (m, n) = a.shape();
    let mut rng = seed.rng();
    let bf = b.as_f64();
    let mut entries = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            let up = 0.5 + a.get(i, j).as_f64() / (2.0 * bf);
            let v = if rng.uniform() < up { b } else { -b };
            entries.push((i, j, v));
        }
    }
    Ok(SparseSample { shape: (m, n), entries, scheme: SparsifyScheme::Quantize, p: T::one(), b, expected_nnz: T::of_count(m * n) })
}

struct Keyed {
    key: f64,
    seq: usize,
}

impl PartialEq for Keyed {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Keyed {}
impl PartialOrd for Keyed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Keyed {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key).then(self.seq.cmp(&other.seq))
    }
}

/// One-pass `Sample(s, n)`: each entry gets key
/// `κ = max(s a²/r, (s a²/r²)(8 ln n)⁴/n)` with `r ~ U(0, 1]`, and entries
/// whose key falls below the running total `z = Σ a²` are evicted. The
/// survivors are exactly the entries with `r ≤ p_ij` for the final
/// `z = ‖A‖_F²`, and are rescaled by `1/p_ij`.
pub fn sample_stream<T: Real, I>(entries: I, s: f64, n: usize, seed: RngSeed) -> Result<SparseSample<T>>
where
    I: IntoIterator<Item = (usize, usize, T)>,
{
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("s must be positive, got {s}")));
    }
    let floor = floor_factor(n);
    let mut rng = seed.rng();
    let mut heap: BinaryHeap<Reverse<Keyed>> = BinaryHeap::new();
    let mut store: HashMap<usize, (usize, usize, T)> = HashMap::new();
    let mut z = 0.0f64;
    let mut b = T::zero();
    let (mut rows, mut cols) = (0usize, 0usize);
    for (seq, (i, j, v)) in entries.into_iter().enumerate() {
        if !v.finite() {
            return Err(Error::NonFinite { row: i, col: j });
        }
        rows = rows.max(i + 1);
        cols = cols.max(j + 1);
        if v == T::zero() {
            continue;
        }
        b = b.max(v.abs());
        let a2 = v.as_f64().powi(2);
        z += a2;
        let r = rng.uniform_open0();
        let key = (s * a2 / r).max(s * a2 / (r * r) * floor);
        heap.push(Reverse(Keyed { key, seq }));
        store.insert(seq, (i, j, v));
        while let Some(Reverse(top)) = heap.peek() {
            if top.key < z {
                store.remove(&top.seq);
                heap.pop();
            } else {
                break;
            }
        }
    }
    if z == 0.0 {
        return Ok(SparseSample { shape: (rows, cols), entries: vec![], scheme: SparsifyScheme::Magnitude, p: T::zero(), b, expected_nnz: T::zero() });
    }
    let mut survivors: Vec<(usize, (usize, usize, T))> = store.into_iter().collect();
    survivors.sort_unstable_by_key(|&(seq, _)| seq);
    let mut kept = Vec::new();
    for (_, (i, j, v)) in survivors {
        let tau = s * v.as_f64().powi(2) / z;
        kept.push((i, j, v / T::lit(magnitude_keep_probability(tau, floor))));
    }
    let bf = b.as_f64();
    Ok(SparseSample {
        shape: (rows, cols),
        entries: kept,
        scheme: SparsifyScheme::Magnitude,
        p: T::lit(s * bf * bf / z),
        b,
        // one pass cannot revisit evicted entries, so report the bound s + m (8 ln n)⁴
        expected_nnz: T::lit(s + rows as f64 * floor * n.max(2) as f64),
    })
}

/// Both sides of `‖A − Â_k‖ ≤ ‖A − A_k‖ + (perturbation terms)` for
/// `Â = A + N`, in the spectral and Frobenius norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationCheck<T> {
    pub lhs2: T,
    pub rhs2: T,
    pub lhs_f: T,
    pub rhs_f: T,
}

impl<T: Real> PerturbationCheck<T> {
    pub fn holds(&self, slack: T) -> bool {
        self.lhs2 <= self.rhs2 + slack && self.lhs_f <= self.rhs_f + slack
    }
}

/// `‖A − Â_k‖₂ ≤ ‖A − A_k‖₂ + 2‖N_k‖₂` and
/// `‖A − Â_k‖_F ≤ ‖A − A_k‖_F + ‖N_k‖_F + 2√(‖N_k‖_F ‖A_k‖_F)`.
pub fn structural_error_check<T: Real>(a: &DenseMatrix<T>, a_hat: &SparseSample<T>, k: usize) -> Result<PerturbationCheck<T>> {
    perturbation_check(a, &a_hat.to_dense(), k)
}

/// [`structural_error_check`] for a dense perturbed matrix `Â`.
pub fn perturbation_check<T: Real>(a: &DenseMatrix<T>, a_hat: &DenseMatrix<T>, k: usize) -> Result<PerturbationCheck<T>> {
    if a.shape() != a_hat.shape() {
        return Err(Error::DimensionMismatch(format!("A is {:?}, Â is {:?}", a.shape(), a_hat.shape())));
    }
    let (m, n) = a.shape();
    if k == 0 || k > m.min(n) {
        return Err(Error::InvalidParameter(format!("rank k = {k} outside [1, {}]", m.min(n))));
    }
    let sa = svd(a);
    let ahat_k = svd(a_hat).truncate(k);
    let err = a - &ahat_k;
    let ak_tail: Vec<T> = sa.sigma[k..].to_vec();
    let tail2 = ak_tail.first().copied().unwrap_or_else(T::zero);
    let tail_f = ak_tail.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
    let ak_f = sa.sigma[..k].iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
    let noise = a_hat - a;
    let sn = singular_values(&noise);
    let nk2 = sn.first().copied().unwrap_or_else(T::zero);
    let nk_f = sn.iter().take(k).fold(T::zero(), |s, &x| s + x * x).sqrt();
    let two = T::lit(2.0);
    Ok(PerturbationCheck {
        lhs2: crate::linalg::spectral_norm(&err),
        rhs2: tail2 + two * nk2,
        lhs_f: err.frobenius_norm(),
        rhs_f: tail_f + nk_f + two * (nk_f * ak_f).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed() -> DenseMatrix<f64> {
        DenseMatrix::from_fn(6, 5, |i, j| ((i * 5 + j) as f64 * 0.7).sin())
    }

    #[test]
    fn p_one_keeps_everything() {
        let a = fixed();
        let s = sparsify(&a, 1.0, SparsifyScheme::UniformP, RngSeed::from_seed(1)).unwrap();
        assert_eq!(s.to_dense(), a);
    }

    #[test]
    fn parameter_validation() {
        let a = fixed();
        assert!(sparsify(&a, 0.0, SparsifyScheme::UniformP, RngSeed::default()).is_err());
        assert!(sparsify(&a, 1.5, SparsifyScheme::Magnitude, RngSeed::default()).is_err());
        assert!(quantize(&DenseMatrix::<f64>::zeros(2, 2), RngSeed::default()).is_err());
        assert!(sample_stream(Vec::<(usize, usize, f64)>::new(), 0.0, 4, RngSeed::default()).is_err());
    }

    #[test]
    fn quantize_extremes() {
        let a = DenseMatrix::from_rows(&[[2.0f64, -2.0], [1.0, 0.0]]).unwrap();
        for seed in 0..30 {
            let q = quantize(&a, RngSeed::from_seed(seed)).unwrap().to_dense();
            assert_eq!(q.get(0, 0), 2.0);
            assert_eq!(q.get(0, 1), -2.0);
            assert!(q.as_slice().iter().all(|v| v.abs() == 2.0));
        }
    }

    #[test]
    fn stream_keeps_everything_for_large_s() {
        let a = fixed();
        let z = a.frobenius_norm_sq();
        let min2 = a.as_slice().iter().filter(|v| **v != 0.0).map(|v| v * v).fold(f64::INFINITY, f64::min);
        let stream = (0..6).flat_map(|i| (0..5).map(move |j| (i, j))).map(|(i, j)| (i, j, a.get(i, j)));
        let s = sample_stream(stream, z / min2, 5, RngSeed::from_seed(3)).unwrap();
        assert_eq!(s.nnz(), a.as_slice().iter().filter(|v| **v != 0.0).count());
        assert!(s.to_dense().max_abs_diff(&a) < 1e-12);
    }

    #[test]
    fn empty_stream_is_empty_sample() {
        let s = sample_stream(Vec::<(usize, usize, f64)>::new(), 3.0, 4, RngSeed::default()).unwrap();
        assert_eq!(s.nnz(), 0);
    }

    #[test]
    fn identical_matrices_are_tight() {
        let a = fixed();
        let c = perturbation_check(&a, &a, 2).unwrap();
        let full = sparsify(&a, 1.0, SparsifyScheme::UniformP, RngSeed::default()).unwrap();
        assert_eq!(structural_error_check(&a, &full, 2).unwrap(), c);
        assert!((c.lhs2 - c.rhs2).abs() < 1e-12 && (c.lhs_f - c.rhs_f).abs() < 1e-12);
    }
}
