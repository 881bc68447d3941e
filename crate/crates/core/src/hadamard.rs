//! Fast Walsh–Hadamard transform and the randomized Hadamard rotation `HD`.

use crate::matrix::DenseMatrix;
use crate::rng::RngSeed;
use crate::scalar::Real;

/// In-place unnormalized Walsh–Hadamard transform (Sylvester ordering).
/// `x.len()` must be a power of two.
pub fn fwht<T: Real>(x: &mut [T]) {
    let n = x.len();
    assert!(n.is_power_of_two(), "fwht length {n} is not a power of two");
    let mut h = 1;
    while h < n {
        for block in x.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = u + v;
                *b = u - v;
            }
        }
        h *= 2;
    }
}

/// Orthonormal transform `x ← (1/√n) H_n x`.
pub fn fwht_normalized<T: Real>(x: &mut [T]) {
    fwht(x);
    let s = T::one() / T::of_count(x.len()).sqrt();
    x.iter_mut().for_each(|v| *v *= s);
}

/// Dense normalized Hadamard matrix `H_n / √n`, built by the Sylvester
/// recursion `H_{2n} = [[H_n, H_n], [H_n, −H_n]]` from `H_1 = 1`.
pub fn normalized_hadamard<T: Real>(n: usize) -> DenseMatrix<T> {
    assert!(n.is_power_of_two());
    let s = T::one() / T::of_count(n).sqrt();
    DenseMatrix::from_fn(n, n, |i, j| if (i & j).count_ones() % 2 == 0 { s } else { -s })
}

/// Randomized Hadamard rotation `x ↦ H D [x; 0]` on `R^n`, zero-padded to the
/// next power of two. `HD` is exactly orthogonal on the padded space.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedHadamard<T> {
    pub source_dim: usize,
    pub padded_dim: usize,
    pub signs: Vec<T>,
}

impl<T: Real> RandomizedHadamard<T> {
    pub fn new(source_dim: usize, seed: RngSeed) -> Self {
        let padded_dim = source_dim.max(1).next_power_of_two();
        let mut rng = seed.rng();
        let signs = (0..padded_dim).map(|_| rng.sign()).collect();
        Self { source_dim, padded_dim, signs }
    }

    pub fn apply_vector(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.source_dim);
        let mut buf = vec![T::zero(); self.padded_dim];
        for (b, (&v, &s)) in buf.iter_mut().zip(x.iter().zip(&self.signs)) {
            *b = v * s;
        }
        fwht_normalized(&mut buf);
        buf
    }

    /// `H D A` for `A` with `source_dim` rows; result is `padded_dim × cols`.
    /// Each column costs `O(n_pad log n_pad)`.
    pub fn apply_columns(&self, a: &DenseMatrix<T>) -> DenseMatrix<T> {
        assert_eq!(a.rows(), self.source_dim);
        let (n, d) = (self.padded_dim, a.cols());
        let mut out = DenseMatrix::zeros(n, d);
        let mut buf = vec![T::zero(); n];
        for j in 0..d {
            buf.iter_mut().for_each(|v| *v = T::zero());
            for i in 0..self.source_dim {
                buf[i] = a.get(i, j) * self.signs[i];
            }
            fwht_normalized(&mut buf);
            for (i, &v) in buf.iter().enumerate() {
                out.set(i, j, v);
            }
        }
        out
    }

    /// Like [`apply_columns`](Self::apply_columns) but keeps only `rows` of
    /// the transformed matrix, in the given order (duplicates allowed).
    pub fn apply_columns_select(&self, a: &DenseMatrix<T>, rows: &[usize], scale: T) -> DenseMatrix<T> {
        assert_eq!(a.rows(), self.source_dim);
        let (n, d) = (self.padded_dim, a.cols());
        let mut out = DenseMatrix::zeros(rows.len(), d);
        let mut buf = vec![T::zero(); n];
        for j in 0..d {
            buf.iter_mut().for_each(|v| *v = T::zero());
            for i in 0..self.source_dim {
                buf[i] = a.get(i, j) * self.signs[i];
            }
            fwht_normalized(&mut buf);
            for (t, &i) in rows.iter().enumerate() {
                out.set(t, j, buf[i] * scale);
            }
        }
        out
    }
}
