//! Random sketching operators `Π ∈ R^{r×n}`: sampling, dense projections
//! (Gaussian, Rademacher, sparse Achlioptas) and Hadamard-based fast
//! transforms (SRHT and the Ailon–Chazelle `PHD` construction).
//!
//! Every kind is scaled so that `E[ΠᵀΠ] = I_n`. Applying on the left maps an
//! `n × d` matrix to `r × d`; applying on the right maps `m × n` to `m × r`
//! (i.e. computes `AΠᵀ`, which for a column sample is `A S D`).

use crate::error::{Error, Result};
use crate::hadamard::RandomizedHadamard;
use crate::linalg::{orthonormality_defect, sym_eigen};
use crate::matrix::{dot, DenseMatrix};
use crate::rng::RngSeed;
use crate::sampling::{sample_indices, IndexSample, Probabilities, SampleMode};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SketchKind {
    ColumnSample,
    Gaussian,
    Rademacher,
    SparseAchlioptas,
    Srht,
    AcFjlt,
}

impl std::str::FromStr for SketchKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "column_sample" => Self::ColumnSample,
            "gaussian" => Self::Gaussian,
            "rademacher" => Self::Rademacher,
            "sparse_achlioptas" => Self::SparseAchlioptas,
            "srht" => Self::Srht,
            "ac_fjlt" => Self::AcFjlt,
            other => return Err(Error::InvalidParameter(format!("unsupported sketch kind '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SketchConfig {
    /// Constant `c_q` in the AC-FJLT density `q = min(1, c_q ln²(N)/n_pad)`.
    pub ac_fjlt_cq: f64,
    /// Number of points `N` the AC-FJLT must handle; defaults to `source_dim`.
    pub ac_fjlt_points: Option<usize>,
    /// Dense operators with more than this many entries are regenerated from
    /// the seed on every application instead of being stored.
    pub dense_store_limit: usize,
}

impl Default for SketchConfig {
    fn default() -> Self {
        Self { ac_fjlt_cq: 1.0, ac_fjlt_points: None, dense_store_limit: 4_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SketchPayload<T> {
    Sample(IndexSample<T>),
    Dense(DenseMatrix<T>),
    /// Dense operator regenerated row by row from the seed.
    Streamed,
    Srht { transform: RandomizedHadamard<T>, rows: Vec<usize>, scale: T },
    AcFjlt { transform: RandomizedHadamard<T>, q: T, rows: Vec<Vec<(usize, T)>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SketchOperator<T> {
    pub kind: SketchKind,
    pub source_dim: usize,
    pub target_dim: usize,
    pub seed: RngSeed,
    pub payload: SketchPayload<T>,
}

/// Builds a sketch with the default [`SketchConfig`].
pub fn make_sketch<T: Real>(kind: SketchKind, source_dim: usize, target_dim: usize, seed: RngSeed) -> Result<SketchOperator<T>> {
    make_sketch_with(kind, source_dim, target_dim, seed, &SketchConfig::default())
}

pub fn make_sketch_with<T: Real>(
    kind: SketchKind,
    source_dim: usize,
    target_dim: usize,
    seed: RngSeed,
    config: &SketchConfig,
) -> Result<SketchOperator<T>> {
    if source_dim == 0 || target_dim == 0 {
        return Err(Error::InvalidParameter(format!(
            "sketch dimensions must be positive (source {source_dim}, target {target_dim})"
        )));
    }
    let payload = match kind {
        SketchKind::ColumnSample => {
            let probs = Probabilities::uniform(source_dim);
            SketchPayload::Sample(sample_indices(&probs, target_dim, SampleMode::ExactC, seed)?)
        }
        SketchKind::Gaussian | SketchKind::Rademacher | SketchKind::SparseAchlioptas => {
            if source_dim.saturating_mul(target_dim) > config.dense_store_limit {
                SketchPayload::Streamed
            } else {
                let mut data = Vec::with_capacity(source_dim * target_dim);
                for t in 0..target_dim {
                    data.extend(dense_row::<T>(kind, seed, t, source_dim, target_dim));
                }
                SketchPayload::Dense(DenseMatrix::from_vec_unchecked(target_dim, source_dim, data))
            }
        }
        SketchKind::Srht => {
            let transform = RandomizedHadamard::new(source_dim, seed.child(0));
            let n_pad = transform.padded_dim;
            let mut rng = seed.child(1).rng();
            let mut rows: Vec<usize> = Vec::with_capacity(target_dim);
            if target_dim >= n_pad {
                rows.extend(0..n_pad);
            }
            while rows.len() < target_dim {
                rows.push(rng.index(n_pad));
            }
            let scale = (T::of_count(n_pad) / T::of_count(target_dim)).sqrt();
            SketchPayload::Srht { transform, rows, scale }
        }
        SketchKind::AcFjlt => {
            let transform = RandomizedHadamard::new(source_dim, seed.child(0));
            let n_pad = transform.padded_dim;
            let points = config.ac_fjlt_points.unwrap_or(source_dim).max(2) as f64;
            let q = (config.ac_fjlt_cq * points.ln().powi(2) / n_pad as f64).min(1.0);
            let entry_scale = 1.0 / (q * target_dim as f64).sqrt();
            let rows = (0..target_dim)
                .map(|t| {
                    let mut rng = seed.child(2).child(t as u64).rng();
                    let mut row = Vec::new();
                    for j in 0..n_pad {
                        let keep = rng.uniform() < q;
                        let g = rng.normal();
                        if keep {
                            row.push((j, T::lit(g * entry_scale)));
                        }
                    }
                    row
                })
                .collect();
            SketchPayload::AcFjlt { transform, q: T::lit(q), rows }
        }
    };
    Ok(SketchOperator { kind, source_dim, target_dim, seed, payload })
}

/// Row `t` of a dense random operator; depends only on `(seed, t)`.
fn dense_row<T: Real>(kind: SketchKind, seed: RngSeed, t: usize, n: usize, r: usize) -> Vec<T> {
    let mut rng = seed.child(t as u64).rng();
    let inv = 1.0 / (r as f64).sqrt();
    match kind {
        SketchKind::Gaussian => (0..n).map(|_| T::lit(rng.normal() * inv)).collect(),
        SketchKind::Rademacher => (0..n).map(|_| rng.sign::<T>() * T::lit(inv)).collect(),
        SketchKind::SparseAchlioptas => {
            let a = 3f64.sqrt() * inv;
            (0..n)
                .map(|_| {
                    let u = rng.uniform();
                    if u < 1.0 / 6.0 {
                        T::lit(a)
                    } else if u < 1.0 / 3.0 {
                        T::lit(-a)
                    } else {
                        T::zero()
                    }
                })
                .collect()
        }
        _ => unreachable!("not a dense kind"),
    }
}

impl<T: Real> SketchOperator<T> {
    /// Column/row sampling operator from an explicit [`IndexSample`]:
    /// row `t` of `Π` is `scale_t · e_{index_t}ᵀ`.
    pub fn from_sample(sample: IndexSample<T>, seed: RngSeed) -> Self {
        Self {
            kind: SketchKind::ColumnSample,
            source_dim: sample.population,
            target_dim: sample.len(),
            seed,
            payload: SketchPayload::Sample(sample),
        }
    }

    /// `Π A` for `A` with `source_dim` rows.
    pub fn apply_left(&self, a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if a.rows() != self.source_dim {
            return Err(Error::DimensionMismatch(format!(
                "left sketch expects {} rows, got {}",
                self.source_dim,
                a.rows()
            )));
        }
        Ok(match &self.payload {
            SketchPayload::Sample(s) => {
                let mut out = a.select_rows(&s.indices);
                for (t, &sc) in s.scales.iter().enumerate() {
                    out.row_mut(t).iter_mut().for_each(|v| *v *= sc);
                }
                out
            }
            SketchPayload::Dense(p) => p.matmul(a),
            SketchPayload::Streamed => {
                let mut out = DenseMatrix::zeros(self.target_dim, a.cols());
                for t in 0..self.target_dim {
                    let row = dense_row::<T>(self.kind, self.seed, t, self.source_dim, self.target_dim);
                    let orow = out.row_mut(t);
                    for (k, &pk) in row.iter().enumerate() {
                        if pk == T::zero() {
                            continue;
                        }
                        for (o, &b) in orow.iter_mut().zip(a.row(k)) {
                            *o += pk * b;
                        }
                    }
                }
                out
            }
            SketchPayload::Srht { transform, rows, scale } => transform.apply_columns_select(a, rows, *scale),
            SketchPayload::AcFjlt { transform, rows, .. } => {
                let hd = transform.apply_columns(a);
                let mut out = DenseMatrix::zeros(self.target_dim, a.cols());
                for (t, row) in rows.iter().enumerate() {
                    let orow = out.row_mut(t);
                    for &(j, v) in row {
                        for (o, &b) in orow.iter_mut().zip(hd.row(j)) {
                            *o += v * b;
                        }
                    }
                }
                out
            }
        })
    }

    /// `A Πᵀ` for `A` with `source_dim` columns.
    pub fn apply_right(&self, a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if a.cols() != self.source_dim {
            return Err(Error::DimensionMismatch(format!(
                "right sketch expects {} columns, got {}",
                self.source_dim,
                a.cols()
            )));
        }
        Ok(match &self.payload {
            SketchPayload::Sample(s) => a.select_cols(&s.indices).scale_cols(&s.scales),
            SketchPayload::Dense(p) => a.matmul_t(p),
            SketchPayload::Streamed => {
                let mut out = DenseMatrix::zeros(a.rows(), self.target_dim);
                for t in 0..self.target_dim {
                    let row = dense_row::<T>(self.kind, self.seed, t, self.source_dim, self.target_dim);
                    for i in 0..a.rows() {
                        out.set(i, t, dot(a.row(i), &row));
                    }
                }
                out
            }
            _ => self.apply_left(&a.transpose())?.transpose(),
        })
    }

    pub fn apply(&self, a: &DenseMatrix<T>, side: Side) -> Result<DenseMatrix<T>> {
        match side {
            Side::Left => self.apply_left(a),
            Side::Right => self.apply_right(a),
        }
    }

    /// `Π x` for a single vector.
    pub fn apply_vector(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(self.apply_left(&DenseMatrix::column(x))?.into_vec())
    }

    /// Explicit `r × n` matrix of the operator.
    pub fn to_dense(&self) -> DenseMatrix<T> {
        self.apply_left(&DenseMatrix::identity(self.source_dim)).expect("identity has source_dim rows")
    }
}

pub fn apply_sketch<T: Real>(op: &SketchOperator<T>, a: &DenseMatrix<T>, side: Side) -> Result<DenseMatrix<T>> {
    op.apply(a, side)
}

/// Embedding defect `‖I_d − Uᵀ Πᵀ Π U‖₂` for `U` with orthonormal columns.
pub fn embedding_check<T: Real>(op: &SketchOperator<T>, u: &DenseMatrix<T>) -> Result<T> {
    let dev = orthonormality_defect(u);
    if dev > T::lit(1e-8) {
        return Err(Error::NotOrthonormal(dev.as_f64()));
    }
    let su = op.apply_left(u)?;
    let g = su.t_matmul(&su);
    let diff = &DenseMatrix::identity(u.cols()) - &g;
    let (vals, _) = sym_eigen(&diff);
    Ok(vals.iter().fold(T::zero(), |m, &v| m.max(v.abs())))
}
