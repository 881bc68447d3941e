//! Randomized numerical linear algebra on dense matrices.
//!
//! Sampling and projection sketches, approximate matrix multiplication,
//! sketched and preconditioned least squares, exact and fast leverage scores,
//! low-rank approximation (column-sampled SVD, CX/CUR, Nyström, column subset
//! selection, randomized range finders), element-wise sparsification and
//! Laplacian sparsify-and-solve.
//!
//! Every algorithm is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix `f64`. Randomized operations take an [`RngSeed`] and are
//! bit-reproducible for a given seed.
//!
//! ```
//! use randla::{matmul, Matrix, RngSeed};
//!
//! let a = Matrix::from_fn(20, 50, |i, j| ((i * 50 + j) as f64).sin());
//! let b = a.transpose();
//! let p = matmul::matmul_probs(&a, Some(&b), matmul::ProbMode::Optimal).unwrap();
//! let s = matmul::approx_multiply(&a, &b, 30, &p, RngSeed::from_seed(7)).unwrap();
//! assert_eq!(s.product().shape(), (20, 20));
//! ```

pub mod elementwise;
pub mod error;
pub mod hadamard;
pub mod io;
pub mod laplacian;
pub mod leverage;
pub mod linalg;
pub mod lowrank;
pub mod lstsq;
pub mod matmul;
pub mod matrix;
pub mod rng;
pub mod sampling;
pub mod scalar;
pub mod sketch;

pub use error::{Error, Result};
pub use laplacian::{LaplacianMethod, WeightedGraph};
pub use leverage::LeverageProfile;
pub use lstsq::{LsMethod, LsSolution};
pub use matrix::DenseMatrix;
pub use rng::{RngSeed, SeededRng};
pub use sampling::{IndexSample, Probabilities, SampleMode};
pub use scalar::Real;
pub use sketch::{SketchKind, SketchOperator, Side};

pub type Matrix = DenseMatrix<f64>;
pub type MatrixF32 = DenseMatrix<f32>;
pub type Graph = WeightedGraph<f64>;
pub type Sketch = SketchOperator<f64>;
pub type Solution = LsSolution<f64>;
pub type Leverage = LeverageProfile<f64>;
pub type ProbabilityVector = Probabilities<f64>;
