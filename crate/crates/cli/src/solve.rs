//! `randla solve`: least-squares and Laplacian systems read from files.

use std::path::Path;

use anyhow::{Context, Result};
use randla::io::{read_edge_list_file, read_matrix_market_file, read_vector_file};
use randla::laplacian::{graph_from_laplacian, solve_laplacian};
use randla::lstsq::{lsqr, sketch_size, solve_exact, solve_precond, solve_sketched};
use randla::{Graph, LaplacianMethod, LsMethod, Matrix, RngSeed};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub seed: u64,
    /// Sketch size for sketched methods; `⌈16 n ln n⌉` when absent.
    pub r: Option<usize>,
    pub eps: f64,
    pub gamma: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { seed: 0, r: None, eps: 0.5, gamma: 4.0, tol: 1e-10, max_iter: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub method: String,
    pub x: Vec<f64>,
    /// `‖Ax − b‖₂`, or `‖Lx − b‖₂` for Laplacian methods.
    pub residual_norm: f64,
    pub iterations: usize,
    pub success: bool,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMethod {
    LeastSquares(LsMethod),
    Laplacian(LaplacianMethod),
}

impl std::str::FromStr for SolveMethod {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        if let Ok(m) = s.parse::<LaplacianMethod>() {
            return Ok(SolveMethod::Laplacian(m));
        }
        s.parse::<LsMethod>()
            .map(SolveMethod::LeastSquares)
            .map_err(|_| anyhow::anyhow!("unknown method '{s}' (least squares: exact, leverage, fast-leverage, uniform, srht, gaussian, lsqr, precond; Laplacian: direct_on_sketch, preconditioned_cg)"))
    }
}

fn residual(a: &Matrix, x: &[f64], b: &[f64]) -> f64 {
    a.matvec(x).iter().zip(b).map(|(ax, bi)| (ax - bi).powi(2)).sum::<f64>().sqrt()
}

/// Graph from a Matrix Market Laplacian (`.mtx`) or an edge list.
pub fn load_graph(path: &Path) -> Result<Graph> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("mtx")) {
        let l: Matrix = read_matrix_market_file(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(graph_from_laplacian(&l, 1e-10)?)
    } else {
        read_edge_list_file(path).with_context(|| format!("reading edge list {}", path.display()))
    }
}

pub fn solve_files(matrix: &Path, rhs: &Path, method: SolveMethod, opts: &SolveOptions) -> Result<SolveSummary> {
    let b: Vec<f64> = read_vector_file(rhs).with_context(|| format!("reading right-hand side {}", rhs.display()))?;
    let seed = RngSeed::from_seed(opts.seed);
    match method {
        SolveMethod::Laplacian(m) => {
            let g = load_graph(matrix)?;
            let sol = solve_laplacian(&g, &b, opts.eps, m, seed)?;
            let res = residual(&g.laplacian(), &sol.x, &b);
            Ok(SolveSummary {
                method: m.to_string(),
                residual_norm: res,
                iterations: sol.iterations,
                success: sol.converged,
                diagnostic: Some(format!("estimated relative L-norm error {:e}", sol.l_norm_error_estimate)),
                x: sol.x,
            })
        }
        SolveMethod::LeastSquares(m) => {
            let a: Matrix = read_matrix_market_file(matrix).with_context(|| format!("reading {}", matrix.display()))?;
            let n = a.cols();
            let sol = match m {
                LsMethod::Exact => solve_exact(&a, &b)?,
                LsMethod::Sketched(s) => solve_sketched(&a, &b, s, opts.r.unwrap_or_else(|| sketch_size(n, 1.0, 16.0).max(n)), seed)?,
                LsMethod::Lsqr => lsqr(&a, &b, None, opts.tol, opts.max_iter)?,
                LsMethod::Precond => solve_precond(&a, &b, opts.gamma, opts.tol, seed)?,
            };
            Ok(SolveSummary {
                method: m.to_string(),
                residual_norm: sol.residual_norm,
                iterations: sol.iterations,
                success: sol.success,
                diagnostic: sol.diagnostic,
                x: sol.x,
            })
        }
    }
}
