//! Graph Laplacians: incidence factorization, effective resistances,
//! resistance-sampled spectral sparsifiers and the sparsify-then-solve and
//! sparsify-then-precondition solvers for `Lx = b`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DVector, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, sym_eigen};
use crate::matrix::{dot, DenseMatrix};
use crate::rng::RngSeed;
use crate::sampling::{sample_indices, Probabilities, SampleMode};
use crate::scalar::Real;

/// Undirected graph with positive edge weights. Parallel edges are allowed
/// and act additively in the Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph<T> {
    n: usize,
    edges: Vec<(usize, usize, T)>,
    connected: bool,
}

impl<T: Real> WeightedGraph<T> {
    pub fn new(n: usize, edges: Vec<(usize, usize, T)>) -> Result<Self> {
        for &(u, v, w) in &edges {
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            if u >= n || v >= n {
                return Err(Error::InvalidEdge { u, v, reason: format!("vertex out of range for n = {n}") });
            }
            if !(w > T::zero()) || !w.finite() {
                return Err(Error::InvalidEdge { u, v, reason: format!("weight {w} is not positive and finite") });
            }
        }
        let connected = components(n, &edges) <= 1;
        Ok(Self { n, edges, connected })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, T)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    /// Dense Laplacian `D − W`.
    pub fn laplacian(&self) -> DenseMatrix<T> {
        let mut l = DenseMatrix::zeros(self.n, self.n);
        for &(u, v, w) in &self.edges {
            l.set(u, u, l.get(u, u) + w);
            l.set(v, v, l.get(v, v) + w);
            l.set(u, v, l.get(u, v) - w);
            l.set(v, u, l.get(v, u) - w);
        }
        l
    }

    /// `xᵀ L x = Σ_e w_e (x_u − x_v)²`.
    pub fn quadratic_form(&self, x: &[T]) -> T {
        self.edges.iter().fold(T::zero(), |acc, &(u, v, w)| {
            let d = x[u] - x[v];
            acc + w * d * d
        })
    }

    /// Total weight of edges crossing the cut `(S, V∖S)`.
    pub fn cut_weight(&self, in_s: &[bool]) -> T {
        self.edges.iter().filter(|&&(u, v, _)| in_s[u] != in_s[v]).fold(T::zero(), |acc, &(_, _, w)| acc + w)
    }
}

fn components<T>(n: usize, edges: &[(usize, usize, T)]) -> usize {
    let labels = component_labels(n, edges);
    labels.iter().enumerate().filter(|&(i, &l)| i == l).count()
}

/// Root vertex of each vertex's connected component.
fn component_labels<T>(n: usize, edges: &[(usize, usize, T)]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(u, v, _) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    (0..n).map(|v| find(&mut parent, v)).collect()
}

/// `Σ_c 𝟙_c𝟙_cᵀ / |c|` over the connected components of `g`: the projector
/// onto the nullspace of its Laplacian. Equals `𝟙𝟙ᵀ/n` for a connected graph.
pub fn nullspace_projector<T: Real>(g: &WeightedGraph<T>) -> DenseMatrix<T> {
    let labels = component_labels(g.n(), g.edges());
    let mut size = vec![0usize; g.n()];
    labels.iter().for_each(|&l| size[l] += 1);
    DenseMatrix::from_fn(g.n(), g.n(), |i, j| if labels[i] == labels[j] { T::one() / T::of_count(size[labels[i]]) } else { T::zero() })
}

/// Signed incidence `B ∈ R^{m×n}` (the lower endpoint gets `+1`) and the
/// edge weights, so that `L = Bᵀ diag(w) B`.
pub fn edge_incidence<T: Real>(g: &WeightedGraph<T>) -> (DenseMatrix<T>, Vec<T>) {
    let mut b = DenseMatrix::zeros(g.edge_count(), g.n());
    for (e, &(u, v, _)) in g.edges().iter().enumerate() {
        let (lo, hi) = (u.min(v), u.max(v));
        b.set(e, lo, T::one());
        b.set(e, hi, -T::one());
    }
    (b, g.edges().iter().map(|e| e.2).collect())
}

/// Recovers the graph of a Laplacian: symmetric, nonpositive off-diagonal,
/// zero row sums (all within `tol · max|L|`).
pub fn graph_from_laplacian<T: Real>(l: &DenseMatrix<T>, tol: T) -> Result<WeightedGraph<T>> {
    let (n, m) = l.shape();
    if n != m {
        return Err(Error::DimensionMismatch(format!("Laplacian must be square, got {n}x{m}")));
    }
    let slack = tol * l.max_abs().max(T::one());
    let mut edges = Vec::new();
    for i in 0..n {
        let mut row_sum = T::zero();
        for j in 0..n {
            let v = l.get(i, j);
            row_sum += v;
            if (v - l.get(j, i)).abs() > slack {
                return Err(Error::InvalidParameter(format!("Laplacian is not symmetric at ({i}, {j})")));
            }
            if i != j && v > slack {
                return Err(Error::InvalidParameter(format!("positive off-diagonal entry at ({i}, {j})")));
            }
            if j > i && v < -slack {
                edges.push((i, j, -v));
            }
        }
        if row_sum.abs() > slack {
            return Err(Error::InvalidParameter(format!("row {i} sums to {row_sum}, expected 0")));
        }
    }
    WeightedGraph::new(n, edges)
}

pub fn laplacian<T: Real>(g: &WeightedGraph<T>) -> DenseMatrix<T> {
    g.laplacian()
}

fn ones_over_n<T: Real>(n: usize) -> DenseMatrix<T> {
    let v = T::one() / T::of_count(n);
    DenseMatrix::from_fn(n, n, |_, _| v)
}

/// `L⁺ = (L + J)⁻¹ − J` with `J = 𝟙𝟙ᵀ/n`; valid for connected graphs.
pub fn laplacian_pinv<T: Real>(g: &WeightedGraph<T>) -> Result<DenseMatrix<T>> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let j = ones_over_n(g.n());
    Ok(&spd_inverse(&(&g.laplacian() + &j))? - &j)
}

/// `R_e = (e_u − e_v)ᵀ L⁺ (e_u − e_v)` for every edge.
pub fn effective_resistances<T: Real>(g: &WeightedGraph<T>) -> Result<Vec<T>> {
    let lp = laplacian_pinv(g)?;
    Ok(g.edges().iter().map(|&(u, v, _)| lp.get(u, u) + lp.get(v, v) - lp.get(u, v) - lp.get(v, u)).collect())
}

/// Resistance-sampled sparsifier with `r` i.i.d. edge draws. Check
/// [`WeightedGraph::is_connected`] on the output; a disconnected draw should
/// be retried with another seed.
pub fn sparsify_graph<T: Real>(g: &WeightedGraph<T>, r: usize, seed: RngSeed) -> Result<WeightedGraph<T>> {
    let res = effective_resistances(g)?;
    sparsify_with_resistances(g, &res, r, seed)
}

/// [`sparsify_graph`] with precomputed effective resistances.
pub fn sparsify_with_resistances<T: Real>(g: &WeightedGraph<T>, resistances: &[T], r: usize, seed: RngSeed) -> Result<WeightedGraph<T>> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    if resistances.len() != g.edge_count() {
        return Err(Error::DimensionMismatch(format!("{} resistances for {} edges", resistances.len(), g.edge_count())));
    }
    if r < g.n() {
        return Err(Error::InvalidParameter(format!("sample count r = {r} below n = {}", g.n())));
    }
    if g.edge_count() == 0 {
        return Ok(g.clone());
    }
    let lev: Vec<T> = g.edges().iter().zip(resistances).map(|(e, &re)| e.2 * re.max(T::zero())).collect();
    let probs = Probabilities::from_weights(&lev)?;
    let sample = sample_indices(&probs, r, SampleMode::ExactC, seed)?;
    let mut merged: BTreeMap<usize, T> = BTreeMap::new();
    for (&e, &s) in sample.indices.iter().zip(&sample.scales) {
        *merged.entry(e).or_insert_with(T::zero) += g.edges()[e].2 * s * s;
    }
    let edges = merged.into_iter().map(|(e, w)| (g.edges()[e].0, g.edges()[e].1, w)).collect();
    WeightedGraph::new(g.n(), edges)
}

/// Range `[λ_min, λ_max]` of the generalized eigenvalues of `(L̃, L)` on `𝟙⊥`,
/// so that `λ_min xᵀLx ≤ xᵀL̃x ≤ λ_max xᵀLx`. Both graphs must share `n` and
/// `L` must be connected.
pub fn spectral_similarity<T: Real>(g: &WeightedGraph<T>, h: &WeightedGraph<T>) -> Result<(T, T)> {
    if g.n() != h.n() {
        return Err(Error::DimensionMismatch(format!("graphs on {} and {} vertices", g.n(), h.n())));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = g.n();
    if n < 2 {
        return Ok((T::one(), T::one()));
    }
    let j = ones_over_n::<T>(n);
    let chol = (&g.laplacian() + &j).to_nalgebra().cholesky().ok_or_else(|| Error::RankDeficient("L + J is not positive definite".into()))?;
    let lower = chol.l();
    let ht = (&h.laplacian() + &j).to_nalgebra();
    let x = lower.solve_lower_triangular(&ht).ok_or_else(|| Error::RankDeficient("singular Cholesky factor".into()))?;
    let y = lower.solve_lower_triangular(&x.transpose()).ok_or_else(|| Error::RankDeficient("singular Cholesky factor".into()))?;
    let (vals, vecs) = sym_eigen(&DenseMatrix::from_nalgebra(&y));
    // Cᵀ𝟙 is an eigenvector with eigenvalue 1 whatever L̃ is; drop it
    let u = lower.transpose() * DVector::from_element(n, T::one());
    let overlap = |c: usize| (0..n).fold(T::zero(), |s, i| s + vecs.get(i, c) * u[i]).abs();
    let skip = (0..n).max_by(|&a, &b| overlap(a).partial_cmp(&overlap(b)).unwrap()).unwrap_or(0);
    let rest = vals.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v);
    let (lo, hi) = rest.fold((T::lit(f64::INFINITY), T::lit(f64::NEG_INFINITY)), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Ok((lo, hi))
}

/// `max(|λ_min − 1|, |λ_max − 1|)` from [`spectral_similarity`].
pub fn spectral_defect<T: Real>(g: &WeightedGraph<T>, h: &WeightedGraph<T>) -> Result<T> {
    let (lo, hi) = spectral_similarity(g, h)?;
    Ok((T::one() - lo).abs().max((hi - T::one()).abs()))
}

/// `‖x‖_L = √(xᵀ L x)`.
pub fn l_norm<T: Real>(g: &WeightedGraph<T>, x: &[T]) -> T {
    g.quadratic_form(x).max(T::zero()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LaplacianMethod {
    /// `x̃ = L̃⁺ b` for a sparsifier with `⌈8 n ln n / ε²⌉` samples.
    DirectOnSketch,
    /// Conjugate gradient on `Lx = b` preconditioned by `(L̃ + P₀)⁻¹`, where
    /// `P₀` projects onto the nullspace of `L̃` (`J = 𝟙𝟙ᵀ/n` when `L̃` is
    /// connected).
    PreconditionedCg,
}

impl fmt::Display for LaplacianMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LaplacianMethod::DirectOnSketch => "direct_on_sketch",
            LaplacianMethod::PreconditionedCg => "preconditioned_cg",
        })
    }
}

impl FromStr for LaplacianMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct_on_sketch" | "direct" => Ok(LaplacianMethod::DirectOnSketch),
            "preconditioned_cg" | "pcg" => Ok(LaplacianMethod::PreconditionedCg),
            _ => Err(Error::InvalidParameter(format!("unknown Laplacian method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianSolveResult<T> {
    /// Solution, orthogonal to `𝟙`.
    pub x: Vec<T>,
    /// `‖Lx − b‖_{L̃⁺} / ‖x‖_L`, which tracks `‖x − L⁺b‖_L / ‖x‖_L` up to
    /// the spectral similarity of `L̃` and `L`.
    pub l_norm_error_estimate: T,
    pub method: LaplacianMethod,
    pub iterations: usize,
    pub sparsifier_edge_count: usize,
    /// Sparsifier draws used, counting disconnected ones.
    pub attempts: usize,
    /// False only when CG hit its iteration cap.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacianConfig {
    /// Overrides the mode's default sample count.
    pub samples: Option<usize>,
    /// Use `L` itself as the sparsifier (for testing the preconditioner path).
    pub exact_sparsifier: bool,
    pub cg_tol: f64,
    /// Defaults to `10 n`.
    pub max_iter: Option<usize>,
    /// Sparsifier draws allowed in direct mode before giving up on connectivity.
    pub max_attempts: usize,
}

impl Default for LaplacianConfig {
    fn default() -> Self {
        Self { samples: None, exact_sparsifier: false, cg_tol: 1e-10, max_iter: None, max_attempts: 5 }
    }
}

/// `⌈8 n ln n / ε²⌉`.
pub fn direct_sample_count(n: usize, eps: f64) -> usize {
    let nf = n as f64;
    (8.0 * nf * nf.ln() / (eps * eps)).ceil().max(nf) as usize
}

pub fn solve_laplacian<T: Real>(g: &WeightedGraph<T>, b: &[T], eps: f64, method: LaplacianMethod, seed: RngSeed) -> Result<LaplacianSolveResult<T>> {
    solve_laplacian_with(g, b, eps, method, seed, &LaplacianConfig::default())
}

struct SpdSolver<T: Real> {
    chol: Cholesky<T, Dyn>,
}

impl<T: Real> SpdSolver<T> {
    fn new(a: &DenseMatrix<T>) -> Result<Self> {
        let chol = a.to_nalgebra().cholesky().ok_or_else(|| Error::RankDeficient("sparsifier Laplacian + J is not positive definite".into()))?;
        Ok(Self { chol })
    }

    fn solve(&self, r: &[T]) -> Vec<T> {
        self.chol.solve(&DVector::from_column_slice(r)).as_slice().to_vec()
    }
}

fn center<T: Real>(x: &mut [T]) {
    if x.is_empty() {
        return;
    }
    let mean = x.iter().fold(T::zero(), |a, &v| a + v) / T::of_count(x.len());
    x.iter_mut().for_each(|v| *v -= mean);
}

fn norm<T: Real>(x: &[T]) -> T {
    dot(x, x).sqrt()
}

pub fn solve_laplacian_with<T: Real>(
    g: &WeightedGraph<T>,
    b: &[T],
    eps: f64,
    method: LaplacianMethod,
    seed: RngSeed,
    config: &LaplacianConfig,
) -> Result<LaplacianSolveResult<T>> {
    let n = g.n();
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!("b has length {}, graph has {n} vertices", b.len())));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let sum = b.iter().fold(0.0, |a, v| a + v.as_f64());
    let scale = b.iter().fold(1.0f64, |a, v| a.max(v.as_f64().abs()));
    if sum.abs() > 1e-10 * scale {
        return Err(Error::IncompatibleRhs(format!("entries of b sum to {sum:e}, expected 0")));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }

    let r = config.samples.unwrap_or(match method {
        LaplacianMethod::DirectOnSketch => direct_sample_count(n, eps),
        LaplacianMethod::PreconditionedCg => 4 * n,
    });
    let (sparsifier, attempts) = if config.exact_sparsifier {
        (g.clone(), 0)
    } else {
        let res = effective_resistances(g)?;
        match method {
            // a disconnected L̃ only adds outlying eigenvalues to the preconditioned system
            LaplacianMethod::PreconditionedCg => (sparsify_with_resistances(g, &res, r.max(n), seed.child(0))?, 1),
            LaplacianMethod::DirectOnSketch => {
                let mut found = None;
                for attempt in 0..config.max_attempts.max(1) {
                    let h = sparsify_with_resistances(g, &res, r.max(n), seed.child(attempt as u64))?;
                    if h.is_connected() {
                        found = Some((h, attempt + 1));
                        break;
                    }
                }
                found.ok_or_else(|| Error::RankDeficient(format!("sparsifier disconnected in {} draws; increase r", config.max_attempts)))?
            }
        }
    };
    let precond = SpdSolver::new(&(&sparsifier.laplacian() + &nullspace_projector(&sparsifier)))?;
    let l = g.laplacian();

    let mut bc = b.to_vec();
    center(&mut bc);
    let (mut x, iterations, converged) = match method {
        LaplacianMethod::DirectOnSketch => (precond.solve(&bc), 0, true),
        LaplacianMethod::PreconditionedCg => pcg(&l, &bc, &precond, config.cg_tol, config.max_iter.unwrap_or(10 * n.max(1))),
    };
    center(&mut x);

    let mut resid = l.matvec(&x);
    resid.iter_mut().zip(&bc).for_each(|(r, &bi)| *r -= bi);
    let z = precond.solve(&resid);
    let err = dot(&resid, &z).max(T::zero()).sqrt();
    let xl = l_norm(g, &x);
    let l_norm_error_estimate = if xl > T::zero() { err / xl } else { err };
    Ok(LaplacianSolveResult {
        x,
        l_norm_error_estimate,
        method,
        iterations,
        sparsifier_edge_count: sparsifier.edge_count(),
        attempts,
        converged,
    })
}

/// Preconditioned CG from `x₀ = 0`; stops when `‖b − Lx‖ ≤ tol ‖b‖`.
fn pcg<T: Real>(l: &DenseMatrix<T>, b: &[T], m: &SpdSolver<T>, tol: f64, max_iter: usize) -> (Vec<T>, usize, bool) {
    let n = b.len();
    let mut x = vec![T::zero(); n];
    let bn = norm(b);
    if bn == T::zero() {
        return (x, 0, true);
    }
    let target = T::lit(tol) * bn;
    let mut r = b.to_vec();
    let mut z = m.solve(&r);
    center(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let lp = l.matvec(&p);
        let pap = dot(&p, &lp);
        if !(pap > T::zero()) {
            return (x, it - 1, false);
        }
        let alpha = rz / pap;
        x.iter_mut().zip(&p).for_each(|(xi, &pi)| *xi += alpha * pi);
        r.iter_mut().zip(&lp).for_each(|(ri, &v)| *ri -= alpha * v);
        if norm(&r) <= target {
            return (x, it, true);
        }
        z = m.solve(&r);
        center(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, &zi)| *pi = zi + beta * *pi);
    }
    (x, max_iter, false)
}
