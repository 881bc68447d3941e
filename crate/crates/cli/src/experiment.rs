//! Config-driven Monte Carlo runs.

use std::collections::BTreeMap;
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Result};
use rayon::prelude::*;
use randla::elementwise::{perturbation_check, quantize, sample_stream, sparsify, SparsifyScheme};
use randla::laplacian::{direct_sample_count, l_norm, laplacian_pinv, solve_laplacian, sparsify_graph, spectral_similarity};
use randla::leverage::{leverage_exact, leverage_fast};
use randla::linalg::{orthonormal_basis, singular_values, spectral_norm};
use randla::lowrank::{
    cssp_with, cur_decompose, cx_decompose, linear_time_svd, posterior_error_estimate, range_finder, select_columns, adaptive_range_finder,
    CsspMode, CurMode,
};
use randla::lstsq::{sketch_size, solve_exact, solve_precond, solve_sketched};
use randla::matmul::{approx_multiply, expected_squared_error, matmul_probs, spectral_sample_size, ProbMode};
use randla::sketch::{embedding_check, make_sketch};
use randla::{Graph, LaplacianMethod, LsMethod, Matrix, Probabilities, RngSeed, SketchKind};

use crate::config::ExperimentConfig;
use crate::generate::{gaussian, generate_graph, generate_matrix};
use crate::report::{ExperimentReport, TrialRecord};

/// Environment variable capping the number of trials run in parallel.
pub const THREADS_ENV: &str = "RANDLA_THREADS";

macro_rules! experiments {
    ($($variant:ident => $tag:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum Experiment {
            $($variant),*
        }

        impl Experiment {
            pub const ALL: &'static [Experiment] = &[$(Experiment::$variant),*];

            pub fn tag(self) -> &'static str {
                match self {
                    $(Experiment::$variant => $tag),*
                }
            }
        }
    };
}

experiments! {
    MatmulFrobenius => "matmul_frobenius",
    MatmulSpectral => "matmul_spectral",
    SketchEmbedding => "sketch_embedding",
    LsSketched => "ls_sketched",
    LsPrecond => "ls_precond",
    LeverageFast => "leverage_fast",
    ColumnSvd => "column_svd",
    Multipass => "multipass",
    Cx => "cx",
    Cur => "cur",
    Cssp => "cssp",
    RangeFinder => "range_finder",
    Posterior => "posterior",
    AdaptiveRange => "adaptive_range",
    Jl => "jl",
    Sparsify => "sparsify",
    Stream => "stream",
    LaplacianSolve => "laplacian_solve",
    LaplacianSparsify => "laplacian_sparsify",
}

impl Experiment {
    pub fn needs_graph(self) -> bool {
        matches!(self, Experiment::LaplacianSolve | Experiment::LaplacianSparsify)
    }

    pub fn default_k(self, min_dim: usize) -> usize {
        5.min(min_dim)
    }

    pub fn default_eps(self) -> f64 {
        0.5
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Experiment {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Experiment::ALL
            .iter()
            .copied()
            .find(|e| e.tag() == key)
            .ok_or_else(|| anyhow!("unknown experiment '{s}' (expected one of: {})", Experiment::ALL.iter().map(|e| e.tag()).collect::<Vec<_>>().join(", ")))
    }
}

/// Column probabilities for the matrix-multiplication experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbScheme(pub ProbMode);

impl FromStr for ProbScheme {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(ProbScheme(match s {
            "optimal" => ProbMode::Optimal,
            "from_a" => ProbMode::FromA,
            "from_a_squared" | "norm_squared" => ProbMode::FromASquared,
            "uniform" => ProbMode::Uniform,
            other => bail!("unknown probability scheme '{other}' (expected optimal, from_a, from_a_squared or uniform)"),
        }))
    }
}

/// What one trial produced, before bookkeeping.
#[derive(Debug, Clone, Default)]
pub struct TrialOutcome {
    pub success: bool,
    pub iterations: Option<usize>,
    pub bound: Option<f64>,
    pub measured: BTreeMap<String, f64>,
}

impl TrialOutcome {
    fn new(success: bool, bound: Option<f64>, measured: &[(&str, f64)]) -> Self {
        let measured = measured.iter().map(|&(k, v)| (k.to_string(), v)).collect();
        Self { success, iterations: None, bound, measured }
    }

    fn iterations(mut self, it: usize) -> Self {
        self.iterations = Some(it);
        self
    }
}

enum Instance {
    Matrix { a: Matrix, b: Matrix, rhs: Vec<f64> },
    Graph { g: Graph, rhs: Vec<f64> },
}

fn build_instance(cfg: &ExperimentConfig, exp: Experiment, seed: RngSeed) -> Result<Instance> {
    let params = cfg.profile_params();
    if exp.needs_graph() {
        let g = generate_graph(cfg.matrix_profile, cfg.n, &params, seed.child(0))?;
        let mut rng = seed.child(1).rng();
        let mut rhs: Vec<f64> = (0..cfg.n).map(|_| rng.normal()).collect();
        let mu = rhs.iter().sum::<f64>() / cfg.n as f64;
        rhs.iter_mut().for_each(|v| *v -= mu);
        return Ok(Instance::Graph { g, rhs });
    }
    let a = generate_matrix(cfg.matrix_profile, cfg.m, cfg.n, &params, seed.child(0))?;
    let b = if exp == Experiment::MatmulFrobenius {
        generate_matrix(cfg.matrix_profile, cfg.n, cfg.m, &params, seed.child(1))?
    } else {
        Matrix::zeros(0, 0)
    };
    let rhs = if matches!(exp, Experiment::LsSketched | Experiment::LsPrecond) {
        let x0: Vec<f64> = gaussian(cfg.n, 1, seed.child(2)).into_vec();
        let noise = gaussian(cfg.m, 1, seed.child(3)).into_vec();
        a.matvec(&x0).iter().zip(&noise).map(|(s, e)| s + e).collect()
    } else {
        Vec::new()
    };
    Ok(Instance::Matrix { a, b, rhs })
}

fn tail_fro(sigma: &[f64], k: usize) -> f64 {
    sigma.iter().skip(k).map(|s| s * s).sum::<f64>().sqrt()
}

fn run_matrix_trial(cfg: &ExperimentConfig, exp: Experiment, a: &Matrix, b: &Matrix, rhs: &[f64], seed: RngSeed) -> Result<TrialOutcome> {
    let (m, n) = a.shape();
    let k = cfg.k_or(exp.default_k(m.min(n)));
    let eps = cfg.eps_or(exp.default_eps());
    use Experiment as E;
    Ok(match exp {
        E::MatmulFrobenius => {
            let ProbScheme(mode) = cfg.scheme_or("optimal").parse()?;
            let c = cfg.c.unwrap_or(10);
            let probs = matmul_probs(a, Some(b), mode)?;
            let s = approx_multiply(a, b, c, &probs, seed)?;
            let err = (&a.matmul(b) - &s.product()).frobenius_norm_sq();
            let expected = expected_squared_error(a, b, &probs, c)?;
            let rel = err.sqrt() / (a.frobenius_norm() * b.frobenius_norm());
            TrialOutcome::new(true, Some(expected), &[("sq_error", err), ("rel_error", rel)])
        }
        E::MatmulSpectral => {
            let ProbScheme(mode) = cfg.scheme_or("optimal").parse()?;
            let a2 = spectral_norm(a);
            let an = a.scale(1.0 / a2);
            let at = an.transpose();
            let probs = matmul_probs(&an, Some(&at), mode)?;
            let c = match cfg.c {
                Some(c) => c,
                None => spectral_sample_size(an.frobenius_norm_sq(), 1.0, eps, 0.1)?,
            };
            let s = approx_multiply(&an, &at, c, &probs, seed)?;
            let err = spectral_norm(&(&an.matmul(&at) - &s.product()));
            TrialOutcome::new(err <= eps, Some(eps), &[("spectral_error", err), ("c", c as f64)])
        }
        E::SketchEmbedding => {
            let kind: SketchKind = cfg.scheme_or("srht").parse()?;
            let r = cfg.r.unwrap_or_else(|| sketch_size(n, 1.0, 16.0).max(n));
            let u = orthonormal_basis(a, None);
            let op = make_sketch(kind, m, r, seed)?;
            let defect = embedding_check(&op, &u)?;
            TrialOutcome::new(defect <= eps, Some(eps), &[("embedding_defect", defect)])
        }
        E::LsSketched => {
            let LsMethod::Sketched(strategy) = cfg.scheme_or("leverage").parse::<LsMethod>()? else {
                bail!("scheme is not a sketching strategy");
            };
            let r = cfg.r.unwrap_or_else(|| sketch_size(n, 1.0, 16.0).max(n));
            let exact = solve_exact(a, rhs)?;
            let sol = solve_sketched(a, rhs, strategy, r, seed)?;
            let ratio = sol.residual_norm / exact.residual_norm;
            let bound = 1.0 + eps;
            TrialOutcome::new(sol.success && ratio <= bound, Some(bound), &[("objective_ratio", ratio)])
        }
        E::LsPrecond => {
            let gamma = cfg.gamma.unwrap_or(4.0);
            let sol = solve_precond(a, rhs, gamma, 1e-10, seed)?;
            let r: Vec<f64> = a.matvec(&sol.x).iter().zip(rhs).map(|(ax, b)| b - ax).collect();
            let atr = a.t_matvec(&r);
            let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            let backward = atr.iter().map(|v| v * v).sum::<f64>().sqrt() / (spectral_norm(a) * rn).max(f64::MIN_POSITIVE);
            let mut measured = vec![("backward_error", backward), ("residual_norm", sol.residual_norm), ("retries", sol.retries as f64)];
            if let Some(kappa) = sol.precond_condition_estimate {
                measured.push(("condition_estimate", kappa));
            }
            TrialOutcome::new(sol.success, None, &measured).iterations(sol.iterations)
        }
        E::LeverageFast => {
            let exact = leverage_exact(a)?;
            let approx = leverage_fast(a, eps, seed)?;
            let floor = 1e-12 * exact.max_score();
            let worst = exact
                .scores
                .iter()
                .zip(&approx.scores)
                .filter(|(l, _)| **l > floor)
                .map(|(l, t)| (t - l).abs() / l)
                .fold(0.0, f64::max);
            TrialOutcome::new(worst <= eps, Some(eps), &[("max_rel_error", worst)])
        }
        E::ColumnSvd => {
            let c = cfg.c.unwrap_or((4 * k).min(n));
            let probs = Probabilities::from_weights(&a.col_norms_sq())?;
            let res = linear_time_svd(a, c, k, &probs, seed)?;
            let err = (a - &res.project(a)).frobenius_norm_sq();
            let tail = tail_fro(&singular_values(a), k).powi(2);
            let gram_gap = (&a.matmul_t(a) - &res.c_mat.matmul_t(&res.c_mat)).frobenius_norm();
            let bound = tail + 2.0 * (k as f64).sqrt() * gram_gap;
            let slack = 1e-9 * a.frobenius_norm_sq();
            TrialOutcome::new(err <= bound + slack, Some(bound), &[("sq_error", err), ("additive_error", err - tail)])
        }
        E::Multipass => {
            let c = cfg.c.unwrap_or(k);
            let t = cfg.t.unwrap_or(3);
            let sel = select_columns(a, c, t, seed)?;
            let monotone = sel.residuals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
            let last = sel.residuals.last().copied().unwrap_or_else(|| a.frobenius_norm());
            let tail = tail_fro(&singular_values(a), k).powi(2);
            TrialOutcome::new(
                monotone,
                None,
                &[("final_residual", last), ("additive_error", last * last - tail), ("monotone", f64::from(u8::from(monotone)))],
            )
            .iterations(sel.residuals.len())
        }
        E::Cx => {
            let cx = cx_decompose(a, k, eps, seed)?;
            let bound = (1.0 + eps) * cx.best_rank_k;
            TrialOutcome::new(
                cx.success,
                Some(bound),
                &[("residual", cx.residual), ("best_rank_k", cx.best_rank_k), ("columns", cx.c_mat.cols() as f64)],
            )
        }
        E::Cur => {
            let mode = if cfg.scheme_or("strong") == "weak" { CurMode::Weak } else { CurMode::Strong };
            let f = cur_decompose(a, k, eps, mode, seed)?;
            let residual = f.residual(a);
            let bound = (1.0 + eps) * f.best_rank_k;
            let ok = residual <= bound + 1e-7 * a.frobenius_norm();
            TrialOutcome::new(
                ok,
                Some(bound),
                &[("residual", residual), ("best_rank_k", f.best_rank_k), ("rows", f.row_indices.len() as f64), ("columns", f.column_indices.len() as f64)],
            )
        }
        E::Cssp => {
            let mode = match cfg.scheme_or("frobenius") {
                "spectral" => CsspMode::Spectral,
                _ => CsspMode::Frobenius,
            };
            let res = cssp_with(a, k, mode, seed)?;
            TrialOutcome::new(true, None, &[("frobenius_ratio", res.frobenius_ratio()), ("residual_fro", res.residual_fro), ("best_fro", res.best_fro)])
                .iterations(res.attempts)
        }
        E::RangeFinder | E::Posterior => {
            let p = cfg.p.unwrap_or(5.0) as usize;
            let q = cfg.q.unwrap_or(0);
            let basis = range_finder(a, k, p, q, seed)?;
            let res = basis.residual(a);
            let fro = res.frobenius_norm();
            let spec = spectral_norm(&res);
            if exp == E::RangeFinder {
                let sigma = singular_values(a);
                let bound = (p >= 2).then(|| (1.0 + k as f64 / (p as f64 - 1.0)).sqrt() * tail_fro(&sigma, k));
                let ok = bound.is_none_or(|b| fro <= b);
                let sigma_next = sigma.get(k).copied().unwrap_or(0.0);
                TrialOutcome::new(ok, bound, &[("fro_error", fro), ("spectral_error", spec), ("sigma_k_plus_1", sigma_next)])
            } else {
                let probes = cfg.r.unwrap_or(10);
                let est = posterior_error_estimate(a, &basis.q, probes, seed.child(1));
                TrialOutcome::new(est >= spec, Some(est), &[("estimate", est), ("spectral_error", spec)])
            }
        }
        E::AdaptiveRange => {
            let scale = spectral_norm(a);
            let basis = adaptive_range_finder(a, eps * scale, cfg.r.unwrap_or(10), seed)?;
            let spec = spectral_norm(&basis.residual(a)) / scale;
            TrialOutcome::new(
                spec <= eps,
                Some(eps),
                &[("rel_spectral_error", spec), ("basis_size", basis.ell as f64), ("converged", f64::from(u8::from(basis.converged)))],
            )
        }
        E::Jl => {
            let points = m;
            let kind: SketchKind = cfg.scheme_or("gaussian").parse()?;
            let target = cfg.r.unwrap_or_else(|| (9.0 * (points as f64).ln() / (eps * eps - eps * eps * eps)).ceil() as usize);
            let x = a.transpose();
            let op = make_sketch(kind, n, target, seed)?;
            let y = op.apply_left(&x)?;
            let mut worst: f64 = 0.0;
            let mut kept = 0usize;
            let mut pairs = 0usize;
            for i in 0..points {
                for j in i + 1..points {
                    let dx: f64 = (0..n).map(|r| (x.get(r, i) - x.get(r, j)).powi(2)).sum();
                    let dy: f64 = (0..target).map(|r| (y.get(r, i) - y.get(r, j)).powi(2)).sum();
                    if dx == 0.0 {
                        continue;
                    }
                    let dist = (dy / dx - 1.0).abs();
                    worst = worst.max(dist);
                    pairs += 1;
                    kept += usize::from(dist <= eps);
                }
            }
            let frac = if pairs == 0 { 1.0 } else { kept as f64 / pairs as f64 };
            TrialOutcome::new(worst <= eps, Some(eps), &[("max_distortion", worst), ("pairs_preserved", frac), ("target_dim", target as f64)])
        }
        E::Sparsify => {
            let p = cfg.p.unwrap_or(0.5);
            let sample = match cfg.scheme_or("magnitude") {
                "uniform" => sparsify(a, p, SparsifyScheme::UniformP, seed)?,
                "quantize" => quantize(a, seed)?,
                _ => sparsify(a, p, SparsifyScheme::Magnitude, seed)?,
            };
            let dense = sample.to_dense();
            let spec = spectral_norm(&(a - &dense));
            let structural = perturbation_check(a, &dense, k)?.holds(1e-8 * a.frobenius_norm().max(1.0));
            let bound = (sample.scheme == SparsifyScheme::Quantize).then(|| 4.0 * sample.b * (m.max(n) as f64).sqrt());
            let ok = structural && bound.is_none_or(|b| spec <= b);
            TrialOutcome::new(
                ok,
                bound,
                &[("spectral_error", spec), ("rel_spectral_error", spec / spectral_norm(a)), ("nnz", sample.nnz() as f64), ("expected_nnz", sample.expected_nnz)],
            )
        }
        E::Stream => {
            let s = cfg.p.unwrap_or((m * n) as f64 / 4.0);
            let entries = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (i, j, a.get(i, j)));
            let sample = sample_stream(entries, s, m.max(n), seed)?;
            let dense = if sample.shape == (m, n) { sample.to_dense() } else { bail!("stream sample has shape {:?}", sample.shape) };
            let spec = spectral_norm(&(a - &dense)) / spectral_norm(a);
            TrialOutcome::new(true, Some(sample.expected_nnz), &[("nnz", sample.nnz() as f64), ("rel_spectral_error", spec)])
        }
        E::LaplacianSolve | E::LaplacianSparsify => unreachable!("graph experiment on a matrix instance"),
    })
}

fn run_graph_trial(cfg: &ExperimentConfig, exp: Experiment, g: &Graph, rhs: &[f64], seed: RngSeed) -> Result<TrialOutcome> {
    let n = g.n();
    let eps = cfg.eps_or(exp.default_eps());
    Ok(match exp {
        Experiment::LaplacianSolve => {
            let method: LaplacianMethod = cfg.scheme_or("direct").parse()?;
            let x = laplacian_pinv(g)?.matvec(rhs);
            let sol = solve_laplacian(g, rhs, eps, method, seed)?;
            let diff: Vec<f64> = sol.x.iter().zip(&x).map(|(a, b)| a - b).collect();
            let err = l_norm(g, &diff) / l_norm(g, &x);
            TrialOutcome::new(
                sol.converged && err <= eps,
                Some(eps),
                &[("l_norm_error", err), ("error_estimate", sol.l_norm_error_estimate), ("sparsifier_edges", sol.sparsifier_edge_count as f64)],
            )
            .iterations(sol.iterations)
        }
        Experiment::LaplacianSparsify => {
            let r = cfg.r.unwrap_or_else(|| direct_sample_count(n, eps));
            let h = sparsify_graph(g, r, seed)?;
            let (lo, hi) = spectral_similarity(g, &h)?;
            let defect = (1.0 - lo).abs().max((hi - 1.0).abs());
            TrialOutcome::new(
                defect <= eps,
                Some(eps),
                &[("lambda_min", lo), ("lambda_max", hi), ("spectral_defect", defect), ("edges", h.edge_count() as f64)],
            )
        }
        other => bail!("{other} is not a graph experiment"),
    })
}

fn run_on_instance(cfg: &ExperimentConfig, exp: Experiment, inst: &Instance, seed: RngSeed) -> Result<TrialOutcome> {
    match inst {
        Instance::Matrix { a, b, rhs } => run_matrix_trial(cfg, exp, a, b, rhs, seed),
        Instance::Graph { g, rhs } => run_graph_trial(cfg, exp, g, rhs, seed),
    }
}

/// Seed of trial `i`: stream `i` of the configured seed.
pub fn trial_seed(cfg: &ExperimentConfig, i: usize) -> RngSeed {
    RngSeed::new(cfg.seed, i as u64)
}

fn instance_seed(cfg: &ExperimentConfig) -> RngSeed {
    RngSeed::new(cfg.seed, u64::MAX)
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".to_string()
    }
}

fn run_trial(cfg: &ExperimentConfig, exp: Experiment, shared: Option<&Instance>, i: usize) -> TrialRecord {
    let seed = trial_seed(cfg, i);
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(|| match shared {
        Some(inst) => run_on_instance(cfg, exp, inst, seed),
        None => build_instance(cfg, exp, seed.child(u64::MAX)).and_then(|inst| run_on_instance(cfg, exp, &inst, seed)),
    }));
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let outcome = match result {
        Ok(Ok(o)) => Ok(o),
        Ok(Err(e)) => Err(format!("{e:#}")),
        Err(payload) => Err(format!("panic: {}", panic_message(payload))),
    };
    let mut record = TrialRecord {
        trial: i,
        seed: seed.seed,
        stream_id: seed.stream_id,
        success: false,
        iterations: None,
        bound: None,
        measured: BTreeMap::new(),
        error: None,
        wall_ms,
    };
    match outcome {
        Ok(o) => {
            let bad: Vec<&String> = o.measured.iter().filter(|(_, v)| !v.is_finite()).map(|(k, _)| k).collect();
            record.success = o.success && bad.is_empty();
            if !bad.is_empty() {
                record.error = Some(format!("non-finite measurement: {}", bad.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")));
            }
            record.iterations = o.iterations;
            record.bound = o.bound.filter(|b| b.is_finite());
            record.measured = o.measured.into_iter().filter(|(_, v)| v.is_finite()).collect();
        }
        Err(msg) => record.error = Some(msg),
    }
    record
}

/// Trial-level parallelism: `RANDLA_THREADS` when set to a positive
/// integer, otherwise rayon's default.
pub fn thread_count() -> Option<usize> {
    std::env::var(THREADS_ENV).ok().and_then(|s| s.trim().parse::<usize>().ok()).filter(|&t| t > 0)
}

/// Validates the config, then runs every trial. A trial that errors or
/// panics is recorded as failed and the run continues.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let exp = config.experiment_kind()?;
    let shared = if config.fresh_instance || config.trials == 0 { None } else { Some(build_instance(config, exp, instance_seed(config))?) };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = thread_count() {
        builder = builder.num_threads(t);
    }
    let pool = builder.build()?;
    let trials: Vec<TrialRecord> = pool.install(|| (0..config.trials).into_par_iter().map(|i| run_trial(config, exp, shared.as_ref(), i)).collect());
    Ok(ExperimentReport::new(config.clone(), trials))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_tags_round_trip() {
        for &e in Experiment::ALL {
            assert_eq!(e.tag().parse::<Experiment>().unwrap(), e);
        }
        assert!("nope".parse::<Experiment>().is_err());
    }

    #[test]
    fn trial_seeds_are_distinct_streams() {
        let cfg = ExperimentConfig { seed: 9, ..Default::default() };
        assert_eq!(trial_seed(&cfg, 3), RngSeed::new(9, 3));
        assert_ne!(trial_seed(&cfg, 0), trial_seed(&cfg, 1));
    }
}
