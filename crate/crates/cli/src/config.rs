//! Experiment configuration: loading and validation.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use crate::experiment::Experiment;
use crate::generate::{Profile, ProfileParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub matrix_profile: Profile,
    /// Rows, or unused for graph profiles.
    pub m: usize,
    /// Columns, or vertex count for graph profiles.
    pub n: usize,
    pub rank: usize,
    pub noise: f64,
    pub alpha: f64,
    pub graph_p: Option<f64>,
    pub k: Option<usize>,
    pub c: Option<usize>,
    pub r: Option<usize>,
    pub eps: Option<f64>,
    pub q: Option<usize>,
    pub p: Option<f64>,
    pub gamma: Option<f64>,
    pub t: Option<usize>,
    pub scheme: Option<String>,
    pub trials: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Draw a new instance per trial instead of one shared instance.
    pub fresh_instance: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let pp = ProfileParams::default();
        Self {
            experiment: String::new(),
            matrix_profile: Profile::Gaussian,
            m: 200,
            n: 10,
            rank: pp.rank,
            noise: pp.noise,
            alpha: pp.alpha,
            graph_p: pp.graph_p,
            k: None,
            c: None,
            r: None,
            eps: None,
            q: None,
            p: None,
            gamma: None,
            t: None,
            scheme: None,
            trials: 100,
            seed: 0,
            output: None,
            fresh_instance: false,
        }
    }
}

impl ExperimentConfig {
    pub fn for_experiment(name: &str) -> Self {
        Self { experiment: name.to_string(), ..Default::default() }
    }

    /// Reads TOML or JSON, chosen by file extension (TOML when unknown).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let cfg = if is_json {
            serde_json::from_str(&text).with_context(|| format!("parsing JSON config {}", path.display()))?
        } else {
            toml::from_str(&text).with_context(|| format!("parsing TOML config {}", path.display()))?
        };
        Ok(cfg)
    }

    pub fn profile_params(&self) -> ProfileParams {
        ProfileParams { rank: self.rank, noise: self.noise, alpha: self.alpha, graph_p: self.graph_p }
    }

    pub fn experiment_kind(&self) -> Result<Experiment> {
        self.experiment.parse()
    }

    pub fn k_or(&self, default: usize) -> usize {
        self.k.unwrap_or(default)
    }

    pub fn eps_or(&self, default: f64) -> f64 {
        self.eps.unwrap_or(default)
    }

    pub fn scheme_or<'a>(&'a self, default: &'a str) -> &'a str {
        self.scheme.as_deref().unwrap_or(default)
    }

    /// Checks every precondition of the target operation. Run before any
    /// trial starts.
    pub fn validate(&self) -> Result<()> {
        let exp = self.experiment_kind()?;
        let (m, n) = (self.m, self.n);
        ensure!(n > 0, "n must be positive");
        if exp.needs_graph() {
            ensure!(self.matrix_profile.is_graph(), "{exp} needs a graph profile, got {}", self.matrix_profile);
            ensure!(n >= 2, "a graph needs at least 2 vertices, got {n}");
            if let Some(p) = self.graph_p {
                ensure!(p > 0.0 && p <= 1.0, "graph_p must lie in (0, 1], got {p}");
            }
        } else {
            ensure!(!self.matrix_profile.is_graph(), "{exp} needs a matrix profile, got {}", self.matrix_profile);
            ensure!(m > 0, "m must be positive");
            if matches!(self.matrix_profile, Profile::CoherentSpike | Profile::LowRankPlusNoise) {
                ensure!(self.rank >= 1 && self.rank <= m.min(n), "rank {} outside [1, {}]", self.rank, m.min(n));
            }
            ensure!(self.noise >= 0.0 && self.noise.is_finite(), "noise must be finite and nonnegative");
            ensure!(self.alpha >= 0.0 && self.alpha.is_finite(), "alpha must be finite and nonnegative");
        }
        if let Some(eps) = self.eps {
            ensure!(eps > 0.0 && eps.is_finite(), "eps must be positive, got {eps}");
        }
        let mn = m.min(n);
        let k = self.k_or(exp.default_k(mn));
        let eps = self.eps_or(exp.default_eps());
        use Experiment as E;
        match exp {
            E::MatmulFrobenius | E::MatmulSpectral => {
                ensure!(self.c.unwrap_or(1) >= 1, "c must be at least 1");
                self.scheme_or("optimal").parse::<crate::experiment::ProbScheme>()?;
                if exp == E::MatmulSpectral {
                    ensure!(eps < 1.0 || self.c.is_some(), "eps must be below 1 when c is derived from it");
                }
            }
            E::SketchEmbedding => {
                self.scheme_or("srht").parse::<randla::SketchKind>()?;
                ensure!(m >= n, "embedding needs a tall matrix, got {m}x{n}");
                ensure!(self.r.unwrap_or(n) >= n, "sketch size r must be at least n = {n}");
            }
            E::LsSketched => {
                ensure!(m > n, "least squares needs m > n, got {m}x{n}");
                match self.scheme_or("leverage").parse::<randla::LsMethod>()? {
                    randla::LsMethod::Sketched(_) => {}
                    other => bail!("scheme '{other}' is not a sketching strategy"),
                }
                ensure!(self.r.unwrap_or(n) >= n, "sketch size r must be at least n = {n}");
            }
            E::LsPrecond => {
                ensure!(m >= 4 * n, "preconditioned solver needs m >= 4n, got {m}x{n}");
                ensure!(self.gamma.unwrap_or(4.0) >= 1.5, "gamma must be at least 1.5");
            }
            E::LeverageFast => {
                ensure!(m >= n, "fast leverage needs a tall matrix, got {m}x{n}");
                ensure!(eps < 1.0, "eps must lie in (0, 1), got {eps}");
            }
            E::ColumnSvd | E::Cx | E::Cur | E::Cssp => {
                ensure!(k >= 1 && k <= mn, "k = {k} outside [1, {mn}]");
                ensure!(self.c.unwrap_or(k) >= k, "c must be at least k = {k}");
                if exp == E::ColumnSvd {
                    ensure!(self.c.unwrap_or(k) <= n, "c must not exceed n = {n}");
                }
                if matches!(exp, E::Cx | E::Cur) {
                    ensure!(eps <= 1.0, "eps must lie in (0, 1], got {eps}");
                }
                if exp == E::Cur {
                    match self.scheme_or("strong") {
                        "weak" | "strong" => {}
                        s => bail!("CUR scheme must be weak or strong, got '{s}'"),
                    }
                }
            }
            E::Multipass => {
                ensure!(self.c.unwrap_or(1) >= 1, "c must be at least 1");
                ensure!(self.t.unwrap_or(1) >= 1, "t must be at least 1");
                ensure!(k <= mn, "k = {k} exceeds min(m, n) = {mn}");
            }
            E::RangeFinder | E::Posterior => {
                let p = self.p.unwrap_or(5.0);
                ensure!(p >= 0.0 && p.fract() == 0.0, "oversampling p must be a nonnegative integer, got {p}");
                ensure!(k >= 1 && k + p as usize <= mn, "need 1 <= k and k + p <= {mn}, got k = {k}, p = {p}");
                if exp == E::Posterior {
                    ensure!(self.r.unwrap_or(10) >= 1, "posterior probe count r must be at least 1");
                }
            }
            E::AdaptiveRange => {
                ensure!(self.r.unwrap_or(10) >= 1, "probe count r must be at least 1");
            }
            E::Jl => {
                ensure!(m >= 2, "JL needs at least two points");
                ensure!(eps < 1.0, "eps must lie in (0, 1), got {eps}");
                ensure!(self.r.unwrap_or(1) >= 1, "target dimension must be positive");
            }
            E::Sparsify => {
                let scheme = self.scheme_or("magnitude");
                ensure!(matches!(scheme, "uniform" | "magnitude" | "quantize"), "sparsify scheme must be uniform, magnitude or quantize, got '{scheme}'");
                let p = self.p.unwrap_or(0.5);
                ensure!(p > 0.0 && p <= 1.0, "keep probability p must lie in (0, 1], got {p}");
            }
            E::Stream => {
                let s = self.p.unwrap_or((m * n) as f64 / 4.0);
                ensure!(s > 0.0 && s.is_finite(), "expected sample count p must be positive, got {s}");
            }
            E::LaplacianSolve => {
                self.scheme_or("direct").parse::<randla::LaplacianMethod>()?;
                ensure!(eps < 1.0, "eps must lie in (0, 1), got {eps}");
            }
            E::LaplacianSparsify => {
                ensure!(eps < 1.0 || self.r.is_some(), "eps must lie in (0, 1) when r is derived from it");
                ensure!(self.r.unwrap_or(n) >= n, "sparsifier size r must be at least n = {n}");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig { k: Some(3), scheme: Some("uniform".into()), ..ExperimentConfig::for_experiment("cx") };
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("experiment = \"jl\"\nbogus = 1\n").is_err());
    }
}
