//! Synthetic test matrices and graphs.

use std::fmt;
use std::str::FromStr;

use anyhow::{bail, Result};
use randla::{DenseMatrix, Graph, Matrix, RngSeed};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    #[default]
    Gaussian,
    /// `[I_k 0; 0 G]`: the first `k` rows carry all of the leverage of the
    /// first `k` columns, so the coherence is 1.
    CoherentSpike,
    /// `LR/√k + η G` with Gaussian `L` (`m × k`) and `R` (`k × n`).
    LowRankPlusNoise,
    /// `diag((i+1)^{−α}) G`; leverage decays with the row index.
    PowerLawLeverage,
    /// Connected Erdős–Rényi graph, weights uniform on `[0.5, 1.5)`.
    GraphRandom,
    /// Unit-weight path.
    GraphPath,
}

impl Profile {
    pub const ALL: [Profile; 6] = [
        Profile::Gaussian,
        Profile::CoherentSpike,
        Profile::LowRankPlusNoise,
        Profile::PowerLawLeverage,
        Profile::GraphRandom,
        Profile::GraphPath,
    ];

    pub fn is_graph(self) -> bool {
        matches!(self, Profile::GraphRandom | Profile::GraphPath)
    }

    pub fn tag(self) -> &'static str {
        match self {
            Profile::Gaussian => "gaussian",
            Profile::CoherentSpike => "coherent_spike",
            Profile::LowRankPlusNoise => "low_rank_plus_noise",
            Profile::PowerLawLeverage => "power_law_leverage",
            Profile::GraphRandom => "graph_random",
            Profile::GraphPath => "graph_path",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Profile {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        match Profile::ALL.iter().find(|p| p.tag() == key) {
            Some(&p) => Ok(p),
            None => bail!("unknown profile '{s}' (expected one of: {})", Profile::ALL.map(Profile::tag).join(", ")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    /// `k` for `coherent_spike` and `low_rank_plus_noise`.
    pub rank: usize,
    /// `η` for `low_rank_plus_noise`.
    pub noise: f64,
    /// Decay exponent for `power_law_leverage`.
    pub alpha: f64,
    /// Edge probability for `graph_random`; `None` means `min(1, 4 ln n / n)`.
    pub graph_p: Option<f64>,
}

impl Default for ProfileParams {
    fn default() -> Self {
        Self { rank: 5, noise: 0.0, alpha: 1.0, graph_p: None }
    }
}

pub fn gaussian(m: usize, n: usize, seed: RngSeed) -> Matrix {
    let mut rng = seed.rng();
    DenseMatrix::from_fn(m, n, |_, _| rng.normal())
}

fn check_params(profile: Profile, m: usize, n: usize, params: &ProfileParams) -> Result<()> {
    if m == 0 || n == 0 {
        bail!("dimensions must be positive, got {m}x{n}");
    }
    match profile {
        Profile::CoherentSpike | Profile::LowRankPlusNoise if params.rank == 0 || params.rank > m.min(n) => {
            bail!("rank {} outside [1, {}] for a {m}x{n} {profile} matrix", params.rank, m.min(n))
        }
        Profile::LowRankPlusNoise if !(params.noise >= 0.0 && params.noise.is_finite()) => {
            bail!("noise must be a finite nonnegative number, got {}", params.noise)
        }
        Profile::PowerLawLeverage if !(params.alpha >= 0.0 && params.alpha.is_finite()) => {
            bail!("alpha must be a finite nonnegative number, got {}", params.alpha)
        }
        _ => Ok(()),
    }
}

/// `m × n` matrix for matrix profiles; for graph profiles, the Laplacian of
/// the `n`-vertex graph.
pub fn generate_matrix(profile: Profile, m: usize, n: usize, params: &ProfileParams, seed: RngSeed) -> Result<Matrix> {
    if profile.is_graph() {
        return Ok(generate_graph(profile, n, params, seed)?.laplacian());
    }
    check_params(profile, m, n, params)?;
    Ok(match profile {
        Profile::Gaussian => gaussian(m, n, seed),
        Profile::CoherentSpike => {
            let k = params.rank;
            let g = gaussian(m - k, n - k, seed);
            DenseMatrix::from_fn(m, n, |i, j| match (i < k, j < k) {
                (true, true) => f64::from(u8::from(i == j)),
                (false, false) => g.get(i - k, j - k),
                _ => 0.0,
            })
        }
        Profile::LowRankPlusNoise => {
            let k = params.rank;
            let l = gaussian(m, k, seed.child(0));
            let r = gaussian(k, n, seed.child(1));
            let mut a = l.matmul(&r).scale(1.0 / (k as f64).sqrt());
            if params.noise > 0.0 {
                let g = gaussian(m, n, seed.child(2));
                a = DenseMatrix::from_fn(m, n, |i, j| a.get(i, j) + params.noise * g.get(i, j));
            }
            a
        }
        Profile::PowerLawLeverage => {
            let scales: Vec<f64> = (0..m).map(|i| ((i + 1) as f64).powf(-params.alpha)).collect();
            gaussian(m, n, seed).scale_rows(&scales)
        }
        Profile::GraphRandom | Profile::GraphPath => unreachable!(),
    })
}

const GRAPH_RETRIES: u64 = 100;

pub fn generate_graph(profile: Profile, n: usize, params: &ProfileParams, seed: RngSeed) -> Result<Graph> {
    if n < 2 {
        bail!("a graph needs at least 2 vertices, got {n}");
    }
    match profile {
        Profile::GraphPath => Ok(Graph::new(n, (1..n).map(|v| (v - 1, v, 1.0)).collect())?),
        Profile::GraphRandom => {
            let p = params.graph_p.unwrap_or_else(|| (4.0 * (n as f64).ln() / n as f64).min(1.0));
            if !(p > 0.0 && p <= 1.0) {
                bail!("edge probability must lie in (0, 1], got {p}");
            }
            for attempt in 0..GRAPH_RETRIES {
                let mut rng = seed.child(attempt).rng();
                let mut edges = Vec::new();
                for u in 0..n {
                    for v in u + 1..n {
                        if rng.bernoulli(p) {
                            edges.push((u, v, 0.5 + rng.uniform()));
                        }
                    }
                }
                let g = Graph::new(n, edges)?;
                if g.is_connected() {
                    return Ok(g);
                }
            }
            bail!("no connected graph with n = {n}, p = {p} after {GRAPH_RETRIES} draws")
        }
        other => bail!("profile {other} does not describe a graph"),
    }
}
