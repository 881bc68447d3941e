//! Index sampling primitives: single-pass weighted selection and i.i.d. /
//! Bernoulli index sampling with the rescaling factors used by every
//! sampling-based sketch.

use crate::error::{Error, Result};
use crate::rng::RngSeed;
use crate::scalar::Real;

/// Validated probability vector (nonnegative, sums to one).
#[derive(Debug, Clone, PartialEq)]
pub struct Probabilities<T> {
    p: Vec<T>,
}

impl<T: Real> Probabilities<T> {
    /// Accepts `p` if every entry is finite and nonnegative and the sum is 1
    /// within `max(1e-12, 8·n·ε)`, then renormalizes exactly.
    pub fn new(p: Vec<T>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidProbabilities("empty".into()));
        }
        if let Some(i) = p.iter().position(|&x| !x.finite() || x < T::zero()) {
            return Err(Error::InvalidProbabilities(format!("entry {i} is {}", p[i])));
        }
        let total = p.iter().fold(T::zero(), |a, &b| a + b);
        let tol = T::lit(1e-12).max(T::lit(8.0) * T::of_count(p.len()) * T::machine_eps());
        if (total - T::one()).abs() > tol {
            return Err(Error::InvalidProbabilities(format!("sum is {total}")));
        }
        Ok(Self { p: p.into_iter().map(|x| x / total).collect() })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(w: &[T]) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::DegenerateProbabilities);
        }
        if let Some(i) = w.iter().position(|&x| !x.finite() || x < T::zero()) {
            return Err(Error::InvalidWeight { index: i, value: w[i].as_f64() });
        }
        let total = w.iter().fold(T::zero(), |a, &b| a + b);
        if total <= T::zero() {
            return Err(Error::DegenerateProbabilities);
        }
        Ok(Self { p: w.iter().map(|&x| x / total).collect() })
    }

    pub fn uniform(n: usize) -> Self {
        Self { p: vec![T::one() / T::of_count(n); n] }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn get(&self, i: usize) -> T {
        self.p[i]
    }

    /// Mixture `λ·self + (1−λ)·other`.
    pub fn mix(&self, other: &Self, lambda: T) -> Self {
        assert_eq!(self.len(), other.len());
        let q = self.p.iter().zip(&other.p).map(|(&a, &b)| lambda * a + (T::one() - lambda) * b).collect();
        Self { p: q }
    }

    /// Quality factor `β = min_i p_i / q_i` against a reference distribution
    /// `q` (taken over the support of `q`).
    pub fn beta_against(&self, reference: &Self) -> T {
        let mut beta: Option<T> = None;
        for (&p, &q) in self.p.iter().zip(&reference.p) {
            if q > T::zero() {
                let r = p / q;
                beta = Some(beta.map_or(r, |b: T| b.min(r)));
            }
        }
        beta.unwrap_or_else(T::one).min(T::one())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SampleMode {
    /// Exactly `c` i.i.d. draws with replacement; scale `1/√(c·p_i)`.
    ExactC,
    /// Index `i` kept independently with probability `min(1, c·p_i)`;
    /// scale `1/√min(1, c·p_i)`.
    ExpectedC,
}

/// Sampled indices with their rescaling factors (the `S` and `D` of a
/// sampling sketch). Duplicates are kept in [`SampleMode::ExactC`].
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSample<T> {
    pub indices: Vec<usize>,
    pub scales: Vec<T>,
    pub mode: SampleMode,
    /// Number of candidate indices the sample was drawn from.
    pub population: usize,
}

impl<T: Real> IndexSample<T> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Sample that keeps every index once with unit scale.
    pub fn identity(n: usize) -> Self {
        Self { indices: (0..n).collect(), scales: vec![T::one(); n], mode: SampleMode::ExpectedC, population: n }
    }

    /// Explicit index set with unit scales.
    pub fn unscaled(indices: Vec<usize>, population: usize) -> Self {
        let scales = vec![T::one(); indices.len()];
        Self { indices, scales, mode: SampleMode::ExactC, population }
    }
}

/// Draws a single index with probability proportional to its weight in one
/// sequential pass, keeping O(1) state: the running total and the current
/// candidate (which is replaced by item `i` with probability `w_i / W_i`).
pub fn select_stream<T: Real, I>(weights: I, seed: RngSeed) -> Result<(usize, T)>
where
    I: IntoIterator<Item = T>,
{
    let mut rng = seed.rng();
    let mut total = T::zero();
    let mut chosen: Option<(usize, T)> = None;
    let mut seen = 0usize;
    for (i, w) in weights.into_iter().enumerate() {
        seen += 1;
        if !w.finite() || w < T::zero() {
            return Err(Error::InvalidWeight { index: i, value: w.as_f64() });
        }
        // one uniform per item keeps the draw sequence independent of the data
        let u = rng.uniform();
        if w == T::zero() {
            continue;
        }
        total += w;
        if u < (w / total).as_f64() {
            chosen = Some((i, w));
        }
    }
    if seen == 0 {
        return Err(Error::EmptyInput("weight stream"));
    }
    chosen.ok_or(Error::DegenerateWeightStream)
}

/// Samples indices according to `probs` (see [`SampleMode`]).
pub fn sample_indices<T: Real>(probs: &Probabilities<T>, c: usize, mode: SampleMode, seed: RngSeed) -> Result<IndexSample<T>> {
    if c == 0 {
        return Err(Error::InvalidParameter("sample size c must be at least 1".into()));
    }
    let n = probs.len();
    let mut rng = seed.rng();
    let cf = T::of_count(c);
    match mode {
        SampleMode::ExactC => {
            let cdf = cumulative(probs.as_slice());
            let mut indices = Vec::with_capacity(c);
            let mut scales = Vec::with_capacity(c);
            for _ in 0..c {
                let i = draw_from_cdf(&cdf, rng.uniform());
                indices.push(i);
                scales.push(T::one() / (cf * probs.get(i)).sqrt());
            }
            Ok(IndexSample { indices, scales, mode, population: n })
        }
        SampleMode::ExpectedC => {
            let mut indices = Vec::new();
            let mut scales = Vec::new();
            for (i, &p) in probs.as_slice().iter().enumerate() {
                let keep = (cf * p).min(T::one());
                let u = rng.uniform();
                if p > T::zero() && u < keep.as_f64() {
                    indices.push(i);
                    scales.push(T::one() / keep.sqrt());
                }
            }
            Ok(IndexSample { indices, scales, mode, population: n })
        }
    }
}

pub(crate) fn cumulative<T: Real>(p: &[T]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = p
        .iter()
        .map(|&x| {
            acc += x.as_f64();
            acc
        })
        .collect();
    // guard the top against rounding so u < 1 always lands on the last positive mass
    if let Some(last_pos) = p.iter().rposition(|&x| x > T::zero()) {
        for v in &mut cdf[last_pos..] {
            *v = f64::INFINITY;
        }
    }
    cdf
}

/// First index with `cdf[i] > u`; zero-mass indices are never returned.
pub(crate) fn draw_from_cdf(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_single_and_zero_weight() {
        for s in 0..50 {
            assert_eq!(select_stream(vec![5.0], RngSeed::from_seed(s)).unwrap(), (0, 5.0));
            assert_eq!(select_stream(vec![2.0, 0.0], RngSeed::from_seed(s)).unwrap().0, 0);
            assert_eq!(select_stream(vec![0.0, 0.0, 3.0], RngSeed::from_seed(s)).unwrap().0, 2);
        }
    }

    #[test]
    fn stream_errors() {
        assert_eq!(select_stream(vec![0.0f64, 0.0], RngSeed::default()), Err(Error::DegenerateWeightStream));
        assert!(matches!(select_stream(vec![1.0f64, -1.0], RngSeed::default()), Err(Error::InvalidWeight { index: 1, .. })));
        assert!(select_stream(Vec::<f64>::new(), RngSeed::default()).is_err());
    }

    #[test]
    fn exact_mode_examples() {
        let s = sample_indices(&Probabilities::<f64>::uniform(4), 4, SampleMode::ExactC, RngSeed::from_seed(1)).unwrap();
        assert_eq!(s.len(), 4);
        assert!(s.indices.iter().all(|&i| i < 4));
        assert!(s.scales.iter().all(|&x| (x - 1.0).abs() < 1e-15));

        let p = Probabilities::new(vec![1.0, 0.0, 0.0]).unwrap();
        let s = sample_indices(&p, 3, SampleMode::ExactC, RngSeed::from_seed(2)).unwrap();
        assert_eq!(s.indices, vec![0, 0, 0]);
        assert!(s.scales.iter().all(|&x| (x - 1.0 / 3f64.sqrt()).abs() < 1e-15));
    }

    #[test]
    fn expected_mode_caps_inclusion() {
        let s = sample_indices(&Probabilities::<f64>::uniform(10), 20, SampleMode::ExpectedC, RngSeed::from_seed(3)).unwrap();
        assert_eq!(s.indices, (0..10).collect::<Vec<_>>());
        assert!(s.scales.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn zero_c_rejected_and_bad_probs() {
        assert!(sample_indices(&Probabilities::<f64>::uniform(3), 0, SampleMode::ExactC, RngSeed::default()).is_err());
        assert!(Probabilities::new(vec![0.5, 0.4]).is_err());
        assert!(Probabilities::new(vec![1.5, -0.5]).is_err());
        assert_eq!(Probabilities::<f64>::from_weights(&[0.0, 0.0]), Err(Error::DegenerateProbabilities));
    }

    #[test]
    fn zero_probability_never_drawn() {
        let p = Probabilities::new(vec![0.0, 0.5, 0.0, 0.5, 0.0]).unwrap();
        for seed in 0..20 {
            let s = sample_indices(&p, 50, SampleMode::ExactC, RngSeed::from_seed(seed)).unwrap();
            assert!(s.indices.iter().all(|&i| i == 1 || i == 3));
            let e = sample_indices(&p, 1, SampleMode::ExpectedC, RngSeed::from_seed(seed)).unwrap();
            assert!(e.indices.iter().all(|&i| i == 1 || i == 3));
        }
    }

    #[test]
    fn beta_of_exact_distribution_is_one() {
        let p = Probabilities::from_weights(&[1.0f64, 3.0]).unwrap();
        assert!((p.beta_against(&p) - 1.0).abs() < 1e-15);
        let u = Probabilities::uniform(2);
        assert!((u.beta_against(&p) - (0.5 / 0.75)).abs() < 1e-15);
    }
}
