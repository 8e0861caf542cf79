//! Moving partial sums, block schemes and window variances.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::model::{IndexRange, SequenceModel};
use crate::path::{PathSampler, SamplePath};
use crate::rng::replicate_rng;
use crate::scalar::Real;

/// Moving window: the sum runs over indices p+1..=p+n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub p: usize,
    pub n: usize,
}

impl Window {
    pub fn new(p: usize, n: usize) -> Self {
        Self { p, n }
    }

    pub fn range(&self) -> IndexRange {
        IndexRange::window(self.p, self.n)
    }
}

/// How the offset p(n) depends on n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OffsetRule {
    Fixed(usize),
    /// p(n) = floor(c n).
    Multiple(f64),
}

impl Default for OffsetRule {
    fn default() -> Self {
        OffsetRule::Fixed(0)
    }
}

impl OffsetRule {
    pub fn offset(&self, n: usize) -> usize {
        match *self {
            OffsetRule::Fixed(p) => p,
            OffsetRule::Multiple(c) => ((n as f64) * c + 1e-9).floor() as usize,
        }
    }

    pub fn window(&self, n: usize) -> Window {
        Window::new(self.offset(n), n)
    }
}

impl FromStr for OffsetRule {
    type Err = Error;

    /// `"12"` is a fixed offset, `"n"`, `"2n"`, `"0.5n"` scale with n.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Precondition(format!("offset `{s}` is neither an integer nor of the form `<c>n`"));
        if let Some(c) = s.strip_suffix('n') {
            let c = if c.is_empty() { 1.0 } else { c.parse::<f64>().map_err(|_| bad())? };
            if !(c.is_finite() && c >= 0.0) {
                return Err(bad());
            }
            return Ok(OffsetRule::Multiple(c));
        }
        s.parse::<usize>().map(OffsetRule::Fixed).map_err(|_| bad())
    }
}

impl fmt::Display for OffsetRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OffsetRule::Fixed(p) => write!(f, "{p}"),
            OffsetRule::Multiple(c) if *c == 1.0 => write!(f, "n"),
            OffsetRule::Multiple(c) => write!(f, "{c}n"),
        }
    }
}

/// How the block length is chosen from the window length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlockRule {
    /// ell = floor(n^(1/3)).
    #[default]
    CubeRoot,
    Fixed(usize),
}

impl BlockRule {
    pub fn block_length(&self, n: usize) -> usize {
        match *self {
            BlockRule::CubeRoot => integer_cube_root(n),
            BlockRule::Fixed(ell) => ell,
        }
    }
}

impl FromStr for BlockRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cbrt" | "default" | "cube-root" => Ok(BlockRule::CubeRoot),
            other => other
                .parse::<usize>()
                .map(BlockRule::Fixed)
                .map_err(|_| Error::Precondition(format!("block rule `{other}` is neither `cbrt` nor an integer"))),
        }
    }
}

impl fmt::Display for BlockRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockRule::CubeRoot => write!(f, "cbrt"),
            BlockRule::Fixed(ell) => write!(f, "{ell}"),
        }
    }
}

fn integer_cube_root(n: usize) -> usize {
    let mut r = (n as f64).cbrt().round() as usize;
    while r > 0 && r * r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// n = m * ell + r with 0 <= r < ell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockScheme {
    pub ell: usize,
    pub m: usize,
    pub r: usize,
}

impl BlockScheme {
    pub fn n(&self) -> usize {
        self.m * self.ell + self.r
    }

    /// Indices of block j (1-based) inside `window`.
    pub fn block_range(&self, window: Window, j: usize) -> IndexRange {
        IndexRange::new(window.p + (j - 1) * self.ell + 1, self.ell)
    }

    /// The trailing r indices not covered by a block.
    pub fn remainder_range(&self, window: Window) -> IndexRange {
        IndexRange::new(window.p + self.m * self.ell + 1, self.r)
    }

    fn check(&self, window: Window) -> Result<()> {
        if self.n() != window.n {
            return precondition(format!(
                "block scheme covers n = {} but the window has n = {}",
                self.n(),
                window.n
            ));
        }
        Ok(())
    }
}

pub fn make_block_scheme(n: usize, rule: BlockRule) -> Result<BlockScheme> {
    if n == 0 {
        return precondition("block schemes need n >= 1");
    }
    let ell = rule.block_length(n);
    if ell < 1 || ell > n {
        return precondition(format!("block length {ell} must lie in 1..={n}"));
    }
    Ok(BlockScheme {
        ell,
        m: n / ell,
        r: n % ell,
    })
}

/// S'_n over the window; zero for n = 0.
pub fn moving_sum<T: Real>(path: &SamplePath<T>, window: Window) -> Result<T> {
    let values = path.slice(window.range()).ok_or(Error::WindowOutOfPath {
        p: window.p,
        n: window.n,
        first: path.first,
        last: path.last(),
    })?;
    Ok(values.iter().copied().sum())
}

/// Normalized block sums Y_j and the leftover remainder sum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockIncrements<T> {
    pub values: Vec<T>,
    pub ell: usize,
    /// Sum of the last r values of the window.
    pub remainder: T,
}

impl<T: Real> BlockIncrements<T> {
    /// sqrt(ell) * sum_j Y_j + remainder, which equals S'_n.
    pub fn reconstruct(&self) -> T {
        T::of(self.ell as f64).sqrt() * self.values.iter().copied().sum::<T>() + self.remainder
    }
}

pub fn block_increments<T: Real>(path: &SamplePath<T>, window: Window, scheme: BlockScheme) -> Result<BlockIncrements<T>> {
    scheme.check(window)?;
    let values = path.slice(window.range()).ok_or(Error::WindowOutOfPath {
        p: window.p,
        n: window.n,
        first: path.first,
        last: path.last(),
    })?;
    let scale = T::of(scheme.ell as f64).sqrt();
    let blocks = values[..scheme.m * scheme.ell]
        .chunks(scheme.ell)
        .map(|c| c.iter().copied().sum::<T>() / scale)
        .collect();
    Ok(BlockIncrements {
        values: blocks,
        ell: scheme.ell,
        remainder: values[scheme.m * scheme.ell..].iter().copied().sum(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceMode {
    Exact,
    MonteCarlo { replicates: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceEstimate {
    pub value: f64,
    /// Zero in exact mode.
    pub std_err: f64,
}

/// s'_n^2 = Var(S'_n), exactly or by Monte Carlo.
pub fn window_variance(model: &SequenceModel, window: Window, mode: VarianceMode) -> Result<VarianceEstimate> {
    match mode {
        VarianceMode::Exact => Ok(VarianceEstimate {
            value: model.window_variance_exact(window.p, window.n)?,
            std_err: 0.0,
        }),
        VarianceMode::MonteCarlo { replicates, seed } => {
            if replicates < 2 {
                return precondition("monte-carlo variance needs at least 2 replicates");
            }
            let sampler = PathSampler::new(model, window.p, window.n)?;
            let sums: Vec<f64> = (0..replicates as u64)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = replicate_rng(seed, rep);
                    let mut buf = vec![0.0; window.n];
                    sampler.fill(&mut rng, &mut buf);
                    buf.iter().sum()
                })
                .collect();
            let r = replicates as f64;
            let mean = sums.iter().sum::<f64>() / r;
            let dev2: Vec<f64> = sums.iter().map(|s| (s - mean).powi(2)).collect();
            let var = dev2.iter().sum::<f64>() / (r - 1.0);
            // Standard error of the sample variance from the fourth central moment.
            let m4 = dev2.iter().map(|d| d * d).sum::<f64>() / r;
            let se = ((m4 - var * var * (r - 3.0) / (r - 1.0)) / r).max(0.0).sqrt();
            Ok(VarianceEstimate { value: var, std_err: se })
        }
    }
}
