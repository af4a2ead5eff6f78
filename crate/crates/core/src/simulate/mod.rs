//! Monte Carlo playout of stopping strategies, the saddle-point probe and a
//! brute-force discrete oracle for the envelope.
//!
//! Every path draws from its own ChaCha8 stream selected by `(seed, path
//! index)`, and per-path results are summed in index order, so estimates
//! are bit-identical for any number of worker threads.

mod engine;
mod oracle;
mod path;
mod probe;

use serde::Serialize;

pub use engine::{estimate_r, tol_disc};
pub use oracle::{chain_dynkin_oracle, ChainProblem, PinRule};
pub use path::{play_game, simulate_path, Path, PlayOutcome, Stopper};
pub use probe::{
    optimal_strategies, saddle_probe, submartingale_ladder, LadderStep, ProbeEntry, ProbeReport,
    ProbeSet,
};

use crate::error::{Error, Result};

/// First-entry stopping rules.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    /// `τ = ∞`; an unstopped game pays 0.
    Never,
    /// Stop at time 0.
    Immediate,
    /// First time the path lies in one of the closed intervals.
    FirstEntry { target: Vec<(f64, f64)> },
}

impl Strategy {
    pub fn first_entry(target: Vec<(f64, f64)>) -> Result<Self> {
        if target.is_empty() {
            return Err(Error::MonteCarlo(
                "first-entry needs a nonempty target".into(),
            ));
        }
        let mut t = target;
        t.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in t.windows(2) {
            if w[1].0 <= w[0].1 {
                return Err(Error::MonteCarlo(format!(
                    "target intervals overlap: {:?} and {:?}",
                    w[0], w[1]
                )));
            }
        }
        if let Some(iv) = t.iter().find(|iv| !(iv.0 <= iv.1)) {
            return Err(Error::MonteCarlo(format!("empty interval {iv:?}")));
        }
        Ok(Strategy::FirstEntry { target: t })
    }

    /// `[b, ∞)`
    pub fn above(b: f64) -> Self {
        Strategy::FirstEntry {
            target: vec![(b, f64::INFINITY)],
        }
    }

    /// `(0, b]`
    pub fn below(b: f64) -> Self {
        Strategy::FirstEntry {
            target: vec![(0.0, b)],
        }
    }

    #[inline]
    pub fn stops_at(&self, x: f64) -> bool {
        match self {
            Strategy::Never => false,
            Strategy::Immediate => true,
            Strategy::FirstEntry { target } => target.iter().any(|(a, b)| *a <= x && x <= *b),
        }
    }

    /// Whether a continuous path moving from `prev` to `x` within one step
    /// has entered the target: either `x` lies in it, or a bounded interval
    /// sits strictly between the two samples.
    #[inline]
    pub fn enters(&self, prev: f64, x: f64) -> bool {
        if self.stops_at(x) {
            return true;
        }
        let (lo, hi) = if prev <= x { (prev, x) } else { (x, prev) };
        match self {
            Strategy::FirstEntry { target } => target.iter().any(|(a, b)| lo < *a && *b < hi),
            _ => false,
        }
    }

    /// Finite, positive interval end points.
    pub fn levels(&self) -> Vec<f64> {
        match self {
            Strategy::FirstEntry { target } => target
                .iter()
                .flat_map(|(a, b)| [*a, *b])
                .filter(|v| v.is_finite() && *v > 0.0)
                .collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McParams {
    pub n_paths: usize,
    pub dt: f64,
    /// Defaults to `10/β`.
    pub horizon: Option<f64>,
    pub seed: u64,
}

impl Default for McParams {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            dt: 1e-3,
            horizon: None,
            seed: 1,
        }
    }
}

impl McParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 100 {
            return Err(Error::MonteCarlo(format!(
                "n_paths must be >= 100, got {}",
                self.n_paths
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::MonteCarlo(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if let Some(h) = self.horizon {
            if !(h >= self.dt && h.is_finite()) {
                return Err(Error::MonteCarlo(format!(
                    "horizon must be finite and >= dt, got {h}"
                )));
            }
        }
        Ok(())
    }

    pub fn horizon_for(&self, beta: f64) -> f64 {
        self.horizon.unwrap_or(10.0 / beta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameEstimate {
    /// Mean discounted payoff with unstopped paths paying 0.
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Paths that reached the horizon with neither player stopped.
    pub truncation_hits: usize,
    /// Means with unstopped paths paying `0` and `e^{-βT} g2(X_T)`.
    pub bracket: (f64, f64),
    /// Euler steps that needed the positivity guard's clamp.
    pub guard_flags: usize,
    pub workers: usize,
    pub engine: String,
}
