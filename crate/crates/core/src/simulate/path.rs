use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::Strategy;
use crate::diffusion::DiffusionModel;
use crate::transform::PayoffPair;

/// A path sampled every `dt` from time 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Path {
    pub dt: f64,
    pub x: Vec<f64>,
    pub guard_flags: usize,
}

pub(crate) fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One Euler–Maruyama step; an increment that would leave `(0, ∞)` is redrawn
/// up to 100 times, then the state is clamped to a small positive value.
#[inline]
pub(crate) fn euler_step<R: Rng>(
    model: &DiffusionModel,
    x: f64,
    dt: f64,
    rng: &mut R,
    flags: &mut usize,
) -> f64 {
    let (m, s) = (model.drift(x) * dt, model.vol(x) * dt.sqrt());
    for _ in 0..100 {
        let z: f64 = rng.sample(StandardNormal);
        let next = x + m + s * z;
        if next > 0.0 {
            return next;
        }
    }
    *flags += 1;
    x * 1e-3
}

/// Samples `X` at `0, dt, 2dt, …` up to `horizon`: exact log-normal steps for
/// geometric Brownian motion, Euler–Maruyama otherwise.
pub fn simulate_path(model: &DiffusionModel, x0: f64, dt: f64, horizon: f64, seed: u64) -> Path {
    simulate_path_indexed(model, x0, dt, horizon, seed, 0)
}

pub(crate) fn simulate_path_indexed(
    model: &DiffusionModel,
    x0: f64,
    dt: f64,
    horizon: f64,
    seed: u64,
    index: u64,
) -> Path {
    let n = (horizon / dt).round().max(1.0) as usize;
    let mut rng = path_rng(seed, index);
    let mut x = Vec::with_capacity(n + 1);
    x.push(x0);
    let mut flags = 0;
    match model.gbm_params() {
        Some(g) => {
            let m = (g.drift_rate - 0.5 * g.sigma * g.sigma) * dt;
            let s = g.sigma * dt.sqrt();
            let mut l = x0.ln();
            for _ in 0..n {
                let z: f64 = rng.sample(StandardNormal);
                l += m + s * z;
                x.push(l.exp());
            }
        }
        None => {
            let mut cur = x0;
            for _ in 0..n {
                cur = euler_step(model, cur, dt, &mut rng, &mut flags);
                x.push(cur);
            }
        }
    }
    Path {
        dt,
        x,
        guard_flags: flags,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stopper {
    Buyer,
    Seller,
    /// Both at the same step; pays `g1`.
    Tie,
    Nobody,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlayOutcome {
    /// Discounted payoff; 0 when nobody stopped.
    pub payoff: f64,
    /// Upper bracket: unstopped paths pay `e^{-βT} g2(X_T)`.
    pub high: f64,
    pub stopper: Stopper,
    pub step: Option<usize>,
}

pub(crate) fn settle(
    payoffs: &PayoffPair,
    beta: f64,
    buyer: bool,
    seller: bool,
    t: f64,
    x: f64,
    step: usize,
) -> Option<PlayOutcome> {
    let disc = (-beta * t).exp();
    let (stopper, v) = match (buyer, seller) {
        (true, true) => (Stopper::Tie, payoffs.g1().eval(x)),
        (true, false) => (Stopper::Buyer, payoffs.g1().eval(x)),
        (false, true) => (Stopper::Seller, payoffs.g2().eval(x)),
        (false, false) => return None,
    };
    let p = disc * v;
    Some(PlayOutcome {
        payoff: p,
        high: p,
        stopper,
        step: Some(step),
    })
}

pub(crate) fn unresolved(payoffs: &PayoffPair, beta: f64, t: f64, x: f64) -> PlayOutcome {
    PlayOutcome {
        payoff: 0.0,
        high: (-beta * t).exp() * payoffs.g2().eval(x),
        stopper: Stopper::Nobody,
        step: None,
    }
}

/// Discounted payoff of `(buyer, seller)` along `path`; ties pay `g1`.
pub fn play_game(
    path: &Path,
    buyer: &Strategy,
    seller: &Strategy,
    payoffs: &PayoffPair,
    beta: f64,
) -> PlayOutcome {
    for (k, &x) in path.x.iter().enumerate() {
        let t = k as f64 * path.dt;
        let prev = path.x[k.saturating_sub(1)];
        if let Some(o) = settle(
            payoffs,
            beta,
            buyer.enters(prev, x),
            seller.enters(prev, x),
            t,
            x,
            k,
        ) {
            return o;
        }
    }
    let k = path.x.len() - 1;
    unresolved(payoffs, beta, k as f64 * path.dt, path.x[k])
}
