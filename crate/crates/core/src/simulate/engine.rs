use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::path::{euler_step, path_rng, settle, unresolved};
use super::{GameEstimate, McParams, PlayOutcome, Strategy};
use crate::diffusion::{DiffusionModel, FundamentalPair, GbmParams};
use crate::error::{Error, Result};
use crate::transform::PayoffPair;

/// Steps per exactly sampled block of the bridge engine.
const BLOCK: usize = 1024;
/// A block is skipped when its bridge may enter a target with at most this probability.
const PRUNE: f64 = 1e-12;

/// Everything needed to play one game on one path.
#[derive(Clone, Copy)]
pub(crate) struct Game<'a> {
    pub model: &'a DiffusionModel,
    pub payoffs: &'a PayoffPair,
    pub buyer: &'a Strategy,
    pub seller: &'a Strategy,
    pub x0: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub(crate) struct PathRun {
    pub outcome: PlayOutcome,
    pub flags: usize,
    /// `(t ∧ τ, X(t ∧ τ))` at each requested ladder step, as `(step, x)`.
    pub ladder: Vec<(usize, f64)>,
}

impl Game<'_> {
    fn beta(&self) -> f64 {
        self.model.beta()
    }

    /// Settles step `k`, reached from `prev`.
    fn stop(&self, k: usize, prev: f64, x: f64) -> Option<PlayOutcome> {
        settle(
            self.payoffs,
            self.beta(),
            self.buyer.enters(prev, x),
            self.seller.enters(prev, x),
            k as f64 * self.dt,
            x,
            k,
        )
    }

    fn finish(&self, x: f64) -> PlayOutcome {
        unresolved(self.payoffs, self.beta(), self.n_steps as f64 * self.dt, x)
    }

    pub fn engine_name(&self) -> &'static str {
        if self.model.gbm_params().is_some() {
            "gbm-bridge"
        } else {
            "euler"
        }
    }

    /// Plays path `index`; `ladder` must be sorted.
    pub fn run(&self, index: u64, ladder: &[usize]) -> PathRun {
        match self.model.gbm_params() {
            Some(g) => self.run_bridge(g, index, ladder),
            None => self.run_euler(index, ladder),
        }
    }

    fn run_euler(&self, index: u64, ladder: &[usize]) -> PathRun {
        let mut rng = path_rng(self.seed, index);
        let mut rec = Ladder::new(ladder);
        let mut flags = 0;
        let mut x = self.x0;
        for k in 0..=self.n_steps {
            let prev = x;
            if k > 0 {
                x = euler_step(self.model, x, self.dt, &mut rng, &mut flags);
            }
            rec.pass(k, x);
            if let Some(outcome) = self.stop(k, prev, x) {
                return PathRun {
                    outcome,
                    flags,
                    ladder: rec.stopped(k, x),
                };
            }
        }
        PathRun {
            outcome: self.finish(x),
            flags,
            ladder: rec.stopped(self.n_steps, x),
        }
    }

    fn run_bridge(&self, g: GbmParams, index: u64, ladder: &[usize]) -> PathRun {
        let mut rng = path_rng(self.seed, index);
        let mut rec = Ladder::new(ladder);
        let bridge = Bridge::new(self, g);
        let mut l = self.x0.ln();
        rec.pass(0, self.x0);
        if let Some(outcome) = self.stop(0, self.x0, self.x0) {
            return PathRun {
                outcome,
                flags: 0,
                ladder: rec.stopped(0, self.x0),
            };
        }
        let mut k = 0;
        while k < self.n_steps {
            let mut next = (k + BLOCK).min(self.n_steps);
            if let Some(&t) = ladder.iter().find(|&&t| t > k) {
                next = next.min(t);
            }
            let n = (next - k) as f64;
            let z: f64 = rng.sample(StandardNormal);
            let lb = l + n * bridge.m + (n * bridge.s2).sqrt() * z;
            if let Some((ks, lp, ls)) = bridge.first_entry(k, l, next, lb, &mut rng) {
                let x = ls.exp();
                let outcome = self
                    .stop(ks, lp.exp(), x)
                    .expect("entry step stops the game");
                return PathRun {
                    outcome,
                    flags: 0,
                    ladder: rec.stopped(ks, x),
                };
            }
            k = next;
            l = lb;
            rec.pass(k, l.exp());
        }
        let x = l.exp();
        PathRun {
            outcome: self.finish(x),
            flags: 0,
            ladder: rec.stopped(self.n_steps, x),
        }
    }
}

struct Ladder<'a> {
    steps: &'a [usize],
    out: Vec<(usize, f64)>,
}

impl<'a> Ladder<'a> {
    fn new(steps: &'a [usize]) -> Self {
        Self {
            steps,
            out: Vec::with_capacity(steps.len()),
        }
    }

    fn pass(&mut self, k: usize, x: f64) {
        while self.out.len() < self.steps.len() && self.steps[self.out.len()] == k {
            self.out.push((k, x));
        }
    }

    /// Freezes the remaining rungs at the stopping state.
    fn stopped(mut self, k: usize, x: f64) -> Vec<(usize, f64)> {
        while self.out.len() < self.steps.len() {
            let t = self.steps[self.out.len()];
            self.out.push(if t < k { (t, f64::NAN) } else { (k, x) });
        }
        self.out
    }
}

/// Exact sampling of the discretely monitored log-price, refined by Brownian
/// bridge bisection only where a target can be entered.
struct Bridge<'a> {
    game: &'a Game<'a>,
    /// Finite target end points in log space.
    levels: Vec<f64>,
    m: f64,
    s2: f64,
}

impl<'a> Bridge<'a> {
    fn new(game: &'a Game<'a>, g: GbmParams) -> Self {
        let mut levels: Vec<f64> = game
            .buyer
            .levels()
            .into_iter()
            .chain(game.seller.levels())
            .map(f64::ln)
            .collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        Self {
            game,
            levels,
            m: (g.drift_rate - 0.5 * g.sigma * g.sigma) * game.dt,
            s2: g.sigma * g.sigma * game.dt,
        }
    }

    fn inside(&self, l: f64) -> bool {
        let x = l.exp();
        self.game.buyer.stops_at(x) || self.game.seller.stops_at(x)
    }

    fn enters(&self, la: f64, lb: f64) -> bool {
        let (a, b) = (la.exp(), lb.exp());
        self.game.buyer.enters(a, b) || self.game.seller.enters(a, b)
    }

    fn may_enter(&self, la: f64, lb: f64, n: usize) -> bool {
        if self.inside(lb) {
            return true;
        }
        let v = n as f64 * self.s2;
        let mut p = 0.0;
        for &lv in &self.levels {
            let d = (lv - la) * (lv - lb);
            if d <= 0.0 {
                return true;
            }
            p += (-2.0 * d / v).exp();
        }
        p >= PRUNE
    }

    /// First step in `(ka, kb]` entering a target, given the log-price at both
    /// ends; returns the step with the log-prices before and after it.
    fn first_entry<R: Rng>(
        &self,
        ka: usize,
        la: f64,
        kb: usize,
        lb: f64,
        rng: &mut R,
    ) -> Option<(usize, f64, f64)> {
        let n = kb - ka;
        if n == 1 {
            return self.enters(la, lb).then_some((kb, la, lb));
        }
        if !self.may_enter(la, lb, n) {
            return None;
        }
        let j = n / 2;
        let w = j as f64 / n as f64;
        let sd = (self.s2 * (j * (n - j)) as f64 / n as f64).sqrt();
        let z: f64 = rng.sample(StandardNormal);
        let lm = la + w * (lb - la) + sd * z;
        let km = ka + j;
        self.first_entry(ka, la, km, lm, rng)
            .or_else(|| self.first_entry(km, lm, kb, lb, rng))
    }
}

pub(crate) fn n_steps(params: &McParams, beta: f64) -> usize {
    (params.horizon_for(beta) / params.dt).round().max(1.0) as usize
}

pub(crate) fn run_paths(game: &Game<'_>, n_paths: usize, ladder: &[usize]) -> Vec<PathRun> {
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| game.run(i, ladder))
        .collect()
}

/// Sample mean and `sd / √n`; zero spread is reported exactly.
pub(crate) fn mean_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (mut n, mut sum, mut lo, mut hi) = (0usize, 0.0, f64::INFINITY, f64::NEG_INFINITY);
    for v in values.clone() {
        n += 1;
        sum += v;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    if lo == hi {
        return (lo, 0.0);
    }
    let mean = sum / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt())
}

pub(crate) fn summarize(game: &Game<'_>, runs: &[PathRun]) -> GameEstimate {
    let (mean, stderr) = mean_stderr(runs.iter().map(|r| r.outcome.payoff));
    let (high, _) = mean_stderr(runs.iter().map(|r| r.outcome.high));
    GameEstimate {
        mean,
        stderr,
        n_paths: runs.len(),
        seed: game.seed,
        truncation_hits: runs.iter().filter(|r| r.outcome.step.is_none()).count(),
        bracket: (mean, high),
        guard_flags: runs.iter().map(|r| r.flags).sum(),
        workers: rayon::current_num_threads(),
        engine: game.engine_name().to_string(),
    }
}

pub(crate) fn check_start(x0: f64) -> Result<()> {
    if x0 > 0.0 && x0.is_finite() {
        Ok(())
    } else {
        Err(Error::MonteCarlo(format!(
            "x0 must be in (0, inf), got {x0}"
        )))
    }
}

/// Monte Carlo estimate of the expected discounted payoff `R_x(τ, γ)`.
pub fn estimate_r(
    model: &DiffusionModel,
    x0: f64,
    buyer: &Strategy,
    seller: &Strategy,
    payoffs: &PayoffPair,
    params: &McParams,
) -> Result<GameEstimate> {
    params.validate()?;
    check_start(x0)?;
    let game = Game {
        model,
        payoffs,
        buyer,
        seller,
        x0,
        dt: params.dt,
        n_steps: n_steps(params, model.beta()),
        seed: params.seed,
    };
    let runs = run_paths(&game, params.n_paths, &[]);
    Ok(summarize(&game, &runs))
}

/// Allowance for discrete monitoring: a sum over the strategies' target end
/// points `b` of `√dt σ(b) (|g'(b)| + |g(b)| max(|ψ'/ψ|, |φ'/φ|)(b))`, with `g`
/// the payoff collected by the owner of the target.
pub fn tol_disc(
    model: &DiffusionModel,
    payoffs: &PayoffPair,
    fundamental: &FundamentalPair,
    buyer: &Strategy,
    seller: &Strategy,
    dt: f64,
) -> f64 {
    let xs = fundamental.grid();
    let log_slope = |b: f64| {
        let i = xs.partition_point(|x| *x < b).min(xs.len() - 1);
        let (p, q) = (
            fundamental.dpsi()[i] / fundamental.psi()[i],
            fundamental.dphi()[i] / fundamental.phi()[i],
        );
        p.abs().max(q.abs()) * xs[i] / b
    };
    let term = |g: &crate::poly::PiecewisePoly, b: f64| {
        let slope = g.d1_left(b).abs().max(g.d1_right(b).abs());
        dt.sqrt() * model.vol(b).abs() * (slope + g.eval(b).abs() * log_slope(b))
    };
    let buy: f64 = buyer
        .levels()
        .into_iter()
        .map(|b| term(payoffs.g1(), b))
        .sum();
    let sell: f64 = seller
        .levels()
        .into_iter()
        .map(|b| term(payoffs.g2(), b))
        .sum();
    buy + sell
}
