use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::engine::{check_start, mean_stderr, n_steps, run_paths, summarize, tol_disc, Game};
use super::{GameEstimate, McParams, Strategy};
use crate::analysis::{ContactInterval, SaddleKind};
use crate::error::{Error, Result};
use crate::pipeline::Solved;

/// Strategies tried against the candidate optimal ones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeSet {
    /// Buyer thresholds `b`, played as first entry of `[b, ∞)`.
    pub buyer_thresholds: Vec<f64>,
    /// Seller thresholds `b`, played as first entry of `[b, ∞)` and of `(0, b]`.
    pub seller_thresholds: Vec<f64>,
    /// Count of random first-entry intervals per side.
    pub random: usize,
    pub random_seed: u64,
    /// Times of the sub-martingale ladder.
    pub ladder_times: Vec<f64>,
}

impl Default for ProbeSet {
    fn default() -> Self {
        Self {
            buyer_thresholds: Vec::new(),
            seller_thresholds: Vec::new(),
            random: 4,
            random_seed: 7,
            ladder_times: vec![0.0, 1.0, 2.0, 5.0],
        }
    }
}

impl ProbeSet {
    /// `count` log-spaced thresholds across `[x0/f, x0·f]`.
    pub fn around(x0: f64, factor: f64, count: usize) -> Self {
        let ts: Vec<f64> = (0..count)
            .map(|i| {
                let u = if count > 1 {
                    i as f64 / (count - 1) as f64
                } else {
                    0.5
                };
                x0 * factor.powf(2.0 * u - 1.0)
            })
            .collect();
        Self {
            buyer_thresholds: ts.clone(),
            seller_thresholds: ts,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeEntry {
    pub label: String,
    pub strategy: Strategy,
    pub estimate: GameEstimate,
    pub tol_disc: f64,
    /// `V(x0) ± (3·stderr + tol_disc)`, depending on the side.
    pub bound: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderStep {
    pub t: f64,
    /// Mean of `e^{-β(t∧τ*)} V(X(t∧τ*))`.
    pub mean: f64,
    pub stderr: f64,
    /// Mean and stderr of the per-path increment from the previous rung.
    pub increment: f64,
    pub increment_stderr: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub x0: f64,
    pub value: f64,
    pub tau_star: Strategy,
    pub gamma_star: Strategy,
    pub verdict: SaddleKind,
    /// `R(τ, γ*)` for each buyer probe `τ`.
    pub buyer: Vec<ProbeEntry>,
    /// `R(τ*, γ)` for each seller probe `γ`, only when a saddle is claimed.
    pub seller: Vec<ProbeEntry>,
    pub ladder: Vec<LadderStep>,
    pub violations: Vec<String>,
    /// Probes can only falsify optimality.
    pub conclusion: String,
}

/// First entry of the contact intervals; ends on the window edge extend to
/// `0` and `∞`.
fn first_entry_of(ivs: &[ContactInterval], last: usize) -> Strategy {
    if ivs.is_empty() {
        return Strategy::Never;
    }
    let target = ivs
        .iter()
        .map(|c| {
            let lo = if c.lo_index == 0 { 0.0 } else { c.lo };
            let hi = if c.hi_index == last {
                f64::INFINITY
            } else {
                c.hi
            };
            (lo, hi)
        })
        .collect();
    Strategy::FirstEntry { target }
}

/// `(τ*, γ*)` read off the solution's regions.
pub fn optimal_strategies(solved: &Solved) -> (Strategy, Strategy) {
    let last = solved.v.len() - 1;
    (
        first_entry_of(&solved.regions.e1, last),
        first_entry_of(&solved.regions.e2, last),
    )
}

fn value_at(solved: &Solved, x: f64) -> f64 {
    let g = solved.v_full.grid();
    let xc = x.clamp(g[0], g[g.len() - 1]);
    solved
        .v_full
        .interpolate(xc)
        .expect("clamped into the grid")
}

fn random_intervals(solved: &Solved, count: usize, seed: u64) -> Vec<Strategy> {
    let g = solved.v.grid();
    let (a, b) = (g[0].ln(), g[g.len() - 1].ln());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let lo = rng.random_range(a..b);
            let width = rng.random_range(0.0..1.0);
            Strategy::FirstEntry {
                target: vec![(lo.exp(), (lo + width).exp())],
            }
        })
        .collect()
}

struct Prober<'a> {
    solved: &'a Solved,
    x0: f64,
    value: f64,
    params: &'a McParams,
}

impl Prober<'_> {
    fn play(&self, buyer: &Strategy, seller: &Strategy) -> (GameEstimate, f64) {
        let p = &self.solved.problem;
        let game = Game {
            model: &p.model,
            payoffs: &p.payoffs,
            buyer,
            seller,
            x0: self.x0,
            dt: self.params.dt,
            n_steps: n_steps(self.params, p.model.beta()),
            seed: self.params.seed,
        };
        let est = summarize(&game, &run_paths(&game, self.params.n_paths, &[]));
        let tol = tol_disc(
            &p.model,
            &p.payoffs,
            &self.solved.fundamental,
            buyer,
            seller,
            self.params.dt,
        );
        (est, tol)
    }

    fn buyer_entry(&self, label: String, tau: Strategy, gamma: &Strategy) -> ProbeEntry {
        let (estimate, tol) = self.play(&tau, gamma);
        let bound = self.value + 3.0 * estimate.stderr + tol;
        ProbeEntry {
            label,
            violation: estimate.mean > bound,
            strategy: tau,
            estimate,
            tol_disc: tol,
            bound,
        }
    }

    fn seller_entry(&self, label: String, gamma: Strategy, tau: &Strategy) -> ProbeEntry {
        let (estimate, tol) = self.play(tau, &gamma);
        let bound = self.value - 3.0 * estimate.stderr - tol;
        ProbeEntry {
            label,
            violation: estimate.mean < bound,
            strategy: gamma,
            estimate,
            tol_disc: tol,
            bound,
        }
    }
}

/// Probes the saddle inequalities at `x0` by Monte Carlo: every buyer probe
/// against `γ*`, every seller probe against `τ*` when a saddle is claimed,
/// and the sub-martingale ladder under `τ*`.
pub fn saddle_probe(
    solved: &Solved,
    x0: f64,
    probes: &ProbeSet,
    params: &McParams,
) -> Result<ProbeReport> {
    params.validate()?;
    check_start(x0)?;
    let value = solved
        .value_at(x0)
        .ok_or_else(|| Error::MonteCarlo(format!("x0 = {x0} lies outside the solved window")))?;
    let (tau_star, gamma_star) = optimal_strategies(solved);
    let verdict = solved.saddle.verdict;
    let pr = Prober {
        solved,
        x0,
        value,
        params,
    };

    let mut buyers: Vec<(String, Strategy)> = vec![
        ("immediate".into(), Strategy::Immediate),
        ("never".into(), Strategy::Never),
        ("tau_star".into(), tau_star.clone()),
    ];
    buyers.extend(
        probes
            .buyer_thresholds
            .iter()
            .map(|b| (format!("above {b}"), Strategy::above(*b))),
    );
    buyers.extend(
        random_intervals(solved, probes.random, probes.random_seed)
            .into_iter()
            .enumerate()
            .map(|(i, s)| (format!("random {i}"), s)),
    );
    let buyer: Vec<ProbeEntry> = buyers
        .into_iter()
        .map(|(l, s)| pr.buyer_entry(l, s, &gamma_star))
        .collect();

    let mut seller = Vec::new();
    if verdict == SaddleKind::Saddle {
        let mut sellers: Vec<(String, Strategy)> = vec![
            ("immediate".into(), Strategy::Immediate),
            ("never".into(), Strategy::Never),
            ("gamma_star".into(), gamma_star.clone()),
        ];
        for b in &probes.seller_thresholds {
            sellers.push((format!("above {b}"), Strategy::above(*b)));
            sellers.push((format!("below {b}"), Strategy::below(*b)));
        }
        sellers.extend(
            random_intervals(solved, probes.random, probes.random_seed ^ 0x5e11)
                .into_iter()
                .enumerate()
                .map(|(i, s)| (format!("random {i}"), s)),
        );
        seller = sellers
            .into_iter()
            .map(|(l, s)| pr.seller_entry(l, s, &tau_star))
            .collect();
    }

    let ladder = if probes.ladder_times.len() >= 2 {
        submartingale_ladder(solved, x0, &probes.ladder_times, params)?
    } else {
        Vec::new()
    };

    let mut violations = Vec::new();
    for (side, entries) in [("buyer", &buyer), ("seller", &seller)] {
        for e in entries.iter().filter(|e| e.violation) {
            violations.push(format!(
                "{side} probe `{}`: R = {} beyond bound {}",
                e.label, e.estimate.mean, e.bound
            ));
        }
    }
    for s in ladder.iter().filter(|s| !s.ok) {
        violations.push(format!(
            "ladder at t = {}: increment {} ± {}",
            s.t, s.increment, s.increment_stderr
        ));
    }
    let conclusion = if violations.is_empty() {
        "no violation found".to_string()
    } else {
        format!("{} violation(s) found", violations.len())
    };
    let report = ProbeReport {
        x0,
        value,
        tau_star,
        gamma_star,
        verdict,
        buyer,
        seller,
        ladder,
        violations,
        conclusion,
    };
    if report.violations.is_empty() {
        Ok(report)
    } else {
        Err(Error::ProbeViolation(Box::new(report)))
    }
}

/// Means of `e^{-β(t∧τ*)} V(X(t∧τ*))` over increasing `times`; each rung's
/// per-path increment must not be negative beyond `3·stderr + tol_disc`.
pub fn submartingale_ladder(
    solved: &Solved,
    x0: f64,
    times: &[f64],
    params: &McParams,
) -> Result<Vec<LadderStep>> {
    params.validate()?;
    check_start(x0)?;
    if times.windows(2).any(|w| !(w[0] < w[1])) || times.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::MonteCarlo(format!(
            "ladder times must be increasing and nonnegative, got {times:?}"
        )));
    }
    let p = &solved.problem;
    let beta = p.model.beta();
    let (tau_star, _) = optimal_strategies(solved);
    let steps: Vec<usize> = times
        .iter()
        .map(|t| (t / params.dt).round() as usize)
        .collect();
    let horizon = *steps.last().expect("nonempty ladder");
    let game = Game {
        model: &p.model,
        payoffs: &p.payoffs,
        buyer: &tau_star,
        seller: &Strategy::Never,
        x0,
        dt: params.dt,
        n_steps: horizon.max(1),
        seed: params.seed,
    };
    let runs = run_paths(&game, params.n_paths, &steps);
    let tol = tol_disc(
        &p.model,
        &p.payoffs,
        &solved.fundamental,
        &tau_star,
        &Strategy::Never,
        params.dt,
    );
    let y = |r: &super::engine::PathRun, j: usize| {
        let (k, x) = r.ladder[j];
        (-beta * k as f64 * params.dt).exp() * value_at(solved, x)
    };
    let mut out = Vec::with_capacity(steps.len());
    for (j, &t) in times.iter().enumerate().take(steps.len()) {
        let (mean, stderr) = mean_stderr(runs.iter().map(|r| y(r, j)));
        let (increment, increment_stderr) = if j == 0 {
            (0.0, 0.0)
        } else {
            mean_stderr(runs.iter().map(|r| y(r, j) - y(r, j - 1)))
        };
        out.push(LadderStep {
            t,
            mean,
            stderr,
            increment,
            increment_stderr,
            ok: increment >= -3.0 * increment_stderr - tol,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::pipeline::{solve, Problem};

    fn game_call_solution() -> Solved {
        let e = catalog::preset("game_call").unwrap();
        solve(&Problem::from_catalog(&e, 801)).unwrap()
    }

    #[test]
    fn optimal_strategies_extend_window_ends() {
        let s = game_call_solution();
        let (tau, gamma) = optimal_strategies(&s);
        assert_eq!(tau, Strategy::Never);
        match gamma {
            Strategy::FirstEntry { target } => {
                assert_eq!(target.len(), 1);
                assert!((target[0].0 - 100.0).abs() < 1e-9);
                assert_eq!(target[0].1, f64::INFINITY);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn game_call_probe_finds_nothing() {
        let s = game_call_solution();
        let probes = ProbeSet {
            buyer_thresholds: vec![60.0, 100.0, 140.0],
            random: 2,
            ..ProbeSet::default()
        };
        let params = McParams {
            n_paths: 2_000,
            dt: 1e-3,
            horizon: None,
            seed: 3,
        };
        let r = saddle_probe(&s, 50.0, &probes, &params).unwrap();
        assert_eq!(r.conclusion, "no violation found");
        assert!(r.seller.is_empty());
        let imm = &r.buyer[0];
        assert_eq!((imm.estimate.mean, imm.estimate.stderr), (0.0, 0.0));
        assert_eq!(r.ladder.len(), 4);
    }

    #[test]
    fn identical_payoffs_pay_the_payoff() {
        let g = crate::poly::PiecewisePoly::call(1.0).plus_constant(0.5);
        let pay = crate::transform::PayoffPair::new(g.clone(), g.clone()).unwrap();
        let m = crate::diffusion::DiffusionModel::gbm(0.05, 0.3).unwrap();
        let s = solve(&Problem::new(
            m,
            pay,
            crate::grid::GridSpec::new(0.1, 10.0, 201),
        ))
        .unwrap();
        let probes = ProbeSet {
            buyer_thresholds: vec![0.5, 2.0],
            ladder_times: vec![],
            ..ProbeSet::default()
        };
        let params = McParams {
            n_paths: 200,
            dt: 1e-2,
            horizon: Some(1.0),
            seed: 1,
        };
        let r = saddle_probe(&s, 2.0, &probes, &params).unwrap();
        for e in &r.buyer {
            assert_eq!(e.estimate.mean, g.eval(2.0), "{}", e.label);
        }
    }
}
