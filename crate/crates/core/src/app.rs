//! Orchestration behind the command line: solve, simulate, check, emit.

use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Config, Setup};
use crate::error::{Error, Result};
use crate::pipeline::{self, Solved, Violation};
use crate::report::{self, curve_error, to_value};
use crate::simulate::{estimate_r, saddle_probe, tol_disc, GameEstimate, McParams, ProbeSet};

#[derive(Debug, Clone)]
pub struct SolveRun {
    pub config: Config,
    pub setup: Setup,
    pub solved: Solved,
    pub document: Value,
}

/// Command-line values that replace config keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub grid_points: Option<usize>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub output: Option<PathBuf>,
    /// `csv` or `json`: emit only that file.
    pub format: Option<String>,
}

impl Overrides {
    pub fn apply(&self, config: &mut Config) -> Result<()> {
        if let Some(n) = self.grid_points {
            config.grid.n_points = n;
        }
        if let Some(a) = self.x_min {
            config.grid.x_min = Some(a);
        }
        if let Some(b) = self.x_max {
            config.grid.x_max = Some(b);
        }
        if let Some(s) = self.seed {
            config.mc.params.seed = s;
        }
        if let Some(n) = self.paths {
            config.mc.params.n_paths = n;
        }
        if let Some(d) = &self.output {
            config.output.dir = d.clone();
        }
        if let Some(f) = &self.format {
            let (csv, json) = match f.as_str() {
                "csv" => (true, false),
                "json" => (false, true),
                _ => {
                    return Err(Error::Config {
                        line: 0,
                        message: format!("--format must be csv or json, got {f:?}"),
                    })
                }
            };
            config.output.csv = csv;
            config.output.json = json;
        }
        config.validate()
    }
}

/// Solves the configured problem and assembles the report document,
/// including closed-form comparisons for catalog entries and the American
/// value when the game reduces to it.
pub fn run_solve(config: &Config) -> Result<SolveRun> {
    let setup = config.setup()?;
    let solved = pipeline::solve(&setup.problem)?;
    let mut extra = Vec::new();
    if let Some(e) = &setup.catalog {
        let g = solved.v.grid();
        let full = curve_error(&solved, |x| e.value(x), (g[0], g[g.len() - 1]));
        let core = curve_error(&solved, |x| e.value(x), (e.strike / 4.0, e.strike * 4.0));
        extra.push((
            "catalog",
            json!({
                "name": e.name,
                "closed_form": to_value(&e.closed_form),
                "error_window": to_value(&full),
                "error_core": to_value(&core),
                "expected_verdict": to_value(&e.expected_verdict),
            }),
        ));
    }
    if setup.american_reduction {
        let a = solved.american_value()?;
        let err = curve_error(&solved, |x| a.interpolate(x).unwrap_or(f64::NAN), {
            let g = solved.v.grid();
            (g[0], g[g.len() - 1])
        });
        extra.push((
            "american_reduction",
            json!({ "V_american": a.values(), "game_vs_american": to_value(&err) }),
        ));
    }
    let document = report::solution_document(config, &solved, extra);
    Ok(SolveRun {
        config: config.clone(),
        setup,
        solved,
        document,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HalvingRow {
    pub dt: f64,
    pub mean: f64,
    pub stderr: f64,
    pub tol_disc: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    pub x0: f64,
    /// `V(x0)` from the solver.
    pub value: f64,
    /// `R(τ*, γ*)`.
    pub estimate: GameEstimate,
    pub tol_disc: f64,
    /// `|mean − V(x0)| ≤ 3·stderr + tol_disc`
    pub consistent: bool,
    pub halving: Vec<HalvingRow>,
    pub probe: crate::simulate::ProbeReport,
    pub probe_violations: usize,
}

/// Monte Carlo stage: `R(τ*, γ*)` with a `dt`-halving study, then the saddle
/// probe. A probe violation is recorded in the report, not raised.
pub fn run_simulate(run: &SolveRun) -> Result<McReport> {
    let mc = &run.config.mc;
    mc.params.validate()?;
    let s = &run.solved;
    let x0 = mc
        .x0
        .ok_or_else(|| Error::MonteCarlo("mc.x0 is required".into()))?;
    let value = s
        .value_at(x0)
        .ok_or_else(|| Error::MonteCarlo(format!("x0 = {x0} lies outside the window")))?;
    let (tau, gamma) = crate::simulate::optimal_strategies(s);
    let p = &s.problem;
    let play = |dt: f64| -> Result<(GameEstimate, f64)> {
        let params = McParams { dt, ..mc.params };
        let e = estimate_r(&p.model, x0, &tau, &gamma, &p.payoffs, &params)?;
        let t = tol_disc(&p.model, &p.payoffs, &s.fundamental, &tau, &gamma, dt);
        Ok((e, t))
    };
    let (estimate, tol) = play(mc.params.dt)?;
    let mut halving = vec![HalvingRow {
        dt: mc.params.dt,
        mean: estimate.mean,
        stderr: estimate.stderr,
        tol_disc: tol,
    }];
    if mc.halving {
        for k in 1..=2 {
            let dt = mc.params.dt / f64::from(1u32 << k);
            let (e, t) = play(dt)?;
            halving.push(HalvingRow {
                dt,
                mean: e.mean,
                stderr: e.stderr,
                tol_disc: t,
            });
        }
    }
    let mut probes = mc.probes.clone();
    if probes.buyer_thresholds.is_empty() && probes.seller_thresholds.is_empty() {
        let around = ProbeSet::around(x0, 3.0, 9);
        probes.buyer_thresholds = around.buyer_thresholds;
        probes.seller_thresholds = around.seller_thresholds;
    }
    let probe = match saddle_probe(s, x0, &probes, &mc.params) {
        Ok(r) => r,
        Err(Error::ProbeViolation(r)) => *r,
        Err(e) => return Err(e),
    };
    Ok(McReport {
        x0,
        value,
        consistent: (estimate.mean - value).abs() <= 3.0 * estimate.stderr + tol,
        estimate,
        tol_disc: tol,
        halving,
        probe_violations: probe.violations.len(),
        probe,
    })
}

/// Solve, then Monte Carlo when enabled; returns the final document.
pub fn run_all(config: &Config) -> Result<SolveRun> {
    let mut run = run_solve(config)?;
    if config.mc.enabled {
        let mc = run_simulate(&run)?;
        run.document["mc"] = to_value(&mc);
    } else {
        run.document["mc"] = json!({ "enabled": false });
    }
    Ok(run)
}

pub fn emit(run: &SolveRun) -> Result<Vec<PathBuf>> {
    report::emit_outputs(&run.config, &run.solved, &run.document)
}

/// All invariant suites against the produced solution.
pub fn run_check(config: &Config) -> Result<(SolveRun, Vec<Violation>)> {
    let run = run_solve(config)?;
    let v = run.solved.self_check();
    Ok((run, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disabled_mc_is_marked_absent() {
        let c = Config::parse("[payoff]\ncatalog = game_call\n[grid]\nn_points = 201\n").unwrap();
        let run = run_all(&c).unwrap();
        assert_eq!(run.document["mc"], json!({ "enabled": false }));
        assert!(
            run.document["catalog"]["error_core"]["max_rel_error"]
                .as_f64()
                .unwrap()
                < 1e-2
        );
    }

    #[test]
    fn truncated_window_warns_but_solves() {
        let c = Config::parse(
            "[payoff]\ncatalog = game_call\n[grid]\nx_min = 6.25\nx_max = 150\nn_points = 201\npad_factor = 1\n",
        )
        .unwrap();
        let run = run_solve(&c).unwrap();
        assert_eq!(
            run.document["truncation_warning"],
            json!(true),
            "{}",
            run.document["envelope"]
        );
    }
}
