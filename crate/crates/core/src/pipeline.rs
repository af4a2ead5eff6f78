//! End-to-end solve: grid, fundamental pair, transform, envelope, analysis.

use serde::Serialize;

use crate::analysis::{
    self, GrowthReport, SaddleVerdict, SignConclusion, SmoothFitReport, StoppingRegions,
};
use crate::catalog::CatalogEntry;
use crate::diffusion::{self, DiffusionModel, FundamentalOptions, FundamentalPair};
use crate::envelope::{self, BoundaryPolicy, EnvelopeSolution};
use crate::error::Result;
use crate::grid::{GridCurve, GridSpec, StateGrid};
use crate::transform::{self, PayoffPair, Transform, TransformedObstacles};

#[derive(Debug, Clone)]
pub struct Problem {
    pub model: DiffusionModel,
    pub payoffs: PayoffPair,
    pub grid: GridSpec,
    pub fundamental: FundamentalOptions,
    pub envelope: envelope::Tolerances,
    pub policy: BoundaryPolicy,
    /// Relative contact tolerance for region extraction.
    pub tol_contact: f64,
    /// Relative bracket gap above which the truncation warning is raised.
    pub gap_threshold: f64,
}

impl Problem {
    pub fn new(model: DiffusionModel, payoffs: PayoffPair, grid: GridSpec) -> Self {
        Self {
            model,
            payoffs,
            grid,
            fundamental: FundamentalOptions::default(),
            envelope: envelope::Tolerances::default(),
            policy: BoundaryPolicy::Natural,
            tol_contact: 1e-9,
            gap_threshold: 1e-4,
        }
    }

    /// A catalog entry on its default window `[K/16, 16K]`.
    pub fn from_catalog(entry: &CatalogEntry, n_points: usize) -> Self {
        let (a, b) = entry.default_window();
        Self::new(
            entry.model.clone(),
            entry.payoffs.clone(),
            GridSpec::new(a, b, n_points),
        )
    }

    pub fn with_window(mut self, x_min: f64, x_max: f64) -> Self {
        self.grid.x_min = x_min;
        self.grid.x_max = x_max;
        self
    }
}

/// Everything produced by [`solve`]. Curves named without qualification live
/// on the report window; the padded objects are kept for diagnostics.
#[derive(Debug, Clone)]
pub struct Solved {
    pub problem: Problem,
    pub state_grid: StateGrid,
    pub fundamental: FundamentalPair,
    pub transform: Transform,
    pub obstacles: TransformedObstacles,
    pub envelope: EnvelopeSolution,
    /// `V` on the padded grid.
    pub v_full: GridCurve,
    pub v: GridCurve,
    pub w: GridCurve,
    pub regions: StoppingRegions,
    pub smooth_fit: SmoothFitReport,
    pub signs: Vec<SignConclusion>,
    pub growth: GrowthReport,
    pub saddle: SaddleVerdict,
    pub truncation_warning: bool,
}

pub fn solve(problem: &Problem) -> Result<Solved> {
    let spec = problem
        .grid
        .clone()
        .with_inserts(problem.payoffs.kinks().iter().copied());
    let state_grid = spec.build()?;
    problem.payoffs.check_on(&state_grid.nodes)?;
    let fundamental =
        diffusion::solve_fundamental(&problem.model, &state_grid.nodes, problem.fundamental)?;
    let transform = transform::build_transform(&fundamental)?;
    let obstacles = transform::transform_obstacles(&problem.payoffs, &transform, &fundamental)?
        .with_window(state_grid.window.clone());
    let envelope = envelope::smallest_in_h(&obstacles, problem.policy, problem.envelope)?;
    let v_full = transform::untransform_value(&envelope.w, &transform, &fundamental)?;
    let win = state_grid.window.clone();
    let v = v_full.slice(win.clone());
    let w = envelope.w.slice(win);

    let regions = analysis::extract_regions(&v, &problem.payoffs, problem.tol_contact)?;
    let smooth_fit = analysis::smooth_fit_check(&v, &problem.payoffs, &regions, &fundamental)?;
    let signs = analysis::sign_conclusions(&problem.payoffs, &problem.model, v.grid(), &regions);
    let growth = analysis::boundary_growth(&problem.payoffs, &fundamental);
    let saddle = analysis::classify_saddle(
        &growth,
        &regions,
        v.grid(),
        problem.model.integrability_42_declared(),
    );
    let truncation_warning = envelope.bracket_gap_rel > problem.gap_threshold;
    Ok(Solved {
        problem: problem.clone(),
        state_grid,
        fundamental,
        transform,
        obstacles,
        envelope,
        v_full,
        v,
        w,
        regions,
        smooth_fit,
        signs,
        growth,
        saddle,
        truncation_warning,
    })
}

/// One failed invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub suite: String,
    pub message: String,
}

impl Solved {
    /// Linear interpolation of `V` on the window.
    pub fn value_at(&self, x: f64) -> Option<f64> {
        self.v.interpolate(x)
    }

    /// The American value `V∞ = sup_τ E e^{-βτ} g1(X_τ)` on the window.
    pub fn american_value(&self) -> Result<GridCurve> {
        let w = envelope::american_value(&self.obstacles);
        let v = transform::untransform_value(&w, &self.transform, &self.fundamental)?;
        Ok(v.slice(self.state_grid.window.clone()))
    }

    /// Runs every invariant suite against the solution.
    pub fn self_check(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |suite: &str, msgs: Vec<String>| {
            out.extend(msgs.into_iter().map(|message| Violation {
                suite: suite.to_string(),
                message,
            }));
        };
        let p = &self.problem;
        push(
            "fundamental",
            self.fundamental
                .check_invariants(&p.model, p.fundamental.tol_ode),
        );

        let mut tr = Vec::new();
        for (x, y) in self.transform.xgrid().iter().zip(self.transform.ygrid()) {
            if self.transform.f_inv(*y) != Some(*x) {
                tr.push(format!("F^-1(F({x})) != {x}"));
            }
        }
        push("transform", tr);

        let ob = &self.obstacles;
        let mut env = envelope::structure_violations(ob, self.envelope.w_high.values(), 1e-9);
        let lo = envelope::structure_violations(ob, self.envelope.w_low.values(), 1e-9);
        env.extend(lo.into_iter().map(|m| format!("low bracket: {m}")));
        for (i, (a, b)) in self
            .envelope
            .w_low
            .values()
            .iter()
            .zip(self.envelope.w_high.values())
            .enumerate()
        {
            if a > &(b + 1e-9 * b.abs().max(1e-300)) {
                env.push(format!("node {i}: W_low = {a} > W_high = {b}"));
            }
        }
        push("envelope", env);

        let mut sand = Vec::new();
        for (x, v) in self.v.grid().iter().zip(self.v.values()) {
            let (g1, g2) = (p.payoffs.g1().eval(*x), p.payoffs.g2().eval(*x));
            let tol = 1e-9 * v.abs().max(g2.abs());
            if *v < g1 - tol || *v > g2 + tol {
                sand.push(format!("x = {x}: g1 = {g1}, V = {v}, g2 = {g2}"));
            }
        }
        push("sandwich", sand);

        push(
            "regions",
            analysis::region_violations(&self.v, &p.payoffs, &self.regions, p.tol_contact),
        );
        push(
            "measure_sign",
            self.signs
                .iter()
                .filter(|s| !s.consistent)
                .map(|s| {
                    format!(
                        "{} claimed on ({}, {}) but regions disagree",
                        s.claim.as_deref().unwrap_or("?"),
                        s.interval.0,
                        s.interval.1
                    )
                })
                .collect(),
        );
        push(
            "smooth_fit",
            self.smooth_fit
                .points
                .iter()
                .filter(|c| !c.passed)
                .map(|c| format!("contact at x = {} ({:?}) failed", c.x, c.obstacle))
                .collect(),
        );
        out
    }
}
