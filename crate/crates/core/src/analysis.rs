//! Stopping regions, smooth fit, the sign of the generator on the payoffs,
//! boundary growth and the saddle-point verdict.

use serde::Serialize;

use crate::diffusion::{DiffusionModel, FundamentalPair};
use crate::envelope::boundary_samples;
use crate::error::{Error, Result};
use crate::grid::GridCurve;
use crate::growth::{self, Trend, TrendTag};
use crate::poly::PiecewisePoly;
use crate::transform::PayoffPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Obstacle {
    Lower,
    Upper,
}

impl Obstacle {
    fn payoff<'a>(&self, p: &'a PayoffPair) -> &'a PiecewisePoly {
        match self {
            Obstacle::Lower => p.g1(),
            Obstacle::Upper => p.g2(),
        }
    }
}

/// Maximal run of contact nodes `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContactInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_index: usize,
    pub hi_index: usize,
    /// Single-node contact; free boundaries usually fall between nodes.
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoppingRegions {
    /// Buyer region `{V = g1}`.
    pub e1: Vec<ContactInterval>,
    /// Seller region `{V = g2}`.
    pub e2: Vec<ContactInterval>,
    pub in_e1: Vec<bool>,
    pub in_e2: Vec<bool>,
    pub tau_star_rule: String,
    pub gamma_star_rule: String,
}

impl StoppingRegions {
    pub fn e1_contains(&self, x: f64) -> bool {
        self.e1.iter().any(|c| c.lo <= x && x <= c.hi)
    }

    pub fn e2_contains(&self, x: f64) -> bool {
        self.e2.iter().any(|c| c.lo <= x && x <= c.hi)
    }
}

#[inline]
fn touches(v: f64, g: f64, tol: f64) -> bool {
    (v - g).abs() <= tol * v.abs().max(g.abs())
}

fn runs(grid: &[f64], flags: &[bool]) -> Vec<ContactInterval> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < flags.len() {
        if !flags[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < flags.len() && flags[i + 1] {
            i += 1;
        }
        out.push(ContactInterval {
            lo: grid[start],
            hi: grid[i],
            lo_index: start,
            hi_index: i,
            low_confidence: start == i,
        });
        i += 1;
    }
    out
}

fn describe(name: &str, ivs: &[ContactInterval], last: usize) -> String {
    if ivs.is_empty() {
        return format!("{name} = never (target region empty on the grid)");
    }
    let parts: Vec<String> = ivs
        .iter()
        .map(|c| {
            let lo = if c.lo_index == 0 {
                "x_min".to_string()
            } else {
                c.lo.to_string()
            };
            let hi = if c.hi_index == last {
                "x_max".to_string()
            } else {
                c.hi.to_string()
            };
            format!("[{lo}, {hi}]")
        })
        .collect();
    format!("{name} = first hitting time of {}", parts.join(" u "))
}

/// Contact sets of `V` with `g1` and `g2`, relative tolerance `tol_contact`.
pub fn extract_regions(
    v: &GridCurve,
    payoffs: &PayoffPair,
    tol_contact: f64,
) -> Result<StoppingRegions> {
    let x = v.grid();
    let n = x.len();
    let mut in_e1 = vec![false; n];
    let mut in_e2 = vec![false; n];
    for i in 0..n {
        let (g1, g2) = (payoffs.g1().eval(x[i]), payoffs.g2().eval(x[i]));
        let vi = v.values()[i];
        let tol = tol_contact * vi.abs().max(g2.abs());
        if vi < g1 - tol || vi > g2 + tol {
            return Err(Error::SandwichViolation {
                x: x[i],
                g1,
                v: vi,
                g2,
            });
        }
        in_e1[i] = touches(vi, g1, tol_contact);
        in_e2[i] = touches(vi, g2, tol_contact);
    }
    let e1 = runs(x, &in_e1);
    let e2 = runs(x, &in_e2);
    Ok(StoppingRegions {
        tau_star_rule: describe("tau*", &e1, n - 1),
        gamma_star_rule: describe("gamma*", &e2, n - 1),
        e1,
        e2,
        in_e1,
        in_e2,
    })
}

/// Node-wise coherence of regions and values.
pub fn region_violations(
    v: &GridCurve,
    payoffs: &PayoffPair,
    regions: &StoppingRegions,
    tol_contact: f64,
) -> Vec<String> {
    let mut out = Vec::new();
    for (i, &x) in v.grid().iter().enumerate() {
        let (g1, g2, vi) = (payoffs.g1().eval(x), payoffs.g2().eval(x), v.values()[i]);
        if regions.in_e1[i] != touches(vi, g1, tol_contact) {
            out.push(format!(
                "x = {x}: E1 membership disagrees with V - g1 = {}",
                vi - g1
            ));
        }
        if regions.in_e2[i] != touches(vi, g2, tol_contact) {
            out.push(format!(
                "x = {x}: E2 membership disagrees with g2 - V = {}",
                g2 - vi
            ));
        }
        if regions.in_e1[i] && regions.in_e2[i] && !touches(g1, g2, tol_contact) {
            out.push(format!("x = {x}: in E1 and E2 although g1 < g2"));
        }
    }
    out
}

/// Derivative of `f` at `x[i]` from `f` at `i`, `i+s`, `i+2s` (`s = ±1`).
fn one_sided(x: &[f64], f: &[f64], i: usize, right: bool) -> Option<f64> {
    let n = x.len();
    let idx = |k: usize| {
        if right {
            i.checked_add(k)
        } else {
            i.checked_sub(k)
        }
    };
    let (i1, i2) = (idx(1)?, idx(2));
    if i1 >= n {
        return None;
    }
    match i2.filter(|&j| j < n) {
        Some(i2) => {
            let h1 = x[i1] - x[i];
            let h2 = x[i2] - x[i];
            Some(
                -(h1 + h2) / (h1 * h2) * f[i] + h2 / (h1 * (h2 - h1)) * f[i1]
                    - h1 / (h2 * (h2 - h1)) * f[i2],
            )
        }
        None => Some((f[i1] - f[i]) / (x[i1] - x[i])),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichResidual {
    /// `(d⁻H, d⁻W, d⁺W, d⁺H)` in `y`-coordinates.
    pub slopes: [f64; 4],
    /// Violations of the outer inequalities and of the middle one (positive
    /// means violated beyond zero).
    pub outer: [f64; 2],
    pub middle: f64,
    pub middle_required: bool,
    pub holds: bool,
}

/// Derivative sandwich at a contact node in `y`-coordinates. At an upper
/// contact `d⁻H2 ≤ d⁻W ≤ d⁺W ≤ d⁺H2`; at a lower contact
/// `d⁻H1 ≥ d⁻W ≥ d⁺W ≥ d⁺H1`. The middle inequality needs the obstacles
/// to be apart at the node.
#[allow(clippy::too_many_arguments)]
pub fn derivative_sandwich(
    y: &[f64],
    w: &[f64],
    i: usize,
    obstacle: Obstacle,
    d_minus_h: f64,
    d_plus_h: f64,
    middle_required: bool,
    tol: f64,
) -> SandwichResidual {
    let dmw = (w[i] - w[i - 1]) / (y[i] - y[i - 1]);
    let dpw = (w[i + 1] - w[i]) / (y[i + 1] - y[i]);
    let sign = match obstacle {
        Obstacle::Upper => 1.0,
        Obstacle::Lower => -1.0,
    };
    let outer = [sign * (d_minus_h - dmw), sign * (dpw - d_plus_h)];
    let middle = sign * (dmw - dpw);
    let scale = [d_minus_h, dmw, dpw, d_plus_h]
        .iter()
        .fold(1e-300f64, |m, v| m.max(v.abs()));
    let lim = tol * scale;
    let holds = outer.iter().all(|r| *r <= lim) && (!middle_required || middle <= lim);
    SandwichResidual {
        slopes: [d_minus_h, dmw, dpw, d_plus_h],
        outer,
        middle,
        middle_required,
        holds,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactPoint {
    pub x: f64,
    pub index: usize,
    pub obstacle: Obstacle,
    /// `(V'(x−), V'(x+))` from one-sided 3-point stencils.
    pub v_slopes: (f64, f64),
    /// `(g'(x−), g'(x+))`, exact.
    pub g_slopes: (f64, f64),
    pub applicable: bool,
    pub tol_fit: f64,
    /// `max |V'(x±) − g'(x)|` when applicable.
    pub fit_error: Option<f64>,
    pub sandwich: Option<SandwichResidual>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothFitReport {
    pub points: Vec<ContactPoint>,
    pub all_passed: bool,
}

/// Smooth fit at every interior endpoint of every contact interval.
///
/// `fundamental` may extend beyond the grid of `v`; `v.grid()` must be a
/// contiguous run of its nodes.
pub fn smooth_fit_check(
    v: &GridCurve,
    payoffs: &PayoffPair,
    regions: &StoppingRegions,
    fundamental: &FundamentalPair,
) -> Result<SmoothFitReport> {
    let x = v.grid();
    let n = x.len();
    let off = fundamental
        .grid()
        .iter()
        .position(|g| *g == x[0])
        .filter(|&o| fundamental.grid().get(o..o + n) == Some(x))
        .ok_or_else(|| Error::Grid("value grid is not part of the fundamental grid".into()))?;
    let psi = &fundamental.psi()[off..off + n];
    let phi = &fundamental.phi()[off..off + n];
    let dpsi = &fundamental.dpsi()[off..off + n];
    let dphi = &fundamental.dphi()[off..off + n];
    let y: Vec<f64> = psi.iter().zip(phi).map(|(a, b)| a / b).collect();
    let w: Vec<f64> = v.values().iter().zip(phi).map(|(a, b)| a / b).collect();

    let mut points = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (obstacle, ivs) in [
        (Obstacle::Lower, &regions.e1),
        (Obstacle::Upper, &regions.e2),
    ] {
        for c in ivs.iter() {
            for i in [c.lo_index, c.hi_index] {
                if i == 0 || i + 1 >= n || !seen.insert((obstacle as u8, i)) {
                    continue;
                }
                let xi = x[i];
                let g = obstacle.payoff(payoffs);
                let (g1, g2) = (payoffs.g1().eval(xi), payoffs.g2().eval(xi));
                let apart = g1 < g2 && !touches(g1, g2, 1e-12);
                let g_slopes = (g.d1_left(xi), g.d1_right(xi));
                let smooth = g.differentiable_at(xi, 1e-12 * g_slopes.0.abs().max(1.0));
                let vl = one_sided(x, v.values(), i, false).unwrap_or(f64::NAN);
                let vr = one_sided(x, v.values(), i, true).unwrap_or(f64::NAN);
                let h = (x[i + 1] - x[i]).max(x[i] - x[i - 1]);
                let tol_fit = (1e-2f64).max(5.0 * h);
                let applicable = apart && smooth;
                let (fit_error, sandwich, passed) = if applicable {
                    let e = (vl - g_slopes.0).abs().max((vr - g_slopes.1).abs());
                    (Some(e), None, e <= tol_fit)
                } else {
                    // dH/dy = (g'φ − gφ')/(ψ'φ − ψφ')
                    let den = dpsi[i] * phi[i] - psi[i] * dphi[i];
                    let gv = g.eval(xi);
                    let dh = |gp: f64| (gp * phi[i] - gv * dphi[i]) / den;
                    let s = derivative_sandwich(
                        &y,
                        &w,
                        i,
                        obstacle,
                        dh(g_slopes.0),
                        dh(g_slopes.1),
                        apart,
                        tol_fit,
                    );
                    let ok = s.holds;
                    (None, Some(s), ok)
                };
                points.push(ContactPoint {
                    x: xi,
                    index: i,
                    obstacle,
                    v_slopes: (vl, vr),
                    g_slopes,
                    applicable,
                    tol_fit,
                    fit_error,
                    sandwich,
                    passed,
                });
            }
        }
    }
    let all_passed = points.iter().all(|p| p.passed);
    Ok(SmoothFitReport { points, all_passed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignVerdict {
    NonzeroNonnegative,
    NonzeroNonpositive,
    Zero,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KinkJump {
    pub x: f64,
    pub jump: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureSignReport {
    /// Open interval; `0` and `∞` mark unbounded ends.
    pub interval: (f64, f64),
    /// `(min, max)` of `𝓛g` over interior samples off the kinks.
    pub interior_range: (f64, f64),
    pub jumps: Vec<KinkJump>,
    pub verdict: SignVerdict,
    pub tol: f64,
}

/// Sign of `𝓛g` as a measure on `interval`: the density at the samples and
/// the jumps `g'(a+) − g'(a−)` at kinks inside the interval.
pub fn generator_measure_sign(
    g: &PiecewisePoly,
    model: &DiffusionModel,
    interval: (f64, f64),
    samples: &[f64],
) -> MeasureSignReport {
    const REL: f64 = 1e-9;
    let (a, b) = interval;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut pos = false;
    let mut neg = false;
    for &x in samples
        .iter()
        .filter(|x| **x > a && **x < b && !g.is_knot(**x))
    {
        let (v, d1, d2) = g.derivatives(x).expect("knots filtered");
        let s = model.vol(x);
        let terms = [0.5 * s * s * d2, model.drift(x) * d1, -model.beta() * v];
        let val: f64 = terms.iter().sum();
        let tol = REL * terms.iter().map(|t| t.abs()).sum::<f64>().max(1e-300);
        lo = lo.min(val);
        hi = hi.max(val);
        pos |= val > tol;
        neg |= val < -tol;
    }
    let mut jumps = Vec::new();
    for k in g.knots().into_iter().filter(|k| *k > a && *k < b) {
        let j = g.derivative_jump(k);
        let tol = REL * g.d1_left(k).abs().max(g.d1_right(k).abs()).max(1e-300);
        pos |= j > tol;
        neg |= j < -tol;
        jumps.push(KinkJump { x: k, jump: j });
    }
    if lo > hi {
        lo = 0.0;
        hi = 0.0;
    }
    let verdict = match (pos, neg) {
        (true, false) => SignVerdict::NonzeroNonnegative,
        (false, true) => SignVerdict::NonzeroNonpositive,
        (false, false) => SignVerdict::Zero,
        (true, true) => SignVerdict::Mixed,
    };
    MeasureSignReport {
        interval,
        interior_range: (lo, hi),
        jumps,
        verdict,
        tol: REL,
    }
}

/// Maximal open intervals where `g1 < g2`, from the nodes of `grid`. Ends that
/// reach the first or last node are reported as `0` and `∞`.
pub fn separation_intervals(grid: &[f64], payoffs: &PayoffPair) -> Vec<(f64, f64)> {
    let n = grid.len();
    let apart: Vec<bool> = grid
        .iter()
        .map(|&x| {
            let (a, b) = (payoffs.g1().eval(x), payoffs.g2().eval(x));
            a < b && !touches(a, b, 1e-12)
        })
        .collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if !apart[i] {
            i += 1;
            continue;
        }
        let s = i;
        while i + 1 < n && apart[i + 1] {
            i += 1;
        }
        let lo = if s == 0 { 0.0 } else { grid[s - 1] };
        let hi = if i == n - 1 {
            f64::INFINITY
        } else {
            grid[i + 1]
        };
        out.push((lo, hi));
        i += 1;
    }
    out
}

/// What the sign of `𝓛g_i` on a separation interval implies for the value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignConclusion {
    pub interval: (f64, f64),
    pub obstacle: Obstacle,
    pub report: MeasureSignReport,
    /// `Some("V > g1")` for a nonzero nonnegative `𝓛g1`, `Some("V < g2")` for
    /// a nonzero nonpositive `𝓛g2`.
    pub claim: Option<String>,
    /// Whether the extracted regions agree with the claim.
    pub consistent: bool,
}

/// Runs the measure test for `g1` and `g2` on each separation interval and
/// checks the resulting claims against `regions` (nodes of `grid`).
pub fn sign_conclusions(
    payoffs: &PayoffPair,
    model: &DiffusionModel,
    grid: &[f64],
    regions: &StoppingRegions,
) -> Vec<SignConclusion> {
    let mut out = Vec::new();
    for iv in separation_intervals(grid, payoffs) {
        for obstacle in [Obstacle::Lower, Obstacle::Upper] {
            let report = generator_measure_sign(obstacle.payoff(payoffs), model, iv, grid);
            let (claim, flags) = match (obstacle, report.verdict) {
                (Obstacle::Lower, SignVerdict::NonzeroNonnegative) => {
                    (Some("V > g1".to_string()), Some(&regions.in_e1))
                }
                (Obstacle::Upper, SignVerdict::NonzeroNonpositive) => {
                    (Some("V < g2".to_string()), Some(&regions.in_e2))
                }
                _ => (None, None),
            };
            let consistent = match flags {
                Some(f) => !grid
                    .iter()
                    .zip(f.iter())
                    .any(|(x, inside)| *inside && *x > iv.0 && *x < iv.1),
                None => true,
            };
            out.push(SignConclusion {
                interval: iv,
                obstacle,
                report,
                claim,
                consistent,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthReport {
    /// Trend of `g1/φ` toward `0`.
    pub l0: Trend,
    /// Trend of `g1/ψ` toward `∞`.
    pub linf: Trend,
}

const GROWTH_NODES: usize = 10;
const GROWTH_LOG_STEP: f64 = 0.05;

/// `l0` and `l∞` proxies from the nodes nearest each end of the fundamental
/// grid (thinned to a minimum log-spacing).
pub fn boundary_growth(payoffs: &PayoffPair, fundamental: &FundamentalPair) -> GrowthReport {
    let x = fundamental.grid();
    let g1 = payoffs.g1();
    let left = boundary_samples(x, true, GROWTH_NODES, GROWTH_LOG_STEP);
    let right = boundary_samples(x, false, GROWTH_NODES, GROWTH_LOG_STEP);
    let l0: Vec<f64> = left
        .iter()
        .map(|&i| g1.eval(x[i]) / fundamental.phi()[i])
        .collect();
    let linf: Vec<f64> = right
        .iter()
        .map(|&i| g1.eval(x[i]) / fundamental.psi()[i])
        .collect();
    GrowthReport {
        l0: growth::trend(&l0),
        linf: growth::trend(&linf),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SaddleKind {
    /// `(τ*, γ*)` is a saddle point.
    Saddle,
    /// Only `γ*` is certified optimal.
    SellerOnly,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaddleVerdict {
    pub l0: f64,
    pub linf: f64,
    pub l0_trend: TrendTag,
    pub linf_trend: TrendTag,
    pub integrability_42: bool,
    pub verdict: SaddleKind,
    pub reasons: Vec<String>,
}

/// Limits below this count as zero.
pub const GROWTH_ZERO_TOL: f64 = 1e-8;

/// Saddle classification on the truncated grid `window` (the nodes of the
/// reported value, in increasing order).
pub fn classify_saddle(
    growth: &GrowthReport,
    regions: &StoppingRegions,
    window: &[f64],
    integrability_42: bool,
) -> SaddleVerdict {
    let mut reasons = Vec::new();
    let (l0, linf) = (growth.l0, growth.linf);
    let verdict = 'v: {
        if !integrability_42 {
            reasons.push("pathwise integrability of the discounted fundamental solutions is not declared for the model".into());
            break 'v SaddleKind::Indeterminate;
        }
        for (name, t) in [("l0", l0), ("linf", linf)] {
            if t.tag != TrendTag::Converged || !t.limit.is_finite() {
                reasons.push(format!(
                    "{name} trend is {:?}; finiteness not established",
                    t.tag
                ));
            }
        }
        if !reasons.is_empty() {
            break 'v SaddleKind::Indeterminate;
        }
        let z0 = l0.limit.abs() <= GROWTH_ZERO_TOL;
        let zi = linf.limit.abs() <= GROWTH_ZERO_TOL;
        if z0 && zi {
            reasons.push("l0 = linf = 0 (trend extrapolation)".into());
            break 'v SaddleKind::Saddle;
        }
        let (first, last) = (window[0], window[window.len() - 1]);
        let mut ok = true;
        if !z0 {
            if regions.e1_contains(first) {
                reasons.push(format!(
                    "l0 = {:.6} > 0 and E1 reaches the left end of the grid",
                    l0.limit
                ));
            } else {
                reasons.push(format!(
                    "l0 = {:.6} > 0 but g1 < V near the left end of the grid",
                    l0.limit
                ));
                ok = false;
            }
        }
        if !zi {
            if regions.e1_contains(last) {
                reasons.push(format!(
                    "linf = {:.6} > 0 and E1 reaches the right end of the grid",
                    linf.limit
                ));
            } else {
                reasons.push(format!(
                    "linf = {:.6} > 0 but g1 < V near the right end of the grid",
                    linf.limit
                ));
                ok = false;
            }
        }
        reasons.push("verdict inspects the truncated grid only".into());
        if ok {
            SaddleKind::Saddle
        } else {
            SaddleKind::SellerOnly
        }
    };
    SaddleVerdict {
        l0: l0.limit,
        linf: linf.limit,
        l0_trend: l0.tag,
        linf_trend: linf.tag,
        integrability_42,
        verdict,
        reasons,
    }
}
