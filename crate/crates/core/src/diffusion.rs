//! Diffusions `dX = μ(X) dt + σ(X) dW` on `(0, ∞)` with discount rate `β`,
//! their fundamental solutions `ψ` (increasing) and `φ` (decreasing) of
//! `𝓛u = σ²/2 u'' + μ u' − β u = 0`, and the generator applied to payoffs.
//!
//! Geometric Brownian motion uses the power-law closed forms. Every other
//! model is solved numerically: in `s = ln x` the log-derivative
//! `ρ = d ln u / ds` obeys the Riccati equation
//!
//! ```text
//! ρ' = (β − bρ)/a − ρ²,   a = σ²/(2x²),   b = μ/x − a,
//! ```
//!
//! whose increasing branch is stable when integrated left to right and whose
//! decreasing branch is stable right to left. Each branch is started far
//! outside the grid at the frozen-coefficient root and carried across the
//! grid with an adaptive Dormand–Prince integrator; `ln u` is integrated
//! alongside, so nothing overflows however wide the grid is.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{self, Tolerances};
use crate::poly::PiecewisePoly;
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gbm,
    BetaDriftGeneralVol,
    Custom,
}

impl Family {
    pub fn parse(tag: &str) -> Option<Self> {
        match tag {
            "gbm" => Some(Family::Gbm),
            "beta_drift_general_vol" => Some(Family::BetaDriftGeneralVol),
            "custom" => Some(Family::Custom),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Gbm => "gbm",
            Family::BetaDriftGeneralVol => "beta_drift_general_vol",
            Family::Custom => "custom",
        }
    }
}

/// Family parameters accepted by [`make_model`]. Unused fields are ignored.
#[derive(Debug, Clone, Default)]
pub struct ModelParams {
    pub beta: f64,
    /// Relative volatility for `gbm`.
    pub sigma: Option<f64>,
    /// Relative drift for `gbm`; defaults to `beta` (no-dividend asset).
    pub drift_rate: Option<f64>,
    /// Absolute volatility `σ(x)` for `beta_drift_general_vol` and `custom`.
    pub vol: Option<PiecewisePoly>,
    /// Absolute drift `μ(x)` for `custom`.
    pub drift: Option<PiecewisePoly>,
    /// Declared pathwise integrability of `e^{-βt}ψ(X)` and `e^{-βt}φ(X)`;
    /// `None` takes the family default.
    pub integrability_42: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GbmParams {
    pub drift_rate: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffusionModel {
    family: Family,
    drift: PiecewisePoly,
    vol: PiecewisePoly,
    beta: f64,
    integrability_42_declared: bool,
    gbm: Option<GbmParams>,
}

pub fn make_model(family: Family, params: ModelParams) -> Result<DiffusionModel> {
    let beta = params.beta;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta", format!("must be > 0, got {beta}")));
    }
    match family {
        Family::Gbm => {
            let sigma = params
                .sigma
                .ok_or_else(|| Error::invalid("sigma", "required for gbm"))?;
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::invalid("sigma", format!("must be > 0, got {sigma}")));
            }
            let drift_rate = params.drift_rate.unwrap_or(beta);
            if !drift_rate.is_finite() {
                return Err(Error::invalid("drift_rate", "must be finite"));
            }
            Ok(DiffusionModel {
                family,
                drift: PiecewisePoly::polynomial([0.0, drift_rate, 0.0, 0.0]),
                vol: PiecewisePoly::polynomial([0.0, sigma, 0.0, 0.0]),
                beta,
                integrability_42_declared: params.integrability_42.unwrap_or(true),
                gbm: Some(GbmParams { drift_rate, sigma }),
            })
        }
        Family::BetaDriftGeneralVol => {
            let vol = params
                .vol
                .ok_or_else(|| Error::invalid("vol", "required for beta_drift_general_vol"))?;
            check_vol_probe(&vol)?;
            Ok(DiffusionModel {
                family,
                drift: PiecewisePoly::polynomial([0.0, beta, 0.0, 0.0]),
                vol,
                beta,
                integrability_42_declared: params.integrability_42.unwrap_or(true),
                gbm: None,
            })
        }
        Family::Custom => {
            let vol = params
                .vol
                .ok_or_else(|| Error::invalid("vol", "required for custom"))?;
            let drift = params
                .drift
                .ok_or_else(|| Error::invalid("drift", "required for custom"))?;
            check_vol_probe(&vol)?;
            Ok(DiffusionModel {
                family,
                drift,
                vol,
                beta,
                integrability_42_declared: params.integrability_42.unwrap_or(false),
                gbm: None,
            })
        }
    }
}

// Degenerate volatility is caught at the knots and on a coarse log probe;
// the grid itself is checked again when the fundamental pair is solved.
fn check_vol_probe(vol: &PiecewisePoly) -> Result<()> {
    let mut probe: Vec<f64> = (-30..=30).map(|k| 10f64.powf(k as f64 / 5.0)).collect();
    probe.extend(vol.knots());
    for x in probe {
        let s = vol.eval(x);
        if !(s > 0.0) {
            return Err(Error::invalid(
                "vol",
                format!("volatility must be positive, σ({x}) = {s}"),
            ));
        }
    }
    Ok(())
}

impl DiffusionModel {
    pub fn gbm(beta: f64, sigma: f64) -> Result<Self> {
        make_model(
            Family::Gbm,
            ModelParams {
                beta,
                sigma: Some(sigma),
                ..Default::default()
            },
        )
    }

    pub fn beta_drift(beta: f64, vol: PiecewisePoly) -> Result<Self> {
        make_model(
            Family::BetaDriftGeneralVol,
            ModelParams {
                beta,
                vol: Some(vol),
                ..Default::default()
            },
        )
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn integrability_42_declared(&self) -> bool {
        self.integrability_42_declared
    }

    pub fn with_integrability_42(mut self, declared: bool) -> Self {
        self.integrability_42_declared = declared;
        self
    }

    pub fn gbm_params(&self) -> Option<GbmParams> {
        self.gbm
    }

    #[inline]
    pub fn drift(&self, x: f64) -> f64 {
        self.drift.eval(x)
    }

    #[inline]
    pub fn vol(&self, x: f64) -> f64 {
        self.vol.eval(x)
    }

    pub fn drift_poly(&self) -> &PiecewisePoly {
        &self.drift
    }

    pub fn vol_poly(&self) -> &PiecewisePoly {
        &self.vol
    }

    /// True when `μ(x) = βx`, the setting of the no-dividend game options.
    pub fn has_beta_drift(&self) -> bool {
        match self.family {
            Family::Gbm => self.gbm.map(|g| g.drift_rate == self.beta).unwrap_or(false),
            Family::BetaDriftGeneralVol => true,
            Family::Custom => {
                self.drift.pieces().len() == 1
                    && self.drift.pieces()[0].coeffs == [0.0, self.beta, 0.0, 0.0]
            }
        }
    }

    /// Riccati right-hand side in `s = ln x` for `ρ = d ln u / ds`.
    fn riccati(&self, s: f64, rho: f64) -> f64 {
        let x = s.exp();
        let sig = self.vol(x);
        let inv_a = 2.0 * x * x / (sig * sig);
        let b_over_a = 2.0 * x * self.drift(x) / (sig * sig) - 1.0;
        self.beta * inv_a - b_over_a * rho - rho * rho
    }

    /// Frozen-coefficient roots `(ρ−, ρ+)` and the local contraction rate.
    fn frozen_roots(&self, s: f64) -> (f64, f64, f64) {
        let x = s.exp();
        let sig = self.vol(x);
        let c = self.beta * 2.0 * x * x / (sig * sig);
        let b = 2.0 * x * self.drift(x) / (sig * sig) - 1.0;
        let disc = (b * b + 4.0 * c).sqrt();
        if b >= 0.0 {
            let minus = -0.5 * (b + disc);
            (minus, -c / minus, disc)
        } else {
            let plus = 0.5 * (-b + disc);
            (-c / plus, plus, disc)
        }
    }
}

/// `σ²(x)/2 g''(x) + μ(x) g'(x) − β g(x)` away from the kinks of `g`.
pub fn generator_apply(model: &DiffusionModel, g: &PiecewisePoly, x: f64) -> Result<f64> {
    let (v, d1, d2) = g.derivatives(x)?;
    let s = model.vol(x);
    Ok(0.5 * s * s * d2 + model.drift(x) * d1 - model.beta * v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FundamentalMethod {
    ClosedForm,
    Riccati,
}

#[derive(Debug, Clone, Copy)]
pub struct FundamentalOptions {
    pub x_ref: f64,
    pub force_numeric: bool,
    pub tol_ode: f64,
    /// `ψ(x_min)/ψ(x_ref)` and `φ(x_max)/φ(x_ref)` must fall below this for
    /// the natural-boundary trend to be considered plausible.
    pub natural_fraction: f64,
}

impl Default for FundamentalOptions {
    fn default() -> Self {
        Self {
            x_ref: 1.0,
            force_numeric: false,
            tol_ode: 1e-8,
            natural_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NaturalBoundaryTrend {
    pub psi_left_ratio: f64,
    pub phi_right_ratio: f64,
    pub plausible: bool,
}

/// Grid samples of `ψ`, `φ` and their first two derivatives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FundamentalPair {
    grid: Vec<f64>,
    psi: Vec<f64>,
    dpsi: Vec<f64>,
    d2psi: Vec<f64>,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    d2phi: Vec<f64>,
    x_ref: f64,
    method: FundamentalMethod,
    natural: NaturalBoundaryTrend,
}

impl FundamentalPair {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
    pub fn psi(&self) -> &[f64] {
        &self.psi
    }
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }
    pub fn dpsi(&self) -> &[f64] {
        &self.dpsi
    }
    pub fn dphi(&self) -> &[f64] {
        &self.dphi
    }
    pub fn x_ref(&self) -> f64 {
        self.x_ref
    }
    pub fn method(&self) -> FundamentalMethod {
        self.method
    }
    pub fn natural_trend(&self) -> NaturalBoundaryTrend {
        self.natural
    }

    /// `F = ψ/φ` at the nodes.
    pub fn transform_values(&self) -> Vec<f64> {
        self.psi.iter().zip(&self.phi).map(|(p, q)| p / q).collect()
    }

    /// The same pair with `ψ` and `φ` multiplied by positive constants.
    pub fn rescaled(&self, c_psi: f64, c_phi: f64) -> Self {
        let s = |v: &[f64], c: f64| v.iter().map(|a| a * c).collect::<Vec<_>>();
        Self {
            grid: self.grid.clone(),
            psi: s(&self.psi, c_psi),
            dpsi: s(&self.dpsi, c_psi),
            d2psi: s(&self.d2psi, c_psi),
            phi: s(&self.phi, c_phi),
            dphi: s(&self.dphi, c_phi),
            d2phi: s(&self.d2phi, c_phi),
            x_ref: self.x_ref,
            method: self.method,
            natural: self.natural,
        }
    }

    /// Largest pointwise relative residual `|𝓛u| / (|σ²u''/2| + |μu'| + |βu|)`
    /// over interior nodes, for `u = ψ` and `u = φ`.
    pub fn max_residual(&self, model: &DiffusionModel) -> f64 {
        let n = self.grid.len();
        let mut worst: f64 = 0.0;
        for i in 1..n.saturating_sub(1) {
            let x = self.grid[i];
            let s = model.vol(x);
            let (a, m, b) = (0.5 * s * s, model.drift(x), model.beta);
            for (u, du, d2u) in [
                (self.psi[i], self.dpsi[i], self.d2psi[i]),
                (self.phi[i], self.dphi[i], self.d2phi[i]),
            ] {
                let terms = [a * d2u, m * du, -b * u];
                let r: f64 = terms.iter().sum();
                let scale: f64 = terms.iter().map(|t| t.abs()).sum();
                if scale > 0.0 {
                    worst = worst.max(r.abs() / scale);
                }
            }
        }
        worst
    }

    /// Positivity, strict monotonicity of `ψ`, `φ`, `F` and the ODE residual.
    pub fn check_invariants(&self, model: &DiffusionModel, tol_ode: f64) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(i) = self.psi.iter().chain(&self.phi).position(|v| !(*v > 0.0)) {
            out.push(format!("non-positive fundamental value at flat index {i}"));
        }
        let f = self.transform_values();
        for i in 1..self.grid.len() {
            if !(self.psi[i] > self.psi[i - 1]) {
                out.push(format!("psi not increasing at node {i}"));
            }
            if !(self.phi[i] < self.phi[i - 1]) {
                out.push(format!("phi not decreasing at node {i}"));
            }
            if !(f[i] > f[i - 1]) {
                out.push(format!("F not increasing at node {i}"));
            }
        }
        let r = self.max_residual(model);
        if !(r <= tol_ode) {
            out.push(format!("ODE residual {r:e} exceeds {tol_ode:e}"));
        }
        out
    }
}

pub fn solve_fundamental(
    model: &DiffusionModel,
    grid: &[f64],
    opts: FundamentalOptions,
) -> Result<FundamentalPair> {
    crate::grid::check_increasing(grid)?;
    if grid.len() < 3 {
        return Err(Error::Grid(format!(
            "need at least 3 nodes, got {}",
            grid.len()
        )));
    }
    if !(grid[0] > 0.0) {
        return Err(Error::Grid("grid must lie in (0, inf)".into()));
    }
    if !(opts.x_ref > 0.0 && opts.x_ref.is_finite()) {
        return Err(Error::invalid("x_ref", "must be positive"));
    }
    if let Some(x) = grid.iter().find(|x| !(model.vol(**x) > 0.0)) {
        return Err(Error::invalid(
            "vol",
            format!(
                "volatility must be positive on the grid, σ({x}) = {}",
                model.vol(*x)
            ),
        ));
    }
    let mut pair = match (model.gbm, opts.force_numeric) {
        (Some(g), false) => closed_form_gbm(model.beta, g, grid, opts.x_ref),
        _ => riccati_pair(model, grid, opts.x_ref)?,
    };
    let fails = pair.check_invariants(model, opts.tol_ode);
    if !fails.is_empty() {
        return Err(Error::ConvergenceFailure(fails.join("; ")));
    }
    let n = grid.len();
    // ψ(x_ref) = φ(x_ref) = 1, whether or not x_ref is a node
    let psi_left_ratio = pair.psi[0];
    let phi_right_ratio = pair.phi[n - 1];
    pair.natural = NaturalBoundaryTrend {
        psi_left_ratio,
        phi_right_ratio,
        plausible: psi_left_ratio < opts.natural_fraction
            && phi_right_ratio < opts.natural_fraction,
    };
    Ok(pair)
}

/// Exponents `(r−, r+)` of `x^r` solving `σ²/2 r(r−1) + m r − β = 0`.
pub fn gbm_exponents(beta: f64, g: GbmParams) -> (f64, f64) {
    let a = 0.5 * g.sigma * g.sigma;
    if g.drift_rate == beta {
        return (-beta / a, 1.0);
    }
    let b = g.drift_rate - a;
    let disc = (b * b + 4.0 * a * beta).sqrt();
    let q = -0.5 * (b + b.signum() * disc + if b == 0.0 { disc } else { 0.0 });
    let (r1, r2) = (q / a, -beta / q);
    (r1.min(r2), r1.max(r2))
}

fn closed_form_gbm(beta: f64, g: GbmParams, grid: &[f64], x_ref: f64) -> FundamentalPair {
    let (rm, rp) = gbm_exponents(beta, g);
    let pow = |x: f64, r: f64| {
        if r == 1.0 {
            x / x_ref
        } else {
            (x / x_ref).powf(r)
        }
    };
    let mut p = FundamentalPair {
        grid: grid.to_vec(),
        psi: Vec::with_capacity(grid.len()),
        dpsi: Vec::with_capacity(grid.len()),
        d2psi: Vec::with_capacity(grid.len()),
        phi: Vec::with_capacity(grid.len()),
        dphi: Vec::with_capacity(grid.len()),
        d2phi: Vec::with_capacity(grid.len()),
        x_ref,
        method: FundamentalMethod::ClosedForm,
        natural: NaturalBoundaryTrend {
            psi_left_ratio: f64::NAN,
            phi_right_ratio: f64::NAN,
            plausible: false,
        },
    };
    for &x in grid {
        let u = pow(x, rp);
        p.psi.push(u);
        p.dpsi.push(rp * u / x);
        p.d2psi.push(rp * (rp - 1.0) * u / (x * x));
        let v = pow(x, rm);
        p.phi.push(v);
        p.dphi.push(rm * v / x);
        p.d2phi.push(rm * (rm - 1.0) * v / (x * x));
    }
    p
}

const RICCATI_TOL: Tolerances = Tolerances {
    rtol: 1e-13,
    atol: 1e-15,
    max_steps: 2_000_000,
};

/// Contraction budget (in e-folds) spent before the first/last grid node.
const WARMUP_EFOLDS: f64 = 45.0;

fn riccati_pair(model: &DiffusionModel, grid: &[f64], x_ref: f64) -> Result<FundamentalPair> {
    // evaluation points in s = ln x: all nodes plus x_ref
    let mut pts: Vec<f64> = grid.iter().map(|x| x.ln()).collect();
    let s_ref = x_ref.ln();
    let ref_pos = pts.partition_point(|s| *s < s_ref);
    let ref_on_grid = ref_pos < pts.len() && pts[ref_pos] == s_ref;
    if !ref_on_grid {
        pts.insert(ref_pos, s_ref);
    }

    let rhs = |s: f64, y: &ode::State| [model.riccati(s, y[0]), y[0]];

    let sweep = |increasing: bool| -> Result<Vec<(f64, f64)>> {
        let order: Vec<usize> = if increasing {
            (0..pts.len()).collect()
        } else {
            (0..pts.len()).rev().collect()
        };
        let first = pts[order[0]];
        let dir = if increasing { -1.0 } else { 1.0 };
        // walk outward until the branch has contracted WARMUP_EFOLDS times
        let mut s0 = first;
        let mut acc = 0.0;
        let mut guard = 0;
        while acc < WARMUP_EFOLDS && guard < 4000 {
            let (_, _, rate) = model.frozen_roots(s0);
            let step = 0.25;
            acc += rate * step;
            s0 += dir * step;
            guard += 1;
        }
        let (rm, rp, _) = model.frozen_roots(s0);
        let mut y = [if increasing { rp } else { rm }, 0.0];
        let mut h = 0.05;
        let mut t = s0;
        let mut out = vec![(0.0, 0.0); pts.len()];
        for &k in &order {
            y = ode::integrate(&rhs, t, y, pts[k], &mut h, RICCATI_TOL)
                .map_err(Error::ConvergenceFailure)?;
            t = pts[k];
            if !y[0].is_finite() || !y[1].is_finite() {
                return Err(Error::ConvergenceFailure(format!(
                    "non-finite Riccati state at x = {}",
                    t.exp()
                )));
            }
            if increasing && !(y[0] > 0.0) || !increasing && !(y[0] < 0.0) {
                return Err(Error::ConvergenceFailure(format!(
                    "{} branch lost monotonicity at x = {} (rho = {})",
                    if increasing { "psi" } else { "phi" },
                    t.exp(),
                    y[0]
                )));
            }
            out[k] = (y[0], y[1]);
        }
        Ok(out)
    };

    let up = sweep(true)?;
    let down = sweep(false)?;
    let (l_psi_ref, l_phi_ref) = (up[ref_pos].1, down[ref_pos].1);

    let n = grid.len();
    let mut p = FundamentalPair {
        grid: grid.to_vec(),
        psi: Vec::with_capacity(n),
        dpsi: Vec::with_capacity(n),
        d2psi: Vec::with_capacity(n),
        phi: Vec::with_capacity(n),
        dphi: Vec::with_capacity(n),
        d2phi: Vec::with_capacity(n),
        x_ref,
        method: FundamentalMethod::Riccati,
        natural: NaturalBoundaryTrend {
            psi_left_ratio: f64::NAN,
            phi_right_ratio: f64::NAN,
            plausible: false,
        },
    };
    for (i, &x) in grid.iter().enumerate() {
        let k = if !ref_on_grid && i >= ref_pos {
            i + 1
        } else {
            i
        };
        let s = pts[k];
        for (branch, lref, vals) in [(&up, l_psi_ref, 0), (&down, l_phi_ref, 1)] {
            let (rho, l) = branch[k];
            let u = (l - lref).exp();
            let rho_s = model.riccati(s, rho);
            let du = rho * u / x;
            let d2u = u * (rho_s + rho * rho - rho) / (x * x);
            if vals == 0 {
                p.psi.push(u);
                p.dpsi.push(du);
                p.d2psi.push(d2u);
            } else {
                p.phi.push(u);
                p.dphi.push(du);
                p.d2phi.push(d2u);
            }
        }
    }
    Ok(p)
}

/// `x ∫_x^∞ u^{-2} exp(−∫_1^u 2βz/σ²(z) dz) du`, the decreasing solution for
/// models with `μ(x) = βx` (unnormalised).
///
/// The outer integral is accumulated over panels of width 1/2 in `ln u` and
/// stops once a panel adds less than `1e-12` of the running total; reaching
/// `u = 1e6·x` first is reported as non-convergence.
pub fn phi_integral(model: &DiffusionModel, x: f64) -> Result<f64> {
    if !model.has_beta_drift() {
        return Err(Error::ParameterDomain(
            "phi_integral requires drift μ(x) = βx".into(),
        ));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::invalid("x", format!("must be positive, got {x}")));
    }
    let beta = model.beta;
    // ∫ 2βz/σ²(z) dz in t = ln z
    let inner = |t: f64| {
        let z = t.exp();
        let s = model.vol(z);
        2.0 * beta * z * z / (s * s)
    };
    let cumulative = |a: f64, b: f64| -> f64 { quad::adaptive(inner, a, b, 1e-14).0 };

    let t0 = x.ln();
    let t_cap = t0 + 1e6f64.ln();
    let width = 0.5;
    let mut j_a = cumulative(0.0, t0);
    let mut t_a = t0;
    let mut total = 0.0;
    loop {
        let t_b = t_a + width;
        let outer = |t: f64| {
            let j = j_a + cumulative(t_a, t);
            (-t - j).exp()
        };
        let (panel, _) = quad::adaptive(outer, t_a, t_b, 1e-13);
        total += panel;
        if panel <= 1e-12 * total {
            break;
        }
        if t_b >= t_cap {
            return Err(Error::QuadratureNonconvergence {
                bound: t_cap.exp(),
                last: panel,
                accumulated: total,
            });
        }
        j_a += cumulative(t_a, t_b);
        t_a = t_b;
    }
    Ok(x * total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gbm() -> DiffusionModel {
        DiffusionModel::gbm(0.05, 0.3).unwrap()
    }

    #[test]
    fn gbm_family_formulas() {
        let m = gbm();
        assert_eq!(m.drift(2.0), 0.1);
        assert!((m.vol(2.0) - 0.6).abs() < 1e-15);
        assert!(m.has_beta_drift());
    }

    #[test]
    fn degenerate_volatility_rejected() {
        assert!(matches!(
            DiffusionModel::gbm(0.05, 0.0),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            DiffusionModel::gbm(-0.05, 0.3),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn general_vol_family_echoes_inputs() {
        let m = DiffusionModel::beta_drift(0.05, PiecewisePoly::polynomial([1.0, 0.2, 0.0, 0.0]))
            .unwrap();
        assert_eq!(m.drift(3.0), 0.15000000000000002);
        assert!((m.vol(3.0) - 1.6).abs() < 1e-15);
        assert_eq!(m.family(), Family::BetaDriftGeneralVol);
    }

    #[test]
    fn gbm_closed_forms() {
        let grid = crate::grid::log_spaced(0.25, 4.0, 9).unwrap();
        let p = solve_fundamental(&gbm(), &grid, FundamentalOptions::default()).unwrap();
        for (i, &x) in grid.iter().enumerate() {
            assert!((p.psi()[i] - x).abs() < 1e-15);
            let want = x.powf(-10.0 / 9.0);
            assert!((p.phi()[i] / want - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn generator_examples() {
        let m = gbm();
        let call = PiecewisePoly::call(100.0);
        assert!((generator_apply(&m, &call, 150.0).unwrap() - 5.0).abs() < 1e-12);
        let id = PiecewisePoly::polynomial([0.0, 1.0, 0.0, 0.0]);
        assert_eq!(generator_apply(&m, &id, 7.0).unwrap(), 0.0);
        let c = PiecewisePoly::constant(3.0);
        assert!((generator_apply(&m, &c, 2.0).unwrap() + 0.15).abs() < 1e-15);
        assert!(matches!(
            generator_apply(&m, &call, 100.0),
            Err(Error::KinkPoint { .. })
        ));
    }

    #[test]
    fn phi_integral_gbm_closed_form() {
        let v = phi_integral(&gbm(), 1.0).unwrap();
        assert!((v - 9.0 / 19.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn phi_integral_requires_beta_drift() {
        let m = make_model(
            Family::Gbm,
            ModelParams {
                beta: 0.05,
                sigma: Some(0.3),
                drift_rate: Some(0.01),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(matches!(
            phi_integral(&m, 1.0),
            Err(Error::ParameterDomain(_))
        ));
    }

    #[test]
    fn exponents_general_drift() {
        let g = GbmParams {
            drift_rate: 0.02,
            sigma: 0.25,
        };
        let (rm, rp) = gbm_exponents(0.05, g);
        for r in [rm, rp] {
            let q = 0.5 * 0.0625 * r * (r - 1.0) + 0.02 * r - 0.05;
            assert!(q.abs() < 1e-14);
        }
        assert!(rm < 0.0 && rp > 1.0);
    }

    #[test]
    fn riccati_path_matches_gbm_closed_forms() {
        let grid = crate::grid::log_spaced(1.0 / 16.0, 16.0, 401).unwrap();
        let opts = FundamentalOptions {
            force_numeric: true,
            ..Default::default()
        };
        let p = solve_fundamental(&gbm(), &grid, opts).unwrap();
        assert_eq!(p.method(), FundamentalMethod::Riccati);
        for (i, &x) in grid.iter().enumerate() {
            assert!((p.psi()[i] / x - 1.0).abs() < 1e-6);
            assert!((p.phi()[i] / x.powf(-10.0 / 9.0) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn riccati_phi_matches_quadrature() {
        let vol = PiecewisePoly::polynomial([1.0, 0.2, 0.0, 0.0]);
        let m = DiffusionModel::beta_drift(0.05, vol).unwrap();
        let grid = crate::grid::log_spaced(0.5, 8.0, 41).unwrap();
        let p = solve_fundamental(&m, &grid, FundamentalOptions::default()).unwrap();
        let q1 = phi_integral(&m, 1.0).unwrap();
        for (i, &x) in grid.iter().enumerate() {
            let q = phi_integral(&m, x).unwrap() / q1;
            assert!((p.phi()[i] / q - 1.0).abs() < 1e-5, "x={x}");
        }
    }

    #[test]
    fn stored_derivatives_agree_with_differences() {
        let vol = PiecewisePoly::polynomial([1.0, 0.2, 0.0, 0.0]);
        let m = DiffusionModel::beta_drift(0.05, vol).unwrap();
        let grid = crate::grid::log_spaced(0.5, 8.0, 2001).unwrap();
        let p = solve_fundamental(&m, &grid, FundamentalOptions::default()).unwrap();
        for i in (50..1950).step_by(97) {
            let (a, b) = (grid[i - 1], grid[i + 1]);
            let fd = (p.phi()[i + 1] - p.phi()[i - 1]) / (b - a);
            assert!((fd / p.dphi()[i] - 1.0).abs() < 1e-4);
            let fd = (p.psi()[i + 1] - p.psi()[i - 1]) / (b - a);
            assert!((fd / p.dpsi()[i] - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn phi_integral_power_law_and_monotone() {
        let m = gbm();
        let q1 = phi_integral(&m, 1.0).unwrap();
        for x in [0.5, 2.0, 4.0] {
            let r = phi_integral(&m, x).unwrap() / q1;
            assert!((r / x.powf(-10.0 / 9.0) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn natural_trend_flagged_on_narrow_grid() {
        let grid = crate::grid::log_spaced(0.5, 2.0, 11).unwrap();
        let p = solve_fundamental(&gbm(), &grid, FundamentalOptions::default()).unwrap();
        assert!(!p.natural_trend().plausible);
        let grid = crate::grid::log_spaced(1e-3, 1e3, 11).unwrap();
        let p = solve_fundamental(&gbm(), &grid, FundamentalOptions::default()).unwrap();
        assert!(p.natural_trend().plausible);
    }
}
