//! Sectioned `key = value` problem files.
//!
//! ```text
//! [model]
//! family = gbm
//! beta = 0.05
//! sigma = 0.3
//!
//! [payoff]
//! g1 = call(100)
//! g2 = g1 + 5
//!
//! [grid]
//! x_min = 6.25
//! x_max = 1600
//! n_points = 4001
//! ```
//!
//! Payoffs and coefficient functions are either an expression (`call(K)`,
//! `put(K)`, `constant(c)`, `poly(c0, c1, c2, c3)`; for `g2` also `g1 + c`
//! and `g1 * c`) or a `[payoff.g1]`-style section of
//! `piece = (lo, hi, c0, c1, c2, c3)` lines. `payoff.catalog` names a preset
//! instead; `strike`, `eps` and `c` then override its parameters.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::catalog::{self, CatalogEntry};
use crate::diffusion::{make_model, DiffusionModel, Family, ModelParams};
use crate::envelope::BoundaryPolicy;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::pipeline::Problem;
use crate::poly::{Piece, PiecewisePoly};
use crate::simulate::{McParams, ProbeSet};
use crate::transform::PayoffPair;

/// A payoff or coefficient function before `g1` is known.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionSpec {
    Poly(PiecewisePoly),
    G1Plus(f64),
    G1Times(f64),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ModelSection {
    pub family: Option<String>,
    pub beta: Option<f64>,
    pub sigma: Option<f64>,
    pub drift_rate: Option<f64>,
    pub vol: Option<PiecewisePoly>,
    pub drift: Option<PiecewisePoly>,
    pub integrability_42: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PayoffSection {
    pub catalog: Option<String>,
    pub strike: Option<f64>,
    pub eps: Option<f64>,
    pub c: Option<f64>,
    pub g1: Option<FunctionSpec>,
    pub g2: Option<FunctionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSection {
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub n_points: usize,
    pub x_ref: f64,
    pub pad_factor: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            x_min: None,
            x_max: None,
            n_points: 2001,
            x_ref: 1.0,
            pad_factor: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSection {
    pub tol_fix_rel: f64,
    pub max_iter: usize,
    pub tol_ode: f64,
    pub tol_contact: f64,
    pub gap_threshold: f64,
    pub boundary: BoundaryPolicy,
    pub force_numeric: bool,
}

impl Default for SolveSection {
    fn default() -> Self {
        let p = Problem::new(
            DiffusionModel::gbm(1.0, 1.0).expect("valid"),
            PayoffPair::new(PiecewisePoly::constant(0.0), PiecewisePoly::constant(0.0))
                .expect("valid"),
            GridSpec::new(1.0, 2.0, 101),
        );
        Self {
            tol_fix_rel: p.envelope.tol_fix_rel,
            max_iter: p.envelope.max_iter,
            tol_ode: p.fundamental.tol_ode,
            tol_contact: p.tol_contact,
            gap_threshold: p.gap_threshold,
            boundary: p.policy,
            force_numeric: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSection {
    pub enabled: bool,
    pub params: McParams,
    pub x0: Option<f64>,
    pub probes: ProbeSet,
    /// Repeat the main estimate at `dt/2` and `dt/4`.
    pub halving: bool,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            enabled: false,
            params: McParams::default(),
            x0: None,
            probes: ProbeSet::default(),
            halving: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub csv: bool,
    pub json: bool,
    pub plot: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("."),
            csv: true,
            json: true,
            plot: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Config {
    pub model: ModelSection,
    pub payoff: PayoffSection,
    pub grid: GridSection,
    pub solve: SolveSection,
    pub mc: McSection,
    pub output: OutputSection,
}

/// A validated problem plus where it came from.
#[derive(Debug, Clone)]
pub struct Setup {
    pub problem: Problem,
    pub catalog: Option<CatalogEntry>,
    /// A game call with `ε ≥ K`, which is an American call.
    pub american_reduction: bool,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn number(line: usize, s: &str) -> Result<f64> {
    let t = s.trim();
    let v = match t {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        _ => t.parse::<f64>(),
    };
    v.map_err(|_| err(line, format!("expected a number, got {t:?}")))
}

fn count(line: usize, s: &str) -> Result<usize> {
    s.trim().parse::<usize>().map_err(|_| {
        err(
            line,
            format!("expected a nonnegative integer, got {:?}", s.trim()),
        )
    })
}

fn boolean(line: usize, s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        t => Err(err(line, format!("expected true or false, got {t:?}"))),
    }
}

fn list(line: usize, s: &str) -> Result<Vec<f64>> {
    let t = s.trim();
    if t.is_empty() {
        return Ok(Vec::new());
    }
    t.split(',').map(|p| number(line, p)).collect()
}

/// `name(a, b, …)` → `(name, [a, b, …])`
fn call_form(line: usize, s: &str) -> Result<Option<(String, Vec<f64>)>> {
    let t = s.trim();
    let (Some(open), true) = (t.find('('), t.ends_with(')')) else {
        return Ok(None);
    };
    let name = t[..open].trim().to_string();
    let args = list(line, &t[open + 1..t.len() - 1])?;
    Ok(Some((name, args)))
}

fn function(line: usize, s: &str, allow_g1: bool) -> Result<FunctionSpec> {
    let t = s.trim();
    if let Some(rest) = t.strip_prefix("g1") {
        if !allow_g1 {
            return Err(err(line, "only g2 may refer to g1"));
        }
        let rest = rest.trim();
        if rest.is_empty() {
            return Ok(FunctionSpec::G1Times(1.0));
        }
        let (op, v) = rest.split_at(1);
        let v = number(line, v)?;
        return match op {
            "+" => Ok(FunctionSpec::G1Plus(v)),
            "*" => Ok(FunctionSpec::G1Times(v)),
            _ => Err(err(
                line,
                format!("expected `g1 + c` or `g1 * c`, got {t:?}"),
            )),
        };
    }
    let Some((name, args)) = call_form(line, t)? else {
        return Err(err(line, format!("cannot read function {t:?}")));
    };
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(err(
                line,
                format!("{name} takes {n} argument(s), got {}", args.len()),
            ))
        }
    };
    let p = match name.as_str() {
        "call" => {
            arity(1)?;
            PiecewisePoly::call(args[0])
        }
        "put" => {
            arity(1)?;
            PiecewisePoly::put(args[0])
        }
        "constant" => {
            arity(1)?;
            PiecewisePoly::constant(args[0])
        }
        "poly" => {
            if args.is_empty() || args.len() > 4 {
                return Err(err(line, "poly takes 1 to 4 coefficients"));
            }
            let mut c = [0.0; 4];
            c[..args.len()].copy_from_slice(&args);
            PiecewisePoly::polynomial(c)
        }
        _ => return Err(err(line, format!("unknown function {name:?}"))),
    };
    Ok(FunctionSpec::Poly(p))
}

fn piece(line: usize, s: &str) -> Result<Piece> {
    let t = s.trim();
    let inner = t
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| {
            err(
                line,
                format!("piece must look like (lo, hi, c0, c1, c2, c3), got {t:?}"),
            )
        })?;
    let v = list(line, inner)?;
    if !(3..=6).contains(&v.len()) {
        return Err(err(
            line,
            format!(
                "piece needs lo, hi and 1 to 4 coefficients, got {} values",
                v.len()
            ),
        ));
    }
    let mut c = [0.0; 4];
    c[..v.len() - 2].copy_from_slice(&v[2..]);
    Ok(Piece::new(v[0], v[1], c))
}

struct Entry {
    line: usize,
    key: String,
    value: String,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

fn split_sections(text: &str) -> Result<Vec<Section>> {
    let mut out: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.split('#').next().unwrap_or("").trim();
        if t.is_empty() {
            continue;
        }
        if let Some(name) = t.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(line, "unterminated section header"))?
                .trim();
            if out.iter().any(|s| s.name == name) {
                return Err(err(line, format!("section [{name}] appears twice")));
            }
            out.push(Section {
                name: name.to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, got {t:?}")))?;
        let section = out
            .last_mut()
            .ok_or_else(|| err(line, "key outside of any section"))?;
        let key = k.trim().to_string();
        if key != "piece" && section.entries.iter().any(|e| e.key == key) {
            return Err(err(
                line,
                format!("duplicate key `{key}` in [{}]", section.name),
            ));
        }
        section.entries.push(Entry {
            line,
            key,
            value: v.trim().to_string(),
        });
    }
    Ok(out)
}

fn pieces(s: &Section) -> Result<PiecewisePoly> {
    let mut ps = Vec::new();
    for e in &s.entries {
        if e.key != "piece" {
            return Err(err(
                e.line,
                format!("unknown key `{}` in [{}]", e.key, s.name),
            ));
        }
        ps.push(piece(e.line, &e.value)?);
    }
    PiecewisePoly::new(ps).map_err(|e| err(s.line, format!("[{}]: {e}", s.name)))
}

fn unknown(e: &Entry, section: &str) -> Error {
    err(e.line, format!("unknown key `{}` in [{section}]", e.key))
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Config::default();
        for s in split_sections(text)? {
            match s.name.as_str() {
                "model" => c.read_model(&s)?,
                "model.vol" => c.model.vol = Some(pieces(&s)?),
                "model.drift" => c.model.drift = Some(pieces(&s)?),
                "payoff" => c.read_payoff(&s)?,
                "payoff.g1" => c.payoff.g1 = Some(FunctionSpec::Poly(pieces(&s)?)),
                "payoff.g2" => c.payoff.g2 = Some(FunctionSpec::Poly(pieces(&s)?)),
                "grid" => c.read_grid(&s)?,
                "solve" => c.read_solve(&s)?,
                "mc" => c.read_mc(&s)?,
                "output" => c.read_output(&s)?,
                other => return Err(err(s.line, format!("unknown section [{other}]"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    fn read_model(&mut self, s: &Section) -> Result<()> {
        let m = &mut self.model;
        for e in &s.entries {
            let (l, v) = (e.line, e.value.as_str());
            match e.key.as_str() {
                "family" => {
                    Family::parse(v).ok_or_else(|| err(l, format!("unknown family {v:?}")))?;
                    m.family = Some(v.to_string());
                }
                "beta" => m.beta = Some(number(l, v)?),
                "sigma" => m.sigma = Some(number(l, v)?),
                "drift_rate" => m.drift_rate = Some(number(l, v)?),
                "integrability_42" => m.integrability_42 = Some(boolean(l, v)?),
                "vol" | "drift" => {
                    let FunctionSpec::Poly(p) = function(l, v, false)? else {
                        unreachable!("g1 forms are rejected")
                    };
                    if e.key == "vol" {
                        m.vol = Some(p);
                    } else {
                        m.drift = Some(p);
                    }
                }
                _ => return Err(unknown(e, "model")),
            }
        }
        Ok(())
    }

    fn read_payoff(&mut self, s: &Section) -> Result<()> {
        let p = &mut self.payoff;
        for e in &s.entries {
            let (l, v) = (e.line, e.value.as_str());
            match e.key.as_str() {
                "catalog" => p.catalog = Some(v.trim_matches('"').to_string()),
                "strike" => p.strike = Some(number(l, v)?),
                "eps" => p.eps = Some(number(l, v)?),
                "c" => p.c = Some(number(l, v)?),
                "g1" => p.g1 = Some(function(l, v, false)?),
                "g2" => p.g2 = Some(function(l, v, true)?),
                _ => return Err(unknown(e, "payoff")),
            }
        }
        Ok(())
    }

    fn read_grid(&mut self, s: &Section) -> Result<()> {
        let g = &mut self.grid;
        for e in &s.entries {
            let (l, v) = (e.line, e.value.as_str());
            match e.key.as_str() {
                "x_min" => g.x_min = Some(number(l, v)?),
                "x_max" => g.x_max = Some(number(l, v)?),
                "n_points" => g.n_points = count(l, v)?,
                "x_ref" | "normalization_point" => g.x_ref = number(l, v)?,
                "pad_factor" => g.pad_factor = Some(number(l, v)?),
                _ => return Err(unknown(e, "grid")),
            }
        }
        Ok(())
    }

    fn read_solve(&mut self, s: &Section) -> Result<()> {
        let o = &mut self.solve;
        for e in &s.entries {
            let (l, v) = (e.line, e.value.as_str());
            match e.key.as_str() {
                "tol_fix_rel" => o.tol_fix_rel = number(l, v)?,
                "max_iter" => o.max_iter = count(l, v)?,
                "tol_ode" => o.tol_ode = number(l, v)?,
                "tol_contact" => o.tol_contact = number(l, v)?,
                "gap_threshold" => o.gap_threshold = number(l, v)?,
                "force_numeric" => o.force_numeric = boolean(l, v)?,
                "boundary" => {
                    o.boundary = match v {
                        "natural" => BoundaryPolicy::Natural,
                        "pinned" => BoundaryPolicy::Pinned,
                        _ => {
                            return Err(err(
                                l,
                                format!("boundary must be natural or pinned, got {v:?}"),
                            ))
                        }
                    }
                }
                _ => return Err(unknown(e, "solve")),
            }
        }
        Ok(())
    }

    fn read_mc(&mut self, s: &Section) -> Result<()> {
        let m = &mut self.mc;
        for e in &s.entries {
            let (l, v) = (e.line, e.value.as_str());
            match e.key.as_str() {
                "enabled" => m.enabled = boolean(l, v)?,
                "n_paths" => m.params.n_paths = count(l, v)?,
                "dt" => m.params.dt = number(l, v)?,
                "horizon" => m.params.horizon = Some(number(l, v)?),
                "seed" => {
                    m.params.seed = v
                        .parse()
                        .map_err(|_| err(l, format!("seed must be a u64, got {v:?}")))?
                }
                "x0" => m.x0 = Some(number(l, v)?),
                "buyer_thresholds" => m.probes.buyer_thresholds = list(l, v)?,
                "seller_thresholds" => m.probes.seller_thresholds = list(l, v)?,
                "random_probes" => m.probes.random = count(l, v)?,
                "probe_seed" => {
                    m.probes.random_seed = v
                        .parse()
                        .map_err(|_| err(l, format!("probe_seed must be a u64, got {v:?}")))?
                }
                "ladder_times" => m.probes.ladder_times = list(l, v)?,
                "halving" => m.halving = boolean(l, v)?,
                _ => return Err(unknown(e, "mc")),
            }
        }
        Ok(())
    }

    fn read_output(&mut self, s: &Section) -> Result<()> {
        let o = &mut self.output;
        for e in &s.entries {
            let (l, v) = (e.line, e.value.as_str());
            match e.key.as_str() {
                "dir" => o.dir = PathBuf::from(v.trim_matches('"')),
                "formats" => {
                    o.csv = false;
                    o.json = false;
                    for f in v.split(',').map(str::trim) {
                        match f {
                            "csv" => o.csv = true,
                            "json" => o.json = true,
                            _ => return Err(err(l, format!("unknown format {f:?}"))),
                        }
                    }
                }
                "plot" => o.plot = boolean(l, v)?,
                _ => return Err(unknown(e, "output")),
            }
        }
        Ok(())
    }

    /// Checks that do not need the model built; run again after overrides.
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.n_points < 101 {
            return Err(err(
                0,
                format!("grid.n_points must be >= 101, got {}", g.n_points),
            ));
        }
        if let (Some(a), Some(b)) = (g.x_min, g.x_max) {
            if !(0.0 < a && a < b && b.is_finite()) {
                return Err(err(
                    0,
                    format!("need 0 < x_min < x_max < inf, got [{a}, {b}]"),
                ));
            }
        }
        let p = &self.payoff;
        if p.catalog.is_none() && (p.g1.is_none() || p.g2.is_none()) {
            return Err(err(0, "payoff needs `catalog` or both g1 and g2"));
        }
        if p.catalog.is_some() && (p.g1.is_some() || p.g2.is_some()) {
            return Err(err(0, "payoff takes either `catalog` or g1/g2, not both"));
        }
        if p.catalog.is_none() && self.model.family.is_none() {
            return Err(err(0, "model.family is required without a catalog entry"));
        }
        Ok(())
    }

    fn model_params(&self, default_beta: Option<f64>) -> Result<ModelParams> {
        let m = &self.model;
        let beta = m
            .beta
            .or(default_beta)
            .ok_or_else(|| err(0, "model.beta is required"))?;
        Ok(ModelParams {
            beta,
            sigma: m.sigma,
            drift_rate: m.drift_rate,
            vol: m.vol.clone(),
            drift: m.drift.clone(),
            integrability_42: m.integrability_42,
        })
    }

    fn build_model(&self, default: Option<&DiffusionModel>) -> Result<DiffusionModel> {
        let family = match (&self.model.family, default) {
            (Some(f), _) => Family::parse(f).expect("checked on parse"),
            (None, Some(d)) => d.family(),
            (None, None) => return Err(err(0, "model.family is required")),
        };
        let mut params = self.model_params(default.map(|d| d.beta()))?;
        if let (Some(d), Family::Gbm) = (default, family) {
            let g = d.gbm_params().expect("catalog models are gbm");
            params.sigma = params.sigma.or(Some(g.sigma));
        }
        make_model(family, params)
    }

    fn payoffs(&self) -> Result<PayoffPair> {
        let (Some(FunctionSpec::Poly(g1)), Some(g2)) = (&self.payoff.g1, &self.payoff.g2) else {
            return Err(err(0, "g1 must be an explicit function"));
        };
        let g2 = match g2 {
            FunctionSpec::Poly(p) => p.clone(),
            FunctionSpec::G1Plus(c) => g1.plus_constant(*c),
            FunctionSpec::G1Times(c) => g1.scaled(*c),
        };
        PayoffPair::new(g1.clone(), g2)
    }

    /// Builds the model, payoffs and grid.
    pub fn setup(&self) -> Result<Setup> {
        self.validate()?;
        let p = &self.payoff;
        let mut american_reduction = false;
        let (model, payoffs, catalog, window) = match p.catalog.as_deref() {
            Some(name) => {
                let base = catalog::preset(name)?;
                let model = self.build_model(Some(&base.model))?;
                let k = p.strike.unwrap_or(base.strike);
                let entry = match name {
                    "game_call" => {
                        let eps = p.eps.unwrap_or(match base.closed_form {
                            catalog::ClosedForm::GameCall { eps, .. } => eps,
                            _ => unreachable!("game_call preset"),
                        });
                        if eps >= k && model.has_beta_drift() {
                            american_reduction = true;
                            let g1 = PiecewisePoly::call(k);
                            (PayoffPair::new(g1.clone(), g1.plus_constant(eps))?, None)
                        } else {
                            let e = catalog::game_call(k, eps, model.clone())?;
                            (e.payoffs.clone(), Some(e))
                        }
                    }
                    _ => {
                        let c = p.c.unwrap_or(match base.closed_form {
                            catalog::ClosedForm::ScaledCallCase1 { c, .. }
                            | catalog::ClosedForm::ScaledCallCase2 { c, .. } => c,
                            _ => unreachable!("scaled_call preset"),
                        });
                        let g = model
                            .gbm_params()
                            .ok_or_else(|| err(0, "scaled_call needs a gbm model"))?;
                        let e = catalog::scaled_call(k, c, model.beta(), g.sigma)?;
                        (e.payoffs.clone(), Some(e))
                    }
                };
                let (payoffs, entry) = entry;
                let model = match &entry {
                    Some(e) => e
                        .model
                        .clone()
                        .with_integrability_42(model.integrability_42_declared()),
                    None => model,
                };
                (model, payoffs, entry, (k / 16.0, k * 16.0))
            }
            None => {
                if p.strike.is_some() || p.eps.is_some() || p.c.is_some() {
                    return Err(err(0, "strike, eps and c only apply to catalog entries"));
                }
                let model = self.build_model(None)?;
                let payoffs = self.payoffs()?;
                let (Some(a), Some(b)) = (self.grid.x_min, self.grid.x_max) else {
                    return Err(err(
                        0,
                        "grid.x_min and grid.x_max are required without a catalog entry",
                    ));
                };
                (model, payoffs, None, (a, b))
            }
        };
        let g = &self.grid;
        let (a, b) = (g.x_min.unwrap_or(window.0), g.x_max.unwrap_or(window.1));
        if !(0.0 < a && a < b && b.is_finite()) {
            return Err(err(
                0,
                format!("need 0 < x_min < x_max < inf, got [{a}, {b}]"),
            ));
        }
        let mut spec = GridSpec::new(a, b, g.n_points);
        if let Some(f) = g.pad_factor {
            spec = spec.with_padding(f);
        }
        let mut problem = Problem::new(model, payoffs, spec);
        problem.fundamental.x_ref = g.x_ref;
        problem.fundamental.tol_ode = self.solve.tol_ode;
        problem.fundamental.force_numeric = self.solve.force_numeric;
        problem.envelope.tol_fix_rel = self.solve.tol_fix_rel;
        problem.envelope.max_iter = self.solve.max_iter;
        problem.policy = self.solve.boundary;
        problem.tol_contact = self.solve.tol_contact;
        problem.gap_threshold = self.solve.gap_threshold;
        Ok(Setup {
            problem,
            catalog,
            american_reduction,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAME_CALL: &str = "
[model]
family = gbm
beta = 0.05
sigma = 0.3

[payoff]
g1 = call(100)
g2 = g1 + 5   # penalty

[grid]
x_min = 6.25
x_max = 1600
n_points = 401
";

    #[test]
    fn explicit_game_call() {
        let c = Config::parse(GAME_CALL).unwrap();
        let s = c.setup().unwrap();
        assert_eq!(s.problem.payoffs.g2().eval(150.0), 55.0);
        assert_eq!(s.problem.grid.n_points, 401);
        assert!(s.catalog.is_none());
    }

    #[test]
    fn catalog_matches_explicit() {
        let c = Config::parse("[payoff]\ncatalog = game_call\n").unwrap();
        let s = c.setup().unwrap();
        let e = Config::parse(GAME_CALL).unwrap().setup().unwrap();
        assert_eq!(s.problem.payoffs, e.problem.payoffs);
        assert_eq!(s.problem.model, e.problem.model);
        assert_eq!((s.problem.grid.x_min, s.problem.grid.x_max), (6.25, 1600.0));
    }

    #[test]
    fn pieces_section() {
        let text = "
[model]
family = beta_drift_general_vol
beta = 0.05
[model.vol]
piece = (0, 1, 0, 0.3)
piece = (1, inf, 0.1, 0.2)
[payoff]
g1 = put(1)
g2 = g1 * 2
[grid]
x_min = 0.1
x_max = 10
";
        let s = Config::parse(text).unwrap().setup().unwrap();
        assert_eq!(s.problem.model.vol(2.0), 0.5);
    }

    #[test]
    fn crossing_payoffs_name_the_interval() {
        let text = GAME_CALL.replace("g2 = g1 + 5   # penalty", "g2 = constant(10)");
        let e = Config::parse(&text)
            .unwrap()
            .setup()
            .unwrap_err()
            .to_string();
        assert!(e.contains("knot interval [100, inf)"), "{e}");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = Config::parse("[grid]\nn_points = many\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }), "{e}");
        let e = Config::parse("[grid]\nfoo = 1\n").unwrap_err();
        assert!(e.to_string().contains("unknown key `foo`"));
        let e = Config::parse("x = 1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 1, .. }));
        let e =
            Config::parse("[payoff]\ncatalog = game_call\n[grid]\nn_points = 50\n").unwrap_err();
        assert!(e.to_string().contains(">= 101"));
    }

    #[test]
    fn large_penalty_is_the_american_call() {
        let c = Config::parse("[payoff]\ncatalog = game_call\neps = 150\n").unwrap();
        let s = c.setup().unwrap();
        assert!(s.american_reduction);
        assert_eq!(s.problem.payoffs.g2().eval(50.0), 150.0);
    }

    #[test]
    fn mc_section() {
        let c = Config::parse(
            "[payoff]\ncatalog = game_call\n[mc]\nenabled = true\nx0 = 50\nbuyer_thresholds = 60, 70\nseed = 9\n",
        )
        .unwrap();
        assert!(c.mc.enabled);
        assert_eq!(c.mc.probes.buyer_thresholds, vec![60.0, 70.0]);
        assert_eq!(c.mc.params.seed, 9);
    }
}
