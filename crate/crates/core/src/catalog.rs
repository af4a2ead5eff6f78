//! Closed-form reference games and named presets.
//!
//! * `game_call`: `g1 = (x − K)⁺`, `g2 = g1 + ε` with `μ(x) = βx`. The value is
//!   `εx/K` below `K` and `x − K + ε` above; the seller cancels at `K` and the
//!   buyer never exercises.
//! * `scaled_call`: `g1 = (x − K)⁺`, `g2 = C·g1` under geometric Brownian
//!   motion with drift `β`. For `C ≥ 1 + 2β/σ²` the seller cancels as soon as
//!   `X ≤ K`; for smaller `C` the cancellation region grows to `(0, x′]`.

use serde::Serialize;

use crate::analysis::SaddleKind;
use crate::diffusion::DiffusionModel;
use crate::error::{Error, Result};
use crate::poly::PiecewisePoly;
use crate::transform::PayoffPair;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosedForm {
    GameCall {
        k: f64,
        eps: f64,
    },
    /// `C ≥ 1 + 2β/σ²`.
    ScaledCallCase1 {
        k: f64,
        c: f64,
        beta: f64,
        sigma: f64,
    },
    /// `1 < C < 1 + 2β/σ²`.
    ScaledCallCase2 {
        k: f64,
        c: f64,
        beta: f64,
        sigma: f64,
        x_prime: f64,
    },
}

impl ClosedForm {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            ClosedForm::GameCall { k, eps } => {
                if x <= k {
                    eps * x / k
                } else {
                    x - k + eps
                }
            }
            ClosedForm::ScaledCallCase1 { k, beta, sigma, .. } => {
                let s2 = sigma * sigma;
                let a = 2.0 * beta / s2;
                let coef = k.powf((2.0 * beta + s2) / s2);
                (x - coef * x.powf(-a)).max(0.0)
            }
            ClosedForm::ScaledCallCase2 {
                k,
                c,
                beta,
                sigma,
                x_prime,
            } => {
                if x < x_prime {
                    c * (x - k).max(0.0)
                } else {
                    let s2 = sigma * sigma;
                    let a = 2.0 * beta / s2;
                    x - c * k * s2 / (2.0 * beta + s2) * (x_prime / x).powf(a)
                }
            }
        }
    }

    /// `(V'(x−), V'(x+))`.
    pub fn slopes(&self, x: f64) -> (f64, f64) {
        match *self {
            ClosedForm::GameCall { k, eps } => {
                let below = eps / k;
                if x < k {
                    (below, below)
                } else if x == k {
                    (below, 1.0)
                } else {
                    (1.0, 1.0)
                }
            }
            ClosedForm::ScaledCallCase1 { k, beta, sigma, .. } => {
                let s2 = sigma * sigma;
                let a = 2.0 * beta / s2;
                let coef = k.powf((2.0 * beta + s2) / s2);
                let above = 1.0 + a * coef * x.powf(-a - 1.0);
                if x < k {
                    (0.0, 0.0)
                } else if x == k {
                    (0.0, above)
                } else {
                    (above, above)
                }
            }
            ClosedForm::ScaledCallCase2 {
                k,
                c,
                beta,
                sigma,
                x_prime,
            } => {
                let s2 = sigma * sigma;
                let a = 2.0 * beta / s2;
                let m = c * k * s2 / (2.0 * beta + s2);
                let right = 1.0 + a * m * x_prime.powf(a) * x.powf(-a - 1.0);
                let left = if x <= k { 0.0 } else { c };
                if x < x_prime {
                    (left, left)
                } else if x == x_prime {
                    (left, right)
                } else {
                    (right, right)
                }
            }
        }
    }

    /// Second derivative away from the piece boundaries.
    pub fn second_derivative(&self, x: f64) -> f64 {
        match *self {
            ClosedForm::GameCall { .. } => 0.0,
            ClosedForm::ScaledCallCase1 { k, beta, sigma, .. } => {
                if x <= k {
                    return 0.0;
                }
                let s2 = sigma * sigma;
                let a = 2.0 * beta / s2;
                let coef = k.powf((2.0 * beta + s2) / s2);
                -a * (a + 1.0) * coef * x.powf(-a - 2.0)
            }
            ClosedForm::ScaledCallCase2 {
                k,
                c,
                beta,
                sigma,
                x_prime,
            } => {
                if x < x_prime {
                    return 0.0;
                }
                let s2 = sigma * sigma;
                let a = 2.0 * beta / s2;
                let m = c * k * s2 / (2.0 * beta + s2);
                -a * (a + 1.0) * m * x_prime.powf(a) * x.powf(-a - 2.0)
            }
        }
    }

    /// Points where the formula changes piece.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            ClosedForm::GameCall { k, .. } | ClosedForm::ScaledCallCase1 { k, .. } => vec![k],
            ClosedForm::ScaledCallCase2 { k, x_prime, .. } => vec![k, x_prime],
        }
    }
}

/// A closed interval `[lo, hi]`; `lo = 0` stands for the open end at zero
/// and `hi = ∞` for an unbounded interval.
pub type Interval = (f64, f64);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub name: String,
    pub model: DiffusionModel,
    pub payoffs: PayoffPair,
    pub closed_form: ClosedForm,
    pub strike: f64,
    pub expected_e1: Vec<Interval>,
    pub expected_e2: Vec<Interval>,
    pub expected_verdict: SaddleKind,
}

impl CatalogEntry {
    pub fn value(&self, x: f64) -> f64 {
        self.closed_form.value(x)
    }

    /// The default window `[K/16, 16K]`.
    pub fn default_window(&self) -> (f64, f64) {
        (self.strike / 16.0, self.strike * 16.0)
    }
}

/// The game call: the seller may cancel at a fixed penalty `ε`.
pub fn game_call(k: f64, eps: f64, model: DiffusionModel) -> Result<CatalogEntry> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::invalid("K", format!("must be positive, got {k}")));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid(
            "eps",
            format!("must be positive, got {eps}"),
        ));
    }
    if eps >= k {
        return Err(Error::ParameterDomain(format!(
            "eps = {eps} >= K = {k}: the game reduces to the American call"
        )));
    }
    if !model.has_beta_drift() {
        return Err(Error::ParameterDomain(
            "game_call requires drift μ(x) = βx".into(),
        ));
    }
    let g1 = PiecewisePoly::call(k);
    let g2 = g1.plus_constant(eps);
    Ok(CatalogEntry {
        name: "game_call".into(),
        model,
        payoffs: PayoffPair::new(g1, g2)?,
        closed_form: ClosedForm::GameCall { k, eps },
        strike: k,
        expected_e1: vec![],
        expected_e2: vec![(k, f64::INFINITY)],
        expected_verdict: SaddleKind::SellerOnly,
    })
}

/// `g2 = C·(x − K)⁺` under geometric Brownian motion with drift `β`.
pub fn scaled_call(k: f64, c: f64, beta: f64, sigma: f64) -> Result<CatalogEntry> {
    if !(c > 1.0) {
        return Err(Error::ParameterDomain(format!("C must exceed 1, got {c}")));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::invalid("K", format!("must be positive, got {k}")));
    }
    let model = DiffusionModel::gbm(beta, sigma)?;
    let s2 = sigma * sigma;
    let threshold = 1.0 + 2.0 * beta / s2;
    let g1 = PiecewisePoly::call(k);
    let g2 = g1.scaled(c);
    let (closed_form, name, e2) = if c >= threshold {
        (
            ClosedForm::ScaledCallCase1 { k, c, beta, sigma },
            "scaled_call_case1",
            vec![(0.0, k)],
        )
    } else {
        let x_prime = 2.0 * beta * c * k / ((2.0 * beta + s2) * (c - 1.0));
        (
            ClosedForm::ScaledCallCase2 {
                k,
                c,
                beta,
                sigma,
                x_prime,
            },
            "scaled_call_case2",
            vec![(0.0, x_prime)],
        )
    };
    Ok(CatalogEntry {
        name: name.into(),
        model,
        payoffs: PayoffPair::new(g1, g2)?,
        closed_form,
        strike: k,
        expected_e1: vec![(0.0, k)],
        expected_e2: e2,
        expected_verdict: SaddleKind::SellerOnly,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "game_call",
        description: "g1 = (x-100)+, g2 = g1 + 5, gbm beta=0.05 sigma=0.3",
    },
    Preset {
        name: "scaled_call_case1",
        description: "g1 = (x-1)+, g2 = 3 g1, gbm beta=0.05 sigma=0.3",
    },
    Preset {
        name: "scaled_call_case2",
        description: "g1 = (x-100)+, g2 = 2 g1, gbm beta=0.05 sigma=0.3",
    },
];

/// Builds a preset by name.
pub fn preset(name: &str) -> Result<CatalogEntry> {
    match name {
        "game_call" => game_call(100.0, 5.0, DiffusionModel::gbm(0.05, 0.3)?),
        "scaled_call_case1" => scaled_call(1.0, 3.0, 0.05, 0.3),
        "scaled_call_case2" => scaled_call(100.0, 2.0, 0.05, 0.3),
        _ => Err(Error::invalid(
            "catalog",
            format!(
                "unknown entry {name:?}; known: {}",
                PRESETS
                    .iter()
                    .map(|p| p.name)
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn game_call_spot_values() {
        let e = preset("game_call").unwrap();
        assert_eq!(e.value(50.0), 2.5);
        assert_eq!(e.value(100.0), 5.0);
        assert_eq!(e.value(150.0), 55.0);
        let (l, r) = e.closed_form.slopes(100.0);
        assert_eq!((l, r), (0.05, 1.0));
    }

    #[test]
    fn game_call_domain() {
        let m = DiffusionModel::gbm(0.05, 0.3).unwrap();
        assert!(matches!(
            game_call(100.0, 100.0, m),
            Err(Error::ParameterDomain(_))
        ));
    }

    #[test]
    fn case1_values() {
        let e = preset("scaled_call_case1").unwrap();
        assert!(matches!(e.closed_form, ClosedForm::ScaledCallCase1 { .. }));
        assert_eq!(e.value(1.0), 0.0);
        let want = 2.0 - 2f64.powf(-10.0 / 9.0);
        assert!((e.value(2.0) - want).abs() < 1e-14);
        assert!((e.value(2.0) - 1.5371).abs() < 1e-4);
    }

    #[test]
    fn case2_boundary_and_smooth_fit() {
        let e = preset("scaled_call_case2").unwrap();
        let ClosedForm::ScaledCallCase2 { x_prime, .. } = e.closed_form else {
            panic!("expected case 2");
        };
        assert!((x_prime - 20.0 / 0.19).abs() < 1e-12);
        assert!((e.value(x_prime) - 2.0 * (x_prime - 100.0)).abs() < 1e-10);
        assert!((e.value(200.0) - 153.57).abs() < 5e-3);
        let (l, r) = e.closed_form.slopes(x_prime);
        assert!((l - 2.0).abs() < 1e-6 && (r - 2.0).abs() < 1e-6);
        assert!(e.closed_form.second_derivative(150.0) < 0.0);
    }

    #[test]
    fn scaled_call_domain() {
        assert!(matches!(
            scaled_call(1.0, 1.0, 0.05, 0.3),
            Err(Error::ParameterDomain(_))
        ));
    }

    #[test]
    fn closed_forms_respect_sandwich() {
        for name in ["game_call", "scaled_call_case1", "scaled_call_case2"] {
            let e = preset(name).unwrap();
            let (a, b) = e.default_window();
            for x in crate::grid::log_spaced(a, b, 257).unwrap() {
                let v = e.value(x);
                let (g1, g2) = (e.payoffs.g1().eval(x), e.payoffs.g2().eval(x));
                assert!(
                    g1 - 1e-12 <= v && v <= g2 + 1e-9 * g2.max(1.0),
                    "{name} at {x}"
                );
            }
        }
    }
}
