//! The change of variables `y = F(x) = ψ(x)/φ(x)`.
//!
//! In `y`-coordinates an `F`-concave function is simply concave, so the game
//! becomes a double-obstacle problem between `H_i = (g_i/φ)∘F⁻¹`.

use std::ops::Range;

use serde::Serialize;

use crate::diffusion::FundamentalPair;
use crate::error::{Error, Result};
use crate::grid::{self, GridCurve};
use crate::poly::PiecewisePoly;

/// Payoffs `0 ≤ g1 ≤ g2` with their combined kink set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PayoffPair {
    g1: PiecewisePoly,
    g2: PiecewisePoly,
    kinks: Vec<f64>,
}

impl PayoffPair {
    /// Checks `0 ≤ g1 ≤ g2` on a dense sample of every knot interval.
    pub fn new(g1: PiecewisePoly, g2: PiecewisePoly) -> Result<Self> {
        let mut kinks = g1.knots();
        kinks.extend(g2.knots());
        kinks.sort_by(f64::total_cmp);
        kinks.dedup();

        let mut bounds = vec![0.0];
        bounds.extend(kinks.iter().copied());
        for w in 0..bounds.len() {
            let lo = bounds[w];
            let hi = bounds.get(w + 1).copied().unwrap_or(f64::INFINITY);
            for x in sample_interval(lo, hi) {
                let (a, b) = (g1.eval(x), g2.eval(x));
                let tol = 1e-12 * a.abs().max(b.abs()).max(1.0);
                if a < -tol {
                    return Err(Error::Payoff(format!(
                        "g1 is negative on knot interval [{lo}, {hi}) at x = {x}: {a}"
                    )));
                }
                if a > b + tol {
                    return Err(Error::Payoff(format!(
                        "g1 > g2 on knot interval [{lo}, {hi}) at x = {x}: {a} > {b}"
                    )));
                }
            }
        }
        Ok(Self { g1, g2, kinks })
    }

    pub fn g1(&self) -> &PiecewisePoly {
        &self.g1
    }

    pub fn g2(&self) -> &PiecewisePoly {
        &self.g2
    }

    /// Sorted union of the knots of `g1` and `g2`.
    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            g1: self.g1.scaled(c),
            g2: self.g2.scaled(c),
            kinks: self.kinks.clone(),
        }
    }

    /// Re-checks the sandwich at the given nodes.
    pub fn check_on(&self, grid: &[f64]) -> Result<()> {
        for &x in grid {
            let (a, b) = (self.g1.eval(x), self.g2.eval(x));
            if a < 0.0 || a > b + 1e-12 * b.abs().max(1.0) {
                return Err(Error::Payoff(format!(
                    "0 <= g1 <= g2 fails at x = {x}: g1 = {a}, g2 = {b}"
                )));
            }
        }
        Ok(())
    }
}

fn sample_interval(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(40);
    if hi.is_finite() {
        for k in 0..=32 {
            out.push(lo + (hi - lo) * k as f64 / 32.0);
        }
    } else {
        let base = lo.max(1e-6);
        for k in 0..=40 {
            out.push(base * 2f64.powi(k));
        }
    }
    if lo == 0.0 {
        for k in 1..=20 {
            let x = 10f64.powi(-k);
            if x < hi {
                out.push(x);
            }
        }
    }
    out
}

/// Paired grids `x ↦ y = F(x)` with piecewise-linear interpolation both ways.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transform {
    xgrid: Vec<f64>,
    ygrid: Vec<f64>,
}

pub fn build_transform(fundamental: &FundamentalPair) -> Result<Transform> {
    let xgrid = fundamental.grid().to_vec();
    let ygrid = fundamental.transform_values();
    for i in 1..ygrid.len() {
        if !(ygrid[i] > ygrid[i - 1]) {
            return Err(Error::MonotonicityViolation {
                index: i,
                y_prev: ygrid[i - 1],
                y: ygrid[i],
            });
        }
    }
    if !(ygrid[0] > 0.0) {
        return Err(Error::MonotonicityViolation {
            index: 0,
            y_prev: 0.0,
            y: ygrid[0],
        });
    }
    Ok(Transform { xgrid, ygrid })
}

impl Transform {
    pub fn xgrid(&self) -> &[f64] {
        &self.xgrid
    }

    pub fn ygrid(&self) -> &[f64] {
        &self.ygrid
    }

    pub fn f(&self, x: f64) -> Option<f64> {
        grid::interpolate(&self.xgrid, &self.ygrid, x)
    }

    pub fn f_inv(&self, y: f64) -> Option<f64> {
        grid::interpolate(&self.ygrid, &self.xgrid, y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformedObstacles {
    pub ygrid: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    /// Nodes on which results are reported; the rest is padding.
    pub window: Range<usize>,
}

impl TransformedObstacles {
    /// Obstacles given directly in `y`-coordinates.
    pub fn new(ygrid: Vec<f64>, h1: Vec<f64>, h2: Vec<f64>) -> Result<Self> {
        grid::check_increasing(&ygrid)?;
        if h1.len() != ygrid.len() || h2.len() != ygrid.len() {
            return Err(Error::Grid("obstacle lengths differ from the grid".into()));
        }
        for i in 0..h1.len() {
            if !(h1[i] <= h2[i]) || !h1[i].is_finite() || !h2[i].is_finite() {
                return Err(Error::InconsistentObstacles {
                    index: i,
                    h1: h1[i],
                    h2: h2[i],
                });
            }
        }
        let n = ygrid.len();
        Ok(Self {
            ygrid,
            h1,
            h2,
            window: 0..n,
        })
    }

    pub fn with_window(mut self, window: Range<usize>) -> Self {
        self.window = window;
        self
    }

    pub fn len(&self) -> usize {
        self.ygrid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ygrid.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            ygrid: self.ygrid.clone(),
            h1: self.h1.iter().map(|v| v * c).collect(),
            h2: self.h2.iter().map(|v| v * c).collect(),
            window: self.window.clone(),
        }
    }
}

/// `H_i(y_j) = g_i(x_j)/φ(x_j)`.
pub fn transform_obstacles(
    payoffs: &PayoffPair,
    transform: &Transform,
    fundamental: &FundamentalPair,
) -> Result<TransformedObstacles> {
    if transform.xgrid() != fundamental.grid() {
        return Err(Error::Grid(
            "transform and fundamental pair use different grids".into(),
        ));
    }
    let phi = fundamental.phi();
    let mut h1 = Vec::with_capacity(phi.len());
    let mut h2 = Vec::with_capacity(phi.len());
    for (j, &x) in transform.xgrid().iter().enumerate() {
        let (a, b) = (payoffs.g1().eval(x), payoffs.g2().eval(x));
        let (a, b) = (a / phi[j], b / phi[j]);
        if !(0.0 <= a && a <= b) {
            return Err(Error::InconsistentObstacles {
                index: j,
                h1: a,
                h2: b,
            });
        }
        h1.push(a);
        h2.push(b);
    }
    TransformedObstacles::new(transform.ygrid().to_vec(), h1, h2)
}

/// `V(x_j) = φ(x_j)·W(y_j)`.
pub fn untransform_value(
    w: &GridCurve,
    transform: &Transform,
    fundamental: &FundamentalPair,
) -> Result<GridCurve> {
    if w.grid() != transform.ygrid() {
        return Err(Error::Grid(
            "W is not sampled on the transform's y-grid".into(),
        ));
    }
    let v = w
        .values()
        .iter()
        .zip(fundamental.phi())
        .map(|(w, p)| w * p)
        .collect();
    GridCurve::new(transform.xgrid().to_vec(), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{solve_fundamental, DiffusionModel, FundamentalOptions};

    fn setup() -> (FundamentalPair, Transform) {
        let m = DiffusionModel::gbm(0.05, 0.3).unwrap();
        let grid = grid::log_spaced(10.0, 1000.0, 201).unwrap();
        let fp = solve_fundamental(&m, &grid, FundamentalOptions::default()).unwrap();
        let tr = build_transform(&fp).unwrap();
        (fp, tr)
    }

    #[test]
    fn gbm_transform_is_power_law() {
        let (_, tr) = setup();
        for (x, y) in tr.xgrid().iter().zip(tr.ygrid()) {
            assert!((y / x.powf(19.0 / 9.0) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn round_trip_at_nodes() {
        let (_, tr) = setup();
        for (x, y) in tr.xgrid().iter().zip(tr.ygrid()) {
            assert_eq!(tr.f_inv(*y), Some(*x));
            assert_eq!(tr.f(*x), Some(*y));
        }
    }

    #[test]
    fn call_obstacle_closed_form() {
        let (fp, tr) = setup();
        let k = 100.0;
        let pay = PayoffPair::new(
            PiecewisePoly::call(k),
            PiecewisePoly::call(k).plus_constant(5.0),
        )
        .unwrap();
        let ob = transform_obstacles(&pay, &tr, &fp).unwrap();
        let a = 2.0 * 0.05 / (2.0 * 0.05 + 0.09);
        for (i, &y) in ob.ygrid.iter().enumerate() {
            let want = (y - k * y.powf(a)).max(0.0);
            assert!((ob.h1[i] - want).abs() <= 1e-9 * y.max(1.0));
        }
        // H2 − H1 = ε/φ(F⁻¹(y)) is positive and increasing
        let d: Vec<f64> = ob.h1.iter().zip(&ob.h2).map(|(a, b)| b - a).collect();
        assert!(d[0] > 0.0);
        assert!(d.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn zero_payoff_and_round_trip() {
        let (fp, tr) = setup();
        let pay = PayoffPair::new(PiecewisePoly::constant(0.0), PiecewisePoly::call(50.0)).unwrap();
        let ob = transform_obstacles(&pay, &tr, &fp).unwrap();
        assert!(ob.h1.iter().all(|v| *v == 0.0));
        let w = GridCurve::new(ob.ygrid.clone(), ob.h2.clone()).unwrap();
        let v = untransform_value(&w, &tr, &fp).unwrap();
        for (x, val) in v.grid().iter().zip(v.values()) {
            let g = pay.g2().eval(*x);
            assert!((val - g).abs() <= 1e-12 * g.max(1.0));
        }
    }

    #[test]
    fn sandwich_violation_names_interval() {
        let err =
            PayoffPair::new(PiecewisePoly::call(1.0), PiecewisePoly::constant(2.0)).unwrap_err();
        assert!(err.to_string().contains("[1, inf)"), "{err}");
    }
}
