//! The smallest element of `ℍ` on a grid: the function sandwiched between
//! `H1` and `H2` that is concave wherever it lies below `H2` and convex
//! wherever it lies above `H1`.
//!
//! On a grid this is the unique solution of
//! `h_i = clamp(chord_i(h), H1_i, H2_i)` with prescribed end values, where
//! `chord_i` interpolates linearly between the two neighbours.
//!
//! # Algorithm
//!
//! Policy iteration from below. A set `B` of interior nodes is held at `H1`
//! (initially all of them). Between consecutive held nodes the solution is
//! the greatest convex minorant of `H2` with the held values as end points,
//! a lower convex hull. Every held node whose chord rises above `H1` is then
//! released. Each iterate is a subsolution lying below the fixed point, so
//! the iterates increase monotonically and reach the fixed point after at
//! most `n` rounds. A few projected Gauss–Seidel sweeps in alternating
//! directions then confirm the fixed point to `tol_fix`.
//!
//! # Boundaries
//!
//! The grid truncates `(0, ∞)`. Two end conditions bracket the untruncated
//! solution: a low one holding the ends at `H1` and a high one holding them
//! at an upper bound for `W`. With [`BoundaryPolicy::Natural`] the left end
//! is extended by a node at `y = 0` carrying the extrapolated limit of `H1`,
//! and the high right end is capped by the line `M + s·y` that majorizes
//! `H1` with `s` an upper estimate of `lim H1(y)/y`; this line bounds the
//! American value and hence `W`.

use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridCurve;
use crate::growth::{self, Trend, TrendTag};
use crate::transform::TransformedObstacles;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// `tol_fix = tol_fix_rel·(1 + max H2)`.
    pub tol_fix_rel: f64,
    /// Budget for rounds plus sweeps.
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_fix_rel: 1e-12,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Low bracket holds both ends at `H1`, high bracket at `H2`.
    Pinned,
    /// Origin node plus slope-capped right end, see the module docs.
    Natural,
}

/// End values used by the two brackets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPins {
    /// `(low, high)` value at `y = 0` when the origin node is used.
    pub origin: Option<(f64, f64)>,
    pub left: (f64, f64),
    pub right: (f64, f64),
    /// Upper estimate of `lim H1(y)/y` used for the right cap.
    pub slope_cap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeSolution {
    pub w_low: GridCurve,
    pub w_high: GridCurve,
    /// The reported solution, equal to `w_high`.
    pub w: GridCurve,
    /// Largest `W_high − W_low` over the report window.
    pub bracket_gap: f64,
    /// Largest `(W_high − W_low)/max(|W_high|, floor)` over the window.
    pub bracket_gap_rel: f64,
    pub iterations: usize,
    pub converged: bool,
    pub tol_fix: f64,
    pub pins: BoundaryPins,
    pub window: Range<usize>,
}

/// Linear interpolation weight `λ_i = (y_{i+1} − y_i)/(y_{i+1} − y_{i−1})`.
#[inline]
pub fn chord_weight(y: &[f64], i: usize) -> f64 {
    (y[i + 1] - y[i]) / (y[i + 1] - y[i - 1])
}

#[inline]
pub fn chord(y: &[f64], h: &[f64], i: usize) -> f64 {
    let l = chord_weight(y, i);
    l * h[i - 1] + (1.0 - l) * h[i + 1]
}

/// Trace of sampled iterates, for checking monotonicity.
pub type Trace = Vec<Vec<f64>>;

struct ChainResult {
    h: Vec<f64>,
    iterations: usize,
    converged: bool,
    last_change: f64,
}

/// Solves `h_i = clamp(chord_i(h), lo_i, hi_i)` for interior nodes with
/// `h_0 = lo_0`, `h_{n−1} = lo_{n−1}`.
fn solve_chain(
    y: &[f64],
    lo: &[f64],
    hi: &[f64],
    tol_fix: f64,
    max_iter: usize,
    mut trace: Option<&mut Trace>,
) -> ChainResult {
    let n = y.len();
    let mut h = lo.to_vec();
    if n <= 2 {
        return ChainResult {
            h,
            iterations: 0,
            converged: true,
            last_change: 0.0,
        };
    }
    let mut held = vec![true; n];
    let mut dirty = vec![false; n];
    let mut hull = HullBuf::default();
    let mut rounds = 0usize;
    if let Some(t) = trace.as_deref_mut() {
        t.push(h.clone());
    }
    let mut release = Vec::new();
    loop {
        release.clear();
        for i in 1..n - 1 {
            if held[i] && chord(y, &h, i) > lo[i] {
                release.push(i);
            }
        }
        if release.is_empty() || rounds >= max_iter {
            break;
        }
        for &i in &release {
            held[i] = false;
            dirty[i] = true;
        }
        // refill only the free runs that contain a released node
        let mut i = 0;
        while i < n - 1 {
            let mut j = i + 1;
            let mut touched = false;
            while j < n - 1 && !held[j] {
                touched |= dirty[j];
                j += 1;
            }
            if touched {
                hull.fill_minorant(y, hi, &mut h, i, j);
                for d in &mut dirty[i + 1..j] {
                    *d = false;
                }
            }
            i = j;
        }
        rounds += 1;
        if let Some(t) = trace.as_deref_mut() {
            t.push(h.clone());
        }
    }

    // confirm the fixed point
    let mut sweeps = 0usize;
    let mut change;
    loop {
        change = 0.0f64;
        let forward = sweeps.is_multiple_of(2);
        for k in 1..n - 1 {
            let i = if forward { k } else { n - 1 - k };
            let v = chord(y, &h, i).clamp(lo[i], hi[i]);
            change = change.max((v - h[i]).abs());
            h[i] = v;
        }
        sweeps += 1;
        if change <= tol_fix || rounds + sweeps >= max_iter {
            break;
        }
    }
    ChainResult {
        h,
        iterations: rounds + sweeps,
        converged: change <= tol_fix,
        last_change: change,
    }
}

#[derive(Default)]
struct HullBuf {
    stack: Vec<usize>,
    vals: Vec<f64>,
}

impl HullBuf {
    /// Writes into `h[a+1..b]` the lower convex hull of `(y_a, h_a)`,
    /// `(y_k, hi_k)` for `a < k < b`, and `(y_b, h_b)`.
    fn fill_minorant(&mut self, y: &[f64], hi: &[f64], h: &mut [f64], a: usize, b: usize) {
        self.vals.clear();
        self.vals.extend_from_slice(&hi[a..=b]);
        self.vals[0] = h[a];
        self.vals[b - a] = h[b];
        lower_hull(&y[a..=b], &self.vals, &mut self.stack);
        let st = &self.stack;
        for w in st.windows(2) {
            let (p, q) = (w[0], w[1]);
            let (yp, yq) = (y[a + p], y[a + q]);
            let (vp, vq) = (self.vals[p], self.vals[q]);
            for k in p + 1..q {
                let t = (y[a + k] - yp) / (yq - yp);
                h[a + k] = vp + t * (vq - vp);
            }
            if q < b - a {
                h[a + q] = vq;
            }
        }
    }
}

/// Indices of the lower convex hull vertices of `(x_k, v_k)` (x sorted).
fn lower_hull(x: &[f64], v: &[f64], stack: &mut Vec<usize>) {
    stack.clear();
    for k in 0..x.len() {
        while stack.len() >= 2 {
            let o = stack[stack.len() - 2];
            let a = stack[stack.len() - 1];
            let cross = (x[a] - x[o]) * (v[k] - v[o]) - (v[a] - v[o]) * (x[k] - x[o]);
            if cross <= 0.0 {
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(k);
    }
}

fn hull_values(x: &[f64], v: &[f64], upper: bool) -> Vec<f64> {
    let vv: Vec<f64> = if upper {
        v.iter().map(|a| -a).collect()
    } else {
        v.to_vec()
    };
    let mut stack = Vec::new();
    lower_hull(x, &vv, &mut stack);
    let mut out = vv.clone();
    for w in stack.windows(2) {
        let (p, q) = (w[0], w[1]);
        for k in p + 1..q {
            let t = (x[k] - x[p]) / (x[q] - x[p]);
            out[k] = vv[p] + t * (vv[q] - vv[p]);
        }
    }
    if upper {
        out.iter_mut().for_each(|a| *a = -*a);
    }
    out
}

/// Smallest concave function above `curve` on a node range (upper hull).
pub fn least_concave_majorant(curve: &GridCurve, interval: Range<usize>) -> GridCurve {
    let x = &curve.grid()[interval.clone()];
    let v = &curve.values()[interval];
    GridCurve::new(x.to_vec(), hull_values(x, v, true)).expect("sub-curve of a valid curve")
}

/// Largest convex function below `curve` on a node range (lower hull).
pub fn greatest_convex_minorant(curve: &GridCurve, interval: Range<usize>) -> GridCurve {
    let x = &curve.grid()[interval.clone()];
    let v = &curve.values()[interval];
    GridCurve::new(x.to_vec(), hull_values(x, v, false)).expect("sub-curve of a valid curve")
}

/// Node indices for a boundary trend: at most `count` nodes, at least
/// `min_step` apart in `ln y`, ordered toward the end named by `at_left`.
pub(crate) fn boundary_samples(
    y: &[f64],
    at_left: bool,
    count: usize,
    min_step: f64,
) -> Vec<usize> {
    let n = y.len();
    let mut picks = Vec::with_capacity(count);
    let order: Box<dyn Iterator<Item = usize>> = if at_left {
        Box::new(0..n)
    } else {
        Box::new((0..n).rev())
    };
    for i in order {
        match picks.last() {
            None => picks.push(i),
            Some(&j) => {
                if (y[i] / y[j]).ln().abs() >= min_step {
                    picks.push(i);
                }
            }
        }
        if picks.len() == count {
            break;
        }
    }
    picks.reverse();
    picks
}

const TREND_NODES: usize = 10;
const TREND_LOG_STEP: f64 = 0.1;

/// Trend of `H1` toward `y = 0`.
pub fn left_trend(ob: &TransformedObstacles) -> Trend {
    let idx = boundary_samples(&ob.ygrid, true, TREND_NODES, TREND_LOG_STEP);
    growth::trend(&idx.iter().map(|&i| ob.h1[i]).collect::<Vec<_>>())
}

/// Trend of `H1(y)/y` toward `y = ∞`.
pub fn right_slope_trend(ob: &TransformedObstacles) -> Trend {
    let idx = boundary_samples(&ob.ygrid, false, TREND_NODES, TREND_LOG_STEP);
    growth::trend(
        &idx.iter()
            .map(|&i| ob.h1[i] / ob.ygrid[i])
            .collect::<Vec<_>>(),
    )
}

/// Value of the line `M + s·y` that majorizes `H1` (and the origin value),
/// evaluated at the right end.
fn slope_cap(ob: &TransformedObstacles, origin_hi: Option<f64>, s: f64) -> f64 {
    let mut m = origin_hi.unwrap_or(f64::NEG_INFINITY);
    for (y, h) in ob.ygrid.iter().zip(&ob.h1) {
        m = m.max(h - s * y);
    }
    m + s * ob.ygrid[ob.len() - 1]
}

fn natural_pins(ob: &TransformedObstacles) -> BoundaryPins {
    let n = ob.len();
    let lt = left_trend(ob);
    let origin = (lt.tag == TrendTag::Converged && lt.upper.is_finite())
        .then(|| (lt.lower.max(0.0), lt.upper.max(lt.lower.max(0.0))));
    let st = right_slope_trend(ob);
    let s = (st.tag != TrendTag::Diverging && st.upper.is_finite()).then_some(st.upper.max(0.0));
    let right_hi = match s {
        Some(s) => slope_cap(ob, origin.map(|o| o.1), s)
            .min(ob.h2[n - 1])
            .max(ob.h1[n - 1]),
        None => ob.h2[n - 1],
    };
    BoundaryPins {
        origin,
        left: (ob.h1[0], ob.h2[0]),
        right: (ob.h1[n - 1], right_hi),
        slope_cap: s,
    }
}

fn pinned_pins(ob: &TransformedObstacles) -> BoundaryPins {
    let n = ob.len();
    BoundaryPins {
        origin: None,
        left: (ob.h1[0], ob.h2[0]),
        right: (ob.h1[n - 1], ob.h2[n - 1]),
        slope_cap: None,
    }
}

/// One bracket: returns values on the real nodes (origin dropped).
fn solve_bracket(
    ob: &TransformedObstacles,
    pins: &BoundaryPins,
    high: bool,
    tol_fix: f64,
    max_iter: usize,
    trace: Option<&mut Trace>,
) -> ChainResult {
    let n = ob.len();
    let pick = |p: (f64, f64)| if high { p.1 } else { p.0 };
    let (mut y, mut lo, mut hi) = (ob.ygrid.clone(), ob.h1.clone(), ob.h2.clone());
    let off = match pins.origin {
        Some(o) => {
            y.insert(0, 0.0);
            lo.insert(0, pick(o));
            hi.insert(0, pick(o));
            1
        }
        None => {
            lo[0] = pick(pins.left);
            hi[0] = lo[0];
            0
        }
    };
    lo[off + n - 1] = pick(pins.right);
    hi[off + n - 1] = lo[off + n - 1];
    let mut r = solve_chain(&y, &lo, &hi, tol_fix, max_iter, trace);
    if off == 1 {
        r.h.remove(0);
    }
    r
}

/// Computes `W` with both boundary brackets.
pub fn smallest_in_h(
    ob: &TransformedObstacles,
    policy: BoundaryPolicy,
    tol: Tolerances,
) -> Result<EnvelopeSolution> {
    smallest_in_h_traced(ob, policy, tol, None)
}

/// As [`smallest_in_h`], recording the low-bracket iterates in `trace`.
pub fn smallest_in_h_traced(
    ob: &TransformedObstacles,
    policy: BoundaryPolicy,
    tol: Tolerances,
    trace: Option<&mut Trace>,
) -> Result<EnvelopeSolution> {
    let n = ob.len();
    if n < 2 {
        return Err(Error::Grid("need at least 2 nodes".into()));
    }
    for i in 0..n {
        if !(ob.h1[i] <= ob.h2[i]) {
            return Err(Error::InconsistentObstacles {
                index: i,
                h1: ob.h1[i],
                h2: ob.h2[i],
            });
        }
    }
    let max_h2 = ob.h2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol_fix = tol.tol_fix_rel * (1.0 + max_h2);
    let pins = match policy {
        BoundaryPolicy::Pinned => pinned_pins(ob),
        BoundaryPolicy::Natural => natural_pins(ob),
    };

    let (low, high) = if ob.h1 == ob.h2 {
        let done = || ChainResult {
            h: ob.h1.clone(),
            iterations: 0,
            converged: true,
            last_change: 0.0,
        };
        (done(), done())
    } else {
        let low = solve_bracket(ob, &pins, false, tol_fix, tol.max_iter, trace);
        let high = solve_bracket(ob, &pins, true, tol_fix, tol.max_iter, None);
        (low, high)
    };
    let iterations = low.iterations + high.iterations;
    for r in [&low, &high] {
        if !r.converged {
            return Err(Error::NonConvergence {
                iterations,
                last_change: r.last_change,
            });
        }
    }

    let window = ob.window.clone();
    let w_scale = ob.h2[window.clone()]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (1e-12 * w_scale).max(f64::MIN_POSITIVE);
    let mut gap = 0.0f64;
    let mut gap_rel = 0.0f64;
    for i in window.clone() {
        let d = (high.h[i] - low.h[i]).max(0.0);
        gap = gap.max(d);
        gap_rel = gap_rel.max(d / high.h[i].abs().max(floor));
    }
    let w_low = GridCurve::new(ob.ygrid.clone(), low.h)?;
    let w_high = GridCurve::new(ob.ygrid.clone(), high.h)?;
    Ok(EnvelopeSolution {
        w: w_high.clone(),
        w_low,
        w_high,
        bracket_gap: gap,
        bracket_gap_rel: gap_rel,
        iterations,
        converged: true,
        tol_fix,
        pins,
        window,
    })
}

/// `W∞`: the least concave majorant of `H1`, with the origin value on the
/// left and the slope cap on the right. `H2` is ignored.
pub fn american_value(ob: &TransformedObstacles) -> GridCurve {
    let n = ob.len();
    let pins = natural_pins(ob);
    let mut x = ob.ygrid.clone();
    let mut v = ob.h1.clone();
    if let Some(s) = pins.slope_cap {
        v[n - 1] = v[n - 1].max(slope_cap(ob, pins.origin.map(|o| o.1), s));
    }
    let off = match pins.origin {
        Some(o) => {
            x.insert(0, 0.0);
            v.insert(0, o.1);
            1
        }
        None => 0,
    };
    let mut w = hull_values(&x, &v, true);
    w.drain(..off);
    GridCurve::new(ob.ygrid.clone(), w).expect("hull of finite values")
}

/// Nodes violating the structure of the discrete solution: sandwich,
/// concavity where `W < H2 − tol`, convexity where `W > H1 + tol`.
pub fn structure_violations(ob: &TransformedObstacles, w: &[f64], tol_rel: f64) -> Vec<String> {
    let y = &ob.ygrid;
    let mut out = Vec::new();
    for i in 0..w.len() {
        let scale = w[i].abs().max(ob.h2[i].abs()).max(1e-300);
        let tol = tol_rel * scale;
        if w[i] < ob.h1[i] - tol || w[i] > ob.h2[i] + tol {
            out.push(format!(
                "node {i}: W = {} outside [{}, {}]",
                w[i], ob.h1[i], ob.h2[i]
            ));
        }
        if i == 0 || i + 1 == w.len() {
            continue;
        }
        let c = chord(y, w, i);
        let ctol = tol_rel * scale.max(c.abs());
        if w[i] < ob.h2[i] - tol && w[i] < c - ctol {
            out.push(format!(
                "node {i}: not concave below H2 (W = {}, chord = {c})",
                w[i]
            ));
        }
        if w[i] > ob.h1[i] + tol && w[i] > c + ctol {
            out.push(format!(
                "node {i}: not convex above H1 (W = {}, chord = {c})",
                w[i]
            ));
        }
    }
    out
}
