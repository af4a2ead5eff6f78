//! Sampled curves and log-spaced state grids.

use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};

/// A function sampled on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCurve {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl GridCurve {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Grid(format!(
                "grid has {} nodes but {} values",
                grid.len(),
                values.len()
            )));
        }
        check_increasing(&grid)?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Grid(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.grid, self.values)
    }

    /// Piecewise-linear interpolation; `None` outside the grid.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        interpolate(&self.grid, &self.values, x)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Restricts the curve to a node range.
    pub fn slice(&self, range: Range<usize>) -> Self {
        Self {
            grid: self.grid[range.clone()].to_vec(),
            values: self.values[range].to_vec(),
        }
    }
}

pub(crate) fn check_increasing(grid: &[f64]) -> Result<()> {
    if let Some(i) = grid.iter().position(|x| !x.is_finite()) {
        return Err(Error::Grid(format!("non-finite node {i}")));
    }
    for (i, w) in grid.windows(2).enumerate() {
        if !(w[0] < w[1]) {
            return Err(Error::Grid(format!(
                "grid not strictly increasing at node {}: {} then {}",
                i + 1,
                w[0],
                w[1]
            )));
        }
    }
    Ok(())
}

/// Linear interpolation on a sorted grid; `None` outside `[grid[0], grid[n-1]]`.
pub fn interpolate(grid: &[f64], values: &[f64], x: f64) -> Option<f64> {
    let n = grid.len();
    if n == 0 || x < grid[0] || x > grid[n - 1] || x.is_nan() {
        return None;
    }
    let j = grid.partition_point(|g| *g <= x);
    if j == n {
        return Some(values[n - 1]);
    }
    if j == 0 {
        return Some(values[0]);
    }
    let (x0, x1) = (grid[j - 1], grid[j]);
    let t = (x - x0) / (x1 - x0);
    Some(values[j - 1] + t * (values[j] - values[j - 1]))
}

/// `n` nodes, equally spaced in `ln x`, with exact endpoints.
pub fn log_spaced(x_min: f64, x_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(x_min > 0.0 && x_min < x_max && x_max.is_finite()) {
        return Err(Error::Grid(format!(
            "need 0 < x_min < x_max < inf, got [{x_min}, {x_max}]"
        )));
    }
    if n < 3 {
        return Err(Error::Grid(format!("need at least 3 nodes, got {n}")));
    }
    let (a, b) = (x_min.ln(), x_max.ln());
    let step = (b - a) / (n - 1) as f64;
    let mut nodes: Vec<f64> = (0..n).map(|i| (a + step * i as f64).exp()).collect();
    nodes[0] = x_min;
    nodes[n - 1] = x_max;
    Ok(nodes)
}

/// Places each point of `points` (inside the open grid range) on the grid: the
/// nearest node is moved onto it when that node is within half a local step
/// and not an endpoint or already placed; otherwise the point is inserted.
pub fn place_points(nodes: &mut Vec<f64>, points: &[f64]) {
    let mut fixed = vec![false; nodes.len()];
    let last = nodes.len() - 1;
    fixed[0] = true;
    fixed[last] = true;
    for &p in points {
        if !(p > nodes[0] && p < nodes[nodes.len() - 1]) {
            continue;
        }
        let j = nodes.partition_point(|x| *x < p);
        if nodes[j] == p {
            fixed[j] = true;
            continue;
        }
        // neighbours nodes[j-1] < p < nodes[j]
        let (lo, hi) = (j - 1, j);
        let near = if (p / nodes[lo]).ln() <= (nodes[hi] / p).ln() {
            lo
        } else {
            hi
        };
        let step_left = if near > 0 {
            (nodes[near] / nodes[near - 1]).ln()
        } else {
            f64::INFINITY
        };
        let step_right = if near + 1 < nodes.len() {
            (nodes[near + 1] / nodes[near]).ln()
        } else {
            f64::INFINITY
        };
        let dist = (p / nodes[near]).ln().abs();
        if !fixed[near] && dist <= 0.5 * step_left.min(step_right) {
            nodes[near] = p;
            fixed[near] = true;
        } else {
            nodes.insert(hi, p);
            fixed.insert(hi, true);
        }
    }
}

/// A state grid made of a user window plus coarser log-spaced padding on both
/// sides. The padding pushes the artificial boundaries far into the natural
/// boundary regions; every report is restricted to `window`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateGrid {
    pub nodes: Vec<f64>,
    pub window: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    /// Points that must be grid nodes (payoff kinks, strikes).
    pub inserts: Vec<f64>,
    /// The padded domain is `[x_min / pad_factor, x_max * pad_factor]`.
    pub pad_factor: f64,
    /// Largest log-step used in the padding.
    pub pad_step: f64,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Self {
        Self {
            x_min,
            x_max,
            n_points,
            inserts: Vec::new(),
            pad_factor: 1e4,
            pad_step: 0.05,
        }
    }

    pub fn with_inserts(mut self, inserts: impl IntoIterator<Item = f64>) -> Self {
        self.inserts.extend(inserts);
        self.inserts.sort_by(f64::total_cmp);
        self.inserts.dedup();
        self
    }

    pub fn with_padding(mut self, pad_factor: f64) -> Self {
        self.pad_factor = pad_factor;
        self
    }

    pub fn build(&self) -> Result<StateGrid> {
        if !(self.pad_factor >= 1.0) {
            return Err(Error::Grid(format!(
                "pad_factor must be >= 1, got {}",
                self.pad_factor
            )));
        }
        let mut window = log_spaced(self.x_min, self.x_max, self.n_points)?;
        place_points(&mut window, &self.inserts);
        if self.pad_factor == 1.0 {
            let n = window.len();
            return Ok(StateGrid {
                nodes: window,
                window: 0..n,
            });
        }
        let h = (self.x_max / self.x_min).ln() / (self.n_points - 1) as f64;
        let step = h.max(self.pad_step);
        let span = self.pad_factor.ln();
        let n_pad = (span / step).ceil().max(1.0) as usize;
        let mut left = log_spaced(self.x_min / self.pad_factor, self.x_min, n_pad + 1)?;
        left.pop();
        place_points(&mut left, &self.inserts);
        let mut right = log_spaced(self.x_max, self.x_max * self.pad_factor, n_pad + 1)?;
        right.remove(0);
        let mut right_full = vec![self.x_max];
        right_full.extend(right);
        place_points(&mut right_full, &self.inserts);
        right_full.remove(0);

        let start = left.len();
        let end = start + window.len();
        let mut nodes = left;
        nodes.extend(window);
        nodes.extend(right_full);
        check_increasing(&nodes)?;
        Ok(StateGrid {
            nodes,
            window: start..end,
        })
    }
}

impl StateGrid {
    pub fn window_nodes(&self) -> &[f64] {
        &self.nodes[self.window.clone()]
    }
}
