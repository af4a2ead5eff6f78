use serde::Serialize;

use crate::envelope::{chord, chord_weight};
use crate::error::{Error, Result};
use crate::grid::{check_increasing, GridCurve};

/// Which obstacle supplies the two end values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PinRule {
    /// Ends held at `H1`.
    Low,
    /// Ends held at `H2`.
    High,
}

/// The discrete double-obstacle problem on nodes `y_0 < … < y_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainProblem {
    pub y: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub pin: PinRule,
}

impl ChainProblem {
    pub fn new(y: Vec<f64>, h1: Vec<f64>, h2: Vec<f64>, pin: PinRule) -> Result<Self> {
        if y.len() < 2 || h1.len() != y.len() || h2.len() != y.len() {
            return Err(Error::Grid(format!(
                "chain needs >= 2 nodes and matching lengths, got {}, {}, {}",
                y.len(),
                h1.len(),
                h2.len()
            )));
        }
        check_increasing(&y)?;
        for (i, (a, b)) in h1.iter().zip(&h2).enumerate() {
            if !(0.0 <= *a && a <= b && b.is_finite()) {
                return Err(Error::InconsistentObstacles {
                    index: i,
                    h1: *a,
                    h2: *b,
                });
            }
        }
        Ok(Self { y, h1, h2, pin })
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Node {
    Free,
    Lower,
    Upper,
}

/// Solves the linear system of a fixed policy: free nodes satisfy
/// `W_i = chord W`, the others sit on their obstacle. Ends come from `ends`.
fn solve_policy(p: &ChainProblem, policy: &[Node], ends: (f64, f64)) -> Vec<f64> {
    let n = p.y.len();
    // rows a_i W_{i-1} + W_i + c_i W_{i+1} = d_i, forward elimination
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    dp[0] = ends.0;
    for i in 1..n {
        let (a, c, d) = if i == n - 1 {
            (0.0, 0.0, ends.1)
        } else {
            match policy[i] {
                Node::Free => {
                    let l = chord_weight(&p.y, i);
                    (-l, -(1.0 - l), 0.0)
                }
                Node::Lower => (0.0, 0.0, p.h1[i]),
                Node::Upper => (0.0, 0.0, p.h2[i]),
            }
        };
        let m = 1.0 - a * cp[i - 1];
        cp[i] = c / m;
        dp[i] = (d - a * dp[i - 1]) / m;
    }
    let mut w = vec![0.0; n];
    w[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        w[i] = dp[i] - cp[i] * w[i + 1];
    }
    w
}

/// Policy iteration for `W = min(max(chord W, H1), H2)` from a starting policy.
fn policy_iteration(p: &ChainProblem, start: Node, ends: (f64, f64)) -> Option<Vec<f64>> {
    let n = p.y.len();
    let mut policy = vec![start; n];
    let mut w = solve_policy(p, &policy, ends);
    // switches need a margin above rounding, or collinear stretches cycle
    let tol = 1e-14 * p.h2.iter().fold(1.0f64, |m, h| m.max(h.abs()));
    for _ in 0..4 * n + 10 {
        let mut changed = false;
        for (i, node) in policy.iter_mut().enumerate().take(n - 1).skip(1) {
            let c = chord(&p.y, &w, i);
            let want = match *node {
                _ if c > p.h2[i] + tol => Node::Upper,
                _ if c < p.h1[i] - tol => Node::Lower,
                Node::Upper if c >= p.h2[i] - tol => Node::Upper,
                Node::Lower if c <= p.h1[i] + tol => Node::Lower,
                _ => Node::Free,
            };
            if want != *node {
                *node = want;
                changed = true;
            }
        }
        if !changed {
            return Some(w);
        }
        w = solve_policy(p, &policy, ends);
    }
    None
}

/// Exact solution of `W = min(max(chord W, H1), H2)` with pinned ends, by
/// policy iteration started once with every node on `H1` and once on `H2`.
pub fn chain_dynkin_oracle(problem: &ChainProblem) -> Result<GridCurve> {
    let p = problem;
    let n = p.y.len();
    let ends = match p.pin {
        PinRule::Low => (p.h1[0], p.h1[n - 1]),
        PinRule::High => (p.h2[0], p.h2[n - 1]),
    };
    let run = |start| {
        policy_iteration(p, start, ends).ok_or(Error::OracleMismatch {
            max_diff: f64::INFINITY,
        })
    };
    let (up, down) = (run(Node::Lower)?, run(Node::Upper)?);
    let max_diff = up
        .iter()
        .zip(&down)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if max_diff > 1e-12 {
        return Err(Error::OracleMismatch { max_diff });
    }
    GridCurve::new(p.y.clone(), up)
}
