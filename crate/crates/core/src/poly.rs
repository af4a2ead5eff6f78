//! Piecewise cubic polynomials on `(0, ∞)` with an explicit knot set.
//!
//! Payoffs and diffusion coefficients are all represented this way so that
//! first and second derivatives, one-sided limits at knots and derivative
//! jumps are exact.

use serde::Serialize;

use crate::error::{Error, Result};

const CONTINUITY_RTOL: f64 = 1e-12;

/// One polynomial piece `c0 + c1 x + c2 x^2 + c3 x^3` on `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: [f64; 4],
}

impl Piece {
    pub fn new(lo: f64, hi: f64, coeffs: [f64; 4]) -> Self {
        Self { lo, hi, coeffs }
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        let [c0, c1, c2, c3] = self.coeffs;
        ((c3 * x + c2) * x + c1) * x + c0
    }

    #[inline]
    pub fn d1(&self, x: f64) -> f64 {
        let [_, c1, c2, c3] = self.coeffs;
        (3.0 * c3 * x + 2.0 * c2) * x + c1
    }

    #[inline]
    pub fn d2(&self, x: f64) -> f64 {
        let [_, _, c2, c3] = self.coeffs;
        6.0 * c3 * x + 2.0 * c2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewisePoly {
    pieces: Vec<Piece>,
}

impl PiecewisePoly {
    /// Builds a payoff from pieces that must tile `(0, ∞)` contiguously and
    /// join continuously at every knot.
    pub fn new(mut pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Payoff("no pieces".into()));
        }
        pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        if pieces[0].lo != 0.0 {
            return Err(Error::Payoff(format!(
                "first piece must start at 0, starts at {}",
                pieces[0].lo
            )));
        }
        if pieces.last().unwrap().hi != f64::INFINITY {
            return Err(Error::Payoff("last piece must extend to infinity".into()));
        }
        for p in &pieces {
            if !(p.lo < p.hi) {
                return Err(Error::Payoff(format!("empty piece [{}, {})", p.lo, p.hi)));
            }
            if p.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::Payoff(format!(
                    "non-finite coefficient on [{}, {})",
                    p.lo, p.hi
                )));
            }
        }
        for w in pieces.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.hi != b.lo {
                return Err(Error::Payoff(format!(
                    "pieces leave a gap or overlap between {} and {}",
                    a.hi, b.lo
                )));
            }
            let (l, r) = (a.value(a.hi), b.value(b.lo));
            let scale = 1.0_f64.max(l.abs()).max(r.abs());
            if (l - r).abs() > CONTINUITY_RTOL * scale {
                return Err(Error::Payoff(format!(
                    "discontinuous at knot {}: {} vs {}",
                    a.hi, l, r
                )));
            }
        }
        Ok(Self { pieces })
    }

    pub fn constant(c: f64) -> Self {
        Self::polynomial([c, 0.0, 0.0, 0.0])
    }

    pub fn polynomial(coeffs: [f64; 4]) -> Self {
        Self {
            pieces: vec![Piece::new(0.0, f64::INFINITY, coeffs)],
        }
    }

    /// `(x - strike)^+`
    pub fn call(strike: f64) -> Self {
        Self {
            pieces: vec![
                Piece::new(0.0, strike, [0.0; 4]),
                Piece::new(strike, f64::INFINITY, [-strike, 1.0, 0.0, 0.0]),
            ],
        }
    }

    /// `(strike - x)^+`
    pub fn put(strike: f64) -> Self {
        Self {
            pieces: vec![
                Piece::new(0.0, strike, [strike, -1.0, 0.0, 0.0]),
                Piece::new(strike, f64::INFINITY, [0.0; 4]),
            ],
        }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Interior breakpoints, sorted.
    pub fn knots(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.lo).collect()
    }

    pub fn is_knot(&self, x: f64) -> bool {
        self.pieces.iter().skip(1).any(|p| p.lo == x)
    }

    fn index_right(&self, x: f64) -> usize {
        // piece with lo <= x < hi
        self.pieces.partition_point(|p| p.lo <= x).saturating_sub(1)
    }

    fn index_left(&self, x: f64) -> usize {
        // piece with lo < x <= hi
        self.pieces.partition_point(|p| p.lo < x).saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.pieces[self.index_right(x)].value(x)
    }

    pub fn d1_right(&self, x: f64) -> f64 {
        self.pieces[self.index_right(x)].d1(x)
    }

    pub fn d1_left(&self, x: f64) -> f64 {
        self.pieces[self.index_left(x)].d1(x)
    }

    pub fn d2_right(&self, x: f64) -> f64 {
        self.pieces[self.index_right(x)].d2(x)
    }

    pub fn d2_left(&self, x: f64) -> f64 {
        self.pieces[self.index_left(x)].d2(x)
    }

    /// `g'(a+) - g'(a-)`; zero away from knots.
    pub fn derivative_jump(&self, a: f64) -> f64 {
        self.d1_right(a) - self.d1_left(a)
    }

    /// Derivatives at a non-knot point.
    pub fn derivatives(&self, x: f64) -> Result<(f64, f64, f64)> {
        if self.is_knot(x) {
            return Err(Error::KinkPoint { x });
        }
        let p = &self.pieces[self.index_right(x)];
        Ok((p.value(x), p.d1(x), p.d2(x)))
    }

    /// True when the first derivative is continuous at `x` (up to `tol`).
    pub fn differentiable_at(&self, x: f64, tol: f64) -> bool {
        !self.is_knot(x) || self.derivative_jump(x).abs() <= tol
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece::new(p.lo, p.hi, p.coeffs.map(|k| k * c)))
                .collect(),
        }
    }

    /// Pointwise sum; the knot set is the union of both knot sets.
    pub fn add(&self, other: &Self) -> Self {
        let mut cuts: Vec<f64> = self.knots();
        cuts.extend(other.knots());
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut bounds = vec![0.0];
        bounds.extend(cuts);
        bounds.push(f64::INFINITY);
        let pieces = bounds
            .windows(2)
            .map(|w| {
                let a = &self.pieces[self.index_right(w[0])];
                let b = &other.pieces[other.index_right(w[0])];
                let c = std::array::from_fn(|k| a.coeffs[k] + b.coeffs[k]);
                Piece::new(w[0], w[1], c)
            })
            .collect();
        Self { pieces }
    }

    pub fn plus_constant(&self, c: f64) -> Self {
        self.add(&Self::constant(c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn call_payoff_and_derivatives() {
        let g = PiecewisePoly::call(100.0);
        assert_eq!(g.eval(50.0), 0.0);
        assert_eq!(g.eval(150.0), 50.0);
        assert_eq!(g.eval(100.0), 0.0);
        assert_eq!(g.knots(), vec![100.0]);
        assert_eq!(g.derivative_jump(100.0), 1.0);
        assert_eq!(g.d1_left(100.0), 0.0);
        assert_eq!(g.d1_right(100.0), 1.0);
        assert!(matches!(g.derivatives(100.0), Err(Error::KinkPoint { .. })));
        assert_eq!(g.derivatives(120.0).unwrap(), (20.0, 1.0, 0.0));
    }

    #[test]
    fn sum_merges_knots() {
        let g = PiecewisePoly::call(1.0).add(&PiecewisePoly::put(3.0));
        assert_eq!(g.knots(), vec![1.0, 3.0]);
        assert_eq!(g.eval(0.5), 2.5);
        assert_eq!(g.eval(2.0), 2.0);
        assert_eq!(g.eval(4.0), 3.0);
        assert_eq!(g.derivative_jump(1.0), 1.0);
        assert_eq!(g.derivative_jump(3.0), 1.0);
    }

    #[test]
    fn rejects_discontinuous_pieces() {
        let r = PiecewisePoly::new(vec![
            Piece::new(0.0, 2.0, [0.0, 1.0, 0.0, 0.0]),
            Piece::new(2.0, f64::INFINITY, [3.0, 0.0, 0.0, 0.0]),
        ]);
        assert!(matches!(r, Err(Error::Payoff(_))));
    }

    #[test]
    fn rejects_gaps() {
        let r = PiecewisePoly::new(vec![
            Piece::new(0.0, 2.0, [0.0; 4]),
            Piece::new(3.0, f64::INFINITY, [0.0; 4]),
        ]);
        assert!(r.is_err());
    }
}
