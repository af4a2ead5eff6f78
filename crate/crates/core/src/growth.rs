//! Limits of sequences sampled toward a truncated boundary.
//!
//! Given values `a_0, …, a_m` ordered toward the boundary (on nodes roughly
//! equally spaced in `ln x`), the successive differences tell whether the
//! sequence settles, grows without bound, or wobbles. Settling sequences
//! are extrapolated with a geometric tail, which is exact for the power-law
//! corrections produced by the catalog models.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendTag {
    Converged,
    Diverging,
    Oscillating,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Trend {
    /// Extrapolated limit (`+∞` when diverging, last value when oscillating).
    pub limit: f64,
    /// Value at the node closest to the boundary.
    pub last: f64,
    /// Smallest and largest plausible limit.
    pub lower: f64,
    pub upper: f64,
    pub tag: TrendTag,
}

impl Trend {
    pub fn is_zero(&self, tol: f64) -> bool {
        self.tag == TrendTag::Converged && self.limit.abs() <= tol
    }
}

/// Classifies and extrapolates `values`, ordered toward the boundary.
pub fn trend(values: &[f64]) -> Trend {
    let m = values.len();
    let last = *values.last().unwrap_or(&0.0);
    let scale = values.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let flat_tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    if m < 3 || values.iter().any(|v| !v.is_finite()) {
        let finite = values.iter().all(|v| v.is_finite());
        return Trend {
            limit: if finite { last } else { f64::INFINITY },
            last,
            lower: last,
            upper: if finite { last } else { f64::INFINITY },
            tag: if finite {
                TrendTag::Oscillating
            } else {
                TrendTag::Diverging
            },
        };
    }
    let d: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    if d.iter().all(|x| x.abs() <= flat_tol) {
        return Trend {
            limit: last,
            last,
            lower: last,
            upper: last,
            tag: TrendTag::Converged,
        };
    }
    let up = d.iter().all(|x| *x >= -flat_tol);
    let down = d.iter().all(|x| *x <= flat_tol);
    if !up && !down {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return Trend {
            limit: last,
            last,
            lower: lo,
            upper: hi,
            tag: TrendTag::Oscillating,
        };
    }
    // ratios of successive non-negligible differences
    let ratios: Vec<f64> = d
        .windows(2)
        .filter(|w| w[0].abs() > flat_tol)
        .map(|w| w[1] / w[0])
        .collect();
    let r = ratios.last().copied().unwrap_or(0.0);
    let r_max = ratios.iter().copied().fold(0.0f64, f64::max);
    if r_max >= 0.999 || r >= 0.98 {
        return Trend {
            limit: if up { f64::INFINITY } else { f64::NEG_INFINITY },
            last,
            lower: if up { last } else { f64::NEG_INFINITY },
            upper: if up { f64::INFINITY } else { last },
            tag: TrendTag::Diverging,
        };
    }
    let r = r.max(0.0);
    let tail = d[d.len() - 1] * r / (1.0 - r);
    // a tail bound using the slowest observed contraction
    let r_slow = r_max.max(r);
    let tail_slow = d[d.len() - 1] * r_slow / (1.0 - r_slow);
    let limit = last + tail;
    let (a, b) = (last, last + tail_slow);
    Trend {
        limit,
        last,
        lower: a.min(b).min(limit),
        upper: a.max(b).max(limit),
        tag: TrendTag::Converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_tail_is_exact() {
        let v: Vec<f64> = (0..10).map(|k| 1.0 - 0.7f64.powi(k)).collect();
        let t = trend(&v);
        assert_eq!(t.tag, TrendTag::Converged);
        assert!((t.limit - 1.0).abs() < 1e-12);
        assert!(t.lower <= 1.0 + 1e-12 && t.upper >= 1.0 - 1e-12);
    }

    #[test]
    fn constant_and_zero() {
        let t = trend(&[0.0; 10]);
        assert_eq!(t.tag, TrendTag::Converged);
        assert_eq!(t.limit, 0.0);
        assert!(t.is_zero(1e-12));
    }

    #[test]
    fn linear_growth_diverges() {
        let v: Vec<f64> = (0..10).map(|k| k as f64).collect();
        assert_eq!(trend(&v).tag, TrendTag::Diverging);
        let v: Vec<f64> = (0..10).map(|k| 1.3f64.powi(k)).collect();
        assert_eq!(trend(&v).tag, TrendTag::Diverging);
    }

    #[test]
    fn alternating_oscillates() {
        let v: Vec<f64> = (0..10)
            .map(|k| if k % 2 == 0 { 1.0 } else { 2.0 })
            .collect();
        let t = trend(&v);
        assert_eq!(t.tag, TrendTag::Oscillating);
        assert_eq!((t.lower, t.upper), (1.0, 2.0));
    }
}
