//! Scaled call: the seller pays `C` times the call payoff. Below the critical
//! scale the seller never stops; above it, the seller cancels on an interval
//! `[K, x']` and `V` is no longer convex.

use dynkin::analysis::Obstacle;
use dynkin::catalog;
use dynkin::pipeline::{solve, Problem};

fn main() -> dynkin::error::Result<()> {
    let (beta, sigma, k) = (0.05, 0.3, 100.0);
    let critical = 1.0 + sigma * sigma / (2.0 * beta);
    println!("critical scale C = {critical}");

    for name in ["scaled_call_case1", "scaled_call_case2"] {
        let entry = catalog::preset(name)?;
        let s = solve(&Problem::from_catalog(&entry, 4001))?;
        let worst =
            s.v.grid()
                .iter()
                .zip(s.v.values())
                .map(|(x, v)| (v - entry.value(*x)).abs() / entry.value(*x).max(1e-12))
                .fold(0.0f64, f64::max);
        println!("\n{name}: max relative error {worst:.2e}");
        for c in &s.regions.e2 {
            println!("  seller region [{:.4}, {:.4}]", c.lo, c.hi);
        }
        for p in s
            .smooth_fit
            .points
            .iter()
            .filter(|p| p.obstacle == Obstacle::Upper)
        {
            println!(
                "  contact at {:.4}: slopes {:.6} / {:.6}, fit {}",
                p.x, p.v_slopes.0, p.v_slopes.1, p.passed
            );
        }
    }

    let c = 2.0;
    let x_prime = 2.0 * beta * c * k / ((2.0 * beta + sigma * sigma) * (c - 1.0));
    println!("\nexpected right end of the seller region for C = 2: {x_prime:.4}");
    Ok(())
}
