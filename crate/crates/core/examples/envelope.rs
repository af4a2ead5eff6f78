//! The smallest function between two obstacles that is concave wherever it
//! lies below the upper one and convex wherever it lies above the lower one,
//! computed two ways.

use dynkin::envelope::{smallest_in_h, BoundaryPolicy, Tolerances};
use dynkin::simulate::{chain_dynkin_oracle, ChainProblem, PinRule};
use dynkin::transform::TransformedObstacles;

fn main() -> dynkin::error::Result<()> {
    let y: Vec<f64> = (0..=40).map(|i| f64::from(i) * 0.25).collect();
    let h1: Vec<f64> = y.iter().map(|v| (2.0 - (v - 5.0).abs()).max(0.0)).collect();
    let h2: Vec<f64> = y.iter().map(|v| 1.5 + 0.1 * (v - 5.0).powi(2)).collect();
    let h2: Vec<f64> = h1.iter().zip(&h2).map(|(a, b)| a.max(*b)).collect();

    let ob = TransformedObstacles::new(y.clone(), h1.clone(), h2.clone())?;
    let env = smallest_in_h(&ob, BoundaryPolicy::Pinned, Tolerances::default())?;
    let low = chain_dynkin_oracle(&ChainProblem::new(
        y.clone(),
        h1.clone(),
        h2.clone(),
        PinRule::Low,
    )?)?;
    let high = chain_dynkin_oracle(&ChainProblem::new(
        y,
        h1.clone(),
        h2.clone(),
        PinRule::High,
    )?)?;

    // ends held on the lower obstacle, then on the upper one
    println!(
        "{:>6} {:>8} {:>8} {:>10} {:>10} {:>10} {:>10}",
        "y", "H1", "H2", "W low", "oracle", "W high", "oracle"
    );
    for (i, yi) in ob.ygrid.iter().enumerate().step_by(4) {
        println!(
            "{yi:>6.2} {:>8.4} {:>8.4} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            h1[i],
            h2[i],
            env.w_low.values()[i],
            low.values()[i],
            env.w_high.values()[i],
            high.values()[i],
        );
    }
    println!(
        "iterations {}, largest gap between the two {:e}",
        env.iterations, env.bracket_gap
    );
    Ok(())
}
