//! Statistical check that no buyer deviation beats the solved value, plus
//! the drift of the stopped value process along sampled times.

use dynkin::catalog;
use dynkin::pipeline::{solve, Problem};
use dynkin::simulate::{
    optimal_strategies, saddle_probe, submartingale_ladder, McParams, ProbeSet,
};

fn main() -> dynkin::error::Result<()> {
    let entry = catalog::preset("game_call")?;
    let s = solve(&Problem::from_catalog(&entry, 2001))?;
    let (tau, gamma) = optimal_strategies(&s);
    println!("tau* = {tau:?}\ngamma* = {gamma:?}");

    let x0 = 50.0;
    let params = McParams {
        n_paths: 20_000,
        ..McParams::default()
    };
    let probes = ProbeSet {
        buyer_thresholds: (6..=14).map(|i| 10.0 * f64::from(i)).collect(),
        ..ProbeSet::default()
    };
    let report = match saddle_probe(&s, x0, &probes, &params) {
        Ok(r) => r,
        Err(dynkin::error::Error::ProbeViolation(r)) => *r,
        Err(e) => return Err(e),
    };
    println!("\nV({x0}) = {:.4}", report.value);
    for e in &report.buyer {
        println!(
            "{:<24} R = {:>8.4} +- {:.4}  bound {:.4}",
            e.label, e.estimate.mean, e.estimate.stderr, e.bound
        );
    }
    println!("{}", report.conclusion);

    println!("\nstopped value process:");
    for step in submartingale_ladder(&s, x0, &[0.0, 1.0, 2.0, 5.0, 10.0], &params)? {
        println!(
            "t = {:>4}: mean {:.4}, increment {:+.4} ({})",
            step.t,
            step.mean,
            step.increment,
            if step.ok { "ok" } else { "suspicious" }
        );
    }
    Ok(())
}
