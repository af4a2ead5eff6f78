//! Game call option: the seller may cancel at any time by paying the
//! intrinsic value plus a fixed penalty.
//!
//! Run with `cargo run --release --example game_call`.

use dynkin::catalog;
use dynkin::pipeline::{solve, Problem};

fn main() -> dynkin::error::Result<()> {
    let entry = catalog::preset("game_call")?;
    let solved = solve(&Problem::from_catalog(&entry, 4001))?;

    println!("{:>8} {:>12} {:>12}", "x", "V", "closed form");
    for x in [25.0, 50.0, 80.0, 100.0, 120.0, 150.0, 400.0] {
        let v = solved.value_at(x).unwrap();
        println!("{x:>8} {v:>12.6} {:>12.6}", entry.value(x));
    }

    let r = &solved.regions;
    println!(
        "buyer stops on {:?}",
        r.e1.iter().map(|c| (c.lo, c.hi)).collect::<Vec<_>>()
    );
    println!(
        "seller stops on {:?}",
        r.e2.iter().map(|c| (c.lo, c.hi)).collect::<Vec<_>>()
    );
    println!("saddle verdict: {:?}", solved.saddle.verdict);
    println!("bracket gap: {:e}", solved.envelope.bracket_gap_rel);
    Ok(())
}
