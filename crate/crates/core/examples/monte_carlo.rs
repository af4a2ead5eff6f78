//! Playing the game call on simulated paths: the seller cancels at the
//! strike, the buyer never exercises. The estimate is compared against the
//! solved value with the barrier-overshoot allowance, for shrinking steps.

use dynkin::catalog;
use dynkin::pipeline::{solve, Problem};
use dynkin::simulate::{estimate_r, tol_disc, McParams, Strategy};

fn main() -> dynkin::error::Result<()> {
    let entry = catalog::preset("game_call")?;
    let s = solve(&Problem::from_catalog(&entry, 2001))?;
    let p = &s.problem;
    let x0 = 50.0;
    let (buyer, seller) = (Strategy::Never, Strategy::above(100.0));
    let v = s.value_at(x0).unwrap();

    println!("V({x0}) = {v:.6}");
    println!(
        "{:>10} {:>10} {:>10} {:>10} {:>8}",
        "dt", "mean", "stderr", "tol_disc", "ok"
    );
    for dt in [4e-3, 2e-3, 1e-3, 5e-4] {
        let params = McParams {
            n_paths: 20_000,
            dt,
            ..McParams::default()
        };
        let e = estimate_r(&p.model, x0, &buyer, &seller, &p.payoffs, &params)?;
        let tol = tol_disc(&p.model, &p.payoffs, &s.fundamental, &buyer, &seller, dt);
        let ok = (e.mean - v).abs() <= 3.0 * e.stderr + tol;
        println!(
            "{dt:>10.0e} {:>10.4} {:>10.4} {tol:>10.4} {ok:>8}",
            e.mean, e.stderr
        );
    }
    Ok(())
}
