//! Increasing and decreasing solutions of the generator equation for a
//! level-dependent volatility, and the transform `F = ψ/φ`.

use dynkin::diffusion::{phi_integral, solve_fundamental, DiffusionModel, FundamentalOptions};
use dynkin::grid::log_spaced;
use dynkin::poly::{Piece, PiecewisePoly};

fn main() -> dynkin::error::Result<()> {
    // σ(x) = 0.3x below 1, 0.1 + 0.2x above
    let vol = PiecewisePoly::new(vec![
        Piece::new(0.0, 1.0, [0.0, 0.3, 0.0, 0.0]),
        Piece::new(1.0, f64::INFINITY, [0.1, 0.2, 0.0, 0.0]),
    ])?;
    let model = DiffusionModel::beta_drift(0.05, vol)?;
    let grid = log_spaced(0.05, 20.0, 401)?;
    let pair = solve_fundamental(&model, &grid, FundamentalOptions::default())?;

    println!(
        "method {:?}, residual {:.2e}",
        pair.method(),
        pair.max_residual(&model)
    );
    println!("{:>10} {:>14} {:>14} {:>14}", "x", "psi", "phi", "F");
    for i in (0..pair.grid().len()).step_by(50) {
        let (psi, phi) = (pair.psi()[i], pair.phi()[i]);
        println!(
            "{:>10.4} {psi:>14.6e} {phi:>14.6e} {:>14.6e}",
            pair.grid()[i],
            psi / phi
        );
    }

    let gbm = DiffusionModel::gbm(0.05, 0.3)?;
    println!(
        "\nphi integral for gbm at x = 1: {:.12} (9/19 = {:.12})",
        phi_integral(&gbm, 1.0)?,
        9.0 / 19.0
    );
    Ok(())
}
