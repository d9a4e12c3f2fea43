//! Residuals of a perturbed circle through both formula paths.

use sqg_sheets::contour::{residual, w_direction, EvalOptions, PathChoice, SheetState};
use sqg_sheets::trig::{EvenSeries, Grid};

fn main() -> sqg_sheets::Result<()> {
    let grid = Grid::new(256)?;
    let p = EvenSeries::new(vec![0.0, -2.0, 0.1])?;
    let q = EvenSeries::new(vec![0.0, 1.5, 0.0])?;
    let state = SheetState::new(0.05, 1.0, 0.25, p, q)?;
    let exp = residual(&state, &grid, 8, &EvalOptions::with_path(PathChoice::Expansion))?;
    let full = residual(&state, &grid, 8, &EvalOptions::with_path(PathChoice::Full))?;
    for j in 1..=4 {
        println!(
            "j = {j}: f {:+.12e} / {:+.12e}   g {:+.12e} / {:+.12e}",
            exp.f.get(j),
            full.f.get(j),
            exp.g.get(j),
            full.g.get(j)
        );
    }
    let (df, dg) = w_direction(&state, &grid, 8)?;
    println!("dF/dW mode 1 = {:.6}, dG/dW mode 1 = {:.6}", df.get(1), dg.get(1));
    Ok(())
}
