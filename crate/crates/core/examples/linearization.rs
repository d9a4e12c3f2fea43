//! Fourier blocks at the circle pair: measured, closed-form and finite differences.

use sqg_sheets::contour::{residual, EvalOptions, SheetState};
use sqg_sheets::kernels::measure_multipliers;
use sqg_sheets::linop::{assemble_blocks, det, finite_difference_blocks, linear_predict, BlockSource};
use sqg_sheets::trig::Grid;

fn main() -> sqg_sheets::Result<()> {
    let grid = Grid::new(256)?;
    let table = measure_multipliers(32, &grid)?;
    let measured = assemble_blocks(&table, BlockSource::Measured)?;
    let closed = assemble_blocks(&table, BlockSource::ClosedForm)?;
    let fd = finite_difference_blocks(4, 32, 1.0, &grid, 1e-6)?;
    for j in 1..=4 {
        let m = measured.block(j).unwrap();
        println!("Q_{j} measured {m:?} det {:.3e}", det(m));
        println!("     closed   {:?}", closed.block(j).unwrap());
        println!("     fd       {:?}", fd.blocks[j - 1]);
    }
    println!("off-block response {:.2e}", fd.max_off_block);

    let eps = 0.03;
    let start = SheetState::circle(eps, 1.0, 0.25, 32)?;
    let res = residual(&start, &grid, 32, &EvalOptions::default())?;
    let step = linear_predict(&res, &measured)?;
    let next = SheetState::new(eps, 1.0, 0.25 + step.dw, step.dp, step.dq)?;
    let after = residual(&next, &grid, 32, &EvalOptions::default())?;
    println!("predictor: residual {:.3e} -> {:.3e}", res.sup_norm(), after.sup_norm());
    Ok(())
}
