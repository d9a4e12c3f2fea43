//! Measured kernel multipliers against the closed forms, and the constant C.

use std::f64::consts::PI;

use sqg_sheets::kernels::{constant_c, measure_multipliers};
use sqg_sheets::trig::Grid;

fn main() -> sqg_sheets::Result<()> {
    let grid = Grid::new(256)?;
    let table = measure_multipliers(8, &grid)?;
    println!("log mean at M = {}: {:.6}", table.m, table.log_mean);
    println!(" j      lambda   C j^2/2        mu     j^2/2          C  leakage");
    for r in &table.rows {
        println!(
            "{:2} {:11.6} {:9.6} {:9.6} {:9.4} {:10.6} {:8.1e}",
            r.j,
            r.lambda,
            r.lambda_closed(),
            r.mu,
            r.mu_closed(),
            r.c,
            r.leakage
        );
    }
    let fine = Grid::new(4096)?;
    let c1 = constant_c(1, &fine)?;
    println!("C_1 at M = 4096: {c1:.9}  (-2/pi = {:.9}, -5/(3 pi) = {:.9})", -2.0 / PI, -5.0 / (3.0 * PI));
    Ok(())
}
