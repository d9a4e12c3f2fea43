//! One Newton solve from the linear predictor.

use sqg_sheets::solver::{closure_w, newton_solve, Init, SolverConfig};
use sqg_sheets::contour::EvalOptions;
use sqg_sheets::trig::{EvenSeries, Grid};

fn main() -> sqg_sheets::Result<()> {
    let cfg = SolverConfig::default();
    let zero = EvenSeries::zeros(cfg.n);
    let w0 = closure_w(0.0, 1.0, &zero, &zero, &Grid::new(cfg.m)?, &EvalOptions::default())?;
    println!("closure speed at eps = 0: {w0}");

    let report = newton_solve(0.05, 1.0, Init::Predictor, &cfg)?;
    println!("iterations {}", report.iterations);
    for (k, r) in report.history.iter().enumerate() {
        println!("  {k}: {r:.3e}");
    }
    println!("W = {:.15}", report.state.w);
    println!("a_1..a_4 = {:?}", &report.state.p.as_slice()[..4]);
    println!("b_1..b_4 = {:?}", &report.state.q.as_slice()[..4]);
    Ok(())
}
