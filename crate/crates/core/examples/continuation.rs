//! Sweep in eps with the speed fit and the ±eps comparison.

use sqg_sheets::diagnostics::{mirror_check, wslope_fit};
use sqg_sheets::solver::{continuation, eps_ladder, SolverConfig};

fn main() -> sqg_sheets::Result<()> {
    let cfg = SolverConfig::default();
    let run = continuation(&eps_ladder(0.05, 0.01)?, 1.0, &cfg)?;
    for r in &run.records {
        println!(
            "eps {:.2}  W {:.15}  iters {}  residual {:.2e}  min kappa {:.6}",
            r.eps, r.w, r.iterations, r.residual_sup, r.min_curvature
        );
    }
    let fit = wslope_fit(&run.records)?;
    println!("W - W0 ~ {:?} |eps|^{:?}", fit.slope, fit.exponent);

    let minus = continuation(&eps_ladder(-0.05, 0.01)?, 1.0, &cfg)?;
    let report = mirror_check(run.records.last().unwrap(), minus.records.last().unwrap())?;
    println!("+/- eps: {report:?}");
    Ok(())
}
