//! Velocity-path checks at a solved state.

use sqg_sheets::diagnostics::{curvature, verify_state};
use sqg_sheets::solver::{newton_solve, Init, SolverConfig};

fn main() -> sqg_sheets::Result<()> {
    let cfg = SolverConfig::default();
    let state = newton_solve(0.08, 1.0, Init::Predictor, &cfg)?.state;
    let grid = cfg.grid()?;
    let report = verify_state(&state, &grid, cfg.n, true)?;
    println!("{report:#?}");
    let kappa = curvature(&state, &grid)?;
    let (lo, hi) = kappa.iter().fold((f64::MAX, f64::MIN), |(a, b), &k| (a.min(k), b.max(k)));
    println!("curvature in [{lo:.8}, {hi:.8}]");
    Ok(())
}
