//! Two-point lattice: speed formulas and RK4 translation.

use sqg_sheets::pointvortex::{integrate_rk4, wstar, wstar_derivation, PointKernel, PointSystem};

fn main() -> sqg_sheets::Result<()> {
    let kernel = PointKernel::default();
    for m in 2..=4 {
        let sys = PointSystem::lattice(m, 1.0)?;
        println!(
            "m = {m}: W* = {:.6}, derivation form {:.6}, rhs {:?}",
            wstar(m, 1.0, &kernel)?,
            wstar_derivation(m, 1.0, &kernel)?,
            sys.rhs()?
        );
    }
    let sys = PointSystem::lattice(2, 1.0)?;
    let traj = integrate_rk4(&sys, 10.0, 1e-3)?;
    println!("after t = 10: {:?}", traj.last());
    Ok(())
}
