//! Synthesis, analysis and differentiation of parity-fixed series.

use sqg_sheets::trig::{analyze_even, differentiate, synth, weighted_norm, EvenSeries, Grid, TrigSeries};

fn main() -> sqg_sheets::Result<()> {
    let grid = Grid::new(16)?;
    let p = EvenSeries::new(vec![0.5, -0.25, 0.125])?;
    let values = synth(&p, &grid)?;
    let (back, mean) = analyze_even(&values, 3)?;
    println!("round trip {:?}, mean {mean:.1e}", back.as_slice());

    let dp = differentiate(&p);
    println!("p'(x) sine coefficients {:?}", dp.as_slice());
    println!("p(0.3) = {:.12}, p'(0.3) = {:.12}", p.eval(0.3), dp.eval(0.3));
    println!("weighted norm (k = 2, a = 0.1) = {:.6}", weighted_norm(&p, 2, 0.1)?);
    Ok(())
}
