//! Linearization at the circle pair (ε = 0, p = q = 0).
//!
//! At ε = 0 the residual is affine in (p, q) and diagonal in Fourier
//! modes, so the derivative splits into 2×2 blocks acting on
//! (a_j, b_j) ↦ (f_j, g_j).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::{residual, EvalOptions, PathChoice, ResidualPair, SheetState};
use crate::error::{Error, Result};
use crate::kernels::{even_kernel_apply, log_kernel_apply, sine_kernel_apply, KernelTable, MultiplierTable};
use crate::trig::{analyze_even, analyze_odd, synth, Differentiate, EvenSeries, Grid, TrigSeries};

pub type Block = [[f64; 2]; 2];

pub const SINGULAR_DET: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockSource {
    /// closed-form entries built from the constant C
    ClosedForm,
    /// entries of the discrete linearization
    Measured,
}

impl BlockSource {
    pub fn label(&self) -> &'static str {
        match self {
            BlockSource::ClosedForm => "closed_form",
            BlockSource::Measured => "measured",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockOperator {
    pub source: BlockSource,
    /// blocks[j - 1] = Q_j
    pub blocks: Vec<Block>,
}

impl BlockOperator {
    pub fn block(&self, j: usize) -> Option<&Block> {
        self.blocks.get(j.checked_sub(1)?)
    }

    pub fn n(&self) -> usize {
        self.blocks.len()
    }
}

pub fn det(q: &Block) -> f64 {
    q[0][0] * q[1][1] - q[0][1] * q[1][0]
}

fn sub(a: &[f64], b: &[f64], scale: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - scale * y).collect()
}

/// Directional derivative of (F, G) at the circle pair, applied to
/// (h1, h2) = (δp, δq). Returns nodal values on the plain grid.
pub fn gateaux_origin(h1: &EvenSeries, h2: &EvenSeries, grid: &Grid) -> Result<(Vec<f64>, Vec<f64>)> {
    let m1 = KernelTable::new(grid).log_mean();
    let dh1 = synth(&h1.differentiate(), grid)?;
    let s1 = sine_kernel_apply(h1, grid)?;
    let s2 = sine_kernel_apply(h2, grid)?;
    let e1 = even_kernel_apply(h1, grid)?;
    let l1 = log_kernel_apply(h1, grid)?;
    let l2 = log_kernel_apply(h2, grid)?;
    let v1 = synth(h1, grid)?;
    let v2 = synth(h2, grid)?;
    let f: Vec<f64> = (0..grid.m())
        .map(|i| -m1 * dh1[i] + 0.25 * s1[i] - 0.5 * s2[i])
        .collect();
    let mut g: Vec<f64> = (0..grid.m())
        .map(|i| m1 * v2[i] - 2.5 * m1 * v1[i] + l2[i] - 0.5 * l1[i] + 0.5 * e1[i])
        .collect();
    remove_mean(&mut g);
    Ok((f, g))
}

/// The closed form: F-direction ½h1′ + S[h2], G-direction h1 − K[h1] − ½h2.
pub fn gateaux_origin_closed_form(
    h1: &EvenSeries,
    h2: &EvenSeries,
    grid: &Grid,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let dh1 = synth(&h1.differentiate(), grid)?;
    let s2 = sine_kernel_apply(h2, grid)?;
    let e1 = even_kernel_apply(h1, grid)?;
    let v1 = synth(h1, grid)?;
    let v2 = synth(h2, grid)?;
    let f = (0..grid.m()).map(|i| 0.5 * dh1[i] + s2[i]).collect();
    let mut g: Vec<f64> = (0..grid.m()).map(|i| v1[i] - e1[i] - 0.5 * v2[i]).collect();
    remove_mean(&mut g);
    Ok((f, g))
}

fn remove_mean(v: &mut [f64]) {
    let mean = crate::reduce::tree_sum(v) / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
}

/// Blocks for modes 1..N of the table.
pub fn assemble_blocks(table: &MultiplierTable, source: BlockSource) -> Result<BlockOperator> {
    let m1 = table.log_mean;
    let blocks = table
        .rows
        .iter()
        .map(|row| {
            let j = row.j as f64;
            match source {
                BlockSource::ClosedForm => Ok([
                    [-j / 2.0, row.c * j * j / 2.0],
                    [(2.0 + j * j) / 2.0, -0.5],
                ]),
                BlockSource::Measured => {
                    let entries = [row.lambda, row.mu, row.log];
                    if entries.iter().any(|v| *v == 0.0 || !v.is_finite()) {
                        return Err(Error::Invalid(format!(
                            "degenerate measured multiplier at mode {}",
                            row.j
                        )));
                    }
                    Ok([
                        [j * m1 + 0.25 * row.lambda, -0.5 * row.lambda],
                        [-2.5 * m1 - 0.5 * row.log + 0.5 * row.mu, m1 + row.log],
                    ])
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockOperator { source, blocks })
}

pub fn invert_block(q: &Block, j: usize) -> Result<Block> {
    let det = det(q);
    if det.abs() < SINGULAR_DET || !det.is_finite() {
        return Err(Error::SingularBlock { j, det });
    }
    Ok([
        [q[1][1] / det, -q[0][1] / det],
        [-q[1][0] / det, q[0][0] / det],
    ])
}

pub fn mul(a: &Block, b: &Block) -> Block {
    let mut out = [[0.0; 2]; 2];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

/// Update of (p, q, W) from one step of the origin-linearized system.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub dp: EvenSeries,
    pub dq: EvenSeries,
    pub dw: f64,
}

/// Blockwise −Q_j⁻¹(f_j, g_j) for j ≥ 2. Mode 1 is gauged
/// (δb₁ = −δa₁) and solved jointly with δW, whose direction at the
/// origin is (−sin x, −cos x).
pub fn linear_predict(res: &ResidualPair, op: &BlockOperator) -> Result<Prediction> {
    let n = res.f.truncation().max(res.g.truncation());
    let mut dp = vec![0.0; n];
    let mut dq = vec![0.0; n];
    let mut dw = 0.0;
    for j in 1..=n.min(op.n()) {
        let (f, g) = (res.f.get(j), res.g.get(j));
        let q = op.block(j).expect("block in range");
        if j == 1 {
            let gauged = [[q[0][0] - q[0][1], -1.0], [q[1][0] - q[1][1], -1.0]];
            let inv = invert_block(&gauged, 1)?;
            let a = -(inv[0][0] * f + inv[0][1] * g);
            dw = -(inv[1][0] * f + inv[1][1] * g);
            dp[0] = a;
            dq[0] = -a;
        } else {
            let inv = invert_block(q, j)?;
            dp[j - 1] = -(inv[0][0] * f + inv[0][1] * g);
            dq[j - 1] = -(inv[1][0] * f + inv[1][1] * g);
        }
    }
    Ok(Prediction {
        dp: EvenSeries::new(dp)?,
        dq: EvenSeries::new(dq)?,
        dw,
    })
}

/// Central-difference Jacobian of the ε = 0 residual at the circle pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FdProbe {
    pub blocks: Vec<Block>,
    /// largest response in a mode other than the perturbed one
    pub max_off_block: f64,
}

pub fn finite_difference_blocks(j_max: usize, n: usize, d: f64, grid: &Grid, step: f64) -> Result<FdProbe> {
    let w0 = 1.0 / (4.0 * d * d);
    let opts = EvalOptions::with_path(PathChoice::Expansion);
    let columns: Vec<(usize, usize, ResidualPair, ResidualPair)> = (1..=j_max)
        .flat_map(|j| [(j, 0usize), (j, 1usize)])
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(j, which)| {
            let eval = |h: f64| -> Result<ResidualPair> {
                let pert = EvenSeries::unit(j, n).scaled(h);
                let zero = EvenSeries::zeros(n);
                let (p, q) = if which == 0 { (pert, zero) } else { (zero, pert) };
                residual(&SheetState::new(0.0, d, w0, p, q)?, grid, n, &opts)
            };
            Ok((j, which, eval(step)?, eval(-step)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut blocks = vec![[[0.0; 2]; 2]; j_max];
    let mut off: f64 = 0.0;
    for (j, which, plus, minus) in columns {
        let df: Vec<f64> = sub(plus.f.as_slice(), minus.f.as_slice(), 1.0)
            .into_iter()
            .map(|v| v / (2.0 * step))
            .collect();
        let dg: Vec<f64> = sub(plus.g.as_slice(), minus.g.as_slice(), 1.0)
            .into_iter()
            .map(|v| v / (2.0 * step))
            .collect();
        blocks[j - 1][0][which] = df[j - 1];
        blocks[j - 1][1][which] = dg[j - 1];
        for (k, (a, b)) in df.iter().zip(&dg).enumerate() {
            if k + 1 != j {
                off = off.max(a.abs()).max(b.abs());
            }
        }
    }
    Ok(FdProbe {
        blocks,
        max_off_block: off,
    })
}

/// Block of mode j read off nodal outputs of a derivative map.
pub fn project_block<F>(j: usize, n: usize, apply: F) -> Result<Block>
where
    F: Fn(&EvenSeries, &EvenSeries) -> Result<(Vec<f64>, Vec<f64>)>,
{
    let unit = EvenSeries::unit(j, n);
    let zero = EvenSeries::zeros(n);
    let (f1, g1) = apply(&unit, &zero)?;
    let (f2, g2) = apply(&zero, &unit)?;
    let probe = 2 * n;
    let col = |f: &[f64], g: &[f64]| -> Result<(f64, f64)> {
        Ok((analyze_odd(f, probe)?.get(j), analyze_even(g, probe)?.0.get(j)))
    };
    let (q11, q21) = col(&f1, &g1)?;
    let (q12, q22) = col(&f2, &g2)?;
    Ok([[q11, q12], [q21, q22]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::measure_multipliers;

    #[test]
    fn identity_inverts_to_identity() {
        let id = [[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(invert_block(&id, 3).unwrap(), id);
    }

    #[test]
    fn singular_block_names_mode() {
        let q = [[1.0, 2.0], [2.0, 4.0]];
        assert!(matches!(invert_block(&q, 7), Err(Error::SingularBlock { j: 7, .. })));
    }

    #[test]
    fn measured_blocks_match_projected_gateaux() {
        let grid = Grid::new(128).unwrap();
        let table = measure_multipliers(8, &grid).unwrap();
        let op = assemble_blocks(&table, BlockSource::Measured).unwrap();
        for j in 1..=8 {
            let q = project_block(j, 8, |a, b| gateaux_origin(a, b, &grid)).unwrap();
            let m = op.block(j).unwrap();
            for r in 0..2 {
                for c in 0..2 {
                    assert!((q[r][c] - m[r][c]).abs() < 1e-10 * (1.0 + m[r][c].abs()));
                }
            }
        }
    }

    #[test]
    fn closed_form_gateaux_columns() {
        let grid = Grid::new(64).unwrap();
        let q = project_block(3, 4, |a, b| gateaux_origin_closed_form(a, b, &grid)).unwrap();
        assert!((q[0][0] + 1.5).abs() < 1e-13);
        assert!((q[1][1] + 0.5).abs() < 1e-13);
    }

    #[test]
    fn predictor_keeps_modes_separate() {
        let grid = Grid::new(64).unwrap();
        let table = measure_multipliers(8, &grid).unwrap();
        let op = assemble_blocks(&table, BlockSource::Measured).unwrap();
        let zero = ResidualPair {
            f: crate::trig::OddSeries::zeros(8),
            g: EvenSeries::zeros(8),
            g_mean_removed: 0.0,
        };
        let p = linear_predict(&zero, &op).unwrap();
        assert!(p.dp.abs_sum() == 0.0 && p.dq.abs_sum() == 0.0 && p.dw == 0.0);
        let mut f = vec![0.0; 8];
        f[2] = 1e-3;
        let res = ResidualPair {
            f: crate::trig::OddSeries::new(f).unwrap(),
            g: EvenSeries::new(vec![0.0, 0.0, 2e-3, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap(),
            g_mean_removed: 0.0,
        };
        let p = linear_predict(&res, &op).unwrap();
        for j in 1..=8 {
            if j != 3 {
                assert_eq!(p.dp.get(j), 0.0);
                assert_eq!(p.dq.get(j), 0.0);
            }
        }
        assert!(p.dp.get(3) != 0.0);
    }
}
