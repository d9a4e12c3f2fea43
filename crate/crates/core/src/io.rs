//! Output files. CSV numbers carry 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::contour::SheetState;
use crate::diagnostics::curve_samples;
use crate::error::Result;
use crate::kernels::MultiplierTable;
use crate::linop::BlockOperator;
use crate::pointvortex::Trajectory;
use crate::solver::ContinuationRecord;
use crate::trig::Grid;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_text(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, body)?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    write_text(path, &body)
}

pub fn records_json(records: &[ContinuationRecord]) -> Result<String> {
    let mut body = serde_json::to_string_pretty(records)?;
    body.push('\n');
    Ok(body)
}

pub fn parse_records_json(text: &str) -> Result<Vec<ContinuationRecord>> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_records_json(path: &Path, records: &[ContinuationRecord]) -> Result<()> {
    write_text(path, &records_json(records)?)
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Flat table: scalar fields then p_1..p_N, q_1..q_N.
pub fn write_records_csv(path: &Path, records: &[ContinuationRecord]) -> Result<()> {
    let n = records.first().map_or(0, |r| r.p_coeffs.len());
    let mut out = String::from("eps,d,W,residual_sup,iterations,min_curvature,K,wall_ms");
    for name in ["p", "q"] {
        for j in 1..=n {
            write!(out, ",{name}_{j}").unwrap();
        }
    }
    out.push('\n');
    for r in records {
        write!(
            out,
            "{},{},{},{},{},{},{},{}",
            num(r.eps),
            num(r.d),
            num(r.w),
            num(r.residual_sup),
            r.iterations,
            num(r.min_curvature),
            opt(r.k),
            opt(r.wall_ms)
        )
        .unwrap();
        for c in r.p_coeffs.iter().chain(&r.q_coeffs) {
            write!(out, ",{}", num(*c)).unwrap();
        }
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn curve_file_name(eps: f64) -> String {
    format!("curve_{eps:.6}.csv")
}

pub fn write_curve_csv(dir: &Path, state: &SheetState, grid: &Grid) -> Result<PathBuf> {
    let mut out = String::from("x,z1,z2,r,gamma,kappa\n");
    for c in curve_samples(state, grid)? {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            num(c.x),
            num(c.z[0]),
            num(c.z[1]),
            num(c.r),
            num(c.gamma),
            num(c.kappa)
        )
        .unwrap();
    }
    let path = dir.join(curve_file_name(state.eps));
    write_text(&path, &out)?;
    Ok(path)
}

/// The two displayed values of the trivial speed.
pub fn reference_speeds(d: f64) -> (f64, f64) {
    (1.0 / (4.0 * d * d), 1.0 / (2.0 * d * d))
}

pub fn write_wtable_csv(path: &Path, records: &[ContinuationRecord]) -> Result<()> {
    let mut out = String::from("eps,W,W_ref_4d2,W_ref_2d2\n");
    for r in records {
        let (w_4d2, w_2d2) = reference_speeds(r.d);
        writeln!(out, "{},{},{},{}", num(r.eps), num(r.w), num(w_4d2), num(w_2d2)).unwrap();
    }
    write_text(path, &out)
}

pub fn write_multipliers_csv(path: &Path, table: &MultiplierTable) -> Result<()> {
    let mut out = String::from("j,lambda_j,mu_j,C_j,lambda_closed,mu_closed\n");
    for r in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.j,
            num(r.lambda),
            num(r.mu),
            num(r.c),
            num(r.lambda_closed()),
            num(r.mu_closed())
        )
        .unwrap();
    }
    write_text(path, &out)
}

pub fn write_blocks_csv(path: &Path, ops: &[BlockOperator]) -> Result<()> {
    let mut out = String::from("j,q11,q12,q21,q22,det,source\n");
    for op in ops {
        for (i, q) in op.blocks.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                i + 1,
                num(q[0][0]),
                num(q[0][1]),
                num(q[1][0]),
                num(q[1][1]),
                num(crate::linop::det(q)),
                op.source.label()
            )
            .unwrap();
        }
    }
    write_text(path, &out)
}

/// Every `stride`-th sample plus the final one.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory, stride: usize) -> Result<()> {
    let stride = stride.max(1);
    let last = traj.times.len().saturating_sub(1);
    let mut out = String::from("t,i,z1,z2\n");
    for (s, (t, pos)) in traj.times.iter().zip(&traj.positions).enumerate() {
        if s % stride != 0 && s != last {
            continue;
        }
        for (i, z) in pos.iter().enumerate() {
            writeln!(out, "{},{},{},{}", num(*t), i, num(z[0]), num(z[1])).unwrap();
        }
    }
    write_text(path, &out)
}
