//! Curvature, mirror symmetry and speed fits for solved sheets.

use serde::{Deserialize, Serialize};

use crate::contour::{
    eval_display_literal, eval_fg, residual, verify_strength, verify_tangency, EvalOptions,
    PathChoice, SheetState,
};
use crate::error::{Error, Result};
use crate::solver::ContinuationRecord;
use crate::trig::{differentiate, Grid, TrigSeries};

/// Tolerances of the mirror comparison.
pub const MIRROR_COEFF_TOL: f64 = 1e-9;
pub const MIRROR_W_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub x: f64,
    pub z: [f64; 2],
    pub tangent: [f64; 2],
    pub normal: [f64; 2],
    pub kappa: f64,
    pub r: f64,
    pub gamma: f64,
}

/// r, r', r'' at x.
fn radial_jet(state: &SheetState, x: f64) -> Result<[f64; 3]> {
    let e2 = state.eps * state.eps;
    let dp = differentiate(&state.p);
    let ddp = differentiate(&dp);
    let r = 1.0 + e2 * state.p.eval(x);
    if !(r > 0.0) {
        return Err(Error::NonPositiveRadius { x, r });
    }
    Ok([r, e2 * dp.eval(x), e2 * ddp.eval(x)])
}

fn radial_kappa([r, r1, r2]: [f64; 3]) -> f64 {
    (r * r + 2.0 * r1 * r1 - r * r2) / (r * r + r1 * r1).powf(1.5)
}

fn parametric_kappa([r, r1, r2]: [f64; 3], x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    let z1p = r1 * c - r * s;
    let z2p = r1 * s + r * c;
    let z1pp = r2 * c - 2.0 * r1 * s - r * c;
    let z2pp = r2 * s + 2.0 * r1 * c - r * s;
    (z2pp * z1p - z1pp * z2p) / (z1p * z1p + z2p * z2p).powf(1.5)
}

fn kappa_at(state: &SheetState, xs: &[f64]) -> Result<Vec<f64>> {
    xs.iter().map(|&x| radial_jet(state, x).map(radial_kappa)).collect()
}

/// Curvature at the grid nodes from the radial closed form.
pub fn curvature(state: &SheetState, grid: &Grid) -> Result<Vec<f64>> {
    kappa_at(state, &grid.nodes())
}

/// Curvature at the grid nodes from the Cartesian parametrization.
pub fn curvature_parametric(state: &SheetState, grid: &Grid) -> Result<Vec<f64>> {
    grid.nodes()
        .into_iter()
        .map(|x| radial_jet(state, x).map(|jet| parametric_kappa(jet, x)))
        .collect()
}

/// Minimum over the nodes and the 4x refined grid.
pub fn min_curvature(state: &SheetState, grid: &Grid) -> Result<f64> {
    let mut xs = grid.nodes();
    xs.extend(grid.refined(4)?.nodes());
    Ok(kappa_at(state, &xs)?.into_iter().fold(f64::INFINITY, f64::min))
}

pub fn curve_samples(state: &SheetState, grid: &Grid) -> Result<Vec<CurveSample>> {
    let e2 = state.eps * state.eps;
    grid.nodes()
        .into_iter()
        .map(|x| {
            let jet = radial_jet(state, x)?;
            let [r, r1, _] = jet;
            let (s, c) = x.sin_cos();
            let t = [r1 * c - r * s, r1 * s + r * c];
            let len = t[0].hypot(t[1]);
            let tangent = [t[0] / len, t[1] / len];
            Ok(CurveSample {
                x,
                z: [r * c, r * s],
                tangent,
                normal: [-tangent[1], tangent[0]],
                kappa: radial_kappa(jet),
                r,
                gamma: 1.0 + e2 * state.q.eval(x),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MirrorReport {
    pub eps: f64,
    pub max_coeff_diff: f64,
    /// ("p" or "q", mode) of the largest coefficient difference
    pub worst_mode: Option<(String, usize)>,
    pub w_diff: f64,
    pub passed: bool,
}

/// Coefficientwise comparison of the ±ε records.
pub fn mirror_check(plus: &ContinuationRecord, minus: &ContinuationRecord) -> Result<MirrorReport> {
    if plus.eps.abs() != minus.eps.abs() {
        return Err(Error::Invalid(format!(
            "mirror check needs |eps| equal, got {} and {}",
            plus.eps, minus.eps
        )));
    }
    for (a, b) in [(&plus.p_coeffs, &minus.p_coeffs), (&plus.q_coeffs, &minus.q_coeffs)] {
        if a.len() != b.len() {
            return Err(Error::Length { expected: a.len(), got: b.len() });
        }
    }
    let mut worst: Option<(String, usize)> = None;
    let mut max_diff = 0.0f64;
    for (name, a, b) in [
        ("p", &plus.p_coeffs, &minus.p_coeffs),
        ("q", &plus.q_coeffs, &minus.q_coeffs),
    ] {
        for (i, (x, y)) in a.iter().zip(b).enumerate() {
            let diff = (x - y).abs();
            if diff > max_diff {
                max_diff = diff;
                worst = Some((name.to_string(), i + 1));
            }
        }
    }
    let w_diff = (plus.w - minus.w).abs();
    Ok(MirrorReport {
        eps: plus.eps.abs(),
        max_coeff_diff: max_diff,
        worst_mode: worst,
        w_diff,
        passed: max_diff < MIRROR_COEFF_TOL && w_diff < MIRROR_W_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WSlopeFit {
    pub w0: f64,
    /// prefactor c in |W − W0| ≈ c·|ε|^exponent
    pub slope: Option<f64>,
    pub exponent: Option<f64>,
}

/// Log-log least squares of |W − W0| against |ε|; W0 from the ε = 0 record.
pub fn wslope_fit(records: &[ContinuationRecord]) -> Result<WSlopeFit> {
    let w0 = records
        .iter()
        .find(|r| r.eps == 0.0)
        .map(|r| r.w)
        .ok_or_else(|| Error::Invalid("slope fit needs the eps = 0 record".into()))?;
    let branch: Vec<_> = records.iter().filter(|r| r.eps != 0.0).collect();
    if branch.len() < 4 {
        return Err(Error::Invalid(format!(
            "slope fit needs at least 4 records with eps != 0, got {}",
            branch.len()
        )));
    }
    let pts: Vec<(f64, f64)> = branch
        .iter()
        .filter(|r| r.w != w0)
        .map(|r| (r.eps.abs().ln(), (r.w - w0).abs().ln()))
        .collect();
    if pts.len() < 2 {
        return Ok(WSlopeFit { w0, slope: None, exponent: None });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Ok(WSlopeFit { w0, slope: None, exponent: None });
    }
    let exponent = sxy / sxx;
    Ok(WSlopeFit {
        w0,
        slope: Some((my - exponent * mx).exp()),
        exponent: Some(exponent),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub eps: f64,
    pub d: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub m: usize,
    pub residual_sup: f64,
    pub tangency_sup: f64,
    pub strength_mean: f64,
    pub strength_std: f64,
    pub strength_relative_spread: f64,
    #[serde(rename = "K")]
    pub k: f64,
    /// K including the grid cutoff constant m₁/ε²
    pub k_with_cutoff: f64,
    /// nodal sup-norm gaps between the expansion and full formula paths
    pub dual_path_f_gap: f64,
    pub dual_path_g_gap: f64,
    /// gaps to the functionals in display-literal form, when requested
    pub display_f_gap: Option<f64>,
    pub display_g_gap: Option<f64>,
}

fn sup_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Velocity-path checks and formula-path gaps at a solved state (ε ≠ 0).
pub fn verify_state(state: &SheetState, grid: &Grid, n: usize, display: bool) -> Result<VerifyReport> {
    let tangency = verify_tangency(state, grid)?;
    let strength = verify_strength(state, grid)?;
    let (fe, ge, _) = eval_fg(state, grid, &EvalOptions::with_path(PathChoice::Expansion))?;
    let (ff, gf, _) = eval_fg(state, grid, &EvalOptions::with_path(PathChoice::Full))?;
    let (display_f_gap, display_g_gap) = if display {
        let (fd, gd) = eval_display_literal(state, grid)?;
        (Some(sup_gap(&fd, &ff)), Some(sup_gap(&gd, &gf)))
    } else {
        (None, None)
    };
    Ok(VerifyReport {
        eps: state.eps,
        d: state.d,
        w: state.w,
        m: grid.m(),
        residual_sup: residual(state, grid, n, &EvalOptions::default())?.sup_norm(),
        tangency_sup: tangency.iter().fold(0.0, |a, v| a.max(v.abs())),
        strength_mean: strength.mean,
        strength_std: strength.std,
        strength_relative_spread: strength.relative_spread(),
        k: strength.k_regularized(),
        k_with_cutoff: strength.k_estimate,
        dual_path_f_gap: sup_gap(&fe, &ff),
        dual_path_g_gap: sup_gap(&ge, &gf),
        display_f_gap,
        display_g_gap,
    })
}
