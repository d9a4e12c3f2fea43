//! Singular kernels on the staggered grid.
//!
//! For an outer node `x_i` the inner nodes are `x_i ± θ_m` with
//! `θ_m = (2m+1)π/M`, `m < M/2`. They are visited in symmetric pairs so
//! that integrands odd about `x̄ = x` cancel exactly, and the even
//! hypersingular part is cut off at scale `π/M`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::reduce::tree_sum;
use crate::trig::{analyze_even, analyze_odd, synth, EvenSeries, Grid, TrigSeries};

/// Per-offset constants shared by every kernel sum on a grid of size M.
#[derive(Clone, Debug)]
pub struct KernelTable {
    m: usize,
    /// θ_m = (2m+1)π/M
    pub theta: Vec<f64>,
    /// sin(θ_m / 2), always positive
    pub half_sin: Vec<f64>,
    pub sin_theta: Vec<f64>,
    pub cos_theta: Vec<f64>,
    log_mean: f64,
}

impl KernelTable {
    pub fn new(grid: &Grid) -> Self {
        let m = grid.m();
        let half = m / 2;
        let theta: Vec<f64> = (0..half)
            .map(|k| (2 * k + 1) as f64 * PI / m as f64)
            .collect();
        let half_sin: Vec<f64> = theta.iter().map(|t| (0.5 * t).sin()).collect();
        let sin_theta = theta.iter().map(|t| t.sin()).collect();
        let cos_theta = theta.iter().map(|t| t.cos()).collect();
        let logs: Vec<f64> = half_sin.iter().map(|s| 2.0 / (4.0 * s)).collect();
        let log_mean = tree_sum(&logs) / m as f64;
        Self {
            m,
            theta,
            half_sin,
            sin_theta,
            cos_theta,
            log_mean,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn pairs(&self) -> usize {
        self.m / 2
    }

    /// Mean of 1/(4|sin(δ/2)|) over the staggered offsets; the finite-part
    /// value of the logarithmic kernel at mode 0.
    pub fn log_mean(&self) -> f64 {
        self.log_mean
    }

    /// Staggered sample index at `x_i + θ_k`.
    #[inline]
    pub fn ahead(&self, i: usize, k: usize) -> usize {
        (i + k) % self.m
    }

    /// Staggered sample index at `x_i - θ_k`.
    #[inline]
    pub fn behind(&self, i: usize, k: usize) -> usize {
        (i + self.m - k - 1) % self.m
    }
}

/// Mean of `f` over the staggered nodes around `x`.
///
/// `f` must be 2π-periodic: the nodes are visited as `x ± θ_k`.
pub fn pv_mean_integral<F>(f: F, x: f64, grid: &Grid) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let table = KernelTable::new(grid);
    let m = grid.m();
    let mut pairs = Vec::with_capacity(table.pairs());
    for (k, theta) in table.theta.iter().enumerate() {
        let fwd = f(x + theta);
        if !fwd.is_finite() {
            return Err(Error::NonFinite { node: k });
        }
        let back = f(x - theta);
        if !back.is_finite() {
            return Err(Error::NonFinite { node: m - 1 - k });
        }
        pairs.push(fwd + back);
    }
    Ok(tree_sum(&pairs) / m as f64)
}

fn check_nyquist(h: &EvenSeries, grid: &Grid) -> Result<()> {
    if h.truncation() > grid.m() / 2 {
        return Err(Error::Nyquist {
            n: h.truncation(),
            m: grid.m(),
        });
    }
    Ok(())
}

fn apply_pairs<F>(grid: &Grid, table: &KernelTable, term: F) -> Vec<f64>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let m = grid.m();
    (0..m)
        .into_par_iter()
        .map(|i| {
            let terms: Vec<f64> = (0..table.pairs()).map(|k| term(i, k)).collect();
            tree_sum(&terms) / m as f64
        })
        .collect()
}

/// x ↦ mean of h(x̄) sin(x−x̄) / (4|sin((x−x̄)/2)|³).
pub fn sine_kernel_apply(h: &EvenSeries, grid: &Grid) -> Result<Vec<f64>> {
    check_nyquist(h, grid)?;
    let table = KernelTable::new(grid);
    let hs = synth(h, &grid.staggered())?;
    Ok(apply_pairs(grid, &table, |i, k| {
        let s = table.half_sin[k];
        let w = table.sin_theta[k] / (4.0 * s * s * s);
        w * (hs[table.behind(i, k)] - hs[table.ahead(i, k)])
    }))
}

/// x ↦ mean of (h(x) − h(x̄)) / (4|sin((x−x̄)/2)|³).
pub fn even_kernel_apply(h: &EvenSeries, grid: &Grid) -> Result<Vec<f64>> {
    check_nyquist(h, grid)?;
    let table = KernelTable::new(grid);
    let hp = synth(h, &grid.plain())?;
    let hs = synth(h, &grid.staggered())?;
    Ok(apply_pairs(grid, &table, |i, k| {
        let s = table.half_sin[k];
        let w = 1.0 / (4.0 * s * s * s);
        w * ((hp[i] - hs[table.ahead(i, k)]) + (hp[i] - hs[table.behind(i, k)]))
    }))
}

/// x ↦ mean of h(x̄) / (4|sin((x−x̄)/2)|).
pub fn log_kernel_apply(h: &EvenSeries, grid: &Grid) -> Result<Vec<f64>> {
    check_nyquist(h, grid)?;
    let table = KernelTable::new(grid);
    let hs = synth(h, &grid.staggered())?;
    Ok(apply_pairs(grid, &table, |i, k| {
        let w = 1.0 / (4.0 * table.half_sin[k]);
        w * (hs[table.ahead(i, k)] + hs[table.behind(i, k)])
    }))
}

/// Mean over (0, 2π) of sin(j x̄) ln tan(x̄/4), staggered midpoint rule.
pub fn constant_c(j: usize, grid: &Grid) -> Result<f64> {
    if j == 0 {
        return Err(Error::Invalid("constant C needs j >= 1".into()));
    }
    let nodes = grid.staggered().nodes();
    let terms: Vec<f64> = nodes
        .iter()
        .map(|x| (j as f64 * x).sin() * (0.25 * x).tan().ln())
        .collect();
    Ok(tree_sum(&terms) / grid.m() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultiplierRow {
    pub j: usize,
    /// sine-kernel multiplier: cos(jx) ↦ λ sin(jx)
    pub lambda: f64,
    /// even-difference multiplier: cos(jx) ↦ μ cos(jx)
    pub mu: f64,
    /// logarithmic-kernel multiplier: cos(jx) ↦ ℓ cos(jx)
    pub log: f64,
    pub c: f64,
    /// largest off-peak coefficient relative to the peak, over all three probes
    pub leakage: f64,
}

impl MultiplierRow {
    pub fn lambda_closed(&self) -> f64 {
        let j = self.j as f64;
        self.c * j * j / 2.0
    }

    pub fn mu_closed(&self) -> f64 {
        let j = self.j as f64;
        j * j / 2.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultiplierTable {
    pub m: usize,
    pub log_mean: f64,
    pub rows: Vec<MultiplierRow>,
}

impl MultiplierTable {
    pub fn row(&self, j: usize) -> Option<&MultiplierRow> {
        self.rows.get(j.checked_sub(1)?)
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }
}

fn peak_and_leak(coeffs: &[f64], j: usize) -> (f64, f64) {
    let peak = coeffs[j - 1];
    let off = coeffs
        .iter()
        .enumerate()
        .filter(|(idx, _)| idx + 1 != j)
        .map(|(_, c)| c.abs())
        .fold(0.0, f64::max);
    (peak, if peak == 0.0 { f64::INFINITY } else { off / peak.abs() })
}

/// Probe the three kernel operators with unit cosines.
pub fn measure_multipliers(n: usize, grid: &Grid) -> Result<MultiplierTable> {
    if n == 0 || 4 * n > grid.m() {
        return Err(Error::Invalid(format!(
            "multiplier probe needs 1 <= N <= M/4 (N = {n}, M = {})",
            grid.m()
        )));
    }
    let probe = 2 * n;
    let rows = (1..=n)
        .map(|j| {
            let h = EvenSeries::unit(j, j);
            let s = analyze_odd(&sine_kernel_apply(&h, grid)?, probe)?;
            let (e, _) = analyze_even(&even_kernel_apply(&h, grid)?, probe)?;
            let (l, _) = analyze_even(&log_kernel_apply(&h, grid)?, probe)?;
            let (lambda, leak_s) = peak_and_leak(s.as_slice(), j);
            let (mu, leak_e) = peak_and_leak(e.as_slice(), j);
            let (log, leak_l) = peak_and_leak(l.as_slice(), j);
            Ok(MultiplierRow {
                j,
                lambda,
                mu,
                log,
                c: constant_c(j, grid)?,
                leakage: leak_s.max(leak_e).max(leak_l),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiplierTable {
        m: grid.m(),
        log_mean: KernelTable::new(grid).log_mean(),
        rows,
    })
}

/// Squared distances that appear in the self and mirror interactions.
pub struct KernelDenominators;

impl KernelDenominators {
    /// |z(x) − z(x̄)|² for z = (1 + ε²p)(cos, sin).
    pub fn near(x: f64, xb: f64, eps: f64, p: &EvenSeries) -> f64 {
        let e2 = eps * eps;
        let r = 1.0 + e2 * p.eval(x);
        let rb = 1.0 + e2 * p.eval(xb);
        let s = (0.5 * (x - xb)).sin();
        (r - rb) * (r - rb) + 4.0 * r * rb * s * s
    }

    /// |ε z(x) + ε z(x̄) − 2d e₁|².
    pub fn far(x: f64, xb: f64, eps: f64, p: &EvenSeries, d: f64) -> f64 {
        let e2 = eps * eps;
        let r = 1.0 + e2 * p.eval(x);
        let rb = 1.0 + e2 * p.eval(xb);
        let a = eps * (r * x.cos() + rb * xb.cos()) - 2.0 * d;
        let b = eps * (r * x.sin() + rb * xb.sin());
        a * a + b * b
    }

    /// (2d − 2|ε|(1 + ε²‖p‖))² with ‖p‖ bounded by the coefficient sum.
    pub fn far_lower_bound(eps: f64, p: &EvenSeries, d: f64) -> f64 {
        let reach = eps.abs() * (1.0 + eps * eps * p.abs_sum());
        let gap = 2.0 * d - 2.0 * reach;
        gap * gap
    }
}
