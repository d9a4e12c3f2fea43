//! Residual functionals of the translating sheet pair.
//!
//! The sheet is z(x) = r(x)(cos x, sin x) with r = 1 + ε²p and strength
//! density γ = 1 + ε²q. Its partner is the point reflection through d e₁
//! carrying the opposite strength. With u the rescaled velocity,
//!
//!   F  = −(u − W e₂)·z_x^⊥
//!   G̃ = (u − W e₂)·z_x γ / |z_x|²,   G = G̃ − mean(G̃).
//!
//! Three evaluators are provided. The expansion path factors the 1/ε²
//! singularity out analytically and is valid down to ε = 0. The full path
//! evaluates the same quantities literally. The velocity path assembles u
//! in Cartesian form and is used only for cross-checks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelTable;
use crate::reduce::{compensated_sum, tree_sum};
use crate::trig::{
    analyze_even, analyze_odd, synth, Differentiate, EvenSeries, Grid, OddSeries, TrigSeries,
};

pub const DEFAULT_EPS_SWITCH: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SheetState {
    pub eps: f64,
    pub d: f64,
    pub w: f64,
    pub p: EvenSeries,
    pub q: EvenSeries,
}

impl SheetState {
    pub fn new(eps: f64, d: f64, w: f64, p: EvenSeries, q: EvenSeries) -> Result<Self> {
        let state = Self { eps, d, w, p, q };
        state.validate()?;
        Ok(state)
    }

    /// p = q = 0.
    pub fn circle(eps: f64, d: f64, w: f64, n: usize) -> Result<Self> {
        Self::new(eps, d, w, EvenSeries::zeros(n), EvenSeries::zeros(n))
    }

    pub fn with_w(&self, w: f64) -> Self {
        Self { w, ..self.clone() }
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        Self { eps, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.eps.is_finite() || self.eps.abs() >= 0.5 {
            return Err(Error::Invalid(format!("eps must lie in (-1/2, 1/2), got {}", self.eps)));
        }
        if !self.d.is_finite() || self.d <= 0.5 {
            return Err(Error::Invalid(format!("d must exceed 1/2, got {}", self.d)));
        }
        if !self.w.is_finite() {
            return Err(Error::Invalid("W must be finite".into()));
        }
        let reach = self.eps.abs() * (1.0 + self.eps * self.eps * self.p.abs_sum());
        let limit = self.d - 0.5;
        if reach >= limit {
            return Err(Error::SheetsTouch { reach, limit });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathChoice {
    /// expansion below `eps_switch`, full formula above
    Auto,
    Expansion,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalOptions {
    pub eps_switch: f64,
    pub path: PathChoice,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            eps_switch: DEFAULT_EPS_SWITCH,
            path: PathChoice::Auto,
        }
    }
}

impl EvalOptions {
    pub fn with_path(path: PathChoice) -> Self {
        Self {
            path,
            ..Self::default()
        }
    }

    fn full(&self, eps: f64) -> Result<bool> {
        match self.path {
            PathChoice::Auto => Ok(eps.abs() >= self.eps_switch),
            PathChoice::Expansion => Ok(false),
            PathChoice::Full if eps == 0.0 => Err(Error::ZeroEps),
            PathChoice::Full => Ok(true),
        }
    }
}

/// Sine coefficients of F and cosine coefficients of the projected G.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualPair {
    pub f: OddSeries,
    pub g: EvenSeries,
    /// mean of G̃ with the divergent self constant m₁/ε² left out
    pub g_mean_removed: f64,
}

impl ResidualPair {
    pub fn sup_norm(&self) -> f64 {
        self.f
            .as_slice()
            .iter()
            .chain(self.g.as_slice())
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// f_1..f_N followed by g_1..g_N.
    pub fn to_vec(&self) -> Vec<f64> {
        self.f.as_slice().iter().chain(self.g.as_slice()).copied().collect()
    }
}

/// Nodal samples shared by every evaluator.
struct Samples {
    eps: f64,
    e2: f64,
    d: f64,
    w: f64,
    x: Vec<f64>,
    p: Vec<f64>,
    dp: Vec<f64>,
    q: Vec<f64>,
    ps: Vec<f64>,
    qs: Vec<f64>,
    dps: Vec<f64>,
}

impl Samples {
    fn new(state: &SheetState, grid: &Grid) -> Result<Self> {
        state.validate()?;
        let plain = grid.plain();
        let stag = grid.staggered();
        let dser = state.p.differentiate();
        let s = Self {
            eps: state.eps,
            e2: state.eps * state.eps,
            d: state.d,
            w: state.w,
            x: plain.nodes(),
            p: synth(&state.p, &plain)?,
            dp: synth(&dser, &plain)?,
            q: synth(&state.q, &plain)?,
            ps: synth(&state.p, &stag)?,
            qs: synth(&state.q, &stag)?,
            dps: synth(&dser, &stag)?,
        };
        for i in 0..s.x.len() {
            let r = 1.0 + s.e2 * s.p[i];
            if !(r > 0.0) {
                return Err(Error::NonPositiveRadius { x: s.x[i], r });
            }
            let g = 1.0 + s.e2 * s.q[i];
            if !(g > 0.0) {
                return Err(Error::Invalid(format!("strength density vanishes at node {i}")));
            }
        }
        Ok(s)
    }

    fn geometry(&self, i: usize) -> Geometry {
        let r = 1.0 + self.e2 * self.p[i];
        let rp = self.e2 * self.dp[i];
        let gamma = 1.0 + self.e2 * self.q[i];
        let (sx, cx) = self.x[i].sin_cos();
        Geometry {
            r,
            rp,
            gamma,
            cx,
            sx,
            speed2: r * r + rp * rp,
        }
    }
}

#[derive(Clone, Copy)]
struct Geometry {
    r: f64,
    rp: f64,
    gamma: f64,
    cx: f64,
    sx: f64,
    speed2: f64,
}

impl Geometry {
    fn beta(&self) -> f64 {
        self.gamma / self.speed2
    }

    /// z_x
    fn tangent(&self) -> [f64; 2] {
        [
            self.rp * self.cx - self.r * self.sx,
            self.rp * self.sx + self.r * self.cx,
        ]
    }
}

/// log1p(e2 t) / e2 with the e2 → 0 limit.
fn log_ratio(t: f64, e2: f64) -> f64 {
    let y = e2 * t;
    if y == 0.0 {
        t
    } else {
        y.ln_1p() / e2
    }
}

/// expm1(y) / y.
fn exprel(y: f64) -> f64 {
    if y.abs() < 1e-5 {
        1.0 + y / 2.0 + y * y / 6.0
    } else {
        y.exp_m1() / y
    }
}

/// Self-interaction at node i on the expansion path. Returns
/// (u_self·z_x^⊥, regular part of u_self·z_x).
fn self_expansion(s: &Samples, table: &KernelTable, i: usize) -> (f64, f64) {
    let e2 = s.e2;
    let p = s.p[i];
    let dp = s.dp[i];
    let r = 1.0 + e2 * p;
    let lp = log_ratio(p, e2);
    let mut fterms = Vec::with_capacity(table.pairs());
    let mut gterms = Vec::with_capacity(table.pairs());
    for k in 0..table.pairs() {
        let sh = table.half_sin[k];
        let st = table.sin_theta[k];
        let ct = table.cos_theta[k];
        let a = 1.0 / (8.0 * sh * sh * sh);
        let mut fk = 0.0;
        let mut gk = 0.0;
        for (sigma, l) in [(-1.0, table.ahead(i, k)), (1.0, table.behind(i, k))] {
            let pb = s.ps[l];
            let qb = s.qs[l];
            let diff = p - pb;
            let t = diff / (2.0 * sh);
            let rb = 1.0 + e2 * pb;
            let gb = 1.0 + e2 * qb;
            let rho = r * rb + e2 * e2 * t * t;
            let lsum = lp + log_ratio(pb, e2) + log_ratio(qb, e2)
                - 1.5 * log_ratio(p + pb + e2 * (p * pb + t * t), e2);
            let psi = lsum * exprel(e2 * lsum);
            let g_rho = gb / (rho * rho.sqrt());
            let sd = sigma * st;
            fk += a * (sd * psi + dp * (2.0 * sh * sh + e2 * (p - pb * ct)) * g_rho);
            gk += psi / (4.0 * sh) + a * (r * diff - dp * rb * sd) * g_rho;
        }
        fterms.push(fk);
        gterms.push(gk);
    }
    let m = table.m() as f64;
    (tree_sum(&fterms) / m, tree_sum(&gterms) / m)
}

/// Self-interaction at node i by the literal formula. Same return
/// convention as [`self_expansion`].
fn self_full(s: &Samples, table: &KernelTable, i: usize, geo: &Geometry) -> (f64, f64) {
    let e2 = s.e2;
    let Geometry { r, rp, .. } = *geo;
    let mut fterms = Vec::with_capacity(table.pairs());
    let mut gterms = Vec::with_capacity(table.pairs());
    for k in 0..table.pairs() {
        let sh = table.half_sin[k];
        let st = table.sin_theta[k];
        let mut fk = 0.0;
        let mut gk = 0.0;
        for (sigma, l) in [(-1.0, table.ahead(i, k)), (1.0, table.behind(i, k))] {
            let rb = 1.0 + e2 * s.ps[l];
            let gb = 1.0 + e2 * s.qs[l];
            let sd = sigma * st;
            let dr = e2 * (s.p[i] - s.ps[l]);
            // r − r̄ cos δ, written without the cancellation in 1 − cos δ
            let lag = dr + 2.0 * rb * sh * sh;
            let chord2 = dr * dr + 4.0 * r * rb * sh * sh;
            let inv = gb / (chord2 * chord2.sqrt());
            fk += (rp * lag + r * rb * sd) * inv;
            gk += (r * lag - rp * rb * sd) * inv;
        }
        fterms.push(fk);
        gterms.push(gk);
    }
    let m = table.m() as f64;
    let f = compensated_sum(&fterms) / (m * e2);
    let g = compensated_sum(&gterms) / (m * e2) - table.log_mean() / (e2 * geo.beta());
    (f, g)
}

/// Mirror sheet at node i over the plain grid. Returns
/// (u_mirror·z_x^⊥, u_mirror·z_x).
fn mirror(s: &Samples, i: usize, geo: &Geometry) -> (f64, f64) {
    let m = s.x.len();
    let eps = s.eps;
    let d = s.d;
    let Geometry { r, rp, cx, sx, .. } = *geo;
    let mut fterms = Vec::with_capacity(m);
    let mut gterms = Vec::with_capacity(m);
    for l in 0..m {
        let rb = 1.0 + s.e2 * s.p[l];
        let gb = 1.0 + s.e2 * s.q[l];
        let (sb, cb) = s.x[l].sin_cos();
        let delta = s.x[i] - s.x[l];
        let (sd, cd) = delta.sin_cos();
        let a = eps * (r * cx + rb * cb) - 2.0 * d;
        let b = eps * (r * sx + rb * sb);
        let dist2 = a * a + b * b;
        let inv = gb / (dist2 * dist2.sqrt());
        let along = eps * (r * rp + rb * rp * cd - r * rb * sd) - 2.0 * d * (rp * cx - r * sx);
        let cross = eps * (r * r + rb * rp * sd + r * rb * cd) - 2.0 * d * (rp * sx + r * cx);
        fterms.push(along * inv);
        gterms.push(cross * inv);
    }
    (-tree_sum(&fterms) / m as f64, -tree_sum(&gterms) / m as f64)
}

/// Nodal F and unprojected G̃ (self constant removed).
fn eval_nodal(state: &SheetState, grid: &Grid, opts: &EvalOptions) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = Samples::new(state, grid)?;
    let full = opts.full(state.eps)?;
    let table = KernelTable::new(grid);
    let m1 = table.log_mean();
    let rows: Vec<(f64, f64)> = (0..grid.m())
        .into_par_iter()
        .map(|i| {
            let geo = s.geometry(i);
            let beta = geo.beta();
            let (sf, sg) = if full {
                self_full(&s, &table, i, &geo)
            } else {
                let (uf, ug) = self_expansion(&s, &table, i);
                let lchi = log_ratio(s.q[i], s.e2)
                    - log_ratio(2.0 * s.p[i] + s.e2 * (s.p[i] * s.p[i] + s.dp[i] * s.dp[i]), s.e2);
                let chi = lchi * exprel(s.e2 * lchi);
                (uf, m1 * chi / beta + ug)
            };
            let (mf, mg) = mirror(&s, i, &geo);
            let f = s.w * (geo.rp * geo.cx - geo.r * geo.sx) - sf - mf;
            let g = beta * (sg + mg - s.w * (geo.rp * geo.sx + geo.r * geo.cx));
            (f, g)
        })
        .collect();
    for (node, (f, g)) in rows.iter().enumerate() {
        if !f.is_finite() || !g.is_finite() {
            return Err(Error::NonFinite { node });
        }
    }
    Ok(rows.into_iter().unzip())
}

fn project(values: &mut [f64]) -> f64 {
    let mean = tree_sum(values) / values.len() as f64;
    for v in values.iter_mut() {
        *v -= mean;
    }
    mean
}

pub fn eval_f(state: &SheetState, grid: &Grid, opts: &EvalOptions) -> Result<Vec<f64>> {
    Ok(eval_nodal(state, grid, opts)?.0)
}

/// Projected G and the removed mean.
pub fn eval_g(state: &SheetState, grid: &Grid, opts: &EvalOptions) -> Result<(Vec<f64>, f64)> {
    let mut g = eval_nodal(state, grid, opts)?.1;
    let mean = project(&mut g);
    Ok((g, mean))
}

/// F, projected G and the removed mean in one pass.
pub fn eval_fg(
    state: &SheetState,
    grid: &Grid,
    opts: &EvalOptions,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let (f, mut g) = eval_nodal(state, grid, opts)?;
    let mean = project(&mut g);
    Ok((f, g, mean))
}

pub fn residual(state: &SheetState, grid: &Grid, n: usize, opts: &EvalOptions) -> Result<ResidualPair> {
    let (f, g, mean) = eval_fg(state, grid, opts)?;
    let (g, _) = analyze_even(&g, n)?;
    Ok(ResidualPair {
        f: analyze_odd(&f, n)?,
        g,
        g_mean_removed: mean,
    })
}

/// ∂F/∂W and ∂G/∂W at the state; both functionals are affine in W.
pub fn w_direction(state: &SheetState, grid: &Grid, n: usize) -> Result<(OddSeries, EvenSeries)> {
    let s = Samples::new(state, grid)?;
    let mut df = Vec::with_capacity(grid.m());
    let mut dg = Vec::with_capacity(grid.m());
    for i in 0..grid.m() {
        let geo = s.geometry(i);
        df.push(geo.rp * geo.cx - geo.r * geo.sx);
        dg.push(-geo.beta() * (geo.rp * geo.sx + geo.r * geo.cx));
    }
    project(&mut dg);
    let (dg, _) = analyze_even(&dg, n)?;
    Ok((analyze_odd(&df, n)?, dg))
}

fn perp(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn velocity_at<P, Q>(
    eps: f64,
    d: f64,
    x: f64,
    p: P,
    q: Q,
    table: &KernelTable,
    mirror_nodes: &[(f64, f64, f64)],
) -> [f64; 2]
where
    P: Fn(f64) -> f64,
    Q: Fn(f64) -> f64,
{
    let e2 = eps * eps;
    let px = p(x);
    let r = 1.0 + e2 * px;
    let z = [r * x.cos(), r * x.sin()];
    let mut sx = Vec::with_capacity(table.m());
    let mut sy = Vec::with_capacity(table.m());
    for k in 0..table.pairs() {
        let mut acc = [0.0; 2];
        let half = 0.5 * table.theta[k];
        for side in [1.0, -1.0] {
            let xb = x + side * table.theta[k];
            let pb = p(xb);
            let gb = 1.0 + e2 * q(xb);
            // z − z̄ = r (e(x) − e(x̄)) + (r − r̄) e(x̄)
            let (sm, cm) = (x + side * half).sin_cos();
            let chord = -2.0 * side * half.sin();
            let dr = e2 * (px - pb);
            let dz = [
                -r * chord * sm + dr * xb.cos(),
                r * chord * cm + dr * xb.sin(),
            ];
            let n2 = dot(dz, dz);
            let w = gb / (n2 * n2.sqrt());
            let v = perp(dz);
            acc[0] += v[0] * w;
            acc[1] += v[1] * w;
        }
        sx.push(acc[0]);
        sy.push(acc[1]);
    }
    let m = table.m() as f64;
    let mut u = [
        compensated_sum(&sx) / (m * e2),
        compensated_sum(&sy) / (m * e2),
    ];
    let mut mx = Vec::with_capacity(mirror_nodes.len());
    let mut my = Vec::with_capacity(mirror_nodes.len());
    for &(xb, rb, gb) in mirror_nodes {
        let wv = [
            eps * z[0] + eps * rb * xb.cos() - 2.0 * d,
            eps * z[1] + eps * rb * xb.sin(),
        ];
        let n2 = dot(wv, wv);
        let w = gb / (n2 * n2.sqrt());
        let v = perp(wv);
        mx.push(v[0] * w);
        my.push(v[1] * w);
    }
    let mm = mirror_nodes.len() as f64;
    u[0] -= tree_sum(&mx) / mm;
    u[1] -= tree_sum(&my) / mm;
    u
}

fn mirror_nodes(state: &SheetState, grid: &Grid) -> Result<Vec<(f64, f64, f64)>> {
    let plain = grid.plain();
    let e2 = state.eps * state.eps;
    let p = synth(&state.p, &plain)?;
    let q = synth(&state.q, &plain)?;
    Ok(plain
        .nodes()
        .into_iter()
        .enumerate()
        .map(|(l, xb)| (xb, 1.0 + e2 * p[l], 1.0 + e2 * q[l]))
        .collect())
}

/// Rescaled velocity at z(x), self sheet on the staggered nodes around x
/// and mirror sheet on the plain grid.
pub fn eval_velocity(state: &SheetState, x: f64, grid: &Grid) -> Result<[f64; 2]> {
    state.validate()?;
    if state.eps == 0.0 {
        return Err(Error::ZeroEps);
    }
    let table = KernelTable::new(grid);
    let nodes = mirror_nodes(state, grid)?;
    let u = velocity_at(
        state.eps,
        state.d,
        x,
        |t| state.p.eval(t),
        |t| state.q.eval(t),
        &table,
        &nodes,
    );
    if !u[0].is_finite() || !u[1].is_finite() {
        return Err(Error::NonFinite { node: 0 });
    }
    Ok(u)
}

/// Velocity at every plain node, together with the tangent z_x and γ there.
fn velocity_on_grid(state: &SheetState, grid: &Grid) -> Result<Vec<([f64; 2], [f64; 2], f64)>> {
    state.validate()?;
    if state.eps == 0.0 {
        return Err(Error::ZeroEps);
    }
    let s = Samples::new(state, grid)?;
    let table = KernelTable::new(grid);
    let nodes = mirror_nodes(state, grid)?;
    let out: Vec<_> = (0..grid.m())
        .into_par_iter()
        .map(|i| {
            let u = velocity_at(
                state.eps,
                state.d,
                s.x[i],
                |t| state.p.eval(t),
                |t| state.q.eval(t),
                &table,
                &nodes,
            );
            let geo = s.geometry(i);
            (u, geo.tangent(), geo.gamma)
        })
        .collect();
    for (node, (u, _, _)) in out.iter().enumerate() {
        if !u[0].is_finite() || !u[1].is_finite() {
            return Err(Error::NonFinite { node });
        }
    }
    Ok(out)
}

/// (u − W e₂)·n at the plain nodes with n = s^⊥, s the unit tangent.
pub fn verify_tangency(state: &SheetState, grid: &Grid) -> Result<Vec<f64>> {
    Ok(velocity_on_grid(state, grid)?
        .into_iter()
        .map(|(u, zx, _)| {
            let rel = [u[0], u[1] - state.w];
            dot(rel, perp(zx)) / dot(zx, zx).sqrt()
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrengthReport {
    pub values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// K with the quantity equal to −K
    pub k_estimate: f64,
    /// grid finite-part constant m₁/ε² contained in the mean
    pub cutoff: f64,
}

impl StrengthReport {
    pub fn relative_spread(&self) -> f64 {
        self.std / self.mean.abs()
    }

    /// K without the cutoff constant; nearly independent of M.
    pub fn k_regularized(&self) -> f64 {
        self.k_estimate + self.cutoff
    }
}

/// (u − W e₂)·s γ / |z_x| at the plain nodes.
pub fn verify_strength(state: &SheetState, grid: &Grid) -> Result<StrengthReport> {
    let values: Vec<f64> = velocity_on_grid(state, grid)?
        .into_iter()
        .map(|(u, zx, gamma)| {
            let rel = [u[0], u[1] - state.w];
            dot(rel, zx) * gamma / dot(zx, zx)
        })
        .collect();
    let mean = tree_sum(&values) / values.len() as f64;
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let std = (tree_sum(&dev) / values.len() as f64).sqrt();
    Ok(StrengthReport {
        values,
        mean,
        std,
        k_estimate: -mean,
        cutoff: KernelTable::new(grid).log_mean() / (state.eps * state.eps),
    })
}

/// Display-literal functionals, with r′(x̄) wherever those
/// formulas carry it. Comparison only; returns nodal F and projected G.
pub fn eval_display_literal(state: &SheetState, grid: &Grid) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = Samples::new(state, grid)?;
    if s.eps == 0.0 {
        return Err(Error::ZeroEps);
    }
    let table = KernelTable::new(grid);
    let m = grid.m();
    let (eps, e2, d, w) = (s.eps, s.e2, s.d, s.w);
    let rows: Vec<(f64, f64)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let geo = s.geometry(i);
            let Geometry { r, rp, cx, sx, .. } = geo;
            let mut fs = Vec::with_capacity(table.pairs());
            let mut gs = Vec::with_capacity(table.pairs());
            for k in 0..table.pairs() {
                let sh = table.half_sin[k];
                let (st, ct) = (table.sin_theta[k], table.cos_theta[k]);
                let mut fk = 0.0;
                let mut gk = 0.0;
                for (sigma, l) in [(-1.0, table.ahead(i, k)), (1.0, table.behind(i, k))] {
                    let rpb = e2 * s.dps[l];
                    let gb = 1.0 + e2 * s.qs[l];
                    let sd = sigma * st;
                    let den = (r - rpb) * (r - rpb) + 4.0 * r * rpb * sh * sh;
                    let inv = gb / (den * den.sqrt());
                    fk += (r * rp - rp * rpb * ct + r * rpb * sd) * inv;
                    gk += (-r * r + r * rpb * ct + rp * rpb * sd) * inv;
                }
                fs.push(fk);
                gs.push(gk);
            }
            let mut f = -w * (r * sx - rp * cx) + compensated_sum(&fs) / (m as f64 * e2);
            let mut g = geo.beta() * (-w * (rp * sx + r * cx) + compensated_sum(&gs) / (m as f64 * e2));
            let mut fm = Vec::with_capacity(m);
            let mut gm = Vec::with_capacity(m);
            for l in 0..m {
                let rpb = e2 * s.dp[l];
                let gb = 1.0 + e2 * s.q[l];
                let (sb, cb) = s.x[l].sin_cos();
                let (sd, cd) = (s.x[i] - s.x[l]).sin_cos();
                let a = eps * r * cx + eps * rpb * cb - 2.0 * d;
                let b = eps * r * sx + eps * rpb * sb;
                let dist2 = a * a + b * b;
                let inv = gb / (dist2 * dist2.sqrt());
                fm.push(
                    (-(r * rp + rp * rpb * cd - r * rpb * sd) + 2.0 * d * r * sx
                        - 2.0 * d * rp * cx)
                        * inv,
                );
                gm.push(
                    (r * r + r * rpb * cd + rp * rpb * sd + 2.0 * d * r * cx + 2.0 * d * rp * sx)
                        * inv,
                );
            }
            f += tree_sum(&fm) / m as f64;
            g += geo.beta() * tree_sum(&gm) / m as f64;
            (f, g)
        })
        .collect();
    let (f, mut g): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    project(&mut g);
    Ok((f, g))
}
