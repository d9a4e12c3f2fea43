//! Newton iteration and continuation in ε.
//!
//! Unknowns are (a_1..a_N, b_2..b_N, W) with b_1 = −a_1; equations are
//! the sine modes 1..N of F and the cosine modes 1..N of G.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::{
    residual, verify_strength, w_direction, EvalOptions, PathChoice, ResidualPair, SheetState,
    DEFAULT_EPS_SWITCH,
};
use crate::diagnostics::min_curvature;
use crate::error::{Error, Result};
use crate::kernels::measure_multipliers;
use crate::linop::{assemble_blocks, linear_predict, BlockSource};
use crate::trig::{EvenSeries, Grid, TrigSeries};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub n: usize,
    pub m: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub eps_switch: f64,
    /// relative forward-difference step
    pub fd_step: f64,
    pub max_halvings: usize,
    /// store wall time in records (breaks byte-reproducibility)
    pub record_timing: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n: 32,
            m: 256,
            tol: 1e-9,
            max_iter: 25,
            eps_switch: DEFAULT_EPS_SWITCH,
            fd_step: 1e-7,
            max_halvings: 5,
            record_timing: false,
        }
    }
}

impl SolverConfig {
    pub fn grid(&self) -> Result<Grid> {
        if !(self.tol > 0.0) {
            return Err(Error::Invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if self.n == 0 || 4 * self.n > self.m {
            return Err(Error::Invalid(format!(
                "need 1 <= N <= M/4 (N = {}, M = {})",
                self.n, self.m
            )));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::Invalid("fd_step must be positive".into()));
        }
        Grid::new(self.m)
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            eps_switch: self.eps_switch,
            path: PathChoice::Auto,
        }
    }
}

fn pack(state: &SheetState, n: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * n);
    v.extend((1..=n).map(|j| state.p.get(j)));
    v.extend((2..=n).map(|j| state.q.get(j)));
    v.push(state.w);
    v
}

fn unpack(v: &[f64], eps: f64, d: f64, n: usize) -> Result<SheetState> {
    let p = v[..n].to_vec();
    let mut q = Vec::with_capacity(n);
    q.push(-v[0]);
    q.extend_from_slice(&v[n..2 * n - 1]);
    SheetState::new(eps, d, v[2 * n - 1], EvenSeries::new(p)?, EvenSeries::new(q)?)
}

/// W solving f_1 + g_1 = 0 at the given shape, using affinity in W.
pub fn closure_w(
    eps: f64,
    d: f64,
    p: &EvenSeries,
    q: &EvenSeries,
    grid: &Grid,
    opts: &EvalOptions,
) -> Result<f64> {
    let n = p.truncation().max(q.truncation()).max(1);
    let state = SheetState::new(eps, d, 0.0, p.resized(n), q.resized(n))?;
    let res = residual(&state, grid, n, opts)?;
    let (df, dg) = w_direction(&state, grid, n)?;
    let coeff = df.get(1) + dg.get(1);
    if coeff.abs() < 1e-14 {
        return Err(Error::DegenerateClosure(coeff));
    }
    Ok(-(res.f.get(1) + res.g.get(1)) / coeff)
}

#[derive(Clone, Debug)]
pub enum Init {
    /// circle with closure speed, corrected by one origin-linearized step
    Predictor,
    /// shape and speed of an earlier state
    Warm(SheetState),
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonReport {
    pub state: SheetState,
    pub residual: ResidualPair,
    pub iterations: usize,
    /// residual sup-norm before each step and at the end
    pub history: Vec<f64>,
}

/// Initial guess from the origin linearization.
pub fn predictor_state(eps: f64, d: f64, cfg: &SolverConfig) -> Result<SheetState> {
    let grid = cfg.grid()?;
    let opts = cfg.eval_options();
    let zero = EvenSeries::zeros(cfg.n);
    let w = closure_w(eps, d, &zero, &zero, &grid, &opts)?;
    let start = SheetState::new(eps, d, w, zero.clone(), zero)?;
    let res = residual(&start, &grid, cfg.n, &opts)?;
    let table = measure_multipliers(cfg.n, &grid)?;
    let op = assemble_blocks(&table, BlockSource::Measured)?;
    let step = linear_predict(&res, &op)?;
    SheetState::new(eps, d, w + step.dw, step.dp, step.dq)
}

struct Problem<'a> {
    eps: f64,
    d: f64,
    n: usize,
    grid: Grid,
    opts: EvalOptions,
    cfg: &'a SolverConfig,
}

impl Problem<'_> {
    fn eval(&self, v: &[f64]) -> Result<(SheetState, ResidualPair)> {
        let state = unpack(v, self.eps, self.d, self.n)?;
        let res = residual(&state, &self.grid, self.n, &self.opts)?;
        Ok((state, res))
    }

    fn jacobian(&self, v: &[f64], state: &SheetState, r: &[f64]) -> Result<DMatrix<f64>> {
        let dim = v.len();
        let scale = v[..dim - 1].iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
        let h = self.cfg.fd_step * scale;
        let cols = (0..dim - 1)
            .into_par_iter()
            .map(|c| {
                let mut vp = v.to_vec();
                vp[c] += h;
                let (_, rp) = self.eval(&vp)?;
                Ok(rp.to_vec().iter().zip(r).map(|(a, b)| (a - b) / h).collect::<Vec<f64>>())
            })
            .collect::<Result<Vec<_>>>()?;
        let (df, dg) = w_direction(state, &self.grid, self.n)?;
        let wcol: Vec<f64> = df.as_slice().iter().chain(dg.as_slice()).copied().collect();
        Ok(DMatrix::from_fn(dim, dim, |row, col| {
            if col == dim - 1 {
                wcol[row]
            } else {
                cols[col][row]
            }
        }))
    }
}

fn condition_estimate(j: &DMatrix<f64>) -> f64 {
    let sv = j.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn newton_solve(eps: f64, d: f64, init: Init, cfg: &SolverConfig) -> Result<NewtonReport> {
    let grid = cfg.grid()?;
    let n = cfg.n;
    let start = match init {
        Init::Predictor => predictor_state(eps, d, cfg)?,
        Init::Warm(s) => SheetState::new(eps, d, s.w, s.p.resized(n), s.q.resized(n))?,
    };
    let problem = Problem {
        eps,
        d,
        n,
        grid,
        opts: cfg.eval_options(),
        cfg,
    };
    let mut v = pack(&start, n);
    let (mut state, mut res) = problem.eval(&v)?;
    let mut history = vec![res.sup_norm()];
    for iter in 0..=cfg.max_iter {
        let sup = res.sup_norm();
        if sup <= cfg.tol {
            return Ok(NewtonReport {
                state,
                residual: res,
                iterations: iter,
                history,
            });
        }
        if iter == cfg.max_iter {
            break;
        }
        let r = res.to_vec();
        let jac = problem.jacobian(&v, &state, &r)?;
        let rhs = DVector::from_iterator(r.len(), r.iter().map(|x| -x));
        let step = jac
            .clone()
            .lu()
            .solve(&rhs)
            .filter(|s| s.iter().all(|x| x.is_finite()))
            .ok_or_else(|| Error::SingularJacobian(condition_estimate(&jac)))?;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let trial: Vec<f64> = v.iter().zip(step.iter()).map(|(a, s)| a + lambda * s).collect();
            if let Ok((ts, tr)) = problem.eval(&trial) {
                let better = tr.sup_norm() < sup;
                accepted = Some((trial, ts, tr));
                if better {
                    break;
                }
            }
            lambda *= 0.5;
        }
        let (nv, ns, nr) = accepted.ok_or_else(|| Error::NonConvergence {
            iterations: iter + 1,
            history: history.clone(),
        })?;
        v = nv;
        state = ns;
        res = nr;
        history.push(res.sup_norm());
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        history,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationRecord {
    pub eps: f64,
    pub d: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub p_coeffs: Vec<f64>,
    pub q_coeffs: Vec<f64>,
    pub residual_sup: f64,
    pub iterations: usize,
    pub min_curvature: f64,
    /// strength constant without the grid cutoff term; undefined at ε = 0
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub wall_ms: Option<f64>,
}

impl ContinuationRecord {
    pub fn state(&self) -> Result<SheetState> {
        SheetState::new(
            self.eps,
            self.d,
            self.w,
            EvenSeries::new(self.p_coeffs.clone())?,
            EvenSeries::new(self.q_coeffs.clone())?,
        )
    }

    pub fn from_report(report: &NewtonReport, grid: &Grid, wall_ms: Option<f64>) -> Result<Self> {
        let s = &report.state;
        let k = if s.eps != 0.0 {
            Some(verify_strength(s, grid)?.k_regularized())
        } else {
            None
        };
        Ok(Self {
            eps: s.eps,
            d: s.d,
            w: s.w,
            p_coeffs: s.p.as_slice().to_vec(),
            q_coeffs: s.q.as_slice().to_vec(),
            residual_sup: report.residual.sup_norm(),
            iterations: report.iterations,
            min_curvature: min_curvature(s, grid)?,
            k,
            wall_ms,
        })
    }
}

/// Solve one ε and summarize.
pub fn solve_record(eps: f64, d: f64, init: Init, cfg: &SolverConfig) -> Result<(ContinuationRecord, SheetState)> {
    let t0 = Instant::now();
    let report = newton_solve(eps, d, init, cfg)?;
    let wall = cfg.record_timing.then(|| t0.elapsed().as_secs_f64() * 1e3);
    let rec = ContinuationRecord::from_report(&report, &cfg.grid()?, wall)?;
    Ok((rec, report.state))
}

#[derive(Clone, Debug)]
pub struct ContinuationRun {
    pub records: Vec<ContinuationRecord>,
    pub states: Vec<SheetState>,
    /// ε and error of the first rejected step, if the sweep stopped early
    pub stopped: Option<(f64, String)>,
}

impl ContinuationRun {
    /// Largest |ε| reached.
    pub fn empirical_eps0(&self) -> Option<f64> {
        self.records.iter().map(|r| r.eps.abs()).reduce(f64::max)
    }
}

/// Warm-started sweep; stops at the first failed step.
pub fn continuation(eps_values: &[f64], d: f64, cfg: &SolverConfig) -> Result<ContinuationRun> {
    let mut run = ContinuationRun {
        records: Vec::new(),
        states: Vec::new(),
        stopped: None,
    };
    for &eps in eps_values {
        let init = match run.states.last() {
            Some(prev) => Init::Warm(prev.clone()),
            None => Init::Predictor,
        };
        match solve_record(eps, d, init, cfg) {
            Ok((rec, state)) => {
                run.records.push(rec);
                run.states.push(state);
            }
            Err(e) if !run.records.is_empty() => {
                run.stopped = Some((eps, e.to_string()));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(run)
}

/// 0, h, 2h, … up to `eps_max` (sign taken from `eps_max`).
pub fn eps_ladder(eps_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !eps_max.is_finite() {
        return Err(Error::Invalid("eps step must be positive".into()));
    }
    let count = (eps_max.abs() / step + 1e-9).floor() as usize;
    let sign = if eps_max < 0.0 { -1.0 } else { 1.0 };
    Ok((0..=count).map(|k| sign * k as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pack_round_trip_enforces_gauge() {
        let p = EvenSeries::new(vec![0.1, 0.2, 0.3]).unwrap();
        let q = EvenSeries::new(vec![-0.1, 0.5, 0.6]).unwrap();
        let s = SheetState::new(0.1, 1.0, 0.3, p, q).unwrap();
        let v = pack(&s, 3);
        assert_eq!(v.len(), 6);
        assert_eq!(unpack(&v, 0.1, 1.0, 3).unwrap(), s);
    }

    #[test]
    fn ladder() {
        assert_eq!(eps_ladder(0.03, 0.01).unwrap().len(), 4);
        assert_eq!(eps_ladder(-0.02, 0.01).unwrap(), vec![0.0, -0.01, -0.02]);
        assert!(eps_ladder(0.1, 0.0).is_err());
    }

    #[test]
    fn closure_at_origin() {
        let g = Grid::new(64).unwrap();
        let z = EvenSeries::zeros(4);
        for d in [1.0, 2.0] {
            let w = closure_w(0.0, d, &z, &z, &g, &EvalOptions::default()).unwrap();
            assert!((w - 1.0 / (4.0 * d * d)).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_sweep() {
        let run = continuation(&[], 1.0, &SolverConfig::default()).unwrap();
        assert!(run.records.is_empty());
        assert_eq!(run.empirical_eps0(), None);
    }
}
