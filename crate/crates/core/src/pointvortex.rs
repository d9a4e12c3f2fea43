//! Point-vortex limit of the sheet pair.
//!
//! Velocities are v_i = c Σ_{k≠i} κ_k G′(ρ_ik) (z_i − z_k)^⊥ / ρ_ik with
//! G(ρ) = ρ^−s, strengths κ_k and normalization c.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization making the two-point speed 1/(2d)² with κ = (1, −1).
pub const DEFAULT_NORMALIZATION: f64 = -1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointKernel {
    /// exponent s of G(ρ) = ρ^−s
    pub power: f64,
    pub normalization: f64,
}

impl Default for PointKernel {
    fn default() -> Self {
        Self {
            power: 1.0,
            normalization: DEFAULT_NORMALIZATION,
        }
    }
}

impl PointKernel {
    pub fn g(&self, rho: f64) -> f64 {
        rho.powf(-self.power)
    }

    pub fn g_prime(&self, rho: f64) -> f64 {
        -self.power * rho.powf(-self.power - 1.0)
    }
}

fn perp([x, y]: [f64; 2]) -> [f64; 2] {
    [-y, x]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSystem {
    pub positions: Vec<[f64; 2]>,
    pub strengths: Vec<f64>,
    pub d: f64,
    pub kernel: PointKernel,
}

impl PointSystem {
    pub fn new(positions: Vec<[f64; 2]>, strengths: Vec<f64>, d: f64, kernel: PointKernel) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::TooFewPoints(positions.len()));
        }
        if strengths.len() != positions.len() {
            return Err(Error::Length {
                expected: positions.len(),
                got: strengths.len(),
            });
        }
        if !(d > 0.0) {
            return Err(Error::Invalid(format!("d must be positive, got {d}")));
        }
        let sys = Self {
            positions,
            strengths,
            d,
            kernel,
        };
        sys.check_distinct(&sys.positions)?;
        Ok(sys)
    }

    /// z_i = (2d·i, 0) with alternating strengths (−1)^i.
    pub fn lattice(m: usize, d: f64) -> Result<Self> {
        let positions = (0..m).map(|i| [2.0 * d * i as f64, 0.0]).collect();
        let strengths = (0..m).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        Self::new(positions, strengths, d, PointKernel::default())
    }

    pub fn m(&self) -> usize {
        self.positions.len()
    }

    fn check_distinct(&self, pos: &[[f64; 2]]) -> Result<()> {
        for i in 0..pos.len() {
            for k in i + 1..pos.len() {
                if pos[i] == pos[k] {
                    return Err(Error::Coincident { i, k });
                }
            }
        }
        Ok(())
    }

    fn velocities(&self, pos: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
        self.check_distinct(pos)?;
        let c = self.kernel.normalization;
        Ok((0..pos.len())
            .map(|i| {
                let mut v = [0.0, 0.0];
                for (k, zk) in pos.iter().enumerate() {
                    if k == i {
                        continue;
                    }
                    let diff = [pos[i][0] - zk[0], pos[i][1] - zk[1]];
                    let rho = diff[0].hypot(diff[1]);
                    let scale = c * self.strengths[k] * self.kernel.g_prime(rho) / rho;
                    let t = perp(diff);
                    v[0] += scale * t[0];
                    v[1] += scale * t[1];
                }
                v
            })
            .collect())
    }

    pub fn rhs(&self) -> Result<Vec<[f64; 2]>> {
        self.velocities(&self.positions)
    }
}

/// Speed as displayed: c/(2d)² Σ_{k=1}^{m−1} G′(k).
pub fn wstar(m: usize, d: f64, kernel: &PointKernel) -> Result<f64> {
    if m < 2 {
        return Err(Error::TooFewPoints(m));
    }
    let sum: f64 = (1..m).map(|k| kernel.g_prime(k as f64)).sum();
    Ok(kernel.normalization * sum / (4.0 * d * d))
}

/// Speed with the spacing inside the kernel: c Σ_{k=1}^{m−1} G′(2dk).
pub fn wstar_derivation(m: usize, d: f64, kernel: &PointKernel) -> Result<f64> {
    if m < 2 {
        return Err(Error::TooFewPoints(m));
    }
    let sum: f64 = (1..m).map(|k| kernel.g_prime(2.0 * d * k as f64)).sum();
    Ok(kernel.normalization * sum)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// positions[s][i] at times[s]
    pub positions: Vec<Vec<[f64; 2]>>,
}

impl Trajectory {
    pub fn last(&self) -> &[[f64; 2]] {
        self.positions.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Classical RK4 with a fixed step; the last step is shortened to land on `t_end`.
pub fn integrate_rk4(sys: &PointSystem, t_end: f64, h: f64) -> Result<Trajectory> {
    if !(h > 0.0) || !(t_end >= 0.0) {
        return Err(Error::Invalid(format!("need h > 0 and t_end >= 0 (h = {h}, t_end = {t_end})")));
    }
    let steps = (t_end / h).ceil() as usize;
    let mut pos = sys.positions.clone();
    let mut traj = Trajectory {
        times: vec![0.0],
        positions: vec![pos.clone()],
    };
    let axpy = |base: &[[f64; 2]], k: &[[f64; 2]], a: f64| -> Vec<[f64; 2]> {
        base.iter().zip(k).map(|(z, v)| [z[0] + a * v[0], z[1] + a * v[1]]).collect()
    };
    for s in 0..steps {
        let t = s as f64 * h;
        let dt = h.min(t_end - t);
        let blow = |e: Error| match e {
            Error::Coincident { .. } => Error::BlowUp { t },
            other => other,
        };
        let k1 = sys.velocities(&pos).map_err(blow)?;
        let k2 = sys.velocities(&axpy(&pos, &k1, dt / 2.0)).map_err(blow)?;
        let k3 = sys.velocities(&axpy(&pos, &k2, dt / 2.0)).map_err(blow)?;
        let k4 = sys.velocities(&axpy(&pos, &k3, dt)).map_err(blow)?;
        for i in 0..pos.len() {
            for c in 0..2 {
                pos[i][c] += dt / 6.0 * (k1[i][c] + 2.0 * k2[i][c] + 2.0 * k3[i][c] + k4[i][c]);
            }
        }
        if pos.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { t: t + dt });
        }
        traj.times.push(t + dt);
        traj.positions.push(pos.clone());
    }
    Ok(traj)
}
