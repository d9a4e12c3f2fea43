//! Fixed-parity trigonometric series on uniform periodic grids.
//!
//! Coefficients are stored from mode 1 upward. The mean of a sampled
//! function is always carried separately, never inside a series.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reduce::tree_sum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/// Common view of [`EvenSeries`] and [`OddSeries`].
pub trait TrigSeries {
    const PARITY: Parity;

    fn coeffs(&self) -> &[f64];

    fn truncation(&self) -> usize {
        self.coeffs().len()
    }

    fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (idx, c) in self.coeffs().iter().enumerate() {
            let j = (idx + 1) as f64;
            acc += c * basis(Self::PARITY, j * x);
        }
        acc
    }

    /// Sum of absolute coefficients, an upper bound for the sup norm.
    fn abs_sum(&self) -> f64 {
        self.coeffs().iter().map(|c| c.abs()).sum()
    }
}

fn basis(parity: Parity, angle: f64) -> f64 {
    match parity {
        Parity::Even => angle.cos(),
        Parity::Odd => angle.sin(),
    }
}

fn check_finite(coeffs: &[f64]) -> Result<()> {
    match coeffs.iter().position(|c| !c.is_finite()) {
        Some(idx) => Err(Error::NonFiniteCoeff(idx + 1)),
        None => Ok(()),
    }
}

macro_rules! series_type {
    ($name:ident, $parity:expr) => {
        #[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name {
            coeffs: Vec<f64>,
        }

        impl $name {
            pub fn new(coeffs: Vec<f64>) -> Result<Self> {
                check_finite(&coeffs)?;
                Ok(Self { coeffs })
            }

            pub fn zeros(n: usize) -> Self {
                Self { coeffs: vec![0.0; n] }
            }

            /// The single mode `j` (1-based) with unit amplitude.
            pub fn unit(j: usize, n: usize) -> Self {
                assert!(j >= 1 && j <= n, "mode {j} outside 1..={n}");
                let mut coeffs = vec![0.0; n];
                coeffs[j - 1] = 1.0;
                Self { coeffs }
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.coeffs
            }

            pub fn into_vec(self) -> Vec<f64> {
                self.coeffs
            }

            /// Coefficient of mode `j`, zero beyond the truncation.
            pub fn get(&self, j: usize) -> f64 {
                if j == 0 {
                    return 0.0;
                }
                self.coeffs.get(j - 1).copied().unwrap_or(0.0)
            }

            pub fn scaled(&self, factor: f64) -> Self {
                Self {
                    coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
                }
            }

            /// Truncate or zero-pad to `n` modes.
            pub fn resized(&self, n: usize) -> Self {
                let mut coeffs = self.coeffs.clone();
                coeffs.resize(n, 0.0);
                Self { coeffs }
            }

            pub fn add(&self, other: &Self) -> Self {
                let n = self.coeffs.len().max(other.coeffs.len());
                let coeffs = (1..=n).map(|j| self.get(j) + other.get(j)).collect();
                Self { coeffs }
            }
        }

        impl TrigSeries for $name {
            const PARITY: Parity = $parity;

            fn coeffs(&self) -> &[f64] {
                &self.coeffs
            }
        }
    };
}

series_type!(EvenSeries, Parity::Even);
series_type!(OddSeries, Parity::Odd);

/// Spectral derivative; flips parity.
pub trait Differentiate {
    type Output;
    fn differentiate(&self) -> Self::Output;
}

impl Differentiate for EvenSeries {
    type Output = OddSeries;

    fn differentiate(&self) -> OddSeries {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, a)| -((idx + 1) as f64) * a)
            .collect();
        OddSeries { coeffs }
    }
}

impl Differentiate for OddSeries {
    type Output = EvenSeries;

    fn differentiate(&self) -> EvenSeries {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| (idx + 1) as f64 * c)
            .collect();
        EvenSeries { coeffs }
    }
}

pub fn differentiate<S: Differentiate>(series: &S) -> S::Output {
    series.differentiate()
}

/// Uniform grid on [0, 2π). With `stagger` set the nodes sit at the
/// midpoints `x_i + π/M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    m: usize,
    stagger: bool,
}

impl Grid {
    pub fn new(m: usize) -> Result<Self> {
        if m < 4 || !m.is_power_of_two() {
            return Err(Error::GridSize(m));
        }
        Ok(Self { m, stagger: false })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_staggered(&self) -> bool {
        self.stagger
    }

    pub fn staggered(&self) -> Self {
        Self { m: self.m, stagger: true }
    }

    pub fn plain(&self) -> Self {
        Self { m: self.m, stagger: false }
    }

    /// Same stagger, `factor` times as many nodes.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let mut g = Self::new(self.m * factor)?;
        g.stagger = self.stagger;
        Ok(g)
    }

    pub fn node(&self, i: usize) -> f64 {
        (2 * i + self.stagger as usize) as f64 * PI / self.m as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.node(i)).collect()
    }

    /// Half-angle index of node `i`: node(i) = index * π / M.
    fn half_index(&self, i: usize) -> usize {
        2 * i + self.stagger as usize
    }
}

/// cos and sin of `k π / M` for k in 0..2M.
struct AngleTable {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl AngleTable {
    fn new(m: usize) -> Self {
        let step = PI / m as f64;
        let (cos, sin) = (0..2 * m)
            .map(|k| {
                let a = k as f64 * step;
                (a.cos(), a.sin())
            })
            .unzip();
        Self { cos, sin }
    }

    fn value(&self, parity: Parity, k: usize) -> f64 {
        let k = k % self.cos.len();
        match parity {
            Parity::Even => self.cos[k],
            Parity::Odd => self.sin[k],
        }
    }
}

/// Evaluate a series at every grid node.
pub fn synth<S: TrigSeries>(series: &S, grid: &Grid) -> Result<Vec<f64>> {
    let m = grid.m();
    let n = series.truncation();
    if n > m / 2 {
        return Err(Error::Nyquist { n, m });
    }
    let table = AngleTable::new(m);
    let coeffs = series.coeffs();
    let values = (0..m)
        .map(|i| {
            let h = grid.half_index(i);
            let mut acc = 0.0;
            for (idx, c) in coeffs.iter().enumerate() {
                acc += c * table.value(S::PARITY, (idx + 1) * h);
            }
            acc
        })
        .collect();
    Ok(values)
}

/// Coefficients of a sampled function on the plain grid of matching size.
#[derive(Clone, Debug, PartialEq)]
pub struct Analysis {
    pub parity: Parity,
    pub coeffs: Vec<f64>,
    pub mean: f64,
}

impl Analysis {
    pub fn even(self) -> EvenSeries {
        EvenSeries { coeffs: self.coeffs }
    }

    pub fn odd(self) -> OddSeries {
        OddSeries { coeffs: self.coeffs }
    }
}

pub fn analyze(values: &[f64], parity: Parity, n: usize) -> Result<Analysis> {
    let m = values.len();
    let grid = Grid::new(m)?;
    if 2 * n > m {
        return Err(Error::Nyquist { n, m });
    }
    if let Some(node) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { node });
    }
    let table = AngleTable::new(m);
    let mut terms = vec![0.0; m];
    let coeffs = (1..=n)
        .map(|j| {
            for (i, t) in terms.iter_mut().enumerate() {
                *t = values[i] * table.value(parity, j * grid.half_index(i));
            }
            let weight = if 2 * j == m { 1.0 } else { 2.0 };
            weight * tree_sum(&terms) / m as f64
        })
        .collect();
    Ok(Analysis {
        parity,
        coeffs,
        mean: tree_sum(values) / m as f64,
    })
}

/// Cosine coefficients and the separately reported mean.
pub fn analyze_even(values: &[f64], n: usize) -> Result<(EvenSeries, f64)> {
    let a = analyze(values, Parity::Even, n)?;
    let mean = a.mean;
    Ok((a.even(), mean))
}

pub fn analyze_odd(values: &[f64], n: usize) -> Result<OddSeries> {
    Ok(analyze(values, Parity::Odd, n)?.odd())
}

/// sqrt(Σ (1 + j^{2k}) cosh(2 a j) c_j²).
pub fn weighted_norm<S: TrigSeries>(series: &S, k: u32, a: f64) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(Error::Invalid(format!("strip width must be non-negative, got {a}")));
    }
    let mut acc = 0.0;
    for (idx, c) in series.coeffs().iter().enumerate() {
        let j = (idx + 1) as f64;
        let weight = (1.0 + j.powi(2 * k as i32)) * (2.0 * a * j).cosh();
        acc += weight * c * c;
    }
    if !acc.is_finite() {
        return Err(Error::Overflow);
    }
    Ok(acc.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn synth_quarter_points() {
        let g = Grid::new(4).unwrap();
        let e = synth(&EvenSeries::new(vec![1.0]).unwrap(), &g).unwrap();
        assert!(close(&e, &[1.0, 0.0, -1.0, 0.0], 1e-15));
        let o = synth(&OddSeries::new(vec![1.0]).unwrap(), &g).unwrap();
        assert!(close(&o, &[0.0, 1.0, 0.0, -1.0], 1e-15));
    }

    #[test]
    fn cos2x_round_trip() {
        let g = Grid::new(8).unwrap();
        let s = EvenSeries::new(vec![0.0, 1.0]).unwrap();
        let v = synth(&s, &g).unwrap();
        for (i, x) in g.nodes().iter().enumerate() {
            assert!((v[i] - (2.0 * x).cos()).abs() < 1e-15);
        }
        let (back, _) = analyze_even(&v, 2).unwrap();
        assert!(close(back.as_slice(), &[0.0, 1.0], 1e-14));
    }

    #[test]
    fn analyze_single_mode_and_constant() {
        let g = Grid::new(32).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|x| (3.0 * x).cos()).collect();
        let (s, _) = analyze_even(&v, 8).unwrap();
        for j in 1..=8 {
            let expect = if j == 3 { 1.0 } else { 0.0 };
            assert!((s.get(j) - expect).abs() < 1e-14);
        }
        let (s, mean) = analyze_even(&[1.0; 32], 8).unwrap();
        assert!(s.as_slice().iter().all(|c| c.abs() < 1e-15));
        assert!((mean - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nyquist_is_rejected() {
        let g = Grid::new(8).unwrap();
        assert!(matches!(
            synth(&EvenSeries::zeros(5), &g),
            Err(Error::Nyquist { .. })
        ));
        assert!(matches!(analyze(&[0.0; 8], Parity::Even, 5), Err(Error::Nyquist { .. })));
    }

    #[test]
    fn nyquist_cosine_round_trips() {
        let g = Grid::new(8).unwrap();
        let s = EvenSeries::new(vec![0.0, 0.0, 0.0, 0.7]).unwrap();
        let (back, _) = analyze_even(&synth(&s, &g).unwrap(), 4).unwrap();
        assert!((back.get(4) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn differentiate_examples() {
        let d = EvenSeries::new(vec![1.0]).unwrap().differentiate();
        assert_eq!(d.as_slice(), &[-1.0]);
        let d = EvenSeries::new(vec![0.0, 1.0]).unwrap().differentiate();
        assert_eq!(d.as_slice(), &[0.0, -2.0]);
        let dd = EvenSeries::unit(5, 5).differentiate().differentiate();
        assert_eq!(dd.get(5), -25.0);
    }

    #[test]
    fn weighted_norm_examples() {
        assert_eq!(weighted_norm(&EvenSeries::zeros(4), 3, 0.0).unwrap(), 0.0);
        let one = EvenSeries::new(vec![1.0]).unwrap();
        assert!((weighted_norm(&one, 0, 0.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((weighted_norm(&one, 2, 0.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let big = EvenSeries::unit(64, 64);
        assert!(matches!(weighted_norm(&big, 0, 10.0), Err(Error::Overflow)));
    }

    #[test]
    fn staggered_nodes() {
        let g = Grid::new(4).unwrap().staggered();
        assert!((g.node(0) - PI / 4.0).abs() < 1e-15);
        let v = synth(&EvenSeries::new(vec![1.0]).unwrap(), &g).unwrap();
        assert!((v[1] - (3.0 * PI / 4.0).cos()).abs() < 1e-15);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(EvenSeries::new(vec![0.0, f64::NAN]).is_err());
        assert!(matches!(
            analyze(&[0.0, 1.0, f64::INFINITY, 0.0], Parity::Odd, 1),
            Err(Error::NonFinite { node: 2 })
        ));
    }
}
