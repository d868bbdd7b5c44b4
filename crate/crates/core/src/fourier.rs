//! Fourier basis on a uniform grid and decomposition of sampled curves into
//! per-frequency coefficients.
//!
//! Frequencies use the flat index `j = 1, 2, ...`: `psi_1` is constant,
//! `psi_{2m}` is a sine and `psi_{2m+1}` a cosine of frequency `m`, both on
//! the rescaled argument `2 (t - a) / (b - a) - 1`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform grid on `(a, b]` with points `t_l = a + (b - a) l / r`, `l = 1..=r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    r: usize,
}

impl Grid {
    pub fn new(a: f64, b: f64, r: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidParameter(format!("grid needs finite a < b, got ({a}, {b})")));
        }
        if r < 2 {
            return Err(Error::InvalidParameter(format!("grid needs r >= 2 points, got {r}")));
        }
        Ok(Grid { a, b, r })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.r
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / self.r as f64
    }

    /// `t_l` for `l = 1..=r` (so `l` is one-based).
    pub fn point(&self, l: usize) -> f64 {
        self.a + (self.b - self.a) * l as f64 / self.r as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (1..=self.r).map(|l| self.point(l)).collect()
    }
}

/// Sampled curves on a shared grid: `n_rep` replicates of `n_units` curves.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSet {
    pub grid: Grid,
    pub n_rep: usize,
    pub n_units: usize,
    /// Row-major `n_rep x n_units x r`.
    pub values: Vec<f64>,
}

impl CurveSet {
    pub fn new(grid: Grid, n_rep: usize, n_units: usize, values: Vec<f64>) -> Result<Self> {
        if n_rep == 0 || n_units == 0 {
            return Err(Error::InvalidParameter("curve set needs at least one replicate and unit".into()));
        }
        let expected = n_rep * n_units * grid.len();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite curve value at flat index {pos}")));
        }
        Ok(CurveSet {
            grid,
            n_rep,
            n_units,
            values,
        })
    }

    pub fn zeros(grid: Grid, n_rep: usize, n_units: usize) -> Self {
        CurveSet {
            grid,
            n_rep,
            n_units,
            values: vec![0.0; n_rep * n_units * grid.len()],
        }
    }

    /// Samples of curve `(i, k)`; both indices zero-based.
    pub fn curve(&self, i: usize, k: usize) -> &[f64] {
        let r = self.grid.len();
        let start = (i * self.n_units + k) * r;
        &self.values[start..start + r]
    }

    pub fn curve_mut(&mut self, i: usize, k: usize) -> &mut [f64] {
        let r = self.grid.len();
        let start = (i * self.n_units + k) * r;
        &mut self.values[start..start + r]
    }
}

/// Fourier coefficients `Y*_{i,jk}`, stored `n_rep x p x n_units`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoeffs {
    pub p: usize,
    pub n_rep: usize,
    pub n_units: usize,
    pub coeffs: Vec<f64>,
}

impl FourierCoeffs {
    pub fn new(p: usize, n_rep: usize, n_units: usize, coeffs: Vec<f64>) -> Result<Self> {
        let expected = p * n_rep * n_units;
        if coeffs.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: coeffs.len(),
            });
        }
        Ok(FourierCoeffs {
            p,
            n_rep,
            n_units,
            coeffs,
        })
    }

    /// Coefficient for replicate `i`, frequency index `j` (zero-based, so
    /// `j = 0` is `psi_1`) and unit `k`.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.coeffs[(i * self.p + j) * self.n_units + k]
    }

    /// The `n_units` coefficients of replicate `i` at zero-based frequency `j`.
    pub fn units(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.p + j) * self.n_units;
        &self.coeffs[start..start + self.n_units]
    }

    /// Multiplies every coefficient by `c`.
    pub fn scaled(&self, c: f64) -> FourierCoeffs {
        FourierCoeffs {
            coeffs: self.coeffs.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }
}

/// `psi_j(t_l)` for `l = 1..=r`. `j` is one-based.
pub fn basis_eval(j: usize, grid: &Grid) -> Vec<f64> {
    assert!(j >= 1, "basis index is one-based");
    let r = grid.len() as f64;
    let m = (j / 2) as f64;
    (1..=grid.len())
        .map(|l| {
            // 2 (t_l - a) / (b - a) - 1 = 2 l / r - 1
            let u = 2.0 * l as f64 / r - 1.0;
            if j == 1 {
                1.0
            } else if j % 2 == 0 {
                (PI * m * u).sin()
            } else {
                (PI * m * u).cos()
            }
        })
        .collect()
}

fn basis_table(p: usize, grid: &Grid) -> Vec<Vec<f64>> {
    (1..=p).map(|j| basis_eval(j, grid)).collect()
}

/// Grid averages `Y*_{i,jk} = (1/r) sum_l Y_{ik}(t_l) psi_j(t_l)` for `j = 1..=p`.
pub fn decompose(curves: &CurveSet, p: usize) -> Result<FourierCoeffs> {
    let r = curves.grid.len();
    if p > r {
        return Err(Error::ResolutionExceeded { p, r });
    }
    if p == 0 {
        return Err(Error::InvalidParameter("p must be at least 1".into()));
    }
    let basis = basis_table(p, &curves.grid);
    let inv_r = 1.0 / r as f64;
    let mut out = vec![0.0; curves.n_rep * p * curves.n_units];
    for i in 0..curves.n_rep {
        for k in 0..curves.n_units {
            let y = curves.curve(i, k);
            for (j, psi) in basis.iter().enumerate() {
                let mut acc = 0.0;
                for (v, b) in y.iter().zip(psi) {
                    acc += v * b;
                }
                out[(i * p + j) * curves.n_units + k] = acc * inv_r;
            }
        }
    }
    FourierCoeffs::new(p, curves.n_rep, curves.n_units, out)
}

/// Inverse of [`decompose`] for band-limited curves: `sum_j s_j c_j psi_j(t_l)`
/// with `s_1 = 1` and `s_j = 2` for `j >= 2`.
pub fn reconstruct(coeffs: &FourierCoeffs, grid: &Grid) -> Result<CurveSet> {
    if coeffs.p > grid.len() {
        return Err(Error::ResolutionExceeded {
            p: coeffs.p,
            r: grid.len(),
        });
    }
    let basis = basis_table(coeffs.p, grid);
    let mut curves = CurveSet::zeros(*grid, coeffs.n_rep, coeffs.n_units);
    for i in 0..coeffs.n_rep {
        for k in 0..coeffs.n_units {
            let out = curves.curve_mut(i, k);
            for (j, psi) in basis.iter().enumerate() {
                let scale = if j == 0 { 1.0 } else { 2.0 };
                let c = scale * coeffs.get(i, j, k);
                for (o, b) in out.iter_mut().zip(psi) {
                    *o += c * b;
                }
            }
        }
    }
    Ok(curves)
}
