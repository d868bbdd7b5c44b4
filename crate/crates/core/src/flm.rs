//! Functional linear model layer.
//!
//! Each frequency `j` carries an ordinary linear model across units,
//! `Y*_{i,j} = X beta_j + error`. A linear hypothesis `L^T beta_j = 0` is turned
//! into the discrete model consumed by the test statistics through
//!
//! ```text
//! Y_{n,j} = (1 / (sigma_j n)) sum_i H L^T (X^T X)^{-1} X^T Y*_{i,j},
//! H = {L^T (X^T X)^{-1} L}^{-1/2}
//! ```
//!
//! so that, under the null with Gaussian errors, `sqrt(n) Y_{n,j}` is a
//! standard normal `nu`-vector.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fourier::FourierCoeffs;
use crate::numerics::{check_full_column_rank, spd_inverse, sym_inv_sqrt, SymMatrix};

/// Essence regressor matrix `X` (N x P) and hypothesis matrix `L` (P x nu),
/// together with the derived contrast operator `H L^T (X^T X)^{-1} X^T`.
#[derive(Debug, Clone)]
pub struct DesignSpec {
    x: DMatrix<f64>,
    l: DMatrix<f64>,
    xtx_inv: SymMatrix,
    /// `H L^T (X^T X)^{-1} X^T`, nu x N.
    contrast: DMatrix<f64>,
}

impl DesignSpec {
    pub fn new(x: DMatrix<f64>, l: DMatrix<f64>) -> Result<Self> {
        let (n_units, n_params) = x.shape();
        if l.nrows() != n_params {
            return Err(Error::DimensionMismatch(format!(
                "L has {} rows but X has {} columns",
                l.nrows(),
                n_params
            )));
        }
        let nu = l.ncols();
        if nu == 0 || nu > n_params || n_params > n_units {
            return Err(Error::DimensionMismatch(format!(
                "need nu <= P <= N, got nu = {nu}, P = {n_params}, N = {n_units}"
            )));
        }
        check_full_column_rank(&x, "X")?;
        check_full_column_rank(&l, "L")?;
        let xtx = SymMatrix::symmetrize(x.transpose() * &x)?;
        let xtx_inv = spd_inverse(&xtx).map_err(|_| Error::RankDeficient("X"))?;
        let ls_operator = xtx_inv.matrix() * x.transpose();
        let middle = SymMatrix::symmetrize(l.transpose() * xtx_inv.matrix() * &l)?;
        let h = sym_inv_sqrt(&middle)?;
        let contrast = h.matrix() * l.transpose() * &ls_operator;
        Ok(DesignSpec {
            x,
            l,
            xtx_inv,
            contrast,
        })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn n_units(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.x.ncols()
    }

    pub fn nu(&self) -> usize {
        self.l.ncols()
    }

    pub fn xtx_inv(&self) -> &SymMatrix {
        &self.xtx_inv
    }

    /// `H L^T (X^T X)^{-1} X^T`.
    pub fn contrast(&self) -> &DMatrix<f64> {
        &self.contrast
    }
}

/// How the per-frequency error scale enters the discrete model.
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaMode {
    /// Known standard deviations `sigma_j`, one per frequency.
    Known(Vec<f64>),
    /// Residual-based estimates with `n N - P` degrees of freedom.
    Estimated,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SigmaInfo {
    Known(Vec<f64>),
    Estimated { sigma: Vec<f64>, df2: usize },
}

impl SigmaInfo {
    pub fn sigma(&self) -> &[f64] {
        match self {
            SigmaInfo::Known(s) => s,
            SigmaInfo::Estimated { sigma, .. } => sigma,
        }
    }
}

/// The high-dimensional discrete model: `p` vectors of length `nu`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    pub p: usize,
    pub nu: usize,
    pub n: usize,
    /// Row-major `p x nu`; row `j` is `Y_{n,j+1}`.
    pub y: Vec<f64>,
    pub sigma: SigmaInfo,
}

impl DiscreteModel {
    /// A model with known unit error scale, for synthetic data.
    pub fn from_rows(n: usize, nu: usize, y: Vec<f64>) -> Result<Self> {
        if n == 0 || nu == 0 || y.is_empty() || y.len() % nu != 0 {
            return Err(Error::InvalidParameter(format!(
                "cannot shape {} values into rows of length {nu} (n = {n})",
                y.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("discrete model values must be finite".into()));
        }
        let p = y.len() / nu;
        Ok(DiscreteModel {
            p,
            nu,
            n,
            y,
            sigma: SigmaInfo::Known(vec![1.0; p]),
        })
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.y[j * self.nu..(j + 1) * self.nu]
    }

    /// `n ||Y_{n,j}||^2` for every frequency.
    pub fn energies(&self) -> Vec<f64> {
        let n = self.n as f64;
        (0..self.p)
            .map(|j| n * self.row(j).iter().map(|v| v * v).sum::<f64>())
            .collect()
    }

    /// `sqrt(n) Y_{n,j}`, flattened. Only meaningful for `nu = 1` statistics.
    pub fn standardized(&self) -> Vec<f64> {
        let rn = (self.n as f64).sqrt();
        self.y.iter().map(|v| rn * v).collect()
    }
}

fn check_units(coeffs: &FourierCoeffs, n_units: usize) -> Result<()> {
    if coeffs.n_units != n_units {
        return Err(Error::LengthMismatch {
            expected: n_units,
            found: coeffs.n_units,
        });
    }
    Ok(())
}

/// Replicate average of the coefficient vector at zero-based frequency `j`.
fn replicate_mean(coeffs: &FourierCoeffs, j: usize) -> DVector<f64> {
    let mut mean = DVector::zeros(coeffs.n_units);
    for i in 0..coeffs.n_rep {
        for (m, v) in mean.iter_mut().zip(coeffs.units(i, j)) {
            *m += v;
        }
    }
    mean / coeffs.n_rep as f64
}

/// Least-squares coefficients per frequency, `p x P`: row `j` is
/// `(1/n) sum_i (X^T X)^{-1} X^T Y*_{i,j}`.
pub fn fit_ls(coeffs: &FourierCoeffs, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_units(coeffs, x.nrows())?;
    check_full_column_rank(x, "X")?;
    let xtx = SymMatrix::symmetrize(x.transpose() * x)?;
    let ls = spd_inverse(&xtx).map_err(|_| Error::RankDeficient("X"))?.into_matrix() * x.transpose();
    let mut beta = DMatrix::zeros(coeffs.p, x.ncols());
    for j in 0..coeffs.p {
        let b = &ls * replicate_mean(coeffs, j);
        beta.row_mut(j).copy_from(&b.transpose());
    }
    Ok(beta)
}

/// Unbiased residual variances `sigma_hat^2_{n,j}` and their degrees of
/// freedom `n N - P`.
pub fn estimate_sigma(coeffs: &FourierCoeffs, x: &DMatrix<f64>) -> Result<(Vec<f64>, usize)> {
    let observations = coeffs.n_rep * coeffs.n_units;
    if observations <= x.ncols() {
        return Err(Error::InsufficientDf {
            observations,
            parameters: x.ncols(),
        });
    }
    let beta = fit_ls(coeffs, x)?;
    let df2 = observations - x.ncols();
    let mut out = Vec::with_capacity(coeffs.p);
    for j in 0..coeffs.p {
        let fitted = x * beta.row(j).transpose();
        let mut rss = 0.0;
        for i in 0..coeffs.n_rep {
            for (y, f) in coeffs.units(i, j).iter().zip(fitted.iter()) {
                rss += (y - f).powi(2);
            }
        }
        out.push(rss / df2 as f64);
    }
    Ok((out, df2))
}

/// Applies the hypothesis-tailored transformation to every frequency.
pub fn transform_to_discrete(coeffs: &FourierCoeffs, design: &DesignSpec, mode: SigmaMode) -> Result<DiscreteModel> {
    check_units(coeffs, design.n_units())?;
    let sigma = match mode {
        SigmaMode::Known(sigma) => {
            if sigma.len() != coeffs.p {
                return Err(Error::LengthMismatch {
                    expected: coeffs.p,
                    found: sigma.len(),
                });
            }
            if let Some(bad) = sigma.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
                return Err(Error::InvalidParameter(format!("known sigma must be positive, got {bad}")));
            }
            SigmaInfo::Known(sigma)
        }
        SigmaMode::Estimated => {
            let (var, df2) = estimate_sigma(coeffs, design.x())?;
            if let Some(j) = var.iter().position(|v| !(*v > 0.0)) {
                return Err(Error::InvalidParameter(format!(
                    "residual variance is zero at frequency {}",
                    j + 1
                )));
            }
            SigmaInfo::Estimated {
                sigma: var.iter().map(|v| v.sqrt()).collect(),
                df2,
            }
        }
    };
    let nu = design.nu();
    let mut y = Vec::with_capacity(coeffs.p * nu);
    for (j, s) in sigma.sigma().iter().enumerate() {
        let row = design.contrast() * replicate_mean(coeffs, j);
        y.extend(row.iter().map(|v| v / s));
    }
    Ok(DiscreteModel {
        p: coeffs.p,
        nu,
        n: coeffs.n_rep,
        y,
        sigma,
    })
}

/// Per-frequency F statistics `F_j = (n ||H L^T beta_hat_j||^2 / nu) / sigma_hat^2_j`.
pub fn component_f(coeffs: &FourierCoeffs, design: &DesignSpec) -> Result<Vec<f64>> {
    let model = transform_to_discrete(coeffs, design, SigmaMode::Estimated)?;
    let nu = model.nu as f64;
    Ok(model.energies().into_iter().map(|e| e / nu).collect())
}

/// `F_global = sum_j w_j F_j`.
pub fn f_global(f: &[f64], weights: &[f64]) -> Result<f64> {
    if f.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: f.len(),
            found: weights.len(),
        });
    }
    Ok(f.iter().zip(weights).map(|(a, b)| a * b).sum())
}

/// Group structure of the units with one scalar covariate per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupLayout {
    n_groups: usize,
    group_of: Vec<usize>,
    covariate: Vec<f64>,
}

impl GroupLayout {
    /// `group_of[k]` is the zero-based group of unit `k`.
    pub fn new(n_groups: usize, group_of: Vec<usize>, covariate: Vec<f64>) -> Result<Self> {
        if group_of.len() != covariate.len() {
            return Err(Error::LengthMismatch {
                expected: group_of.len(),
                found: covariate.len(),
            });
        }
        if let Some(&g) = group_of.iter().find(|&&g| g >= n_groups) {
            return Err(Error::IndexOutOfRange {
                index: g + 1,
                max: n_groups,
            });
        }
        let layout = GroupLayout {
            n_groups,
            group_of,
            covariate,
        };
        if let Some(g) = layout.group_sizes().iter().position(|&m| m == 0) {
            return Err(Error::EmptyGroup(g + 1));
        }
        Ok(layout)
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn n_units(&self) -> usize {
        self.group_of.len()
    }

    pub fn group_of(&self) -> &[usize] {
        &self.group_of
    }

    pub fn covariate(&self) -> &[f64] {
        &self.covariate
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_groups];
        for &g in &self.group_of {
            sizes[g] += 1;
        }
        sizes
    }

    pub fn overall_mean(&self) -> f64 {
        self.covariate.iter().sum::<f64>() / self.covariate.len() as f64
    }

    pub fn group_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_groups];
        for (&g, &x) in self.group_of.iter().zip(&self.covariate) {
            sums[g] += x;
        }
        sums.iter().zip(self.group_sizes()).map(|(s, m)| s / m as f64).collect()
    }

    /// Essence matrix of the group-wise trend model
    /// `Y*_k = mu_g + beta_g (x_k - x_bar)`, columns `[mu_1..mu_G, beta_1..beta_G]`.
    pub fn essence_matrix(&self) -> DMatrix<f64> {
        let g_count = self.n_groups;
        let x_bar = self.overall_mean();
        let mut x = DMatrix::zeros(self.n_units(), 2 * g_count);
        for (k, (&g, &cov)) in self.group_of.iter().zip(&self.covariate).enumerate() {
            x[(k, g)] = 1.0;
            x[(k, g_count + g)] = cov - x_bar;
        }
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypothesisKind {
    /// `beta_{g1} = beta_{g2}`.
    SameSlope,
    /// Both groups fall on the weighted common trend.
    CommonTrend,
}

/// All zero-based group pairs `(g1, g2)`, `g1 < g2`, in lexicographic order.
pub fn all_pairs(n_groups: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for a in 0..n_groups {
        for b in (a + 1)..n_groups {
            pairs.push((a, b));
        }
    }
    pairs
}

/// Builds the hypothesis matrix `L` (P x nu) for the group-wise trend model.
///
/// Columns follow `pairs` in order; columns linearly dependent on earlier
/// ones are dropped so that `L` has full column rank.
pub fn build_hypothesis(kind: HypothesisKind, pairs: &[(usize, usize)], layout: &GroupLayout) -> Result<DMatrix<f64>> {
    let g_count = layout.n_groups();
    let sizes = layout.group_sizes();
    let total: usize = sizes.iter().sum();
    let means = layout.group_means();
    let x_bar = layout.overall_mean();

    let mut columns: Vec<DVector<f64>> = Vec::with_capacity(pairs.len());
    for &(g1, g2) in pairs {
        for g in [g1, g2] {
            if g >= g_count {
                return Err(Error::IndexOutOfRange {
                    index: g + 1,
                    max: g_count,
                });
            }
        }
        if g1 == g2 {
            return Err(Error::InvalidParameter(format!("pair ({}, {}) compares a group with itself", g1 + 1, g2 + 1)));
        }
        let mut col = DVector::zeros(2 * g_count);
        match kind {
            HypothesisKind::SameSlope => {
                col[g_count + g1] = 1.0;
                col[g_count + g2] = -1.0;
            }
            HypothesisKind::CommonTrend => {
                col[g1] = 1.0;
                col[g2] = -1.0;
                let d1 = means[g1] - x_bar;
                let d2 = means[g2] - x_bar;
                for h in 0..g_count {
                    let mut c = -(sizes[h] as f64 / total as f64) * (means[g1] - means[g2]);
                    if h == g1 {
                        c += d1;
                    }
                    if h == g2 {
                        c -= d2;
                    }
                    col[g_count + h] = c;
                }
            }
        }
        columns.push(col);
    }
    reduce_to_full_rank(columns, 2 * g_count)
}

/// Greedy Gram-Schmidt: keeps each column whose residual against the kept
/// ones exceeds `1e-10` of the largest column norm.
fn reduce_to_full_rank(columns: Vec<DVector<f64>>, rows: usize) -> Result<DMatrix<f64>> {
    let scale = columns.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::DegenerateHypothesis);
    }
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut kept: Vec<DVector<f64>> = Vec::new();
    for col in columns {
        let mut resid = col.clone();
        for q in &basis {
            let proj = q.dot(&resid);
            resid -= q * proj;
        }
        let norm = resid.norm();
        if norm > 1e-10 * scale {
            basis.push(resid / norm);
            kept.push(col);
        }
    }
    if kept.is_empty() {
        return Err(Error::DegenerateHypothesis);
    }
    let mut l = DMatrix::zeros(rows, kept.len());
    for (c, col) in kept.iter().enumerate() {
        l.set_column(c, col);
    }
    Ok(l)
}
