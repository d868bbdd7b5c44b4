//! Power study over spiked and smooth alternatives.
//!
//! Every alternative in a class shares one signal energy `lambda`, chosen so
//! the unweighted quadratic test has a fixed power. Each alternative is also
//! placed on a Sobolev ellipsoid `sum_j j^{2s} theta_j^2 = M`, and the fitted
//! smoothness drives the tuned statistics.

use std::collections::HashMap;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::montecarlo::{cutoff, power_panel, PreparedStat, StatKind, StatSpec};
use crate::numerics::{bisect, chisq_quantile, chisq_sf, derive_seed};
use crate::teststats::WeightScheme;

/// Signal energy `lambda` at which the unweighted quadratic test (`p * nu`
/// degrees of freedom, level `alpha`) has power `target`.
///
/// Its power depends on `theta` only through `n sum theta^2`, so the root of
/// the noncentral chi-square survival function applies to every alternative.
pub fn calibrate_lambda(p: usize, n: usize, nu: usize, alpha: f64, target: f64) -> Result<f64> {
    if p == 0 || n == 0 || nu == 0 {
        return Err(Error::InvalidParameter("p, n and nu must all be positive".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) || !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha and target power must lie in (0, 1), got {alpha} and {target}"
        )));
    }
    if target < alpha {
        return Err(Error::InvalidParameter(format!(
            "target power {target} is below the level {alpha}"
        )));
    }
    if (target - alpha).abs() < 1e-12 {
        return Ok(0.0);
    }
    let df = p * nu;
    let q = chisq_quantile(df, 0.0, 1.0 - alpha)?;
    let power = |nc: f64| chisq_sf(df, nc, q).map(|v| v - target).unwrap_or(f64::NAN);
    let mut hi = 1.0;
    while power(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::NoConvergence { iterations: 30 });
        }
    }
    let nc = bisect(power, 0.0, hi, 1e-10)?;
    Ok(nc / n as f64)
}

/// `theta_{j0} = sqrt(lambda)`, zero elsewhere. `j0` is one-based.
pub fn spiked_theta(j0: usize, lambda: f64, p: usize) -> Result<Vec<f64>> {
    if j0 < 1 || j0 > p {
        return Err(Error::IndexOutOfRange { index: j0, max: p });
    }
    check_lambda(lambda)?;
    let mut theta = vec![0.0; p];
    theta[j0 - 1] = lambda.sqrt();
    Ok(theta)
}

/// Exponent `d` of the smooth profile: `{log 0.2 / log(1 - b) - 1} / 2`.
pub fn smooth_exponent(b: f64) -> Result<f64> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::InvalidB(b));
    }
    Ok(((0.2f64).ln() / (1.0 - b).ln() - 1.0) / 2.0)
}

/// `theta_j = sqrt(lambda) (1 - j/(p+1))^d / c`, normalized to `sum theta^2 = lambda`.
pub fn smooth_theta(b: f64, lambda: f64, p: usize) -> Result<Vec<f64>> {
    let d = smooth_exponent(b)?;
    check_lambda(lambda)?;
    if p == 0 {
        return Err(Error::InvalidParameter("p must be at least 1".into()));
    }
    let profile: Vec<f64> = (1..=p).map(|j| (1.0 - j as f64 / (p as f64 + 1.0)).powf(d)).collect();
    let c = profile.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(profile.iter().map(|v| lambda.sqrt() * v / c).collect())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

/// Sobolev smoothness `s` and radius `M` attributed to an alternative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevFit {
    pub s: f64,
    pub m: f64,
}

/// `sum_j j^{2s} theta_j^2`.
pub fn sobolev_norm(theta: &[f64], s: f64) -> f64 {
    theta
        .iter()
        .enumerate()
        .map(|(j, t)| ((j + 1) as f64).powf(2.0 * s) * t * t)
        .sum()
}

/// Spiked-class grid `j0_i = round(1 + (p - 1)(i - 1)/(points - 1))`,
/// ties rounded up, duplicates removed.
pub fn spiked_j0_grid(p: usize, points: usize) -> Result<Vec<usize>> {
    if p == 0 || points < 2 {
        return Err(Error::InvalidParameter(format!("need p >= 1 and at least 2 grid points, got p = {p}, points = {points}")));
    }
    let mut grid: Vec<usize> = (0..points)
        .map(|i| (1.0 + (p - 1) as f64 * i as f64 / (points - 1) as f64 + 0.5).floor() as usize)
        .collect();
    grid.dedup();
    Ok(grid)
}

/// Smooth-class grid: `points` evenly spaced values of `b` on `[lo, hi]`.
pub fn smooth_b_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi < 1.0 && lo < hi) || points < 2 {
        return Err(Error::InvalidParameter(format!("need 0 < lo < hi < 1 and >= 2 points, got [{lo}, {hi}], {points}")));
    }
    Ok((0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect())
}

/// Number of points in the published experiment grids.
pub const GRID_POINTS: usize = 20;

/// Fit for the spiked alternative at `j0`: `M = lambda (p + 1)` and
/// `s = log(p + 1) / (2 log j0)`, so that `j0^{2s} lambda = M`.
///
/// At `j0 = 1` no `s` solves the equation; the value at the second point of
/// the standard `j0` grid is used instead.
pub fn sobolev_fit_spiked(j0: usize, lambda: f64, p: usize) -> Result<SobolevFit> {
    if j0 < 1 || j0 > p {
        return Err(Error::IndexOutOfRange { index: j0, max: p });
    }
    check_lambda(lambda)?;
    let j_eff = if j0 == 1 {
        let grid = spiked_j0_grid(p, GRID_POINTS)?;
        match grid.get(1) {
            Some(&j) => j,
            None => return Err(Error::InvalidParameter(format!("p = {p} is too small for a spiked grid"))),
        }
    } else {
        j0
    };
    let pf = p as f64 + 1.0;
    Ok(SobolevFit {
        s: pf.ln() / (2.0 * (j_eff as f64).ln()),
        m: lambda * pf,
    })
}

/// Reference profile parameter used to set the smooth-class radius.
pub const SMOOTH_REFERENCE_B: f64 = 0.81;

/// Smooth-class radius: `sum_j j theta_j^2` for the profile at `b = 0.81`.
pub fn smooth_reference_m(lambda: f64, p: usize) -> Result<f64> {
    Ok(sobolev_norm(&smooth_theta(SMOOTH_REFERENCE_B, lambda, p)?, 0.5))
}

const SMOOTH_S_RANGE: (f64, f64) = (0.5, 10.0);

/// Smoothness `s` in `[1/2, 10]` with `sum_j j^{2s} theta_j(b)^2 = m_ref`.
pub fn sobolev_fit_smooth(b: f64, lambda: f64, p: usize, m_ref: f64) -> Result<SobolevFit> {
    if !(b > 0.0 && b <= 0.80) {
        return Err(Error::InvalidB(b));
    }
    if !(m_ref > 0.0) {
        return Err(Error::InvalidParameter(format!("reference radius must be positive, got {m_ref}")));
    }
    let theta = smooth_theta(b, lambda, p)?;
    // compare on the log scale: the norm spans many orders of magnitude over the range
    let f = |s: f64| sobolev_norm(&theta, s).ln() - m_ref.ln();
    let s = bisect(f, SMOOTH_S_RANGE.0, SMOOTH_S_RANGE.1, 1e-12)?;
    Ok(SobolevFit { s, m: m_ref })
}

/// Settings of the power study.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Figure4Config {
    pub p: usize,
    pub n: usize,
    pub alpha: f64,
    pub target_power: f64,
    /// Iterations per simulated null cutoff.
    pub null_iterations: usize,
    /// Iterations per power point.
    pub power_iterations: usize,
    pub grid_points: usize,
    pub b_lo: f64,
    pub b_hi: f64,
}

impl Default for Figure4Config {
    fn default() -> Self {
        Figure4Config {
            p: 127,
            n: 64,
            alpha: 0.05,
            target_power: 0.4,
            null_iterations: 20_000,
            power_iterations: 20_000,
            grid_points: GRID_POINTS,
            b_lo: 0.01,
            b_hi: 0.80,
        }
    }
}

impl Figure4Config {
    /// Every violated precondition, so callers can report them together.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.p < 3 {
            v.push(format!("p must be at least 3, got {}", self.p));
        }
        if self.n < 2 {
            v.push(format!("n must be at least 2, got {}", self.n));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            v.push(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.target_power > self.alpha && self.target_power < 1.0) {
            v.push(format!("target power must lie in (alpha, 1), got {}", self.target_power));
        }
        if self.null_iterations < crate::montecarlo::MIN_NULL_ITERATIONS {
            v.push(format!(
                "null iterations must be at least {}, got {}",
                crate::montecarlo::MIN_NULL_ITERATIONS,
                self.null_iterations
            ));
        }
        if self.power_iterations == 0 {
            v.push("power iterations must be positive".into());
        }
        if self.grid_points < 2 {
            v.push(format!("grid needs at least 2 points, got {}", self.grid_points));
        }
        if !(self.b_lo > 0.0 && self.b_lo < self.b_hi && self.b_hi <= 0.80) {
            v.push(format!("need 0 < b_lo < b_hi <= 0.80, got [{}, {}]", self.b_lo, self.b_hi));
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AltClass {
    Spiked,
    Smooth,
}

impl AltClass {
    pub fn label(self) -> &'static str {
        match self {
            AltClass::Spiked => "spiked",
            AltClass::Smooth => "smooth",
        }
    }
}

/// Statistic names in output order.
pub const FIGURE4_STATISTICS: [&str; 6] = ["fzz", "uwq", "opt", "cvm", "an", "htbar"];

#[derive(Debug, Clone, PartialEq)]
pub struct Figure4Row {
    pub class: AltClass,
    /// One-based position in the class grid.
    pub index: usize,
    /// `j0` or `b`.
    pub index_value: f64,
    pub sobolev: SobolevFit,
    pub statistic: &'static str,
    pub power: f64,
    pub std_error: f64,
}

/// Per-class summary of the study.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSummary {
    pub class: AltClass,
    /// Smallest and largest fitted `s` over the class.
    pub s_range: (f64, f64),
    /// Simulated cutoff of the combined thresholding statistic.
    pub htbar_cutoff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure4Result {
    pub lambda: f64,
    pub classes: Vec<ClassSummary>,
    pub rows: Vec<Figure4Row>,
}

impl Figure4Result {
    /// Rows of one statistic within one class, in grid order.
    pub fn curve(&self, class: AltClass, statistic: &str) -> Vec<&Figure4Row> {
        self.rows
            .iter()
            .filter(|r| r.class == class && r.statistic == statistic)
            .collect()
    }

    pub fn mean_power(&self, class: AltClass, statistic: &str) -> f64 {
        let curve = self.curve(class, statistic);
        curve.iter().map(|r| r.power).sum::<f64>() / curve.len() as f64
    }
}

struct Alternative {
    index_value: f64,
    theta: Vec<f64>,
    fit: SobolevFit,
}

fn build_alternatives(class: AltClass, config: &Figure4Config, lambda: f64) -> Result<Vec<Alternative>> {
    let p = config.p;
    match class {
        AltClass::Spiked => spiked_j0_grid(p, config.grid_points)?
            .into_iter()
            .map(|j0| {
                Ok(Alternative {
                    index_value: j0 as f64,
                    theta: spiked_theta(j0, lambda, p)?,
                    fit: sobolev_fit_spiked(j0, lambda, p)?,
                })
            })
            .collect(),
        AltClass::Smooth => {
            let m_ref = smooth_reference_m(lambda, p)?;
            smooth_b_grid(config.b_lo, config.b_hi, config.grid_points)?
                .into_iter()
                .map(|b| {
                    Ok(Alternative {
                        index_value: b,
                        theta: smooth_theta(b, lambda, p)?,
                        fit: sobolev_fit_smooth(b, lambda, p, m_ref)?,
                    })
                })
                .collect()
        }
    }
}

fn simulated_cutoff(stat: &PreparedStat, config: &Figure4Config, seed: u64) -> Result<f64> {
    cutoff(&stat.null_sample(config.null_iterations, seed)?, config.alpha)
}

/// Runs the power study for both classes and all six statistics.
///
/// Seeds for every cutoff and power point are derived from `seed`, so the
/// table is a deterministic function of `(config, seed)`.
pub fn run_figure4(config: &Figure4Config, seed: u64) -> Result<Figure4Result> {
    let problems = config.violations();
    if !problems.is_empty() {
        return Err(Error::InvalidConfig(problems));
    }
    let (p, n) = (config.p, config.n);
    let lambda = calibrate_lambda(p, n, 1, config.alpha, config.target_power)?;

    let prepare = |kind: StatKind, tag: u64| StatSpec::new(kind, p, n, 1).prepare(config.null_iterations, derive_seed(seed, &[1, tag]));
    let fixed: Vec<(PreparedStat, f64)> = [
        StatKind::Quadratic(WeightScheme::Uwq),
        StatKind::Quadratic(WeightScheme::Opt),
        StatKind::Quadratic(WeightScheme::Cvm),
        StatKind::AdaptiveNeyman,
    ]
    .into_iter()
    .enumerate()
    .map(|(i, kind)| {
        let stat = prepare(kind, i as u64)?;
        let c = simulated_cutoff(&stat, config, derive_seed(seed, &[2, i as u64]))?;
        Ok((stat, c))
    })
    .collect::<Result<_>>()?;

    let mut fzz_cache: HashMap<u64, (PreparedStat, f64)> = HashMap::new();
    let mut classes = Vec::new();
    let mut rows = Vec::new();
    for (class_tag, class) in [AltClass::Spiked, AltClass::Smooth].into_iter().enumerate() {
        let alternatives = build_alternatives(class, config, lambda)?;
        let s_lo = alternatives.iter().map(|a| a.fit.s).fold(f64::INFINITY, f64::min);
        let s_hi = alternatives.iter().map(|a| a.fit.s).fold(f64::NEG_INFINITY, f64::max);
        let htbar = prepare(
            StatKind::HtBar {
                s_lo,
                s_hi,
                alpha: config.alpha,
            },
            10 + class_tag as u64,
        )?;
        let htbar_cutoff = simulated_cutoff(&htbar, config, derive_seed(seed, &[3, class_tag as u64]))?;
        classes.push(ClassSummary {
            class,
            s_range: (s_lo, s_hi),
            htbar_cutoff,
        });

        for (idx, alt) in alternatives.iter().enumerate() {
            let key = alt.fit.s.to_bits();
            if !fzz_cache.contains_key(&key) {
                let stat = prepare(StatKind::Quadratic(WeightScheme::Fzz { s: alt.fit.s }), 100)?;
                let c = simulated_cutoff(&stat, config, derive_seed(seed, &[4, key]))?;
                fzz_cache.insert(key, (stat, c));
            }
            let fzz = &fzz_cache[&key];
            let stats: Vec<&PreparedStat> = std::iter::once(&fzz.0)
                .chain(fixed.iter().map(|(s, _)| s))
                .chain(std::iter::once(&htbar))
                .collect();
            let cutoffs: Vec<f64> = std::iter::once(fzz.1)
                .chain(fixed.iter().map(|(_, c)| *c))
                .chain(std::iter::once(htbar_cutoff))
                .collect();
            let estimates = power_panel(
                &stats,
                &cutoffs,
                &alt.theta,
                n,
                config.power_iterations,
                derive_seed(seed, &[5, class_tag as u64, idx as u64]),
            )?;
            for (name, est) in FIGURE4_STATISTICS.iter().zip(estimates) {
                rows.push(Figure4Row {
                    class,
                    index: idx + 1,
                    index_value: alt.index_value,
                    sobolev: alt.fit,
                    statistic: name,
                    power: est.power,
                    std_error: est.std_error,
                });
            }
        }
    }
    Ok(Figure4Result { lambda, classes, rows })
}
