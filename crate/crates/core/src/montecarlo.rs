//! Monte Carlo calibration: null samples, cutoffs, p-values and power.
//!
//! Iteration `i` of a run seeded with `seed` draws from
//! `RandomStream { seed, stream_id: i }`. Iterations run in parallel and are
//! collected in index order, so results do not depend on the thread count.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{CurveSet, Grid};
use crate::numerics::{derive_seed, fill_gaussian, RandomStream};
use crate::teststats::{
    adaptive_neyman_energies, ht_bar_z, ht_configs, ht_stat_z, make_weights, HtParams, WeightScheme,
};

/// Which statistic to simulate.
#[derive(Debug, Clone, PartialEq)]
pub enum StatKind {
    Quadratic(WeightScheme),
    AdaptiveNeyman,
    Ht { s: f64 },
    /// Combined thresholding statistic over `(s_lo, s_hi)`; per-level cutoffs
    /// are simulated at level `alpha`.
    HtBar { s_lo: f64, s_hi: f64, alpha: f64 },
    /// `sum_j w_j F_j` with independent `F(nu, df2)` components.
    FGlobal { weights: WeightScheme, df2: usize },
}

impl StatKind {
    pub fn label(&self) -> String {
        match self {
            StatKind::Quadratic(w) => w.label(),
            StatKind::AdaptiveNeyman => "an".into(),
            StatKind::Ht { s } => format!("ht:s={s}"),
            StatKind::HtBar { s_lo, s_hi, .. } => format!("htbar:lo={s_lo},hi={s_hi}"),
            StatKind::FGlobal { weights, df2 } => format!("fglobal:{}:df2={df2}", weights.label()),
        }
    }
}

/// A statistic together with the dimensions of the model it is applied to.
#[derive(Debug, Clone, PartialEq)]
pub struct StatSpec {
    pub kind: StatKind,
    pub p: usize,
    pub n: usize,
    pub nu: usize,
}

impl StatSpec {
    pub fn new(kind: StatKind, p: usize, n: usize, nu: usize) -> Self {
        StatSpec { kind, p, n, nu }
    }

    /// Builds the evaluator. `HtBar` simulates its per-level cutoffs here with
    /// `iterations` draws per level, seeded from `seed`.
    pub fn prepare(&self, iterations: usize, seed: u64) -> Result<PreparedStat> {
        if self.p == 0 || self.n == 0 || self.nu == 0 {
            return Err(Error::InvalidParameter("p, n and nu must all be positive".into()));
        }
        let needs_scalar = !matches!(self.kind, StatKind::Quadratic(_) | StatKind::FGlobal { .. });
        if needs_scalar && self.nu != 1 {
            return Err(Error::UnsupportedNu(self.nu));
        }
        let eval = match &self.kind {
            StatKind::Quadratic(scheme) => Evaluator::Quadratic(make_weights(scheme, self.p, self.n)?),
            StatKind::AdaptiveNeyman => Evaluator::AdaptiveNeyman,
            StatKind::Ht { s } => {
                let params = HtParams::new(self.n, *s)?;
                check_ht_p(self.p, &params)?;
                Evaluator::Ht(params)
            }
            StatKind::HtBar { s_lo, s_hi, alpha } => {
                let configs = ht_configs(self.n, *s_lo, *s_hi)?;
                for c in &configs {
                    check_ht_p(self.p, c)?;
                }
                let mut cutoffs = BTreeMap::new();
                for c in &configs {
                    let single = PreparedStat {
                        p: self.p,
                        nu: 1,
                        eval: Evaluator::Ht(c.clone()),
                    };
                    let level_seed = derive_seed(seed, &[0x4854, c.k_dstar as u64]);
                    let sample = single.null_sample(iterations, level_seed)?;
                    cutoffs.insert(c.k_dstar, cutoff(&sample, *alpha)?);
                }
                Evaluator::HtBar { configs, cutoffs }
            }
            StatKind::FGlobal { weights, df2 } => {
                if *df2 == 0 {
                    return Err(Error::InvalidParameter("F_global needs df2 >= 1".into()));
                }
                Evaluator::FGlobal {
                    weights: make_weights(weights, self.p, self.n)?,
                    df2: *df2,
                }
            }
        };
        Ok(PreparedStat {
            p: self.p,
            nu: self.nu,
            eval,
        })
    }
}

fn check_ht_p(p: usize, params: &HtParams) -> Result<()> {
    if p < params.required_p() {
        return Err(Error::InsufficientP {
            needed: params.required_p(),
            found: p,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum Evaluator {
    Quadratic(Vec<f64>),
    AdaptiveNeyman,
    Ht(HtParams),
    HtBar {
        configs: Vec<HtParams>,
        cutoffs: BTreeMap<u32, f64>,
    },
    FGlobal {
        weights: Vec<f64>,
        df2: usize,
    },
}

/// A statistic ready to be evaluated on standardized data `z = sqrt(n) Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedStat {
    p: usize,
    nu: usize,
    eval: Evaluator,
}

impl PreparedStat {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    /// Per-level cutoffs of an `HtBar` statistic, keyed by `k**`.
    pub fn ht_cutoffs(&self) -> Option<&BTreeMap<u32, f64>> {
        match &self.eval {
            Evaluator::HtBar { cutoffs, .. } => Some(cutoffs),
            _ => None,
        }
    }

    /// Evaluates on `z` (row-major `p x nu`), using `energy` as scratch space.
    fn eval_z(&self, z: &[f64], energy: &mut [f64]) -> f64 {
        let nu = self.nu;
        for (j, e) in energy.iter_mut().enumerate() {
            *e = z[j * nu..(j + 1) * nu].iter().map(|v| v * v).sum();
        }
        match &self.eval {
            Evaluator::Quadratic(w) => energy.iter().zip(w).map(|(e, w)| e * w).sum(),
            Evaluator::AdaptiveNeyman => adaptive_neyman_energies(energy).statistic,
            Evaluator::Ht(params) => ht_stat_z(z, params),
            Evaluator::HtBar { configs, cutoffs } => {
                ht_bar_z(z, configs, cutoffs).expect("cutoffs cover every configuration")
            }
            Evaluator::FGlobal { weights, .. } => energy.iter().zip(weights).map(|(e, w)| e * w).sum::<f64>() / nu as f64,
        }
    }

    /// Evaluates the statistic on standardized data `z = sqrt(n) Y`.
    ///
    /// For `FGlobal`, `z` is read as `sqrt(n) Y_hat` so that the value is
    /// `Q_hat / nu`.
    pub fn evaluate(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.p * self.nu {
            return Err(Error::LengthMismatch {
                expected: self.p * self.nu,
                found: z.len(),
            });
        }
        let mut energy = vec![0.0; self.p];
        Ok(self.eval_z(z, &mut energy))
    }

    fn null_draw<R: Rng>(&self, rng: &mut R, z: &mut [f64], energy: &mut [f64]) -> f64 {
        match &self.eval {
            Evaluator::FGlobal { weights, df2 } => {
                let nu = self.nu as f64;
                let mut total = 0.0;
                let mut num = vec![0.0; self.nu];
                let mut den = vec![0.0; *df2];
                for w in weights {
                    fill_gaussian(rng, &mut num);
                    fill_gaussian(rng, &mut den);
                    let chi_num: f64 = num.iter().map(|v| v * v).sum();
                    let chi_den: f64 = den.iter().map(|v| v * v).sum();
                    total += w * (chi_num / nu) / (chi_den / *df2 as f64);
                }
                total
            }
            _ => {
                fill_gaussian(rng, z);
                self.eval_z(z, energy)
            }
        }
    }

    /// Sorted null sample of `iterations` draws.
    pub fn null_sample(&self, iterations: usize, seed: u64) -> Result<Vec<f64>> {
        if iterations == 0 {
            return Err(Error::EmptySample);
        }
        let len = self.p * self.nu;
        let mut sample: Vec<f64> = (0..iterations as u64)
            .into_par_iter()
            .map_init(
                || (vec![0.0; len], vec![0.0; self.p]),
                |(z, energy), i| {
                    let mut rng = RandomStream::new(seed, i).rng();
                    self.null_draw(&mut rng, z, energy)
                },
            )
            .collect();
        sample.sort_by(f64::total_cmp);
        Ok(sample)
    }
}

/// Minimum iteration count accepted by [`null_sample`].
pub const MIN_NULL_ITERATIONS: usize = 1000;

/// Simulates the null distribution of `spec` and returns it sorted.
pub fn null_sample(spec: &StatSpec, iterations: usize, seed: u64) -> Result<Vec<f64>> {
    if iterations < MIN_NULL_ITERATIONS {
        return Err(Error::InvalidParameter(format!(
            "null simulation needs at least {MIN_NULL_ITERATIONS} iterations, got {iterations}"
        )));
    }
    let prepared = spec.prepare(iterations, derive_seed(seed, &[0x5052_4550]))?;
    prepared.null_sample(iterations, seed)
}

/// Empirical `1 - alpha` quantile: the order statistic at one-based rank
/// `ceil((1 - alpha) m)`.
pub fn cutoff(null_sorted: &[f64], alpha: f64) -> Result<f64> {
    if null_sorted.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let m = null_sorted.len();
    // the small offset keeps exact products such as 0.95 * 100 from rounding up
    let rank = (((1.0 - alpha) * m as f64) - 1e-9).ceil().clamp(1.0, m as f64) as usize;
    Ok(null_sorted[rank - 1])
}

/// Add-one Monte Carlo p-value `(1 + #{null >= observed}) / (1 + m)`.
pub fn p_value(null_sorted: &[f64], observed: f64) -> Result<f64> {
    if null_sorted.is_empty() {
        return Err(Error::EmptySample);
    }
    let below = null_sorted.partition_point(|v| *v < observed);
    let at_or_above = null_sorted.len() - below;
    Ok((1 + at_or_above) as f64 / (1 + null_sorted.len()) as f64)
}

/// Outcome of a simulated-cutoff test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub cutoff: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub iterations: usize,
    pub seed: u64,
}

/// Calibrates `observed` against a fresh null sample of `spec`; cutoff and
/// p-value come from the same sample.
pub fn run_test(spec: &StatSpec, observed: f64, alpha: f64, iterations: usize, seed: u64) -> Result<TestOutcome> {
    let sample = null_sample(spec, iterations, seed)?;
    let c = cutoff(&sample, alpha)?;
    Ok(TestOutcome {
        statistic: observed,
        cutoff: c,
        p_value: p_value(&sample, observed)?,
        reject: observed > c,
        alpha,
        iterations,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    pub power: f64,
    pub std_error: f64,
    pub iterations: usize,
}

impl PowerEstimate {
    fn from_count(hits: usize, iterations: usize) -> Self {
        let power = hits as f64 / iterations as f64;
        PowerEstimate {
            power,
            std_error: (power * (1.0 - power) / iterations as f64).sqrt(),
            iterations,
        }
    }
}

/// Power of several statistics at the same alternative with common random
/// numbers: iteration `i` draws `z = sqrt(n) theta + e` once and evaluates
/// every statistic on it.
pub fn power_panel(
    stats: &[&PreparedStat],
    cutoffs: &[f64],
    theta: &[f64],
    n: usize,
    iterations: usize,
    seed: u64,
) -> Result<Vec<PowerEstimate>> {
    if stats.len() != cutoffs.len() {
        return Err(Error::LengthMismatch {
            expected: stats.len(),
            found: cutoffs.len(),
        });
    }
    if iterations == 0 {
        return Err(Error::EmptySample);
    }
    let Some(first) = stats.first() else {
        return Ok(Vec::new());
    };
    let (p, nu) = (first.p, first.nu);
    for s in stats {
        if s.p != p || s.nu != nu {
            return Err(Error::DimensionMismatch("statistics in a power panel must share p and nu".into()));
        }
        if matches!(s.eval, Evaluator::FGlobal { .. }) {
            return Err(Error::InvalidParameter("power of F_global is not defined on the discrete model".into()));
        }
    }
    if theta.len() != p * nu {
        return Err(Error::LengthMismatch {
            expected: p * nu,
            found: theta.len(),
        });
    }
    let shift: Vec<f64> = theta.iter().map(|t| t * (n as f64).sqrt()).collect();
    let hits: Vec<Vec<bool>> = (0..iterations as u64)
        .into_par_iter()
        .map_init(
            || (vec![0.0; p * nu], vec![0.0; p]),
            |(z, energy), i| {
                let mut rng = RandomStream::new(seed, i).rng();
                fill_gaussian(&mut rng, z);
                for (v, s) in z.iter_mut().zip(&shift) {
                    *v += s;
                }
                stats
                    .iter()
                    .zip(cutoffs)
                    .map(|(st, c)| st.eval_z(z, energy) > *c)
                    .collect()
            },
        )
        .collect();
    Ok((0..stats.len())
        .map(|s| PowerEstimate::from_count(hits.iter().filter(|h| h[s]).count(), iterations))
        .collect())
}

/// Simulated power of one statistic at mean configuration `theta`.
pub fn power(stat: &PreparedStat, theta: &[f64], cutoff: f64, n: usize, iterations: usize, seed: u64) -> Result<PowerEstimate> {
    Ok(power_panel(&[stat], &[cutoff], theta, n, iterations, seed)?[0])
}

/// Finite moving-average error model on a periodic grid:
/// `eps(t_l) = sum_m gamma_m eta(t_{l - m})`, indices taken modulo `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaNoiseSpec {
    /// Lag of `gamma[0]`; `gamma[i]` multiplies `eta(t_{l - first_lag - i})`.
    pub first_lag: i64,
    pub gamma: Vec<f64>,
}

impl MaNoiseSpec {
    /// Causal filter `gamma_0, gamma_1, ...`.
    pub fn causal(gamma: Vec<f64>) -> Self {
        MaNoiseSpec { first_lag: 0, gamma }
    }

    /// Symmetric-support filter `gamma_{-q}, ..., gamma_q`.
    pub fn two_sided(gamma: Vec<f64>) -> Result<Self> {
        if gamma.len() % 2 == 0 {
            return Err(Error::InvalidParameter("two-sided MA filter needs an odd number of taps".into()));
        }
        let q = (gamma.len() / 2) as i64;
        Ok(MaNoiseSpec { first_lag: -q, gamma })
    }

    /// Coefficients scaled so that `sum gamma^2 = 1`.
    fn normalized(&self) -> Result<Vec<f64>> {
        let ss: f64 = self.gamma.iter().map(|g| g * g).sum();
        if !(ss > 0.0) || !ss.is_finite() {
            return Err(Error::AllZeroGamma);
        }
        Ok(self.gamma.iter().map(|g| g / ss.sqrt()).collect())
    }
}

/// Unit-variance stationary MA error curves. Curve `(i, k)` uses stream
/// `i * n_units + k` of `seed`.
pub fn ma_noise_curves(spec: &MaNoiseSpec, grid: &Grid, n_units: usize, n_rep: usize, seed: u64) -> Result<CurveSet> {
    let gamma = spec.normalized()?;
    let r = grid.len();
    let mut curves = CurveSet::zeros(*grid, n_rep, n_units);
    let mut eta = vec![0.0; r];
    for i in 0..n_rep {
        for k in 0..n_units {
            let mut rng = RandomStream::new(seed, (i * n_units + k) as u64).rng();
            fill_gaussian(&mut rng, &mut eta);
            let out = curves.curve_mut(i, k);
            for (l, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (idx, g) in gamma.iter().enumerate() {
                    let lag = spec.first_lag + idx as i64;
                    let src = (l as i64 - lag).rem_euclid(r as i64) as usize;
                    acc += g * eta[src];
                }
                *o = acc;
            }
        }
    }
    Ok(curves)
}
