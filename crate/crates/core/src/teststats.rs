//! Test statistics on the discrete model.
//!
//! Tapering statistics are weighted quadratic forms `n sum_j w_j ||Y_j||^2`;
//! truncation is the adaptive Neyman statistic; thresholding is the
//! dyadic hard-thresholding statistic `HT_n(s)` and its maximum over a range
//! of smoothness values.
//!
//! The `*_z` functions take `z_j = sqrt(n) Y_{n,j}` directly and are what the
//! Monte Carlo engine calls in its inner loop.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::flm::DiscreteModel;
use crate::numerics::{std_normal, std_normal_sf};

/// Weight sequences for tapered quadratic forms.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightScheme {
    /// `w_j = j^{-1/2}`.
    Opt,
    /// Weights of the minimax tapering test for smoothness `s > 1/2`.
    Fzz { s: f64 },
    /// `w_j = 1`.
    Uwq,
    /// `w_j = j^{-2}`.
    Cvm,
    /// User-supplied weights; `monotone` asks for a nonincreasing check.
    Custom { weights: Vec<f64>, monotone: bool },
}

impl WeightScheme {
    pub fn label(&self) -> String {
        match self {
            WeightScheme::Opt => "opt".into(),
            WeightScheme::Fzz { s } => format!("fzz:s={s}"),
            WeightScheme::Uwq => "uwq".into(),
            WeightScheme::Cvm => "cvm".into(),
            WeightScheme::Custom { .. } => "custom".into(),
        }
    }
}

/// The `xi_n = n^{-4s/(4s+1)}` scale of the minimax tapering weights.
pub fn fzz_xi(s: f64, n: usize) -> f64 {
    let s_tilde = 4.0 * s + 1.0;
    (n as f64).powf(-4.0 * s / s_tilde)
}

/// `w_j` for `j = 1..=p`.
pub fn make_weights(scheme: &WeightScheme, p: usize, n: usize) -> Result<Vec<f64>> {
    if p == 0 {
        return Err(Error::InvalidParameter("p must be at least 1".into()));
    }
    let weights: Vec<f64> = match scheme {
        WeightScheme::Opt => (1..=p).map(|j| (j as f64).powf(-0.5)).collect(),
        WeightScheme::Uwq => vec![1.0; p],
        WeightScheme::Cvm => (1..=p).map(|j| (j as f64).powi(-2)).collect(),
        WeightScheme::Fzz { s } => {
            if !(*s > 0.5) {
                return Err(Error::InvalidParameter(format!("FZZ weights need s > 1/2, got {s}")));
            }
            let xi = fzz_xi(*s, n);
            (1..=p)
                .map(|j| {
                    // 1 - u^2 / (1 + u)^2 with u = j^{2s} xi, written without cancellation
                    let u = (j as f64).powf(2.0 * s) * xi;
                    (1.0 + 2.0 * u) / ((1.0 + u) * (1.0 + u))
                })
                .collect()
        }
        WeightScheme::Custom { weights, monotone } => {
            if weights.len() != p {
                return Err(Error::LengthMismatch {
                    expected: p,
                    found: weights.len(),
                });
            }
            if *monotone {
                if let Some(pos) = weights.windows(2).position(|w| w[1] > w[0]) {
                    return Err(Error::NotMonotone { index: pos + 2 });
                }
            }
            weights.clone()
        }
    };
    if let Some((i, &w)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0 && **w <= 1.0)) {
        return Err(Error::InvalidWeight { index: i + 1, value: w });
    }
    Ok(weights)
}

/// `sum_j w_j e_j` for energies `e_j = n ||Y_{n,j}||^2`.
pub fn quadratic_from_energies(energies: &[f64], weights: &[f64]) -> Result<f64> {
    if energies.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: energies.len(),
            found: weights.len(),
        });
    }
    Ok(energies.iter().zip(weights).map(|(e, w)| e * w).sum())
}

/// `Q_n = n sum_j w_j ||Y_{n,j}||^2`.
pub fn quadratic_stat(model: &DiscreteModel, weights: &[f64]) -> Result<f64> {
    if weights.len() != model.p {
        return Err(Error::LengthMismatch {
            expected: model.p,
            found: weights.len(),
        });
    }
    quadratic_from_energies(&model.energies(), weights)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveNeyman {
    pub statistic: f64,
    /// Maximizing truncation point (one-based); ties go to the smallest.
    pub k_hat: usize,
}

/// `max_k (N_k - k) / sqrt(k)` with `N_k` the running sum of `energies`.
pub fn adaptive_neyman_energies(energies: &[f64]) -> AdaptiveNeyman {
    let mut best = AdaptiveNeyman {
        statistic: f64::NEG_INFINITY,
        k_hat: 0,
    };
    let mut partial = 0.0;
    for (idx, e) in energies.iter().enumerate() {
        partial += e;
        let k = (idx + 1) as f64;
        let v = (partial - k) / k.sqrt();
        if v > best.statistic {
            best = AdaptiveNeyman {
                statistic: v,
                k_hat: idx + 1,
            };
        }
    }
    best
}

pub fn adaptive_neyman(model: &DiscreteModel) -> Result<AdaptiveNeyman> {
    if model.nu != 1 {
        return Err(Error::UnsupportedNu(model.nu));
    }
    if model.p == 0 {
        return Err(Error::InvalidParameter("p must be at least 1".into()));
    }
    Ok(adaptive_neyman_energies(&model.energies()))
}

/// Flat index of position `l` (one-based) at dyadic level `k`: `2^k + l - 1`.
pub fn wavelet_index(k: u32, l: usize) -> Result<usize> {
    let width = 1usize
        .checked_shl(k)
        .ok_or(Error::InvalidPosition { k, l })?;
    if l < 1 || l > width {
        return Err(Error::InvalidPosition { k, l });
    }
    Ok(width + l - 1)
}

/// Inverse of [`wavelet_index`].
pub fn level_of(j: usize) -> Result<(u32, usize)> {
    if j == 0 {
        return Err(Error::IndexOutOfRange { index: 0, max: usize::MAX });
    }
    let k = usize::BITS - 1 - j.leading_zeros();
    Ok((k, j - (1usize << k) + 1))
}

/// `E[eta^2 1{|eta| > xi}]` for standard normal `eta`, in closed form
/// `2 (xi phi(xi) + 1 - Phi(xi))`.
pub fn mu_ht(xi: f64) -> f64 {
    let (pdf, _) = std_normal(xi);
    2.0 * (xi * pdf + std_normal_sf(xi))
}

/// Smallest integer strictly greater than `x`.
pub fn ceil_exceed(x: f64) -> i64 {
    x.floor() as i64 + 1
}

/// Settings of the hard-thresholding statistic for sample size `n` and
/// smoothness `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct HtParams {
    pub n: usize,
    pub s: f64,
    /// Finest level `k*_n = ceil(log2 n)`.
    pub k_star: u32,
    /// Last unthresholded level `k**_n(s)`.
    pub k_dstar: u32,
    /// `xi_{n,k}` for `k = k_dstar + 1 ..= k_star`.
    pub thresholds: Vec<f64>,
    /// `mu_HT(xi_{n,k})` matching `thresholds`.
    pub centering: Vec<f64>,
    /// Use the literal one-sided indicator `sqrt(n) Y > xi`.
    pub one_sided: bool,
}

impl HtParams {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("HT needs n >= 2, got {n}")));
        }
        if !(s > 0.5) || !s.is_finite() {
            return Err(Error::InvalidParameter(format!("HT needs s > 1/2, got {s}")));
        }
        let log2n = (n as f64).log2();
        let k_star = log2n.ceil() as u32;
        let k_dstar = Self::k_dstar_for(n, s);
        if k_dstar > k_star {
            return Err(Error::InvalidParameter(format!(
                "k** = {k_dstar} exceeds k* = {k_star} for n = {n}, s = {s}"
            )));
        }
        let thresholds: Vec<f64> = ((k_dstar + 1)..=k_star)
            .map(|k| (((k - k_dstar) as f64 + 8.0) * std::f64::consts::LN_2).sqrt())
            .collect();
        let centering = thresholds.iter().map(|&xi| mu_ht(xi)).collect();
        Ok(HtParams {
            n,
            s,
            k_star,
            k_dstar,
            thresholds,
            centering,
            one_sided: false,
        })
    }

    /// `k**_n(s)`: the smallest integer exceeding `log2(n) / (2s + 1/2)`.
    pub fn k_dstar_for(n: usize, s: f64) -> u32 {
        ceil_exceed((n as f64).log2() / (2.0 * s + 0.5)).max(0) as u32
    }

    pub fn with_one_sided(mut self, one_sided: bool) -> Self {
        self.one_sided = one_sided;
        self
    }

    /// Number of frequencies covering levels `0..=k_star`.
    pub fn required_p(&self) -> usize {
        (1usize << (self.k_star + 1)) - 1
    }
}

/// `HT_n(s)` from standardized values `z_j = sqrt(n) Y_{n,j}`.
///
/// Only the first `required_p` entries of `z` are used.
pub fn ht_stat_z(z: &[f64], params: &HtParams) -> f64 {
    let mut total = 0.0;
    let unthresholded = (1usize << (params.k_dstar + 1)) - 1;
    for v in &z[..unthresholded] {
        total += v * v - 1.0;
    }
    for (level, (xi, mu)) in ((params.k_dstar + 1)..=params.k_star).zip(params.thresholds.iter().zip(&params.centering)) {
        let start = 1usize << level;
        let mut block = 0.0;
        for &v in &z[start - 1..2 * start - 1] {
            let keep = if params.one_sided { v > *xi } else { v.abs() > *xi };
            if keep {
                block += v * v;
            }
        }
        total += block - (start as f64) * mu;
    }
    total
}

pub fn ht_stat(model: &DiscreteModel, params: &HtParams) -> Result<f64> {
    if model.nu != 1 {
        return Err(Error::UnsupportedNu(model.nu));
    }
    if model.p < params.required_p() {
        return Err(Error::InsufficientP {
            needed: params.required_p(),
            found: model.p,
        });
    }
    Ok(ht_stat_z(&model.standardized(), params))
}

const S_GRID_STEP: f64 = 1e-3;

/// The distinct `HT_n(s)` configurations for `s` in the open interval
/// `(s_lo, s_hi)`, ordered by `k**`.
///
/// `s` is scanned at resolution `1e-3`; configurations are distinct exactly
/// when their `k**` differs. Each keeps the first grid `s` that produced it.
pub fn ht_configs(n: usize, s_lo: f64, s_hi: f64) -> Result<Vec<HtParams>> {
    if !(s_lo > 0.5 && s_hi > s_lo) {
        return Err(Error::InvalidParameter(format!(
            "need 1/2 < s_lo < s_hi, got ({s_lo}, {s_hi})"
        )));
    }
    let mut by_level: BTreeMap<u32, f64> = BTreeMap::new();
    let mut i = 1u64;
    loop {
        let s = s_lo + i as f64 * S_GRID_STEP;
        if s >= s_hi {
            break;
        }
        by_level.entry(HtParams::k_dstar_for(n, s)).or_insert(s);
        i += 1;
    }
    if by_level.is_empty() {
        let mid = 0.5 * (s_lo + s_hi);
        by_level.insert(HtParams::k_dstar_for(n, mid), mid);
    }
    by_level.into_values().map(|s| HtParams::new(n, s)).collect()
}

/// `max_s HT_n(s) / c_{n,alpha}(s)` over the given configurations, with
/// `cutoffs` keyed by `k**`. The combined test rejects when this exceeds 1.
pub fn ht_bar_z(z: &[f64], configs: &[HtParams], cutoffs: &BTreeMap<u32, f64>) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for params in configs {
        let c = *cutoffs
            .get(&params.k_dstar)
            .ok_or(Error::MissingCutoff(params.k_dstar))?;
        if !(c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "HT cutoff for k** = {} must be positive, got {c}",
                params.k_dstar
            )));
        }
        best = best.max(ht_stat_z(z, params) / c);
    }
    Ok(best)
}

pub fn ht_bar(model: &DiscreteModel, configs: &[HtParams], cutoffs: &BTreeMap<u32, f64>) -> Result<f64> {
    if model.nu != 1 {
        return Err(Error::UnsupportedNu(model.nu));
    }
    let needed = configs.iter().map(HtParams::required_p).max().unwrap_or(0);
    if model.p < needed {
        return Err(Error::InsufficientP {
            needed,
            found: model.p,
        });
    }
    ht_bar_z(&model.standardized(), configs, cutoffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gaussian_vector, RandomStream};

    fn model(n: usize, y: Vec<f64>) -> DiscreteModel {
        DiscreteModel::from_rows(n, 1, y).unwrap()
    }

    #[test]
    fn opt_and_cvm_weights() {
        let w = make_weights(&WeightScheme::Opt, 4, 1).unwrap();
        let expected = [1.0, 0.707_106_78, 0.577_350_27, 0.5];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-8);
        }
        assert_eq!(make_weights(&WeightScheme::Cvm, 2, 1).unwrap()[1], 0.25);
        assert_eq!(make_weights(&WeightScheme::Uwq, 3, 1).unwrap(), vec![1.0; 3]);
    }

    #[test]
    fn fzz_weight_at_j1() {
        let xi = 64f64.powf(-4.0 / 5.0);
        assert!((xi - 0.035_897).abs() < 1e-6);
        let oracle = 1.0 - xi * xi / ((1.0 + xi) * (1.0 + xi));
        let w = make_weights(&WeightScheme::Fzz { s: 1.0 }, 3, 64).unwrap();
        assert!((w[0] - oracle).abs() < 1e-14);
        assert!((w[0] - 0.998_80).abs() < 1e-5);
    }

    #[test]
    fn fzz_monotone_on_test_grid() {
        for &s in &[0.6, 1.0, 2.0] {
            for &n in &[16usize, 64, 256] {
                let w = make_weights(&WeightScheme::Fzz { s }, 10_000, n).unwrap();
                assert!(w.iter().all(|&v| v > 0.0 && v <= 1.0));
                assert!(w.windows(2).all(|p| p[1] < p[0]), "s={s} n={n}");
            }
        }
    }

    #[test]
    fn custom_weight_validation() {
        let bad = WeightScheme::Custom {
            weights: vec![1.0, 1.5],
            monotone: false,
        };
        assert!(matches!(make_weights(&bad, 2, 1), Err(Error::InvalidWeight { index: 2, .. })));
        let up = WeightScheme::Custom {
            weights: vec![0.5, 0.6, 0.1],
            monotone: true,
        };
        assert!(matches!(make_weights(&up, 3, 1), Err(Error::NotMonotone { index: 2 })));
        assert!(make_weights(&WeightScheme::Fzz { s: 0.5 }, 3, 1).is_err());
    }

    #[test]
    fn quadratic_values() {
        assert_eq!(quadratic_stat(&model(4, vec![0.0; 5]), &[1.0; 5]).unwrap(), 0.0);
        let w = make_weights(&WeightScheme::Opt, 3, 1).unwrap();
        let q = quadratic_stat(&model(1, vec![1.0; 3]), &w).unwrap();
        assert!((q - 2.284_457_050_376_173).abs() < 1e-12);
        assert!(matches!(
            quadratic_stat(&model(1, vec![1.0; 3]), &[1.0; 2]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn quadratic_matches_loop_for_vector_rows() {
        let y = gaussian_vector(RandomStream::new(3, 0), 40);
        let m = DiscreteModel::from_rows(7, 2, y.clone()).unwrap();
        let w = make_weights(&WeightScheme::Opt, 20, 7).unwrap();
        let mut brute = 0.0;
        for j in 0..20 {
            let mut norm2 = 0.0;
            for a in 0..2 {
                norm2 += y[2 * j + a] * y[2 * j + a];
            }
            brute += 7.0 * w[j] * norm2;
        }
        assert!((quadratic_stat(&m, &w).unwrap() - brute).abs() < 1e-12);
    }

    #[test]
    fn opt_moving_mass_to_end_decreases() {
        let w = make_weights(&WeightScheme::Opt, 5, 1).unwrap();
        let front = quadratic_stat(&model(1, vec![2.0, 0.0, 0.0, 0.0, 0.0]), &w).unwrap();
        let back = quadratic_stat(&model(1, vec![0.0, 0.0, 0.0, 0.0, 2.0]), &w).unwrap();
        assert!(back < front);
    }

    #[test]
    fn adaptive_neyman_enumeration() {
        let an = adaptive_neyman(&model(1, vec![2.0, 0.0, 0.0])).unwrap();
        // candidates (4-1)/1, (4-2)/sqrt2, (4-3)/sqrt3
        assert!((an.statistic - 3.0).abs() < 1e-15);
        assert_eq!(an.k_hat, 1);
        let zero = adaptive_neyman(&model(5, vec![0.0; 6])).unwrap();
        assert_eq!(zero.statistic, -1.0);
        assert_eq!(zero.k_hat, 1);
        let wide = DiscreteModel::from_rows(1, 2, vec![0.0; 4]).unwrap();
        assert!(matches!(adaptive_neyman(&wide), Err(Error::UnsupportedNu(2))));
    }

    #[test]
    fn adaptive_neyman_ties_to_smallest_k() {
        // k = 1 gives (2 - 1) / 1 and k = 4 gives (6 - 4) / 2: an exact tie
        let an = adaptive_neyman_energies(&[2.0, 0.0, 0.0, 4.0]);
        assert_eq!(an.statistic, 1.0);
        assert_eq!(an.k_hat, 1);
    }

    #[test]
    fn adaptive_neyman_monotone_in_first_mass() {
        let base = gaussian_vector(RandomStream::new(5, 1), 30);
        let a = adaptive_neyman(&model(4, base.clone())).unwrap().statistic;
        let mut bumped = base;
        bumped[0] = bumped[0].signum() * (bumped[0].abs() + 0.7);
        let b = adaptive_neyman(&model(4, bumped)).unwrap().statistic;
        assert!(b >= a);
    }

    #[test]
    fn wavelet_indexing() {
        assert_eq!(wavelet_index(0, 1).unwrap(), 1);
        assert_eq!(wavelet_index(1, 1).unwrap(), 2);
        assert_eq!(wavelet_index(1, 2).unwrap(), 3);
        assert!(matches!(wavelet_index(2, 5), Err(Error::InvalidPosition { k: 2, l: 5 })));
        assert!(matches!(wavelet_index(2, 0), Err(Error::InvalidPosition { .. })));
        let mut next = 1;
        for k in 0..=10u32 {
            for l in 1..=(1usize << k) {
                let j = wavelet_index(k, l).unwrap();
                // recurrences: j(k, l+1) = j(k, l) + 1 and contiguous levels
                assert_eq!(j, next);
                next += 1;
                if k < 10 {
                    assert_eq!(wavelet_index(k + 1, l).unwrap(), j + (1 << k));
                }
                assert_eq!(level_of(j).unwrap(), (k, l));
            }
        }
    }

    #[test]
    fn mu_ht_values() {
        assert!((mu_ht(0.0) - 1.0).abs() < 1e-15);
        assert!((mu_ht(1.0) - 0.801_26).abs() < 1e-5);
        assert!(mu_ht(8.0) < 1e-12);
        let mut prev = 1.0 + 1e-15;
        for i in 0..60 {
            let v = mu_ht(i as f64 * 0.1);
            assert!(v < prev && v > 0.0);
            prev = v;
        }
    }

    #[test]
    fn ceil_exceed_is_strict() {
        assert_eq!(ceil_exceed(3.0), 4);
        assert_eq!(ceil_exceed(2.1), 3);
        assert_eq!(ceil_exceed(-0.5), 0);
    }

    #[test]
    fn ht_params_at_n64() {
        let p = HtParams::new(64, 1.0).unwrap();
        assert_eq!(p.k_star, 6);
        assert_eq!(p.required_p(), 127);
        // 6 / 2.5 = 2.4
        assert_eq!(p.k_dstar, 3);
        assert_eq!(p.thresholds.len(), 3);
        assert!((p.thresholds[0] - (9.0 * std::f64::consts::LN_2).sqrt()).abs() < 1e-15);
        assert_eq!(HtParams::new(64, 0.75).unwrap().k_dstar, 4);
    }

    #[test]
    fn ht_zero_data_gives_centering_only() {
        let params = HtParams::new(64, 1.0).unwrap();
        let v = ht_stat(&model(64, vec![0.0; 127]), &params).unwrap();
        let mut expected = -(1.0 + 2.0 + 4.0 + 8.0);
        for (k, mu) in (4..=6).zip(&params.centering) {
            expected -= (1u32 << k) as f64 * mu;
        }
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn ht_without_threshold_block_is_centered_uwq() {
        let mut params = HtParams::new(64, 1.0).unwrap();
        params.k_dstar = params.k_star;
        params.thresholds.clear();
        params.centering.clear();
        let z = gaussian_vector(RandomStream::new(8, 2), 127);
        let direct: f64 = z.iter().map(|v| v * v - 1.0).sum();
        assert!((ht_stat_z(&z, &params) - direct).abs() < 1e-10);
    }

    #[test]
    fn ht_indicator_one_matches_full_sum() {
        // forcing every indicator to 1 (threshold 0) and the centering to 1
        // reproduces sum (z^2 - 1) over all dyadic indices
        let mut params = HtParams::new(64, 0.8).unwrap();
        for (xi, mu) in params.thresholds.iter_mut().zip(params.centering.iter_mut()) {
            *xi = -1.0;
            *mu = 1.0;
        }
        for seed in 0..10 {
            let z = gaussian_vector(RandomStream::new(seed, 9), 127);
            let direct: f64 = z.iter().map(|v| v * v - 1.0).sum();
            assert!((ht_stat_z(&z, &params) - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn ht_requirements() {
        let params = HtParams::new(64, 1.0).unwrap();
        assert!(matches!(
            ht_stat(&model(64, vec![0.0; 100]), &params),
            Err(Error::InsufficientP { needed: 127, found: 100 })
        ));
        let wide = DiscreteModel::from_rows(64, 2, vec![0.0; 254]).unwrap();
        assert!(matches!(ht_stat(&wide, &params), Err(Error::UnsupportedNu(2))));
    }

    #[test]
    fn one_sided_flag_ignores_negative_values() {
        let params = HtParams::new(64, 1.0).unwrap().with_one_sided(true);
        let mut z = vec![0.0; 127];
        z[100] = -10.0;
        let two = HtParams::new(64, 1.0).unwrap();
        assert!(ht_stat_z(&z, &two) > ht_stat_z(&z, &params));
    }

    #[test]
    fn ht_configs_spiked_and_smooth_ranges() {
        let spiked = ht_configs(64, 0.5008, 1.1667).unwrap();
        let levels: Vec<u32> = spiked.iter().map(|c| c.k_dstar).collect();
        assert_eq!(levels, vec![3, 4]);
        let smooth = ht_configs(64, 0.5017, 2.4680).unwrap();
        let levels: Vec<u32> = smooth.iter().map(|c| c.k_dstar).collect();
        assert_eq!(levels, vec![2, 3, 4]);
        let single = ht_configs(64, 1.0, 1.0005).unwrap();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn ht_bar_degenerate_and_scaling() {
        let z = gaussian_vector(RandomStream::new(12, 0), 127);
        let m = model(64, z.iter().map(|v| v / 8.0).collect());
        let single = ht_configs(64, 1.0, 1.0005).unwrap();
        let mut cut = BTreeMap::new();
        cut.insert(single[0].k_dstar, 12.5);
        let v = ht_bar(&m, &single, &cut).unwrap();
        assert!((v - ht_stat(&m, &single[0]).unwrap() / 12.5).abs() < 1e-12);

        let configs = ht_configs(64, 0.5017, 2.468).unwrap();
        let equal: BTreeMap<u32, f64> = configs.iter().map(|c| (c.k_dstar, 4.0)).collect();
        let max_ht = configs.iter().map(|c| ht_stat(&m, c).unwrap()).fold(f64::NEG_INFINITY, f64::max);
        assert!((ht_bar(&m, &configs, &equal).unwrap() - max_ht / 4.0).abs() < 1e-12);

        let missing: BTreeMap<u32, f64> = BTreeMap::new();
        assert!(matches!(ht_bar(&m, &configs, &missing), Err(Error::MissingCutoff(2))));
    }
}
