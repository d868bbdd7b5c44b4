//! Finite-`n` diagnostics for rates of testing of tapered quadratic forms.
//!
//! For weights `w_{n,j}` define `S_n(p) = sum_{j<=p} w_j^2`,
//! `W_n(q) = min_{j<=q} w_j^2` and `U_n(p, q) = q W_n(q) / S_n(p)`. The
//! boundedness conditions on `n^2 U_n(p_n) p_n^{-s~}` and
//! `n^2 U_n(p_n, q_n) q_n^{-s~}` (with `s~ = 4s + 1`) are evaluated on a grid
//! of sample sizes. Limits are never asserted; the sequences, their spread
//! and their log-log slopes are reported.
//!
//! `q` is real. `W_n(q)` linearly interpolates `w^2` between neighbouring
//! integer indices, which equals the minimum for nonincreasing weights.

use crate::error::{Error, Result};
use crate::numerics::bisect;
use crate::teststats::{make_weights, WeightScheme};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaperSummaries {
    /// `S_n(p)`.
    pub s: f64,
    /// `W_n(p)`.
    pub w: f64,
    /// `U_n(p, q)`.
    pub u: f64,
}

/// `S_n(p)`, `W_n(p)` and `U_n(p, q)` for integer `1 <= q <= p`.
pub fn taper_summaries(weights: &[f64], p: usize, q: usize) -> Result<TaperSummaries> {
    if p == 0 || p > weights.len() {
        return Err(Error::IndexOutOfRange { index: p, max: weights.len() });
    }
    if q == 0 || q > p {
        return Err(Error::IndexOutOfRange { index: q, max: p });
    }
    let sq: Vec<f64> = weights[..p].iter().map(|w| w * w).collect();
    let s: f64 = sq.iter().sum();
    let w = sq.iter().copied().fold(f64::INFINITY, f64::min);
    let w_q = sq[..q].iter().copied().fold(f64::INFINITY, f64::min);
    Ok(TaperSummaries { s, w, u: q as f64 * w_q / s })
}

/// How the number of frequencies grows with `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PRule {
    Fixed(usize),
    /// `ceil(n^{2/s~})`.
    Minimax,
    /// `ceil({n^2 / log n}^{1/3})`.
    AdaptiveTaper,
    /// `ceil(n^exponent)`.
    Power(f64),
}

impl PRule {
    pub fn p_for(self, n: usize, s: f64) -> Result<usize> {
        let nf = n as f64;
        let p = match self {
            PRule::Fixed(p) => p as f64,
            PRule::Minimax => ceil_rel(nf.powf(2.0 / s_tilde(s))),
            PRule::AdaptiveTaper => ceil_rel((nf * nf / nf.ln()).powf(1.0 / 3.0)),
            PRule::Power(e) => {
                if !(e > 0.0) {
                    return Err(Error::InvalidRule(format!("p exponent must be positive, got {e}")));
                }
                ceil_rel(nf.powf(e))
            }
        };
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidRule(format!("p rule gives p = {p} at n = {n}")));
        }
        Ok(p as usize)
    }
}

/// Sequence of signal sizes `delta_n` at which the second condition is probed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaRule {
    /// `{n^2 / log n}^{-s/s~}`.
    AdaptiveTaper,
    /// `n^{-2s/s~}`.
    Minimax,
    /// `n^{-exponent}`.
    Power(f64),
}

impl DeltaRule {
    pub fn delta_for(self, n: usize, s: f64) -> f64 {
        let nf = n as f64;
        match self {
            DeltaRule::AdaptiveTaper => (nf * nf / nf.ln()).powf(-s / s_tilde(s)),
            DeltaRule::Minimax => nf.powf(-2.0 * s / s_tilde(s)),
            DeltaRule::Power(e) => nf.powf(-e),
        }
    }
}

/// Ceiling that ignores rounding noise, so `1024^{0.4}` counts as 16.
fn ceil_rel(x: f64) -> f64 {
    (x * (1.0 - 1e-12)).ceil()
}

/// `s~ = 4s + 1`.
pub fn s_tilde(s: f64) -> f64 {
    4.0 * s + 1.0
}

/// `W_n(q)` for real `q` in `[1, p]` from squared nonincreasing weights.
fn interpolated_w2(sq: &[f64], q: f64) -> f64 {
    let lo = q.floor() as usize;
    if lo >= sq.len() {
        return sq[sq.len() - 1];
    }
    let frac = q - lo as f64;
    let a = sq[lo - 1];
    if frac == 0.0 {
        return a;
    }
    a + frac * (sq[lo] - a)
}

/// Squared weights for sample size `n`, checked to be nonincreasing.
fn squared_weights(scheme: &WeightScheme, p: usize, n: usize) -> Result<Vec<f64>> {
    let w = make_weights(scheme, p, n)?;
    if let Some(pos) = w.windows(2).position(|v| v[1] > v[0]) {
        return Err(Error::NotMonotone { index: pos + 2 });
    }
    Ok(w.iter().map(|v| v * v).collect())
}

fn check_smoothness(s: f64, m: f64) -> Result<()> {
    if !(s > 0.5) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("smoothness must exceed 1/2, got {s}")));
    }
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {m}")));
    }
    Ok(())
}

/// Both boundedness sequences over `n_grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateProbe {
    pub n_grid: Vec<usize>,
    pub p: Vec<usize>,
    /// `q_n = (delta_n / M)^{-1/s}`.
    pub q: Vec<f64>,
    pub delta: Vec<f64>,
    /// `n^2 U_n(p_n) p_n^{-s~}`.
    pub seq_i: Vec<f64>,
    /// `n^2 U_n(p_n, q_n) q_n^{-s~}`.
    pub seq_ii: Vec<f64>,
}

impl RateProbe {
    /// `max / min` of the first sequence.
    pub fn band_ratio_i(&self) -> f64 {
        band_ratio(&self.seq_i)
    }

    pub fn band_ratio_ii(&self) -> f64 {
        band_ratio(&self.seq_ii)
    }

    /// Least-squares slope of `log seq_i` against `log n`.
    pub fn slope_i(&self) -> f64 {
        log_log_slope(&self.n_grid, &self.seq_i)
    }

    pub fn slope_ii(&self) -> f64 {
        log_log_slope(&self.n_grid, &self.seq_ii)
    }
}

fn band_ratio(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

/// Least-squares slope of `log y` on `log n`.
pub fn log_log_slope(n: &[usize], y: &[f64]) -> f64 {
    let xs: Vec<f64> = n.iter().map(|&v| (v as f64).ln()).collect();
    let ys: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Powers of two `2^lo ..= 2^hi`.
pub fn dyadic_grid(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}

/// Evaluates both boundedness sequences on `n_grid`.
pub fn rate_probe(
    weights: &WeightScheme,
    p_rule: PRule,
    s: f64,
    m: f64,
    delta_rule: DeltaRule,
    n_grid: &[usize],
) -> Result<RateProbe> {
    check_smoothness(s, m)?;
    if n_grid.is_empty() {
        return Err(Error::InvalidRule("empty n grid".into()));
    }
    let st = s_tilde(s);
    let mut probe = RateProbe {
        n_grid: n_grid.to_vec(),
        p: Vec::new(),
        q: Vec::new(),
        delta: Vec::new(),
        seq_i: Vec::new(),
        seq_ii: Vec::new(),
    };
    for &n in n_grid {
        if n < 2 {
            return Err(Error::InvalidRule(format!("sample sizes must be at least 2, got {n}")));
        }
        let p = p_rule.p_for(n, s)?;
        let sq = squared_weights(weights, p, n)?;
        let s_p: f64 = sq.iter().sum();
        let delta = delta_rule.delta_for(n, s);
        let q = (delta / m).powf(-1.0 / s);
        if !(q >= 1.0 && q <= p as f64) {
            return Err(Error::InvalidRule(format!(
                "q_n = {q} lies outside [1, p_n = {p}] at n = {n}"
            )));
        }
        let n2 = (n as f64).powi(2);
        let u_p = p as f64 * sq[p - 1] / s_p;
        let u_pq = q * interpolated_w2(&sq, q) / s_p;
        probe.p.push(p);
        probe.q.push(q);
        probe.delta.push(delta);
        probe.seq_i.push(n2 * u_p * (p as f64).powf(-st));
        probe.seq_ii.push(n2 * u_pq * q.powf(-st));
    }
    Ok(probe)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEstimate {
    pub n: usize,
    pub p: usize,
    /// Root `q` of `n^2 U_n(p, q) q^{-s~} = 1`, or `p` when saturated.
    pub q: f64,
    /// `M q^{-s}`.
    pub delta_hat: f64,
    /// The root lies beyond `p`, so `q` was clamped to `p`.
    pub saturated: bool,
}

/// Boundary rate `delta_hat_n = M q_n^{-s}` where `q_n` solves
/// `n^2 U_n(p_n, q) q^{-s~} = 1`.
pub fn boundary_rate_scan(
    weights: &WeightScheme,
    p_rule: PRule,
    s: f64,
    m: f64,
    n_grid: &[usize],
) -> Result<Vec<BoundaryEstimate>> {
    check_smoothness(s, m)?;
    let st = s_tilde(s);
    n_grid
        .iter()
        .map(|&n| {
            if n < 2 {
                return Err(Error::InvalidRule(format!("sample sizes must be at least 2, got {n}")));
            }
            let p = p_rule.p_for(n, s)?;
            let sq = squared_weights(weights, p, n)?;
            let s_p: f64 = sq.iter().sum();
            let n2 = (n as f64).powi(2);
            // log of the defining equation, decreasing in q for nonincreasing weights
            let g = |q: f64| (n2 * q * interpolated_w2(&sq, q) / s_p).ln() - st * q.ln();
            let pf = p as f64;
            let g_lo = g(1.0);
            let g_hi = g(pf);
            let (q, saturated) = if g_hi >= 0.0 {
                (pf, true)
            } else if g_lo < 0.0 {
                return Err(Error::NoBracket {
                    lo: 1.0,
                    hi: pf,
                    f_lo: g_lo,
                    f_hi: g_hi,
                });
            } else {
                (bisect(g, 1.0, pf, 1e-12 * pf)?, false)
            };
            Ok(BoundaryEstimate {
                n,
                p,
                q,
                delta_hat: m * q.powf(-s),
                saturated,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(p: usize) -> f64 {
        (1..=p).rev().map(|j| 1.0 / j as f64).sum()
    }

    #[test]
    fn unit_weights() {
        let t = taper_summaries(&[1.0; 10], 10, 10).unwrap();
        assert_eq!(t, TaperSummaries { s: 10.0, w: 1.0, u: 1.0 });
    }

    #[test]
    fn opt_weights_harmonic() {
        let w = make_weights(&WeightScheme::Opt, 100, 1).unwrap();
        let t = taper_summaries(&w, 100, 10).unwrap();
        assert!((t.s - harmonic(100)).abs() < 1e-12);
        assert!((t.s - 5.18738).abs() < 1e-5);
        assert!((t.u - 1.0 / harmonic(100)).abs() < 1e-12);
        assert!((t.w - 0.01).abs() < 1e-15);
    }

    #[test]
    fn summaries_reject_bad_indices() {
        assert!(matches!(taper_summaries(&[1.0; 3], 4, 1), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(taper_summaries(&[1.0; 3], 3, 0), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(taper_summaries(&[1.0; 3], 2, 3), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn monotone_identity_against_minimum() {
        for scheme in [WeightScheme::Opt, WeightScheme::Cvm, WeightScheme::Fzz { s: 1.3 }] {
            let w = make_weights(&scheme, 60, 256).unwrap();
            let sq: Vec<f64> = w.iter().map(|v| v * v).collect();
            for q in [1usize, 7, 33, 60] {
                let t = taper_summaries(&w, 60, q).unwrap();
                let direct = q as f64 * sq[q - 1] / sq.iter().sum::<f64>();
                assert!((t.u - direct).abs() < 1e-15);
                assert_eq!(interpolated_w2(&sq, q as f64), sq[q - 1]);
            }
        }
    }

    #[test]
    fn interpolation_between_indices() {
        let sq = [1.0, 0.5, 0.25];
        assert!((interpolated_w2(&sq, 1.5) - 0.75).abs() < 1e-15);
        assert!((interpolated_w2(&sq, 3.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn p_rules() {
        assert_eq!(PRule::Fixed(9).p_for(100, 1.0).unwrap(), 9);
        assert_eq!(PRule::Minimax.p_for(1 << 10, 1.0).unwrap(), 16);
        let n = 64f64;
        assert_eq!(PRule::AdaptiveTaper.p_for(64, 1.0).unwrap(), (n * n / n.ln()).cbrt().ceil() as usize);
        assert_eq!(PRule::Power(0.5).p_for(100, 1.0).unwrap(), 10);
        assert!(PRule::Power(-1.0).p_for(10, 1.0).is_err());
    }

    #[test]
    fn opt_probe_closed_forms() {
        // q_n = M^{1/s} {n^2/log n}^{1/s~} and the OPT identities give
        // seq_i = n^2 p^{-s~} / H_p and seq_ii = n^2 q^{-s~} q w^2(q) / H_p.
        let (s, m) = (1.0, 1.0);
        let grid = dyadic_grid(6, 20);
        let probe = rate_probe(&WeightScheme::Opt, PRule::AdaptiveTaper, s, m, DeltaRule::AdaptiveTaper, &grid).unwrap();
        for (i, &n) in grid.iter().enumerate() {
            let nf = n as f64;
            let p = probe.p[i];
            let hp = harmonic(p);
            let oracle_i = nf * nf * (p as f64).powf(-5.0) / hp;
            assert!((probe.seq_i[i] / oracle_i - 1.0).abs() < 1e-12);
            let q = (nf * nf / nf.ln()).powf(0.2);
            assert!((probe.q[i] / q - 1.0).abs() < 1e-12);
        }
        assert!(probe.slope_i() < 0.0);
    }

    #[test]
    fn cvm_probe_slope_negative() {
        let grid = dyadic_grid(6, 20);
        let probe = rate_probe(&WeightScheme::Cvm, PRule::AdaptiveTaper, 1.0, 1.0, DeltaRule::AdaptiveTaper, &grid).unwrap();
        assert!(probe.slope_i() < 0.0);
        assert!(probe.seq_i.iter().chain(&probe.seq_ii).all(|v| *v > 0.0));
    }

    #[test]
    fn probe_rejects_q_beyond_p() {
        let err = rate_probe(&WeightScheme::Opt, PRule::Fixed(2), 1.0, 1.0, DeltaRule::AdaptiveTaper, &[1 << 12]);
        assert!(matches!(err, Err(Error::InvalidRule(_))));
    }

    #[test]
    fn uwq_minimax_boundary_rate() {
        let grid = dyadic_grid(6, 20);
        let est = boundary_rate_scan(&WeightScheme::Uwq, PRule::Minimax, 1.0, 1.0, &grid).unwrap();
        let ratios: Vec<f64> = est.iter().map(|e| e.delta_hat / (e.n as f64).powf(-0.4)).collect();
        assert!(band_ratio(&ratios) < 1.5, "{ratios:?}");
        assert!(est.windows(2).all(|w| w[1].delta_hat < w[0].delta_hat));
        for e in &est {
            // U(p, q) q^{-s~} n^2 = 1 at the root
            let lhs = (e.n as f64).powi(2) * e.q / e.p as f64 * e.q.powf(-5.0);
            assert!(e.saturated || (lhs - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn opt_adaptive_boundary_rate() {
        let grid = dyadic_grid(6, 20);
        let est = boundary_rate_scan(&WeightScheme::Opt, PRule::AdaptiveTaper, 1.0, 1.0, &grid).unwrap();
        let ratios: Vec<f64> = est
            .iter()
            .map(|e| {
                let n = e.n as f64;
                e.delta_hat / (n * n / n.ln()).powf(-0.2)
            })
            .collect();
        assert!(est.windows(2).all(|w| w[1].delta_hat < w[0].delta_hat));
        // the ratio drifts only through log n / log p
        assert!(band_ratio(&ratios) < 1.5, "{ratios:?}");
    }

    #[test]
    fn saturation_is_flagged() {
        let est = boundary_rate_scan(&WeightScheme::Uwq, PRule::Fixed(3), 1.0, 1.0, &[1 << 16]).unwrap();
        assert!(est[0].saturated);
        assert_eq!(est[0].q, 3.0);
    }
}
