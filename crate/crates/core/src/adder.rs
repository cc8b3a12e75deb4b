//! Closed-form and asymptotic-series statistics for the adder-erasure RAC.
//!
//! With equiprobable binary inputs the `k`-user sum-rate capacity and
//! dispersion reduce to the entropy and varentropy of `Binom(k, 1/2)`:
//! `I_k = (1-δ) H(Z)` and `V_k = (1-δ)[V(Z) + δ H(Z)²]`. The exact path
//! sums the binomial law in log domain; the series path evaluates the
//! Stirling-expansion approximations, which are tight already for small k.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const PI: f64 = std::f64::consts::PI;
const E: f64 = std::f64::consts::E;

/// Entropy and varentropy of `Binom(n, 1/2)`, in nats and nats².
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BinomialStats {
    pub n: u64,
    pub entropy: f64,
    pub varentropy: f64,
}

/// `ln C(n, k)` computed exactly for small `n` and via log-gamma above.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    if n <= 50 {
        let mut c: u128 = 1;
        let k = k.min(n - k);
        for i in 0..k {
            c = c * (n - i) as u128 / (i + 1) as u128;
        }
        (c as f64).ln()
    } else {
        ln_gamma((n + 1) as f64) - ln_gamma((k + 1) as f64) - ln_gamma((n - k + 1) as f64)
    }
}

/// Exact entropy/varentropy of `Binom(n, 1/2)` by log-domain summation.
pub fn binom_stats_exact(n: u64) -> Result<BinomialStats> {
    if n < 1 || n > 100_000 {
        return Err(Error::InvalidParameter(format!("n = {n} outside [1, 1e5]")));
    }
    let ln2 = std::f64::consts::LN_2;
    let mut h = 0.0;
    let mut m2 = 0.0;
    for k in 0..=n {
        let ln_p = ln_binomial(n, k) - n as f64 * ln2;
        let p = ln_p.exp();
        h += p * (-ln_p);
        m2 += p * ln_p * ln_p;
    }
    Ok(BinomialStats {
        n,
        entropy: h,
        varentropy: m2 - h * h,
    })
}

/// Leading terms of the entropy expansion `½ ln(πen/2) - 1/(12n²)`.
pub fn entropy_series(n: f64) -> f64 {
    0.5 * (PI * E * n / 2.0).ln() - 1.0 / (12.0 * n * n)
}

/// Leading terms of the varentropy expansion `½ - 1/(2n) - 1/(2n²)`.
pub fn varentropy_series(n: f64) -> f64 {
    0.5 - 1.0 / (2.0 * n) - 1.0 / (2.0 * n * n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatsMode {
    Exact,
    Approx,
}

/// `(I_k, V_k)` in nats/nats² for the adder-erasure RAC with equiprobable
/// inputs. Exact mode sums the binomial law; approx mode evaluates the
/// series with the remainder terms dropped.
pub fn adder_stats(k: u64, delta: f64, mode: StatsMode) -> Result<(f64, f64)> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!("delta = {delta} outside [0, 1]")));
    }
    match mode {
        StatsMode::Exact => {
            let b = binom_stats_exact(k)?;
            let i = (1.0 - delta) * b.entropy;
            let v = (1.0 - delta) * (b.varentropy + delta * b.entropy * b.entropy);
            Ok((i, v))
        }
        StatsMode::Approx => {
            let kf = k as f64;
            let l = (PI * E * kf / 2.0).ln();
            let i = (1.0 - delta) * (0.5 * l - 1.0 / (12.0 * kf * kf));
            let v = (1.0 - delta)
                * (delta / 4.0 * l * l + 0.5
                    - 1.0 / (2.0 * kf)
                    - (0.5 + delta * l / 12.0) / (kf * kf));
            Ok((i, v))
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FigureRow {
    pub k: u64,
    pub i_exact: f64,
    pub i_approx: f64,
    pub v_exact: f64,
    pub v_approx: f64,
}

/// Per-k exact and approximate `(I_k, V_k)` table, in nats.
pub fn emit_figure_data(delta: f64, k_max: u64) -> Result<Vec<FigureRow>> {
    if k_max > 10_000 {
        return Err(Error::InvalidParameter("k_max above 1e4".into()));
    }
    (1..=k_max)
        .map(|k| {
            let (i_exact, v_exact) = adder_stats(k, delta, StatsMode::Exact)?;
            let (i_approx, v_approx) = adder_stats(k, delta, StatsMode::Approx)?;
            Ok(FigureRow {
                k,
                i_exact,
                i_approx,
                v_exact,
                v_approx,
            })
        })
        .collect()
}

/// Higher-order Stirling approximation of the `Binom(n, 1/2)` pmf,
/// used only to exercise the series against the exact coefficients.
pub fn binomial_pmf_series(n: u64, k: u64) -> f64 {
    let nf = n as f64;
    let d = 2.0 * k as f64 - nf; // 2x - n
    let f = -d.powi(4) / (12.0 * nf * nf) + d.powi(2) / (2.0 * nf) - 0.25;
    let g = d.powi(8) / (288.0 * nf.powi(4)) - 3.0 * d.powi(6) / (40.0 * nf.powi(3))
        + 19.0 * d.powi(4) / (48.0 * nf * nf)
        - 11.0 * d.powi(2) / (24.0 * nf)
        + 1.0 / 32.0;
    let gauss = (-(k as f64 - nf / 2.0).powi(2) / (nf / 2.0)).exp() / (PI * nf / 2.0).sqrt();
    gauss * (1.0 + f / nf + g / (nf * nf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const LN_2: f64 = std::f64::consts::LN_2;

    #[test]
    fn two_point_law_entropy() {
        let b = binom_stats_exact(1).unwrap();
        assert_abs_diff_eq!(b.entropy, LN_2, epsilon = 1e-14);
        assert_abs_diff_eq!(b.varentropy, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn three_point_law_matches_hand_sum() {
        // pmf {1/4, 1/2, 1/4}
        let b = binom_stats_exact(2).unwrap();
        assert_abs_diff_eq!(b.entropy, 1.5 * LN_2, epsilon = 1e-14);
        let m2 = 0.5 * (4.0f64.ln()).powi(2) + 0.5 * LN_2 * LN_2;
        assert_abs_diff_eq!(b.varentropy, m2 - (1.5 * LN_2).powi(2), epsilon = 1e-14);
    }

    #[test]
    fn entropy_series_close_at_large_n() {
        let b = binom_stats_exact(1000).unwrap();
        assert!((b.entropy - entropy_series(1000.0)).abs() < 1e-6);
        assert!((b.varentropy - varentropy_series(1000.0)).abs() < 1e-6);
    }

    #[test]
    fn entropy_monotone_and_varentropy_nonnegative() {
        let mut prev = 0.0;
        for n in 1..=60 {
            let b = binom_stats_exact(n).unwrap();
            assert!(b.entropy > prev);
            assert!(b.varentropy >= -1e-13);
            assert!(b.entropy <= ((n + 1) as f64).ln() + 1e-12);
            prev = b.entropy;
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(binom_stats_exact(0).is_err());
        assert!(binom_stats_exact(100_001).is_err());
        assert!(adder_stats(0, 0.2, StatsMode::Exact).is_err());
        assert!(adder_stats(3, 1.2, StatsMode::Exact).is_err());
    }

    #[test]
    fn single_user_exact_values() {
        let (i, v) = adder_stats(1, 0.0, StatsMode::Exact).unwrap();
        assert_abs_diff_eq!(i, LN_2, epsilon = 1e-14);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-14);
        let (_, v) = adder_stats(1, 0.2, StatsMode::Exact).unwrap();
        assert_abs_diff_eq!(v, 0.8 * 0.2 * LN_2 * LN_2, epsilon = 1e-12);
    }

    #[test]
    fn exact_matches_enumeration_for_small_k() {
        use crate::channel::{make_adder_erasure, InputDistribution};
        use crate::infodensity::ChannelStatistics;
        let ch = make_adder_erasure(4, 0.2).unwrap();
        let px = InputDistribution::bernoulli(0.5).unwrap();
        let stats = ChannelStatistics::compute(&ch, &px).unwrap();
        for k in 1..=4u64 {
            let (i, v) = adder_stats(k, 0.2, StatsMode::Exact).unwrap();
            assert_abs_diff_eq!(i, stats.mutual_information(k as usize), epsilon = 1e-9);
            assert_abs_diff_eq!(v, stats.dispersion(k as usize), epsilon = 1e-9);
        }
    }

    #[test]
    fn approx_within_half_percent_at_k_30() {
        let (ie, ve) = adder_stats(30, 0.2, StatsMode::Exact).unwrap();
        let (ia, va) = adder_stats(30, 0.2, StatsMode::Approx).unwrap();
        assert!((ie - ia).abs() / ie < 0.005);
        assert!((ve - va).abs() / ve < 0.005);
    }

    #[test]
    fn approximation_error_decays() {
        let gap = |k: u64| {
            let (ie, _) = adder_stats(k, 0.2, StatsMode::Exact).unwrap();
            let (ia, _) = adder_stats(k, 0.2, StatsMode::Approx).unwrap();
            (ie - ia).abs()
        };
        assert!(gap(100) < gap(10));
    }

    #[test]
    fn figure_data_shapes() {
        let rows = emit_figure_data(0.2, 50).unwrap();
        assert_eq!(rows.len(), 50);
        for w in rows.windows(2) {
            assert!(w[1].i_exact > w[0].i_exact);
        }
        // pure adder: dispersion nearly constant at 1/2
        for row in emit_figure_data(0.0, 50).unwrap().iter().skip(9) {
            assert!((row.v_exact - 0.5).abs() < 0.06);
        }
        // fully erased: everything zero
        for row in emit_figure_data(1.0, 10).unwrap() {
            assert_abs_diff_eq!(row.i_exact, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(row.v_exact, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn stirling_series_matches_exact_pmf_in_core_window() {
        // relative error <= 10 ln^6 n / n^3 inside the central window
        // |k - n/2| <= sqrt(n ln n); the asymptotic remainder constant
        // is not small enough to widen the window further at these n
        for &n in &[100u64, 400u64] {
            let nf = n as f64;
            let half_width = (nf * nf.ln()).sqrt();
            let lo = (nf / 2.0 - half_width).floor().max(0.0) as u64;
            let hi = (nf / 2.0 + half_width).ceil().min(nf) as u64;
            let tol = 10.0 * nf.ln().powi(6) / nf.powi(3);
            for k in lo..=hi {
                let exact = (ln_binomial(n, k) - nf * std::f64::consts::LN_2).exp();
                let approx = binomial_pmf_series(n, k);
                let rel = (exact - approx).abs() / exact;
                assert!(
                    rel <= tol,
                    "n={n} k={k}: rel err {rel:.3e} > tol {tol:.3e}"
                );
            }
        }
    }
}
