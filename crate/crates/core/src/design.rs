//! Achievability solvers: blocklengths, message sizes, decoding
//! thresholds, slacks, rate regions, and per-user rate curves.
//!
//! User-facing message sizes, blocklengths, and rates are in bits
//! (base-2 logs); decoding thresholds and slacks are in nats to match
//! the density computations. The second-order rule solved throughout is
//!
//! `k log2 M <= n I_k - sqrt(n V_k) Q^{-1}(eps_k) - (1/2) log2 n`
//!
//! with the O(1) remainder dropped.

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::channel::{check_assumptions, ChannelFamily, InputDistribution};
use crate::error::{Error, Result};
use crate::infodensity::{ChannelStatistics, LN_2};

/// Gaussian complementary cdf `Q(x)`.
pub fn gaussian_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Inverse of the Gaussian complementary cdf: `Q(q_inv(eps)) = eps`
/// to absolute accuracy 1e-12 or better.
pub fn q_inv(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside (0, 1)")));
    }
    let mut lo = -40.0f64;
    let mut hi = 40.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gaussian_tail(mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    // Newton polish: Q'(x) = -phi(x)
    for _ in 0..4 {
        let f = gaussian_tail(x) - eps;
        let phi = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if phi > 0.0 {
            x += f / phi;
        }
    }
    Ok(x)
}

fn rhs_bits(n: f64, i_bits: f64, v_bits2: f64, qi: f64) -> f64 {
    n * i_bits - (n * v_bits2).sqrt() * qi - 0.5 * n.log2()
}

/// Smallest integer blocklength `n` such that `k log2 M` fits under the
/// second-order expansion for a `k`-user channel with the given
/// single-letter mutual information and dispersion (bits and bits²).
pub fn solve_blocklength(
    i_bits: f64,
    v_bits2: f64,
    k: usize,
    log_m_bits: f64,
    eps: f64,
) -> Result<u64> {
    if i_bits <= 0.0 {
        return Err(Error::Infeasible(format!("mutual information {i_bits} <= 0 bits")));
    }
    if v_bits2 < 0.0 || log_m_bits <= 0.0 || k == 0 {
        return Err(Error::InvalidParameter(
            "need V >= 0, log M > 0, k >= 1".into(),
        ));
    }
    let qi = q_inv(eps)?;
    let target = k as f64 * log_m_bits;
    let ok = |n: u64| rhs_bits(n as f64, i_bits, v_bits2, qi) >= target;
    if ok(1) {
        return Ok(1);
    }
    let mut hi = 2u64;
    while !ok(hi) {
        hi = hi.checked_mul(2).ok_or_else(|| {
            Error::Infeasible("blocklength search exceeded u64 range".into())
        })?;
    }
    let mut lo = hi / 2; // fails
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Largest message size (in bits) achievable at blocklength `n1` for a
/// single user: `log2 M = n1 I_1 - sqrt(n1 V_1) Q^{-1}(eps) - (1/2) log2 n1`.
pub fn solve_message_size(i_bits: f64, v_bits2: f64, n1: u64, eps: f64) -> Result<f64> {
    if n1 < 2 {
        return Err(Error::InvalidParameter("n1 must be >= 2".into()));
    }
    let qi = q_inv(eps)?;
    let log_m = rhs_bits(n1 as f64, i_bits, v_bits2, qi);
    if log_m <= 0.0 {
        return Err(Error::Infeasible(format!(
            "no positive message size at n1 = {n1} (got {log_m} bits)"
        )));
    }
    Ok(log_m)
}

/// Message count, kept in log2 form so astronomically large codebooks
/// stay representable; the exact count is retained when it fits.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MessageCount {
    pub log2: f64,
    pub exact: Option<u64>,
}

impl MessageCount {
    pub fn from_count(m: u64) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidParameter("message count must be >= 1".into()));
        }
        Ok(Self {
            log2: (m as f64).log2(),
            exact: Some(m),
        })
    }

    pub fn from_log2(log2: f64) -> Result<Self> {
        if !(log2 > 0.0) {
            return Err(Error::InvalidParameter("log2 M must be positive".into()));
        }
        let exact = if log2 <= 53.0 {
            let m = log2.exp2();
            if (m - m.round()).abs() < 1e-9 {
                Some(m.round() as u64)
            } else {
                None
            }
        } else {
            None
        };
        Ok(Self { log2, exact })
    }

    /// Natural log of `M`.
    pub fn ln(&self) -> f64 {
        self.log2 * LN_2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroTestKind {
    Hoeffding,
    Ks,
}

/// How the per-k quantile argument is formed: from the raw target
/// (normal approximation) or with the Berry-Esseen correction and an
/// extra constant `c_k` per user count.
#[derive(Debug, Clone)]
pub enum ThresholdMode {
    NormalApprox,
    BerryEsseen { c: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TauMode {
    NormalApprox,
    BerryEsseen,
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaSlack {
    pub s: usize,
    pub t: usize,
    pub nats: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroTestSpec {
    pub kind: ZeroTestKind,
    /// Acceptance threshold for the zero-transmitter statistic.
    pub gamma0: f64,
}

/// A complete code parameterization: message size, decode times,
/// per-k thresholds and quantile arguments, pairwise slacks, and the
/// zero-transmitter test.
#[derive(Debug, Clone, Serialize)]
pub struct CodeDesign {
    pub m: MessageCount,
    /// `n_0..n_K` channel uses.
    pub n: Vec<u64>,
    /// Per-k error budgets `eps_0..eps_K`.
    pub epsilon: Vec<f64>,
    /// `log gamma_k` in nats, index `k`; entry 0 unused (NaN).
    pub log_gamma: Vec<f64>,
    /// Quantile arguments `tau_k`, index `k`; entry 0 unused (NaN).
    pub tau: Vec<f64>,
    /// Which quantile mode was actually used per k (entry 0 unused).
    pub tau_mode: Vec<TauMode>,
    /// Slacks for `1 <= s <= t <= K`.
    pub lambda: Vec<LambdaSlack>,
    pub zero_test: ZeroTestSpec,
}

impl CodeDesign {
    pub fn max_users(&self) -> usize {
        self.n.len() - 1
    }

    pub fn lambda(&self, s: usize, t: usize) -> f64 {
        self.lambda
            .iter()
            .find(|l| l.s == s && l.t == t)
            .map(|l| l.nats)
            .unwrap_or(f64::NAN)
    }

    pub fn validate(&self) -> Result<()> {
        let k_max = self.max_users();
        if k_max < 1 {
            return Err(Error::InvalidParameter("design needs K >= 1".into()));
        }
        if self.n[0] > self.n[1] {
            return Err(Error::InvalidParameter(format!(
                "n0 = {} exceeds n1 = {}",
                self.n[0], self.n[1]
            )));
        }
        for k in 2..=k_max {
            if self.n[k] <= self.n[k - 1] {
                return Err(Error::InvalidParameter(format!(
                    "blocklengths must be strictly increasing: n_{} = {} vs n_{} = {}",
                    k - 1,
                    self.n[k - 1],
                    k,
                    self.n[k]
                )));
            }
        }
        if self.epsilon.len() != k_max + 1
            || self.log_gamma.len() != k_max + 1
            || self.tau.len() != k_max + 1
        {
            return Err(Error::InvalidParameter("design vectors disagree on K".into()));
        }
        for l in &self.lambda {
            if l.nats < -1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "negative slack at ({}, {}): {}",
                    l.s, l.t, l.nats
                )));
            }
            if l.s == l.t && l.nats.abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "diagonal slack at ({}, {}) must be zero",
                    l.s, l.t
                )));
            }
        }
        Ok(())
    }
}

/// Fills in thresholds, quantile arguments, slacks, and the
/// zero-transmitter test for given blocklengths `n_1..n_K`.
///
/// `n0` is derived from the first-order type-II exponent of the chosen
/// test: `ceil(ln n1 / (2 C'))` with `C' = min_k D(P_{Y_0} || P_{Y_k})`
/// for Hoeffding and `C' = 2 δ0²` for Kolmogorov-Smirnov.
#[allow(clippy::too_many_arguments)]
pub fn choose_parameters(
    ch: &ChannelFamily,
    px: &InputDistribution,
    stats: &ChannelStatistics,
    m: MessageCount,
    epsilon: &[f64],
    n_data: &[u64],
    zero_test: ZeroTestKind,
    mode: &ThresholdMode,
) -> Result<CodeDesign> {
    let k_max = stats.max_users();
    if epsilon.len() != k_max + 1 {
        return Err(Error::InvalidParameter(format!(
            "need {} error budgets, got {}",
            k_max + 1,
            epsilon.len()
        )));
    }
    if n_data.len() != k_max {
        return Err(Error::InvalidParameter(format!(
            "need {} blocklengths, got {}",
            k_max,
            n_data.len()
        )));
    }
    for k in 1..n_data.len() {
        if n_data[k] <= n_data[k - 1] {
            return Err(Error::InvalidParameter(
                "data blocklengths must be strictly increasing".into(),
            ));
        }
    }

    let n1 = n_data[0] as f64;
    let exponent = match zero_test {
        ZeroTestKind::Hoeffding => (1..=k_max)
            .map(|k| stats.divergence_from_silence(k))
            .fold(f64::INFINITY, f64::min),
        ZeroTestKind::Ks => {
            let d0 = (1..=k_max)
                .map(|k| stats.ks_from_silence(k))
                .fold(f64::INFINITY, f64::min);
            2.0 * d0 * d0
        }
    };
    if !(exponent > 0.0) {
        return Err(Error::Infeasible(
            "zero-test exponent vanishes: output distributions not separated".into(),
        ));
    }
    let n0 = ((n1.ln() / (2.0 * exponent)).ceil() as u64).max(1);
    if n0 > n_data[0] {
        return Err(Error::Infeasible(format!(
            "zero test needs n0 = {n0} samples but n1 = {}",
            n_data[0]
        )));
    }
    let gamma0 = match zero_test {
        ZeroTestKind::Hoeffding => {
            crate::detect::hoeffding_threshold(n0, ch.outputs(k_max).len())
        }
        ZeroTestKind::Ks => crate::detect::ks_threshold(n0, epsilon[0]),
    };

    let mut log_gamma = vec![f64::NAN; k_max + 1];
    let mut tau = vec![f64::NAN; k_max + 1];
    let mut tau_mode = vec![TauMode::NormalApprox; k_max + 1];
    for k in 1..=k_max {
        let n_k = n_data[k - 1] as f64;
        let (t, used) = match mode {
            ThresholdMode::NormalApprox => (q_inv(epsilon[k])?, TauMode::NormalApprox),
            ThresholdMode::BerryEsseen { c } => {
                let c_k = c.get(k).copied().unwrap_or(0.0);
                let slack = epsilon[k] - (stats.berry_esseen(k) + c_k) / n_k.sqrt();
                if slack <= 0.0 {
                    // blocklength too small for the Berry-Esseen slack
                    (q_inv(epsilon[k])?, TauMode::NormalApprox)
                } else {
                    (q_inv(slack)?, TauMode::BerryEsseen)
                }
            }
        };
        tau[k] = t;
        tau_mode[k] = used;
        log_gamma[k] =
            n_k * stats.mutual_information(k) - t * (n_k * stats.dispersion(k)).sqrt();
    }

    let mut lambda = Vec::new();
    for t in 1..=k_max {
        for s in 1..=t {
            let nats = if s == t {
                0.0
            } else {
                let n_t = n_data[t - 1] as f64;
                n_t / 2.0
                    * (stats.conditional_mi(s, t)
                        - s as f64 / t as f64 * stats.mutual_information(t))
            };
            lambda.push(LambdaSlack { s, t, nats });
        }
    }

    let mut n = Vec::with_capacity(k_max + 1);
    n.push(n0);
    n.extend_from_slice(n_data);
    let design = CodeDesign {
        m,
        n,
        epsilon: epsilon.to_vec(),
        log_gamma,
        tau,
        tau_mode,
        lambda,
        zero_test: ZeroTestSpec {
            kind: zero_test,
            gamma0,
        },
    };
    let _ = px;
    design.validate()?;
    Ok(design)
}

/// An achievable per-user rate vector in bits per channel use.
#[derive(Debug, Clone, Serialize)]
pub struct RatePoint {
    /// `R_k = log2 M / n_k` for `k = 1..=K`.
    pub rates_bits: Vec<f64>,
}

impl RatePoint {
    pub fn is_nonincreasing(&self) -> bool {
        self.rates_bits.windows(2).all(|w| w[1] <= w[0] + 1e-12)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateRegionPoint {
    pub p: f64,
    pub feasible: bool,
    pub n: Vec<u64>,
    pub rates: RatePoint,
    pub dominant: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateRegion {
    pub log_m_bits: f64,
    pub points: Vec<RateRegionPoint>,
}

impl RateRegion {
    pub fn dominant_points(&self) -> impl Iterator<Item = &RateRegionPoint> {
        self.points.iter().filter(|p| p.dominant)
    }
}

/// Sweeps Bernoulli(p) inputs over a uniform grid and reports the
/// achievable `(R_1, R_2)` pairs plus the dominant (Pareto-maximal)
/// points. Grid points failing the structural assumptions are flagged
/// and skipped. Ties between identical rate vectors resolve toward the
/// smaller `p`.
pub fn sweep_rate_region(
    ch: &ChannelFamily,
    log_m_bits: f64,
    epsilon: &[f64],
    grid_step: f64,
) -> Result<RateRegion> {
    if ch.max_users() != 2 {
        return Err(Error::InvalidParameter("rate-region sweep requires K = 2".into()));
    }
    if ch.input_size() != 2 {
        return Err(Error::InvalidParameter("rate-region sweep requires binary inputs".into()));
    }
    if !(grid_step > 0.0 && grid_step < 0.5) {
        return Err(Error::InvalidParameter(format!("bad grid step {grid_step}")));
    }
    if epsilon.len() != 3 {
        return Err(Error::InvalidParameter("need error budgets eps_0..eps_2".into()));
    }
    let mut points = Vec::new();
    let steps = (1.0 / grid_step).round() as usize;
    for i in 1..steps {
        let p = i as f64 * grid_step;
        let px = InputDistribution::bernoulli(p)?;
        let assumptions = check_assumptions(ch, &px)?;
        if !assumptions.all_hold() {
            points.push(RateRegionPoint {
                p,
                feasible: false,
                n: Vec::new(),
                rates: RatePoint { rates_bits: Vec::new() },
                dominant: false,
                note: Some("assumption check failed".into()),
            });
            continue;
        }
        let stats = ChannelStatistics::compute(ch, &px)?;
        let mut n = Vec::new();
        let mut rates = Vec::new();
        let mut note = None;
        for k in 1..=2usize {
            let i_bits = stats.mutual_information(k) / LN_2;
            let v_bits2 = stats.dispersion(k) / (LN_2 * LN_2);
            match solve_blocklength(i_bits, v_bits2, k, log_m_bits, epsilon[k]) {
                Ok(nk) => {
                    n.push(nk);
                    rates.push(log_m_bits / nk as f64);
                }
                Err(e) => {
                    note = Some(format!("infeasible at k = {k}: {e}"));
                    break;
                }
            }
        }
        if let Some(note) = note {
            points.push(RateRegionPoint {
                p,
                feasible: false,
                n: Vec::new(),
                rates: RatePoint { rates_bits: Vec::new() },
                dominant: false,
                note: Some(note),
            });
            continue;
        }
        points.push(RateRegionPoint {
            p,
            feasible: true,
            n,
            rates: RatePoint { rates_bits: rates },
            dominant: false,
        note: None,
        });
    }
    mark_dominant(&mut points);
    Ok(RateRegion {
        log_m_bits,
        points,
    })
}

fn mark_dominant(points: &mut [RateRegionPoint]) {
    let feasible: Vec<usize> = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.feasible)
        .map(|(i, _)| i)
        .collect();
    for &i in &feasible {
        let ri = &points[i].rates.rates_bits;
        let mut dominated = false;
        let mut duplicate_of_earlier = false;
        for &j in &feasible {
            if i == j {
                continue;
            }
            let rj = &points[j].rates.rates_bits;
            let ge = rj.iter().zip(ri.iter()).all(|(a, b)| a >= b);
            let gt = rj.iter().zip(ri.iter()).any(|(a, b)| a > b);
            if ge && gt {
                dominated = true;
                break;
            }
            if !gt && ge && points[j].p < points[i].p {
                // identical rate vector achieved at a smaller p
                duplicate_of_earlier = true;
            }
        }
        points[i].dominant = !dominated && !duplicate_of_earlier;
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateCurveRow {
    pub k: usize,
    pub n_k: u64,
    pub rate_bits: f64,
    /// Per-user sum-rate capacity `I_k / k` in bits.
    pub capacity_per_user_bits: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateCurve {
    pub n1: u64,
    pub log_m_bits: f64,
    pub rows: Vec<RateCurveRow>,
}

/// Fixes `log2 M` from the single-user point at `n1`, then solves each
/// `n_k` and rate. `pairs_bits[k-1]` holds `(I_k, V_k)` in bits/bits².
pub fn rate_curve_from_pairs(
    pairs_bits: &[(f64, f64)],
    n1: u64,
    eps: f64,
) -> Result<RateCurve> {
    if pairs_bits.is_empty() {
        return Err(Error::InvalidParameter("no per-k statistics given".into()));
    }
    let (i1, v1) = pairs_bits[0];
    let log_m = solve_message_size(i1, v1, n1, eps)?;
    let mut rows = Vec::with_capacity(pairs_bits.len());
    for (idx, &(i_k, v_k)) in pairs_bits.iter().enumerate() {
        let k = idx + 1;
        let n_k = solve_blocklength(i_k, v_k, k, log_m, eps)?;
        rows.push(RateCurveRow {
            k,
            n_k,
            rate_bits: log_m / n_k as f64,
            capacity_per_user_bits: i_k / k as f64,
        });
    }
    Ok(RateCurve {
        n1,
        log_m_bits: log_m,
        rows,
    })
}

/// Rate curve from enumerated channel statistics.
pub fn rate_curve_from_stats(stats: &ChannelStatistics, n1: u64, eps: f64) -> Result<RateCurve> {
    let pairs: Vec<(f64, f64)> = (1..=stats.max_users())
        .map(|k| {
            (
                stats.mutual_information(k) / LN_2,
                stats.dispersion(k) / (LN_2 * LN_2),
            )
        })
        .collect();
    rate_curve_from_pairs(&pairs, n1, eps)
}
