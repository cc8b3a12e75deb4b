//! Composite hypothesis tests for the zero-transmitter decision.
//!
//! The receiver watches the first `n0` output symbols and decides
//! between "no transmitters" (the silence output law) and "someone is
//! active". Implemented statistics: Hoeffding's empirical-divergence
//! test, the Kolmogorov-Smirnov cdf test, and the vector log-likelihood
//! ratio test whose minimax quantile drives the optimal `n0` expansion.
//!
//! All logs are natural; thresholds and divergences are in nats.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{ChannelFamily, InputDistribution, OutputSymbol};
use crate::design::q_inv;
use crate::error::{Error, Result};
use crate::infodensity::kl_divergence;
use crate::seeding::{stream, CumulativeSampler, DOMAIN_DETECT, DOMAIN_MINIMAX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestStatistic {
    Hoeffding,
    Ks,
    Llr,
}

/// Declarative description of a configured test.
#[derive(Debug, Clone, Serialize)]
pub struct TestSpec {
    pub kind: TestStatistic,
    /// Scalar threshold for Hoeffding/KS; vector threshold for LLR.
    pub threshold: Vec<f64>,
    pub null: Vec<f64>,
    pub alternatives: Vec<Vec<f64>>,
}

impl TestSpec {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            TestStatistic::Hoeffding | TestStatistic::Ks => {
                if self.threshold.len() != 1 || self.threshold[0] < 0.0 {
                    return Err(Error::InvalidParameter(
                        "scalar nonnegative threshold required".into(),
                    ));
                }
            }
            TestStatistic::Llr => {
                if self.threshold.len() != self.alternatives.len() {
                    return Err(Error::InvalidParameter(
                        "llr threshold dimension must match alternatives".into(),
                    ));
                }
                for (i, alt) in self.alternatives.iter().enumerate() {
                    if !kl_divergence(&self.null, alt).is_finite() {
                        return Err(Error::InvalidParameter(format!(
                            "alternative {i} is not absolutely continuous w.r.t. the null"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `D(P̂ || null)` in nats for samples given as alphabet indices;
/// `+inf` once any sample falls outside the null support.
pub fn hoeffding_statistic(samples: &[usize], null: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("empty sample".into()));
    }
    let mut counts = vec![0u64; null.len()];
    for &s in samples {
        if s >= null.len() {
            return Err(Error::InvalidParameter(format!("sample index {s} out of range")));
        }
        counts[s] += 1;
    }
    Ok(hoeffding_statistic_from_counts(&counts, null))
}

/// Divergence of the empirical type given by `counts` from `null`.
pub fn hoeffding_statistic_from_counts(counts: &[u64], null: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let nf = n as f64;
    let mut d = 0.0;
    for (&c, &q) in counts.iter().zip(null.iter()) {
        if c > 0 {
            if q == 0.0 {
                return f64::INFINITY;
            }
            let p = c as f64 / nf;
            d += p * (p / q).ln();
        }
    }
    d
}

/// A cumulative distribution function with explicit left limits, so the
/// KS statistic is exact for discrete and mixed laws.
pub trait Cdf {
    fn cdf(&self, x: f64) -> f64;
    fn cdf_left(&self, x: f64) -> f64 {
        self.cdf(x)
    }
}

/// Continuous cdf given by a closure.
pub struct SmoothCdf<F: Fn(f64) -> f64>(pub F);

impl<F: Fn(f64) -> f64> Cdf for SmoothCdf<F> {
    fn cdf(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}

/// Step cdf of a discrete law with atoms at `points` (strictly
/// increasing) carrying `masses`.
#[derive(Debug, Clone)]
pub struct StepCdf {
    points: Vec<f64>,
    cum: Vec<f64>,
}

impl StepCdf {
    pub fn new(points: Vec<f64>, masses: &[f64]) -> Result<Self> {
        if points.len() != masses.len() || points.is_empty() {
            return Err(Error::InvalidParameter("points/masses mismatch".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("atoms must be strictly increasing".into()));
        }
        let mut acc = 0.0;
        let cum = masses
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        Ok(Self { points, cum })
    }
}

impl Cdf for StepCdf {
    fn cdf(&self, x: f64) -> f64 {
        match self.points.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(i) => self.cum[i],
            Err(0) => 0.0,
            Err(i) => self.cum[i - 1],
        }
    }

    fn cdf_left(&self, x: f64) -> f64 {
        match self.points.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(0) | Err(0) => 0.0,
            Ok(i) => self.cum[i - 1],
            Err(i) => self.cum[i - 1],
        }
    }
}

/// `sup_x |F̂_n(x) - F_0(x)|`, evaluated at the sample points and their
/// left limits.
pub fn ks_statistic<C: Cdf>(samples: &[f64], f0: &C) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let upper = (i + 1) as f64 / n - f0.cdf_left(x);
        let lower = f0.cdf(x) - (i + 1) as f64 / n;
        let before = f0.cdf_left(x) - i as f64 / n;
        sup = sup.max(upper).max(lower).max(before);
    }
    Ok(sup)
}

/// KS statistic straight from per-symbol counts over an ordered finite
/// alphabet with null cumulative masses `null_cum`.
pub fn ks_statistic_from_counts(counts: &[u64], null_cum: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let nf = n as f64;
    let mut acc = 0u64;
    let mut sup = 0.0f64;
    for (&c, &q) in counts.iter().zip(null_cum.iter()) {
        acc += c;
        sup = sup.max((acc as f64 / nf - q).abs());
    }
    sup
}

/// Hoeffding acceptance threshold `|Y| ln(n) / n` (nats).
pub fn hoeffding_threshold(n: u64, alphabet_size: usize) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    alphabet_size as f64 * (n as f64).ln() / n as f64
}

/// KS acceptance threshold `sqrt(ln(2/eps0) / (2n))`; the uniform
/// empirical-cdf deviation bound makes the type-I error at most `eps0`
/// for every `n`.
pub fn ks_threshold(n: u64, eps0: f64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    ((2.0 / eps0).ln().max(0.0) / (2.0 * n as f64)).sqrt()
}

/// Real-line embedding of the family's full output alphabet: numeric
/// outputs at their values, erasure strictly above all of them.
pub fn embed_outputs(ch: &ChannelFamily) -> Vec<f64> {
    let alpha = ch.outputs(ch.max_users());
    let max_value = alpha
        .iter()
        .filter_map(|y| match y {
            OutputSymbol::Value(v) => Some(*v as f64),
            OutputSymbol::Erasure => None,
        })
        .fold(0.0f64, f64::max);
    alpha
        .iter()
        .map(|y| match y {
            OutputSymbol::Value(v) => *v as f64,
            OutputSymbol::Erasure => max_value + 1.0,
        })
        .collect()
}

/// Marginal `P_{Y_k}` embedded on the level-K alphabet.
pub fn marginal_on_full_alphabet(
    ch: &ChannelFamily,
    px: &InputDistribution,
    k: usize,
) -> Result<Vec<f64>> {
    let pk = ch.output_marginal(px, k)?;
    let mut full = vec![0.0; ch.outputs(ch.max_users()).len()];
    for (yi, y) in ch.outputs(k).iter().enumerate() {
        full[ch.output_index(ch.max_users(), *y).unwrap()] = pk[yi];
    }
    Ok(full)
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorEstimate {
    pub rate: f64,
    pub std_error: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

impl ErrorEstimate {
    pub fn from_counts(hits: u64, trials: u64) -> Self {
        let p = hits as f64 / trials as f64;
        let (lo, hi) = wilson_interval(hits, trials, 1.96);
        Self {
            rate: p,
            std_error: (p * (1.0 - p) / trials as f64).sqrt(),
            wilson_low: lo,
            wilson_high: hi,
        }
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct TestErrorReport {
    pub kind: TestStatistic,
    pub n0: u64,
    pub gamma0: f64,
    pub trials: u64,
    pub seed: u64,
    /// Type-I error (reject silence when true).
    pub alpha: ErrorEstimate,
    /// Per-k type-II errors (accept silence under `k` active users).
    pub beta: Vec<ErrorEstimate>,
}

/// Monte Carlo type-I and type-II error estimates of the configured test
/// on a channel family. Trial `i` of the hypothesis-`k` estimate draws
/// from the detect stream `(term = k, index = i)`.
pub fn estimate_test_errors(
    ch: &ChannelFamily,
    px: &InputDistribution,
    kind: TestStatistic,
    n0: u64,
    gamma0: f64,
    trials: u64,
    seed: u64,
) -> Result<TestErrorReport> {
    if n0 == 0 {
        return Err(Error::InvalidParameter("n0 must be positive".into()));
    }
    if trials < 10_000 {
        return Err(Error::InvalidParameter(
            "fewer than 1e4 trials gives too wide a confidence interval".into(),
        ));
    }
    if kind == TestStatistic::Llr {
        return Err(Error::InvalidParameter(
            "error estimation drives the scalar tests; use minimax_quantile for llr".into(),
        ));
    }
    let null = {
        let mut full = vec![0.0; ch.outputs(ch.max_users()).len()];
        for (yi, _) in ch.outputs(0).iter().enumerate() {
            let y = ch.outputs(0)[yi];
            full[ch.output_index(ch.max_users(), y).unwrap()] = ch.silence_output()[yi];
        }
        full
    };
    let null_cum: Vec<f64> = {
        let mut acc = 0.0;
        null.iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    };

    let reject_rate = |law: &[f64], term: u64, count_reject: bool| -> u64 {
        let sampler = CumulativeSampler::new(law);
        (0..trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed, DOMAIN_DETECT, term, i);
                let mut counts = vec![0u64; law.len()];
                for _ in 0..n0 {
                    counts[sampler.sample(&mut rng)] += 1;
                }
                let stat = match kind {
                    TestStatistic::Hoeffding => hoeffding_statistic_from_counts(&counts, &null),
                    TestStatistic::Ks => ks_statistic_from_counts(&counts, &null_cum),
                    TestStatistic::Llr => unreachable!(),
                };
                let reject = stat > gamma0;
                u64::from(reject == count_reject)
            })
            .sum()
    };

    let alpha_hits = reject_rate(&null, 0, true);
    let mut beta = Vec::new();
    for k in 1..=ch.max_users() {
        let law = marginal_on_full_alphabet(ch, px, k)?;
        let accept_hits = reject_rate(&law, k as u64, false);
        beta.push(ErrorEstimate::from_counts(accept_hits, trials));
    }
    Ok(TestErrorReport {
        kind,
        n0,
        gamma0,
        trials,
        seed,
        alpha: ErrorEstimate::from_counts(alpha_hits, trials),
        beta,
    })
}

fn compositions_over(support: usize, n: u64) -> f64 {
    // C(n + support - 1, support - 1)
    let mut c = 1.0f64;
    for i in 1..support {
        c *= (n + i as u64) as f64 / i as f64;
    }
    c
}

fn for_each_type<F: FnMut(&[u64])>(support: usize, n: u64, f: &mut F) {
    fn rec<F: FnMut(&[u64])>(cur: &mut Vec<u64>, pos: usize, left: u64, support: usize, f: &mut F) {
        if pos == support - 1 {
            cur.push(left);
            f(cur);
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(cur, pos + 1, left - c, support, f);
            cur.pop();
        }
    }
    rec(&mut Vec::new(), 0, n, support, f);
}

fn ln_factorial(n: u64) -> f64 {
    statrs::function::gamma::ln_gamma((n + 1) as f64)
}

/// Exact Hoeffding type-I error by enumeration of empirical types on the
/// null support. Feasible whenever the support is small.
pub fn hoeffding_type1_exact(null: &[f64], n: u64, gamma0: f64) -> Result<f64> {
    let support: Vec<usize> = (0..null.len()).filter(|&i| null[i] > 0.0).collect();
    if compositions_over(support.len(), n) > 2e7 {
        return Err(Error::TableOverflow("too many empirical types".into()));
    }
    let q: Vec<f64> = support.iter().map(|&i| null[i]).collect();
    let mut accept = 0.0;
    for_each_type(support.len(), n, &mut |counts| {
        let mut d = 0.0;
        let mut lp = ln_factorial(n);
        for (&c, &qi) in counts.iter().zip(q.iter()) {
            if c > 0 {
                let p = c as f64 / n as f64;
                d += p * (p / qi).ln();
                lp += c as f64 * qi.ln();
            }
            lp -= ln_factorial(c);
        }
        if d <= gamma0 {
            accept += lp.exp();
        }
    });
    Ok((1.0 - accept).max(0.0))
}

/// Natural log of the exact Hoeffding type-II error under `alt`:
/// `ln P[D(P̂ || null) <= gamma0]` with samples drawn i.i.d. from `alt`.
/// Types putting mass outside the null support reject automatically, so
/// the enumeration runs on the null support only. Returned in log form
/// because the probability underflows for moderate `n` already.
pub fn hoeffding_type2_exact_ln(null: &[f64], alt: &[f64], n: u64, gamma0: f64) -> Result<f64> {
    if null.len() != alt.len() {
        return Err(Error::InvalidParameter("support mismatch".into()));
    }
    let support: Vec<usize> = (0..null.len()).filter(|&i| null[i] > 0.0).collect();
    if compositions_over(support.len(), n) > 2e7 {
        return Err(Error::TableOverflow("too many empirical types".into()));
    }
    let q: Vec<f64> = support.iter().map(|&i| null[i]).collect();
    let a: Vec<f64> = support.iter().map(|&i| alt[i]).collect();
    let mut terms: Vec<f64> = Vec::new();
    for_each_type(support.len(), n, &mut |counts| {
        let mut d = 0.0;
        let mut lp = ln_factorial(n);
        let mut possible = true;
        for (i, &c) in counts.iter().enumerate() {
            if c > 0 {
                let p = c as f64 / n as f64;
                d += p * (p / q[i]).ln();
                if a[i] == 0.0 {
                    possible = false;
                    break;
                }
                lp += c as f64 * a[i].ln();
            }
            lp -= ln_factorial(c);
        }
        if possible && d <= gamma0 {
            terms.push(lp);
        }
    });
    if terms.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - m).exp()).sum();
    Ok(m + sum.ln())
}

/// Smallest `n <= n_max` at which the exact Hoeffding type-I error under
/// the threshold `|Y| ln(n) / n` drops to `eps0`.
pub fn hoeffding_min_n(null: &[f64], alphabet_size: usize, eps0: f64, n_max: u64) -> Option<u64> {
    for n in 1..=n_max {
        let gamma0 = hoeffding_threshold(n, alphabet_size);
        match hoeffding_type1_exact(null, n, gamma0) {
            Ok(alpha) if alpha <= eps0 => return Some(n),
            _ => continue,
        }
    }
    None
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimaxReport {
    /// `min_k D(null || alt_k)` in nats.
    pub d_min: f64,
    /// 1-based indices of the minimizing alternatives (after removing
    /// exact duplicates).
    pub i_min: Vec<usize>,
    /// Solution of `P[Z <= b 1] = 1 - eps0` for the restricted Gaussian;
    /// `None` when the restricted covariance is singular.
    pub b: Option<f64>,
    pub singular: bool,
    /// Standard deviation of the single restricted coordinate when the
    /// minimizer is unique.
    pub univariate_sigma: Option<f64>,
}

/// Minimax second-order quantile of the vector log-likelihood-ratio test:
/// divergence floor `D_min`, its arg-min set, and the Gaussian quantile
/// `b` solving `P[Z <= b 1] = 1 - eps0` with `Z` the restricted LLR
/// covariance under the null. The multivariate probability is estimated
/// from `mc_trials` antithetic Gaussian pairs on a common sample, so the
/// map `c -> P[Z <= c 1]` is monotone and its quantile well-defined.
pub fn minimax_quantile(
    null: &[f64],
    alternatives: &[Vec<f64>],
    eps0: f64,
    mc_trials: u64,
    seed: u64,
) -> Result<MinimaxReport> {
    if alternatives.is_empty() {
        return Err(Error::InvalidParameter("no alternatives".into()));
    }
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return Err(Error::InvalidParameter("eps0 outside (0, 1)".into()));
    }
    if mc_trials < 1_000 {
        return Err(Error::InvalidParameter("need at least 1e3 samples".into()));
    }
    // drop exact duplicates; they change nothing about the test
    let mut unique: Vec<(usize, &Vec<f64>)> = Vec::new();
    for (i, alt) in alternatives.iter().enumerate() {
        if alt.len() != null.len() {
            return Err(Error::InvalidParameter("support mismatch".into()));
        }
        let dup = unique
            .iter()
            .any(|(_, u)| u.iter().zip(alt.iter()).all(|(a, b)| (a - b).abs() <= 1e-12));
        if !dup {
            unique.push((i, alt));
        }
    }
    let divergences: Vec<f64> = unique
        .iter()
        .map(|(_, alt)| kl_divergence(null, alt))
        .collect();
    let d_min = divergences.iter().cloned().fold(f64::INFINITY, f64::min);
    if !d_min.is_finite() || d_min <= 0.0 {
        return Err(Error::Infeasible(format!(
            "divergence floor {d_min} outside (0, inf)"
        )));
    }
    let min_ids: Vec<usize> = divergences
        .iter()
        .enumerate()
        .filter(|(_, &d)| d - d_min <= 1e-12 * d_min.max(1.0))
        .map(|(j, _)| j)
        .collect();
    let i_min: Vec<usize> = min_ids.iter().map(|&j| unique[j].0 + 1).collect();

    // restricted LLR coordinates: ln(null(y) / alt_k(y)) under the null
    let dim = min_ids.len();
    let mut mean = vec![0.0; dim];
    let mut cov = vec![vec![0.0; dim]; dim];
    let llr = |j: usize, y: usize| -> f64 {
        let alt = unique[min_ids[j]].1;
        (null[y] / alt[y]).ln()
    };
    for (y, &py) in null.iter().enumerate() {
        if py == 0.0 {
            continue;
        }
        for j in 0..dim {
            mean[j] += py * llr(j, y);
        }
    }
    for (y, &py) in null.iter().enumerate() {
        if py == 0.0 {
            continue;
        }
        for j in 0..dim {
            for l in 0..dim {
                cov[j][l] += py * (llr(j, y) - mean[j]) * (llr(l, y) - mean[l]);
            }
        }
    }

    if dim == 1 {
        let sigma = cov[0][0].max(0.0).sqrt();
        let b = sigma * q_inv(eps0)?;
        return Ok(MinimaxReport {
            d_min,
            i_min,
            b: Some(b),
            singular: false,
            univariate_sigma: Some(sigma),
        });
    }

    let chol = match cholesky(&cov) {
        Some(l) => l,
        None => {
            return Ok(MinimaxReport {
                d_min,
                i_min,
                b: None,
                singular: true,
                univariate_sigma: None,
            })
        }
    };
    // common-sample scores: for each standard normal vector u (and its
    // antithetic mirror), max_j (L u)_j; P[Z <= c 1] is the score ecdf
    let scores: Vec<f64> = (0..mc_trials)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = stream(seed, DOMAIN_MINIMAX, 0, i as u64);
            let u: Vec<f64> = (0..dim).map(|_| standard_normal(&mut rng)).collect();
            let score = |sign: f64| {
                (0..dim)
                    .map(|j| {
                        (0..=j).map(|l| chol[j][l] * sign * u[l]).sum::<f64>()
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            [score(1.0), score(-1.0)]
        })
        .collect();
    let mut sorted = scores;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let count = sorted.len() as f64;
    let rank = ((1.0 - eps0) * count).ceil() as usize;
    let b = sorted[rank.saturating_sub(1).min(sorted.len() - 1)];
    Ok(MinimaxReport {
        d_min,
        i_min,
        b: Some(b),
        singular: false,
        univariate_sigma: None,
    })
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller on the open interval
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 1e-12 {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

/// Number of observations needed for a reliable zero-transmitter
/// decision at data blocklength `n1`:
/// `ceil( ln n1 / (2 D) + b sqrt(ln n1) / sqrt(2 D³) - ln ln n1 / (2 D) )`,
/// floored at 1.
pub fn n0_expansion(d_min: f64, b: f64, n1: u64) -> Result<u64> {
    if !(d_min > 0.0) {
        return Err(Error::InvalidParameter("divergence floor must be positive".into()));
    }
    if n1 < 3 {
        return Err(Error::InvalidParameter("n1 must be at least 3".into()));
    }
    let ln_n1 = (n1 as f64).ln();
    let value = ln_n1 / (2.0 * d_min) + b * ln_n1.sqrt() / (2.0 * d_min.powi(3)).sqrt()
        - ln_n1.ln() / (2.0 * d_min);
    Ok((value.ceil() as i64).max(1) as u64)
}
