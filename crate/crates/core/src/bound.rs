//! Term-by-term evaluation of the rateless-code error bound.
//!
//! For a configured [`CodeDesign`] and true user count `k`, the bound on
//! the decode error is a sum of six pieces: the dominating low-density
//! event for the transmitted tuple, the zero-test miss, message
//! repetition, early decoding at a smaller candidate count, partial
//! confusion of the transmitted tuple, and confusion with fresh
//! codewords. Each probability has the form `P[sum of n i.i.d.
//! single-letter densities vs threshold]` and is estimated by seeded
//! Monte Carlo over multinomial atom counts, or computed exactly by
//! n-fold convolution when `n` is small. Combinatorial prefactors are
//! applied in log domain so astronomically large codebooks never
//! overflow.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::adder::ln_binomial;
use crate::channel::{ChannelFamily, InputDistribution};
use crate::design::{CodeDesign, MessageCount, ZeroTestKind};
use crate::detect::{hoeffding_statistic_from_counts, ks_statistic_from_counts, marginal_on_full_alphabet};
use crate::error::{Error, Result};
use crate::infodensity::{confuse_density_pmf, joint_density_pmf, ChannelStatistics, DensityPmf};
use crate::seeding::{stream, DOMAIN_BOUND};

/// Probability that at least two of `k` uniform messages coincide,
/// `1 - prod_{i<k} (M - i) / M^k`, computed in log domain.
pub fn repetition_probability(m: &MessageCount, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if (k as f64).log2() > m.log2 {
        return Err(Error::InvalidParameter(format!(
            "cannot draw {k} distinct messages from 2^{} candidates",
            m.log2
        )));
    }
    let ln_m = m.ln();
    let mut log_no_rep = 0.0f64;
    for i in 1..k {
        let ratio = if let Some(mm) = m.exact {
            i as f64 / mm as f64
        } else {
            ((i as f64).ln() - ln_m).exp()
        };
        log_no_rep += (-ratio).ln_1p();
    }
    Ok(-log_no_rep.exp_m1())
}

/// How a bound report is produced.
#[derive(Debug, Clone, Copy)]
pub enum BoundMethod {
    MonteCarlo { trials: u64, seed: u64 },
    /// Full convolution of the single-letter laws; feasible for small
    /// blocklengths and alphabets only.
    Exact,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TermEstimate {
    /// Prefactored value before clamping; may exceed 1.
    pub raw: f64,
    /// `raw` clamped to [0, 1].
    pub clamped: f64,
    pub std_error: f64,
    /// True when no Monte Carlo noise enters this term.
    pub exact: bool,
}

impl TermEstimate {
    fn zero() -> Self {
        Self {
            raw: 0.0,
            clamped: 0.0,
            std_error: 0.0,
            exact: true,
        }
    }

    fn exact_value(v: f64) -> Self {
        Self {
            raw: v,
            clamped: v.clamp(0.0, 1.0),
            std_error: 0.0,
            exact: true,
        }
    }

    fn accumulate(&mut self, other: TermEstimate) {
        self.raw += other.raw;
        self.clamped = self.raw.clamp(0.0, 1.0);
        self.std_error = (self.std_error * self.std_error
            + other.std_error * other.std_error)
            .sqrt();
        self.exact &= other.exact;
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorBoundReport {
    pub k: usize,
    pub method: String,
    pub trials: u64,
    pub seed: u64,
    pub dominating: TermEstimate,
    pub zero_test: TermEstimate,
    pub repetition: TermEstimate,
    pub wrong_time: TermEstimate,
    pub confuse_self: TermEstimate,
    pub confuse_other: TermEstimate,
    /// Sum of raw terms, clamped to [0, 1].
    pub total: f64,
    pub total_raw: f64,
    pub total_std_error: f64,
    /// Analytic change-of-measure cap on the all-fresh confusion
    /// sub-term (`s = t = k`), when dispersion permits it.
    pub change_of_measure_cap: Option<f64>,
}

/// One elementary tail probability `P[sum_{i<n} Z_i (cmp) threshold]`.
#[derive(Debug, Clone, Copy)]
struct Tail {
    p: f64,
    std_error: f64,
    exact: bool,
}

fn mc_tail(
    pmf: &DensityPmf,
    n: u64,
    threshold: f64,
    above: bool,
    trials: u64,
    master: u64,
    term: u64,
) -> Tail {
    let mut masses: Vec<f64> = Vec::with_capacity(pmf.atoms().len() + 1);
    masses.push(pmf.neg_inf_mass());
    masses.extend(pmf.atoms().iter().map(|&(_, w)| w));
    let values: Vec<f64> = pmf.atoms().iter().map(|&(v, _)| v).collect();
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(master, DOMAIN_BOUND, term, i);
            let counts = sample_multinomial(&masses, n, &mut rng);
            let sum = if counts[0] > 0 {
                f64::NEG_INFINITY
            } else {
                values
                    .iter()
                    .zip(counts[1..].iter())
                    .map(|(&v, &c)| v * c as f64)
                    .sum()
            };
            let hit = if above { sum > threshold } else { sum <= threshold };
            u64::from(hit)
        })
        .sum();
    let p = hits as f64 / trials as f64;
    Tail {
        p,
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        exact: false,
    }
}

fn sample_multinomial<R: Rng>(masses: &[f64], n: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; masses.len()];
    let mut left = n;
    let mut mass_left = 1.0f64;
    for i in 0..masses.len() {
        if left == 0 {
            break;
        }
        if i + 1 == masses.len() {
            counts[i] = left;
            break;
        }
        let p = (masses[i] / mass_left).clamp(0.0, 1.0);
        let c = Binomial::new(left, p).expect("valid binomial").sample(rng);
        counts[i] = c;
        left -= c;
        mass_left = (mass_left - masses[i]).max(f64::MIN_POSITIVE);
    }
    counts
}

/// Exact `P[sum (cmp) threshold]` by n-fold convolution of the finite
/// atoms; mass that ever touches `-inf` counts toward the `<=` side.
pub fn exact_tail(pmf: &DensityPmf, n: u64, threshold: f64, above: bool) -> Result<f64> {
    if !threshold.is_finite() {
        return Err(Error::InvalidParameter("threshold must be finite".into()));
    }
    let mut dist: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    for _ in 0..n {
        let mut next: Vec<(f64, f64)> = Vec::with_capacity(dist.len() * pmf.atoms().len());
        for &(v, p) in &dist {
            for &(a, q) in pmf.atoms() {
                next.push((v + a, p * q));
            }
        }
        next.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(next.len());
        for (v, p) in next {
            match merged.last_mut() {
                Some((lv, lp)) if (v - *lv).abs() <= 1e-11 * lv.abs().max(1.0) => *lp += p,
                _ => merged.push((v, p)),
            }
        }
        if merged.len() > 2_000_000 {
            return Err(Error::TableOverflow(format!(
                "convolution support grew to {}",
                merged.len()
            )));
        }
        dist = merged;
    }
    let finite_hit: f64 = dist
        .iter()
        .filter(|&&(v, _)| if above { v > threshold } else { v <= threshold })
        .map(|&(_, p)| p)
        .sum();
    if above {
        Ok(finite_hit)
    } else {
        // any -inf summand makes the total -inf <= threshold
        let any_inf = 1.0 - pmf.finite_mass().powi(n as i32);
        Ok(finite_hit + any_inf)
    }
}

fn tail(
    pmf: &DensityPmf,
    n: u64,
    threshold: f64,
    above: bool,
    method: BoundMethod,
    term: u64,
) -> Result<Tail> {
    match method {
        BoundMethod::MonteCarlo { trials, seed } => {
            Ok(mc_tail(pmf, n, threshold, above, trials, seed, term))
        }
        BoundMethod::Exact => {
            let p = exact_tail(pmf, n, threshold, above)?;
            Ok(Tail {
                p,
                std_error: 0.0,
                exact: true,
            })
        }
    }
}

/// `ln C(M - sub, choose)` through the log-domain message count;
/// `-inf` when fewer than `choose` candidates remain.
fn ln_binomial_of_m(m: &MessageCount, sub: u64, choose: u64) -> f64 {
    if choose == 0 {
        return 0.0;
    }
    if let Some(mm) = m.exact {
        if mm < sub + choose {
            return f64::NEG_INFINITY;
        }
        return ln_binomial(mm - sub, choose);
    }
    let ln_m = m.ln();
    let mut acc = 0.0;
    for i in 0..choose {
        let frac = (((sub + i) as f64).ln() - ln_m).exp();
        if frac >= 1.0 {
            return f64::NEG_INFINITY;
        }
        acc += ln_m + (-frac).ln_1p();
    }
    acc - statrs::function::gamma::ln_gamma((choose + 1) as f64)
}

fn prefactored(tail: Tail, ln_prefactor: f64) -> TermEstimate {
    let raw = (ln_prefactor + tail.p.ln()).exp();
    let std_error = if tail.std_error > 0.0 {
        (ln_prefactor + tail.std_error.ln()).exp()
    } else {
        0.0
    };
    TermEstimate {
        raw,
        clamped: raw.clamp(0.0, 1.0),
        std_error,
        exact: tail.exact,
    }
}

const TERM_DOMINATING: u64 = 0;
const TERM_ZERO_TEST: u64 = 1;
const fn term_wrong_time(t: usize) -> u64 {
    0x100 + t as u64
}
const fn term_confuse_self(s: usize, t: usize) -> u64 {
    0x200 + ((s as u64) << 4) + t as u64
}
const fn term_confuse_other(s: usize, t: usize) -> u64 {
    0x300 + ((s as u64) << 4) + t as u64
}

/// Evaluates every bound term for `k` active transmitters under the
/// given design. `k = 0` reports the zero-test type-I probability as its
/// only term.
pub fn evaluate_bound(
    ch: &ChannelFamily,
    px: &InputDistribution,
    design: &CodeDesign,
    k: usize,
    method: BoundMethod,
) -> Result<ErrorBoundReport> {
    design.validate()?;
    if k > design.max_users() || design.max_users() > ch.max_users() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} outside the designed family"
        )));
    }
    if let BoundMethod::MonteCarlo { trials, .. } = method {
        if trials < 10_000 {
            return Err(Error::InvalidParameter(
                "fewer than 1e4 trials gives too wide a confidence interval".into(),
            ));
        }
    }
    let (trials, seed) = match method {
        BoundMethod::MonteCarlo { trials, seed } => (trials, seed),
        BoundMethod::Exact => (0, 0),
    };
    let method_name = match method {
        BoundMethod::MonteCarlo { .. } => "monte_carlo",
        BoundMethod::Exact => "exact",
    };

    let zero_test = zero_test_term(ch, px, design, k, method)?;

    if k == 0 {
        let total_raw = zero_test.raw;
        return Ok(ErrorBoundReport {
            k,
            method: method_name.into(),
            trials,
            seed,
            dominating: TermEstimate::zero(),
            zero_test,
            repetition: TermEstimate::zero(),
            wrong_time: TermEstimate::zero(),
            confuse_self: TermEstimate::zero(),
            confuse_other: TermEstimate::zero(),
            total: total_raw.clamp(0.0, 1.0),
            total_raw,
            total_std_error: zero_test.std_error,
            change_of_measure_cap: None,
        });
    }

    let stats = ChannelStatistics::compute(ch, px)?;

    // dominating: transmitted tuple fails the threshold at its own time
    let pmf_k = joint_density_pmf(ch, px, k, k, k)?;
    let dominating = {
        let t = tail(
            &pmf_k,
            design.n[k],
            design.log_gamma[k],
            false,
            method,
            TERM_DOMINATING,
        )?;
        prefactored(t, 0.0)
    };

    let repetition = TermEstimate::exact_value(repetition_probability(&design.m, k)?);

    let mut wrong_time = TermEstimate::zero();
    for t in 1..k {
        let pmf = joint_density_pmf(ch, px, t, t, k)?;
        let tl = tail(
            &pmf,
            design.n[t],
            design.log_gamma[t],
            true,
            method,
            term_wrong_time(t),
        )?;
        wrong_time.accumulate(prefactored(tl, ln_binomial(k as u64, t as u64)));
    }

    let mut confuse_self = TermEstimate::zero();
    for t in 1..=k {
        for s in 1..t {
            let ln_pref = ln_binomial(k as u64, (t - s) as u64);
            let pmf = joint_density_pmf(ch, px, t - s, t, k)?;
            let expectation = stats.cross_expectation(t - s, t, k);
            let est = if expectation == f64::NEG_INFINITY {
                // the sum exceeds -inf only if every summand is finite
                let q = pmf.finite_mass();
                let p = q.powi(design.n[t] as i32);
                prefactored(
                    Tail {
                        p,
                        std_error: 0.0,
                        exact: true,
                    },
                    ln_pref,
                )
            } else {
                let threshold = design.n[t] as f64 * expectation + design.lambda(s, t);
                let tl = tail(
                    &pmf,
                    design.n[t],
                    threshold,
                    true,
                    method,
                    term_confuse_self(s, t),
                )?;
                prefactored(tl, ln_pref)
            };
            confuse_self.accumulate(est);
        }
    }

    let mut confuse_other = TermEstimate::zero();
    for t in 1..=k {
        for s in 1..=t {
            let ln_pref = ln_binomial(k as u64, (t - s) as u64)
                + ln_binomial_of_m(&design.m, k as u64, s as u64);
            let expectation = if s == t {
                0.0
            } else {
                stats.cross_expectation(t - s, t, k)
            };
            if expectation == f64::NEG_INFINITY {
                // threshold is +inf: this piece vanishes exactly
                continue;
            }
            let threshold =
                design.log_gamma[t] - design.n[t] as f64 * expectation - design.lambda(s, t);
            let pmf = confuse_density_pmf(ch, px, s, t, k)?;
            let tl = tail(
                &pmf,
                design.n[t],
                threshold,
                true,
                method,
                term_confuse_other(s, t),
            )?;
            confuse_other.accumulate(prefactored(tl, ln_pref));
        }
    }

    // analytic cap on the all-fresh sub-term via change of measure
    let v_k = stats.dispersion(k);
    let change_of_measure_cap = if v_k > 0.0 {
        let d_k = 2.0
            * (std::f64::consts::LN_2 / (2.0 * std::f64::consts::PI * v_k).sqrt()
                + 2.0 * stats.berry_esseen(k));
        let ln_cap = ln_binomial_of_m(&design.m, k as u64, k as u64) - design.log_gamma[k]
            + (d_k / (design.n[k] as f64).sqrt()).ln();
        Some(ln_cap.exp())
    } else {
        None
    };

    let total_raw = dominating.raw
        + zero_test.raw
        + repetition.raw
        + wrong_time.raw
        + confuse_self.raw
        + confuse_other.raw;
    let total_std_error = [
        dominating.std_error,
        zero_test.std_error,
        wrong_time.std_error,
        confuse_self.std_error,
        confuse_other.std_error,
    ]
    .iter()
    .map(|e| e * e)
    .sum::<f64>()
    .sqrt();

    Ok(ErrorBoundReport {
        k,
        method: method_name.into(),
        trials,
        seed,
        dominating,
        zero_test,
        repetition,
        wrong_time,
        confuse_self,
        confuse_other,
        total: total_raw.clamp(0.0, 1.0),
        total_raw,
        total_std_error,
        change_of_measure_cap,
    })
}

/// Zero-test term: type-I rejection probability for `k = 0`, type-II
/// acceptance probability under `k` active users otherwise.
fn zero_test_term(
    ch: &ChannelFamily,
    px: &InputDistribution,
    design: &CodeDesign,
    k: usize,
    method: BoundMethod,
) -> Result<TermEstimate> {
    let n0 = design.n[0];
    let gamma0 = design.zero_test.gamma0;
    let kind = design.zero_test.kind;
    let null = marginal_on_full_alphabet(ch, px, 0)?;
    let null_cum: Vec<f64> = {
        let mut acc = 0.0;
        null.iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    };
    let law = marginal_on_full_alphabet(ch, px, k)?;
    let statistic = |counts: &[u64]| -> f64 {
        match kind {
            ZeroTestKind::Hoeffding => hoeffding_statistic_from_counts(counts, &null),
            ZeroTestKind::Ks => ks_statistic_from_counts(counts, &null_cum),
        }
    };
    // k = 0 counts rejections; k >= 1 counts acceptances
    let want_reject = k == 0;
    match method {
        BoundMethod::MonteCarlo { trials, seed } => {
            let hits: u64 = (0..trials)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream(seed, DOMAIN_BOUND, TERM_ZERO_TEST, i);
                    let counts = sample_multinomial(&law, n0, &mut rng);
                    let reject = statistic(&counts) > gamma0;
                    u64::from(reject == want_reject)
                })
                .sum();
            let p = hits as f64 / trials as f64;
            Ok(TermEstimate {
                raw: p,
                clamped: p,
                std_error: (p * (1.0 - p) / trials as f64).sqrt(),
                exact: false,
            })
        }
        BoundMethod::Exact => {
            let support: Vec<usize> = (0..law.len()).filter(|&i| law[i] > 0.0).collect();
            let mut c = 1.0f64;
            for i in 1..support.len() {
                c *= (n0 + i as u64) as f64 / i as f64;
            }
            if c > 2e6 {
                return Err(Error::TableOverflow(
                    "zero-test enumeration too large for the exact method".into(),
                ));
            }
            let mut p_hit = 0.0;
            enumerate_types(support.len(), n0, &mut |partial| {
                let mut counts = vec![0u64; law.len()];
                for (j, &c) in partial.iter().enumerate() {
                    counts[support[j]] = c;
                }
                let mut lp = statrs::function::gamma::ln_gamma((n0 + 1) as f64);
                for (j, &cj) in partial.iter().enumerate() {
                    lp -= statrs::function::gamma::ln_gamma((cj + 1) as f64);
                    if cj > 0 {
                        lp += cj as f64 * law[support[j]].ln();
                    }
                }
                let reject = statistic(&counts) > gamma0;
                if reject == want_reject {
                    p_hit += lp.exp();
                }
            });
            Ok(TermEstimate::exact_value(p_hit))
        }
    }
}

fn enumerate_types<F: FnMut(&[u64])>(support: usize, n: u64, f: &mut F) {
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
