//! Exact single-letter information densities and their moments.
//!
//! Everything here is computed by exact summation over input multisets
//! (with multinomial weights) and output symbols; no sampling. All
//! quantities are in nats; convert to bits at presentation only.
//!
//! Density conventions follow the extended-real rules used throughout
//! the crate: a density evaluates to `0` when the output symbol lies
//! outside the hypothesis alphabet or the conditioned block is empty,
//! and to `-inf` when the hypothesis likelihood is zero while the
//! reference is positive. Expectations over zero-probability events
//! contribute nothing, so `-inf` only propagates into a mean when it
//! carries positive probability.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{multisets, ChannelFamily, InputDistribution, Multiset, OutputSymbol};
use crate::error::{Error, Result};

pub const LN_2: f64 = std::f64::consts::LN_2;

/// Multinomial weight of a multiset under i.i.d. draws from `px`.
pub fn multiset_weight(px: &InputDistribution, counts: &[u32]) -> f64 {
    let mut remaining: u32 = counts.iter().sum();
    let mut w = 1.0f64;
    for (i, &c) in counts.iter().enumerate() {
        w *= binomial(remaining, c) * px.prob(i).powi(c as i32);
        remaining -= c;
    }
    w
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k.min(n));
    let mut c = 1.0f64;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// All multisets of the given size together with their weights under `px`.
pub fn multiset_weights(px: &InputDistribution, size: u32) -> Vec<(Multiset, f64)> {
    multisets(px.len(), size)
        .into_iter()
        .map(|m| {
            let w = multiset_weight(px, &m);
            (m, w)
        })
        .collect()
}

/// Conditional output distribution `P_{Y_k | X_given}` where the given
/// block is specified by counts and/or explicit symbols and the remaining
/// `k - |given|` inputs are marginalized over `px`.
pub fn conditional_output(
    ch: &ChannelFamily,
    px: &InputDistribution,
    k: usize,
    given_counts: &[u32],
    given_symbols: &[usize],
) -> Result<Vec<f64>> {
    let mut base = vec![0u32; ch.input_size()];
    for (i, &c) in given_counts.iter().enumerate() {
        base[i] += c;
    }
    for &s in given_symbols {
        if s >= ch.input_size() {
            return Err(Error::InvalidParameter(format!("input symbol {s} out of range")));
        }
        base[s] += 1;
    }
    let fixed: u32 = base.iter().sum();
    if fixed as usize > k {
        return Err(Error::InvalidParameter(format!(
            "conditioning on {fixed} inputs exceeds user count {k}"
        )));
    }
    let free = k as u32 - fixed;
    let mut out = vec![0.0; ch.outputs(k).len()];
    for (c, w) in multiset_weights(px, free) {
        if w == 0.0 {
            continue;
        }
        let mut full = base.clone();
        for (i, &ci) in c.iter().enumerate() {
            full[i] += ci;
        }
        let row = ch.kernel_row(&full)?;
        for (o, r) in out.iter_mut().zip(row.iter()) {
            *o += w * r;
        }
    }
    Ok(out)
}

fn log_ratio(num: f64, den: f64) -> f64 {
    if num > 0.0 && den > 0.0 {
        (num / den).ln()
    } else if num == 0.0 && den > 0.0 {
        f64::NEG_INFINITY
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Information density `ı_t(x_A; y | x_B)` evaluated with `|A| + |B| <= t`
/// candidate transmitters; unnamed positions are marginalized over `px`.
/// Returns `0` for `y` outside `Y_t` or an empty `A`.
pub fn density(
    ch: &ChannelFamily,
    px: &InputDistribution,
    t: usize,
    x_a: &[usize],
    x_b: &[usize],
    y: OutputSymbol,
) -> Result<f64> {
    if t > ch.max_users() {
        return Err(Error::InvalidParameter(format!(
            "candidate count {t} exceeds family maximum {}",
            ch.max_users()
        )));
    }
    if x_a.len() + x_b.len() > t {
        return Err(Error::InvalidParameter(format!(
            "{} named inputs exceed candidate count {t}",
            x_a.len() + x_b.len()
        )));
    }
    if x_a.is_empty() {
        return Ok(0.0);
    }
    let yi = match ch.output_index(t, y) {
        Some(i) => i,
        None => return Ok(0.0),
    };
    let mut ab: Vec<usize> = x_a.to_vec();
    ab.extend_from_slice(x_b);
    let num = conditional_output(ch, px, t, &[], &ab)?[yi];
    let den = conditional_output(ch, px, t, &[], x_b)?[yi];
    Ok(log_ratio(num, den))
}

/// Finite discrete law of a single-letter density: finite atoms plus the
/// probability mass sitting at `-inf`.
#[derive(Debug, Clone)]
pub struct DensityPmf {
    atoms: Vec<(f64, f64)>,
    neg_inf_mass: f64,
}

impl DensityPmf {
    pub fn from_atoms(raw: Vec<(f64, f64)>) -> Self {
        let mut neg_inf_mass = 0.0;
        let mut finite: Vec<(f64, f64)> = Vec::new();
        for (v, w) in raw {
            if w <= 0.0 {
                continue;
            }
            if v == f64::NEG_INFINITY {
                neg_inf_mass += w;
            } else {
                finite.push((v, w));
            }
        }
        finite.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(finite.len());
        for (v, w) in finite {
            match atoms.last_mut() {
                Some((lv, lw)) if (v - *lv).abs() <= 1e-12 * lv.abs().max(1.0) => *lw += w,
                _ => atoms.push((v, w)),
            }
        }
        Self { atoms, neg_inf_mass }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn neg_inf_mass(&self) -> f64 {
        self.neg_inf_mass
    }

    pub fn finite_mass(&self) -> f64 {
        self.atoms.iter().map(|&(_, w)| w).sum()
    }

    /// Mean; `-inf` when the negative-infinity atom carries mass.
    pub fn mean(&self) -> f64 {
        if self.neg_inf_mass > 0.0 {
            return f64::NEG_INFINITY;
        }
        self.atoms.iter().map(|&(v, w)| v * w).sum()
    }

    pub fn second_moment(&self) -> f64 {
        if self.neg_inf_mass > 0.0 {
            return f64::INFINITY;
        }
        self.atoms.iter().map(|&(v, w)| v * v * w).sum()
    }

    pub fn variance(&self) -> f64 {
        if self.neg_inf_mass > 0.0 {
            return f64::INFINITY;
        }
        let m = self.mean();
        self.atoms.iter().map(|&(v, w)| (v - m) * (v - m) * w).sum()
    }

    pub fn third_abs_central_moment(&self) -> f64 {
        if self.neg_inf_mass > 0.0 {
            return f64::INFINITY;
        }
        let m = self.mean();
        self.atoms.iter().map(|&(v, w)| (v - m).abs().powi(3) * w).sum()
    }
}

/// Law of `ı_t(X_[m]; Y_k)` where the `m` named inputs are among the `k`
/// true transmitters and `Y_k` is the true channel output (`m <= t <= k`).
pub fn joint_density_pmf(
    ch: &ChannelFamily,
    px: &InputDistribution,
    m: usize,
    t: usize,
    k: usize,
) -> Result<DensityPmf> {
    if !(m <= t && t <= k && k <= ch.max_users()) {
        return Err(Error::InvalidParameter(format!(
            "need m <= t <= k <= K, got ({m}, {t}, {k})"
        )));
    }
    if m == 0 {
        return Ok(DensityPmf::from_atoms(vec![(0.0, 1.0)]));
    }
    let marg_t = conditional_output(ch, px, t, &[], &[])?;
    let mut raw = Vec::new();
    for (a, w_a) in multiset_weights(px, m as u32) {
        if w_a == 0.0 {
            continue;
        }
        let cond_k = conditional_output(ch, px, k, &a, &[])?;
        let cond_t = conditional_output(ch, px, t, &a, &[])?;
        for (yi, y) in ch.outputs(k).iter().enumerate() {
            let w = w_a * cond_k[yi];
            if w == 0.0 {
                continue;
            }
            let v = match ch.output_index(t, *y) {
                None => 0.0,
                Some(ti) => log_ratio(cond_t[ti], marg_t[ti]),
            };
            raw.push((v, w));
        }
    }
    Ok(DensityPmf::from_atoms(raw))
}

/// Law of `ı_t(X̄_[s]; Y_k | X_B)` where `X̄_[s]` are fresh codewords
/// independent of the channel and `X_B` are `t - s` true transmitters.
pub fn confuse_density_pmf(
    ch: &ChannelFamily,
    px: &InputDistribution,
    s: usize,
    t: usize,
    k: usize,
) -> Result<DensityPmf> {
    if !(1 <= s && s <= t && t <= k && k <= ch.max_users()) {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= s <= t <= k <= K, got ({s}, {t}, {k})"
        )));
    }
    let b_size = (t - s) as u32;
    let mut raw = Vec::new();
    for (b, w_b) in multiset_weights(px, b_size) {
        if w_b == 0.0 {
            continue;
        }
        let cond_k_b = conditional_output(ch, px, k, &b, &[])?;
        let den_t_b = conditional_output(ch, px, t, &b, &[])?;
        for (abar, w_abar) in multiset_weights(px, s as u32) {
            if w_abar == 0.0 {
                continue;
            }
            let mut full = b.clone();
            for (i, &c) in abar.iter().enumerate() {
                full[i] += c;
            }
            let num_t = conditional_output(ch, px, t, &full, &[])?;
            for (yi, y) in ch.outputs(k).iter().enumerate() {
                let w = w_b * w_abar * cond_k_b[yi];
                if w == 0.0 {
                    continue;
                }
                let v = match ch.output_index(t, *y) {
                    None => 0.0,
                    Some(ti) => log_ratio(num_t[ti], den_t_b[ti]),
                };
                raw.push((v, w));
            }
        }
    }
    Ok(DensityPmf::from_atoms(raw))
}

/// `I_k(X_[s]; Y_k | X_{[s+1:k]})` in nats.
pub fn conditional_mi(ch: &ChannelFamily, px: &InputDistribution, s: usize, k: usize) -> Result<f64> {
    if !(1 <= s && s <= k && k <= ch.max_users()) {
        return Err(Error::InvalidParameter(format!("need 1 <= s <= k, got ({s}, {k})")));
    }
    let mut total = 0.0;
    for (b, w_b) in multiset_weights(px, (k - s) as u32) {
        if w_b == 0.0 {
            continue;
        }
        let den = conditional_output(ch, px, k, &b, &[])?;
        for (a, w_a) in multiset_weights(px, s as u32) {
            if w_a == 0.0 {
                continue;
            }
            let mut full = b.clone();
            for (i, &c) in a.iter().enumerate() {
                full[i] += c;
            }
            let row = ch.kernel_row(&full)?;
            for (yi, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    total += w_b * w_a * p * (p / den[yi]).ln();
                }
            }
        }
    }
    Ok(total)
}

/// `I_k(X_[s]; Y_k | X_{[s+1:k]} = 0^{k-s})` in nats (silent conditioning).
pub fn conditional_mi_silent(
    ch: &ChannelFamily,
    px: &InputDistribution,
    s: usize,
    k: usize,
) -> Result<f64> {
    if !(1 <= s && s <= k && k <= ch.max_users()) {
        return Err(Error::InvalidParameter(format!("need 1 <= s <= k, got ({s}, {k})")));
    }
    let mut zeros = vec![0u32; ch.input_size()];
    zeros[0] = (k - s) as u32;
    let den = conditional_output(ch, px, k, &zeros, &[])?;
    let mut total = 0.0;
    for (a, w_a) in multiset_weights(px, s as u32) {
        if w_a == 0.0 {
            continue;
        }
        let mut full = zeros.clone();
        for (i, &c) in a.iter().enumerate() {
            full[i] += c;
        }
        let row = ch.kernel_row(&full)?;
        for (yi, &p) in row.iter().enumerate() {
            if p > 0.0 {
                total += w_a * p * (p / den[yi]).ln();
            }
        }
    }
    Ok(total)
}

/// `I(X_[s]; X_{[s+1:t]} | Y_k)` in nats — the conditional dependence
/// between two input blocks given the output. Zero exactly when the
/// blocks are conditionally independent.
pub fn block_dependence(
    ch: &ChannelFamily,
    px: &InputDistribution,
    s: usize,
    t: usize,
    k: usize,
) -> Result<f64> {
    if !(1 <= s && s < t && t <= k && k <= ch.max_users()) {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= s < t <= k, got ({s}, {t}, {k})"
        )));
    }
    let a_sets = multiset_weights(px, s as u32);
    let b_sets = multiset_weights(px, (t - s) as u32);
    let n_y = ch.outputs(k).len();
    // joint[a][b][y]
    let mut joint = vec![vec![vec![0.0; n_y]; b_sets.len()]; a_sets.len()];
    for (ai, (a, w_a)) in a_sets.iter().enumerate() {
        for (bi, (b, w_b)) in b_sets.iter().enumerate() {
            let w = w_a * w_b;
            if w == 0.0 {
                continue;
            }
            let mut full = a.clone();
            for (i, &c) in b.iter().enumerate() {
                full[i] += c;
            }
            let cond = conditional_output(ch, px, k, &full, &[])?;
            for (yi, &p) in cond.iter().enumerate() {
                joint[ai][bi][yi] = w * p;
            }
        }
    }
    let mut total = 0.0;
    for yi in 0..n_y {
        let p_y: f64 = joint.iter().flat_map(|row| row.iter().map(|b| b[yi])).sum();
        if p_y == 0.0 {
            continue;
        }
        let p_a: Vec<f64> = joint
            .iter()
            .map(|row| row.iter().map(|b| b[yi]).sum::<f64>())
            .collect();
        let p_b: Vec<f64> = (0..b_sets.len())
            .map(|bi| joint.iter().map(|row| row[bi][yi]).sum::<f64>())
            .collect();
        for (ai, row) in joint.iter().enumerate() {
            for (bi, b) in row.iter().enumerate() {
                let p = b[yi];
                if p > 0.0 {
                    total += p * (p * p_y / (p_a[ai] * p_b[bi])).ln();
                }
            }
        }
    }
    Ok(total)
}

/// `I_k(X_i; Y_k | X_[i-1])` in nats — one chain-rule component.
pub fn chain_mi(ch: &ChannelFamily, px: &InputDistribution, i: usize, k: usize) -> Result<f64> {
    if !(1 <= i && i <= k && k <= ch.max_users()) {
        return Err(Error::InvalidParameter(format!("need 1 <= i <= k, got ({i}, {k})")));
    }
    let mut total = 0.0;
    for (c, w_c) in multiset_weights(px, (i - 1) as u32) {
        if w_c == 0.0 {
            continue;
        }
        let den = conditional_output(ch, px, k, &c, &[])?;
        for x in 0..ch.input_size() {
            let p_x = px.prob(x);
            if p_x == 0.0 {
                continue;
            }
            let num = conditional_output(ch, px, k, &c, &[x])?;
            for (yi, &p) in num.iter().enumerate() {
                if p > 0.0 {
                    total += w_c * p_x * p * (p / den[yi]).ln();
                }
            }
        }
    }
    Ok(total)
}

/// Kullback-Leibler divergence between two pmfs on the same support,
/// in nats; `+inf` when `p` puts mass where `q` does not.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&pi, &qi) in p.iter().zip(q.iter()) {
        if pi > 0.0 {
            if qi == 0.0 {
                return f64::INFINITY;
            }
            d += pi * (pi / qi).ln();
        }
    }
    d
}

/// Kolmogorov-Smirnov distance between two pmfs given over the same
/// ordered support.
pub fn ks_distance(p: &[f64], q: &[f64]) -> f64 {
    let mut cp = 0.0;
    let mut cq = 0.0;
    let mut d = 0.0f64;
    for (&pi, &qi) in p.iter().zip(q.iter()) {
        cp += pi;
        cq += qi;
        d = d.max((cp - cq).abs());
    }
    d
}

#[derive(Debug, Clone, Serialize)]
pub struct PerUserStats {
    pub users: usize,
    /// `I_k` in nats.
    pub mutual_information: f64,
    /// `V_k` in nats².
    pub dispersion: f64,
    /// `T_k = E|ı_k - I_k|³` in nats³.
    pub third_abs_moment: f64,
    /// `B_k = 6 T_k / V_k^{3/2}`.
    pub berry_esseen: f64,
    /// `D(P_{Y_0} || P_{Y_k})` in nats.
    pub divergence_from_silence: f64,
    /// `sup_x |F_k(x) - F_0(x)|`.
    pub ks_from_silence: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairStat {
    pub s: usize,
    pub k: usize,
    pub nats: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TripleStat {
    pub s: usize,
    pub t: usize,
    pub k: usize,
    pub nats: f64,
}

/// Exact per-family statistics: per-k moments plus the conditional,
/// marginal, and cross expectations indexed by user splits.
#[derive(Debug, Clone, Serialize)]
pub struct ChannelStatistics {
    pub per_user: Vec<PerUserStats>,
    /// `I_k(X_[s]; Y_k | X_{[s+1:k]})` for `1 <= s <= k`.
    pub conditional_mi: Vec<PairStat>,
    /// `I_k(X_i; Y_k | X_[i-1])` for `1 <= i <= k` (field `s` holds `i`).
    pub chain_mi: Vec<PairStat>,
    /// `I_k(X_[s]; Y_k)` for `1 <= s <= k`.
    pub marginal_mi: Vec<PairStat>,
    /// `E[ı_t(X_[s]; Y_k)]` for `1 <= s <= t <= k`; may be `-inf`.
    pub cross_expectation: Vec<TripleStat>,
}

impl ChannelStatistics {
    /// Computes every statistic by exact enumeration.
    pub fn compute(ch: &ChannelFamily, px: &InputDistribution) -> Result<Self> {
        if px.len() != ch.input_size() {
            return Err(Error::InvalidParameter(
                "input distribution size does not match alphabet".into(),
            ));
        }
        if ch.enumeration_cost() > 1e7 {
            return Err(Error::TableOverflow(format!(
                "enumeration cost {:.3e} exceeds 1e7 entries",
                ch.enumeration_cost()
            )));
        }
        let k_max = ch.max_users();
        let p0 = ch.silence_output().to_vec();
        let per_user: Vec<PerUserStats> = (1..=k_max)
            .into_par_iter()
            .map(|k| -> Result<PerUserStats> {
                let pmf = joint_density_pmf(ch, px, k, k, k)?;
                let i_k = pmf.mean();
                let v_k = pmf.variance();
                let t_k = pmf.third_abs_central_moment();
                let b_k = if v_k > 0.0 { 6.0 * t_k / v_k.powf(1.5) } else { f64::INFINITY };
                let pk = ch.output_marginal(px, k)?;
                // embed on the level-K alphabet for cross-level comparison
                let n_full = ch.outputs(k_max).len();
                let mut pk_full = vec![0.0; n_full];
                for (yi, y) in ch.outputs(k).iter().enumerate() {
                    pk_full[ch.output_index(k_max, *y).unwrap()] = pk[yi];
                }
                let mut p0_full = vec![0.0; n_full];
                for (yi, y) in ch.outputs(0).iter().enumerate() {
                    p0_full[ch.output_index(k_max, *y).unwrap()] = p0[yi];
                }
                Ok(PerUserStats {
                    users: k,
                    mutual_information: i_k,
                    dispersion: v_k,
                    third_abs_moment: t_k,
                    berry_esseen: b_k,
                    divergence_from_silence: kl_divergence(&p0_full, &pk_full),
                    ks_from_silence: ks_distance(&pk_full, &p0_full),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut conditional = Vec::new();
        let mut chain = Vec::new();
        let mut marginal = Vec::new();
        let mut cross = Vec::new();
        for k in 1..=k_max {
            for s in 1..=k {
                conditional.push(PairStat {
                    s,
                    k,
                    nats: conditional_mi(ch, px, s, k)?,
                });
                chain.push(PairStat {
                    s,
                    k,
                    nats: chain_mi(ch, px, s, k)?,
                });
                marginal.push(PairStat {
                    s,
                    k,
                    nats: joint_density_pmf(ch, px, s, k, k)?.mean(),
                });
                for t in s..=k {
                    cross.push(TripleStat {
                        s,
                        t,
                        k,
                        nats: joint_density_pmf(ch, px, s, t, k)?.mean(),
                    });
                }
            }
        }
        Ok(Self {
            per_user,
            conditional_mi: conditional,
            chain_mi: chain,
            marginal_mi: marginal,
            cross_expectation: cross,
        })
    }

    pub fn max_users(&self) -> usize {
        self.per_user.len()
    }

    pub fn per_user(&self, k: usize) -> &PerUserStats {
        &self.per_user[k - 1]
    }

    /// `I_k` in nats.
    pub fn mutual_information(&self, k: usize) -> f64 {
        self.per_user(k).mutual_information
    }

    /// `V_k` in nats².
    pub fn dispersion(&self, k: usize) -> f64 {
        self.per_user(k).dispersion
    }

    pub fn berry_esseen(&self, k: usize) -> f64 {
        self.per_user(k).berry_esseen
    }

    pub fn conditional_mi(&self, s: usize, k: usize) -> f64 {
        self.conditional_mi
            .iter()
            .find(|p| p.s == s && p.k == k)
            .map(|p| p.nats)
            .unwrap_or(f64::NAN)
    }

    pub fn chain_mi(&self, i: usize, k: usize) -> f64 {
        self.chain_mi
            .iter()
            .find(|p| p.s == i && p.k == k)
            .map(|p| p.nats)
            .unwrap_or(f64::NAN)
    }

    pub fn marginal_mi(&self, s: usize, k: usize) -> f64 {
        self.marginal_mi
            .iter()
            .find(|p| p.s == s && p.k == k)
            .map(|p| p.nats)
            .unwrap_or(f64::NAN)
    }

    /// `E[ı_t(X_[s]; Y_k)]` in nats; `-inf` possible.
    pub fn cross_expectation(&self, s: usize, t: usize, k: usize) -> f64 {
        self.cross_expectation
            .iter()
            .find(|p| p.s == s && p.t == t && p.k == k)
            .map(|p| p.nats)
            .unwrap_or(f64::NAN)
    }

    pub fn divergence_from_silence(&self, k: usize) -> f64 {
        self.per_user(k).divergence_from_silence
    }

    pub fn ks_from_silence(&self, k: usize) -> f64 {
        self.per_user(k).ks_from_silence
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderingCheck {
    /// Index tuple; unused slots hold 0.
    pub indices: [usize; 3],
    pub margin: f64,
    pub pass: bool,
}

/// Numerical verification of the mutual-information orderings a valid
/// family must satisfy. Strict inequalities are asserted with margin
/// `> 1e-9` nats; weak ones at tolerance `-1e-12`. Failures are reported,
/// not raised.
#[derive(Debug, Clone, Serialize)]
pub struct OrderingReport {
    /// `I_s / s > I_k / k` for `s < k`: per-user rate degrades as
    /// transmitters join.
    pub per_user_rate: Vec<OrderingCheck>,
    /// `(1/s) I_k(X_[s]; Y_k | X_{[s+1:k]}) > I_k / k` for `s < k`.
    pub conditional_rate: Vec<OrderingCheck>,
    /// `E[ı_t(X_[s]; Y_k)] <= I_k(X_[s]; Y_k)` for `s <= t < k` (weak).
    pub cross_expectation_weak: Vec<OrderingCheck>,
    /// `I_k(X_[s]; Y_k) < I_t(X_[s]; Y_t)` for `s <= t < k` (strict).
    pub cross_expectation_strict: Vec<OrderingCheck>,
    /// `I_k(X_i; Y_k | X_[i-1])` strictly increasing in `i`.
    pub chain_increasing: Vec<OrderingCheck>,
}

pub const STRICT_MARGIN: f64 = 1e-9;
const WEAK_TOL: f64 = 1e-12;

impl OrderingReport {
    pub fn all_pass(&self) -> bool {
        self.groups().iter().all(|g| g.iter().all(|c| c.pass))
    }

    pub fn min_strict_margin(&self) -> f64 {
        [
            &self.per_user_rate,
            &self.conditional_rate,
            &self.cross_expectation_strict,
            &self.chain_increasing,
        ]
        .iter()
        .flat_map(|g| g.iter().map(|c| c.margin))
        .fold(f64::INFINITY, f64::min)
    }

    fn groups(&self) -> [&Vec<OrderingCheck>; 5] {
        [
            &self.per_user_rate,
            &self.conditional_rate,
            &self.cross_expectation_weak,
            &self.cross_expectation_strict,
            &self.chain_increasing,
        ]
    }
}

/// Checks every ordering over the whole family.
pub fn verify_orderings(ch: &ChannelFamily, px: &InputDistribution) -> Result<OrderingReport> {
    let stats = ChannelStatistics::compute(ch, px)?;
    Ok(verify_orderings_from_stats(&stats))
}

pub fn verify_orderings_from_stats(stats: &ChannelStatistics) -> OrderingReport {
    let k_max = stats.max_users();
    let strict = |margin: f64| OrderingCheck {
        indices: [0, 0, 0],
        margin,
        pass: margin > STRICT_MARGIN,
    };

    let mut per_user_rate = Vec::new();
    for k in 2..=k_max {
        for s in 1..k {
            let margin = stats.mutual_information(s) / s as f64
                - stats.mutual_information(k) / k as f64;
            let mut c = strict(margin);
            c.indices = [s, k, 0];
            per_user_rate.push(c);
        }
    }

    let mut conditional_rate = Vec::new();
    for k in 2..=k_max {
        for s in 1..k {
            let margin =
                stats.conditional_mi(s, k) / s as f64 - stats.mutual_information(k) / k as f64;
            let mut c = strict(margin);
            c.indices = [s, k, 0];
            conditional_rate.push(c);
        }
    }

    let mut cross_weak = Vec::new();
    let mut cross_strict = Vec::new();
    for k in 2..=k_max {
        for t in 1..k {
            for s in 1..=t {
                let e = stats.cross_expectation(s, t, k);
                let weak_margin = stats.marginal_mi(s, k) - e; // +inf when e = -inf
                cross_weak.push(OrderingCheck {
                    indices: [s, t, k],
                    margin: weak_margin,
                    pass: weak_margin >= -WEAK_TOL,
                });
                let strict_margin = stats.marginal_mi(s, t) - stats.marginal_mi(s, k);
                let mut c = strict(strict_margin);
                c.indices = [s, t, k];
                cross_strict.push(c);
            }
        }
    }

    let mut chain_increasing = Vec::new();
    for k in 2..=k_max {
        for i in 1..k {
            let margin = stats.chain_mi(i + 1, k) - stats.chain_mi(i, k);
            let mut c = strict(margin);
            c.indices = [i, k, 0];
            chain_increasing.push(c);
        }
    }

    OrderingReport {
        per_user_rate,
        conditional_rate,
        cross_expectation_weak: cross_weak,
        cross_expectation_strict: cross_strict,
        chain_increasing,
    }
}
