//! End-to-end Monte Carlo simulation of one coding epoch.
//!
//! Every transmitter encodes with the same randomly drawn codebook. The
//! receiver applies the zero-transmitter test after `n_0` symbols, then
//! at each decode time `n_t` scores every ordered `t`-tuple of messages
//! by its accumulated information density and decodes on the first
//! threshold crossing. Ties decode uniformly at random and count as
//! errors, as do epochs in which two transmitters drew the same message.
//!
//! All channel output symbols for the epoch are drawn up front and
//! truncated at each decision time; the law is identical to drawing
//! on demand and keeps replay deterministic.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{multisets, ChannelFamily, InputDistribution};
use crate::design::{CodeDesign, ZeroTestKind};
use crate::detect::{
    hoeffding_statistic_from_counts, ks_statistic_from_counts, marginal_on_full_alphabet,
    wilson_interval,
};
use crate::error::{Error, Result};
use crate::infodensity::conditional_output;
use crate::seeding::{stream, CumulativeSampler, DOMAIN_SIM};

/// Identical-encoding codebook: `m` codewords of `n_total` input symbols
/// drawn i.i.d. from the design input distribution.
#[derive(Debug, Clone)]
pub struct Codebook {
    m: usize,
    n_total: usize,
    symbols: Vec<usize>,
}

impl Codebook {
    pub fn generate<R: Rng>(px: &InputDistribution, m: usize, n_total: usize, rng: &mut R) -> Self {
        let sampler = CumulativeSampler::new(px.probs());
        let symbols = (0..m * n_total).map(|_| sampler.sample(rng)).collect();
        Self { m, n_total, symbols }
    }

    pub fn message_count(&self) -> usize {
        self.m
    }

    pub fn span(&self) -> usize {
        self.n_total
    }

    #[inline]
    fn symbol(&self, w: usize, i: usize) -> usize {
        self.symbols[w * self.n_total + i]
    }
}

/// Why an epoch failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    /// The zero test accepted silence while transmitters were active.
    ZeroFalseStop,
    /// No tuple crossed the threshold at the true decode time (whatever
    /// happened afterwards), or silence was wrongly rejected and nothing
    /// ever decoded.
    Outage,
    /// Some tuple crossed the threshold before the true decode time.
    EarlyDecode,
    /// A wrong tuple (or an ambiguous tie) crossed at or after the true
    /// decode time.
    Confusion,
    /// Two transmitters drew the same message; counted as an error by
    /// convention.
    Repetition,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpochOutcome {
    pub true_k: usize,
    /// Index `t` of the decision time `n_t` at which the epoch ended,
    /// `None` when nothing decoded by `n_K`.
    pub decoded_at: Option<usize>,
    /// Decoded message multiset (sorted, 1-based); empty for a silence
    /// decision.
    pub decoded: Option<Vec<u64>>,
    pub correct: bool,
    pub category: Option<ErrorCategory>,
    /// One acknowledgment bit per reached decision time.
    pub feedback_bits: u32,
}

/// Precomputed per-design scoring tables, reusable across epochs.
pub struct SimContext<'a> {
    ch: &'a ChannelFamily,
    design: &'a CodeDesign,
    m: usize,
    /// dens[t-1][multiset row][y index in Y_K]
    dens: Vec<Vec<Vec<f64>>>,
    /// pair_row[t-1][a * A + b] -> multiset row (t = 2); triple uses A³.
    combo_rows: Vec<Vec<usize>>,
    /// Per level k: output sampler per multiset row, plus Y_k -> Y_K map.
    level_samplers: Vec<Vec<CumulativeSampler>>,
    level_maps: Vec<Vec<usize>>,
    null_full: Vec<f64>,
    null_cum: Vec<f64>,
}

impl<'a> SimContext<'a> {
    pub fn new(
        ch: &'a ChannelFamily,
        px: &InputDistribution,
        design: &'a CodeDesign,
    ) -> Result<Self> {
        design.validate()?;
        let k_max = design.max_users();
        if k_max > ch.max_users() {
            return Err(Error::InvalidParameter("design exceeds family".into()));
        }
        if k_max > 3 {
            return Err(Error::BudgetExceeded(
                "exhaustive decoding supports at most 3 simultaneous users".into(),
            ));
        }
        let m = design
            .m
            .exact
            .ok_or_else(|| Error::InvalidParameter("simulation needs an exact message count".into()))?
            as usize;
        let mut tuples = 0f64;
        for t in 1..=k_max {
            let mut c = 1.0;
            for i in 0..t {
                c = c * (m - i) as f64 / (i + 1) as f64;
            }
            tuples += c;
        }
        if tuples > 2e6 {
            return Err(Error::BudgetExceeded(format!(
                "{tuples:.0} candidate tuples exceed the decoding budget"
            )));
        }

        let a = ch.input_size();
        let y_full = ch.outputs(ch.max_users()).len();
        let mut dens = Vec::new();
        let mut combo_rows = Vec::new();
        for t in 1..=k_max {
            let sets = multisets(a, t as u32);
            let marg_t = conditional_output(ch, px, t, &[], &[])?;
            let mut table = vec![vec![0.0f64; y_full]; sets.len()];
            for (row, ms) in sets.iter().enumerate() {
                let kr = ch.kernel_row(ms)?;
                for (yk, y) in ch.outputs(ch.max_users()).iter().enumerate() {
                    table[row][yk] = match ch.output_index(t, *y) {
                        None => 0.0,
                        Some(ti) => {
                            let num = kr[ti];
                            let den = marg_t[ti];
                            if num > 0.0 && den > 0.0 {
                                (num / den).ln()
                            } else if num == 0.0 && den > 0.0 {
                                f64::NEG_INFINITY
                            } else {
                                0.0
                            }
                        }
                    };
                }
            }
            dens.push(table);
            // dense symbol-combination -> multiset row lookup
            let mut rows = vec![0usize; a.pow(t as u32)];
            let index_of = |counts: &Vec<u32>| sets.iter().position(|s| s == counts).unwrap();
            match t {
                1 => {
                    for (s, row) in rows.iter_mut().enumerate() {
                        let mut c = vec![0u32; a];
                        c[s] += 1;
                        *row = index_of(&c);
                    }
                }
                2 => {
                    for s1 in 0..a {
                        for s2 in 0..a {
                            let mut c = vec![0u32; a];
                            c[s1] += 1;
                            c[s2] += 1;
                            rows[s1 * a + s2] = index_of(&c);
                        }
                    }
                }
                3 => {
                    for s1 in 0..a {
                        for s2 in 0..a {
                            for s3 in 0..a {
                                let mut c = vec![0u32; a];
                                c[s1] += 1;
                                c[s2] += 1;
                                c[s3] += 1;
                                rows[(s1 * a + s2) * a + s3] = index_of(&c);
                            }
                        }
                    }
                }
                _ => unreachable!(),
            }
            combo_rows.push(rows);
        }

        let mut level_samplers = Vec::new();
        let mut level_maps = Vec::new();
        for k in 0..=k_max {
            let sets = multisets(a, k as u32);
            let samplers = sets
                .iter()
                .map(|ms| CumulativeSampler::new(ch.kernel_row(ms).unwrap()))
                .collect();
            level_samplers.push(samplers);
            level_maps.push(
                ch.outputs(k)
                    .iter()
                    .map(|y| ch.output_index(ch.max_users(), *y).unwrap())
                    .collect(),
            );
        }

        let null_full = marginal_on_full_alphabet(ch, px, 0)?;
        let mut acc = 0.0;
        let null_cum = null_full
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self {
            ch,
            design,
            m,
            dens,
            combo_rows,
            level_samplers,
            level_maps,
            null_full,
            null_cum,
        })
    }

    fn zero_test_accepts(&self, counts: &[u64]) -> bool {
        let stat = match self.design.zero_test.kind {
            ZeroTestKind::Hoeffding => hoeffding_statistic_from_counts(counts, &self.null_full),
            ZeroTestKind::Ks => ks_statistic_from_counts(counts, &self.null_cum),
        };
        stat <= self.design.zero_test.gamma0
    }
}

/// Runs one epoch with `k` active transmitters sending `messages`
/// (1-based). Randomness is consumed in a fixed order: channel outputs
/// first, then one tie-break draw per ambiguous decision.
pub fn run_epoch<R: Rng>(
    ctx: &SimContext,
    codebook: &Codebook,
    k: usize,
    messages: &[u64],
    rng: &mut R,
) -> Result<EpochOutcome> {
    let design = ctx.design;
    let k_max = design.max_users();
    if k > k_max || messages.len() != k {
        return Err(Error::InvalidParameter(format!(
            "k = {k} with {} messages does not fit the design",
            messages.len()
        )));
    }
    if codebook.message_count() != ctx.m || codebook.span() < design.n[k_max] as usize {
        return Err(Error::InvalidParameter("codebook does not match design".into()));
    }
    for &w in messages {
        if w < 1 || w > ctx.m as u64 {
            return Err(Error::InvalidParameter(format!("message {w} out of range")));
        }
    }
    let mut sent: Vec<u64> = messages.to_vec();
    sent.sort_unstable();
    let is_repetition = sent.windows(2).any(|w| w[0] == w[1]);

    // channel outputs over the full span, recorded as level-K indices
    let n_total = design.n[k_max] as usize;
    let a = ctx.ch.input_size();
    let senders: Vec<usize> = messages.iter().map(|&w| (w - 1) as usize).collect();
    let mut y = Vec::with_capacity(n_total);
    for i in 0..n_total {
        let row = match k {
            0 => 0,
            1 => ctx.combo_rows[0][codebook.symbol(senders[0], i)],
            2 => {
                ctx.combo_rows[1]
                    [codebook.symbol(senders[0], i) * a + codebook.symbol(senders[1], i)]
            }
            3 => {
                ctx.combo_rows[2][(codebook.symbol(senders[0], i) * a
                    + codebook.symbol(senders[1], i))
                    * a
                    + codebook.symbol(senders[2], i)]
            }
            _ => unreachable!(),
        };
        let yi = ctx.level_samplers[k][row].sample(rng);
        y.push(ctx.level_maps[k][yi]);
    }

    // zero-transmitter decision at n_0
    let n0 = design.n[0] as usize;
    let y_alpha = ctx.null_full.len();
    let mut counts = vec![0u64; y_alpha];
    for &yi in &y[..n0] {
        counts[yi] += 1;
    }
    let mut decoded_at: Option<usize> = None;
    let mut decoded: Option<Vec<u64>> = None;
    let mut ambiguous = false;
    if ctx.zero_test_accepts(&counts) {
        decoded_at = Some(0);
        decoded = Some(Vec::new());
    } else {
        'times: for t in 1..=k_max {
            let n_t = design.n[t] as usize;
            let threshold = design.log_gamma[t];
            let table = &ctx.dens[t - 1];
            let rows = &ctx.combo_rows[t - 1];
            let mut hits: Vec<Vec<u64>> = Vec::new();
            let score = |row_of: &dyn Fn(usize) -> usize| -> f64 {
                let mut s = 0.0;
                for (i, &yi) in y[..n_t].iter().enumerate() {
                    let v = table[row_of(i)][yi];
                    if v == f64::NEG_INFINITY {
                        return f64::NEG_INFINITY;
                    }
                    s += v;
                }
                s
            };
            match t {
                1 => {
                    for w in 0..ctx.m {
                        let s = score(&|i| rows[codebook.symbol(w, i)]);
                        if s > threshold {
                            hits.push(vec![w as u64 + 1]);
                        }
                    }
                }
                2 => {
                    for w1 in 0..ctx.m {
                        for w2 in (w1 + 1)..ctx.m {
                            let s = score(&|i| {
                                rows[codebook.symbol(w1, i) * a + codebook.symbol(w2, i)]
                            });
                            if s > threshold {
                                hits.push(vec![w1 as u64 + 1, w2 as u64 + 1]);
                            }
                        }
                    }
                }
                3 => {
                    for w1 in 0..ctx.m {
                        for w2 in (w1 + 1)..ctx.m {
                            for w3 in (w2 + 1)..ctx.m {
                                let s = score(&|i| {
                                    rows[(codebook.symbol(w1, i) * a + codebook.symbol(w2, i)) * a
                                        + codebook.symbol(w3, i)]
                                });
                                if s > threshold {
                                    hits.push(vec![w1 as u64 + 1, w2 as u64 + 1, w3 as u64 + 1]);
                                }
                            }
                        }
                    }
                }
                _ => unreachable!(),
            }
            if !hits.is_empty() {
                ambiguous = hits.len() > 1;
                let pick = if ambiguous {
                    rng.random_range(0..hits.len())
                } else {
                    0
                };
                decoded_at = Some(t);
                decoded = Some(hits.swap_remove(pick));
                break 'times;
            }
        }
    }

    let feedback_bits = (decoded_at.unwrap_or(k_max) + 1) as u32;
    let (correct, category) = if is_repetition {
        (false, Some(ErrorCategory::Repetition))
    } else if k == 0 {
        match decoded_at {
            Some(0) => (true, None),
            Some(_) => (false, Some(ErrorCategory::Confusion)),
            None => (false, Some(ErrorCategory::Outage)),
        }
    } else {
        match decoded_at {
            Some(0) => (false, Some(ErrorCategory::ZeroFalseStop)),
            Some(t) if t < k => (false, Some(ErrorCategory::EarlyDecode)),
            Some(t) if t == k => {
                if !ambiguous && decoded.as_deref() == Some(&sent[..]) {
                    (true, None)
                } else {
                    (false, Some(ErrorCategory::Confusion))
                }
            }
            // reached the true time without a hit; later decodes do not
            // repair the miss
            _ => (false, Some(ErrorCategory::Outage)),
        }
    };

    Ok(EpochOutcome {
        true_k: k,
        decoded_at,
        decoded,
        correct,
        category,
        feedback_bits,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodebookMode {
    /// A fresh codebook per epoch: models per-epoch common randomness.
    FreshPerEpoch,
    /// One codebook shared across epochs, for variance studies.
    Frozen,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CategoryCounts {
    pub zero_false_stop: u64,
    pub outage: u64,
    pub early_decode: u64,
    pub confusion: u64,
    pub repetition: u64,
}

impl CategoryCounts {
    fn add(&mut self, c: ErrorCategory) {
        match c {
            ErrorCategory::ZeroFalseStop => self.zero_false_stop += 1,
            ErrorCategory::Outage => self.outage += 1,
            ErrorCategory::EarlyDecode => self.early_decode += 1,
            ErrorCategory::Confusion => self.confusion += 1,
            ErrorCategory::Repetition => self.repetition += 1,
        }
    }

    fn merge(&mut self, o: &CategoryCounts) {
        self.zero_false_stop += o.zero_false_stop;
        self.outage += o.outage;
        self.early_decode += o.early_decode;
        self.confusion += o.confusion;
        self.repetition += o.repetition;
    }

    pub fn total(&self) -> u64 {
        self.zero_false_stop + self.outage + self.early_decode + self.confusion + self.repetition
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationResult {
    pub k: usize,
    pub trials: u64,
    pub seed: u64,
    pub correct: u64,
    pub errors: u64,
    pub categories: CategoryCounts,
    pub error_rate: f64,
    pub std_error: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub mean_feedback_bits: f64,
    /// Epochs ending at each decision time `n_0..n_K`, then never.
    pub decode_time_counts: Vec<u64>,
}

/// Runs `trials` independent epochs with uniform messages and reports
/// empirical error rates. Epoch `e` of the `k`-user experiment owns the
/// simulation stream `(term = k, index = e)`; in fresh-codebook mode the
/// epoch stream draws codebook, messages, channel noise, and tie-breaks
/// in that order.
pub fn estimate_error_rates(
    ch: &ChannelFamily,
    px: &InputDistribution,
    design: &CodeDesign,
    k: usize,
    trials: u64,
    seed: u64,
    mode: CodebookMode,
) -> Result<SimulationResult> {
    if trials < 1_000 {
        return Err(Error::InvalidParameter("need at least 1e3 epochs".into()));
    }
    let ctx = SimContext::new(ch, px, design)?;
    let k_max = design.max_users();
    let span = design.n[k_max] as usize;
    let frozen = match mode {
        CodebookMode::Frozen => {
            let mut rng = stream(seed, DOMAIN_SIM, 0xFFFF, 0);
            Some(Codebook::generate(px, ctx.m, span, &mut rng))
        }
        CodebookMode::FreshPerEpoch => None,
    };

    struct Acc {
        correct: u64,
        categories: CategoryCounts,
        feedback: u64,
        decode_times: Vec<u64>,
    }
    let zero = || Acc {
        correct: 0,
        categories: CategoryCounts::default(),
        feedback: 0,
        decode_times: vec![0u64; k_max + 2],
    };
    let acc = (0..trials)
        .into_par_iter()
        .map(|e| {
            let mut rng = stream(seed, DOMAIN_SIM, k as u64, e);
            let codebook = match &frozen {
                Some(cb) => cb.clone(),
                None => Codebook::generate(px, ctx.m, span, &mut rng),
            };
            let messages: Vec<u64> =
                (0..k).map(|_| rng.random_range(1..=ctx.m as u64)).collect();
            run_epoch(&ctx, &codebook, k, &messages, &mut rng).expect("validated inputs")
        })
        .fold(zero, |mut acc, outcome| {
            if outcome.correct {
                acc.correct += 1;
            } else {
                acc.categories.add(outcome.category.unwrap());
            }
            acc.feedback += outcome.feedback_bits as u64;
            let slot = outcome.decoded_at.unwrap_or(k_max + 1);
            acc.decode_times[slot] += 1;
            acc
        })
        .reduce(zero, |mut a, b| {
            a.correct += b.correct;
            a.categories.merge(&b.categories);
            a.feedback += b.feedback;
            for (x, y) in a.decode_times.iter_mut().zip(b.decode_times.iter()) {
                *x += y;
            }
            a
        });

    let errors = trials - acc.correct;
    let p = errors as f64 / trials as f64;
    let (lo, hi) = wilson_interval(errors, trials, 1.96);
    Ok(SimulationResult {
        k,
        trials,
        seed,
        correct: acc.correct,
        errors,
        categories: acc.categories,
        error_rate: p,
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        wilson_low: lo,
        wilson_high: hi,
        mean_feedback_bits: acc.feedback as f64 / trials as f64,
        decode_time_counts: acc.decode_times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::make_adder_erasure;
    use crate::design::{
        choose_parameters, CodeDesign, LambdaSlack, MessageCount, TauMode, ZeroTestSpec,
    };
    use crate::infodensity::ChannelStatistics;

    fn plain_design(ch: &ChannelFamily, px: &InputDistribution, m: u64) -> CodeDesign {
        let stats = ChannelStatistics::compute(ch, px).unwrap();
        choose_parameters(
            ch,
            px,
            &stats,
            MessageCount::from_count(m).unwrap(),
            &[0.05, 0.05, 0.05],
            &[60, 120],
            ZeroTestKind::Ks,
            &crate::design::ThresholdMode::NormalApprox,
        )
        .unwrap()
    }

    #[test]
    fn zero_users_decided_by_zero_test() {
        let ch = make_adder_erasure(2, 0.2).unwrap();
        let px = InputDistribution::bernoulli(0.5).unwrap();
        let design = plain_design(&ch, &px, 8);
        let ctx = SimContext::new(&ch, &px, &design).unwrap();
        let mut rng = stream(3, DOMAIN_SIM, 0, 0);
        let cb = Codebook::generate(&px, 8, design.n[2] as usize, &mut rng);
        let mut accepted = 0;
        for e in 0..200u64 {
            let mut rng = stream(3, DOMAIN_SIM, 0, e);
            let out = run_epoch(&ctx, &cb, 0, &[], &mut rng).unwrap();
            assert_eq!(out.correct, out.decoded_at == Some(0));
            if out.correct {
                accepted += 1;
                assert_eq!(out.feedback_bits, 1);
            }
        }
        assert!(accepted > 150, "zero test accepted only {accepted}/200");
    }

    #[test]
    fn noiseless_decode_is_deterministic() {
        // noiseless adder, threshold strictly below the n ln 2 score of
        // the true codeword: decoding must always succeed at n_1
        let ch = make_adder_erasure(2, 0.0).unwrap();
        let px = InputDistribution::bernoulli(0.5).unwrap();
        let n1 = 40u64;
        let ln2 = std::f64::consts::LN_2;
        // zero test with full-length window and zero tolerance: under a
        // noiseless single user it essentially never sees pure silence
        let design = CodeDesign {
            m: MessageCount::from_count(4).unwrap(),
            n: vec![n1, n1, 80],
            epsilon: vec![0.05, 0.1, 0.1],
            log_gamma: vec![f64::NAN, n1 as f64 * ln2 - 0.5, 80.0 * 1.5 * ln2 - 0.5],
            tau: vec![f64::NAN, 0.0, 0.0],
            tau_mode: vec![TauMode::NormalApprox; 3],
            lambda: vec![
                LambdaSlack { s: 1, t: 1, nats: 0.0 },
                LambdaSlack { s: 1, t: 2, nats: 1.0 },
                LambdaSlack { s: 2, t: 2, nats: 0.0 },
            ],
            zero_test: ZeroTestSpec {
                kind: ZeroTestKind::Ks,
                gamma0: 0.0,
            },
        };
        let ctx = SimContext::new(&ch, &px, &design).unwrap();
        for e in 0..100u64 {
            let mut rng = stream(9, DOMAIN_SIM, 1, e);
            let cb = Codebook::generate(&px, 4, design.n[2] as usize, &mut rng);
            let w = rng.random_range(1..=4u64);
            let out = run_epoch(&ctx, &cb, 1, &[w], &mut rng).unwrap();
            // a wrong single codeword accumulates -inf on any mismatch,
            // so only the sent message can cross
            assert!(out.correct, "epoch {e}: {out:?}");
            assert_eq!(out.decoded_at, Some(1));
            assert_eq!(out.decoded.as_deref(), Some(&[w][..]));
            assert_eq!(out.feedback_bits, 2);
        }
    }

    #[test]
    fn repeated_messages_are_flagged() {
        let ch = make_adder_erasure(2, 0.2).unwrap();
        let px = InputDistribution::bernoulli(0.5).unwrap();
        let design = plain_design(&ch, &px, 8);
        let ctx = SimContext::new(&ch, &px, &design).unwrap();
        let mut rng = stream(4, DOMAIN_SIM, 2, 0);
        let cb = Codebook::generate(&px, 8, design.n[2] as usize, &mut rng);
        let out = run_epoch(&ctx, &cb, 2, &[5, 5], &mut rng).unwrap();
        assert!(!out.correct);
        assert_eq!(out.category, Some(ErrorCategory::Repetition));
    }

    #[test]
    fn fully_erased_channel_never_decodes_data() {
        let ch = make_adder_erasure(2, 1.0).unwrap();
        let px = InputDistribution::bernoulli(0.5).unwrap();
        // hand design: the silence law equals every other law, so the
        // zero test accepts almost always and k = 1 epochs must fail
        let design = CodeDesign {
            m: MessageCount::from_count(4).unwrap(),
            n: vec![10, 30, 60],
            epsilon: vec![0.05, 0.1, 0.1],
            log_gamma: vec![f64::NAN, 5.0, 10.0],
            tau: vec![f64::NAN, 0.0, 0.0],
            tau_mode: vec![TauMode::NormalApprox; 3],
            lambda: vec![
                LambdaSlack { s: 1, t: 1, nats: 0.0 },
                LambdaSlack { s: 1, t: 2, nats: 1.0 },
                LambdaSlack { s: 2, t: 2, nats: 0.0 },
            ],
            zero_test: ZeroTestSpec {
                kind: ZeroTestKind::Ks,
                gamma0: 0.3,
            },
        };
        let result =
            estimate_error_rates(&ch, &px, &design, 1, 1_000, 21, CodebookMode::FreshPerEpoch)
                .unwrap();
        assert_eq!(result.errors, result.trials);
        assert_eq!(result.error_rate, 1.0);
    }

    #[test]
    fn single_message_errors_are_stop_or_outage() {
        let ch = make_adder_erasure(2, 0.2).unwrap();
        let px = InputDistribution::bernoulli(0.5).unwrap();
        let stats = ChannelStatistics::compute(&ch, &px).unwrap();
        let design = choose_parameters(
            &ch,
            &px,
            &stats,
            MessageCount::from_count(1).unwrap(),
            &[0.05, 0.05, 0.05],
            &[30, 60],
            ZeroTestKind::Ks,
            &crate::design::ThresholdMode::NormalApprox,
        )
        .unwrap();
        let result =
            estimate_error_rates(&ch, &px, &design, 1, 2_000, 7, CodebookMode::FreshPerEpoch)
                .unwrap();
        assert_eq!(result.categories.confusion, 0);
        assert_eq!(result.categories.early_decode, 0);
        assert_eq!(result.categories.repetition, 0);
        assert_eq!(
            result.categories.zero_false_stop + result.categories.outage,
            result.errors
        );
    }

    #[test]
    fn identical_seeds_reproduce_results() {
        let ch = make_adder_erasure(2, 0.2).unwrap();
        let px = InputDistribution::bernoulli(0.5).unwrap();
        let design = plain_design(&ch, &px, 8);
        let a = estimate_error_rates(&ch, &px, &design, 2, 1_500, 42, CodebookMode::FreshPerEpoch)
            .unwrap();
        let b = estimate_error_rates(&ch, &px, &design, 2, 1_500, 42, CodebookMode::FreshPerEpoch)
            .unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let c = estimate_error_rates(&ch, &px, &design, 2, 1_500, 43, CodebookMode::FreshPerEpoch)
            .unwrap();
        assert_ne!(a.errors, c.errors);
    }

    #[test]
    fn counts_partition_trials_and_feedback_is_consistent() {
        let ch = make_adder_erasure(2, 0.2).unwrap();
        let px = InputDistribution::bernoulli(0.5).unwrap();
        let design = plain_design(&ch, &px, 8);
        let r = estimate_error_rates(&ch, &px, &design, 2, 2_000, 13, CodebookMode::FreshPerEpoch)
            .unwrap();
        assert_eq!(r.correct + r.categories.total(), r.trials);
        assert_eq!(r.decode_time_counts.iter().sum::<u64>(), r.trials);
        // mean feedback = sum over decision slots of (t+1) weighted counts
        let k_max = design.max_users();
        let mut expect = 0.0;
        for (slot, &c) in r.decode_time_counts.iter().enumerate() {
            let bits = if slot <= k_max { slot + 1 } else { k_max + 1 };
            expect += (bits as f64) * c as f64;
        }
        expect /= r.trials as f64;
        assert!((r.mean_feedback_bits - expect).abs() < 1e-12);
        assert!(r.mean_feedback_bits <= (k_max + 1) as f64);
    }

    #[test]
    fn frozen_codebook_is_reused() {
        let ch = make_adder_erasure(2, 0.2).unwrap();
        let px = InputDistribution::bernoulli(0.5).unwrap();
        let design = plain_design(&ch, &px, 8);
        let a =
            estimate_error_rates(&ch, &px, &design, 1, 1_000, 99, CodebookMode::Frozen).unwrap();
        let b =
            estimate_error_rates(&ch, &px, &design, 1, 1_000, 99, CodebookMode::Frozen).unwrap();
        assert_eq!(a.errors, b.errors);
    }
}
