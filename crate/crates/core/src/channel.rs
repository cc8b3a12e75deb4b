//! Finite-alphabet random-access channel families.
//!
//! A family holds one memoryless kernel per active-transmitter count
//! `k = 0..=K` over a common input alphabet whose index-0 symbol denotes
//! silence. Kernels are keyed by the *multiset* of input symbols (a
//! per-symbol count vector), which encodes permutation invariance
//! structurally instead of validating it. Reducibility — a `k`-user
//! channel with silent users equals the smaller-user channel — is
//! checked entrywise at tolerance `1e-12` for every pair `s < k`.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::infodensity;

/// Absolute tolerance for structural identities (row sums, reducibility).
pub const STRUCT_TOL: f64 = 1e-12;

/// A channel output symbol. Numeric values order naturally; the erasure
/// symbol sits strictly above every numeric output, which fixes the
/// real-line embedding used by CDF-based statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutputSymbol {
    Value(i64),
    Erasure,
}

impl PartialOrd for OutputSymbol {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OutputSymbol {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use OutputSymbol::*;
        match (self, other) {
            (Value(a), Value(b)) => a.cmp(b),
            (Value(_), Erasure) => std::cmp::Ordering::Less,
            (Erasure, Value(_)) => std::cmp::Ordering::Greater,
            (Erasure, Erasure) => std::cmp::Ordering::Equal,
        }
    }
}

impl fmt::Display for OutputSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputSymbol::Value(v) => write!(f, "{v}"),
            OutputSymbol::Erasure => write!(f, "e"),
        }
    }
}

impl Serialize for OutputSymbol {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            OutputSymbol::Value(v) => serializer.serialize_i64(*v),
            OutputSymbol::Erasure => serializer.serialize_str("e"),
        }
    }
}

struct OutputSymbolVisitor;

impl Visitor<'_> for OutputSymbolVisitor {
    type Value = OutputSymbol;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("an integer output value or the string \"e\"")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<OutputSymbol, E> {
        Ok(OutputSymbol::Value(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<OutputSymbol, E> {
        Ok(OutputSymbol::Value(v as i64))
    }

    fn visit_str<E: de::Error>(self, s: &str) -> std::result::Result<OutputSymbol, E> {
        if s == "e" {
            Ok(OutputSymbol::Erasure)
        } else {
            Err(E::custom(format!("unknown output symbol {s:?}")))
        }
    }
}

impl<'de> Deserialize<'de> for OutputSymbol {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_any(OutputSymbolVisitor)
    }
}

/// Single-letter input distribution over the common input alphabet.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputDistribution {
    probs: Vec<f64>,
}

impl InputDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("empty input distribution".into()));
        }
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidParameter(
                "input probabilities must be nonnegative".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > STRUCT_TOL {
            return Err(Error::InvalidParameter(format!(
                "input probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Two-symbol distribution with `P(X = 1) = p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "bernoulli parameter {p} outside [0, 1]"
            )));
        }
        Ok(Self {
            probs: vec![1.0 - p, p],
        })
    }

    pub fn prob(&self, symbol: usize) -> f64 {
        self.probs[symbol]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Multiset key: per-input-symbol counts, length `|X|`, summing to `k`.
pub type Multiset = Vec<u32>;

/// All count vectors over `alphabet` symbols summing to `size`.
pub fn multisets(alphabet: usize, size: u32) -> Vec<Multiset> {
    fn fill(out: &mut Vec<Multiset>, cur: &mut Multiset, pos: usize, left: u32, alphabet: usize) {
        if pos == alphabet - 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            fill(out, cur, pos + 1, left - c, alphabet);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    fill(&mut out, &mut Vec::new(), 0, size, alphabet);
    out
}

/// JSON document form of a channel family.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDocument {
    #[serde(rename = "K")]
    pub k_max: usize,
    pub inputs: Vec<String>,
    pub outputs_per_k: Vec<Vec<OutputSymbol>>,
    pub kernel: Vec<KernelRowDocument>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelRowDocument {
    pub k: usize,
    pub multiset: Vec<String>,
    pub probs: Vec<f64>,
}

/// A reducible, permutation-invariant family of memoryless multiple-access
/// kernels indexed by the active-transmitter count.
#[derive(Debug, Clone)]
pub struct ChannelFamily {
    max_users: usize,
    input_labels: Vec<String>,
    outputs: Vec<Vec<OutputSymbol>>,
    kernel: BTreeMap<Multiset, Vec<f64>>,
}

impl ChannelFamily {
    /// Builds and fully validates a family from raw parts. `kernel` must
    /// contain one row per multiset of every size `0..=K`, each row a
    /// probability vector over that size's output alphabet.
    pub fn from_parts(
        input_labels: Vec<String>,
        outputs: Vec<Vec<OutputSymbol>>,
        kernel: BTreeMap<Multiset, Vec<f64>>,
    ) -> Result<Self> {
        if outputs.is_empty() {
            return Err(Error::InvalidChannel("no output alphabets".into()));
        }
        let max_users = outputs.len() - 1;
        if max_users < 1 {
            return Err(Error::InvalidChannel("need K >= 1".into()));
        }
        if input_labels.is_empty() {
            return Err(Error::InvalidChannel("empty input alphabet".into()));
        }
        let ch = Self {
            max_users,
            input_labels,
            outputs,
            kernel,
        };
        ch.validate()?;
        Ok(ch)
    }

    fn validate(&self) -> Result<()> {
        for k in 0..=self.max_users {
            let alpha = &self.outputs[k];
            if alpha.is_empty() {
                return Err(Error::InvalidChannel(format!("empty output alphabet Y_{k}")));
            }
            let mut sorted = alpha.clone();
            sorted.sort();
            sorted.dedup();
            if sorted != *alpha {
                return Err(Error::InvalidChannel(format!(
                    "output alphabet Y_{k} must be sorted and duplicate-free"
                )));
            }
            for m in multisets(self.input_labels.len(), k as u32) {
                let row = self.kernel.get(&m).ok_or_else(|| {
                    Error::InvalidChannel(format!("missing kernel row for multiset {m:?}"))
                })?;
                if row.len() != alpha.len() {
                    return Err(Error::InvalidChannel(format!(
                        "kernel row for {m:?} has {} entries, expected {}",
                        row.len(),
                        alpha.len()
                    )));
                }
                if row.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                    return Err(Error::InvalidChannel(format!(
                        "negative or non-finite probability in row {m:?}"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > STRUCT_TOL {
                    return Err(Error::InvalidChannel(format!(
                        "kernel row for {m:?} sums to {sum}"
                    )));
                }
            }
        }
        // nesting Y_s ⊆ Y_k and reducibility for every s < k
        for k in 1..=self.max_users {
            for s in 0..k {
                for y in &self.outputs[s] {
                    if self.output_index(k, *y).is_none() {
                        return Err(Error::InvalidChannel(format!(
                            "output {y} of Y_{s} missing from Y_{k}"
                        )));
                    }
                }
                for m in multisets(self.input_labels.len(), s as u32) {
                    let row_s = &self.kernel[&m];
                    let mut padded = m.clone();
                    padded[0] += (k - s) as u32;
                    let row_k = self.kernel.get(&padded).ok_or_else(|| {
                        Error::InvalidChannel(format!("missing kernel row for {padded:?}"))
                    })?;
                    for (yi, y) in self.outputs[k].iter().enumerate() {
                        let target = match self.output_index(s, *y) {
                            Some(si) => row_s[si],
                            None => 0.0,
                        };
                        if (row_k[yi] - target).abs() > STRUCT_TOL {
                            return Err(Error::InvalidChannel(format!(
                                "reducibility violated at s={s}, k={k}, multiset {m:?}, output {y}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn max_users(&self) -> usize {
        self.max_users
    }

    pub fn input_size(&self) -> usize {
        self.input_labels.len()
    }

    pub fn input_labels(&self) -> &[String] {
        &self.input_labels
    }

    pub fn outputs(&self, k: usize) -> &[OutputSymbol] {
        &self.outputs[k]
    }

    /// Index of `y` within the ordered alphabet `Y_k`, if present.
    pub fn output_index(&self, k: usize, y: OutputSymbol) -> Option<usize> {
        self.outputs[k].binary_search(&y).ok()
    }

    /// Kernel row for the given input multiset; the user count is the sum
    /// of the counts.
    pub fn kernel_row(&self, multiset: &Multiset) -> Result<&[f64]> {
        self.kernel
            .get(multiset)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::InvalidParameter(format!("no kernel row for {multiset:?}")))
    }

    /// Kernel row looked up from an explicit list of input symbol indices.
    pub fn kernel_row_for(&self, symbols: &[usize]) -> Result<&[f64]> {
        let mut counts = vec![0u32; self.input_labels.len()];
        for &s in symbols {
            if s >= self.input_labels.len() {
                return Err(Error::InvalidParameter(format!("input symbol {s} out of range")));
            }
            counts[s] += 1;
        }
        self.kernel_row(&counts)
    }

    /// Output distribution when no transmitters are active.
    pub fn silence_output(&self) -> &[f64] {
        &self.kernel[&vec![0u32; self.input_labels.len()]]
    }

    /// Marginal output distribution `P_{Y_k}` under i.i.d. inputs `px`.
    pub fn output_marginal(&self, px: &InputDistribution, k: usize) -> Result<Vec<f64>> {
        infodensity::conditional_output(self, px, k, &vec![0u32; 0], &[])
    }

    /// Work estimate for exact enumeration over this family.
    pub(crate) fn enumeration_cost(&self) -> f64 {
        (0..=self.max_users)
            .map(|k| multiset_count(self.input_labels.len(), k) * self.outputs[k].len() as f64)
            .sum()
    }

    pub fn to_document(&self) -> ChannelDocument {
        let kernel = self
            .kernel
            .iter()
            .map(|(m, probs)| {
                let k: u32 = m.iter().sum();
                let mut syms = Vec::new();
                for (i, &c) in m.iter().enumerate() {
                    for _ in 0..c {
                        syms.push(self.input_labels[i].clone());
                    }
                }
                KernelRowDocument {
                    k: k as usize,
                    multiset: syms,
                    probs: probs.clone(),
                }
            })
            .collect();
        ChannelDocument {
            k_max: self.max_users,
            inputs: self.input_labels.clone(),
            outputs_per_k: self.outputs.clone(),
            kernel,
        }
    }

    pub fn from_document(doc: &ChannelDocument) -> Result<Self> {
        if doc.outputs_per_k.len() != doc.k_max + 1 {
            return Err(Error::InvalidChannel(format!(
                "outputs_per_k has {} alphabets, expected K+1 = {}",
                doc.outputs_per_k.len(),
                doc.k_max + 1
            )));
        }
        let mut kernel = BTreeMap::new();
        for row in &doc.kernel {
            let mut counts = vec![0u32; doc.inputs.len()];
            for sym in &row.multiset {
                let idx = doc
                    .inputs
                    .iter()
                    .position(|l| l == sym)
                    .ok_or_else(|| Error::InvalidChannel(format!("unknown input symbol {sym:?}")))?;
                counts[idx] += 1;
            }
            if row.multiset.len() != row.k {
                return Err(Error::InvalidChannel(format!(
                    "kernel row declares k={} but multiset has {} symbols",
                    row.k,
                    row.multiset.len()
                )));
            }
            if kernel.insert(counts, row.probs.clone()).is_some() {
                return Err(Error::InvalidChannel(format!(
                    "duplicate kernel row for multiset {:?}",
                    row.multiset
                )));
            }
        }
        Self::from_parts(doc.inputs.clone(), doc.outputs_per_k.clone(), kernel)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let doc: ChannelDocument = serde_json::from_str(json)?;
        Self::from_document(&doc)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }
}

fn multiset_count(alphabet: usize, size: usize) -> f64 {
    // C(size + alphabet - 1, alphabet - 1)
    let mut c = 1.0f64;
    for i in 1..alphabet {
        c *= (size + i) as f64 / i as f64;
    }
    c
}

/// The adder-erasure RAC: binary inputs, output equals the number of
/// active ones with probability `1 - delta` and the erasure symbol
/// otherwise. `Y_k = {0..k} ∪ {e}` for every `k`.
pub fn make_adder_erasure(max_users: usize, delta: f64) -> Result<ChannelFamily> {
    if max_users < 1 {
        return Err(Error::InvalidParameter("need K >= 1".into()));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!(
            "erasure probability {delta} outside [0, 1]"
        )));
    }
    let input_labels = vec!["0".to_string(), "1".to_string()];
    let mut outputs = Vec::with_capacity(max_users + 1);
    for k in 0..=max_users {
        let mut alpha: Vec<OutputSymbol> = (0..=k as i64).map(OutputSymbol::Value).collect();
        alpha.push(OutputSymbol::Erasure);
        outputs.push(alpha);
    }
    let mut kernel = BTreeMap::new();
    for k in 0..=max_users {
        for m in multisets(2, k as u32) {
            let ones = m[1] as usize;
            let mut row = vec![0.0; k + 2];
            row[ones] = 1.0 - delta;
            row[k + 1] = delta;
            kernel.insert(m, row);
        }
    }
    ChannelFamily::from_parts(input_labels, outputs, kernel)
}

/// A two-user binary family: `Y ∈ {0,1}`, the matched-input column `11`
/// produces 1 with probability `a`, and any column containing a silent
/// input behaves as a binary symmetric channel with crossover `b`.
/// Rows for `k = 1` and `k = 0` follow by reducibility.
pub fn make_binary_example(a: f64, b: f64) -> Result<ChannelFamily> {
    for (name, v) in [("a", a), ("b", b)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!("{name} = {v} outside [0, 1]")));
        }
    }
    let input_labels = vec!["0".to_string(), "1".to_string()];
    let alpha = vec![OutputSymbol::Value(0), OutputSymbol::Value(1)];
    let outputs = vec![alpha.clone(), alpha.clone(), alpha];
    let mut kernel = BTreeMap::new();
    // k = 2 rows by multiset of ones
    kernel.insert(vec![2, 0], vec![1.0 - b, b]); // 00
    kernel.insert(vec![1, 1], vec![b, 1.0 - b]); // 01 / 10
    kernel.insert(vec![0, 2], vec![1.0 - a, a]); // 11
    // k = 1 and k = 0 by reducibility (silent second input)
    kernel.insert(vec![1, 0], vec![1.0 - b, b]);
    kernel.insert(vec![0, 1], vec![b, 1.0 - b]);
    kernel.insert(vec![0, 0], vec![1.0 - b, b]);
    ChannelFamily::from_parts(input_labels, outputs, kernel)
}

/// A family whose output carries no information (single constant output).
/// Useful as a negative control: the interference assumption fails.
pub fn make_constant(max_users: usize) -> Result<ChannelFamily> {
    if max_users < 1 {
        return Err(Error::InvalidParameter("need K >= 1".into()));
    }
    let input_labels = vec!["0".to_string(), "1".to_string()];
    let alpha = vec![OutputSymbol::Value(0)];
    let outputs = vec![alpha; max_users + 1];
    let mut kernel = BTreeMap::new();
    for k in 0..=max_users {
        for m in multisets(2, k as u32) {
            kernel.insert(m, vec![1.0]);
        }
    }
    ChannelFamily::from_parts(input_labels, outputs, kernel)
}

/// Result of checking the structural assumptions under a given input
/// distribution.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    /// Silence is at least as good as an averaged known input, for all
    /// `s <= k`.
    pub friendliness: bool,
    /// Worst-case margin of the friendliness inequality (nats).
    pub friendliness_margin: f64,
    /// Input blocks are conditionally dependent given the output, for
    /// every split and user count.
    pub interference: bool,
    /// Smallest conditional mutual information between input blocks given
    /// the output (nats).
    pub interference_strength: f64,
    /// `min_k sup_x |F_k(x) - F_0(x)|`: worst-case Kolmogorov-Smirnov
    /// separation between active and silent output distributions.
    pub output_separation: f64,
    pub output_separation_ok: bool,
    /// Whether every per-k dispersion is strictly positive.
    pub dispersion_positive: bool,
    pub min_dispersion: f64,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.friendliness && self.interference && self.output_separation_ok && self.dispersion_positive
    }
}

/// Verifies friendliness, interference, output separation, and dispersion
/// positivity for `ch` under i.i.d. inputs `px`.
pub fn check_assumptions(ch: &ChannelFamily, px: &InputDistribution) -> Result<AssumptionReport> {
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

    let mut friendliness_margin = f64::INFINITY;
    for k in 1..=k_max {
        for s in 1..=k {
            let lhs = infodensity::conditional_mi_silent(ch, px, s, k)?;
            let rhs = infodensity::conditional_mi(ch, px, s, k)?;
            friendliness_margin = friendliness_margin.min(lhs - rhs);
        }
    }
    let friendliness = friendliness_margin >= -1e-10;

    let mut interference_strength = f64::INFINITY;
    for k in 1..=k_max {
        for t in 2..=k {
            for s in 1..t {
                let mi = infodensity::block_dependence(ch, px, s, t, k)?;
                interference_strength = interference_strength.min(mi);
            }
        }
    }
    if k_max < 2 {
        interference_strength = f64::NAN;
    }
    let interference = interference_strength.is_nan() || interference_strength > 1e-9;

    let f0 = cumulative(ch.silence_output());
    let mut output_separation = f64::INFINITY;
    for k in 1..=k_max {
        let pk = ch.output_marginal(px, k)?;
        // embed Y_k's cdf over Y_K's ordered alphabet
        let mut full = vec![0.0; ch.outputs(k_max).len()];
        for (yi, y) in ch.outputs(k).iter().enumerate() {
            full[ch.output_index(k_max, *y).unwrap()] = pk[yi];
        }
        let fk = cumulative(&full);
        let mut f0_full = vec![0.0; ch.outputs(k_max).len()];
        for (yi, y) in ch.outputs(0).iter().enumerate() {
            f0_full[ch.output_index(k_max, *y).unwrap()] = ch.silence_output()[yi];
        }
        let f0k = cumulative(&f0_full);
        let dist = fk
            .iter()
            .zip(f0k.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        output_separation = output_separation.min(dist);
    }
    let _ = f0;
    let output_separation_ok = output_separation > STRUCT_TOL;

    let mut min_dispersion = f64::INFINITY;
    for k in 1..=k_max {
        let pmf = infodensity::joint_density_pmf(ch, px, k, k, k)?;
        min_dispersion = min_dispersion.min(pmf.variance());
    }
    let dispersion_positive = min_dispersion > STRUCT_TOL;

    Ok(AssumptionReport {
        friendliness,
        friendliness_margin,
        interference,
        interference_strength,
        output_separation,
        output_separation_ok,
        dispersion_positive,
        min_dispersion,
    })
}

fn cumulative(pmf: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    pmf.iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn adder_noiseless_single_user_is_deterministic() {
        let ch = make_adder_erasure(2, 0.0).unwrap();
        let row = ch.kernel_row(&vec![0, 1]).unwrap();
        let idx = ch.output_index(1, OutputSymbol::Value(1)).unwrap();
        assert_abs_diff_eq!(row[idx], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn adder_two_ones_splits_mass_with_erasure() {
        let ch = make_adder_erasure(2, 0.2).unwrap();
        let row = ch.kernel_row(&vec![0, 2]).unwrap();
        assert_abs_diff_eq!(row[ch.output_index(2, OutputSymbol::Value(2)).unwrap()], 0.8);
        assert_abs_diff_eq!(row[ch.output_index(2, OutputSymbol::Erasure).unwrap()], 0.2);
    }

    #[test]
    fn adder_all_silent_reduces_to_silence_output() {
        let ch = make_adder_erasure(3, 0.2).unwrap();
        let row = ch.kernel_row(&vec![3, 0]).unwrap();
        assert_abs_diff_eq!(row[ch.output_index(3, OutputSymbol::Value(0)).unwrap()], 0.8);
        assert_abs_diff_eq!(row[ch.output_index(3, OutputSymbol::Erasure).unwrap()], 0.2);
        let y0 = ch.silence_output();
        assert_abs_diff_eq!(y0[0], 0.8);
        assert_abs_diff_eq!(y0[1], 0.2);
    }

    #[test]
    fn adder_rejects_bad_parameters() {
        assert!(make_adder_erasure(0, 0.2).is_err());
        assert!(make_adder_erasure(2, -0.1).is_err());
        assert!(make_adder_erasure(2, 1.5).is_err());
    }

    #[test]
    fn binary_example_matches_transition_table() {
        let ch = make_binary_example(0.7, 0.11).unwrap();
        let row11 = ch.kernel_row(&vec![0, 2]).unwrap();
        assert_abs_diff_eq!(row11[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(row11[1], 0.7, epsilon = 1e-15);
        // k = 1 reduces to BSC(b)
        let row1 = ch.kernel_row(&vec![0, 1]).unwrap();
        assert_abs_diff_eq!(row1[0], 0.11, epsilon = 1e-15);
        assert_abs_diff_eq!(row1[1], 0.89, epsilon = 1e-15);
    }

    #[test]
    fn binary_example_symmetric_when_a_equals_b() {
        // with a = b the output is the mod-2 input sum through a
        // symmetric flip: matched columns coincide and the mixed column
        // is their output swap
        let b = 0.11;
        let ch = make_binary_example(b, b).unwrap();
        let row11 = ch.kernel_row(&vec![0, 2]).unwrap();
        let row00 = ch.kernel_row(&vec![2, 0]).unwrap();
        let row01 = ch.kernel_row(&vec![1, 1]).unwrap();
        assert_abs_diff_eq!(row11[0], 1.0 - b, epsilon = 1e-15);
        assert_abs_diff_eq!(row11[1], b, epsilon = 1e-15);
        assert_eq!(row11, row00);
        assert_abs_diff_eq!(row01[0], row00[1], epsilon = 1e-15);
        assert_abs_diff_eq!(row01[1], row00[0], epsilon = 1e-15);
    }

    #[test]
    fn binary_example_rejects_out_of_range() {
        assert!(make_binary_example(1.2, 0.1).is_err());
        assert!(make_binary_example(0.5, -0.1).is_err());
    }

    #[test]
    fn assumptions_hold_for_adder() {
        let ch = make_adder_erasure(3, 0.2).unwrap();
        let px = InputDistribution::bernoulli(0.5).unwrap();
        let report = check_assumptions(&ch, &px).unwrap();
        assert!(report.all_hold(), "{report:?}");
        assert_abs_diff_eq!(report.output_separation, 0.4, epsilon = 1e-12);
    }

    #[test]
    fn assumptions_hold_for_binary_example() {
        let ch = make_binary_example(0.11, 0.11).unwrap();
        let px = InputDistribution::bernoulli(0.5).unwrap();
        let report = check_assumptions(&ch, &px).unwrap();
        assert!(report.all_hold(), "{report:?}");
    }

    #[test]
    fn constant_family_fails_interference() {
        let ch = make_constant(2).unwrap();
        let px = InputDistribution::bernoulli(0.5).unwrap();
        let report = check_assumptions(&ch, &px).unwrap();
        assert!(!report.interference);
        assert!(!report.output_separation_ok);
    }

    #[test]
    fn json_round_trip_preserves_kernel() {
        let ch = make_adder_erasure(2, 0.2).unwrap();
        let json = ch.to_json().unwrap();
        let back = ChannelFamily::from_json(&json).unwrap();
        for m in multisets(2, 2) {
            let a = ch.kernel_row(&m).unwrap();
            let b = back.kernel_row(&m).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn marginal_two_ways_agree() {
        // direct sum at level k vs reducibility from level K
        let ch = make_adder_erasure(3, 0.2).unwrap();
        let px = InputDistribution::bernoulli(0.4).unwrap();
        for k in 1..=2usize {
            let direct = ch.output_marginal(&px, k).unwrap();
            // via K: condition K - k extra users on silence
            let mut padded_px = px.clone();
            let _ = &mut padded_px;
            let mut via = vec![0.0; ch.outputs(k).len()];
            for m in multisets(2, k as u32) {
                let w = crate::infodensity::multiset_weight(&px, &m);
                let mut full = m.clone();
                full[0] += (ch.max_users() - k) as u32;
                let row = ch.kernel_row(&full).unwrap();
                for (yi, y) in ch.outputs(k).iter().enumerate() {
                    via[yi] += w * row[ch.output_index(ch.max_users(), *y).unwrap()];
                }
            }
            for (a, b) in direct.iter().zip(via.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn ordering_places_erasure_last() {
        assert!(OutputSymbol::Value(100) < OutputSymbol::Erasure);
        assert!(OutputSymbol::Value(-1) < OutputSymbol::Value(0));
    }
}
