//! Experiment configuration: JSON config files with flag overrides.
//!
//! A config file carries the same keys as the command-line flags; any
//! flag given explicitly wins over the file value. Unknown fields are
//! rejected so typos fail loudly.

use std::path::Path;

use serde::Deserialize;

use raclab_core::channel::{make_adder_erasure, make_binary_example, ChannelFamily};
use raclab_core::{Error, InputDistribution, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum EpsSpec {
    Scalar(f64),
    PerUser(Vec<f64>),
}

impl EpsSpec {
    /// Expands to one budget per user count `0..=k_max`.
    pub fn expand(&self, k_max: usize) -> Result<Vec<f64>> {
        let eps = match self {
            EpsSpec::Scalar(e) => vec![*e; k_max + 1],
            EpsSpec::PerUser(v) => v.clone(),
        };
        if eps.len() != k_max + 1 {
            return Err(Error::InvalidParameter(format!(
                "need {} error budgets (eps_0..eps_{k_max}), got {}",
                k_max + 1,
                eps.len()
            )));
        }
        for &e in &eps {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::InvalidParameter(format!("error budget {e} outside (0, 1)")));
            }
        }
        Ok(eps)
    }
}

/// File form of an experiment. Field names match the long flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub task: Option<String>,
    pub channel: Option<String>,
    pub delta: Option<f64>,
    #[serde(rename = "K")]
    pub max_users: Option<usize>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub channel_file: Option<String>,
    pub px: Option<f64>,
    pub logm: Option<f64>,
    pub eps: Option<EpsSpec>,
    pub grid: Option<f64>,
    pub kmax: Option<u64>,
    pub n1: Option<Vec<u64>>,
    pub n: Option<Vec<u64>>,
    #[serde(rename = "M")]
    pub m: Option<u64>,
    pub k: Option<usize>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub test: Option<String>,
    pub n0: Option<u64>,
    pub eps0: Option<f64>,
    pub gamma0: Option<f64>,
    pub exact: Option<bool>,
    pub threads: Option<usize>,
    pub out: Option<String>,
    pub json: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: FileConfig = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    pub fn check_task(&self, expected: &str) -> Result<()> {
        if let Some(task) = &self.task {
            if task != expected {
                return Err(Error::InvalidParameter(format!(
                    "config file declares task {task:?} but the {expected:?} subcommand was invoked"
                )));
            }
        }
        Ok(())
    }
}

/// Channel selection shared by most subcommands.
#[derive(Debug, Clone)]
pub struct ChannelChoice {
    pub ch: ChannelFamily,
    pub px: InputDistribution,
    pub label: String,
}

pub fn build_channel(
    kind: Option<&str>,
    delta: Option<f64>,
    max_users: Option<usize>,
    a: Option<f64>,
    b: Option<f64>,
    file: Option<&str>,
    px: Option<f64>,
) -> Result<ChannelChoice> {
    let kind = kind.unwrap_or(if file.is_some() { "file" } else { "adder" });
    let (ch, label) = match kind {
        "adder" => {
            let delta = delta.unwrap_or(0.2);
            let k = max_users.unwrap_or(2);
            (make_adder_erasure(k, delta)?, format!("adder(delta={delta}, K={k})"))
        }
        "binary" => {
            let a = a.ok_or_else(|| Error::InvalidParameter("binary channel needs --a".into()))?;
            let b = b.ok_or_else(|| Error::InvalidParameter("binary channel needs --b".into()))?;
            (make_binary_example(a, b)?, format!("binary(a={a}, b={b})"))
        }
        "file" => {
            let path = file
                .ok_or_else(|| Error::InvalidParameter("file channel needs --channel-file".into()))?;
            let text = std::fs::read_to_string(path)?;
            (ChannelFamily::from_json(&text)?, format!("file({path})"))
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown channel kind {other:?} (adder | binary | file)"
            )))
        }
    };
    let p = px.unwrap_or(0.5);
    if ch.input_size() != 2 {
        return Err(Error::InvalidParameter(
            "built-in input distributions cover binary alphabets; supply a 2-symbol family".into(),
        ));
    }
    Ok(ChannelChoice {
        ch,
        px: InputDistribution::bernoulli(p)?,
        label,
    })
}

pub fn parse_count(s: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(f) if f.is_finite() && f >= 0.0 && f == f.trunc() && f <= u64::MAX as f64 => Ok(f as u64),
        _ => Err(format!("{s:?} is not a nonnegative integer count")),
    }
}

/// Comma-separated float list as a single argument value.
#[derive(Debug, Clone)]
pub struct F64List(pub Vec<f64>);

pub fn parse_f64_list(s: &str) -> std::result::Result<F64List, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<std::result::Result<Vec<f64>, String>>()
        .map(F64List)
}

/// Comma-separated count list as a single argument value.
#[derive(Debug, Clone)]
pub struct U64List(pub Vec<u64>);

pub fn parse_u64_list(s: &str) -> std::result::Result<U64List, String> {
    s.split(',')
        .map(|t| parse_count(t.trim()))
        .collect::<std::result::Result<Vec<u64>, String>>()
        .map(U64List)
}
