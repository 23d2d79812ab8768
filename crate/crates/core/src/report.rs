//! The run report and its canonical JSON encoding.
//!
//! Canonical means: object keys sorted, every float rounded to six
//! significant digits, two-space indentation, trailing newline. Identical
//! inputs give identical bytes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::alignment::AlignmentReport;
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::proxy_eval::{MetricGroup, NormStats, ProxyVector, ProxyWeights};
use crate::ranking::{LabelSet, RankingResult, RobustnessMatrix, TradeoffPoint};
use crate::track_bench::ScanOrder;

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const SCORE_CAVEAT: &str = "Composite scores use min-max normalisation over the evaluated set with the configured \
weights; the reference score column that accompanies the bundled labels is not reproduced because its normalisation \
and weights are unknown. Rankings, not score values, are the comparable quantity.";

/// Rounds to six significant digits. Zero and non-finite values pass through.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

/// Six-significant-digit decimal text, as used in CSV output.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return String::new();
    }
    let r = round_sig(x);
    // normalise -0 so equal values print identically
    if r == 0.0 {
        "0".to_string()
    } else {
        r.to_string()
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                let r = round_sig(x);
                *v = serde_json::Number::from_f64(if r == 0.0 { 0.0 } else { r })
                    .map_or(Value::Null, Value::Number);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)
        .map_err(|e| Error::invalid(format!("serialisation failed: {e}")))?;
    round_value(&mut v);
    let mut text = serde_json::to_string_pretty(&v)
        .map_err(|e| Error::invalid(format!("serialisation failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxySection {
    /// Raw descriptor values per strategy.
    pub metrics: BTreeMap<String, ProxyVector>,
    pub normalization: NormStats,
    pub groups: BTreeMap<String, MetricGroup>,
    pub experimental: Vec<String>,
    /// Metrics constant over the strategy set.
    pub degenerate: Vec<String>,
    pub weights: ProxyWeights,
    /// Weighted scalar proxy score per strategy.
    pub scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingSection {
    pub baseline: RankingResult,
    /// Label columns that were constant over the set.
    pub degenerate: Vec<String>,
    pub tradeoff: Vec<TradeoffPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    /// `bundled`, `labels_csv` or `field_tables`.
    pub label_source: String,
    /// SHA-256 of every input file, keyed by file name.
    pub input_digests: BTreeMap<String, String>,
    pub disclaimers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub strategies: Vec<ScanOrder>,
    pub proxy: ProxySection,
    pub labels: LabelSet,
    pub ranking: RankingSection,
    pub robustness: RobustnessMatrix,
    pub alignment: AlignmentReport,
    pub meta: Meta,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        to_canonical_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("report does not parse: {e}")))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}
