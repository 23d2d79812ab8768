//! Cheap sequence descriptors for a scan order and the weighted proxy score.
//!
//! Distance metrics are in layout units; step-based metrics count visits.
//! Normalisation is min-max over the strategies evaluated together in one
//! run, so the two `*_candidate` composites only mean something inside a
//! [`ProxyMatrix`].

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::alignment;
use crate::error::{Error, Result};
use crate::track_bench::{jump_sequence, HeatField, ScanOrder, TrackLayout};

pub const PROXY_JUMP_MEAN: &str = "proxy_jump_mean";
pub const PROXY_JUMP_MIN: &str = "proxy_jump_min";
pub const NEIGHBOUR_GAP_MEAN: &str = "neighbour_gap_mean";
pub const ALL_WINDOW_DISPERSION_MEAN: &str = "all_window_dispersion_mean";
pub const EARLY_WINDOW_PAIRWISE_DISTANCE_MEAN: &str = "early_window_pairwise_distance_mean";
pub const EDGE_FIRST_RATIO: &str = "edge_first_ratio";
pub const HOT_CLUSTER_SCORE: &str = "hot_cluster_score";
pub const SYMMETRY_SCORE: &str = "symmetry_score";
pub const THERMAL_MEMORY_PEAK: &str = "thermal_memory_peak";
pub const PROXY_STRESS_RISK_CANDIDATE: &str = "proxy_stress_risk_candidate";
pub const PROXY_DISTORTION_RISK_CANDIDATE: &str = "proxy_distortion_risk_candidate";

/// Every metric id, in report order.
pub const METRIC_IDS: [&str; 11] = [
    PROXY_JUMP_MEAN,
    PROXY_JUMP_MIN,
    NEIGHBOUR_GAP_MEAN,
    HOT_CLUSTER_SCORE,
    SYMMETRY_SCORE,
    THERMAL_MEMORY_PEAK,
    ALL_WINDOW_DISPERSION_MEAN,
    EARLY_WINDOW_PAIRWISE_DISTANCE_MEAN,
    EDGE_FIRST_RATIO,
    PROXY_STRESS_RISK_CANDIDATE,
    PROXY_DISTORTION_RISK_CANDIDATE,
];

/// Descriptor family. `V1` holds the path/jump and heat descriptors, `V2`
/// the windowed, boundary and composite-candidate descriptors. `Score` tags
/// the weighted scalar proxy score when it is compared alongside them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricGroup {
    V1,
    V2,
    Score,
}

pub fn metric_group(id: &str) -> Option<MetricGroup> {
    match id {
        PROXY_JUMP_MEAN | PROXY_JUMP_MIN | NEIGHBOUR_GAP_MEAN | HOT_CLUSTER_SCORE
        | SYMMETRY_SCORE | THERMAL_MEMORY_PEAK => Some(MetricGroup::V1),
        ALL_WINDOW_DISPERSION_MEAN
        | EARLY_WINDOW_PAIRWISE_DISTANCE_MEAN
        | EDGE_FIRST_RATIO
        | PROXY_STRESS_RISK_CANDIDATE
        | PROXY_DISTORTION_RISK_CANDIDATE => Some(MetricGroup::V2),
        _ => None,
    }
}

/// Candidate composites have no established definition and are reported as
/// experimental.
pub fn is_experimental(id: &str) -> bool {
    matches!(
        id,
        PROXY_STRESS_RISK_CANDIDATE | PROXY_DISTORTION_RISK_CANDIDATE
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProxyConfig {
    /// Number of consecutive visits in a dispersion window.
    pub dispersion_window: usize,
    pub hot_cluster_decay: f64,
    /// Deposit width in units of pitch.
    pub hot_cluster_width: f64,
    pub thermal_memory_decay: f64,
    pub thermal_memory_width: f64,
}

impl Default for ProxyConfig {
    fn default() -> Self {
        ProxyConfig {
            dispersion_window: 4,
            hot_cluster_decay: 0.7,
            hot_cluster_width: 2.0,
            thermal_memory_decay: 0.9,
            thermal_memory_width: 2.0,
        }
    }
}

impl ProxyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dispersion_window < 2 {
            return Err(Error::invalid("dispersion_window must be at least 2"));
        }
        for (name, decay) in [
            ("hot_cluster_decay", self.hot_cluster_decay),
            ("thermal_memory_decay", self.thermal_memory_decay),
        ] {
            if !(decay > 0.0 && decay <= 1.0) {
                return Err(Error::invalid(format!(
                    "{name} must be in (0, 1], got {decay}"
                )));
            }
        }
        for (name, width) in [
            ("hot_cluster_width", self.hot_cluster_width),
            ("thermal_memory_width", self.thermal_memory_width),
        ] {
            if !(width.is_finite() && width > 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be positive, got {width}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProxyVector {
    values: BTreeMap<String, f64>,
}

impl ProxyVector {
    pub fn get(&self, metric: &str) -> Option<f64> {
        self.values.get(metric).copied()
    }

    pub fn values(&self) -> &BTreeMap<String, f64> {
        &self.values
    }

    pub fn from_values(values: BTreeMap<String, f64>) -> Self {
        ProxyVector { values }
    }

    fn set(&mut self, metric: &str, value: f64) {
        self.values.insert(metric.to_string(), value);
    }
}

/// Per-metric min/max over one evaluated strategy set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRange {
    pub min: f64,
    pub max: f64,
}

/// Relative spread at or below which a computed metric counts as constant.
pub const DEGENERATE_RELATIVE_SPREAD: f64 = 1e-9;

impl MetricRange {
    pub fn is_degenerate(&self) -> bool {
        self.max - self.min <= DEGENERATE_RELATIVE_SPREAD * self.min.abs().max(self.max.abs())
    }

    /// Min-max scaling into `[0, 1]`; a degenerate range maps to 0.
    pub fn normalize(&self, value: f64) -> f64 {
        if self.is_degenerate() {
            0.0
        } else {
            ((value - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormStats {
    ranges: BTreeMap<String, MetricRange>,
}

impl NormStats {
    pub fn from_vectors<'a>(vectors: impl IntoIterator<Item = &'a ProxyVector>) -> Self {
        let mut ranges: BTreeMap<String, MetricRange> = BTreeMap::new();
        for v in vectors {
            for (k, &x) in &v.values {
                ranges
                    .entry(k.clone())
                    .and_modify(|r| {
                        r.min = r.min.min(x);
                        r.max = r.max.max(x);
                    })
                    .or_insert(MetricRange { min: x, max: x });
            }
        }
        NormStats { ranges }
    }

    pub fn get(&self, metric: &str) -> Option<MetricRange> {
        self.ranges.get(metric).copied()
    }

    pub fn ranges(&self) -> &BTreeMap<String, MetricRange> {
        &self.ranges
    }

    pub fn degenerate_metrics(&self) -> Vec<&str> {
        self.ranges
            .iter()
            .filter(|(_, r)| r.is_degenerate())
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

/// Proxy weighting coefficients, keyed by metric id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProxyWeights(pub BTreeMap<String, f64>);

impl ProxyWeights {
    pub fn single(metric: &str, weight: f64) -> Self {
        ProxyWeights(BTreeMap::from([(metric.to_string(), weight)]))
    }

    pub fn validate(&self) -> Result<()> {
        for (k, &w) in &self.0 {
            if metric_group(k).is_none() {
                return Err(Error::invalid(format!(
                    "unknown proxy metric '{k}' in weights"
                )));
            }
            if !w.is_finite() {
                return Err(Error::invalid(format!("weight for '{k}' is not finite")));
            }
        }
        Ok(())
    }

    /// Parses `metric=weight[,metric=weight...]`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("expected metric=weight, got '{part}'")))?;
            let w: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad weight '{v}' for '{k}'")))?;
            map.insert(k.trim().to_string(), w);
        }
        let weights = ProxyWeights(map);
        weights.validate()?;
        Ok(weights)
    }
}

/// `sum_k alpha_k * normalized(p_k)`.
pub fn proxy_score(p: &ProxyVector, w: &ProxyWeights, stats: &NormStats) -> Result<f64> {
    let mut total = 0.0;
    for (metric, &alpha) in &w.0 {
        let value = p.get(metric).ok_or_else(|| {
            Error::invalid(format!("metric '{metric}' missing from proxy vector"))
        })?;
        let range = stats
            .get(metric)
            .ok_or_else(|| Error::invalid(format!("no normalisation range for '{metric}'")))?;
        total += alpha * range.normalize(value);
    }
    Ok(total)
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn mean_pairwise_distance(xs: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            total += (xs[i] - xs[j]).abs();
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        total / pairs as f64
    }
}

/// Mean over sliding windows of `window` consecutive visit positions of the
/// mean pairwise distance inside each window. Sequences shorter than the
/// window form a single window; fewer than two points give 0.
fn windowed_dispersion(positions: &[f64], window: usize) -> f64 {
    let w = window.min(positions.len());
    if w < 2 {
        return 0.0;
    }
    let per_window: Vec<f64> = positions.windows(w).map(mean_pairwise_distance).collect();
    mean(&per_window)
}

fn heat_peak(order: &ScanOrder, layout: &TrackLayout, decay: f64, width: f64) -> f64 {
    let mut field = HeatField::new(layout, decay, width);
    let mut peak = 0.0f64;
    for &track in &order.order {
        field.deposit(track);
        peak = peak.max(field.peak());
        field.cool();
    }
    peak
}

/// Descriptors that depend on one scan order only.
fn base_metrics(order: &ScanOrder, layout: &TrackLayout, cfg: &ProxyConfig) -> Result<ProxyVector> {
    layout.validate()?;
    cfg.validate()?;
    let n = layout.track_count;
    if order.len() != n {
        return Err(Error::invalid(format!(
            "{}: order length {} does not match {n} tracks",
            order.strategy_id,
            order.len()
        )));
    }

    let jumps = jump_sequence(order, layout);
    let steps = order.visit_steps();
    let visit_positions: Vec<f64> = order.order.iter().map(|&t| layout.position(t)).collect();
    let early = n.div_ceil(4);
    let band = n.div_ceil(8);

    let gaps: Vec<f64> = steps
        .windows(2)
        .map(|w| w[0].abs_diff(w[1]) as f64)
        .collect();
    let edge_hits = order.order[..early]
        .iter()
        .filter(|&&t| t < band || t >= n - band)
        .count();
    let mirrored: Vec<f64> = (0..n).map(|i| steps[n - 1 - i] as f64).collect();
    let steps_f: Vec<f64> = steps.iter().map(|&s| s as f64).collect();
    let symmetry = alignment::pearson(&steps_f, &mirrored)?;

    let mut v = ProxyVector::default();
    v.set(PROXY_JUMP_MEAN, mean(&jumps));
    v.set(
        PROXY_JUMP_MIN,
        jumps.iter().copied().fold(f64::INFINITY, f64::min),
    );
    v.set(NEIGHBOUR_GAP_MEAN, mean(&gaps));
    v.set(
        ALL_WINDOW_DISPERSION_MEAN,
        windowed_dispersion(&visit_positions, cfg.dispersion_window),
    );
    v.set(
        EARLY_WINDOW_PAIRWISE_DISTANCE_MEAN,
        windowed_dispersion(&visit_positions[..early], cfg.dispersion_window),
    );
    v.set(EDGE_FIRST_RATIO, edge_hits as f64 / early as f64);
    v.set(
        HOT_CLUSTER_SCORE,
        heat_peak(order, layout, cfg.hot_cluster_decay, cfg.hot_cluster_width),
    );
    v.set(SYMMETRY_SCORE, symmetry);
    v.set(
        THERMAL_MEMORY_PEAK,
        heat_peak(
            order,
            layout,
            cfg.thermal_memory_decay,
            cfg.thermal_memory_width,
        ),
    );
    Ok(v)
}

fn fill_candidates(vectors: &mut [ProxyVector]) {
    let stats = NormStats::from_vectors(vectors.iter());
    let norm = |v: &ProxyVector, id: &str| {
        stats
            .get(id)
            .map_or(0.0, |r| r.normalize(v.get(id).unwrap_or(0.0)))
    };
    let composites: Vec<(f64, f64)> = vectors
        .iter()
        .map(|v| {
            let stress = 0.5 * norm(v, ALL_WINDOW_DISPERSION_MEAN) + 0.5 * norm(v, PROXY_JUMP_MEAN);
            let distortion = 1.0 - norm(v, NEIGHBOUR_GAP_MEAN);
            (stress, distortion)
        })
        .collect();
    for (v, (stress, distortion)) in vectors.iter_mut().zip(composites) {
        v.set(PROXY_STRESS_RISK_CANDIDATE, stress);
        v.set(PROXY_DISTORTION_RISK_CANDIDATE, distortion);
    }
}

/// Full descriptor vector for a single order.
///
/// The candidate composites are normalised against this order alone, so they
/// collapse to constants; use [`proxy_matrix`] to compare strategies.
pub fn proxy_vector(
    order: &ScanOrder,
    layout: &TrackLayout,
    cfg: &ProxyConfig,
) -> Result<ProxyVector> {
    let mut v = [base_metrics(order, layout, cfg)?];
    fill_candidates(&mut v);
    let [v] = v;
    Ok(v)
}

/// Raw proxy vectors for a strategy set plus the ranges used to normalise them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyMatrix {
    /// Strategy ids in evaluation order.
    pub strategy_ids: Vec<String>,
    pub vectors: BTreeMap<String, ProxyVector>,
    pub normalization: NormStats,
}

impl ProxyMatrix {
    pub fn from_vectors(rows: Vec<(String, ProxyVector)>) -> Result<Self> {
        let mut vectors = BTreeMap::new();
        let mut ids = Vec::with_capacity(rows.len());
        for (id, v) in rows {
            if vectors.insert(id.clone(), v).is_some() {
                return Err(Error::invalid(format!(
                    "duplicate strategy id '{id}' in proxy matrix"
                )));
            }
            ids.push(id);
        }
        let normalization = NormStats::from_vectors(vectors.values());
        Ok(ProxyMatrix {
            strategy_ids: ids,
            vectors,
            normalization,
        })
    }

    /// Metric ids present in every row, in report order first.
    pub fn metric_ids(&self) -> Vec<String> {
        let Some(first) = self.vectors.values().next() else {
            return Vec::new();
        };
        let mut ids: Vec<String> = METRIC_IDS
            .iter()
            .filter(|m| first.get(m).is_some())
            .map(|m| m.to_string())
            .collect();
        for k in first.values().keys() {
            if !ids.contains(k) {
                ids.push(k.clone());
            }
        }
        ids.retain(|m| self.vectors.values().all(|v| v.get(m).is_some()));
        ids
    }

    pub fn column(&self, metric: &str, ids: &[String]) -> Option<Vec<f64>> {
        ids.iter()
            .map(|id| self.vectors.get(id).and_then(|v| v.get(metric)))
            .collect()
    }

    pub fn scores(&self, w: &ProxyWeights) -> Result<BTreeMap<String, f64>> {
        self.vectors
            .iter()
            .map(|(id, v)| Ok((id.clone(), proxy_score(v, w, &self.normalization)?)))
            .collect()
    }
}

pub fn proxy_matrix(
    orders: &[ScanOrder],
    layout: &TrackLayout,
    cfg: &ProxyConfig,
) -> Result<ProxyMatrix> {
    let mut vectors = orders
        .iter()
        .map(|o| base_metrics(o, layout, cfg))
        .collect::<Result<Vec<_>>>()?;
    fill_candidates(&mut vectors);
    ProxyMatrix::from_vectors(
        orders
            .iter()
            .map(|o| o.strategy_id.clone())
            .zip(vectors)
            .collect(),
    )
}

fn csv_err(e: csv::Error) -> Error {
    Error::invalid(format!("csv write failed: {e}"))
}

/// Raw (un-normalised) proxy matrix: one row per strategy, one column per metric.
pub fn write_proxy_csv<W: Write>(m: &ProxyMatrix, out: W) -> Result<()> {
    let metrics = m.metric_ids();
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["strategy_id".to_string()];
    header.extend(metrics.iter().cloned());
    wtr.write_record(&header).map_err(csv_err)?;
    for id in &m.strategy_ids {
        let v = &m.vectors[id];
        let mut row = vec![id.clone()];
        row.extend(
            metrics
                .iter()
                .map(|k| crate::report::fmt_sig(v.get(k).unwrap_or(f64::NAN))),
        );
        wtr.write_record(&row).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv output>", e))
}

pub fn write_norm_csv<W: Write>(m: &ProxyMatrix, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["metric", "min", "max"])
        .map_err(csv_err)?;
    for metric in m.metric_ids() {
        if let Some(r) = m.normalization.get(&metric) {
            wtr.write_record([
                metric,
                crate::report::fmt_sig(r.min),
                crate::report::fmt_sig(r.max),
            ])
            .map_err(csv_err)?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<csv output>", e))
}
