//! Striped track layout and the ten deterministic scan-order generators.
//!
//! Tracks are a 1-D row of stripes at `x_i = origin + i * pitch`. A scan
//! order is a permutation of track indices; every generator here is a pure
//! function of its parameters and the layout, with lowest-index-first
//! tie-breaking throughout.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TRACK_COUNT: usize = 32;
pub const DEFAULT_LAG: usize = 7;
pub const DEFAULT_WINDOW: usize = 4;
pub const DEFAULT_DECAY: f64 = 0.7;
/// Gaussian deposit width in units of pitch.
pub const DEFAULT_DEPOSIT_WIDTH: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackLayout {
    pub track_count: usize,
    pub pitch: f64,
    /// Position of track 0. Only differences of positions matter anywhere
    /// downstream.
    pub origin: f64,
}

impl Default for TrackLayout {
    fn default() -> Self {
        TrackLayout {
            track_count: DEFAULT_TRACK_COUNT,
            pitch: 1.0,
            origin: 0.0,
        }
    }
}

impl TrackLayout {
    pub fn new(track_count: usize, pitch: f64) -> Result<Self> {
        let layout = TrackLayout {
            track_count,
            pitch,
            origin: 0.0,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn with_origin(mut self, origin: f64) -> Self {
        self.origin = origin;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.track_count < 2 {
            return Err(Error::invalid(format!(
                "track_count must be at least 2, got {}",
                self.track_count
            )));
        }
        if !(self.pitch.is_finite() && self.pitch > 0.0) {
            return Err(Error::invalid(format!(
                "pitch must be positive and finite, got {}",
                self.pitch
            )));
        }
        if !self.origin.is_finite() {
            return Err(Error::invalid("origin must be finite"));
        }
        Ok(())
    }

    pub fn position(&self, track: usize) -> f64 {
        self.origin + track as f64 * self.pitch
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.track_count).map(|i| self.position(i)).collect()
    }
}

/// A complete scan order: a permutation of `0..track_count`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanOrder {
    pub strategy_id: String,
    pub order: Vec<usize>,
}

impl ScanOrder {
    /// Builds a scan order, rejecting anything that is not a permutation of
    /// the layout's tracks.
    pub fn new(
        strategy_id: impl Into<String>,
        order: Vec<usize>,
        layout: &TrackLayout,
    ) -> Result<Self> {
        let strategy_id = strategy_id.into();
        check_permutation(&strategy_id, &order, layout.track_count)?;
        Ok(ScanOrder { strategy_id, order })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Visit step of each track: `steps[track] = t` where `order[t] == track`.
    pub fn visit_steps(&self) -> Vec<usize> {
        let mut steps = vec![0; self.order.len()];
        for (t, &track) in self.order.iter().enumerate() {
            steps[track] = t;
        }
        steps
    }
}

fn check_permutation(id: &str, order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::invalid(format!(
            "{id}: order has {} entries, layout has {n} tracks",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &track in order {
        if track >= n {
            return Err(Error::invalid(format!(
                "{id}: track index {track} out of range 0..{n}"
            )));
        }
        if seen[track] {
            let covered = order.iter().collect::<HashSet<_>>().len();
            return Err(Error::invalid(format!(
                "{id}: order is not a permutation (track {track} repeated, covers only {covered} of {n} tracks)"
            )));
        }
        seen[track] = true;
    }
    Ok(())
}

/// The ten scan-order design principles, with their tunable parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyKind {
    RasterLeftToRight,
    OddEvenInterlaced,
    CenterOut,
    EdgeIn,
    GreedyMaximin,
    SmartscanProxy {
        decay: f64,
        deposit_width: f64,
    },
    /// `lag: None` selects a layout-dependent default (see [`default_lag`]).
    MultilagJump {
        lag: Option<usize>,
    },
    BlockQuarters,
    /// `window: None` uses `min(4, track_count)`.
    WindowedDispersion {
        window: Option<usize>,
    },
    CenterEdge,
}

pub const STRATEGY_IDS: [&str; 10] = [
    "raster_left_to_right",
    "odd_even_interlaced",
    "center_out",
    "edge_in",
    "greedy_maximin",
    "smartscan_proxy",
    "multilag_jump",
    "block_quarters",
    "windowed_dispersion",
    "center_edge",
];

/// Tunable generator parameters shared by [`generate_all_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyParams {
    pub lag: Option<usize>,
    pub window: Option<usize>,
    pub decay: f64,
    pub deposit_width: f64,
}

impl Default for StrategyParams {
    fn default() -> Self {
        StrategyParams {
            lag: None,
            window: None,
            decay: DEFAULT_DECAY,
            deposit_width: DEFAULT_DEPOSIT_WIDTH,
        }
    }
}

impl StrategyKind {
    pub fn id(&self) -> &'static str {
        match self {
            StrategyKind::RasterLeftToRight => STRATEGY_IDS[0],
            StrategyKind::OddEvenInterlaced => STRATEGY_IDS[1],
            StrategyKind::CenterOut => STRATEGY_IDS[2],
            StrategyKind::EdgeIn => STRATEGY_IDS[3],
            StrategyKind::GreedyMaximin => STRATEGY_IDS[4],
            StrategyKind::SmartscanProxy { .. } => STRATEGY_IDS[5],
            StrategyKind::MultilagJump { .. } => STRATEGY_IDS[6],
            StrategyKind::BlockQuarters => STRATEGY_IDS[7],
            StrategyKind::WindowedDispersion { .. } => STRATEGY_IDS[8],
            StrategyKind::CenterEdge => STRATEGY_IDS[9],
        }
    }

    /// All ten kinds in canonical order, parameterised by `params`.
    pub fn all(params: &StrategyParams) -> [StrategyKind; 10] {
        [
            StrategyKind::RasterLeftToRight,
            StrategyKind::OddEvenInterlaced,
            StrategyKind::CenterOut,
            StrategyKind::EdgeIn,
            StrategyKind::GreedyMaximin,
            StrategyKind::SmartscanProxy {
                decay: params.decay,
                deposit_width: params.deposit_width,
            },
            StrategyKind::MultilagJump { lag: params.lag },
            StrategyKind::BlockQuarters,
            StrategyKind::WindowedDispersion {
                window: params.window,
            },
            StrategyKind::CenterEdge,
        ]
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    /// Parses a strategy id into its kind with default parameters.
    fn from_str(s: &str) -> Result<Self> {
        let defaults = StrategyParams::default();
        StrategyKind::all(&defaults)
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::invalid(format!("unknown strategy kind '{s}'")))
    }
}

/// Default stride for the multi-lag walk: the lag coprime with `n` closest
/// to `7n/32` (exactly 7 at 32 tracks), smaller lag on ties. Falls back to
/// 1 for two tracks, where no lag in `2..n` exists.
pub fn default_lag(n: usize) -> usize {
    let target = DEFAULT_LAG as f64 * n as f64 / DEFAULT_TRACK_COUNT as f64;
    (2..n)
        .filter(|&l| gcd(l, n) == 1)
        .min_by(|&a, &b| {
            let da = (a as f64 - target).abs();
            let db = (b as f64 - target).abs();
            da.total_cmp(&db).then(a.cmp(&b))
        })
        .unwrap_or(1)
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn generate_strategy(kind: StrategyKind, layout: &TrackLayout) -> Result<ScanOrder> {
    layout.validate()?;
    let n = layout.track_count;
    let order = match kind {
        StrategyKind::RasterLeftToRight => (0..n).collect(),
        StrategyKind::OddEvenInterlaced => (0..n).step_by(2).chain((1..n).step_by(2)).collect(),
        StrategyKind::CenterOut => center_out(n),
        StrategyKind::EdgeIn => edge_in(n),
        StrategyKind::GreedyMaximin => greedy_dispersion(n, None),
        StrategyKind::SmartscanProxy {
            decay,
            deposit_width,
        } => {
            if !(decay > 0.0 && decay <= 1.0) {
                return Err(Error::invalid(format!(
                    "smartscan decay must be in (0, 1], got {decay}"
                )));
            }
            if !(deposit_width.is_finite() && deposit_width > 0.0) {
                return Err(Error::invalid(format!(
                    "smartscan deposit width must be positive, got {deposit_width}"
                )));
            }
            smartscan(layout, decay, deposit_width)
        }
        StrategyKind::MultilagJump { lag } => {
            let lag = match lag {
                Some(l) if l < 2 || l >= n => {
                    return Err(Error::invalid(format!(
                        "lag must be in 2..{}, got {l}",
                        n - 1
                    )));
                }
                Some(l) => l,
                None => default_lag(n),
            };
            (0..n).map(|k| (k * lag) % n).collect()
        }
        StrategyKind::BlockQuarters => block_quarters(n),
        StrategyKind::WindowedDispersion { window } => {
            let window = window.unwrap_or(DEFAULT_WINDOW.min(n));
            if window < 1 || window > n {
                return Err(Error::invalid(format!(
                    "window must be in 1..={n}, got {window}"
                )));
            }
            greedy_dispersion(n, Some(window))
        }
        StrategyKind::CenterEdge => center_edge(n),
    };
    ScanOrder::new(kind.id(), order, layout)
}

/// The ten strategies with default parameters, in canonical order.
pub fn generate_all(layout: &TrackLayout) -> Result<Vec<ScanOrder>> {
    generate_all_with(layout, &StrategyParams::default())
}

pub fn generate_all_with(layout: &TrackLayout, params: &StrategyParams) -> Result<Vec<ScanOrder>> {
    StrategyKind::all(params)
        .into_iter()
        .map(|k| generate_strategy(k, layout))
        .collect()
}

/// Absolute position differences between consecutive visits (length N-1).
pub fn jump_sequence(order: &ScanOrder, layout: &TrackLayout) -> Vec<f64> {
    order
        .order
        .windows(2)
        .map(|w| (layout.position(w[1]) - layout.position(w[0])).abs())
        .collect()
}

// Twice the distance to the centre, in integer units, so ties are exact.
fn center_out(n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| ((2 * i).abs_diff(n - 1), i));
    order
}

fn edge_in(n: usize) -> Vec<usize> {
    let (mut lo, mut hi) = (0usize, n - 1);
    let mut order = Vec::with_capacity(n);
    let mut take_low = true;
    while order.len() < n {
        if take_low {
            order.push(lo);
            lo += 1;
        } else {
            order.push(hi);
            hi = hi.saturating_sub(1);
        }
        take_low = !take_low;
    }
    order
}

/// Maximin greedy seeded at track 0. With `window = Some(w)` the distance is
/// measured only to the last `w` visited tracks.
fn greedy_dispersion(n: usize, window: Option<usize>) -> Vec<usize> {
    let mut order = vec![0];
    let mut visited = vec![false; n];
    visited[0] = true;
    while order.len() < n {
        let recent = match window {
            Some(w) => &order[order.len().saturating_sub(w)..],
            None => &order[..],
        };
        let mut best: Option<(usize, usize)> = None;
        for cand in (0..n).filter(|&c| !visited[c]) {
            let d = recent.iter().map(|&v| cand.abs_diff(v)).min().unwrap_or(0);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((cand, d));
            }
        }
        let (pick, _) = best.expect("unvisited track remains");
        visited[pick] = true;
        order.push(pick);
    }
    order
}

/// Decayed Gaussian heat field over the track positions.
///
/// Each deposit adds `exp(-(x_j - x_pick)^2 / (2 s^2))` with
/// `s = width * pitch`; [`HeatField::cool`] multiplies the whole field by the
/// decay factor.
#[derive(Debug, Clone)]
pub struct HeatField {
    positions: Vec<f64>,
    values: Vec<f64>,
    decay: f64,
    sigma: f64,
}

impl HeatField {
    pub fn new(layout: &TrackLayout, decay: f64, width: f64) -> Self {
        HeatField {
            positions: layout.positions(),
            values: vec![0.0; layout.track_count],
            decay,
            sigma: width * layout.pitch,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn deposit(&mut self, track: usize) {
        let centre = self.positions[track];
        let two_s2 = 2.0 * self.sigma * self.sigma;
        for (h, &x) in self.values.iter_mut().zip(&self.positions) {
            let d = x - centre;
            *h += (-(d * d) / two_s2).exp();
        }
    }

    pub fn cool(&mut self) {
        for h in &mut self.values {
            *h *= self.decay;
        }
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

fn smartscan(layout: &TrackLayout, decay: f64, width: f64) -> Vec<usize> {
    let n = layout.track_count;
    let mut field = HeatField::new(layout, decay, width);
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let pick = (0..n)
            .filter(|&i| !visited[i])
            .min_by(|&a, &b| {
                field.values()[a]
                    .total_cmp(&field.values()[b])
                    .then(a.cmp(&b))
            })
            .expect("unvisited track remains");
        visited[pick] = true;
        order.push(pick);
        field.deposit(pick);
        field.cool();
    }
    order
}

fn block_quarters(n: usize) -> Vec<usize> {
    let bounds: Vec<usize> = (0..=4).map(|q| q * n / 4).collect();
    let mut next: Vec<usize> = bounds[..4].to_vec();
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        for q in [0, 2, 1, 3] {
            if next[q] < bounds[q + 1] {
                order.push(next[q]);
                next[q] += 1;
            }
        }
    }
    order
}

fn center_edge(n: usize) -> Vec<usize> {
    let centre = center_out(n);
    let edge = edge_in(n);
    let mut visited = vec![false; n];
    let (mut ci, mut ei) = (0, 0);
    let mut order = Vec::with_capacity(n);
    let mut from_centre = true;
    while order.len() < n {
        let (seq, idx) = if from_centre {
            (&centre, &mut ci)
        } else {
            (&edge, &mut ei)
        };
        while visited[seq[*idx]] {
            *idx += 1;
        }
        let pick = seq[*idx];
        visited[pick] = true;
        order.push(pick);
        from_centre = !from_centre;
    }
    order
}

/// Writes `strategy_id,step,track_index` rows, one per visit.
pub fn write_strategies_csv<W: Write>(orders: &[ScanOrder], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let to_err = |e: csv::Error| Error::invalid(format!("csv write failed: {e}"));
    wtr.write_record(["strategy_id", "step", "track_index"])
        .map_err(to_err)?;
    for so in orders {
        for (step, track) in so.order.iter().enumerate() {
            wtr.write_record([
                so.strategy_id.as_str(),
                &step.to_string(),
                &track.to_string(),
            ])
            .map_err(to_err)?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}
