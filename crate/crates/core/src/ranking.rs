//! Composite reference scores, rankings, weight sweeps and the
//! stress/distortion trade-off.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_reduce::LabelVector;

/// Ten-strategy reference labels, bundled with the crate.
pub const REFERENCE_LABELS_CSV: &str = include_str!("../fixtures/lded32_reference_labels.csv");

pub const LABEL_NAMES: [&str; 3] = ["mises", "u3", "peeq"];

const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Reference labels keyed by strategy id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSet {
    labels: BTreeMap<String, LabelVector>,
}

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, strategy_id: impl Into<String>, label: LabelVector) -> Result<()> {
        let id = strategy_id.into();
        validate_label(&id, &label).map_err(Error::invalid)?;
        if self.labels.contains_key(&id) {
            return Err(Error::invalid(format!("duplicate strategy id '{id}'")));
        }
        self.labels.insert(id, label);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&LabelVector> {
        self.labels.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &String> {
        self.labels.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &LabelVector)> {
        self.labels.iter()
    }

    /// The bundled reference fixture.
    pub fn reference() -> Self {
        Self::from_csv_reader(
            REFERENCE_LABELS_CSV.as_bytes(),
            Path::new("lded32_reference_labels.csv"),
        )
        .expect("bundled fixture parses")
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file, path)
    }

    /// Reads `strategy_id,mises_top5,u3_range,peeq_frac`; `#` lines are comments.
    pub fn from_csv_reader<R: Read>(reader: R, path: &Path) -> Result<Self> {
        let malformed = |line: u64, message: String| Error::Malformed {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let expected = ["strategy_id", "mises_top5", "u3_range", "peeq_frac"];
        let headers = rdr
            .headers()
            .map_err(|e| malformed(1, e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != expected {
            let line = headers.position().map_or(1, |p| p.line());
            return Err(malformed(
                line,
                format!("expected header '{}'", expected.join(",")),
            ));
        }
        let mut set = LabelSet::new();
        for rec in rdr.records() {
            let rec =
                rec.map_err(|e| malformed(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line());
            let num = |i: usize| -> Result<f64> {
                rec[i].parse::<f64>().map_err(|_| {
                    malformed(
                        line,
                        format!("{}: '{}' is not a number", expected[i], &rec[i]),
                    )
                })
            };
            let id = rec[0].to_string();
            if id.is_empty() {
                return Err(malformed(line, "empty strategy_id".into()));
            }
            let label = LabelVector {
                mises_top_k_mean: num(1)?,
                u3_range: num(2)?,
                peeq_fraction: num(3)?,
            };
            validate_label(&id, &label).map_err(|m| malformed(line, m))?;
            if set.labels.insert(id.clone(), label).is_some() {
                return Err(malformed(line, format!("duplicate strategy id '{id}'")));
            }
        }
        Ok(set)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::invalid(format!("csv write failed: {e}"));
        wtr.write_record(["strategy_id", "mises_top5", "u3_range", "peeq_frac"])
            .map_err(err)?;
        for (id, l) in &self.labels {
            let fmt = crate::report::fmt_sig;
            wtr.write_record([
                id.clone(),
                fmt(l.mises_top_k_mean),
                fmt(l.u3_range),
                fmt(l.peeq_fraction),
            ])
            .map_err(err)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv output>", e))
    }
}

impl FromIterator<(String, LabelVector)> for LabelSet {
    /// Later duplicates overwrite earlier ones; labels are not validated.
    fn from_iter<I: IntoIterator<Item = (String, LabelVector)>>(iter: I) -> Self {
        LabelSet {
            labels: iter.into_iter().collect(),
        }
    }
}

fn validate_label(id: &str, l: &LabelVector) -> std::result::Result<(), String> {
    let [m, u, p] = l.as_array();
    if !(m.is_finite() && u.is_finite() && p.is_finite()) {
        return Err(format!("{id}: non-finite label value"));
    }
    if m < 0.0 {
        return Err(format!("{id}: negative mises {m}"));
    }
    if u < 0.0 {
        return Err(format!("{id}: negative u3 range {u}"));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(format!("{id}: peeq fraction {p} outside [0, 100]"));
    }
    Ok(())
}

/// Simplex weights over (Mises, U3, PEEQ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightVector {
    pub beta_sigma: f64,
    pub beta_u: f64,
    pub beta_p: f64,
}

impl Default for WeightVector {
    fn default() -> Self {
        WeightVector {
            beta_sigma: 0.4,
            beta_u: 0.4,
            beta_p: 0.2,
        }
    }
}

impl WeightVector {
    pub fn new(beta_sigma: f64, beta_u: f64, beta_p: f64) -> Result<Self> {
        let w = WeightVector {
            beta_sigma,
            beta_u,
            beta_p,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.beta_sigma, self.beta_u, self.beta_p]
    }

    pub fn validate(&self) -> Result<()> {
        let b = self.as_array();
        if b.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::invalid(format!(
                "weights must be nonnegative, got {b:?}"
            )));
        }
        let sum: f64 = b.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::invalid(format!("weights must sum to 1, got {sum}")));
        }
        Ok(())
    }

    /// Parses `sigma,u,p`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::invalid(format!("bad weight '{p}'")))
            })
            .collect::<Result<_>>()?;
        match parts.as_slice() {
            &[a, b, c] => WeightVector::new(a, b, c),
            _ => Err(Error::invalid(format!("expected three weights, got '{s}'"))),
        }
    }
}

/// Labels scaled to `[0, 1]` per metric, larger = worse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedLabels {
    pub values: BTreeMap<String, [f64; 3]>,
    /// Names of metrics that were constant over the set (normalised to 0).
    pub degenerate: Vec<String>,
}

pub fn normalize_labels(set: &LabelSet) -> Result<NormalizedLabels> {
    if set.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 strategies to normalise, got {}",
            set.len()
        )));
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for (_, l) in set.iter() {
        for (j, x) in l.as_array().into_iter().enumerate() {
            lo[j] = lo[j].min(x);
            hi[j] = hi[j].max(x);
        }
    }
    let degenerate: Vec<String> = (0..3)
        .filter(|&j| hi[j] <= lo[j])
        .map(|j| LABEL_NAMES[j].to_string())
        .collect();
    let values = set
        .iter()
        .map(|(id, l)| {
            let raw = l.as_array();
            let norm: [f64; 3] = std::array::from_fn(|j| {
                if hi[j] <= lo[j] {
                    0.0
                } else {
                    ((raw[j] - lo[j]) / (hi[j] - lo[j])).clamp(0.0, 1.0)
                }
            });
            (id.clone(), norm)
        })
        .collect();
    Ok(NormalizedLabels { values, degenerate })
}

/// `beta . normalized`; lower is better.
pub fn composite_score(normalized: &[f64; 3], w: &WeightVector) -> Result<f64> {
    w.validate()?;
    Ok(w.as_array()
        .iter()
        .zip(normalized)
        .map(|(b, y)| b * y)
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub rank: usize,
    pub strategy_id: String,
    pub normalized: [f64; 3],
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    pub weights: WeightVector,
    pub entries: Vec<RankEntry>,
}

impl RankingResult {
    pub fn order(&self) -> Vec<&str> {
        self.entries
            .iter()
            .map(|e| e.strategy_id.as_str())
            .collect()
    }

    pub fn rank_of(&self, id: &str) -> Option<usize> {
        self.entries
            .iter()
            .find(|e| e.strategy_id == id)
            .map(|e| e.rank)
    }
}

fn rank_normalized(norm: &NormalizedLabels, w: &WeightVector) -> Result<RankingResult> {
    let mut entries = norm
        .values
        .iter()
        .map(|(id, y)| {
            Ok(RankEntry {
                rank: 0,
                strategy_id: id.clone(),
                normalized: *y,
                score: composite_score(y, w)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then_with(|| a.strategy_id.cmp(&b.strategy_id))
    });
    for (i, e) in entries.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    Ok(RankingResult {
        weights: *w,
        entries,
    })
}

/// Ascending composite score; ties go to the lexicographically smaller id.
pub fn rank(set: &LabelSet, w: &WeightVector) -> Result<RankingResult> {
    rank_normalized(&normalize_labels(set)?, w)
}

/// Simplex lattice with spacing `step`; `1/step` must be an integer.
///
/// Ordered by `beta_sigma` then `beta_u`, both ascending.
pub fn simplex_grid(step: f64) -> Result<Vec<WeightVector>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::invalid(format!(
            "sweep step must be in (0, 1], got {step}"
        )));
    }
    let divisions = (1.0 / step).round();
    if ((1.0 / step) - divisions).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "1/step must be an integer, got step {step}"
        )));
    }
    let n = divisions as usize;
    let mut grid = Vec::with_capacity((n + 1) * (n + 2) / 2);
    for i in 0..=n {
        for j in 0..=n - i {
            let k = n - i - j;
            grid.push(WeightVector {
                beta_sigma: i as f64 / n as f64,
                beta_u: j as f64 / n as f64,
                beta_p: k as f64 / n as f64,
            });
        }
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankRange {
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessMatrix {
    pub weightings: Vec<WeightVector>,
    /// `ranks[id][k]` is the rank of `id` under `weightings[k]`.
    pub ranks: BTreeMap<String, Vec<usize>>,
    pub rank_range: BTreeMap<String, RankRange>,
}

pub fn robustness_sweep(set: &LabelSet, grid: &[WeightVector]) -> Result<RobustnessMatrix> {
    if grid.is_empty() {
        return Err(Error::invalid("weight grid is empty"));
    }
    let norm = normalize_labels(set)?;
    let mut ranks: BTreeMap<String, Vec<usize>> = set
        .ids()
        .map(|id| (id.clone(), Vec::with_capacity(grid.len())))
        .collect();
    for w in grid {
        for e in rank_normalized(&norm, w)?.entries {
            ranks
                .get_mut(&e.strategy_id)
                .expect("known id")
                .push(e.rank);
        }
    }
    let rank_range = ranks
        .iter()
        .map(|(id, rs)| {
            let min = *rs.iter().min().expect("non-empty grid");
            let max = *rs.iter().max().expect("non-empty grid");
            (id.clone(), RankRange { min, max })
        })
        .collect();
    Ok(RobustnessMatrix {
        weightings: grid.to_vec(),
        ranks,
        rank_range,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub strategy_id: String,
    pub mises: f64,
    pub u3: f64,
    pub dominated: bool,
}

fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.0 && a.1 <= b.1 && (a.0 < b.0 || a.1 < b.1)
}

/// Raw (Mises, U3) pairs with 2-D Pareto dominance flags (both minimised).
pub fn tradeoff_points(set: &LabelSet) -> Vec<TradeoffPoint> {
    let pts: Vec<(&String, (f64, f64))> = set
        .iter()
        .map(|(id, l)| (id, (l.mises_top_k_mean, l.u3_range)))
        .collect();
    pts.iter()
        .map(|&(id, p)| TradeoffPoint {
            strategy_id: id.clone(),
            mises: p.0,
            u3: p.1,
            dominated: pts.iter().any(|&(_, q)| dominates(q, p)),
        })
        .collect()
}

/// Non-dominated points sorted by ascending Mises.
pub fn pareto_front(points: &[TradeoffPoint]) -> Vec<&TradeoffPoint> {
    let mut front: Vec<&TradeoffPoint> = points.iter().filter(|p| !p.dominated).collect();
    front.sort_by(|a, b| {
        a.mises
            .partial_cmp(&b.mises)
            .unwrap_or(Ordering::Equal)
            .then(a.strategy_id.cmp(&b.strategy_id))
    });
    front
}
