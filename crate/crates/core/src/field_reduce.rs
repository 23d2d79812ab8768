//! Reduction of final-cooling nodal field tables into residual labels.
//!
//! All reductions run over the scan-region evaluation domain: rows that are
//! inside the scan region and not flagged as boundary-condition dominated.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeRow {
    pub node_id: i64,
    /// von Mises stress, MPa.
    pub mises: f64,
    /// Vertical displacement, mm.
    pub u3: f64,
    pub peeq: f64,
    pub in_scan_region: bool,
    pub bc_dominated: bool,
}

impl NodeRow {
    pub fn in_domain(&self) -> bool {
        self.in_scan_region && !self.bc_dominated
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeFieldTable {
    rows: Vec<NodeRow>,
}

impl NodeFieldTable {
    pub fn new(rows: Vec<NodeRow>) -> Result<Self> {
        let mut ids = HashSet::with_capacity(rows.len());
        for r in &rows {
            if !ids.insert(r.node_id) {
                return Err(Error::invalid(format!("duplicate node_id {}", r.node_id)));
            }
            validate_row(r).map_err(Error::invalid)?;
        }
        Ok(NodeFieldTable { rows })
    }

    pub fn rows(&self) -> &[NodeRow] {
        &self.rows
    }

    pub fn domain(&self) -> impl Iterator<Item = &NodeRow> {
        self.rows.iter().filter(|r| r.in_domain())
    }

    pub fn domain_len(&self) -> usize {
        self.domain().count()
    }

    /// Reads the `node_id,mises,u3,peeq,in_scan_region,bc_dominated` CSV
    /// format. Booleans are `0`/`1`.
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file, path)
    }

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
        let headers = rdr
            .headers()
            .map_err(|e| malformed(1, e.to_string()))?
            .clone();
        let expected = [
            "node_id",
            "mises",
            "u3",
            "peeq",
            "in_scan_region",
            "bc_dominated",
        ];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(malformed(
                1,
                format!("expected header '{}'", expected.join(",")),
            ));
        }

        let mut rows = Vec::new();
        let mut ids = HashSet::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                malformed(line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            let num = |i: usize| -> Result<f64> {
                rec[i].parse::<f64>().map_err(|_| {
                    malformed(
                        line,
                        format!("{}: '{}' is not a number", expected[i], &rec[i]),
                    )
                })
            };
            let flag = |i: usize| -> Result<bool> {
                match &rec[i] {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(malformed(
                        line,
                        format!("{}: expected 0 or 1, got '{other}'", expected[i]),
                    )),
                }
            };
            let node_id = rec[0].parse::<i64>().map_err(|_| {
                malformed(line, format!("node_id: '{}' is not an integer", &rec[0]))
            })?;
            let row = NodeRow {
                node_id,
                mises: num(1)?,
                u3: num(2)?,
                peeq: num(3)?,
                in_scan_region: flag(4)?,
                bc_dominated: flag(5)?,
            };
            validate_row(&row).map_err(|m| malformed(line, m))?;
            if !ids.insert(node_id) {
                return Err(malformed(line, format!("duplicate node_id {node_id}")));
            }
            rows.push(row);
        }
        Ok(NodeFieldTable { rows })
    }
}

fn validate_row(r: &NodeRow) -> std::result::Result<(), String> {
    if !(r.mises.is_finite() && r.u3.is_finite() && r.peeq.is_finite()) {
        return Err(format!("node {}: non-finite field value", r.node_id));
    }
    if r.mises < 0.0 {
        return Err(format!("node {}: negative mises {}", r.node_id, r.mises));
    }
    if r.peeq < 0.0 {
        return Err(format!("node {}: negative peeq {}", r.node_id, r.peeq));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionConfig {
    pub top_k: usize,
    /// PEEQ exceedance threshold; the comparison is strict.
    pub peeq_threshold: f64,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        ReductionConfig {
            top_k: 5,
            peeq_threshold: 0.0,
        }
    }
}

impl ReductionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_k < 1 {
            return Err(Error::invalid("top_k must be at least 1"));
        }
        if !(self.peeq_threshold.is_finite() && self.peeq_threshold >= 0.0) {
            return Err(Error::invalid(format!(
                "peeq_threshold must be a nonnegative number, got {}",
                self.peeq_threshold
            )));
        }
        Ok(())
    }
}

/// Residual label triple for one strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelVector {
    /// Mean of the top-k scan-region Mises values, MPa.
    pub mises_top_k_mean: f64,
    /// max U3 - min U3 over the scan region, mm.
    pub u3_range: f64,
    /// Percentage of scan-region nodes with PEEQ above the threshold.
    pub peeq_fraction: f64,
}

impl LabelVector {
    pub fn as_array(&self) -> [f64; 3] {
        [self.mises_top_k_mean, self.u3_range, self.peeq_fraction]
    }
}

pub fn mises_top_k_mean(table: &NodeFieldTable, cfg: &ReductionConfig) -> Result<f64> {
    cfg.validate()?;
    let mut values: Vec<f64> = table.domain().map(|r| r.mises).collect();
    if values.len() < cfg.top_k {
        return Err(Error::InsufficientDomain {
            needed: cfg.top_k,
            found: values.len(),
        });
    }
    // Partial selection: the k largest end up in the tail.
    let split = values.len() - cfg.top_k;
    if split > 0 {
        values.select_nth_unstable_by(split, |a, b| a.total_cmp(b));
    }
    let top = &mut values[split..];
    // Sum largest-first so the result does not depend on selection order.
    top.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(top.iter().sum::<f64>() / cfg.top_k as f64)
}

pub fn u3_range(table: &NodeFieldTable) -> Result<f64> {
    let (lo, hi) = table
        .domain()
        .fold(None, |acc: Option<(f64, f64)>, r| match acc {
            None => Some((r.u3, r.u3)),
            Some((lo, hi)) => Some((lo.min(r.u3), hi.max(r.u3))),
        })
        .ok_or(Error::InsufficientDomain {
            needed: 1,
            found: 0,
        })?;
    Ok(hi - lo)
}

pub fn peeq_fraction(table: &NodeFieldTable, cfg: &ReductionConfig) -> Result<f64> {
    cfg.validate()?;
    let (above, total) = table.domain().fold((0usize, 0usize), |(a, t), r| {
        (a + usize::from(r.peeq > cfg.peeq_threshold), t + 1)
    });
    if total == 0 {
        return Err(Error::InsufficientDomain {
            needed: 1,
            found: 0,
        });
    }
    Ok(100.0 * above as f64 / total as f64)
}

pub fn extract_labels(table: &NodeFieldTable, cfg: &ReductionConfig) -> Result<LabelVector> {
    Ok(LabelVector {
        mises_top_k_mean: mises_top_k_mean(table, cfg)?,
        u3_range: u3_range(table)?,
        peeq_fraction: peeq_fraction(table, cfg)?,
    })
}
