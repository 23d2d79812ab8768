//! End-to-end run: generate strategies, score proxies, ingest reference
//! labels, rank, sweep weights, and diagnose alignment.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::alignment::{alignment_report_with, DISCLAIMER};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::field_reduce::{extract_labels, NodeFieldTable, ReductionConfig};
use crate::proxy_eval::{is_experimental, metric_group, proxy_matrix, ProxyMatrix, ProxyWeights};
use crate::ranking::{
    normalize_labels, rank, robustness_sweep, simplex_grid, tradeoff_points, LabelSet,
    REFERENCE_LABELS_CSV,
};
use crate::report::{
    sha256_hex, Meta, ProxySection, RankingSection, RunReport, SCORE_CAVEAT, TOOL_NAME,
    TOOL_VERSION,
};
use crate::svg;
use crate::track_bench::{generate_all_with, ScanOrder};

pub const REFERENCE_FIXTURE_NAME: &str = "lded32_reference_labels.csv";

#[derive(Debug, Clone, PartialEq)]
pub enum LabelSource {
    /// The reference labels bundled with the crate.
    Bundled,
    LabelsCsv(PathBuf),
    /// Directory of `<strategy_id>.csv` node field tables.
    FieldDir(PathBuf),
}

impl LabelSource {
    pub fn mode(&self) -> &'static str {
        match self {
            LabelSource::Bundled => "bundled",
            LabelSource::LabelsCsv(_) => "labels_csv",
            LabelSource::FieldDir(_) => "field_tables",
        }
    }
}

/// Labels plus the SHA-256 digest of each file they came from.
#[derive(Debug, Clone)]
pub struct LoadedLabels {
    pub labels: LabelSet,
    pub digests: BTreeMap<String, String>,
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}

/// Reduces one field table per strategy id. With `ids = None`, every `*.csv`
/// in `dir` is read and its file stem becomes the strategy id.
pub fn reduce_field_dir(
    dir: &Path,
    ids: Option<&[String]>,
    cfg: &ReductionConfig,
) -> Result<LoadedLabels> {
    let files: Vec<(String, PathBuf)> = match ids {
        Some(ids) => {
            let missing: Vec<&str> = ids
                .iter()
                .filter(|id| !dir.join(format!("{id}.csv")).is_file())
                .map(String::as_str)
                .collect();
            if !missing.is_empty() {
                return Err(Error::MissingData(format!(
                    "no field table in {} for: {}",
                    dir.display(),
                    missing.join(", ")
                )));
            }
            ids.iter()
                .map(|id| (id.clone(), dir.join(format!("{id}.csv"))))
                .collect()
        }
        None => {
            let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
            let mut files = Vec::new();
            for entry in entries {
                let path = entry.map_err(|e| Error::io(dir, e))?.path();
                if path.extension().is_some_and(|e| e == "csv") {
                    if let Some(stem) = path.file_stem() {
                        files.push((stem.to_string_lossy().into_owned(), path));
                    }
                }
            }
            files.sort();
            if files.is_empty() {
                return Err(Error::MissingData(format!(
                    "no .csv field tables in {}",
                    dir.display()
                )));
            }
            files
        }
    };

    let mut labels = LabelSet::new();
    let mut digests = BTreeMap::new();
    for (id, path) in files {
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let table = NodeFieldTable::from_csv_reader(bytes.as_slice(), &path)?;
        let label = extract_labels(&table, cfg).map_err(|e| match e {
            Error::InsufficientDomain { .. } => {
                Error::MissingData(format!("{}: {e}", path.display()))
            }
            other => other,
        })?;
        labels.insert(id, label)?;
        digests.insert(file_name(&path), sha256_hex(&bytes));
    }
    Ok(LoadedLabels { labels, digests })
}

pub fn load_labels(
    source: &LabelSource,
    ids: Option<&[String]>,
    cfg: &ReductionConfig,
) -> Result<LoadedLabels> {
    match source {
        LabelSource::Bundled => Ok(LoadedLabels {
            labels: LabelSet::reference(),
            digests: BTreeMap::from([(
                REFERENCE_FIXTURE_NAME.to_string(),
                sha256_hex(REFERENCE_LABELS_CSV.as_bytes()),
            )]),
        }),
        LabelSource::LabelsCsv(path) => {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            let labels = LabelSet::from_csv_reader(bytes.as_slice(), path)?;
            Ok(LoadedLabels {
                labels,
                digests: BTreeMap::from([(file_name(path), sha256_hex(&bytes))]),
            })
        }
        LabelSource::FieldDir(dir) => reduce_field_dir(dir, ids, cfg),
    }
}

/// Errors unless `labels` covers exactly the given strategy ids.
pub fn check_coverage(ids: &[String], labels: &LabelSet) -> Result<()> {
    let want: BTreeSet<&String> = ids.iter().collect();
    let have: BTreeSet<&String> = labels.ids().collect();
    if want == have {
        return Ok(());
    }
    Err(Error::InputMismatch {
        missing: want.difference(&have).map(|s| s.to_string()).collect(),
        unexpected: have.difference(&want).map(|s| s.to_string()).collect(),
    })
}

pub fn strategies(cfg: &PipelineConfig) -> Result<Vec<ScanOrder>> {
    cfg.validate()?;
    generate_all_with(&cfg.layout, &cfg.strategy)
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub report: RunReport,
    pub json: String,
    /// `(file name, contents)` for each chart.
    pub svgs: Vec<(&'static str, String)>,
}

pub const REPORT_FILE: &str = "report.json";
pub const TRADEOFF_SVG: &str = "tradeoff.svg";
pub const ROBUSTNESS_SVG: &str = "robustness.svg";
pub const AGREEMENT_SVG: &str = "agreement.svg";

impl PipelineRun {
    /// Writes the report and charts into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        let report_path = dir.join(REPORT_FILE);
        std::fs::write(&report_path, &self.json).map_err(|e| Error::io(&report_path, e))?;
        written.push(report_path);
        for (name, body) in &self.svgs {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn proxy_section(matrix: &ProxyMatrix, weights: &ProxyWeights) -> Result<ProxySection> {
    let metric_ids = matrix.metric_ids();
    Ok(ProxySection {
        metrics: matrix.vectors.clone(),
        normalization: matrix.normalization.clone(),
        groups: metric_ids
            .iter()
            .filter_map(|m| metric_group(m).map(|g| (m.clone(), g)))
            .collect(),
        experimental: metric_ids
            .iter()
            .filter(|m| is_experimental(m))
            .cloned()
            .collect(),
        degenerate: matrix
            .normalization
            .degenerate_metrics()
            .into_iter()
            .map(String::from)
            .collect(),
        weights: weights.clone(),
        scores: matrix.scores(weights)?,
    })
}

pub fn run_pipeline(cfg: &PipelineConfig, source: &LabelSource) -> Result<PipelineRun> {
    let orders = strategies(cfg)?;
    let ids: Vec<String> = orders.iter().map(|o| o.strategy_id.clone()).collect();

    let matrix = proxy_matrix(&orders, &cfg.layout, &cfg.proxy)?;
    let loaded = load_labels(source, Some(&ids), &cfg.reduction)?;
    check_coverage(&ids, &loaded.labels)?;
    let labels = loaded.labels;

    let norm = normalize_labels(&labels)?;
    let baseline = rank(&labels, &cfg.weights)?;
    let robustness = robustness_sweep(&labels, &simplex_grid(cfg.sweep.step)?)?;
    let tradeoff = tradeoff_points(&labels);
    let alignment =
        alignment_report_with(&matrix, &labels, &cfg.weights, Some(&cfg.proxy_weights))?;

    let svgs = vec![
        (TRADEOFF_SVG, svg::tradeoff_svg(&tradeoff)),
        (
            ROBUSTNESS_SVG,
            svg::robustness_svg(
                &robustness,
                &baseline
                    .entries
                    .iter()
                    .map(|e| e.strategy_id.clone())
                    .collect::<Vec<_>>(),
            ),
        ),
        (AGREEMENT_SVG, svg::agreement_svg(&alignment)),
    ];

    let report = RunReport {
        config: cfg.clone(),
        strategies: orders,
        proxy: proxy_section(&matrix, &cfg.proxy_weights)?,
        labels,
        ranking: RankingSection {
            baseline,
            degenerate: norm.degenerate,
            tradeoff,
        },
        robustness,
        alignment,
        meta: Meta {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            label_source: source.mode().to_string(),
            input_digests: loaded.digests,
            disclaimers: vec![DISCLAIMER.to_string(), SCORE_CAVEAT.to_string()],
        },
    };
    let json = report.to_json()?;
    Ok(PipelineRun { report, json, svgs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortlistEntry {
    pub rank: usize,
    pub strategy_id: String,
    pub j_proxy: f64,
    pub selected: bool,
}

/// Sorts strategies by ascending proxy score (ties by id) and marks the
/// first `top_m` as selected.
pub fn screen(
    matrix: &ProxyMatrix,
    weights: &ProxyWeights,
    top_m: usize,
) -> Result<Vec<ShortlistEntry>> {
    weights.validate()?;
    let m = matrix.vectors.len();
    if top_m == 0 || top_m > m {
        return Err(Error::invalid(format!(
            "top_m must be in 1..={m}, got {top_m}"
        )));
    }
    let mut scored: Vec<(String, f64)> = matrix.scores(weights)?.into_iter().collect();
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    Ok(scored
        .into_iter()
        .enumerate()
        .map(|(i, (strategy_id, j_proxy))| ShortlistEntry {
            rank: i + 1,
            strategy_id,
            j_proxy,
            selected: i < top_m,
        })
        .collect())
}
