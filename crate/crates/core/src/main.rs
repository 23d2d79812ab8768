use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lded_diag::alignment::alignment_report_with;
use lded_diag::config::PipelineConfig;
use lded_diag::pipeline::{
    self, check_coverage, load_labels, reduce_field_dir, run_pipeline, screen, LabelSource,
};
use lded_diag::proxy_eval::{proxy_matrix, write_norm_csv, write_proxy_csv, ProxyWeights};
use lded_diag::ranking::{rank, robustness_sweep, simplex_grid, LabelSet, WeightVector};
use lded_diag::report::{fmt_sig, to_canonical_json};
use lded_diag::track_bench::write_strategies_csv;
use lded_diag::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "lded-diag",
    version,
    about = "Scan-order diagnostics for LDED track layouts"
)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file (or directory for `pipeline`). Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Default)]
struct LabelArgs {
    /// Labels CSV (`strategy_id,mises_top5,u3_range,peeq_frac`).
    #[arg(long, conflicts_with = "fields")]
    labels: Option<PathBuf>,

    /// Directory of per-strategy node field tables (`<strategy_id>.csv`).
    #[arg(long)]
    fields: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the benchmark scan orders.
    Strategies,
    /// Compute proxy descriptors for every strategy.
    Proxy {
        /// Also write the per-metric normalisation ranges here (CSV only).
        #[arg(long)]
        norm_out: Option<PathBuf>,
    },
    /// Reduce node field tables to scalar labels.
    Reduce {
        #[arg(long)]
        fields: PathBuf,
    },
    /// Rank strategies by weighted composite score.
    Rank {
        #[command(flatten)]
        labels: LabelArgs,
        /// Weights as `beta_sigma,beta_u,beta_p`.
        #[arg(long)]
        weights: Option<String>,
    },
    /// Rank under every weighting on the simplex lattice.
    Sweep {
        #[command(flatten)]
        labels: LabelArgs,
    },
    /// Compare proxy descriptors with labels.
    Align {
        #[command(flatten)]
        labels: LabelArgs,
    },
    /// Run every stage and write report.json plus charts.
    Pipeline {
        #[command(flatten)]
        labels: LabelArgs,
    },
    /// Shortlist strategies by scalar proxy score, without labels.
    Screen {
        #[arg(long)]
        top_m: usize,
        /// Proxy weights as `metric=weight,...`.
        #[arg(long)]
        proxy_weights: Option<String>,
    },
}

fn label_source(args: &LabelArgs, cfg: &PipelineConfig) -> LabelSource {
    if let Some(p) = &args.labels {
        LabelSource::LabelsCsv(p.clone())
    } else if let Some(d) = &args.fields {
        LabelSource::FieldDir(d.clone())
    } else if let Some(p) = &cfg.paths.labels_csv {
        LabelSource::LabelsCsv(p.clone())
    } else if let Some(d) = &cfg.paths.field_dir {
        LabelSource::FieldDir(d.clone())
    } else {
        LabelSource::Bundled
    }
}

fn open_out(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv write failed: {e}"))
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = to_canonical_json(value)?;
    let mut w = open_out(out)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| io_err(out.unwrap_or(Path::new("<stdout>")), e))
}

fn emit_rows(header: &[&str], rows: Vec<Vec<String>>, out: Option<&Path>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(open_out(out)?);
    wtr.write_record(header).map_err(csv_err)?;
    for row in rows {
        wtr.write_record(&row).map_err(csv_err)?;
    }
    wtr.flush()
        .map_err(|e| io_err(out.unwrap_or(Path::new("<stdout>")), e))
}

fn labels_for(cfg: &PipelineConfig, args: &LabelArgs) -> Result<LabelSet> {
    let orders = pipeline::strategies(cfg)?;
    let ids: Vec<String> = orders.iter().map(|o| o.strategy_id.clone()).collect();
    let loaded = load_labels(&label_source(args, cfg), Some(&ids), &cfg.reduction)?;
    check_coverage(&ids, &loaded.labels)?;
    Ok(loaded.labels)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => PipelineConfig::from_path(p)?,
        None => PipelineConfig::default(),
    };
    let out = cli.out.as_deref();
    let json = cli.format == Format::Json;

    match cli.command {
        Command::Strategies => {
            let orders = pipeline::strategies(&cfg)?;
            if json {
                emit_json(&orders, out)
            } else {
                write_strategies_csv(&orders, open_out(out)?)
            }
        }
        Command::Proxy { norm_out } => {
            let orders = pipeline::strategies(&cfg)?;
            let matrix = proxy_matrix(&orders, &cfg.layout, &cfg.proxy)?;
            if json {
                return emit_json(&matrix, out);
            }
            write_proxy_csv(&matrix, open_out(out)?)?;
            if let Some(p) = norm_out {
                write_norm_csv(&matrix, open_out(Some(&p))?)?;
            }
            Ok(())
        }
        Command::Reduce { fields } => {
            let loaded = reduce_field_dir(&fields, None, &cfg.reduction)?;
            if json {
                emit_json(&loaded.labels, out)
            } else {
                loaded.labels.write_csv(open_out(out)?)
            }
        }
        Command::Rank { labels, weights } => {
            let set = labels_for(&cfg, &labels)?;
            let w = match weights {
                Some(s) => WeightVector::parse(&s)?,
                None => cfg.weights,
            };
            let result = rank(&set, &w)?;
            if json {
                return emit_json(&result, out);
            }
            let rows = result
                .entries
                .iter()
                .map(|e| {
                    vec![
                        e.rank.to_string(),
                        e.strategy_id.clone(),
                        fmt_sig(e.normalized[0]),
                        fmt_sig(e.normalized[1]),
                        fmt_sig(e.normalized[2]),
                        fmt_sig(e.score),
                    ]
                })
                .collect();
            emit_rows(
                &[
                    "rank",
                    "strategy_id",
                    "mises_norm",
                    "u3_norm",
                    "peeq_norm",
                    "score",
                ],
                rows,
                out,
            )
        }
        Command::Sweep { labels } => {
            let set = labels_for(&cfg, &labels)?;
            let matrix = robustness_sweep(&set, &simplex_grid(cfg.sweep.step)?)?;
            if json {
                return emit_json(&matrix, out);
            }
            let mut rows = Vec::new();
            for (k, w) in matrix.weightings.iter().enumerate() {
                for (id, ranks) in &matrix.ranks {
                    rows.push(vec![
                        k.to_string(),
                        fmt_sig(w.beta_sigma),
                        fmt_sig(w.beta_u),
                        fmt_sig(w.beta_p),
                        id.clone(),
                        ranks[k].to_string(),
                    ]);
                }
            }
            emit_rows(
                &[
                    "weighting",
                    "beta_sigma",
                    "beta_u",
                    "beta_p",
                    "strategy_id",
                    "rank",
                ],
                rows,
                out,
            )
        }
        Command::Align { labels } => {
            let set = labels_for(&cfg, &labels)?;
            let orders = pipeline::strategies(&cfg)?;
            let matrix = proxy_matrix(&orders, &cfg.layout, &cfg.proxy)?;
            let report =
                alignment_report_with(&matrix, &set, &cfg.weights, Some(&cfg.proxy_weights))?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if json {
                return emit_json(&report, out);
            }
            let opt = |x: Option<f64>| x.map(fmt_sig).unwrap_or_default();
            let rows = report
                .entries
                .iter()
                .map(|e| {
                    vec![
                        e.metric.clone(),
                        serde_json::to_value(e.group)
                            .ok()
                            .and_then(|v| v.as_str().map(String::from))
                            .unwrap_or_default(),
                        e.target.name().to_string(),
                        opt(e.pearson),
                        opt(e.spearman),
                        fmt_sig(e.pairwise_agreement),
                        fmt_sig(e.pairwise_mismatch),
                        e.sign_warning.to_string(),
                        e.experimental.to_string(),
                    ]
                })
                .collect();
            emit_rows(
                &[
                    "metric",
                    "group",
                    "target",
                    "pearson",
                    "spearman",
                    "pairwise_agreement",
                    "pairwise_mismatch",
                    "sign_warning",
                    "experimental",
                ],
                rows,
                out,
            )
        }
        Command::Pipeline { labels } => {
            let source = label_source(&labels, &cfg);
            let run = run_pipeline(&cfg, &source)?;
            let dir = out
                .map(Path::to_path_buf)
                .or_else(|| cfg.paths.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            for path in run.write_to(&dir)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Screen {
            top_m,
            proxy_weights,
        } => {
            let orders = pipeline::strategies(&cfg)?;
            let matrix = proxy_matrix(&orders, &cfg.layout, &cfg.proxy)?;
            let weights = match proxy_weights {
                Some(s) => ProxyWeights::parse(&s)?,
                None => cfg.proxy_weights.clone(),
            };
            let shortlist = screen(&matrix, &weights, top_m)?;
            if json {
                return emit_json(&shortlist, out);
            }
            let rows = shortlist
                .iter()
                .map(|e| {
                    vec![
                        e.rank.to_string(),
                        e.strategy_id.clone(),
                        fmt_sig(e.j_proxy),
                        e.selected.to_string(),
                    ]
                })
                .collect();
            emit_rows(&["rank", "strategy_id", "j_proxy", "selected"], rows, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
