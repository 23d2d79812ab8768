//! Proxy vs. reference-label alignment: correlations and pairwise
//! preference agreement.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::proxy_eval::{
    is_experimental, metric_group, MetricGroup, MetricRange, ProxyMatrix, ProxyWeights,
};
use crate::ranking::{rank, LabelSet, WeightVector};

pub const DISCLAIMER: &str =
    "Proxy-FEA alignment over a small strategy set is qualitative and exploratory; \
correlations and pairwise agreement are diagnostic indicators, not surrogate validation.";

/// Minimum sample size for reporting correlations.
pub const MIN_CORRELATION_SAMPLES: usize = 3;

/// Row name used for the weighted scalar proxy score.
pub const PROXY_SCORE_ROW: &str = "j_proxy";

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "score vectors differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::invalid("need at least 2 paired scores"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("score vectors contain non-finite values"));
    }
    Ok(())
}

fn centered(xs: &[f64]) -> Vec<f64> {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| x - mean).collect()
}

/// Sample Pearson correlation. A constant vector is an error, not 0.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let (cx, cy) = (centered(x), centered(y));
    let sxx: f64 = cx.iter().map(|a| a * a).sum();
    let syy: f64 = cy.iter().map(|b| b * b).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateStatistic(
            "pearson: constant vector".into(),
        ));
    }
    let sxy: f64 = cx.iter().zip(&cy).map(|(a, b)| a * b).sum();
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
        .map_err(|_| Error::DegenerateStatistic("spearman: constant vector".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseAgreement {
    pub agreement: f64,
    pub mismatch: f64,
}

/// Fraction of unordered pairs ordered the same way by both vectors.
///
/// Uses a three-valued sign, so a tie in one vector agrees only with a tie
/// in the other.
pub fn pairwise_agreement(x: &[f64], y: &[f64]) -> Result<PairwiseAgreement> {
    check_pair(x, y)?;
    let m = x.len();
    let mut mismatched = 0usize;
    for i in 0..m {
        for j in i + 1..m {
            if x[i].partial_cmp(&x[j]) != y[i].partial_cmp(&y[j]) {
                mismatched += 1;
            }
        }
    }
    let pairs = m * (m - 1) / 2;
    let mismatch = mismatched as f64 / pairs as f64;
    Ok(PairwiseAgreement {
        agreement: 1.0 - mismatch,
        mismatch,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Mises,
    U3,
    Peeq,
    Composite,
}

impl Target {
    pub const ALL: [Target; 4] = [Target::Mises, Target::U3, Target::Peeq, Target::Composite];

    pub fn name(&self) -> &'static str {
        match self {
            Target::Mises => "mises",
            Target::U3 => "u3",
            Target::Peeq => "peeq",
            Target::Composite => "composite",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentEntry {
    pub metric: String,
    pub group: MetricGroup,
    pub target: Target,
    /// `None` when suppressed (small sample) or undefined (constant input).
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub pairwise_agreement: f64,
    pub pairwise_mismatch: f64,
    /// Pearson and Spearman have opposite signs.
    pub sign_warning: bool,
    pub experimental: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestProxy {
    pub metric: String,
    pub group: MetricGroup,
    pub pearson: f64,
    pub spearman: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestAgreement {
    pub metric: String,
    pub group: MetricGroup,
    pub pairwise_agreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub strategy_ids: Vec<String>,
    pub weights: WeightVector,
    pub correlations_reported: bool,
    pub entries: Vec<AlignmentEntry>,
    /// Per target, the metric with the largest |spearman| (then |pearson|,
    /// then metric id).
    pub best_by_correlation: BTreeMap<Target, Option<BestProxy>>,
    pub best_by_agreement: BTreeMap<Target, Option<BestAgreement>>,
    /// Metrics constant over the set; kept in `entries` but never "best".
    pub excluded_metrics: Vec<String>,
    pub warnings: Vec<String>,
    pub disclaimer: String,
}

impl AlignmentReport {
    pub fn entry(&self, metric: &str, target: Target) -> Option<&AlignmentEntry> {
        self.entries
            .iter()
            .find(|e| e.metric == metric && e.target == target)
    }

    /// Entries restricted to one descriptor family.
    pub fn group(&self, group: MetricGroup) -> impl Iterator<Item = &AlignmentEntry> {
        self.entries.iter().filter(move |e| e.group == group)
    }
}

pub fn alignment_report(
    proxy: &ProxyMatrix,
    labels: &LabelSet,
    w: &WeightVector,
) -> Result<AlignmentReport> {
    alignment_report_with(proxy, labels, w, None)
}

/// As [`alignment_report`], additionally comparing the weighted scalar proxy
/// score under `proxy_weights` (row [`PROXY_SCORE_ROW`]).
pub fn alignment_report_with(
    proxy: &ProxyMatrix,
    labels: &LabelSet,
    w: &WeightVector,
    proxy_weights: Option<&ProxyWeights>,
) -> Result<AlignmentReport> {
    w.validate()?;
    let proxy_ids: BTreeSet<&String> = proxy.vectors.keys().collect();
    let label_ids: BTreeSet<&String> = labels.ids().collect();
    if proxy_ids != label_ids {
        return Err(Error::InputMismatch {
            missing: proxy_ids
                .difference(&label_ids)
                .map(|s| s.to_string())
                .collect(),
            unexpected: label_ids
                .difference(&proxy_ids)
                .map(|s| s.to_string())
                .collect(),
        });
    }
    let ids: Vec<String> = label_ids.into_iter().cloned().collect();
    let m = ids.len();
    if m < 2 {
        return Err(Error::invalid(format!(
            "alignment needs at least 2 strategies, got {m}"
        )));
    }
    let correlations_reported = m >= MIN_CORRELATION_SAMPLES;
    let mut warnings = Vec::new();
    if !correlations_reported {
        warnings.push(format!("correlations suppressed: only {m} strategies"));
    }

    let ranking = rank(labels, w)?;
    let composite: BTreeMap<&str, f64> = ranking
        .entries
        .iter()
        .map(|e| (e.strategy_id.as_str(), e.score))
        .collect();
    let target_values = |t: Target| -> Vec<f64> {
        ids.iter()
            .map(|id| {
                let l = labels.get(id).expect("id checked");
                match t {
                    Target::Mises => l.mises_top_k_mean,
                    Target::U3 => l.u3_range,
                    Target::Peeq => l.peeq_fraction,
                    Target::Composite => composite[id.as_str()],
                }
            })
            .collect()
    };

    let mut rows: Vec<(String, MetricGroup, Vec<f64>)> = proxy
        .metric_ids()
        .into_iter()
        .map(|metric| {
            let values = proxy
                .column(&metric, &ids)
                .expect("metric present in all rows");
            let group = metric_group(&metric).unwrap_or(MetricGroup::V2);
            (metric, group, values)
        })
        .collect();
    if let Some(alpha) = proxy_weights {
        alpha.validate()?;
        let scores = proxy.scores(alpha)?;
        rows.push((
            PROXY_SCORE_ROW.to_string(),
            MetricGroup::Score,
            ids.iter().map(|id| scores[id]).collect(),
        ));
    }

    let is_constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    let is_flat = |v: &[f64]| {
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        MetricRange { min, max }.is_degenerate()
    };
    let mut excluded = Vec::new();
    for (metric, _, values) in &mut rows {
        if is_flat(values) {
            let first = values[0];
            values.iter_mut().for_each(|v| *v = first);
            excluded.push(metric.clone());
            warnings.push(format!("proxy metric '{metric}' is constant across strategies; excluded from best-proxy selection"));
        }
    }

    let mut entries = Vec::with_capacity(rows.len() * Target::ALL.len());
    for target in Target::ALL {
        let y = target_values(target);
        if is_constant(&y) {
            warnings.push(format!(
                "target '{}' is constant across strategies; correlations undefined",
                target.name()
            ));
        }
        for (metric, group, x) in &rows {
            let (pearson_r, spearman_r) = if correlations_reported {
                (pearson(x, &y).ok(), spearman(x, &y).ok())
            } else {
                (None, None)
            };
            let pa = pairwise_agreement(x, &y)?;
            let sign_warning = matches!((pearson_r, spearman_r), (Some(p), Some(s)) if p * s < 0.0);
            entries.push(AlignmentEntry {
                metric: metric.clone(),
                group: *group,
                target,
                pearson: pearson_r,
                spearman: spearman_r,
                pairwise_agreement: pa.agreement,
                pairwise_mismatch: pa.mismatch,
                sign_warning,
                experimental: is_experimental(metric),
            });
        }
    }

    let eligible =
        |e: &&AlignmentEntry| e.group != MetricGroup::Score && !excluded.contains(&e.metric);
    let mut best_by_correlation = BTreeMap::new();
    let mut best_by_agreement = BTreeMap::new();
    for target in Target::ALL {
        let best_corr = entries
            .iter()
            .filter(|e| e.target == target)
            .filter(eligible)
            .filter_map(|e| Some((e, e.pearson?, e.spearman?)))
            .max_by(|(a, ap, asp), (b, bp, bsp)| {
                asp.abs()
                    .total_cmp(&bsp.abs())
                    .then(ap.abs().total_cmp(&bp.abs()))
                    .then(b.metric.cmp(&a.metric))
            })
            .map(|(e, p, s)| BestProxy {
                metric: e.metric.clone(),
                group: e.group,
                pearson: p,
                spearman: s,
            });
        best_by_correlation.insert(target, best_corr);

        let best_pair = entries
            .iter()
            .filter(|e| e.target == target)
            .filter(eligible)
            .max_by(|a, b| {
                a.pairwise_agreement
                    .total_cmp(&b.pairwise_agreement)
                    .then(b.metric.cmp(&a.metric))
            })
            .map(|e| BestAgreement {
                metric: e.metric.clone(),
                group: e.group,
                pairwise_agreement: e.pairwise_agreement,
            });
        best_by_agreement.insert(target, best_pair);
    }

    Ok(AlignmentReport {
        strategy_ids: ids,
        weights: *w,
        correlations_reported,
        entries,
        best_by_correlation,
        best_by_agreement,
        excluded_metrics: excluded,
        warnings,
        disclaimer: DISCLAIMER.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_reduce::LabelVector;
    use crate::proxy_eval::ProxyVector;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(pearson(&x, &x).unwrap(), 1.0);
        let neg: Vec<f64> = x.iter().map(|v| -v + 5.0).collect();
        assert_eq!(pearson(&x, &neg).unwrap(), -1.0);
        assert!(close(pearson(&x, &[1.0, 3.0, 2.0, 4.0]).unwrap(), 0.8));
        assert!(matches!(
            pearson(&x, &[2.0; 4]),
            Err(Error::DegenerateStatistic(_))
        ));
        assert!(pearson(&x, &[1.0, 2.0]).is_err());
        assert!(pearson(&[1.0, f64::NAN], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn spearman_examples() {
        assert!(close(
            spearman(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap(),
            -0.5
        ));
        let x = [0.5, 1.0, 7.0, 9.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| v.exp()).collect();
        assert!(close(spearman(&x, &y).unwrap(), 1.0));
        assert!(matches!(
            spearman(&x, &[1.0; 4]),
            Err(Error::DegenerateStatistic(_))
        ));
    }

    #[test]
    fn average_ranks_with_ties() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 10.0, 5.0]),
            vec![2.5, 4.0, 2.5, 1.0]
        );
    }

    #[test]
    fn agreement_examples() {
        let x = [1.0, 2.0, 3.0];
        assert_eq!(pairwise_agreement(&x, &x).unwrap().agreement, 1.0);
        assert_eq!(
            pairwise_agreement(&x, &[3.0, 2.0, 1.0]).unwrap().agreement,
            0.0
        );
        let pa = pairwise_agreement(&x, &[1.0, 3.0, 2.0]).unwrap();
        assert!(close(pa.agreement, 2.0 / 3.0));
        assert_eq!(pa.agreement + pa.mismatch, 1.0);
        // a tie agrees only with a tie
        assert_eq!(
            pairwise_agreement(&[1.0, 1.0], &[1.0, 2.0])
                .unwrap()
                .agreement,
            0.0
        );
        assert_eq!(
            pairwise_agreement(&[1.0, 1.0], &[4.0, 4.0])
                .unwrap()
                .agreement,
            1.0
        );
    }

    fn matrix(rows: &[(&str, &[(&str, f64)])]) -> ProxyMatrix {
        ProxyMatrix::from_vectors(
            rows.iter()
                .map(|(id, vals)| {
                    let v = vals.iter().map(|(k, x)| (k.to_string(), *x)).collect();
                    (id.to_string(), ProxyVector::from_values(v))
                })
                .collect(),
        )
        .unwrap()
    }

    fn labels() -> LabelSet {
        [
            ("a", 100.0, 0.5),
            ("b", 200.0, 0.3),
            ("c", 150.0, 0.9),
            ("d", 300.0, 0.1),
        ]
        .iter()
        .map(|&(id, m, u)| {
            (
                id.to_string(),
                LabelVector {
                    mises_top_k_mean: m,
                    u3_range: u,
                    peeq_fraction: 50.0,
                },
            )
        })
        .collect()
    }

    #[test]
    fn negated_composite_fully_disagrees() {
        let set = labels();
        let w = WeightVector::new(0.5, 0.5, 0.0).unwrap();
        let r = rank(&set, &w).unwrap();
        let neg: Vec<(String, f64)> = r
            .entries
            .iter()
            .map(|e| (e.strategy_id.clone(), -e.score))
            .collect();
        let rows: Vec<(&str, Vec<(&str, f64)>)> = neg
            .iter()
            .map(|(id, s)| {
                (
                    id.as_str(),
                    vec![("proxy_jump_mean", *s), ("edge_first_ratio", 0.5)],
                )
            })
            .collect();
        let rows_ref: Vec<(&str, &[(&str, f64)])> =
            rows.iter().map(|(id, v)| (*id, v.as_slice())).collect();
        let rep = alignment_report(&matrix(&rows_ref), &set, &w).unwrap();
        let e = rep.entry("proxy_jump_mean", Target::Composite).unwrap();
        assert_eq!(e.pairwise_agreement, 0.0);
        assert!(close(e.spearman.unwrap(), -1.0));

        // the constant metric is reported but never selected
        assert_eq!(rep.excluded_metrics, vec!["edge_first_ratio".to_string()]);
        assert!(rep
            .entry("edge_first_ratio", Target::Mises)
            .unwrap()
            .pearson
            .is_none());
        for (target, best) in &rep.best_by_correlation {
            match target {
                Target::Peeq => assert!(best.is_none()),
                _ => assert_eq!(best.as_ref().unwrap().metric, "proxy_jump_mean"),
            }
        }
        // peeq is constant in these labels
        assert!(rep
            .entry("proxy_jump_mean", Target::Peeq)
            .unwrap()
            .spearman
            .is_none());
        assert!(rep.warnings.iter().any(|w| w.contains("target 'peeq'")));
        assert_eq!(rep.disclaimer, DISCLAIMER);
    }

    #[test]
    fn id_mismatch_lists_symmetric_difference() {
        let m = matrix(&[
            ("a", &[("proxy_jump_mean", 1.0)]),
            ("b", &[("proxy_jump_mean", 2.0)]),
            ("c", &[("proxy_jump_mean", 3.0)]),
            ("x", &[("proxy_jump_mean", 4.0)]),
        ]);
        match alignment_report(&m, &labels(), &WeightVector::default()) {
            Err(Error::InputMismatch {
                missing,
                unexpected,
            }) => {
                assert_eq!(missing, vec!["x".to_string()]);
                assert_eq!(unexpected, vec!["d".to_string()]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn two_strategies_suppress_correlations() {
        let set: LabelSet = labels()
            .iter()
            .take(2)
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        let m = matrix(&[
            ("a", &[("proxy_jump_mean", 1.0)]),
            ("b", &[("proxy_jump_mean", 2.0)]),
        ]);
        let rep = alignment_report(&m, &set, &WeightVector::default()).unwrap();
        assert!(!rep.correlations_reported);
        assert!(rep
            .entries
            .iter()
            .all(|e| e.pearson.is_none() && e.spearman.is_none()));
        assert!(rep.best_by_correlation.values().all(Option::is_none));
        assert_eq!(
            rep.entry("proxy_jump_mean", Target::Mises)
                .unwrap()
                .pairwise_agreement,
            1.0
        );
    }

    #[test]
    fn proxy_score_row() {
        let m = matrix(&[
            ("a", &[("proxy_jump_mean", 1.0)]),
            ("b", &[("proxy_jump_mean", 2.0)]),
            ("c", &[("proxy_jump_mean", 3.0)]),
            ("d", &[("proxy_jump_mean", 4.0)]),
        ]);
        let alpha = ProxyWeights::single("proxy_jump_mean", 1.0);
        let rep =
            alignment_report_with(&m, &labels(), &WeightVector::default(), Some(&alpha)).unwrap();
        let row = rep.entry(PROXY_SCORE_ROW, Target::Mises).unwrap();
        let raw = rep.entry("proxy_jump_mean", Target::Mises).unwrap();
        assert_eq!(row.group, MetricGroup::Score);
        assert!(close(row.spearman.unwrap(), raw.spearman.unwrap()));
        assert!(
            rep.best_by_correlation[&Target::Mises]
                .as_ref()
                .unwrap()
                .metric
                != PROXY_SCORE_ROW
        );
    }
}
