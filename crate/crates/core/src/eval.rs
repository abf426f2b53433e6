//! Span F1 for NER, classification metrics for topics, and multi-run
//! aggregation.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use crate::bio::{spans_from_tags, Span, Tag};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Scores {
    pub fn from_counts(true_pos: usize, predicted: usize, actual: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(true_pos, predicted);
        let recall = ratio(true_pos, actual);
        Scores {
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelMetrics {
    pub label: String,
    pub scores: Scores,
    /// Gold instances of this label.
    pub support: usize,
    pub predicted: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Metrics {
    pub per_label: Vec<LabelMetrics>,
    pub micro: Scores,
    pub macro_avg: Scores,
}

impl Metrics {
    fn from_counts(
        counts: BTreeMap<String, (usize, usize, usize)>,
        order: Option<&[String]>,
    ) -> Self {
        let mut labels: Vec<&String> = counts.keys().collect();
        if let Some(order) = order {
            labels.sort_by_key(|l| order.iter().position(|o| o == *l).unwrap_or(usize::MAX));
        }
        let per_label: Vec<LabelMetrics> = labels
            .into_iter()
            .map(|l| {
                let (tp, predicted, support) = counts[l];
                LabelMetrics {
                    label: l.clone(),
                    scores: Scores::from_counts(tp, predicted, support),
                    support,
                    predicted,
                }
            })
            .collect();
        let (tp, predicted, support) = counts
            .values()
            .fold((0, 0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1, acc.2 + c.2));
        let n = per_label.len().max(1) as f64;
        let macro_avg = Scores {
            precision: per_label.iter().map(|m| m.scores.precision).sum::<f64>() / n,
            recall: per_label.iter().map(|m| m.scores.recall).sum::<f64>() / n,
            f1: per_label.iter().map(|m| m.scores.f1).sum::<f64>() / n,
        };
        Metrics {
            per_label,
            micro: Scores::from_counts(tp, predicted, support),
            macro_avg,
        }
    }

    pub fn label(&self, label: &str) -> Option<&LabelMetrics> {
        self.per_label.iter().find(|m| m.label == label)
    }

    /// Plain-text table with one row per label plus micro and macro rows.
    pub fn table(&self) -> String {
        let width = self
            .per_label
            .iter()
            .map(|m| m.label.chars().count())
            .chain([9])
            .max()
            .unwrap_or(9);
        let mut out = format!(
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>7}\n",
            "label", "precision", "recall", "f1", "support"
        );
        let support: usize = self.per_label.iter().map(|m| m.support).sum();
        let row = |out: &mut String, name: &str, s: &Scores, n: usize| {
            let _ = writeln!(
                out,
                "{name:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {n:>7}",
                s.precision, s.recall, s.f1
            );
        };
        for m in &self.per_label {
            row(&mut out, &m.label, &m.scores, m.support);
        }
        row(&mut out, "micro avg", &self.micro, support);
        row(&mut out, "macro avg", &self.macro_avg, support);
        out
    }

    /// CSV rows `setting,seed,label,precision,recall,f1,support`, without header.
    pub fn csv_rows(&self, setting: &str, seed: u64) -> String {
        let mut out = String::new();
        let support: usize = self.per_label.iter().map(|m| m.support).sum();
        let mut row = |label: &str, s: &Scores, n: usize| {
            let _ = writeln!(
                out,
                "{setting},{seed},{label},{},{},{},{n}",
                s.precision, s.recall, s.f1
            );
        };
        for m in &self.per_label {
            row(&m.label, &m.scores, m.support);
        }
        row("micro", &self.micro, support);
        row("macro", &self.macro_avg, support);
        out
    }
}

pub const METRICS_CSV_HEADER: &str = "setting,seed,label,precision,recall,f1,support";

/// Exact-match span evaluation: a predicted span is correct iff its type and
/// both boundaries equal a gold span.
pub fn span_f1(gold: &[Vec<Tag>], pred: &[Vec<Tag>]) -> Result<Metrics> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch(format!(
            "{} gold vs {} predicted sentences",
            gold.len(),
            pred.len()
        )));
    }
    let mut counts: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(Error::LengthMismatch(format!(
                "sentence {i}: {} gold vs {} predicted tags",
                g.len(),
                p.len()
            )));
        }
        let gold_spans: HashSet<Span> = spans_from_tags(g).into_iter().collect();
        let pred_spans = spans_from_tags(p);
        for s in &gold_spans {
            counts.entry(s.label.clone()).or_default().2 += 1;
        }
        for s in &pred_spans {
            let c = counts.entry(s.label.clone()).or_default();
            c.1 += 1;
            if gold_spans.contains(s) {
                c.0 += 1;
            }
        }
    }
    Ok(Metrics::from_counts(counts, None))
}

/// Per-class precision/recall/F1 with micro and macro averages.
///
/// Classes are reported when they occur in `gold` or `pred`, ordered as in
/// `labels` (unlisted classes last). Predictions outside `labels` (such as
/// abstentions) count as misses for the gold class.
pub fn classification_metrics<S: AsRef<str>>(
    gold: &[S],
    pred: &[S],
    labels: &[String],
) -> Result<Metrics> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch(format!(
            "{} gold vs {} predicted labels",
            gold.len(),
            pred.len()
        )));
    }
    let known = |l: &str| labels.iter().any(|x| x == l);
    let mut counts: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    for (g, p) in gold.iter().zip(pred) {
        let (g, p) = (g.as_ref(), p.as_ref());
        counts.entry(g.to_string()).or_default().2 += 1;
        if known(p) {
            let c = counts.entry(p.to_string()).or_default();
            c.1 += 1;
            if g == p {
                c.0 += 1;
            }
        }
    }
    Ok(Metrics::from_counts(counts, Some(labels)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateMetrics {
    pub mean: f64,
    /// Sample standard deviation divided by √n; 0 for a single run.
    pub stderr: f64,
    pub n: usize,
}

pub fn aggregate_runs(values: &[f64]) -> Result<AggregateMetrics> {
    if values.is_empty() {
        return Err(Error::Empty("run list"));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let stderr = if n == 1 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        var.sqrt() / (n as f64).sqrt()
    };
    Ok(AggregateMetrics { mean, stderr, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunVerdict {
    Keep,
    Flag,
}

/// Flags runs where two or more classes have a development F1 of exactly 0.
pub fn convergence_filter(dev: &Metrics) -> RunVerdict {
    let zeros = dev.per_label.iter().filter(|m| m.scores.f1 == 0.0).count();
    if zeros >= 2 {
        RunVerdict::Flag
    } else {
        RunVerdict::Keep
    }
}
