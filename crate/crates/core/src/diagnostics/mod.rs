//! Output labeling (under/over-translation), document error typing, word
//! distributions, EOS log-probability aggregates, corpus BLEU, the ranking
//! derivation checker, and the penalty comparison report.

mod bleu;
mod compare;
mod derivation;
mod report;

pub use bleu::corpus_bleu;
pub use compare::{compare_penalties, CompareReport, CompareRow};
pub use derivation::{
    derivation_agreement, derivation_check, sample_derivation, DerivationOutcome,
    DerivationSample,
};
pub use report::{write_curve_csv, write_histogram_csv, write_json_report};

use crate::channel::Level;
use crate::decoder::{DecodeError, DecodeRecord};
use crate::token::{content_len, period_count, split_sentences, Token};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("empty input: {0}")]
    Empty(String),
    #[error("mismatched input lengths: {left} vs {right}")]
    Mismatch { left: usize, right: usize },
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error("document source has no sentence terminator")]
    NoPeriods,
    #[error("invalid derivation sample: {0}")]
    BadSample(String),
    #[error("first compared config must use penalty mode none")]
    BadBaseline,
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("report io: {0}")]
    Io(#[from] std::io::Error),
    #[error("report serialization: {0}")]
    Json(#[from] serde_json::Error),
    #[error("report csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Correct,
    Under,
    Over,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocErrorType {
    Last,
    Penultimate,
    Merge,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorLabel {
    pub kind: ErrorKind,
    pub doc_type: Option<DocErrorType>,
    pub missing_tokens: usize,
}

pub fn label_sentence(source: &[Token], output: &[Token]) -> ErrorLabel {
    let kind = match output.len().cmp(&source.len()) {
        std::cmp::Ordering::Less => ErrorKind::Under,
        std::cmp::Ordering::Greater => ErrorKind::Over,
        std::cmp::Ordering::Equal => ErrorKind::Correct,
    };
    ErrorLabel {
        kind,
        doc_type: None,
        missing_tokens: source.len().saturating_sub(output.len()),
    }
}

pub fn label_document(
    source: &[Token],
    output: &[Token],
) -> Result<ErrorLabel, DiagnosticsError> {
    let src_periods = period_count(source);
    if src_periods == 0 {
        return Err(DiagnosticsError::NoPeriods);
    }
    let out_periods = period_count(output);
    let kind = match out_periods.cmp(&src_periods) {
        std::cmp::Ordering::Less => ErrorKind::Under,
        std::cmp::Ordering::Greater => ErrorKind::Over,
        std::cmp::Ordering::Equal => ErrorKind::Correct,
    };
    let content_deficit = content_len(source).saturating_sub(content_len(output));
    if kind != ErrorKind::Under {
        return Ok(ErrorLabel {
            kind,
            doc_type: None,
            missing_tokens: content_deficit,
        });
    }

    let srcs = split_sentences(source);
    let outs = split_sentences(output);
    if src_periods - out_periods != 1 || outs.len() + 1 != srcs.len() {
        return Ok(ErrorLabel {
            kind,
            doc_type: Some(DocErrorType::Other),
            missing_tokens: content_deficit,
        });
    }

    let n = srcs.len();
    if n == 1 {
        return Ok(ErrorLabel {
            kind,
            doc_type: Some(DocErrorType::Last),
            missing_tokens: srcs[0].len(),
        });
    }

    let shared: usize = (0..n - 2).map(|j| alignment_cost(&outs[j], &srcs[j])).sum();
    let last_cost = shared + alignment_cost(&outs[n - 2], &srcs[n - 2]);
    let pen_cost = shared + alignment_cost(&outs[n - 2], &srcs[n - 1]);
    let merged: Vec<Token> = srcs[n - 2]
        .iter()
        .chain(srcs[n - 1].iter())
        .copied()
        .collect();
    let merge_cost = shared + alignment_cost(&outs[n - 2], &merged);

    let (doc_type, missing) = [
        (last_cost, DocErrorType::Last, srcs[n - 1].len()),
        (pen_cost, DocErrorType::Penultimate, srcs[n - 2].len()),
        (merge_cost, DocErrorType::Merge, content_deficit),
    ]
    .into_iter()
    .enumerate()
    .min_by_key(|(priority, (cost, _, _))| (*cost, *priority))
    .map(|(_, (_, ty, missing))| (ty, missing))
    .expect("three hypotheses");

    Ok(ErrorLabel {
        kind,
        doc_type: Some(doc_type),
        missing_tokens: missing,
    })
}

pub fn label_pair(
    level: Level,
    source: &[Token],
    output: &[Token],
) -> Result<ErrorLabel, DiagnosticsError> {
    match level {
        Level::Sentence => Ok(label_sentence(source, output)),
        Level::Document => label_document(source, output),
    }
}

/// Output tokens not explained by a monotone alignment into the hypothesis
/// sentence; source-side omissions are free since the hypotheses already
/// account for the dropped sentence.
fn alignment_cost(output: &[Token], hypothesis: &[Token]) -> usize {
    output.len() - lcs_len(output, hypothesis)
}

fn lcs_len(a: &[Token], b: &[Token]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for &x in a {
        for (j, &y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WordShares {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl WordShares {
    pub fn get(&self, t: Token) -> f64 {
        match t {
            Token::A => self.a,
            Token::B => self.b,
            Token::C => self.c,
            Token::Period => 0.0,
        }
    }

    fn from_counts(counts: [usize; 3], what: &str) -> Result<WordShares, DiagnosticsError> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(DiagnosticsError::Empty(format!("no {what} content tokens")));
        }
        let t = total as f64;
        Ok(WordShares {
            a: counts[0] as f64 / t,
            b: counts[1] as f64 / t,
            c: counts[2] as f64 / t,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WordDistribution {
    pub source: WordShares,
    pub output: WordShares,
}

/// Content-word shares over the two sides of a subset of pairs. PERIOD is
/// excluded, so each side sums to 1.
pub fn word_distribution(
    subset: &[(&[Token], &[Token])],
) -> Result<WordDistribution, DiagnosticsError> {
    if subset.is_empty() {
        return Err(DiagnosticsError::Empty("word_distribution subset".into()));
    }
    let mut src = [0usize; 3];
    let mut out = [0usize; 3];
    for (source, output) in subset {
        for t in *source {
            if let Some(i) = t.content_index() {
                src[i] += 1;
            }
        }
        for t in *output {
            if let Some(i) = t.content_index() {
                out[i] += 1;
            }
        }
    }
    Ok(WordDistribution {
        source: WordShares::from_counts(src, "source")?,
        output: WordShares::from_counts(out, "output")?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EosHistogram {
    pub bin_width: f64,
    /// bin index k covers [k·bin_width, (k+1)·bin_width).
    pub bins: BTreeMap<i64, (usize, usize)>,
    pub mean_all: f64,
    pub mean_under: Option<f64>,
}

pub fn eos_histogram(
    records: &[DecodeRecord],
    labels: &[ErrorLabel],
    bin_width: f64,
) -> Result<EosHistogram, DiagnosticsError> {
    if records.is_empty() {
        return Err(DiagnosticsError::Empty("eos_histogram records".into()));
    }
    if records.len() != labels.len() {
        return Err(DiagnosticsError::Mismatch {
            left: records.len(),
            right: labels.len(),
        });
    }
    if !(bin_width > 0.0) || !bin_width.is_finite() {
        return Err(DiagnosticsError::BadParam(
            "bin_width must be positive and finite".into(),
        ));
    }
    let mut bins: BTreeMap<i64, (usize, usize)> = BTreeMap::new();
    let mut sum_all = 0.0;
    let mut sum_under = 0.0;
    let mut n_under = 0usize;
    for (record, label) in records.iter().zip(labels) {
        let v = record.eos_logprob;
        let bin = (v / bin_width).floor() as i64;
        let entry = bins.entry(bin).or_insert((0, 0));
        entry.0 += 1;
        sum_all += v;
        if label.kind == ErrorKind::Under {
            entry.1 += 1;
            sum_under += v;
            n_under += 1;
        }
    }
    Ok(EosHistogram {
        bin_width,
        bins,
        mean_all: sum_all / records.len() as f64,
        mean_under: (n_under > 0).then(|| sum_under / n_under as f64),
    })
}

/// Mean winning-candidate EOS log-probability grouped by the number of
/// missing tokens; only groups with missing ≥ 1 appear.
pub fn eos_by_missing(
    records: &[DecodeRecord],
    labels: &[ErrorLabel],
) -> Result<BTreeMap<usize, (usize, f64)>, DiagnosticsError> {
    if records.len() != labels.len() {
        return Err(DiagnosticsError::Mismatch {
            left: records.len(),
            right: labels.len(),
        });
    }
    let mut sums: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    for (record, label) in records.iter().zip(labels) {
        if label.missing_tokens >= 1 {
            let entry = sums.entry(label.missing_tokens).or_insert((0, 0.0));
            entry.0 += 1;
            entry.1 += record.eos_logprob;
        }
    }
    Ok(sums
        .into_iter()
        .map(|(k, (n, s))| (k, (n, s / n as f64)))
        .collect())
}

/// Spearman rank correlation with average ranks for ties. `None` when fewer
/// than two points or either side has zero rank variance.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}
