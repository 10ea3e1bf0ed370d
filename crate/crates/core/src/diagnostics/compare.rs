use super::{corpus_bleu, label_pair, DiagnosticsError, ErrorKind};
use crate::channel::{ChannelSpec, Pair};
use crate::decoder::{decode_corpus, BeamConfig, PenaltyConfig, PenaltyMode};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub label: String,
    pub beam: BeamConfig,
    pub penalty: PenaltyConfig,
    pub under: usize,
    pub over: usize,
    pub correct: usize,
    /// Pairs the baseline got Under that this config gets Correct.
    pub resolved_under: usize,
    /// Pairs whose output token sequence differs from the baseline's.
    pub changed_outputs: usize,
    pub token_delta: i64,
    pub bleu: f64,
    pub bleu_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub pairs: usize,
    pub rows: Vec<CompareRow>,
}

fn config_label(penalty: &PenaltyConfig) -> String {
    match penalty.mode {
        PenaltyMode::None => "none".into(),
        PenaltyMode::Eos => format!(
            "eos(tau={}, beta={}, cap={})",
            penalty.tau, penalty.beta, penalty.cap
        ),
        PenaltyMode::Coverage => format!("coverage(beta_cov={})", penalty.beta_cov),
    }
}

/// Decodes the corpus once per config and reports each config's error counts
/// and deltas against the first config, which must be penalty-free.
pub fn compare_penalties(
    spec: &ChannelSpec,
    pairs: &[Pair],
    configs: &[(BeamConfig, PenaltyConfig)],
) -> Result<CompareReport, DiagnosticsError> {
    if configs.is_empty() {
        return Err(DiagnosticsError::Empty("compare configs".into()));
    }
    if configs[0].1.mode != PenaltyMode::None {
        return Err(DiagnosticsError::BadBaseline);
    }
    if pairs.is_empty() {
        return Err(DiagnosticsError::Empty("compare corpus".into()));
    }

    let references: Vec<Vec<crate::token::Token>> =
        pairs.iter().map(|p| p.target.clone()).collect();
    let mut base_outputs: Vec<Vec<crate::token::Token>> = Vec::new();
    let mut base_labels: Vec<ErrorKind> = Vec::new();
    let mut base_tokens: i64 = 0;
    let mut base_bleu = 0.0;
    let mut rows = Vec::with_capacity(configs.len());

    for (i, (beam, penalty)) in configs.iter().enumerate() {
        let records = decode_corpus(spec, pairs, beam, penalty)?;
        let mut under = 0;
        let mut over = 0;
        let mut correct = 0;
        let mut resolved_under = 0;
        let mut changed_outputs = 0;
        let mut tokens: i64 = 0;
        let mut outputs = Vec::with_capacity(records.len());
        let mut kinds = Vec::with_capacity(records.len());
        for (j, (record, pair)) in records.iter().zip(pairs).enumerate() {
            let label = label_pair(spec.level, &pair.source, &record.output)?;
            match label.kind {
                ErrorKind::Under => under += 1,
                ErrorKind::Over => over += 1,
                ErrorKind::Correct => correct += 1,
            }
            tokens += record.output.len() as i64;
            if i > 0 {
                if base_labels[j] == ErrorKind::Under && label.kind == ErrorKind::Correct {
                    resolved_under += 1;
                }
                if base_outputs[j] != record.output {
                    changed_outputs += 1;
                }
            }
            outputs.push(record.output.clone());
            kinds.push(label.kind);
        }
        let bleu = corpus_bleu(&outputs, &references)?;
        if i == 0 {
            base_outputs = outputs;
            base_labels = kinds;
            base_tokens = tokens;
            base_bleu = bleu;
        }
        rows.push(CompareRow {
            label: config_label(penalty),
            beam: *beam,
            penalty: *penalty,
            under,
            over,
            correct,
            resolved_under,
            changed_outputs,
            token_delta: tokens - base_tokens,
            bleu,
            bleu_delta: bleu - base_bleu,
        });
    }

    Ok(CompareReport {
        pairs: pairs.len(),
        rows,
    })
}
