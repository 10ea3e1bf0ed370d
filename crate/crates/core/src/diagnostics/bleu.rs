use super::DiagnosticsError;
use crate::token::Token;
use std::collections::HashMap;

const MAX_ORDER: usize = 4;

/// Corpus BLEU-4: corpus-aggregated modified n-gram precisions, geometric
/// mean, no smoothing, brevity penalty e^(1−r/c), scaled to [0, 100].
pub fn corpus_bleu(
    outputs: &[Vec<Token>],
    references: &[Vec<Token>],
) -> Result<f64, DiagnosticsError> {
    if outputs.len() != references.len() {
        return Err(DiagnosticsError::Mismatch {
            left: outputs.len(),
            right: references.len(),
        });
    }
    if outputs.is_empty() {
        return Err(DiagnosticsError::Empty("bleu corpus".into()));
    }
    let mut matches = [0usize; MAX_ORDER];
    let mut totals = [0usize; MAX_ORDER];
    let mut out_len = 0usize;
    let mut ref_len = 0usize;
    for (out, reference) in outputs.iter().zip(references) {
        out_len += out.len();
        ref_len += reference.len();
        for n in 1..=MAX_ORDER {
            let ref_counts = ngram_counts(reference, n);
            for (gram, count) in ngram_counts(out, n) {
                totals[n - 1] += count;
                matches[n - 1] += count.min(ref_counts.get(&gram).copied().unwrap_or(0));
            }
        }
    }
    if out_len == 0 {
        return Ok(0.0);
    }
    let mut log_precision_sum = 0.0;
    for n in 0..MAX_ORDER {
        if matches[n] == 0 || totals[n] == 0 {
            return Ok(0.0);
        }
        log_precision_sum += (matches[n] as f64 / totals[n] as f64).ln();
    }
    let brevity = if out_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / out_len as f64).exp()
    };
    Ok(100.0 * brevity * (log_precision_sum / MAX_ORDER as f64).exp())
}

fn ngram_counts(tokens: &[Token], n: usize) -> HashMap<&[Token], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::token::parse_tokens;

    fn corpus(items: &[&str]) -> Vec<Vec<Token>> {
        items.iter().map(|s| parse_tokens(s).unwrap()).collect()
    }

    #[test]
    fn identity_scores_100() {
        let c = corpus(&["ABCA.", "CAB", "BBBB"]);
        assert!((corpus_bleu(&c, &c).unwrap() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn empty_outputs_score_0() {
        let outs = vec![vec![], vec![]];
        let refs = corpus(&["ABC", "CBA"]);
        assert_eq!(corpus_bleu(&outs, &refs).unwrap(), 0.0);
    }

    #[test]
    fn brevity_penalty_only() {
        // Both outputs are exact substrings, so every precision is 1 and the
        // score reduces to the brevity penalty: c=8, r=9, 100·e^(1−9/8).
        let outs = corpus(&["ABCAB", "CAC"]);
        let refs = corpus(&["ABCABC", "CAC"]);
        let expected = 100.0 * (1.0 - 9.0 / 8.0f64).exp();
        assert!((corpus_bleu(&outs, &refs).unwrap() - expected).abs() < 1e-9);
        assert!((expected - 88.24969025845955).abs() < 1e-9);
    }

    #[test]
    fn mismatched_lengths_error() {
        let outs = corpus(&["ABC"]);
        let refs = corpus(&["ABC", "CBA"]);
        assert!(corpus_bleu(&outs, &refs).is_err());
        assert!(corpus_bleu(&[], &[]).is_err());
    }
}
