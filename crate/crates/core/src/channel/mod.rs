//! The synthetic noisy translation channel: a fixed per-word translation
//! table plus drop/duplicate noise, applied at the word level for sentence
//! corpora and additionally at the sentence level for document corpora.

mod io;
mod sample;

pub use io::{read_corpus, read_spec, write_corpus, write_spec};
pub use sample::{generate_corpus, sample_pair, sample_source, sample_target};

use crate::token::Token;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("translation row for {word} sums to {sum}, expected 1")]
    RowNotNormalized { word: Token, sum: f64 },
    #[error("translation probability for {word} is negative: {value}")]
    NegativeProbability { word: Token, value: f64 },
    #[error("noise probability {value} outside [0, 1]")]
    BadNoise { value: f64 },
    #[error("empty range {lo}..={hi}")]
    BadRange { lo: usize, hi: usize },
    #[error("{0}")]
    BadSource(String),
    #[error("corpus io: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus line {line}: {source}")]
    BadLine {
        line: usize,
        source: serde_json::Error,
    },
    #[error("spec file: {0}")]
    BadSpec(#[from] serde_json::Error),
}

/// Per-source-word distribution over target content words, row-major with
/// rows and columns ordered A, B, C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TranslationMatrix {
    rows: [[f64; 3]; 3],
}

impl TranslationMatrix {
    pub fn new(rows: [[f64; 3]; 3]) -> Result<Self, ChannelError> {
        for (r, row) in rows.iter().enumerate() {
            let word = Token::CONTENT[r];
            for &p in row {
                if p < 0.0 {
                    return Err(ChannelError::NegativeProbability { word, value: p });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(ChannelError::RowNotNormalized { word, sum });
            }
        }
        Ok(TranslationMatrix { rows })
    }

    pub fn rows(&self) -> &[[f64; 3]; 3] {
        &self.rows
    }

    /// P(target | source) for content words.
    pub fn prob(&self, source: Token, target: Token) -> f64 {
        let (s, t) = match (source.content_index(), target.content_index()) {
            (Some(s), Some(t)) => (s, t),
            _ => return 0.0,
        };
        self.rows[s][t]
    }

    pub fn row(&self, source: Token) -> &[f64; 3] {
        &self.rows[source.content_index().expect("content word")]
    }
}

impl Default for TranslationMatrix {
    fn default() -> Self {
        TranslationMatrix {
            rows: [[0.8, 0.1, 0.1], [0.2, 0.6, 0.2], [0.3, 0.3, 0.4]],
        }
    }
}

/// Entropy in nats of a source word's target distribution.
pub fn word_entropy(matrix: &TranslationMatrix, word: Token) -> f64 {
    matrix
        .row(word)
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

/// Distortion noise. A distortion event splits into equal halves: with
/// probability `p_distort/2` the unit is dropped, with `p_distort/2` it is
/// rendered twice (two independent draws); otherwise it is rendered once.
/// The same split governs words always, and whole sentences at document
/// level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub p_distort: f64,
}

impl NoiseSpec {
    pub fn new(p_distort: f64) -> Result<Self, ChannelError> {
        if !(0.0..=1.0).contains(&p_distort) {
            return Err(ChannelError::BadNoise { value: p_distort });
        }
        Ok(NoiseSpec { p_distort })
    }

    pub fn p_drop(&self) -> f64 {
        self.p_distort / 2.0
    }

    pub fn p_dup(&self) -> f64 {
        self.p_distort / 2.0
    }

    pub fn p_translate(&self) -> f64 {
        1.0 - self.p_distort
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec { p_distort: 0.15 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Sentence,
    Document,
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Level::Sentence => f.write_str("sentence"),
            Level::Document => f.write_str("document"),
        }
    }
}

/// Full description of the generative channel for one corpus level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub level: Level,
    #[serde(default)]
    pub matrix: TranslationMatrix,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default = "default_sentence_len_range")]
    pub sentence_len_range: (usize, usize),
    #[serde(default = "default_sentences_per_doc_range")]
    pub sentences_per_doc_range: (usize, usize),
}

fn default_sentence_len_range() -> (usize, usize) {
    (1, 20)
}

fn default_sentences_per_doc_range() -> (usize, usize) {
    (1, 5)
}

impl ChannelSpec {
    pub fn sentence() -> Self {
        ChannelSpec {
            level: Level::Sentence,
            matrix: TranslationMatrix::default(),
            noise: NoiseSpec::default(),
            sentence_len_range: default_sentence_len_range(),
            sentences_per_doc_range: default_sentences_per_doc_range(),
        }
    }

    pub fn document() -> Self {
        ChannelSpec {
            level: Level::Document,
            ..ChannelSpec::sentence()
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        TranslationMatrix::new(*self.matrix.rows())?;
        NoiseSpec::new(self.noise.p_distort)?;
        for &(lo, hi) in [&self.sentence_len_range, &self.sentences_per_doc_range] {
            if lo > hi || lo == 0 {
                return Err(ChannelError::BadRange { lo, hi });
            }
        }
        Ok(())
    }

    /// Checks that `source` is well-formed for this spec's level: content
    /// words only at sentence level; at document level, one or more
    /// sentences each terminated by a period.
    pub fn validate_source(&self, source: &[Token]) -> Result<(), ChannelError> {
        if source.is_empty() {
            return Err(ChannelError::BadSource("source must be non-empty".into()));
        }
        match self.level {
            Level::Sentence => {
                if source.contains(&Token::Period) {
                    return Err(ChannelError::BadSource(
                        "sentence-level source must not contain periods".into(),
                    ));
                }
            }
            Level::Document => {
                if source.last() != Some(&Token::Period) {
                    return Err(ChannelError::BadSource(
                        "document source must end with a period".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenMode {
    Train,
    Test,
}

impl std::fmt::Display for GenMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GenMode::Train => f.write_str("train"),
            GenMode::Test => f.write_str("test"),
        }
    }
}

/// One corpus entry: a source sequence and the channel's rendering of it.
/// In test mode the target is a verbatim copy of the source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub id: u64,
    pub level: Level,
    pub source: Vec<Token>,
    pub target: Vec<Token>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_matrix_rows() {
        let m = TranslationMatrix::default();
        assert_eq!(m.prob(Token::A, Token::A), 0.8);
        assert_eq!(m.prob(Token::B, Token::B), 0.6);
        assert_eq!(m.prob(Token::C, Token::C), 0.4);
        assert_eq!(m.prob(Token::C, Token::A), 0.3);
    }

    #[test]
    fn entropy_values() {
        let m = TranslationMatrix::default();
        assert!((word_entropy(&m, Token::A) - 0.639032).abs() < 1e-6);
        assert!((word_entropy(&m, Token::B) - 0.950271).abs() < 1e-6);
        assert!((word_entropy(&m, Token::C) - 1.088900).abs() < 1e-6);
        let deterministic =
            TranslationMatrix::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(word_entropy(&deterministic, Token::A), 0.0);
    }

    #[test]
    fn entropy_orders_words() {
        let m = TranslationMatrix::default();
        let h: Vec<f64> = Token::CONTENT
            .iter()
            .map(|&w| word_entropy(&m, w))
            .collect();
        assert!(h[0] < h[1] && h[1] < h[2]);
    }

    #[test]
    fn bad_matrix_rejected() {
        assert!(TranslationMatrix::new([[0.9, 0.2, 0.1], [0.2, 0.6, 0.2], [0.3, 0.3, 0.4]])
            .is_err());
        assert!(TranslationMatrix::new([[1.1, -0.2, 0.1], [0.2, 0.6, 0.2], [0.3, 0.3, 0.4]])
            .is_err());
    }

    #[test]
    fn noise_split_is_even() {
        let n = NoiseSpec::default();
        assert_eq!(n.p_drop(), 0.075);
        assert_eq!(n.p_dup(), 0.075);
        assert_eq!(n.p_translate(), 0.85);
        assert!(NoiseSpec::new(1.5).is_err());
    }

    #[test]
    fn source_validation() {
        let s = ChannelSpec::sentence();
        assert!(s.validate_source(&[Token::A, Token::B]).is_ok());
        assert!(s.validate_source(&[Token::A, Token::Period]).is_err());
        let d = ChannelSpec::document();
        assert!(d.validate_source(&[Token::A, Token::Period]).is_ok());
        assert!(d.validate_source(&[Token::A]).is_err());
    }
}
