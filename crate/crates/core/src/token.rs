use serde::{Deserialize, Serialize};
use std::fmt;

/// A target-side symbol. `Period` terminates sentences in document-level
/// corpora; it never appears at sentence level. EOS is not a token: it is the
/// termination event of a whole output and is handled separately by scorers
/// and the decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Token {
    A,
    B,
    C,
    #[serde(rename = ".")]
    Period,
}

impl Token {
    pub const ALL: [Token; 4] = [Token::A, Token::B, Token::C, Token::Period];
    pub const CONTENT: [Token; 3] = [Token::A, Token::B, Token::C];

    pub fn index(self) -> usize {
        match self {
            Token::A => 0,
            Token::B => 1,
            Token::C => 2,
            Token::Period => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Token> {
        Token::ALL.get(i).copied()
    }

    /// Index into a 3-wide content-word table; `None` for `Period`.
    pub fn content_index(self) -> Option<usize> {
        match self {
            Token::Period => None,
            t => Some(t.index()),
        }
    }

    pub fn is_content(self) -> bool {
        self != Token::Period
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Token::A => "A",
            Token::B => "B",
            Token::C => "C",
            Token::Period => ".",
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parses a compact token string such as "CAB" or "AB.C.".
pub fn parse_tokens(s: &str) -> Result<Vec<Token>, String> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            'A' => Ok(Token::A),
            'B' => Ok(Token::B),
            'C' => Ok(Token::C),
            '.' => Ok(Token::Period),
            other => Err(format!("invalid token character {other:?}")),
        })
        .collect()
}

/// Renders a token sequence as a compact string, e.g. "CAB.".
pub fn format_tokens(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.as_str()).collect()
}

/// Number of non-`Period` tokens.
pub fn content_len(tokens: &[Token]) -> usize {
    tokens.iter().filter(|t| t.is_content()).count()
}

/// Number of `Period` tokens.
pub fn period_count(tokens: &[Token]) -> usize {
    tokens.iter().filter(|t| **t == Token::Period).count()
}

/// Splits a document into sentences: runs of content words, each terminated
/// by a `Period`. The periods themselves are not included.
pub fn split_sentences(tokens: &[Token]) -> Vec<Vec<Token>> {
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    for &t in tokens {
        if t == Token::Period {
            sentences.push(std::mem::take(&mut current));
        } else {
            current.push(t);
        }
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    sentences
}
