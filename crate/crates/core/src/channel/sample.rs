use super::{ChannelSpec, GenMode, Level, Pair, TranslationMatrix};
use crate::token::Token;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Drop,
    Once,
    Twice,
}

fn draw_outcome<R: Rng>(spec: &ChannelSpec, rng: &mut R) -> Outcome {
    let u: f64 = rng.gen();
    if u < spec.noise.p_drop() {
        Outcome::Drop
    } else if u < spec.noise.p_distort {
        Outcome::Twice
    } else {
        Outcome::Once
    }
}

fn draw_word<R: Rng>(matrix: &TranslationMatrix, source: Token, rng: &mut R) -> Token {
    let row = matrix.row(source);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return Token::CONTENT[i];
        }
    }
    Token::CONTENT[2]
}

fn render_words<R: Rng>(spec: &ChannelSpec, words: &[Token], rng: &mut R, out: &mut Vec<Token>) {
    for &w in words {
        match draw_outcome(spec, rng) {
            Outcome::Drop => {}
            Outcome::Once => out.push(draw_word(&spec.matrix, w, rng)),
            Outcome::Twice => {
                out.push(draw_word(&spec.matrix, w, rng));
                out.push(draw_word(&spec.matrix, w, rng));
            }
        }
    }
}

fn render_sentence_copy<R: Rng>(
    spec: &ChannelSpec,
    words: &[Token],
    rng: &mut R,
    out: &mut Vec<Token>,
) {
    render_words(spec, words, rng, out);
    out.push(Token::Period);
}

/// Runs the generative channel once on `source`, producing a target.
pub fn sample_target<R: Rng>(spec: &ChannelSpec, source: &[Token], rng: &mut R) -> Vec<Token> {
    let mut out = Vec::new();
    match spec.level {
        Level::Sentence => render_words(spec, source, rng, &mut out),
        Level::Document => {
            for sentence in crate::token::split_sentences(source) {
                match draw_outcome(spec, rng) {
                    Outcome::Drop => {}
                    Outcome::Once => render_sentence_copy(spec, &sentence, rng, &mut out),
                    Outcome::Twice => {
                        render_sentence_copy(spec, &sentence, rng, &mut out);
                        render_sentence_copy(spec, &sentence, rng, &mut out);
                    }
                }
            }
        }
    }
    out
}

/// Draws a source: uniform words, uniform length in the configured range,
/// and at document level a uniform number of period-terminated sentences.
pub fn sample_source<R: Rng>(spec: &ChannelSpec, rng: &mut R) -> Vec<Token> {
    let draw_sentence = |rng: &mut R, out: &mut Vec<Token>| {
        let (lo, hi) = spec.sentence_len_range;
        let len = rng.gen_range(lo..=hi);
        for _ in 0..len {
            out.push(Token::CONTENT[rng.gen_range(0..3)]);
        }
    };
    let mut out = Vec::new();
    match spec.level {
        Level::Sentence => draw_sentence(rng, &mut out),
        Level::Document => {
            let (lo, hi) = spec.sentences_per_doc_range;
            let count = rng.gen_range(lo..=hi);
            for _ in 0..count {
                draw_sentence(rng, &mut out);
                out.push(Token::Period);
            }
        }
    }
    out
}

/// Generates the pair with the given id. Every pair uses its own RNG stream
/// derived from (seed, id), so corpora are reproducible and independent of
/// generation order.
pub fn sample_pair(spec: &ChannelSpec, mode: GenMode, seed: u64, id: u64) -> Pair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    let source = sample_source(spec, &mut rng);
    let target = match mode {
        GenMode::Test => source.clone(),
        GenMode::Train => sample_target(spec, &source, &mut rng),
    };
    Pair {
        id,
        level: spec.level,
        source,
        target,
    }
}

/// Generates `n` pairs with ids 0..n, in id order.
pub fn generate_corpus(spec: &ChannelSpec, n: usize, mode: GenMode, seed: u64) -> Vec<Pair> {
    (0..n as u64)
        .map(|id| sample_pair(spec, mode, seed, id))
        .collect()
}
