//! Brute-force oracle over the channel's generative choices. Nothing here
//! touches the compiled automaton: probabilities come straight from walking
//! drop/translate/duplicate decisions, so the two routes are independent.

use super::InferenceError;
use crate::channel::{ChannelSpec, Level};
use crate::token::{content_len, split_sentences, Token};
use std::collections::HashMap;

/// Largest source, in content words, that the exhaustive enumerator accepts.
pub const DEFAULT_ENUMERATION_GUARD: usize = 6;

/// Upper bound on the estimated distinct-output count before the exhaustive
/// enumerator refuses.
pub const SUPPORT_CAP: u128 = 20_000_000;

const WALKER_GUARD: usize = 12;

fn strings_up_to(max_len: usize) -> u128 {
    let mut total: u128 = 0;
    let mut pw: u128 = 1;
    for _ in 0..=max_len {
        total = total.saturating_add(pw);
        pw = pw.saturating_mul(3);
    }
    total
}

/// Upper bound on the number of distinct complete outputs.
pub fn support_estimate(spec: &ChannelSpec, source: &[Token]) -> u128 {
    match spec.level {
        Level::Sentence => strings_up_to(2 * source.len()),
        Level::Document => split_sentences(source)
            .iter()
            .map(|s| {
                let c = strings_up_to(2 * s.len());
                1u128.saturating_add(c).saturating_add(c.saturating_mul(c))
            })
            .fold(1u128, |acc, n| acc.saturating_mul(n)),
    }
}

/// Remaining generative work, built as a linked list on the call stack.
enum K<'a> {
    Done,
    Words(&'a [Token], &'a K<'a>),
    Period(&'a K<'a>),
    Sentences(&'a [Vec<Token>], &'a K<'a>),
}

fn walk_all(
    spec: &ChannelSpec,
    k: &K,
    buf: &mut Vec<Token>,
    p: f64,
    max_len: usize,
    sink: &mut dyn FnMut(&[Token], f64),
) {
    match *k {
        K::Done => sink(buf, p),
        K::Period(next) => {
            if buf.len() < max_len {
                buf.push(Token::Period);
                walk_all(spec, next, buf, p, max_len, sink);
                buf.pop();
            }
        }
        K::Words(ws, next) => {
            let Some((&w, rest)) = ws.split_first() else {
                return walk_all(spec, next, buf, p, max_len, sink);
            };
            let tail = K::Words(rest, next);
            walk_all(spec, &tail, buf, p * spec.noise.p_drop(), max_len, sink);
            for &t in &Token::CONTENT {
                let q = spec.matrix.prob(w, t);
                if q == 0.0 || buf.len() >= max_len {
                    continue;
                }
                buf.push(t);
                walk_all(spec, &tail, buf, p * spec.noise.p_translate() * q, max_len, sink);
                for &t2 in &Token::CONTENT {
                    let q2 = spec.matrix.prob(w, t2);
                    if q2 == 0.0 || buf.len() >= max_len {
                        continue;
                    }
                    buf.push(t2);
                    walk_all(spec, &tail, buf, p * spec.noise.p_dup() * q * q2, max_len, sink);
                    buf.pop();
                }
                buf.pop();
            }
        }
        K::Sentences(sents, next) => {
            let Some((s, rest)) = sents.split_first() else {
                return walk_all(spec, next, buf, p, max_len, sink);
            };
            let tail = K::Sentences(rest, next);
            walk_all(spec, &tail, buf, p * spec.noise.p_drop(), max_len, sink);
            let once_period = K::Period(&tail);
            let once = K::Words(s, &once_period);
            walk_all(spec, &once, buf, p * spec.noise.p_translate(), max_len, sink);
            let twice_period2 = K::Period(&tail);
            let twice_words2 = K::Words(s, &twice_period2);
            let twice_period1 = K::Period(&twice_words2);
            let twice = K::Words(s, &twice_period1);
            walk_all(spec, &twice, buf, p * spec.noise.p_dup(), max_len, sink);
        }
    }
}

#[derive(PartialEq, Clone, Copy)]
enum MatchMode {
    /// Accumulate P(output starts with the target); once the target is
    /// consumed, every continuation contributes its full mass.
    Prefix,
    /// Accumulate P(output equals the target exactly).
    Exact,
}

fn walk_matched(
    spec: &ChannelSpec,
    k: &K,
    target: &[Token],
    pos: usize,
    p: f64,
    mode: MatchMode,
    acc: &mut f64,
) {
    if mode == MatchMode::Prefix && pos == target.len() {
        *acc += p;
        return;
    }
    match *k {
        K::Done => {
            if pos == target.len() {
                *acc += p;
            }
        }
        K::Period(next) => {
            if pos < target.len() && target[pos] == Token::Period {
                walk_matched(spec, next, target, pos + 1, p, mode, acc);
            }
        }
        K::Words(ws, next) => {
            let Some((&w, rest)) = ws.split_first() else {
                return walk_matched(spec, next, target, pos, p, mode, acc);
            };
            let tail = K::Words(rest, next);
            walk_matched(spec, &tail, target, pos, p * spec.noise.p_drop(), mode, acc);
            if pos >= target.len() {
                return;
            }
            let q = spec.matrix.prob(w, target[pos]);
            if q == 0.0 {
                return;
            }
            walk_matched(
                spec,
                &tail,
                target,
                pos + 1,
                p * spec.noise.p_translate() * q,
                mode,
                acc,
            );
            if pos + 1 == target.len() {
                if mode == MatchMode::Prefix {
                    *acc += p * spec.noise.p_dup() * q;
                }
            } else {
                let q2 = spec.matrix.prob(w, target[pos + 1]);
                if q2 > 0.0 {
                    walk_matched(
                        spec,
                        &tail,
                        target,
                        pos + 2,
                        p * spec.noise.p_dup() * q * q2,
                        mode,
                        acc,
                    );
                }
            }
        }
        K::Sentences(sents, next) => {
            let Some((s, rest)) = sents.split_first() else {
                return walk_matched(spec, next, target, pos, p, mode, acc);
            };
            let tail = K::Sentences(rest, next);
            walk_matched(spec, &tail, target, pos, p * spec.noise.p_drop(), mode, acc);
            let once_period = K::Period(&tail);
            let once = K::Words(s, &once_period);
            walk_matched(
                spec,
                &once,
                target,
                pos,
                p * spec.noise.p_translate(),
                mode,
                acc,
            );
            let twice_period2 = K::Period(&tail);
            let twice_words2 = K::Words(s, &twice_period2);
            let twice_period1 = K::Period(&twice_words2);
            let twice = K::Words(s, &twice_period1);
            walk_matched(spec, &twice, target, pos, p * spec.noise.p_dup(), mode, acc);
        }
    }
}

fn validated<'a>(
    spec: &ChannelSpec,
    source: &'a [Token],
    bound: usize,
) -> Result<Vec<Vec<Token>>, InferenceError> {
    spec.validate()?;
    spec.validate_source(source)?;
    let len = content_len(source);
    if len > bound {
        return Err(InferenceError::SourceTooLong { len, bound });
    }
    Ok(match spec.level {
        Level::Sentence => vec![source.to_vec()],
        Level::Document => split_sentences(source),
    })
}

fn with_root<R>(
    spec: &ChannelSpec,
    sentences: &[Vec<Token>],
    f: impl FnOnce(&K) -> R,
) -> R {
    match spec.level {
        Level::Sentence => f(&K::Words(&sentences[0], &K::Done)),
        Level::Document => f(&K::Sentences(sentences, &K::Done)),
    }
}

/// Every complete output of length ≤ `max_len` with its probability,
/// deduplicated, most probable first.
pub fn enumerate_outputs(
    spec: &ChannelSpec,
    source: &[Token],
    max_len: usize,
) -> Result<Vec<(Vec<Token>, f64)>, InferenceError> {
    let sentences = validated(spec, source, DEFAULT_ENUMERATION_GUARD)?;
    let estimate = support_estimate(spec, source);
    if estimate > SUPPORT_CAP {
        return Err(InferenceError::SupportTooLarge {
            estimate,
            cap: SUPPORT_CAP,
        });
    }
    let mut map: HashMap<Vec<Token>, f64> = HashMap::new();
    let mut buf = Vec::new();
    with_root(spec, &sentences, |root| {
        walk_all(spec, root, &mut buf, 1.0, max_len, &mut |out, p| {
            *map.entry(out.to_vec()).or_insert(0.0) += p;
        });
    });
    let mut list: Vec<(Vec<Token>, f64)> = map.into_iter().collect();
    list.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    Ok(list)
}

/// P(complete output starts with `prefix`), by constrained path walking.
pub fn prefix_mass(
    spec: &ChannelSpec,
    source: &[Token],
    prefix: &[Token],
) -> Result<f64, InferenceError> {
    let sentences = validated(spec, source, WALKER_GUARD)?;
    let mut acc = 0.0;
    with_root(spec, &sentences, |root| {
        walk_matched(spec, root, prefix, 0, 1.0, MatchMode::Prefix, &mut acc);
    });
    Ok(acc)
}

/// P(complete output equals `output` exactly), by constrained path walking.
pub fn exact_output_mass(
    spec: &ChannelSpec,
    source: &[Token],
    output: &[Token],
) -> Result<f64, InferenceError> {
    let sentences = validated(spec, source, WALKER_GUARD)?;
    let mut acc = 0.0;
    with_root(spec, &sentences, |root| {
        walk_matched(spec, root, output, 0, 1.0, MatchMode::Exact, &mut acc);
    });
    Ok(acc)
}

/// Total generative mass computed without materializing the output set:
/// per-sentence single-copy masses are enumerated by path walking and
/// combined as Π_j (p_drop + p_translate·m_j + p_dup·m_j²). At sentence
/// level this is the plain path-mass sum.
pub fn document_total_mass(spec: &ChannelSpec, source: &[Token]) -> Result<f64, InferenceError> {
    let sentences = validated(spec, source, usize::MAX)?;
    let copy_mass = |words: &[Token]| -> Result<f64, InferenceError> {
        if words.len() > DEFAULT_ENUMERATION_GUARD {
            return Err(InferenceError::SourceTooLong {
                len: words.len(),
                bound: DEFAULT_ENUMERATION_GUARD,
            });
        }
        let mut mass = 0.0;
        let mut buf = Vec::new();
        walk_all(
            spec,
            &K::Words(words, &K::Done),
            &mut buf,
            1.0,
            2 * words.len(),
            &mut |_, p| mass += p,
        );
        Ok(mass)
    };
    match spec.level {
        Level::Sentence => copy_mass(source),
        Level::Document => {
            let mut total = 1.0;
            for s in &sentences {
                let m = copy_mass(s)?;
                total *= spec.noise.p_drop()
                    + spec.noise.p_translate() * m
                    + spec.noise.p_dup() * m * m;
            }
            Ok(total)
        }
    }
}
