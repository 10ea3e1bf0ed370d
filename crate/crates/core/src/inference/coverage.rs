//! Alignment posterior coverage: for a complete output, the probability per
//! source content word that the word emitted at least one token. Computed
//! from the raw generative graph by a constrained forward pass shared
//! between one unblocked and per-word blocked runs, so the ratio is exact.

use super::automaton::EmissionAutomaton;
use super::InferenceError;
use crate::logprob::LOG_ZERO;
use crate::token::Token;

pub(crate) fn alignment_coverage(
    aut: &EmissionAutomaton,
    output: &[Token],
) -> Result<Vec<f64>, InferenceError> {
    let ln_total = constrained_forward(aut, output, None);
    if ln_total == LOG_ZERO {
        return Err(InferenceError::ImpossibleOutput);
    }
    let mut coverage = Vec::with_capacity(aut.word_count());
    for w in 0..aut.word_count() as u32 {
        let ln_blocked = constrained_forward(aut, output, Some(w));
        let cov = if ln_blocked == LOG_ZERO {
            1.0
        } else {
            1.0 - (ln_blocked - ln_total).exp()
        };
        coverage.push(cov.clamp(0.0, 1.0));
    }
    Ok(coverage)
}

/// ln P(complete output == `output`, all emissions of word `blocked`
/// suppressed). Works in per-position rescaled linear space; silent edges
/// only ever point at later-created states, so one ascending sweep settles
/// each position.
fn constrained_forward(aut: &EmissionAutomaton, output: &[Token], blocked: Option<u32>) -> f64 {
    let raw = aut.raw();
    let n = raw.edges_from.len();
    let m = output.len();
    let mut cur = vec![0.0f64; n];
    cur[raw.start as usize] = 1.0;
    let mut log_scale = 0.0f64;
    for pos in 0..=m {
        let mut next = vec![0.0f64; n];
        for s in 0..n {
            let v = cur[s];
            if v == 0.0 {
                continue;
            }
            for edge in &raw.edges_from[s] {
                match edge.emit {
                    None => cur[edge.to as usize] += v * edge.p,
                    Some(t) => {
                        if blocked.is_some() && edge.word == blocked {
                            continue;
                        }
                        if pos < m && t == output[pos] {
                            next[edge.to as usize] += v * edge.p;
                        }
                    }
                }
            }
        }
        if pos < m {
            let mx = next.iter().copied().fold(0.0f64, f64::max);
            if mx == 0.0 {
                return LOG_ZERO;
            }
            for x in &mut next {
                *x /= mx;
            }
            log_scale += mx.ln();
            cur = next;
        }
    }
    let mass = cur[raw.final_state as usize];
    if mass == 0.0 {
        LOG_ZERO
    } else {
        mass.ln() + log_scale
    }
}
