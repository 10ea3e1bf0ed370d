use super::io::{extended_f64, extended_f64_vec};
use super::{detect_risk, finalize_score, BeamConfig, DecodeError, PenaltyConfig, PenaltyMode};
use crate::inference::{Scorer, StepLogProbs, TemperatureScorer};
use crate::logprob::LOG_ZERO;
use crate::token::Token;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalizedCandidate {
    pub tokens: Vec<Token>,
    pub raw_logprob: f64,
    pub eos_logprob: f64,
    #[serde(with = "extended_f64")]
    pub margin: f64,
    pub risky: bool,
    pub normalized_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeRecord {
    pub id: u64,
    pub output: Vec<Token>,
    pub raw_logprob: f64,
    pub normalized_score: f64,
    pub eos_logprob: f64,
    #[serde(with = "extended_f64")]
    pub eos_margin: f64,
    pub risky: bool,
    pub penalty_applied: bool,
    #[serde(with = "extended_f64_vec")]
    pub eos_trace: Vec<f64>,
    pub candidates: Vec<FinalizedCandidate>,
}

struct Hypothesis<St> {
    state: St,
    tokens: Vec<Token>,
    raw: f64,
    eos_trace: Vec<f64>,
}

const EOS_KIND: usize = Token::ALL.len();

pub fn beam_search<S: Scorer>(
    scorer: &S,
    id: u64,
    beam: &BeamConfig,
    penalty: &PenaltyConfig,
) -> Result<DecodeRecord, DecodeError> {
    beam.validate()?;
    penalty.validate()?;
    if beam.temperature != 1.0 {
        let tempered = TemperatureScorer::new(scorer, beam.temperature)?;
        search(&tempered, id, beam, penalty)
    } else {
        search(scorer, id, beam, penalty)
    }
}

fn search<S: Scorer>(
    scorer: &S,
    id: u64,
    beam: &BeamConfig,
    penalty: &PenaltyConfig,
) -> Result<DecodeRecord, DecodeError> {
    let max_len = beam.max_len.unwrap_or_else(|| scorer.default_max_len());
    if max_len < beam.min_len {
        return Err(DecodeError::BadBeamConfig(format!(
            "max_len {} is below min_len {}",
            max_len, beam.min_len
        )));
    }

    let mut live = vec![Hypothesis {
        state: scorer.init(),
        tokens: Vec::new(),
        raw: 0.0,
        eos_trace: Vec::new(),
    }];
    let mut finalized: Vec<(FinalizedCandidate, Vec<f64>)> = Vec::new();

    for step_idx in 0..=max_len {
        let steps = live
            .iter()
            .map(|h| scorer.step_logprobs(&h.state))
            .collect::<Result<Vec<_>, _>>()?;

        let at_cap = step_idx == max_len;
        let mut pool: Vec<(f64, usize, usize)> = Vec::new();
        for (hi, (hyp, step)) in live.iter().zip(&steps).enumerate() {
            if !at_cap {
                for (k, &lp) in step.tokens.iter().enumerate() {
                    if lp > LOG_ZERO {
                        pool.push((hyp.raw + lp, hi, k));
                    }
                }
            }
            if hyp.tokens.len() >= beam.min_len && step.eos > LOG_ZERO {
                pool.push((hyp.raw + step.eos, hi, EOS_KIND));
            }
        }
        pool.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        pool.truncate(beam.expansion_factor * beam.beam_size);

        let mut new_live: Vec<Hypothesis<S::State>> = Vec::new();
        for &(joint, hi, kind) in &pool {
            let hyp = &live[hi];
            let step = &steps[hi];
            if kind == EOS_KIND {
                finalized.push(finalize(scorer, hyp, step, joint, beam, penalty)?);
            } else if new_live.len() < beam.beam_size {
                let token = Token::from_index(kind).expect("pool kind is a token index");
                let mut tokens = hyp.tokens.clone();
                tokens.push(token);
                let mut eos_trace = hyp.eos_trace.clone();
                eos_trace.push(step.eos);
                new_live.push(Hypothesis {
                    state: scorer.advance(&hyp.state, token)?,
                    tokens,
                    raw: joint,
                    eos_trace,
                });
            }
        }
        live = new_live;

        if live.is_empty() {
            break;
        }
        if finalized.len() >= beam.beam_size {
            let best = finalized
                .iter()
                .map(|(c, _)| c.normalized_score)
                .fold(f64::NEG_INFINITY, f64::max);
            // raw ≤ 0 throughout, so raw / max_len^α bounds every normalized
            // score this hypothesis could still reach; penalties only lower it.
            let reachable = |raw: f64| {
                if raw < 0.0 {
                    raw / (max_len as f64).powf(beam.alpha)
                } else {
                    0.0
                }
            };
            if live.iter().all(|h| reachable(h.raw) <= best) {
                break;
            }
        }
    }

    if finalized.is_empty() {
        return Err(DecodeError::NoViableCandidate);
    }
    finalized.sort_by(|(a, _), (b, _)| {
        b.normalized_score
            .partial_cmp(&a.normalized_score)
            .unwrap()
            .then(a.tokens.len().cmp(&b.tokens.len()))
            .then(a.tokens.cmp(&b.tokens))
    });
    finalized.truncate(beam.beam_size);

    let (winner, winner_trace) = finalized[0].clone();
    let penalty_applied =
        penalty.mode == PenaltyMode::Eos && winner.risky && penalty.beta != 0.0;
    Ok(DecodeRecord {
        id,
        output: winner.tokens.clone(),
        raw_logprob: winner.raw_logprob,
        normalized_score: winner.normalized_score,
        eos_logprob: winner.eos_logprob,
        eos_margin: winner.margin,
        risky: winner.risky,
        penalty_applied,
        eos_trace: winner_trace,
        candidates: finalized.into_iter().map(|(c, _)| c).collect(),
    })
}

fn finalize<S: Scorer>(
    scorer: &S,
    hyp: &Hypothesis<S::State>,
    step: &StepLogProbs,
    raw_logprob: f64,
    beam: &BeamConfig,
    penalty: &PenaltyConfig,
) -> Result<(FinalizedCandidate, Vec<f64>), DecodeError> {
    let risk = detect_risk(step, penalty.tau)?;
    let coverage = match penalty.mode {
        PenaltyMode::Coverage => Some(
            scorer
                .alignment_coverage(&hyp.tokens)
                .ok_or(DecodeError::CoverageUnsupported)??,
        ),
        _ => None,
    };
    let normalized_score = finalize_score(
        raw_logprob,
        hyp.tokens.len(),
        step.eos,
        risk.risky,
        coverage.as_deref(),
        beam,
        penalty,
    )?;
    let mut eos_trace = hyp.eos_trace.clone();
    eos_trace.push(step.eos);
    Ok((
        FinalizedCandidate {
            tokens: hyp.tokens.clone(),
            raw_logprob,
            eos_logprob: step.eos,
            margin: risk.margin,
            risky: risk.risky,
            normalized_score,
        },
        eos_trace,
    ))
}
