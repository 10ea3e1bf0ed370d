//! Exact inference over the channel: a compiled emission automaton per
//! source with prefix probabilities, next-token conditionals, alignment
//! posteriors, a temperature wrapper, and a brute-force enumeration oracle.

mod automaton;
mod coverage;
mod enumerate;

pub use automaton::{AutomatonDump, EmissionAutomaton, ScorerState};
pub use enumerate::{
    document_total_mass, enumerate_outputs, exact_output_mass, prefix_mass, support_estimate,
    DEFAULT_ENUMERATION_GUARD, SUPPORT_CAP,
};

use crate::channel::ChannelError;
use crate::logprob::{logsumexp, LOG_ZERO};
use crate::token::Token;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("dead prefix: weight sum is zero")]
    DeadPrefix,
    #[error("output is impossible under the channel")]
    ImpossibleOutput,
    #[error("source has {len} content words, enumeration bound is {bound}")]
    SourceTooLong { len: usize, bound: usize },
    #[error("enumeration support estimate {estimate} exceeds cap {cap}")]
    SupportTooLarge { estimate: u128, cap: u128 },
    #[error("temperature must be positive and finite, got {0}")]
    BadTemperature(f64),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Log-probabilities of the next emission: one entry per vocabulary token
/// plus the EOS event (output complete). At any reachable state the five
/// entries exponentiate and sum to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLogProbs {
    pub tokens: [f64; 4],
    pub eos: f64,
}

impl StepLogProbs {
    pub fn token(&self, t: Token) -> f64 {
        self.tokens[t.index()]
    }

    /// Highest log-probability among non-EOS entries, `LOG_ZERO` when every
    /// token is impossible.
    pub fn max_non_eos(&self) -> f64 {
        self.tokens.iter().copied().fold(LOG_ZERO, f64::max)
    }

    pub fn logsumexp_all(&self) -> f64 {
        let mut all = [0.0; 5];
        all[..4].copy_from_slice(&self.tokens);
        all[4] = self.eos;
        logsumexp(&all)
    }

    pub fn is_all_impossible(&self) -> bool {
        self.eos == LOG_ZERO && self.tokens.iter().all(|&lp| lp == LOG_ZERO)
    }
}

/// Renormalizes a step distribution to q ∝ p^(1/T). T = 1 is the identity;
/// large T flattens toward uniform over the possible entries.
pub fn apply_temperature(step: &StepLogProbs, t: f64) -> Result<StepLogProbs, InferenceError> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(InferenceError::BadTemperature(t));
    }
    if t == 1.0 {
        return Ok(*step);
    }
    let mut out = StepLogProbs {
        tokens: step.tokens.map(|lp| lp / t),
        eos: step.eos / t,
    };
    let z = out.logsumexp_all();
    if z == LOG_ZERO {
        return Ok(*step);
    }
    for lp in &mut out.tokens {
        if *lp != LOG_ZERO {
            *lp -= z;
        }
    }
    if out.eos != LOG_ZERO {
        out.eos -= z;
    }
    Ok(out)
}

/// What the decoder needs from a model: incremental next-token
/// conditionals over prefixes, plus optional alignment coverage for the
/// coverage penalty.
pub trait Scorer {
    type State: Clone;

    fn init(&self) -> Self::State;
    fn step_logprobs(&self, state: &Self::State) -> Result<StepLogProbs, InferenceError>;
    fn advance(&self, state: &Self::State, token: Token) -> Result<Self::State, InferenceError>;

    /// Length at which the decoder force-finalizes hypotheses.
    fn default_max_len(&self) -> usize;

    /// Per-source-word probability of having emitted at least one token of
    /// `output`; `None` when the scorer cannot provide it.
    fn alignment_coverage(&self, output: &[Token]) -> Option<Result<Vec<f64>, InferenceError>> {
        let _ = output;
        None
    }
}

impl<S: Scorer> Scorer for &S {
    type State = S::State;

    fn init(&self) -> Self::State {
        (**self).init()
    }

    fn step_logprobs(&self, state: &Self::State) -> Result<StepLogProbs, InferenceError> {
        (**self).step_logprobs(state)
    }

    fn advance(&self, state: &Self::State, token: Token) -> Result<Self::State, InferenceError> {
        (**self).advance(state, token)
    }

    fn default_max_len(&self) -> usize {
        (**self).default_max_len()
    }

    fn alignment_coverage(&self, output: &[Token]) -> Option<Result<Vec<f64>, InferenceError>> {
        (**self).alignment_coverage(output)
    }
}

/// Wraps a scorer so every step distribution is temperature-smoothed.
pub struct TemperatureScorer<S> {
    inner: S,
    temperature: f64,
}

impl<S: Scorer> TemperatureScorer<S> {
    pub fn new(inner: S, temperature: f64) -> Result<Self, InferenceError> {
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(InferenceError::BadTemperature(temperature));
        }
        Ok(TemperatureScorer { inner, temperature })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }
}

impl<S: Scorer> Scorer for TemperatureScorer<S> {
    type State = S::State;

    fn init(&self) -> Self::State {
        self.inner.init()
    }

    fn step_logprobs(&self, state: &Self::State) -> Result<StepLogProbs, InferenceError> {
        apply_temperature(&self.inner.step_logprobs(state)?, self.temperature)
    }

    fn advance(&self, state: &Self::State, token: Token) -> Result<Self::State, InferenceError> {
        self.inner.advance(state, token)
    }

    fn default_max_len(&self) -> usize {
        self.inner.default_max_len()
    }

    fn alignment_coverage(&self, output: &[Token]) -> Option<Result<Vec<f64>, InferenceError>> {
        self.inner.alignment_coverage(output)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point(pa: f64, pb: f64) -> StepLogProbs {
        StepLogProbs {
            tokens: [pa.ln(), pb.ln(), LOG_ZERO, LOG_ZERO],
            eos: LOG_ZERO,
        }
    }

    #[test]
    fn temperature_identity() {
        let step = two_point(0.8, 0.2);
        let out = apply_temperature(&step, 1.0).unwrap();
        assert_eq!(out, step);
    }

    #[test]
    fn temperature_two_flattens_four_to_one() {
        let out = apply_temperature(&two_point(0.8, 0.2), 2.0).unwrap();
        assert!((out.tokens[0].exp() - 2.0 / 3.0).abs() < 1e-12);
        assert!((out.tokens[1].exp() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(out.tokens[2], LOG_ZERO);
    }

    #[test]
    fn huge_temperature_approaches_uniform() {
        let out = apply_temperature(&two_point(0.8, 0.2), 1e6).unwrap();
        assert!((out.tokens[0].exp() - 0.5).abs() < 1e-3);
        assert!((out.tokens[1].exp() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn non_positive_temperature_rejected() {
        let step = two_point(0.8, 0.2);
        assert!(apply_temperature(&step, 0.0).is_err());
        assert!(apply_temperature(&step, -2.0).is_err());
        assert!(apply_temperature(&step, f64::NAN).is_err());
    }
}
