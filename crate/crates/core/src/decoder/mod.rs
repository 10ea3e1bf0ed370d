//! Beam search over any scorer, with length normalization, EOS-margin risk
//! detection, a length-scaled EOS penalty applied at candidate
//! finalization, and an alignment-coverage penalty baseline.

mod beam;
mod io;

pub use beam::{beam_search, DecodeRecord, FinalizedCandidate};
pub use io::{decode_corpus, read_results, write_results};

use crate::inference::{InferenceError, StepLogProbs};
use crate::logprob::LOG_ZERO;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("invalid beam config: {0}")]
    BadBeamConfig(String),
    #[error("invalid penalty config: {0}")]
    BadPenaltyConfig(String),
    #[error("step distribution has no possible entries")]
    EmptyDistribution,
    #[error("no viable candidate: the source admits no output of min_len tokens")]
    NoViableCandidate,
    #[error("coverage penalty requires a scorer that provides alignment coverage")]
    CoverageUnsupported,
    #[error("coverage values missing for a coverage-mode finalization")]
    MissingCoverage,
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error("results io: {0}")]
    Io(#[from] std::io::Error),
    #[error("results line {line}: {source}")]
    BadLine {
        line: usize,
        source: serde_json::Error,
    },
    #[error("results serialization: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeamConfig {
    pub beam_size: usize,
    pub alpha: f64,
    /// Hard token cap; `None` uses the scorer's emission bound.
    pub max_len: Option<usize>,
    pub min_len: usize,
    pub expansion_factor: usize,
    pub temperature: f64,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            beam_size: 5,
            alpha: 1.0,
            max_len: None,
            min_len: 1,
            expansion_factor: 2,
            temperature: 1.0,
        }
    }
}

impl BeamConfig {
    pub fn validate(&self) -> Result<(), DecodeError> {
        let bad = |msg: &str| Err(DecodeError::BadBeamConfig(msg.into()));
        if self.beam_size == 0 {
            return bad("beam_size must be at least 1");
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return bad("alpha must be finite and non-negative");
        }
        if self.min_len == 0 {
            return bad("min_len must be at least 1");
        }
        if let Some(m) = self.max_len {
            if m < self.min_len {
                return bad("max_len must be at least min_len");
            }
        }
        if self.expansion_factor == 0 {
            return bad("expansion_factor must be at least 1");
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return bad("temperature must be positive and finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyMode {
    None,
    Eos,
    Coverage,
}

impl std::fmt::Display for PenaltyMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PenaltyMode::None => f.write_str("none"),
            PenaltyMode::Eos => f.write_str("eos"),
            PenaltyMode::Coverage => f.write_str("coverage"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PenaltyConfig {
    pub mode: PenaltyMode,
    /// Margin threshold; −∞ disables risk detection entirely.
    #[serde(with = "io::extended_f64")]
    pub tau: f64,
    pub beta: f64,
    pub cap: usize,
    pub beta_cov: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig {
            mode: PenaltyMode::None,
            tau: 1.0,
            beta: 0.4,
            cap: 20,
            beta_cov: 0.1,
        }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<(), DecodeError> {
        let bad = |msg: &str| Err(DecodeError::BadPenaltyConfig(msg.into()));
        if self.tau.is_nan() || self.tau == f64::INFINITY {
            return bad("tau must be a number or -inf");
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return bad("beta must be finite and non-negative");
        }
        if self.cap == 0 {
            return bad("cap must be at least 1");
        }
        if !(self.beta_cov >= 0.0) || !self.beta_cov.is_finite() {
            return bad("beta_cov must be finite and non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskAssessment {
    pub risky: bool,
    pub margin: f64,
}

/// EOS margin against the best non-EOS competitor. A finalization with no
/// possible competitor gets margin +∞ and is never risky; otherwise the
/// candidate is risky iff margin ≤ τ.
pub fn detect_risk(step: &StepLogProbs, tau: f64) -> Result<RiskAssessment, DecodeError> {
    if step.is_all_impossible() {
        return Err(DecodeError::EmptyDistribution);
    }
    let competitor = step.max_non_eos();
    let margin = if competitor == LOG_ZERO {
        f64::INFINITY
    } else {
        step.eos - competitor
    };
    Ok(RiskAssessment {
        risky: margin <= tau,
        margin,
    })
}

/// λ = β · min(|Y|, L).
pub fn eos_penalty_weight(gen_len: usize, beta: f64, cap: usize) -> f64 {
    beta * gen_len.min(cap) as f64
}

/// Eq.-style length normalization: raw / |Y|^α.
pub fn length_normalized(raw: f64, len: usize, alpha: f64) -> f64 {
    raw / (len as f64).powf(alpha)
}

/// β_cov · Σ ln(max(cov_i, 1e-6)); zero for full coverage, always ≤ 0.
pub fn coverage_penalty(coverage: &[f64], beta_cov: f64) -> f64 {
    beta_cov
        * coverage
            .iter()
            .map(|&c| c.max(1e-6).ln())
            .sum::<f64>()
}

/// Final comparison key for a finalized candidate.
pub fn finalize_score(
    raw_logprob: f64,
    len: usize,
    eos_logprob: f64,
    risky: bool,
    coverage: Option<&[f64]>,
    beam: &BeamConfig,
    penalty: &PenaltyConfig,
) -> Result<f64, DecodeError> {
    debug_assert!(len >= 1, "finalization below min_len");
    let base = length_normalized(raw_logprob, len, beam.alpha);
    Ok(match penalty.mode {
        PenaltyMode::None => base,
        PenaltyMode::Eos => {
            if risky {
                let lambda = eos_penalty_weight(len, penalty.beta, penalty.cap);
                length_normalized(raw_logprob + lambda * eos_logprob, len, beam.alpha)
            } else {
                base
            }
        }
        PenaltyMode::Coverage => {
            let cov = coverage.ok_or(DecodeError::MissingCoverage)?;
            base + coverage_penalty(cov, penalty.beta_cov)
        }
    })
}
