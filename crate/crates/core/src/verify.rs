//! Self-check suites that cross-validate the main implementations against
//! independent routes: DP scorer vs generative-path enumeration, beam search
//! vs exhaustive argmax, the two ranking inequalities against each other, and
//! the channel sampler against exact output probabilities via a χ² test.

use crate::channel::{sample_target, ChannelSpec};
use crate::decoder::{beam_search, BeamConfig, PenaltyConfig};
use crate::diagnostics::derivation_agreement;
use crate::inference::{
    document_total_mass, enumerate_outputs, exact_output_mass, prefix_mass, EmissionAutomaton,
};
use crate::token::Token;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl SuiteResult {
    fn from(name: &'static str, outcome: Result<String, String>) -> SuiteResult {
        match outcome {
            Ok(detail) => SuiteResult {
                name,
                passed: true,
                detail,
            },
            Err(detail) => SuiteResult {
                name,
                passed: false,
                detail,
            },
        }
    }
}

pub fn verify_all(seed: u64) -> Vec<SuiteResult> {
    vec![
        verify_dp_vs_enumeration(seed),
        verify_beam_vs_exhaustive(),
        verify_derivation(seed),
        verify_sampling(seed),
    ]
}

/// All content strings of length 1..=max_len.
fn content_strings(max_len: usize) -> Vec<Vec<Token>> {
    let mut all = Vec::new();
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for t in Token::CONTENT {
                let mut v = s.clone();
                v.push(t);
                next.push(v);
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

/// All document sources with 1..=2 sentences of 1..=2 words each.
fn small_doc_sources() -> Vec<Vec<Token>> {
    let sentences = content_strings(2);
    let mut docs = Vec::new();
    for s1 in &sentences {
        let mut doc = s1.clone();
        doc.push(Token::Period);
        docs.push(doc.clone());
        for s2 in &sentences {
            let mut two = doc.clone();
            two.extend_from_slice(s2);
            two.push(Token::Period);
            docs.push(two);
        }
    }
    docs
}

fn close(actual: f64, expected: f64, tol: f64, what: &str) -> Result<(), String> {
    if (actual - expected).abs() > tol {
        return Err(format!("{what}: got {actual}, expected {expected}"));
    }
    Ok(())
}

pub fn verify_dp_vs_enumeration(seed: u64) -> SuiteResult {
    let run = || -> Result<String, String> {
        let spec = ChannelSpec::sentence();
        let mut outputs_checked = 0usize;
        let mut prefixes_checked = 0usize;
        for source in content_strings(3) {
            let automaton =
                EmissionAutomaton::compile(&spec, &source).map_err(|e| e.to_string())?;
            let support = enumerate_outputs(&spec, &source, 2 * source.len())
                .map_err(|e| e.to_string())?;
            let total: f64 = support.iter().map(|(_, p)| p).sum();
            close(total, 1.0, 1e-9, &format!("support mass of {source:?}"))?;

            let mut exact: HashMap<&[Token], f64> = HashMap::new();
            let mut by_prefix: HashMap<&[Token], f64> = HashMap::new();
            for (y, p) in &support {
                exact.insert(y, *p);
                for k in 0..=y.len() {
                    *by_prefix.entry(&y[..k]).or_insert(0.0) += p;
                }
            }
            for (y, p) in &support {
                close(
                    automaton.sequence_logprob(y).exp(),
                    *p,
                    1e-9,
                    &format!("P({y:?} | {source:?})"),
                )?;
                outputs_checked += 1;
            }
            for (&prefix, &mass) in &by_prefix {
                let mut state = automaton.init_state();
                for &t in prefix {
                    state = automaton.advance(&state, t).map_err(|e| e.to_string())?;
                }
                let step = automaton.next_logprobs(&state).map_err(|e| e.to_string())?;
                let eos_expected = exact.get(prefix).copied().unwrap_or(0.0) / mass;
                close(
                    step.eos.exp(),
                    eos_expected,
                    1e-9,
                    &format!("P(eos | {prefix:?}, {source:?})"),
                )?;
                for t in Token::ALL {
                    let mut child = prefix.to_vec();
                    child.push(t);
                    let child_mass = by_prefix.get(&child[..]).copied().unwrap_or(0.0);
                    close(
                        step.token(t).exp(),
                        child_mass / mass,
                        1e-9,
                        &format!("P({t:?} | {prefix:?}, {source:?})"),
                    )?;
                }
                prefixes_checked += 1;
            }
        }

        let doc_spec = ChannelSpec::document();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd0c);
        let mut docs_checked = 0usize;
        for source in small_doc_sources() {
            let automaton =
                EmissionAutomaton::compile(&doc_spec, &source).map_err(|e| e.to_string())?;
            let total =
                document_total_mass(&doc_spec, &source).map_err(|e| e.to_string())?;
            close(total, 1.0, 1e-9, &format!("document mass of {source:?}"))?;

            let mut outputs: Vec<Vec<Token>> = vec![Vec::new(), source.clone()];
            for _ in 0..6 {
                outputs.push(sample_target(&doc_spec, &source, &mut rng));
            }
            for y in &outputs {
                let direct =
                    exact_output_mass(&doc_spec, &source, y).map_err(|e| e.to_string())?;
                close(
                    automaton.sequence_logprob(y).exp(),
                    direct,
                    1e-9,
                    &format!("P({y:?} | {source:?})"),
                )?;
                let cut = y.len() / 2;
                let walked =
                    prefix_mass(&doc_spec, &source, &y[..cut]).map_err(|e| e.to_string())?;
                let mut state = automaton.init_state();
                for &t in &y[..cut] {
                    state = automaton.advance(&state, t).map_err(|e| e.to_string())?;
                }
                close(
                    state.prefix_logprob().exp(),
                    walked,
                    1e-9,
                    &format!("prefix mass {:?} of {source:?}", &y[..cut]),
                )?;
            }
            docs_checked += 1;
        }
        Ok(format!(
            "{outputs_checked} sentence outputs, {prefixes_checked} prefix distributions, \
             {docs_checked} document sources agree within 1e-9"
        ))
    };
    SuiteResult::from("dp_vs_enumeration", run())
}

pub fn verify_beam_vs_exhaustive() -> SuiteResult {
    let run = || -> Result<String, String> {
        let spec = ChannelSpec::sentence();
        let mut decodes = 0usize;
        for source in content_strings(3) {
            let automaton =
                EmissionAutomaton::compile(&spec, &source).map_err(|e| e.to_string())?;
            let support = enumerate_outputs(&spec, &source, 2 * source.len())
                .map_err(|e| e.to_string())?;
            for alpha in [0.0, 0.7, 1.0, 2.0] {
                let mut scored: Vec<(f64, &Vec<Token>)> = support
                    .iter()
                    .filter(|(y, _)| !y.is_empty())
                    .map(|(y, p)| (p.ln() / (y.len() as f64).powf(alpha), y))
                    .collect();
                scored.sort_by(|a, b| {
                    b.0.partial_cmp(&a.0)
                        .unwrap()
                        .then(a.1.len().cmp(&b.1.len()))
                        .then(a.1.cmp(b.1))
                });
                let (expect_score, expect_tokens) = scored[0];
                let beam = BeamConfig {
                    beam_size: support.len().max(8),
                    alpha,
                    ..BeamConfig::default()
                };
                let record = beam_search(&automaton, 0, &beam, &PenaltyConfig::default())
                    .map_err(|e| e.to_string())?;
                let beam_exact = scored
                    .iter()
                    .find(|(_, y)| **y == record.output)
                    .map(|(s, _)| *s)
                    .ok_or_else(|| {
                        format!("source {source:?}: beam output {:?} not in support", record.output)
                    })?;
                close(
                    beam_exact,
                    expect_score,
                    1e-9,
                    &format!("beam optimum for {source:?} alpha {alpha}"),
                )?;
                close(
                    record.normalized_score,
                    expect_score,
                    1e-9,
                    &format!("beam score for {source:?} alpha {alpha}"),
                )?;
                // Exact mathematical ties (symmetric sources) may round
                // differently along the two computation routes, so token
                // identity is only required when the optimum is unique.
                let unique = expect_score - scored[1].0 > 1e-9;
                if unique && record.output != *expect_tokens {
                    return Err(format!(
                        "source {source:?} alpha {alpha}: beam found {:?}, exhaustive argmax {expect_tokens:?}",
                        record.output
                    ));
                }
                decodes += 1;
            }
        }
        Ok(format!(
            "{decodes} decodes match the exhaustive length-normalized argmax"
        ))
    };
    SuiteResult::from("beam_vs_exhaustive", run())
}

pub fn verify_derivation(seed: u64) -> SuiteResult {
    let run = || -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xde57);
        let exact = derivation_agreement(&mut rng, 10_000, 0.0, 1.0);
        if exact != 1.0 {
            return Err(format!("alpha=0 agreement {exact}, expected 1.0 exactly"));
        }
        let approx = derivation_agreement(&mut rng, 10_000, 1.0, 0.05);
        if approx < 0.99 {
            return Err(format!(
                "alpha=1, ratio ≤ 0.05 agreement {approx}, expected ≥ 0.99"
            ));
        }
        Ok(format!(
            "alpha=0 agreement 1.0, alpha=1 agreement {approx} over 10000 samples each"
        ))
    };
    SuiteResult::from("derivation", run())
}

pub fn verify_sampling(seed: u64) -> SuiteResult {
    let run = || -> Result<String, String> {
        let spec = ChannelSpec::sentence();
        let mut details = Vec::new();
        for (i, source) in [vec![Token::A], vec![Token::C, Token::B]]
            .into_iter()
            .enumerate()
        {
            let support = enumerate_outputs(&spec, &source, 2 * source.len())
                .map_err(|e| e.to_string())?;
            let n = 100_000usize;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x5a + i as u64));
            let mut counts: HashMap<Vec<Token>, usize> = HashMap::new();
            for _ in 0..n {
                *counts.entry(sample_target(&spec, &source, &mut rng)).or_insert(0) += 1;
            }
            let in_support: usize = support
                .iter()
                .map(|(y, _)| counts.get(y).copied().unwrap_or(0))
                .sum();
            if in_support != n {
                return Err(format!(
                    "source {source:?}: {} samples fell outside the enumerated support",
                    n - in_support
                ));
            }
            let mut chi2 = 0.0;
            let mut bins = 0usize;
            let mut pooled_expected = 0.0;
            let mut pooled_observed = 0.0;
            for (y, p) in &support {
                let expected = p * n as f64;
                let observed = counts.get(y).copied().unwrap_or(0) as f64;
                if expected < 5.0 {
                    pooled_expected += expected;
                    pooled_observed += observed;
                } else {
                    chi2 += (observed - expected).powi(2) / expected;
                    bins += 1;
                }
            }
            if pooled_expected > 0.0 {
                chi2 += (pooled_observed - pooled_expected).powi(2) / pooled_expected;
                bins += 1;
            }
            let df = (bins - 1) as f64;
            let threshold = ChiSquared::new(df)
                .map_err(|e| e.to_string())?
                .inverse_cdf(0.999);
            if chi2 >= threshold {
                return Err(format!(
                    "source {source:?}: chi2 {chi2:.2} exceeds the 99.9% quantile {threshold:.2} at {df} df"
                ));
            }
            details.push(format!(
                "{source:?}: chi2 {chi2:.1} < {threshold:.1} ({df} df, {n} samples)"
            ));
        }
        Ok(details.join("; "))
    };
    SuiteResult::from("sampling_chi2", run())
}
