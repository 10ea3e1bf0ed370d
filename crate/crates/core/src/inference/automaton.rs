use super::{InferenceError, Scorer, StepLogProbs};
use crate::channel::{ChannelSpec, Level};
use crate::logprob::{lse2, logsumexp, LseAcc, LOG_ZERO};
use crate::token::{split_sentences, Token};
use serde::Serialize;

/// One edge of the raw generative graph. `emit: None` marks a silent choice
/// (a drop, or a sentence-level branch); `word` records which source content
/// word the edge belongs to, for alignment queries.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RawEdge {
    pub emit: Option<Token>,
    pub word: Option<u32>,
    pub to: u32,
    pub p: f64,
}

#[derive(Debug)]
pub(crate) struct RawGraph {
    pub edges_from: Vec<Vec<RawEdge>>,
    pub start: u32,
    pub final_state: u32,
}

impl RawGraph {
    fn state_count(&self) -> usize {
        self.edges_from.len()
    }
}

struct GraphBuilder {
    edges_from: Vec<Vec<RawEdge>>,
}

impl GraphBuilder {
    fn new() -> Self {
        GraphBuilder {
            edges_from: Vec::new(),
        }
    }

    fn state(&mut self) -> u32 {
        self.edges_from.push(Vec::new());
        (self.edges_from.len() - 1) as u32
    }

    fn edge(&mut self, from: u32, emit: Option<Token>, word: Option<u32>, to: u32, p: f64) {
        debug_assert!(from < to, "graph edges must follow creation order");
        if p > 0.0 {
            self.edges_from[from as usize].push(RawEdge { emit, word, to, p });
        }
    }

    /// Adds the word-level chain for one rendering of `words`: per word a
    /// drop, a single draw, or two independent draws through a pending
    /// state. Returns the exit state.
    fn word_chain(&mut self, spec: &ChannelSpec, words: &[Token], entry: u32, word_base: u32) -> u32 {
        let noise = &spec.noise;
        let mut cur = entry;
        for (i, &w) in words.iter().enumerate() {
            let word = Some(word_base + i as u32);
            let pending = self.state();
            let next = self.state();
            self.edge(cur, None, word, next, noise.p_drop());
            for &t in &Token::CONTENT {
                let q = spec.matrix.prob(w, t);
                self.edge(cur, Some(t), word, next, noise.p_translate() * q);
                self.edge(cur, Some(t), word, pending, noise.p_dup() * q);
                self.edge(pending, Some(t), word, next, q);
            }
            cur = next;
        }
        cur
    }
}

fn build_raw(spec: &ChannelSpec, source: &[Token]) -> RawGraph {
    let mut b = GraphBuilder::new();
    let start = b.state();
    let final_state = match spec.level {
        Level::Sentence => b.word_chain(spec, source, start, 0),
        Level::Document => {
            let noise = spec.noise;
            let mut before = start;
            let mut word_base = 0u32;
            for sentence in split_sentences(source) {
                let single_entry = b.state();
                let single_exit = b.word_chain(spec, &sentence, single_entry, word_base);
                let first_entry = b.state();
                let first_exit = b.word_chain(spec, &sentence, first_entry, word_base);
                let second_entry = b.state();
                let second_exit = b.word_chain(spec, &sentence, second_entry, word_base);
                let after = b.state();
                b.edge(before, None, None, after, noise.p_drop());
                b.edge(before, None, None, single_entry, noise.p_translate());
                b.edge(before, None, None, first_entry, noise.p_dup());
                b.edge(single_exit, Some(Token::Period), None, after, 1.0);
                b.edge(first_exit, Some(Token::Period), None, second_entry, 1.0);
                b.edge(second_exit, Some(Token::Period), None, after, 1.0);
                before = after;
                word_base += sentence.len() as u32;
            }
            before
        }
    };
    RawGraph {
        edges_from: b.edges_from,
        start,
        final_state,
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
struct CompiledEdge {
    from: u32,
    to: u32,
    lp: f64,
}

/// An acyclic weighted emission automaton for one source: silent choices
/// are folded away at compile time, leaving per-state acceptance mass and
/// per-state, per-token emission edges.
pub struct EmissionAutomaton {
    spec: ChannelSpec,
    source: Vec<Token>,
    word_count: usize,
    period_count: usize,
    raw: RawGraph,
    accept_lp: Vec<f64>,
    marginal_lp: Vec<[f64; 4]>,
    by_token: [Vec<CompiledEdge>; 4],
}

impl EmissionAutomaton {
    pub fn compile(spec: &ChannelSpec, source: &[Token]) -> Result<Self, InferenceError> {
        spec.validate()?;
        spec.validate_source(source)?;
        let raw = build_raw(spec, source);
        let n = raw.state_count();

        let mut eff_emit: Vec<Vec<(Token, u32, f64)>> = vec![Vec::new(); n];
        let mut eff_accept = vec![0.0f64; n];
        eff_accept[raw.final_state as usize] = 1.0;
        for u in (0..n).rev() {
            let mut emits: Vec<(Token, u32, f64)> = Vec::new();
            for edge in &raw.edges_from[u] {
                match edge.emit {
                    Some(t) => emits.push((t, edge.to, edge.p)),
                    None => {
                        eff_accept[u] += edge.p * eff_accept[edge.to as usize];
                        for &(t, to, q) in &eff_emit[edge.to as usize] {
                            emits.push((t, to, edge.p * q));
                        }
                    }
                }
            }
            emits.sort_by_key(|&(t, to, _)| (t, to));
            emits.dedup_by(|a, b| {
                if a.0 == b.0 && a.1 == b.1 {
                    b.2 += a.2;
                    true
                } else {
                    false
                }
            });
            let total: f64 = emits.iter().map(|e| e.2).sum::<f64>() + eff_accept[u];
            debug_assert!(
                (total - 1.0).abs() < 1e-9,
                "state {u} outgoing mass {total}"
            );
            eff_emit[u] = emits;
        }

        let mut accept_lp = vec![LOG_ZERO; n];
        let mut marginal_lp = vec![[LOG_ZERO; 4]; n];
        let mut by_token: [Vec<CompiledEdge>; 4] = Default::default();
        for u in 0..n {
            if eff_accept[u] > 0.0 {
                accept_lp[u] = eff_accept[u].ln();
            }
            let mut sums = [0.0f64; 4];
            for &(t, to, p) in &eff_emit[u] {
                sums[t.index()] += p;
                by_token[t.index()].push(CompiledEdge {
                    from: u as u32,
                    to,
                    lp: p.ln(),
                });
            }
            for (k, &s) in sums.iter().enumerate() {
                if s > 0.0 {
                    marginal_lp[u][k] = s.ln();
                }
            }
        }

        Ok(EmissionAutomaton {
            spec: spec.clone(),
            source: source.to_vec(),
            word_count: crate::token::content_len(source),
            period_count: crate::token::period_count(source),
            raw,
            accept_lp,
            marginal_lp,
            by_token,
        })
    }

    pub fn spec(&self) -> &ChannelSpec {
        &self.spec
    }

    pub fn source(&self) -> &[Token] {
        &self.source
    }

    pub fn word_count(&self) -> usize {
        self.word_count
    }

    pub fn state_count(&self) -> usize {
        self.raw.state_count()
    }

    pub(crate) fn raw(&self) -> &RawGraph {
        &self.raw
    }

    /// Largest emission the channel can produce for this source: every word
    /// duplicated in every sentence copy, every sentence duplicated.
    pub fn max_emission_len(&self) -> usize {
        match self.spec.level {
            Level::Sentence => 2 * self.word_count,
            Level::Document => 4 * self.word_count + 2 * self.period_count,
        }
    }

    pub fn init_state(&self) -> ScorerState {
        let mut weights = vec![LOG_ZERO; self.state_count()];
        weights[self.raw.start as usize] = 0.0;
        ScorerState { weights, len: 0 }
    }

    pub fn next_logprobs(&self, state: &ScorerState) -> Result<StepLogProbs, InferenceError> {
        let total = state.prefix_logprob();
        if total == LOG_ZERO {
            return Err(InferenceError::DeadPrefix);
        }
        let mut tokens = [LOG_ZERO; 4];
        for (k, lp) in tokens.iter_mut().enumerate() {
            let mut acc = LseAcc::new();
            for (s, &w) in state.weights.iter().enumerate() {
                if w != LOG_ZERO {
                    acc.add(w + self.marginal_lp[s][k]);
                }
            }
            let v = acc.value();
            if v != LOG_ZERO {
                *lp = v - total;
            }
        }
        let mut acc = LseAcc::new();
        for (s, &w) in state.weights.iter().enumerate() {
            if w != LOG_ZERO {
                acc.add(w + self.accept_lp[s]);
            }
        }
        let eos = match acc.value() {
            LOG_ZERO => LOG_ZERO,
            v => v - total,
        };
        Ok(StepLogProbs { tokens, eos })
    }

    pub fn advance(&self, state: &ScorerState, token: Token) -> Result<ScorerState, InferenceError> {
        if state.prefix_logprob() == LOG_ZERO {
            return Err(InferenceError::DeadPrefix);
        }
        let mut weights = vec![LOG_ZERO; self.state_count()];
        let mut any = false;
        for edge in &self.by_token[token.index()] {
            let w = state.weights[edge.from as usize];
            if w != LOG_ZERO {
                let to = edge.to as usize;
                weights[to] = lse2(weights[to], w + edge.lp);
                any = true;
            }
        }
        if !any {
            return Err(InferenceError::DeadPrefix);
        }
        Ok(ScorerState {
            weights,
            len: state.len + 1,
        })
    }

    /// ln P(complete output == `output`), with a −∞ sentinel for outputs the
    /// channel cannot produce.
    pub fn sequence_logprob(&self, output: &[Token]) -> f64 {
        let mut state = self.init_state();
        for &t in output {
            match self.advance(&state, t) {
                Ok(next) => state = next,
                Err(_) => return LOG_ZERO,
            }
        }
        self.complete_logprob(&state)
    }

    /// ln P(complete output == current prefix): prefix weight joined with
    /// per-state acceptance.
    pub fn complete_logprob(&self, state: &ScorerState) -> f64 {
        let mut acc = LseAcc::new();
        for (s, &w) in state.weights.iter().enumerate() {
            if w != LOG_ZERO {
                acc.add(w + self.accept_lp[s]);
            }
        }
        acc.value()
    }

    /// All complete outputs up to `max_len` with their probabilities, via
    /// the independent generative-path oracle.
    pub fn enumerate_outputs(
        &self,
        max_len: usize,
    ) -> Result<Vec<(Vec<Token>, f64)>, InferenceError> {
        super::enumerate::enumerate_outputs(&self.spec, &self.source, max_len)
    }

    /// Posterior probability, per source content word, that the word emitted
    /// at least one token of `output`.
    pub fn alignment_coverage(&self, output: &[Token]) -> Result<Vec<f64>, InferenceError> {
        super::coverage::alignment_coverage(self, output)
    }

    /// Serializable view of the compiled automaton for debugging.
    pub fn debug_dump(&self) -> AutomatonDump {
        let mut transitions = Vec::new();
        for (k, edges) in self.by_token.iter().enumerate() {
            let token = Token::from_index(k).unwrap();
            for e in edges {
                transitions.push(DumpTransition {
                    from: e.from,
                    token,
                    to: e.to,
                    prob: e.lp.exp(),
                });
            }
        }
        transitions.sort_by_key(|t| (t.from, t.token, t.to));
        AutomatonDump {
            level: self.spec.level,
            source: self.source.clone(),
            states: self.state_count(),
            accept: self
                .accept_lp
                .iter()
                .enumerate()
                .filter(|(_, &lp)| lp != LOG_ZERO)
                .map(|(s, &lp)| DumpAccept {
                    state: s as u32,
                    prob: lp.exp(),
                })
                .collect(),
            transitions,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct AutomatonDump {
    pub level: Level,
    pub source: Vec<Token>,
    pub states: usize,
    pub accept: Vec<DumpAccept>,
    pub transitions: Vec<DumpTransition>,
}

#[derive(Debug, Serialize)]
pub struct DumpAccept {
    pub state: u32,
    pub prob: f64,
}

#[derive(Debug, Serialize)]
pub struct DumpTransition {
    pub from: u32,
    pub token: Token,
    pub to: u32,
    pub prob: f64,
}

/// Forward weights over automaton states after consuming a prefix, kept in
/// log domain.
#[derive(Debug, Clone)]
pub struct ScorerState {
    weights: Vec<f64>,
    len: usize,
}

impl ScorerState {
    /// ln P(output starts with the consumed prefix).
    pub fn prefix_logprob(&self) -> f64 {
        logsumexp(&self.weights)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

impl Scorer for EmissionAutomaton {
    type State = ScorerState;

    fn init(&self) -> ScorerState {
        self.init_state()
    }

    fn step_logprobs(&self, state: &ScorerState) -> Result<StepLogProbs, InferenceError> {
        self.next_logprobs(state)
    }

    fn advance(&self, state: &ScorerState, token: Token) -> Result<ScorerState, InferenceError> {
        EmissionAutomaton::advance(self, state, token)
    }

    fn default_max_len(&self) -> usize {
        4 * self.word_count + 2 * self.period_count.max(1)
    }

    fn alignment_coverage(&self, output: &[Token]) -> Option<Result<Vec<f64>, InferenceError>> {
        Some(EmissionAutomaton::alignment_coverage(self, output))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelError;
    use crate::token::parse_tokens;

    fn sentence(source: &str) -> EmissionAutomaton {
        EmissionAutomaton::compile(&ChannelSpec::sentence(), &parse_tokens(source).unwrap())
            .unwrap()
    }

    #[test]
    fn empty_sources_are_rejected() {
        assert!(matches!(
            EmissionAutomaton::compile(&ChannelSpec::sentence(), &[]),
            Err(InferenceError::Channel(ChannelError::BadSource(_)))
        ));
    }

    #[test]
    fn single_word_conditionals() {
        let aut = sentence("A");
        let step = aut.next_logprobs(&aut.init_state()).unwrap();
        assert!((step.token(Token::A).exp() - 0.74).abs() < 1e-12);
        assert!((step.token(Token::B).exp() - 0.0925).abs() < 1e-12);
        assert!((step.token(Token::C).exp() - 0.0925).abs() < 1e-12);
        assert!((step.eos.exp() - 0.075).abs() < 1e-12);
        assert_eq!(step.token(Token::Period), LOG_ZERO);
    }

    #[test]
    fn single_word_eos_after_match() {
        let aut = sentence("A");
        let state = aut.advance(&aut.init_state(), Token::A).unwrap();
        let step = aut.next_logprobs(&state).unwrap();
        assert!((step.eos - (0.68f64 / 0.74).ln()).abs() < 1e-12);
    }

    #[test]
    fn advance_tracks_prefix_mass() {
        let aut = sentence("A");
        let s1 = aut.advance(&aut.init_state(), Token::A).unwrap();
        assert!((s1.prefix_logprob().exp() - 0.74).abs() < 1e-12);
        let s2 = aut.advance(&s1, Token::A).unwrap();
        assert!((s2.prefix_logprob().exp() - 0.048).abs() < 1e-12);
        assert_eq!(s2.len(), 2);
        assert!(aut.advance(&s2, Token::A).is_err());
    }

    #[test]
    fn sequence_logprobs_match_enumeration_paths() {
        let aut = sentence("A");
        assert!((aut.sequence_logprob(&[Token::A]).exp() - 0.68).abs() < 1e-12);
        assert!((aut.sequence_logprob(&[]).exp() - 0.075).abs() < 1e-12);
        assert!((aut.sequence_logprob(&[Token::A, Token::A]).exp() - 0.048).abs() < 1e-12);
        assert_eq!(aut.sequence_logprob(&[Token::Period]), LOG_ZERO);
        assert_eq!(
            aut.sequence_logprob(&[Token::A, Token::A, Token::A]),
            LOG_ZERO
        );
    }

    #[test]
    fn document_single_sentence_path() {
        let aut = EmissionAutomaton::compile(
            &ChannelSpec::document(),
            &parse_tokens("A.").unwrap(),
        )
        .unwrap();
        let p = aut.sequence_logprob(&parse_tokens("A.").unwrap()).exp();
        assert!((p - 0.578).abs() < 1e-12);
    }

    #[test]
    fn document_source_must_end_with_period() {
        let err = EmissionAutomaton::compile(
            &ChannelSpec::document(),
            &parse_tokens("AB").unwrap(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn per_state_outgoing_mass_sums_to_one() {
        for source in ["ABC", "CCB"] {
            let aut = sentence(source);
            for s in 0..aut.state_count() {
                let emit: f64 = aut.marginal_lp[s]
                    .iter()
                    .filter(|&&lp| lp != LOG_ZERO)
                    .map(|&lp| lp.exp())
                    .sum();
                let accept = if aut.accept_lp[s] == LOG_ZERO {
                    0.0
                } else {
                    aut.accept_lp[s].exp()
                };
                assert!((emit + accept - 1.0).abs() < 1e-12, "state {s}");
            }
        }
    }

    #[test]
    fn dead_prefix_errors() {
        let aut = sentence("A");
        let dead = aut.advance(&aut.init_state(), Token::Period);
        assert!(dead.is_err());
    }
}
