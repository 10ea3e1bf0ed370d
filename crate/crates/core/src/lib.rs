//! A decoding laboratory for under-translation: a synthetic noisy
//! translation channel over a three-word vocabulary, an exact per-source
//! scorer (compiled emission automaton with forward DP), beam search with
//! EOS-margin and coverage penalties, and the diagnostics that measure when
//! and why length-normalized decoding stops too early.

pub mod channel;
pub mod decoder;
pub mod diagnostics;
pub mod inference;
pub mod logprob;
pub mod token;
pub mod verify;

pub use channel::{ChannelSpec, GenMode, Level, NoiseSpec, Pair, TranslationMatrix};
pub use decoder::{
    beam_search, decode_corpus, BeamConfig, DecodeError, DecodeRecord, FinalizedCandidate,
    PenaltyConfig, PenaltyMode,
};
pub use diagnostics::{
    compare_penalties, corpus_bleu, derivation_check, label_document, label_pair,
    label_sentence, DiagnosticsError, DocErrorType, ErrorKind, ErrorLabel,
};
pub use inference::{EmissionAutomaton, InferenceError, Scorer, StepLogProbs};
pub use token::Token;
