mod config;

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use beamlab_core::channel::{
    generate_corpus, read_corpus, write_corpus, GenMode, Level, Pair,
};
use beamlab_core::decoder::{
    decode_corpus, read_results, write_results, DecodeRecord, PenaltyConfig, PenaltyMode,
};
use beamlab_core::diagnostics::{
    compare_penalties, corpus_bleu, eos_by_missing, eos_histogram, label_pair, word_distribution,
    write_curve_csv, write_histogram_csv, write_json_report, DocErrorType, ErrorKind, ErrorLabel,
};
use beamlab_core::inference::EmissionAutomaton;
use beamlab_core::token::Token;
use beamlab_core::verify::verify_all;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use config::{parse_level, parse_mode, resolve_beam, resolve_penalty, resolve_spec};
use config::{DecodeFlags, FileConfig};

#[derive(Parser)]
#[command(
    name = "beamlab",
    version,
    about = "Synthetic-channel decoding laboratory: generate corpora, decode them \
             with beam search, and analyze under-translation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded corpus of translation pairs
    Gen(GenArgs),
    /// Decode a corpus with beam search
    Decode(DecodeArgs),
    /// Label results against their corpus and write report files
    Analyze(AnalyzeArgs),
    /// Decode under several penalty configurations and report deltas
    Compare(CompareArgs),
    /// Run the verification suites; nonzero exit if any fails
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Corpus granularity: sentence or document
    #[arg(long, value_parser = parse_level)]
    level: Option<Level>,
    /// Number of pairs to generate
    #[arg(long)]
    pairs: Option<usize>,
    /// train (noisy targets) or test (target == source)
    #[arg(long, value_parser = parse_mode)]
    mode: Option<GenMode>,
    #[arg(long)]
    seed: Option<u64>,
    /// Channel spec JSON file; defaults depend on --level
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output corpus path (JSON lines)
    #[arg(long)]
    out: PathBuf,
    /// JSON config file; explicit flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    /// Input corpus path
    #[arg(long)]
    corpus: PathBuf,
    /// Channel spec JSON file; defaults depend on the corpus level
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output results path (JSON lines)
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    flags: DecodeFlags,
    /// Also write the first pair's compiled automaton beside the results
    #[arg(long)]
    dump_automaton: bool,
    /// JSON config file; explicit flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Corpus the results were decoded from
    #[arg(long)]
    corpus: PathBuf,
    /// Results file produced by decode
    #[arg(long)]
    results: PathBuf,
    /// Output directory for report files
    #[arg(long)]
    out: PathBuf,
    /// JSON config file (bin_width lives here)
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Input corpus path
    #[arg(long)]
    corpus: PathBuf,
    /// Channel spec JSON file; defaults depend on the corpus level
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output report path; a CSV matrix is written next to it
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    flags: DecodeFlags,
    /// JSON config file; sweep grids live here, explicit flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen(args) => cmd_gen(args),
        Command::Decode(args) => cmd_decode(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn write_meta(out: &Path, params: &Value) -> Result<()> {
    let path = PathBuf::from(format!("{}.meta.json", out.display()));
    let text = format!("{}\n", serde_json::to_string_pretty(params)?);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// JSON value for an f64 that may be non-finite, matching results-file
/// notation ("inf", "-inf", "nan").
fn extended_value(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let level = args.level.or(file.level).unwrap_or(Level::Sentence);
    let pairs = args.pairs.or(file.pairs).unwrap_or(100);
    let mode = args.mode.or(file.mode).unwrap_or(GenMode::Test);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let mut spec = resolve_spec(args.spec.as_deref(), &file, level)?;
    if args.level.or(file.level).is_some() {
        spec.level = level;
    }
    spec.validate()?;

    let corpus = generate_corpus(&spec, pairs, mode, seed);
    write_corpus(&args.out, &corpus)
        .with_context(|| format!("writing corpus {}", args.out.display()))?;
    write_meta(
        &args.out,
        &json!({
            "command": "gen",
            "seed": seed,
            "level": level,
            "pairs": pairs,
            "mode": mode,
            "spec": spec,
        }),
    )?;
    println!("wrote {} pairs to {}", corpus.len(), args.out.display());
    Ok(())
}

/// Corpora are decoded against a single channel spec, so every pair must
/// share one level.
fn corpus_level(pairs: &[Pair]) -> Result<Level> {
    let Some(first) = pairs.first() else {
        bail!("corpus is empty");
    };
    if let Some(odd) = pairs.iter().find(|p| p.level != first.level) {
        bail!(
            "corpus mixes levels: pair {} is {} but pair {} is {}",
            first.id,
            first.level,
            odd.id,
            odd.level
        );
    }
    Ok(first.level)
}

fn cmd_decode(args: DecodeArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let pairs = read_corpus(&args.corpus)
        .with_context(|| format!("reading corpus {}", args.corpus.display()))?;
    let level = corpus_level(&pairs)?;
    let spec = resolve_spec(args.spec.as_deref(), &file, level)?;
    let beam = resolve_beam(&args.flags, &file)?;
    let penalty = resolve_penalty(&args.flags, &file)?;

    let records = decode_corpus(&spec, &pairs, &beam, &penalty)?;
    write_results(&args.out, &records)
        .with_context(|| format!("writing results {}", args.out.display()))?;
    write_meta(
        &args.out,
        &json!({
            "command": "decode",
            "corpus": args.corpus.display().to_string(),
            "spec": spec,
            "beam": beam,
            "penalty": penalty,
        }),
    )?;

    if args.dump_automaton {
        let automaton = EmissionAutomaton::compile(&spec, &pairs[0].source)?;
        let path = PathBuf::from(format!("{}.automaton.json", args.out.display()));
        let text = format!("{}\n", serde_json::to_string_pretty(&automaton.debug_dump())?);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }

    println!("decoded {} pairs to {}", records.len(), args.out.display());
    Ok(())
}

fn paired_labels(pairs: &[Pair], records: &[DecodeRecord]) -> Result<Vec<ErrorLabel>> {
    if pairs.len() != records.len() {
        bail!(
            "results has {} lines but corpus has {}",
            records.len(),
            pairs.len()
        );
    }
    pairs
        .iter()
        .zip(records)
        .enumerate()
        .map(|(i, (pair, record))| {
            if pair.id != record.id {
                bail!(
                    "results line {}: id {} does not match corpus id {}",
                    i + 1,
                    record.id,
                    pair.id
                );
            }
            label_pair(pair.level, &pair.source, &record.output)
                .with_context(|| format!("labeling pair {} (line {})", pair.id, i + 1))
        })
        .collect()
}

fn level_summary(
    pairs: &[Pair],
    labels: &[ErrorLabel],
    level: Level,
) -> Option<(String, Value)> {
    let subset: Vec<&ErrorLabel> = pairs
        .iter()
        .zip(labels)
        .filter(|(p, _)| p.level == level)
        .map(|(_, l)| l)
        .collect();
    if subset.is_empty() {
        return None;
    }
    let n = subset.len();
    let count = |kind: ErrorKind| subset.iter().filter(|l| l.kind == kind).count();
    let (under, over, correct) = (
        count(ErrorKind::Under),
        count(ErrorKind::Over),
        count(ErrorKind::Correct),
    );
    let pct = |k: usize| 100.0 * k as f64 / n as f64;
    Some((
        level.to_string(),
        json!({
            "pairs": n,
            "under": under,
            "over": over,
            "correct": correct,
            "under_pct": pct(under),
            "over_pct": pct(over),
        }),
    ))
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let bin_width = file.bin_width.unwrap_or(0.5);
    let pairs = read_corpus(&args.corpus)
        .with_context(|| format!("reading corpus {}", args.corpus.display()))?;
    if pairs.is_empty() {
        bail!("corpus is empty");
    }
    let records = read_results(&args.results)
        .with_context(|| format!("reading results {}", args.results.display()))?;
    let labels = paired_labels(&pairs, &records)?;

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let params = json!({
        "command": "analyze",
        "corpus": args.corpus.display().to_string(),
        "results": args.results.display().to_string(),
        "bin_width": bin_width,
    });

    let outputs: Vec<Vec<Token>> = records.iter().map(|r| r.output.clone()).collect();
    let references: Vec<Vec<Token>> = pairs.iter().map(|p| p.target.clone()).collect();
    let bleu = corpus_bleu(&outputs, &references)?;
    let histogram = eos_histogram(&records, &labels, bin_width)?;

    let mut levels = serde_json::Map::new();
    for level in [Level::Sentence, Level::Document] {
        if let Some((name, summary)) = level_summary(&pairs, &labels, level) {
            levels.insert(name, summary);
        }
    }
    let under_total = labels.iter().filter(|l| l.kind == ErrorKind::Under).count();
    write_json_report(
        &args.out.join("summary.json"),
        &params,
        &json!({
            "pairs": pairs.len(),
            "levels": levels,
            "bleu": bleu,
            "mean_eos_logprob_all": histogram.mean_all,
            "mean_eos_logprob_under": histogram.mean_under,
        }),
    )?;

    let all: Vec<(&[Token], &[Token])> = pairs
        .iter()
        .zip(&records)
        .map(|(p, r)| (p.source.as_slice(), r.output.as_slice()))
        .collect();
    let under: Vec<(&[Token], &[Token])> = pairs
        .iter()
        .zip(&records)
        .zip(&labels)
        .filter(|(_, l)| l.kind == ErrorKind::Under)
        .map(|((p, r), _)| (p.source.as_slice(), r.output.as_slice()))
        .collect();
    write_json_report(
        &args.out.join("word_distribution.json"),
        &params,
        &json!({
            "all": word_distribution(&all)?,
            "under": if under.is_empty() {
                Value::Null
            } else {
                json!(word_distribution(&under)?)
            },
        }),
    )?;

    let doc_type_count = |ty: DocErrorType| {
        labels
            .iter()
            .filter(|l| l.doc_type == Some(ty))
            .count()
    };
    write_json_report(
        &args.out.join("doc_types.json"),
        &params,
        &json!({
            "last": doc_type_count(DocErrorType::Last),
            "penultimate": doc_type_count(DocErrorType::Penultimate),
            "merge": doc_type_count(DocErrorType::Merge),
            "other": doc_type_count(DocErrorType::Other),
        }),
    )?;

    write_histogram_csv(&args.out.join("eos_histogram.csv"), &params, &histogram)?;
    let curve = eos_by_missing(&records, &labels)?;
    write_curve_csv(&args.out.join("eos_by_missing.csv"), &params, &curve)?;

    println!(
        "analyzed {} pairs: under {under_total}, reports in {}",
        pairs.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let pairs = read_corpus(&args.corpus)
        .with_context(|| format!("reading corpus {}", args.corpus.display()))?;
    let level = corpus_level(&pairs)?;
    let spec = resolve_spec(args.spec.as_deref(), &file, level)?;
    let beam = resolve_beam(&args.flags, &file)?;
    let penalty = resolve_penalty(&args.flags, &file)?;

    let baseline = PenaltyConfig {
        mode: PenaltyMode::None,
        ..penalty.clone()
    };
    let mut configs = vec![(beam.clone(), baseline)];
    let sweep = file.sweep.clone().unwrap_or_default();
    if !sweep.is_empty() {
        let alphas = if sweep.alpha.is_empty() { vec![beam.alpha] } else { sweep.alpha.clone() };
        let taus = if sweep.tau.is_empty() { vec![penalty.tau] } else { sweep.tau.clone() };
        let betas = if sweep.beta.is_empty() { vec![penalty.beta] } else { sweep.beta.clone() };
        for &alpha in &alphas {
            for &tau in &taus {
                for &beta in &betas {
                    let mut swept_beam = beam.clone();
                    swept_beam.alpha = alpha;
                    swept_beam.validate()?;
                    let swept = PenaltyConfig {
                        mode: PenaltyMode::Eos,
                        tau,
                        beta,
                        ..penalty.clone()
                    };
                    swept.validate()?;
                    configs.push((swept_beam, swept));
                }
            }
        }
    } else if penalty.mode != PenaltyMode::None {
        configs.push((beam.clone(), penalty.clone()));
    }

    let report = compare_penalties(&spec, &pairs, &configs)?;
    let params = json!({
        "command": "compare",
        "seed": seed,
        "corpus": args.corpus.display().to_string(),
        "spec": spec,
        "beam": beam,
        "grid": {
            "alpha": sweep.alpha,
            "tau": sweep.tau.iter().map(|&v| extended_value(v)).collect::<Vec<_>>(),
            "beta": sweep.beta,
        },
    });
    write_json_report(&args.out, &params, &report)?;

    let csv_path = args.out.with_extension("csv");
    let mut file_out = std::io::BufWriter::new(
        std::fs::File::create(&csv_path)
            .with_context(|| format!("creating {}", csv_path.display()))?,
    );
    writeln!(file_out, "# params: {}", serde_json::to_string(&params)?)?;
    let mut w = csv::Writer::from_writer(file_out);
    w.write_record([
        "label", "alpha", "tau", "beta", "cap", "beta_cov", "under", "over", "correct",
        "resolved_under", "changed_outputs", "token_delta", "bleu", "bleu_delta",
    ])?;
    for row in report.rows.iter().skip(1) {
        w.write_record([
            row.label.clone(),
            format!("{}", row.beam.alpha),
            format!("{}", row.penalty.tau),
            format!("{}", row.penalty.beta),
            format!("{}", row.penalty.cap),
            format!("{}", row.penalty.beta_cov),
            row.under.to_string(),
            row.over.to_string(),
            row.correct.to_string(),
            row.resolved_under.to_string(),
            row.changed_outputs.to_string(),
            format!("{}", row.token_delta),
            format!("{}", row.bleu),
            format!("{}", row.bleu_delta),
        ])?;
    }
    w.flush()?;

    println!(
        "compared {} configs on {} pairs; report {}, matrix {}",
        report.rows.len(),
        report.pairs,
        args.out.display(),
        csv_path.display()
    );
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    let seed = args.seed.unwrap_or(1729);
    let suites = verify_all(seed);
    let mut failures = 0usize;
    for suite in &suites {
        println!(
            "{}: {} — {}",
            suite.name,
            if suite.passed { "pass" } else { "fail" },
            suite.detail
        );
        if !suite.passed {
            failures += 1;
        }
    }
    if failures > 0 {
        bail!("{failures} verification suite(s) failed");
    }
    Ok(())
}
