//! Command-line front end: `train`, `tag`, `eval`, `xval`, `curve` and
//! `inspect`. [`run`] does the work and returns warnings; errors carry the
//! process exit status.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use chunktagger::chunker::{Attachment, ChunkError, Mode, UnknownPosPolicy};
use chunktagger::corpus::{parse_bracketed_with, parse_tagged, CorpusError, DepthPolicy, ParseOptions, Token, Treebank, DEFAULT_MAX_DEPTH};
use chunktagger::encoding::{Depth, Dims};
use chunktagger::eval::{cross_validate, evaluate, learning_curve, EvalError};
use chunktagger::model::{ModelError, Order};
use chunktagger::{BoundarySpec, ChunkModel, Chunker, ChunkerConfig, EncodingScheme, EvalReport};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

/// Seed used when neither `--seed` nor `CHUNKTAGGER_SEED` is given.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "chunktagger", version, about = "Stochastic chunk tagger")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model on a bracketed treebank.
    Train(TrainArgs),
    /// Chunk POS-tagged sentences and print bracketed output.
    Tag(TagArgs),
    /// Score a model against a bracketed gold treebank.
    Eval(EvalArgs),
    /// Cross-validate on a treebank.
    Xval(XvalArgs),
    /// Held-out precision for growing training sets.
    Curve(CurveArgs),
    /// Print a model's header, tagset size and interpolation weights.
    Inspect(InspectArgs),
}

fn parse_dims(s: &str) -> Result<Dims, String> {
    s.parse().map_err(|_| format!("`{s}` is not a dimension list like r,t,c,g"))
}

fn parse_depth(s: &str) -> Result<Depth, String> {
    s.parse().ok().and_then(Depth::from_levels).ok_or_else(|| format!("depth must be 2 or 3, got `{s}`"))
}

fn parse_order(s: &str) -> Result<Order, String> {
    s.parse().ok().and_then(Order::from_number).ok_or_else(|| format!("order must be 1, 2 or 3, got `{s}`"))
}

#[derive(Debug, Clone, Args)]
pub struct SchemeArgs {
    /// Tag dimensions, e.g. `r`, `r,t` or `rtcg`.
    #[arg(long, default_value = "rtcg", value_parser = parse_dims)]
    pub dims: Dims,
    /// Structural depth limit (2 or 3).
    #[arg(long, default_value = "3", value_parser = parse_depth)]
    pub depth: Depth,
    /// Markov order (1, 2 or 3).
    #[arg(long, default_value = "3", value_parser = parse_order)]
    pub order: Order,
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Reject treebank sentences deeper than the format limit (default).
    #[arg(long, conflicts_with = "lenient")]
    pub strict: bool,
    /// Flatten overly deep sentences instead of rejecting them.
    #[arg(long)]
    pub lenient: bool,
    /// Detach postnominal PPs and edge adverbs before training and scoring.
    #[arg(long)]
    pub no_attach: bool,
    /// Adverb POS tag or form peeled off chunk edges with --no-attach.
    #[arg(long = "focus-adverb", value_name = "TAG")]
    pub focus_adverbs: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Standalone,
    Interactive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnknownPosArg {
    Unk,
    Uniform,
    Reject,
}

#[derive(Debug, Clone, Args)]
pub struct SeedArgs {
    /// Shuffling seed; falls back to CHUNKTAGGER_SEED.
    #[arg(long, env = "CHUNKTAGGER_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_enum, default_value = "unk")]
    pub unknown_pos: UnknownPosArg,
    /// Bracketed training treebank.
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long = "out", value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TagArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// POS-tagged input, one sentence of `form/POS` tokens per line; stdin if
    /// absent.
    #[arg(long = "in", value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Output file; stdout if absent.
    #[arg(long = "out", value_name = "FILE")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "standalone")]
    pub mode: ModeArg,
    /// Chunk spans for interactive mode: one line per input sentence with
    /// whitespace-separated `start-end` pairs (0-based, end exclusive).
    #[arg(long, value_name = "FILE")]
    pub spans: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "unk")]
    pub unknown_pos: UnknownPosArg,
    /// Fail with status 4 instead of falling back to a flat chunk when a
    /// span admits no constrained analysis.
    #[arg(long)]
    pub require_feasible: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Bracketed gold treebank.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, value_enum, default_value = "standalone")]
    pub mode: ModeArg,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_enum, default_value = "unk")]
    pub unknown_pos: UnknownPosArg,
    /// Print `key=value` lines instead of a table.
    #[arg(long)]
    pub key_values: bool,
}

#[derive(Debug, Args)]
pub struct XvalArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, value_enum, default_value = "standalone")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "unk")]
    pub unknown_pos: UnknownPosArg,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Training-set sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    #[arg(long, value_enum, default_value = "standalone")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "unk")]
    pub unknown_pos: UnknownPosArg,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub model: PathBuf,
    /// Also list every tag of the alphabet.
    #[arg(long)]
    pub tags: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Corpus { path: String, source: CorpusError },
    #[error("{path}: {source}")]
    ModelFile { path: String, source: ModelError },
    #[error("{0}")]
    Data(String),
    #[error("sentence {sentence}: {source}")]
    Chunk { sentence: usize, source: ChunkError },
    #[error("sentence {sentence}: no analysis satisfies span {span:?}")]
    InfeasibleSpan { sentence: usize, span: Range<usize> },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn is_infeasible(e: &ChunkError) -> bool {
    matches!(e, ChunkError::Model(ModelError::Infeasible { .. }))
}

impl CliError {
    /// 2 for usage errors, 4 when decoding is infeasible, 3 for everything
    /// wrong with the data.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::InfeasibleSpan { .. } => 4,
            CliError::Chunk { source, .. } if is_infeasible(source) => 4,
            CliError::Eval(EvalError::Chunk(source)) if is_infeasible(source) => 4,
            _ => 3,
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|source| CliError::Io {
        path: "<stdout>".to_string(),
        source,
    })
}

fn load_treebank(path: &Path, corpus: &CorpusArgs, warnings: &mut Vec<String>) -> Result<Treebank, CliError> {
    let opts = ParseOptions {
        max_depth: DEFAULT_MAX_DEPTH,
        depth_policy: if corpus.lenient { DepthPolicy::Lenient } else { DepthPolicy::Strict },
    };
    let parsed = parse_bracketed_with(&read_file(path)?, &opts).map_err(|source| CliError::Corpus {
        path: path.display().to_string(),
        source,
    })?;
    if parsed.flattened > 0 {
        warnings.push(format!("{}: flattened {} phrases to fit the depth limit", path.display(), parsed.flattened));
    }
    if parsed.treebank.is_empty() {
        return Err(CliError::Data(format!("{}: no sentences", path.display())));
    }
    Ok(parsed.treebank)
}

fn load_model(path: &Path) -> Result<ChunkModel, CliError> {
    ChunkModel::from_text(&read_file(path)?).map_err(|source| CliError::ModelFile {
        path: path.display().to_string(),
        source,
    })
}

fn config(scheme: EncodingScheme, corpus: Option<&CorpusArgs>, mode: ModeArg, unknown: UnknownPosArg) -> ChunkerConfig {
    let mut cfg = ChunkerConfig::new(scheme);
    cfg.mode = match mode {
        ModeArg::Standalone => Mode::Standalone,
        ModeArg::Interactive => Mode::Interactive,
    };
    cfg.unknown_pos_policy = match unknown {
        UnknownPosArg::Unk => UnknownPosPolicy::Unk,
        UnknownPosArg::Uniform => UnknownPosPolicy::Uniform,
        UnknownPosArg::Reject => UnknownPosPolicy::Reject,
    };
    if let Some(c) = corpus {
        if c.no_attach {
            cfg.attachment = Attachment::Stripped;
        }
        cfg.strip.focus_adverbs = c.focus_adverbs.clone();
    }
    cfg
}

fn scheme_config(s: &SchemeArgs, corpus: &CorpusArgs, mode: ModeArg, unknown: UnknownPosArg) -> ChunkerConfig {
    let mut cfg = config(EncodingScheme::new(s.dims, s.depth), Some(corpus), mode, unknown);
    cfg.order = s.order;
    cfg
}

/// Parses a spans file: one line per sentence, `start-end` pairs.
pub fn parse_spans(text: &str) -> Result<Vec<Vec<Range<usize>>>, String> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            line.split_whitespace()
                .map(|pair| {
                    let (a, b) = pair.split_once('-').ok_or_else(|| format!("line {}: `{pair}` is not start-end", i + 1))?;
                    let num = |s: &str| s.parse::<usize>().map_err(|_| format!("line {}: `{pair}` is not start-end", i + 1));
                    Ok(num(a)?..num(b)?)
                })
                .collect()
        })
        .collect()
}

fn train(args: TrainArgs, out: &mut dyn Write, warnings: &mut Vec<String>) -> Result<(), CliError> {
    let tb = load_treebank(&args.input, &args.corpus, warnings)?;
    let cfg = scheme_config(&args.scheme, &args.corpus, ModeArg::Standalone, args.unknown_pos);
    let chunker = Chunker::train(&tb, cfg).map_err(|source| CliError::Chunk { sentence: 0, source })?;
    let m = chunker.model();
    write_file(&args.output, &m.to_text())?;
    write_out(
        out,
        &format!(
            "trained dims={} depth={} order={} on {} sentences, {} tokens; {} tags; wrote {}\n",
            m.scheme().dims,
            m.scheme().depth.levels(),
            m.order().number(),
            m.training_sentences(),
            m.training_tokens(),
            m.tagset_size(),
            args.output.display()
        ),
    )
}

fn tag(args: TagArgs, out: &mut dyn Write, warnings: &mut Vec<String>) -> Result<(), CliError> {
    match (args.mode, &args.spans) {
        (ModeArg::Standalone, Some(_)) => return Err(CliError::Usage("--spans needs --mode interactive".into())),
        (ModeArg::Interactive, None) => return Err(CliError::Usage("--mode interactive needs --spans".into())),
        _ => {}
    }
    let model = load_model(&args.model)?;
    let (input_name, text) = match &args.input {
        Some(p) => (p.display().to_string(), read_file(p)?),
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map_err(|source| CliError::Io {
                path: "<stdin>".into(),
                source,
            })?;
            ("<stdin>".to_string(), s)
        }
    };
    let sentences: Vec<Vec<Token>> = parse_tagged(&text).map_err(|source| CliError::Corpus { path: input_name, source })?;
    let spans = match &args.spans {
        Some(p) => {
            let spans = parse_spans(&read_file(p)?).map_err(|m| CliError::Data(format!("{}: {m}", p.display())))?;
            if spans.len() != sentences.len() {
                return Err(CliError::Data(format!(
                    "{}: {} span lines for {} sentences",
                    p.display(),
                    spans.len(),
                    sentences.len()
                )));
            }
            Some(spans)
        }
        None => None,
    };
    let chunker = Chunker::new(model.clone(), config(model.scheme().clone(), None, args.mode, args.unknown_pos));

    let mut text = String::new();
    for (i, tokens) in sentences.iter().enumerate() {
        let n = i + 1;
        let boundaries = match &spans {
            Some(s) => Some(BoundarySpec::new(s[i].clone(), tokens.len()).map_err(|e| CliError::Data(format!("sentence {n}: {e}")))?),
            None => None,
        };
        let tagged = chunker.tag(tokens, boundaries.as_ref()).map_err(|source| CliError::Chunk { sentence: n, source })?;
        if let Some(span) = tagged.infeasible_spans.first() {
            if args.require_feasible {
                return Err(CliError::InfeasibleSpan { sentence: n, span: span.clone() });
            }
            warnings.push(format!("sentence {n}: spans {:?} decoded as flat chunks", tagged.infeasible_spans));
        }
        if !tagged.uniform_positions.is_empty() {
            warnings.push(format!("sentence {n}: unknown POS at positions {:?}", tagged.uniform_positions));
        }
        let _ = writeln!(text, "{}", tagged.sentence);
    }
    match &args.output {
        Some(p) => write_file(p, &text),
        None => write_out(out, &text),
    }
}

fn eval(args: EvalArgs, out: &mut dyn Write, warnings: &mut Vec<String>) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let gold = load_treebank(&args.gold, &args.corpus, warnings)?;
    let cfg = config(model.scheme().clone(), Some(&args.corpus), args.mode, args.unknown_pos);
    let report = evaluate(&Chunker::new(model, cfg), &gold)?;
    let body = if args.key_values { report.render_key_values() } else { report.render_table() };
    write_out(out, &format!("gold {}\nsentences {}\n{body}", args.gold.display(), gold.len()))
}

fn fold_line(i: usize, r: &EvalReport) -> String {
    format!(
        "fold {i} tag_accuracy={:.6} labelled_precision={:.6} top_level_precision={:.6}\n",
        r.tag_accuracy, r.labelled_precision, r.top_level_precision
    )
}

fn xval(args: XvalArgs, out: &mut dyn Write, warnings: &mut Vec<String>) -> Result<(), CliError> {
    if args.folds < 2 {
        return Err(CliError::Usage("--folds must be at least 2".into()));
    }
    let tb = load_treebank(&args.input, &args.corpus, warnings)?;
    let cfg = scheme_config(&args.scheme, &args.corpus, args.mode, args.unknown_pos);
    let cv = cross_validate(&tb, &cfg, args.folds, args.seed.seed)?;
    let mut text = format!("seed {}\nfolds {}\nsentences {}\n", cv.seed, args.folds, tb.len());
    for (i, r) in cv.folds.iter().enumerate() {
        text.push_str(&fold_line(i + 1, r));
    }
    text.push_str("mean\n");
    text.push_str(&cv.mean.render_table());
    write_out(out, &text)
}

fn curve(args: CurveArgs, out: &mut dyn Write, warnings: &mut Vec<String>) -> Result<(), CliError> {
    if args.sizes.contains(&0) {
        return Err(CliError::Usage("--sizes must be positive".into()));
    }
    let tb = load_treebank(&args.input, &args.corpus, warnings)?;
    let cfg = scheme_config(&args.scheme, &args.corpus, args.mode, args.unknown_pos);
    let lc = learning_curve(&tb, &cfg, &args.sizes, args.seed.seed)?;
    write_out(out, &format!("seed {}\n{}", lc.seed, lc.render()))
}

fn inspect(args: InspectArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let m = load_model(&args.model)?;
    let text = inspect_text(&m, args.tags);
    write_out(out, &text)
}

/// Human-readable model summary.
pub fn inspect_text(m: &ChunkModel, with_tags: bool) -> String {
    let w = m.weights();
    let mut text = String::new();
    let _ = writeln!(text, "dims={}", m.scheme().dims);
    let _ = writeln!(text, "depth={}", m.scheme().depth.levels());
    let _ = writeln!(text, "order={}", m.order().number());
    let _ = writeln!(text, "unk={}", m.trained_with_unk());
    let _ = writeln!(text, "training_sentences={}", m.training_sentences());
    let _ = writeln!(text, "training_tokens={}", m.training_tokens());
    let _ = writeln!(text, "tagset_size={}", m.tagset_size());
    let _ = writeln!(text, "pos_alphabet_size={}", m.pos_alphabet().len());
    let _ = writeln!(text, "lambda={:.6} {:.6} {:.6}", w.unigram, w.bigram, w.trigram);
    if with_tags {
        for id in m.tag_ids() {
            let _ = writeln!(text, "tag {id} {}", m.tag(id).expect("listed id"));
        }
    }
    text
}

/// Runs one command, writing its report to `out`. Returns warnings meant
/// for stderr.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<Vec<String>, CliError> {
    let mut warnings = Vec::new();
    match cli.command {
        Command::Train(a) => train(a, out, &mut warnings)?,
        Command::Tag(a) => tag(a, out, &mut warnings)?,
        Command::Eval(a) => eval(a, out, &mut warnings)?,
        Command::Xval(a) => xval(a, out, &mut warnings)?,
        Command::Curve(a) => curve(a, out, &mut warnings)?,
        Command::Inspect(a) => inspect(a, out)?,
    }
    Ok(warnings)
}
