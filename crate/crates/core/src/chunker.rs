//! End-to-end chunking: training, attachment stripping, and tagging in
//! stand-alone and interactive mode.

use std::ops::Range;

use thiserror::Error;

use crate::corpus::{Node, Phrase, Sentence, Token, Treebank};
use crate::encoding::{decode_tags, Category, EncodingScheme, Relation, StructuralTag, UNKNOWN_LABEL};
use crate::model::{Candidates, ChunkModel, ModelError, Order, TagId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChunkError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("empty treebank")]
    EmptyTreebank,
    #[error("empty input")]
    EmptyInput,
    #[error("span {0:?} is empty")]
    EmptySpan(Range<usize>),
    #[error("span {span:?} exceeds sentence length {len}")]
    SpanOutOfRange { span: Range<usize>, len: usize },
    #[error("spans {0:?} and {1:?} overlap")]
    OverlappingSpans(Range<usize>, Range<usize>),
    #[error("position {position}: unknown POS `{pos}`")]
    UnknownPos { position: usize, pos: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Chunk boundaries are supplied; the tagger finds structure and labels.
    Interactive,
    #[default]
    Standalone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Attachment {
    #[default]
    Full,
    /// Postnominal PPs and edge adverbs are detached before training.
    Stripped,
}

/// What to do with a POS tag the model has no tag for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnknownPosPolicy {
    /// Train with POS tags seen once mapped to a reserved unknown symbol and
    /// use it for unseen POS; positions still without candidates fall back to
    /// uniform emission.
    #[default]
    Unk,
    /// Uniform emission over the whole alphabet at unseen-POS positions.
    Uniform,
    /// Fail on POS tags outside the model's alphabet, including those the
    /// model would map to the unknown symbol.
    Reject,
}

/// Settings of [`strip_attachments`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripConfig {
    /// POS tags or word forms of adverbs detached from chunk edges.
    pub focus_adverbs: Vec<String>,
    /// POS prefixes that mark nouns; the last direct noun child of a host is
    /// its head.
    pub noun_pos_prefixes: Vec<String>,
    pub pp_label: String,
    pub host_labels: Vec<String>,
}

impl Default for StripConfig {
    fn default() -> Self {
        StripConfig {
            focus_adverbs: Vec::new(),
            noun_pos_prefixes: vec!["N".to_string()],
            pp_label: "PP".to_string(),
            host_labels: vec!["NP".to_string(), "PP".to_string()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChunkerConfig {
    pub scheme: EncodingScheme,
    pub mode: Mode,
    pub attachment: Attachment,
    pub unknown_pos_policy: UnknownPosPolicy,
    pub order: Order,
    pub strip: StripConfig,
}

impl ChunkerConfig {
    pub fn new(scheme: EncodingScheme) -> Self {
        ChunkerConfig {
            scheme,
            ..ChunkerConfig::default()
        }
    }
}

fn is_noun(tokens: &[Token], node: &Node, cfg: &StripConfig) -> bool {
    matches!(node, Node::Leaf(i) if cfg.noun_pos_prefixes.iter().any(|p| tokens[*i].pos().starts_with(p.as_str())))
}

fn is_focus_adverb(tokens: &[Token], node: &Node, cfg: &StripConfig) -> bool {
    matches!(node, Node::Leaf(i) if cfg.focus_adverbs.iter().any(|a| a == tokens[*i].pos() || a == tokens[*i].form()))
}

/// Removes the last child of the first host on the right spine of `p` that
/// ends in a PP placed after its head noun.
fn detach_trailing_pp(tokens: &[Token], p: &mut Phrase, cfg: &StripConfig) -> Option<Phrase> {
    if cfg.host_labels.contains(&p.label) {
        let head = p.children.iter().rposition(|c| is_noun(tokens, c, cfg));
        let last = p.children.len() - 1;
        if let (Some(h), Node::Phrase(pp)) = (head, &p.children[last]) {
            if h < last && pp.label == cfg.pp_label {
                match p.children.pop() {
                    Some(Node::Phrase(pp)) => return Some(pp),
                    _ => unreachable!(),
                }
            }
        }
    }
    match p.children.last_mut() {
        Some(Node::Phrase(last)) => detach_trailing_pp(tokens, last, cfg),
        _ => None,
    }
}

fn strip_chunk(tokens: &[Token], mut p: Phrase, cfg: &StripConfig, out: &mut Vec<Node>) {
    let mut before = Vec::new();
    let mut after = Vec::new();
    loop {
        let mut changed = false;
        while p.children.len() > 1 && is_focus_adverb(tokens, &p.children[0], cfg) {
            before.push(p.children.remove(0));
            changed = true;
        }
        while p.children.len() > 1 && is_focus_adverb(tokens, p.children.last().unwrap(), cfg) {
            after.push(p.children.pop().unwrap());
            changed = true;
        }
        if let Some(pp) = detach_trailing_pp(tokens, &mut p, cfg) {
            after.push(Node::Phrase(pp));
            changed = true;
        }
        if !changed {
            break;
        }
    }
    out.extend(before);
    out.push(Node::Phrase(p));
    for node in after.into_iter().rev() {
        match node {
            Node::Phrase(pp) => strip_chunk(tokens, pp, cfg, out),
            leaf => out.push(leaf),
        }
    }
}

/// Detaches postnominal PPs and focus adverbs from their hosts.
///
/// A PP that ends an NP or PP host after the host's last direct noun is
/// moved out to become a top-level chunk; focus adverbs at the edges of a
/// chunk become bare tokens. Prenominal material stays. The result is a
/// fixpoint: stripping it again changes nothing.
pub fn strip_attachments(sentence: &Sentence, cfg: &StripConfig) -> Sentence {
    let tokens = sentence.tokens();
    let mut forest = Vec::with_capacity(sentence.forest().len());
    for node in sentence.forest() {
        match node {
            Node::Phrase(p) => strip_chunk(tokens, p.clone(), cfg, &mut forest),
            leaf => forest.push(leaf.clone()),
        }
    }
    Sentence::new(tokens.to_vec(), forest).expect("stripping preserves coverage")
}

/// Gold data as the configured chunker sees it: stripped when configured.
pub fn prepare_treebank(tb: &Treebank, config: &ChunkerConfig) -> Treebank {
    match config.attachment {
        Attachment::Full => tb.clone(),
        Attachment::Stripped => tb.with_sentences(tb.sentences().iter().map(|s| strip_attachments(s, &config.strip)).collect()),
    }
}

/// Trains a sealed model for `config`.
pub fn train(tb: &Treebank, config: &ChunkerConfig) -> Result<ChunkModel, ChunkError> {
    if tb.is_empty() {
        return Err(ChunkError::EmptyTreebank);
    }
    let data = prepare_treebank(tb, config);
    let unk = (config.unknown_pos_policy == UnknownPosPolicy::Unk).then_some(2);
    Ok(ChunkModel::train(&data, &config.scheme, config.order, unk)?)
}

/// Non-overlapping chunk spans of one sentence, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BoundarySpec {
    spans: Vec<Range<usize>>,
}

impl BoundarySpec {
    pub fn new(mut spans: Vec<Range<usize>>, len: usize) -> Result<Self, ChunkError> {
        spans.sort_by_key(|r| (r.start, r.end));
        for s in &spans {
            if s.start >= s.end {
                return Err(ChunkError::EmptySpan(s.clone()));
            }
            if s.end > len {
                return Err(ChunkError::SpanOutOfRange { span: s.clone(), len });
            }
        }
        for w in spans.windows(2) {
            if w[1].start < w[0].end {
                return Err(ChunkError::OverlappingSpans(w[0].clone(), w[1].clone()));
            }
        }
        Ok(BoundarySpec { spans })
    }

    pub fn spans(&self) -> &[Range<usize>] {
        &self.spans
    }
}

/// Log probability mass attributed to one top-level chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkScore {
    pub span: Range<usize>,
    pub label: String,
    pub log_prob: f64,
}

/// Result of tagging one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct Tagged {
    pub sentence: Sentence,
    pub tags: Vec<StructuralTag>,
    pub repairs: usize,
    /// Log probability of the whole tag sequence.
    pub score: f64,
    pub chunk_scores: Vec<ChunkScore>,
    /// Positions decoded with uniform emission because their POS was unknown.
    pub uniform_positions: Vec<usize>,
    /// Requested spans the constraints could not be met for; each became a
    /// flat chunk.
    pub infeasible_spans: Vec<Range<usize>>,
}

/// A model together with the settings used to apply it. Immutable; tagging
/// may run concurrently over a shared instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Chunker {
    model: ChunkModel,
    config: ChunkerConfig,
}

#[derive(Clone, Copy)]
enum Constraint {
    SpanStart,
    Inside,
    Outside,
}

impl Chunker {
    /// Wraps a model; the scheme and order are taken from the model.
    pub fn new(model: ChunkModel, mut config: ChunkerConfig) -> Self {
        config.scheme = model.scheme().clone();
        config.order = model.order();
        Chunker { model, config }
    }

    pub fn train(tb: &Treebank, config: ChunkerConfig) -> Result<Self, ChunkError> {
        Ok(Chunker::new(train(tb, &config)?, config))
    }

    pub fn model(&self) -> &ChunkModel {
        &self.model
    }

    pub fn config(&self) -> &ChunkerConfig {
        &self.config
    }

    fn lattice(&self, tokens: &[Token], uniform: &mut Vec<usize>) -> Result<Vec<Candidates>, ChunkError> {
        tokens
            .iter()
            .enumerate()
            .map(|(i, tok)| {
                let policy = self.config.unknown_pos_policy;
                // Reject refuses any POS the model only covers through UNK
                let known = self.model.model_pos(tok.pos()) == tok.pos();
                let cands = self.model.candidates(tok.pos());
                if !cands.is_empty() && (known || policy != UnknownPosPolicy::Reject) {
                    return Ok(cands);
                }
                match policy {
                    UnknownPosPolicy::Reject => Err(ChunkError::UnknownPos {
                        position: i,
                        pos: tok.pos().to_string(),
                    }),
                    UnknownPosPolicy::Unk | UnknownPosPolicy::Uniform => {
                        uniform.push(i);
                        Ok(self.model.uniform_candidates())
                    }
                }
            })
            .collect()
    }

    fn allows(&self, id: TagId, c: Constraint) -> bool {
        let tag = self.model.tag(id).expect("candidate ids are valid");
        let outside = matches!(tag.category, Some(Category::Outside));
        match c {
            Constraint::SpanStart => tag.relation == Relation::One && !outside,
            Constraint::Inside => tag.relation != Relation::One,
            Constraint::Outside => tag.relation == Relation::One && (tag.category.is_none() || outside),
        }
    }

    fn decode(&self, lattice: &[Candidates]) -> (Vec<StructuralTag>, f64, Vec<f64>) {
        let path = self.model.decode_lattice(lattice);
        let tags = path.tags.iter().map(|&id| self.model.tag(id).expect("valid id").clone()).collect();
        (tags, path.score, path.position_scores)
    }

    /// Free decoding: boundaries, structure and labels all come from the model.
    pub fn tag_standalone(&self, tokens: &[Token]) -> Result<Tagged, ChunkError> {
        if tokens.is_empty() {
            return Err(ChunkError::EmptyInput);
        }
        let mut uniform = Vec::new();
        let lattice = self.lattice(tokens, &mut uniform)?;
        let (tags, score, position_scores) = self.decode(&lattice);
        let decoded = decode_tags(tokens, &tags, &self.config.scheme).map_err(ModelError::from)?;
        let chunk_scores = chunk_scores(&decoded.sentence, &position_scores);
        Ok(Tagged {
            sentence: decoded.sentence,
            tags,
            repairs: decoded.repairs,
            score,
            chunk_scores,
            uniform_positions: uniform,
            infeasible_spans: Vec::new(),
        })
    }

    /// Decoding under annotator boundaries: every span becomes exactly one
    /// top-level chunk and every other token stays bare.
    pub fn tag_interactive(&self, tokens: &[Token], boundaries: &BoundarySpec) -> Result<Tagged, ChunkError> {
        if tokens.is_empty() {
            return Err(ChunkError::EmptyInput);
        }
        if let Some(last) = boundaries.spans().last() {
            if last.end > tokens.len() {
                return Err(ChunkError::SpanOutOfRange {
                    span: last.clone(),
                    len: tokens.len(),
                });
            }
        }
        let mut uniform = Vec::new();
        let mut lattice = self.lattice(tokens, &mut uniform)?;
        let mut constraint = vec![Constraint::Outside; tokens.len()];
        for span in boundaries.spans() {
            constraint[span.start] = Constraint::SpanStart;
            for c in &mut constraint[span.start + 1..span.end] {
                *c = Constraint::Inside;
            }
        }
        // Narrow every position; a span with an unsatisfiable position is
        // decoded freely and later flattened.
        let mut infeasible = Vec::new();
        let span_of = |i: usize| boundaries.spans().iter().position(|s| s.contains(&i));
        let mut relaxed = vec![false; tokens.len()];
        for i in 0..tokens.len() {
            if lattice[i].iter().all(|&(id, _)| !self.allows(id, constraint[i])) {
                match span_of(i) {
                    Some(k) => {
                        let span = boundaries.spans()[k].clone();
                        relaxed[span.clone()].iter_mut().for_each(|r| *r = true);
                        if !infeasible.contains(&span) {
                            infeasible.push(span);
                        }
                    }
                    None => relaxed[i] = true,
                }
            }
        }
        for i in 0..tokens.len() {
            if !relaxed[i] {
                let c = constraint[i];
                lattice[i].retain(|&(id, _)| self.allows(id, c));
            }
        }
        infeasible.sort_by_key(|s| s.start);
        let (tags, score, position_scores) = self.decode(&lattice);

        let mut forest = Vec::new();
        let mut repairs = 0;
        let mut next = 0;
        for span in boundaries.spans() {
            forest.extend((next..span.start).map(Node::Leaf));
            next = span.end;
            let label_hint = match &tags[span.start].category {
                Some(Category::Label(l)) => Some(l.clone()),
                _ => None,
            };
            if infeasible.contains(span) {
                let label = label_hint.unwrap_or_else(|| UNKNOWN_LABEL.to_string());
                forest.push(Node::Phrase(Phrase::new(label, span.clone().map(Node::Leaf).collect())));
                continue;
            }
            let decoded = decode_tags(&tokens[span.clone()], &tags[span.clone()], &self.config.scheme).map_err(ModelError::from)?;
            repairs += decoded.repairs;
            let (_, local) = decoded.sentence.into_parts();
            let shifted: Vec<Node> = local.into_iter().map(|n| shift(n, span.start)).collect();
            match <[Node; 1]>::try_from(shifted) {
                Ok([Node::Phrase(p)]) => forest.push(Node::Phrase(p)),
                Ok([leaf]) => forest.push(Node::Phrase(Phrase::new(label_hint.unwrap_or_else(|| UNKNOWN_LABEL.to_string()), vec![leaf]))),
                Err(children) => {
                    repairs += 1;
                    let label = label_hint.unwrap_or_else(|| UNKNOWN_LABEL.to_string());
                    forest.push(Node::Phrase(Phrase::new(label, children)));
                }
            }
        }
        forest.extend((next..tokens.len()).map(Node::Leaf));
        let sentence = Sentence::new(tokens.to_vec(), forest).expect("spans cover the sentence in order");
        let chunk_scores = chunk_scores(&sentence, &position_scores);
        Ok(Tagged {
            sentence,
            tags,
            repairs,
            score,
            chunk_scores,
            uniform_positions: uniform,
            infeasible_spans: infeasible,
        })
    }

    /// Tags in the configured mode; interactive mode needs boundaries.
    pub fn tag(&self, tokens: &[Token], boundaries: Option<&BoundarySpec>) -> Result<Tagged, ChunkError> {
        match (self.config.mode, boundaries) {
            (Mode::Interactive, Some(b)) => self.tag_interactive(tokens, b),
            (Mode::Interactive, None) => self.tag_interactive(tokens, &BoundarySpec::default()),
            (Mode::Standalone, _) => self.tag_standalone(tokens),
        }
    }
}

fn shift(node: Node, by: usize) -> Node {
    match node {
        Node::Leaf(i) => Node::Leaf(i + by),
        Node::Phrase(p) => Node::Phrase(Phrase::new(p.label, p.children.into_iter().map(|c| shift(c, by)).collect())),
    }
}

fn chunk_scores(sentence: &Sentence, position_scores: &[f64]) -> Vec<ChunkScore> {
    sentence
        .forest()
        .iter()
        .filter_map(|n| match n {
            Node::Phrase(p) => {
                let span = p.span();
                Some(ChunkScore {
                    log_prob: position_scores[span.clone()].iter().sum(),
                    span,
                    label: p.label.clone(),
                })
            }
            Node::Leaf(_) => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_bracketed, parse_sentence};
    use crate::encoding::{tag_alphabet, Depth, Dims};

    const FIG: &str = "(NP ein/ART (AP (PP in/APPR (MPN Tel/NE Aviv/NE)) lebender/ADJA) Maler/NN)";

    fn adverbs(list: &[&str]) -> StripConfig {
        StripConfig {
            focus_adverbs: list.iter().map(|s| s.to_string()).collect(),
            ..StripConfig::default()
        }
    }

    #[test]
    fn strip_postnominal_pp() {
        let s = parse_sentence("(NP der/ART Mann/NN (PP mit/APPR dem/ART Hut/NN))").unwrap();
        let out = strip_attachments(&s, &StripConfig::default());
        assert_eq!(out.to_string(), "(NP der/ART Mann/NN) (PP mit/APPR dem/ART Hut/NN)");
    }

    #[test]
    fn strip_keeps_prenominal_material() {
        for text in [FIG, "(NP der/ART (AP sehr/ADV alte/ADJA) Mann/NN)", "a/ART b/NN"] {
            let s = parse_sentence(text).unwrap();
            assert_eq!(strip_attachments(&s, &StripConfig::default()), s);
        }
    }

    #[test]
    fn strip_nested_chain_and_adverbs() {
        let s = parse_sentence("(NP nur/ADV der/ART Mann/NN (PP mit/APPR dem/ART Hut/NN (PP aus/APPR Rom/NE)))").unwrap();
        let out = strip_attachments(&s, &adverbs(&["nur"]));
        assert_eq!(out.to_string(), "nur/ADV (NP der/ART Mann/NN) (PP mit/APPR dem/ART Hut/NN) (PP aus/APPR Rom/NE)");
        assert_eq!(strip_attachments(&out, &adverbs(&["nur"])), out);
    }

    #[test]
    fn strip_inside_coordination() {
        let s = parse_sentence("(CNP (NP a/ART b/NN) und/KON (NP c/ART d/NN (PP in/APPR e/NN)))").unwrap();
        let out = strip_attachments(&s, &StripConfig::default());
        assert_eq!(out.to_string(), "(CNP (NP a/ART b/NN) und/KON (NP c/ART d/NN)) (PP in/APPR e/NN)");
    }

    #[test]
    fn pp_without_preceding_noun_stays() {
        let s = parse_sentence("(NP (PP in/APPR e/NN))").unwrap();
        assert_eq!(strip_attachments(&s, &StripConfig::default()), s);
    }

    #[test]
    fn full_and_stripped_agree_without_attachments() {
        let tb = parse_bracketed(&format!("{FIG}\nsie/PPER (NP den/ART Mann/NN)")).unwrap();
        let mut cfg = ChunkerConfig::new("rtcg".parse().unwrap());
        let full = train(&tb, &cfg).unwrap();
        cfg.attachment = Attachment::Stripped;
        assert_eq!(train(&tb, &cfg).unwrap().to_text(), full.to_text());
    }

    #[test]
    fn model_alphabet_matches_tag_alphabet() {
        let tb = parse_bracketed(&format!("{FIG}\nsie/PPER (NP den/ART Mann/NN)")).unwrap();
        let mut cfg = ChunkerConfig::new("rtc".parse().unwrap());
        cfg.unknown_pos_policy = UnknownPosPolicy::Uniform;
        let m = train(&tb, &cfg).unwrap();
        assert_eq!(m.alphabet(), &tag_alphabet(&tb, &cfg.scheme).unwrap().tags);
        assert_eq!(train(&Treebank::default(), &cfg), Err(ChunkError::EmptyTreebank));
    }

    #[test]
    fn boundary_validation() {
        assert!(BoundarySpec::new(vec![0..2, 2..3], 3).is_ok());
        assert_eq!(BoundarySpec::new(vec![0..2, 1..3], 3), Err(ChunkError::OverlappingSpans(0..2, 1..3)));
        assert_eq!(BoundarySpec::new(vec![1..1], 3), Err(ChunkError::EmptySpan(1..1)));
        assert!(matches!(BoundarySpec::new(vec![2..4], 3), Err(ChunkError::SpanOutOfRange { .. })));
    }

    fn toy() -> Chunker {
        let text = [FIG; 3].join("\n") + "\nsie/PPER sieht/VVFIN (NP den/ART Maler/NN)\n(NP ein/ART Maler/NN) sieht/VVFIN (NP Aviv/NE)";
        let tb = parse_bracketed(&text).unwrap();
        let mut cfg = ChunkerConfig::new(EncodingScheme::new(Dims::RTC, Depth::Three));
        cfg.unknown_pos_policy = UnknownPosPolicy::Uniform;
        Chunker::train(&tb, cfg).unwrap()
    }

    #[test]
    fn standalone_reproduces_training_structure() {
        let c = toy();
        let fig = parse_sentence(FIG).unwrap();
        let out = c.tag_standalone(fig.tokens()).unwrap();
        assert_eq!(out.sentence, fig);
        assert_eq!(out.repairs, 0);
        assert_eq!(out.chunk_scores.len(), 1);
        assert!((out.chunk_scores[0].log_prob - out.score).abs() < 1.0);
    }

    #[test]
    fn interactive_respects_spans() {
        let c = toy();
        let fig = parse_sentence(FIG).unwrap();
        let whole = c.tag_interactive(fig.tokens(), &BoundarySpec::new(vec![0..6], 6).unwrap()).unwrap();
        assert_eq!(whole.sentence, fig);
        let none = c.tag_interactive(fig.tokens(), &BoundarySpec::default()).unwrap();
        assert!(none.sentence.forest().iter().all(|n| matches!(n, Node::Leaf(_))));
        let parts = c.tag_interactive(fig.tokens(), &BoundarySpec::new(vec![1..2, 3..6], 6).unwrap()).unwrap();
        assert_eq!(parts.sentence.chunk_spans(), vec![1..2, 3..6]);
    }

    #[test]
    fn single_token_span_takes_a_category() {
        let c = toy();
        let toks = parse_sentence("Aviv/NE").unwrap().tokens().to_vec();
        let out = c.tag_interactive(&toks, &BoundarySpec::new(vec![0..1], 1).unwrap()).unwrap();
        assert_eq!(out.sentence.to_string(), "(NP Aviv/NE)");
    }

    #[test]
    fn infeasible_span_falls_back_to_flat_chunk() {
        let c = toy();
        // VVFIN never occurs inside a chunk, so it has no non-ONE tag.
        let toks = parse_sentence("sieht/VVFIN sieht/VVFIN").unwrap().tokens().to_vec();
        let out = c.tag_interactive(&toks, &BoundarySpec::new(vec![0..2], 2).unwrap()).unwrap();
        assert_eq!(out.infeasible_spans, vec![0..2]);
        assert_eq!(out.sentence.chunk_spans(), vec![0..2]);
    }

    #[test]
    fn unknown_pos_policies() {
        let fig = parse_sentence("a/ART b/QQQ").unwrap();
        let c = toy();
        let out = c.tag_standalone(fig.tokens()).unwrap();
        assert_eq!(out.uniform_positions, vec![1]);
        let mut cfg = c.config().clone();
        cfg.unknown_pos_policy = UnknownPosPolicy::Reject;
        let strict = Chunker::new(c.model().clone(), cfg);
        assert!(matches!(strict.tag_standalone(fig.tokens()), Err(ChunkError::UnknownPos { position: 1, .. })));
    }

    #[test]
    fn reject_ignores_the_unknown_symbol() {
        let tb = parse_bracketed("(NP a/ART b/NN) c/FM\n(NP d/ART e/NN)\n").unwrap();
        let cfg = ChunkerConfig::new(EncodingScheme::new(Dims::RT, Depth::Three));
        let c = Chunker::train(&tb, cfg.clone()).unwrap();
        assert!(c.model().trained_with_unk());
        let toks = parse_sentence("a/ART x/QQQ").unwrap().tokens().to_vec();
        assert!(c.tag_standalone(&toks).is_ok());
        let strict = Chunker::new(c.model().clone(), ChunkerConfig { unknown_pos_policy: UnknownPosPolicy::Reject, ..cfg });
        assert!(matches!(strict.tag_standalone(&toks), Err(ChunkError::UnknownPos { position: 1, .. })));
    }
}
