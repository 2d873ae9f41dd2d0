//! Second-order Markov model over structural tags.
//!
//! Sequences are padded with two boundary states in front and one at the
//! end; the final boundary transition is part of the objective. Transition
//! estimates interpolate unigram, bigram and trigram relative frequencies
//! with global weights from deleted interpolation. When the tag carries the
//! POS, emission is degenerate (1 if the tag's POS matches the word's, else
//! 0); otherwise it is a smoothed relative frequency.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use indexmap::IndexSet;
use thiserror::Error;

use crate::corpus::Treebank;
use crate::encoding::{encode_sentence, Depth, Dims, EncodeError, EncodingScheme, FlagLabels, StructuralTag};

pub type TagId = u32;

/// The sentence boundary state. Alphabet tags are numbered from 1.
pub const BOUNDARY: TagId = 0;

/// POS symbol standing in for POS tags not seen in training.
pub const UNK_POS: &str = "UNK";

/// Additive smoothing constant for non-degenerate emissions.
pub const EMISSION_SMOOTHING: f64 = 0.01;

const FORMAT_HEADER: &str = "chunktagger-model 1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("no training data")]
    Empty,
    #[error("unknown tag id {0}")]
    UnknownTag(TagId),
    #[error("position {position}: POS `{pos}` has no tag with non-zero emission")]
    UnknownPos { position: usize, pos: String },
    #[error("position {position}: no tag satisfies the constraints")]
    Infeasible { position: usize },
    #[error("{0} constraint sets for {1} positions")]
    ConstraintLength(usize, usize),
    #[error("empty input sequence")]
    EmptyInput,
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
}

fn format_err(line: usize, message: impl Into<String>) -> ModelError {
    ModelError::Format {
        line,
        message: message.into(),
    }
}

/// Model order: how many previous tags condition a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Order {
    Unigram = 1,
    Bigram = 2,
    #[default]
    Trigram = 3,
}

impl Order {
    pub fn from_number(n: usize) -> Option<Order> {
        match n {
            1 => Some(Order::Unigram),
            2 => Some(Order::Bigram),
            3 => Some(Order::Trigram),
            _ => None,
        }
    }

    pub fn number(self) -> usize {
        self as usize
    }
}

/// N-gram counts over padded tag sequences.
///
/// Every tag position after the two leading boundaries (including the final
/// boundary) contributes one unigram, one bigram and one trigram ending in
/// it, so trigram counts marginalise to bigram counts and bigram counts to
/// unigram counts. History totals are kept separately.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountsTable {
    unigram: HashMap<TagId, u64>,
    bigram: HashMap<(TagId, TagId), u64>,
    trigram: HashMap<(TagId, TagId, TagId), u64>,
    history1: HashMap<TagId, u64>,
    history2: HashMap<(TagId, TagId), u64>,
    emission: HashMap<(TagId, String), u64>,
    tag_emissions: HashMap<TagId, u64>,
    total: u64,
}

impl CountsTable {
    /// Adds one sentence given as `(tag id, POS)` pairs.
    pub fn add_sequence<S: AsRef<str>>(&mut self, seq: &[(TagId, S)]) {
        let mut h2 = BOUNDARY;
        let mut h1 = BOUNDARY;
        let targets = seq.iter().map(|(t, _)| *t).chain(std::iter::once(BOUNDARY));
        for t in targets {
            *self.unigram.entry(t).or_default() += 1;
            *self.bigram.entry((h1, t)).or_default() += 1;
            *self.trigram.entry((h2, h1, t)).or_default() += 1;
            *self.history1.entry(h1).or_default() += 1;
            *self.history2.entry((h2, h1)).or_default() += 1;
            self.total += 1;
            h2 = h1;
            h1 = t;
        }
        for (t, pos) in seq {
            *self.emission.entry((*t, pos.as_ref().to_string())).or_default() += 1;
            *self.tag_emissions.entry(*t).or_default() += 1;
        }
    }

    fn add_raw(&mut self, kind: &str, ids: &[TagId], count: u64) {
        match (kind, ids) {
            ("1", [a]) => {
                self.unigram.insert(*a, count);
                self.total += count;
            }
            ("2", [a, b]) => {
                self.bigram.insert((*a, *b), count);
                *self.history1.entry(*a).or_default() += count;
            }
            ("3", [a, b, c]) => {
                self.trigram.insert((*a, *b, *c), count);
                *self.history2.entry((*a, *b)).or_default() += count;
            }
            _ => unreachable!(),
        }
    }

    pub fn unigram(&self, t: TagId) -> u64 {
        self.unigram.get(&t).copied().unwrap_or(0)
    }

    pub fn bigram(&self, a: TagId, b: TagId) -> u64 {
        self.bigram.get(&(a, b)).copied().unwrap_or(0)
    }

    pub fn trigram(&self, a: TagId, b: TagId, c: TagId) -> u64 {
        self.trigram.get(&(a, b, c)).copied().unwrap_or(0)
    }

    /// How often `a` occurs as the immediate history of some position.
    pub fn history1(&self, a: TagId) -> u64 {
        self.history1.get(&a).copied().unwrap_or(0)
    }

    /// How often `(a, b)` occurs as the two-tag history of some position.
    pub fn history2(&self, a: TagId, b: TagId) -> u64 {
        self.history2.get(&(a, b)).copied().unwrap_or(0)
    }

    pub fn emission(&self, t: TagId, pos: &str) -> u64 {
        self.emission.get(&(t, pos.to_string())).copied().unwrap_or(0)
    }

    pub fn tag_emissions(&self, t: TagId) -> u64 {
        self.tag_emissions.get(&t).copied().unwrap_or(0)
    }

    /// Number of counted positions (tokens plus one end boundary per sentence).
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn trigrams(&self) -> impl Iterator<Item = ((TagId, TagId, TagId), u64)> + '_ {
        self.trigram.iter().map(|(k, v)| (*k, *v))
    }

    pub fn bigrams(&self) -> impl Iterator<Item = ((TagId, TagId), u64)> + '_ {
        self.bigram.iter().map(|(k, v)| (*k, *v))
    }

    pub fn unigrams(&self) -> impl Iterator<Item = (TagId, u64)> + '_ {
        self.unigram.iter().map(|(k, v)| (*k, *v))
    }

    pub fn emissions(&self) -> impl Iterator<Item = ((TagId, &str), u64)> + '_ {
        self.emission.iter().map(|((t, p), v)| ((*t, p.as_str()), *v))
    }
}

/// Encodes a treebank and counts its tag n-grams. Tag ids follow first-seen
/// order, starting at 1.
pub fn collect_counts(tb: &Treebank, scheme: &EncodingScheme) -> Result<(IndexSet<StructuralTag>, CountsTable), ModelError> {
    collect_counts_with(tb, scheme, None)
}

fn collect_counts_with(
    tb: &Treebank,
    scheme: &EncodingScheme,
    unk: Option<&BTreeSet<String>>,
) -> Result<(IndexSet<StructuralTag>, CountsTable), ModelError> {
    let mut alphabet = IndexSet::new();
    let mut counts = CountsTable::default();
    for s in tb.sentences() {
        let tags = encode_sentence(s, scheme)?;
        let seq: Vec<(TagId, &str)> = tags
            .into_iter()
            .zip(s.tokens())
            .map(|(mut tag, tok)| {
                let mut pos = tok.pos();
                if unk.is_some_and(|rare| rare.contains(pos)) {
                    pos = UNK_POS;
                    if tag.pos.is_some() {
                        tag.pos = Some(UNK_POS.to_string());
                    }
                }
                let (idx, _) = alphabet.insert_full(tag);
                (idx as TagId + 1, pos)
            })
            .collect();
        counts.add_sequence(&seq);
    }
    Ok((alphabet, counts))
}

/// Global interpolation weights for unigram, bigram and trigram estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolationWeights {
    pub unigram: f64,
    pub bigram: f64,
    pub trigram: f64,
}

impl InterpolationWeights {
    pub fn sum(&self) -> f64 {
        self.unigram + self.bigram + self.trigram
    }

    fn truncated(&self, order: Order) -> [f64; 3] {
        match order {
            Order::Unigram => [1.0, 0.0, 0.0],
            Order::Bigram => {
                let s = self.unigram + self.bigram;
                if s > 0.0 {
                    [self.unigram / s, self.bigram / s, 0.0]
                } else {
                    [0.0, 1.0, 0.0]
                }
            }
            Order::Trigram => [self.unigram, self.bigram, self.trigram],
        }
    }
}

fn leave_one_out(count: u64, context: u64) -> f64 {
    if context <= 1 {
        0.0
    } else {
        (count as f64 - 1.0) / (context as f64 - 1.0)
    }
}

/// Deleted interpolation: every trigram type votes, with its count, for the
/// order whose leave-one-out estimate is largest (ties go to the higher
/// order); the votes are normalised.
pub fn deleted_interpolation_weights(counts: &CountsTable) -> Result<InterpolationWeights, ModelError> {
    if counts.total() == 0 {
        return Err(ModelError::Empty);
    }
    let n = counts.total();
    let mut votes = [0u64; 3];
    for ((t1, t2, t3), f) in counts.trigrams() {
        let tri = leave_one_out(f, counts.history2(t1, t2));
        let bi = leave_one_out(counts.bigram(t2, t3), counts.history1(t2));
        let uni = leave_one_out(counts.unigram(t3), n);
        let winner = if tri >= bi && tri >= uni {
            2
        } else if bi >= uni {
            1
        } else {
            0
        };
        votes[winner] += f;
    }
    let total: u64 = votes.iter().sum();
    Ok(InterpolationWeights {
        unigram: votes[0] as f64 / total as f64,
        bigram: votes[1] as f64 / total as f64,
        trigram: votes[2] as f64 / total as f64,
    })
}

/// Best path found by [`ChunkModel::viterbi_decode`].
#[derive(Debug, Clone, PartialEq)]
pub struct ViterbiPath {
    pub tags: Vec<TagId>,
    /// Total log probability, including the final boundary transition.
    pub score: f64,
    /// Per position: log transition into the tag plus log emission. The final
    /// boundary transition is not included here.
    pub position_scores: Vec<f64>,
}

/// Candidate tags at one position with their log emission probabilities,
/// sorted by tag id.
pub type Candidates = Vec<(TagId, f64)>;

/// A trained, immutable chunk tagging model.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkModel {
    scheme: EncodingScheme,
    order: Order,
    alphabet: IndexSet<StructuralTag>,
    counts: CountsTable,
    weights: InterpolationWeights,
    pos_alphabet: BTreeSet<String>,
    tags_by_pos: HashMap<String, Vec<TagId>>,
    unk: bool,
    sentences: usize,
    tokens: usize,
}

impl ChunkModel {
    /// Trains on a treebank. With `unk_below = Some(k)`, POS tags seen fewer
    /// than `k` times are replaced by [`UNK_POS`] so that the model can
    /// handle unseen POS tags at tagging time.
    pub fn train(tb: &Treebank, scheme: &EncodingScheme, order: Order, unk_below: Option<u64>) -> Result<Self, ModelError> {
        if tb.is_empty() {
            return Err(ModelError::Empty);
        }
        let rare = unk_below.map(|k| {
            let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
            for t in tb.sentences().iter().flat_map(|s| s.tokens()) {
                *freq.entry(t.pos()).or_default() += 1;
            }
            freq.into_iter()
                .filter(|(_, f)| *f < k)
                .map(|(p, _)| p.to_string())
                .collect::<BTreeSet<_>>()
        });
        let (alphabet, counts) = collect_counts_with(tb, scheme, rare.as_ref())?;
        Self::from_counts(scheme.clone(), order, alphabet, counts, rare.is_some(), tb.len(), tb.token_count())
    }

    /// Seals a model from counts. Tag `i` of `alphabet` has id `i + 1`.
    pub fn from_counts(
        scheme: EncodingScheme,
        order: Order,
        alphabet: IndexSet<StructuralTag>,
        counts: CountsTable,
        unk: bool,
        sentences: usize,
        tokens: usize,
    ) -> Result<Self, ModelError> {
        let weights = deleted_interpolation_weights(&counts)?;
        let mut pos_alphabet = BTreeSet::new();
        for ((_, pos), _) in counts.emissions() {
            pos_alphabet.insert(pos.to_string());
        }
        let mut tags_by_pos: HashMap<String, Vec<TagId>> = HashMap::new();
        for (i, tag) in alphabet.iter().enumerate() {
            if let Some(p) = &tag.pos {
                tags_by_pos.entry(p.clone()).or_default().push(i as TagId + 1);
            }
        }
        Ok(ChunkModel {
            scheme,
            order,
            alphabet,
            counts,
            weights,
            pos_alphabet,
            tags_by_pos,
            unk,
            sentences,
            tokens,
        })
    }

    pub fn scheme(&self) -> &EncodingScheme {
        &self.scheme
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn weights(&self) -> InterpolationWeights {
        self.weights
    }

    pub fn counts(&self) -> &CountsTable {
        &self.counts
    }

    pub fn alphabet(&self) -> &IndexSet<StructuralTag> {
        &self.alphabet
    }

    pub fn tagset_size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn pos_alphabet(&self) -> &BTreeSet<String> {
        &self.pos_alphabet
    }

    pub fn trained_with_unk(&self) -> bool {
        self.unk
    }

    pub fn training_sentences(&self) -> usize {
        self.sentences
    }

    pub fn training_tokens(&self) -> usize {
        self.tokens
    }

    /// Copy of this model with a different order; counts are shared data.
    pub fn with_order(&self, order: Order) -> ChunkModel {
        ChunkModel {
            order,
            ..self.clone()
        }
    }

    pub fn tag(&self, id: TagId) -> Option<&StructuralTag> {
        id.checked_sub(1).and_then(|i| self.alphabet.get_index(i as usize))
    }

    pub fn id_of(&self, tag: &StructuralTag) -> Option<TagId> {
        self.alphabet.get_index_of(tag).map(|i| i as TagId + 1)
    }

    /// Ids of all alphabet tags, ascending.
    pub fn tag_ids(&self) -> impl Iterator<Item = TagId> {
        1..=self.alphabet.len() as TagId
    }

    fn check_id(&self, id: TagId) -> Result<(), ModelError> {
        if id as usize > self.alphabet.len() {
            Err(ModelError::UnknownTag(id))
        } else {
            Ok(())
        }
    }

    /// P(s | s_prev2, s_prev1). Ids may be [`BOUNDARY`]. Estimates whose
    /// history was never observed drop out and the remaining weights are
    /// renormalised, so the distribution over alphabet ∪ {boundary} always
    /// sums to one.
    pub fn transition_prob(&self, prev2: TagId, prev1: TagId, s: TagId) -> Result<f64, ModelError> {
        self.check_id(prev2)?;
        self.check_id(prev1)?;
        self.check_id(s)?;
        Ok(self.transition(prev2, prev1, s))
    }

    fn transition(&self, prev2: TagId, prev1: TagId, s: TagId) -> f64 {
        let c = &self.counts;
        let w = self.weights.truncated(self.order);
        let p1 = Some(c.unigram(s) as f64 / c.total() as f64);
        let p2 = (w[1] > 0.0 || self.order >= Order::Bigram)
            .then(|| c.history1(prev1))
            .filter(|h| *h > 0)
            .map(|h| c.bigram(prev1, s) as f64 / h as f64);
        let p3 = (self.order == Order::Trigram)
            .then(|| c.history2(prev2, prev1))
            .filter(|h| *h > 0)
            .map(|h| c.trigram(prev2, prev1, s) as f64 / h as f64);
        let estimates = [p1, p2, p3];
        let mut num = 0.0;
        let mut wsum = 0.0;
        for (wk, p) in w.iter().zip(estimates) {
            if let Some(p) = p {
                num += wk * p;
                wsum += wk;
            }
        }
        if wsum > 0.0 {
            num / wsum
        } else {
            // Only zero-weight estimates are defined: back off to the highest
            // order one.
            estimates.iter().rev().flatten().next().copied().unwrap_or(0.0)
        }
    }

    fn log_transition(&self, prev2: TagId, prev1: TagId, s: TagId) -> f64 {
        self.transition(prev2, prev1, s).ln()
    }

    /// POS symbol used for lookups: unseen POS tags map to [`UNK_POS`] when the
    /// model was trained with it.
    pub fn model_pos<'a>(&self, pos: &'a str) -> &'a str {
        if self.unk && !self.pos_alphabet.contains(pos) {
            UNK_POS
        } else {
            pos
        }
    }

    /// P(t | s). Degenerate when the scheme carries the POS.
    pub fn emission_prob(&self, s: TagId, pos: &str) -> f64 {
        let Some(tag) = self.tag(s) else { return 0.0 };
        let pos = self.model_pos(pos);
        if let Some(tp) = &tag.pos {
            return if tp == pos { 1.0 } else { 0.0 };
        }
        let vocab = self.pos_alphabet.len() as f64 + if self.pos_alphabet.contains(UNK_POS) { 0.0 } else { 1.0 };
        (self.counts.emission(s, pos) as f64 + EMISSION_SMOOTHING)
            / (self.counts.tag_emissions(s) as f64 + EMISSION_SMOOTHING * vocab)
    }

    /// Tags with non-zero emission for `pos`, with log emission, by id.
    pub fn candidates(&self, pos: &str) -> Candidates {
        if self.scheme.dims.pos {
            self.tags_by_pos
                .get(self.model_pos(pos))
                .map(|ids| ids.iter().map(|&id| (id, 0.0)).collect())
                .unwrap_or_default()
        } else {
            self.tag_ids().map(|id| (id, self.emission_prob(id, pos).ln())).collect()
        }
    }

    /// Uniform emission over the whole alphabet, for positions whose POS the
    /// model cannot handle.
    pub fn uniform_candidates(&self) -> Candidates {
        let lp = -(self.alphabet.len() as f64).ln();
        self.tag_ids().map(|id| (id, lp)).collect()
    }

    /// Exact arg-max tag sequence for a POS sequence, optionally restricted
    /// per position to an allowed set of tag ids.
    pub fn viterbi_decode<S: AsRef<str>>(&self, pos_seq: &[S], constraints: Option<&[Option<Vec<TagId>>]>) -> Result<ViterbiPath, ModelError> {
        if pos_seq.is_empty() {
            return Err(ModelError::EmptyInput);
        }
        if let Some(c) = constraints {
            if c.len() != pos_seq.len() {
                return Err(ModelError::ConstraintLength(c.len(), pos_seq.len()));
            }
        }
        let mut lattice = Vec::with_capacity(pos_seq.len());
        for (i, pos) in pos_seq.iter().enumerate() {
            let mut cands = self.candidates(pos.as_ref());
            if cands.is_empty() {
                return Err(ModelError::UnknownPos {
                    position: i,
                    pos: pos.as_ref().to_string(),
                });
            }
            if let Some(Some(allowed)) = constraints.map(|c| &c[i]) {
                cands.retain(|(id, _)| allowed.contains(id));
                if cands.is_empty() {
                    return Err(ModelError::Infeasible { position: i });
                }
            }
            lattice.push(cands);
        }
        Ok(self.decode_lattice(&lattice))
    }

    /// Viterbi over explicit candidate lists (each non-empty and sorted by
    /// id). Runs in time linear in the sequence length.
    pub fn decode_lattice(&self, lattice: &[Candidates]) -> ViterbiPath {
        assert!(!lattice.is_empty() && lattice.iter().all(|c| !c.is_empty()));
        let boundary: Candidates = vec![(BOUNDARY, 0.0)];
        // delta[a][b]: best score of a prefix ending in (cands[i-1][a], cands[i][b]).
        let first = &lattice[0];
        let mut delta: Vec<Vec<f64>> = vec![first
            .iter()
            .map(|&(s, e)| self.log_transition(BOUNDARY, BOUNDARY, s) + e)
            .collect()];
        let mut back: Vec<Vec<Vec<usize>>> = vec![vec![vec![0; first.len()]]];
        let mut prev_cands: &Candidates = &boundary;
        for i in 1..lattice.len() {
            let (c1, c2) = (&lattice[i - 1], &lattice[i]);
            let mut next = vec![vec![f64::NEG_INFINITY; c2.len()]; c1.len()];
            let mut bp = vec![vec![0usize; c2.len()]; c1.len()];
            for (b, &(s1, _)) in c1.iter().enumerate() {
                for (c, &(s2, e)) in c2.iter().enumerate() {
                    let mut best = f64::NEG_INFINITY;
                    let mut arg = 0;
                    for (a, &(s0, _)) in prev_cands.iter().enumerate() {
                        let v = delta[a][b] + self.log_transition(s0, s1, s2);
                        if v > best {
                            best = v;
                            arg = a;
                        }
                    }
                    next[b][c] = best + e;
                    bp[b][c] = arg;
                }
            }
            delta = next;
            back.push(bp);
            prev_cands = c1;
        }
        let last = lattice.len() - 1;
        let mut best = f64::NEG_INFINITY;
        let mut arg = (0, 0);
        for (a, &(s0, _)) in prev_cands.iter().enumerate() {
            for (b, &(s1, _)) in lattice[last].iter().enumerate() {
                let v = delta[a][b] + self.log_transition(s0, s1, BOUNDARY);
                if v > best || (a, b) == (0, 0) && best == f64::NEG_INFINITY {
                    best = v;
                    arg = (a, b);
                }
            }
        }
        let mut idx = vec![0usize; lattice.len()];
        idx[last] = arg.1;
        let mut a = arg.0;
        for i in (1..lattice.len()).rev() {
            idx[i - 1] = a;
            a = back[i][a][idx[i]];
        }
        let tags: Vec<TagId> = idx.iter().enumerate().map(|(i, &k)| lattice[i][k].0).collect();
        let mut position_scores = Vec::with_capacity(tags.len());
        let (mut h2, mut h1) = (BOUNDARY, BOUNDARY);
        for (i, &t) in tags.iter().enumerate() {
            position_scores.push(self.log_transition(h2, h1, t) + lattice[i][idx[i]].1);
            h2 = h1;
            h1 = t;
        }
        ViterbiPath {
            tags,
            score: best,
            position_scores,
        }
    }

    /// Log probability of a complete tag sequence for a POS sequence, boundary
    /// transitions included.
    pub fn sequence_log_prob<S: AsRef<str>>(&self, tags: &[TagId], pos_seq: &[S]) -> f64 {
        let (mut h2, mut h1) = (BOUNDARY, BOUNDARY);
        let mut total = 0.0;
        for (&t, pos) in tags.iter().zip(pos_seq) {
            total += self.log_transition(h2, h1, t) + self.emission_prob(t, pos.as_ref()).ln();
            h2 = h1;
            h1 = t;
        }
        total + self.log_transition(h2, h1, BOUNDARY)
    }

    /// Serialises to the line-oriented model format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{FORMAT_HEADER}");
        let _ = writeln!(out, "dims {}", self.scheme.dims);
        let _ = writeln!(out, "depth {}", self.scheme.depth.levels());
        let _ = writeln!(out, "order {}", self.order.number());
        let _ = writeln!(out, "unk {}", u8::from(self.unk));
        let f = &self.scheme.flags;
        let _ = writeln!(out, "flag-adjectival {}", f.adjectival.join(" "));
        let _ = writeln!(out, "flag-nominal {}", f.nominal.join(" "));
        let _ = writeln!(out, "flag-coordination {} {}", f.coordination_prefix, f.coordination_label);
        let _ = writeln!(out, "sentences {}", self.sentences);
        let _ = writeln!(out, "tokens {}", self.tokens);
        let _ = writeln!(out, "alphabet {}", self.alphabet.len());
        for (i, tag) in self.alphabet.iter().enumerate() {
            let _ = writeln!(out, "{} {}", i + 1, tag);
        }
        let w = self.weights;
        let _ = writeln!(out, "lambda {} {} {}", w.unigram, w.bigram, w.trigram);
        let _ = writeln!(out, "counts");
        let mut uni: Vec<_> = self.counts.unigrams().collect();
        uni.sort_unstable();
        for (a, n) in uni {
            let _ = writeln!(out, "1 {a} {n}");
        }
        let mut bi: Vec<_> = self.counts.bigrams().collect();
        bi.sort_unstable();
        for ((a, b), n) in bi {
            let _ = writeln!(out, "2 {a} {b} {n}");
        }
        let mut tri: Vec<_> = self.counts.trigrams().collect();
        tri.sort_unstable();
        for ((a, b, c), n) in tri {
            let _ = writeln!(out, "3 {a} {b} {c} {n}");
        }
        let mut em: Vec<_> = self.counts.emissions().collect();
        em.sort_unstable();
        for ((t, p), n) in em {
            let _ = writeln!(out, "E {t} {p} {n}");
        }
        out.push_str("end\n");
        out
    }

    /// Reads the model format. Probabilities and interpolation weights are
    /// recomputed from the counts.
    pub fn from_text(text: &str) -> Result<Self, ModelError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
        let mut next = |what: &str| -> Result<(usize, &str), ModelError> {
            lines.next().ok_or_else(|| format_err(0, format!("unexpected end of file, expected {what}")))
        };
        let (ln, header) = next("header")?;
        if header != FORMAT_HEADER {
            return Err(format_err(ln, format!("expected `{FORMAT_HEADER}`")));
        }
        fn field<'a>((ln, line): (usize, &'a str), key: &str) -> Result<(usize, &'a str), ModelError> {
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix(' ').or(if r.is_empty() { Some("") } else { None }))
                .map(|v| (ln, v))
                .ok_or_else(|| format_err(ln, format!("expected `{key}`")))
        }
        fn number<T: std::str::FromStr>((ln, v): (usize, &str)) -> Result<T, ModelError> {
            v.trim().parse().map_err(|_| format_err(ln, format!("bad number `{v}`")))
        }
        let (ln, dims) = field(next("dims")?, "dims")?;
        let dims: Dims = dims.parse().map_err(|e: EncodeError| format_err(ln, e.to_string()))?;
        let (ln, depth) = field(next("depth")?, "depth")?;
        let depth = number::<usize>((ln, depth))
            .ok()
            .and_then(Depth::from_levels)
            .ok_or_else(|| format_err(ln, "depth must be 2 or 3"))?;
        let (ln, order) = field(next("order")?, "order")?;
        let order = number::<usize>((ln, order))
            .ok()
            .and_then(Order::from_number)
            .ok_or_else(|| format_err(ln, "order must be 1, 2 or 3"))?;
        let unk = number::<u8>(field(next("unk")?, "unk")?)? == 1;
        let (_, adj) = field(next("flag-adjectival")?, "flag-adjectival")?;
        let (_, nom) = field(next("flag-nominal")?, "flag-nominal")?;
        let (ln, coord) = field(next("flag-coordination")?, "flag-coordination")?;
        let (prefix, label) = coord
            .split_once(' ')
            .ok_or_else(|| format_err(ln, "expected `<prefix> <label>`"))?;
        let flags = FlagLabels {
            adjectival: adj.split_whitespace().map(String::from).collect(),
            nominal: nom.split_whitespace().map(String::from).collect(),
            coordination_prefix: prefix.to_string(),
            coordination_label: label.to_string(),
        };
        let sentences = number::<usize>(field(next("sentences")?, "sentences")?)?;
        let tokens = number::<usize>(field(next("tokens")?, "tokens")?)?;
        let n = number::<usize>(field(next("alphabet")?, "alphabet")?)?;
        let mut alphabet = IndexSet::with_capacity(n);
        for i in 0..n {
            let (ln, line) = next("alphabet entry")?;
            let (id, tag) = line.split_once(' ').ok_or_else(|| format_err(ln, "expected `<id> <tag>`"))?;
            if number::<usize>((ln, id))? != i + 1 {
                return Err(format_err(ln, "alphabet ids must be consecutive from 1"));
            }
            let tag = StructuralTag::parse(tag, dims).map_err(|e| format_err(ln, e.to_string()))?;
            if !alphabet.insert(tag) {
                return Err(format_err(ln, "duplicate tag"));
            }
        }
        let (ln, lambda) = field(next("lambda")?, "lambda")?;
        let stored: Vec<f64> = lambda
            .split_whitespace()
            .map(|v| number((ln, v)))
            .collect::<Result<_, _>>()?;
        if stored.len() != 3 {
            return Err(format_err(ln, "expected three weights"));
        }
        let (ln, marker) = next("counts")?;
        if marker != "counts" {
            return Err(format_err(ln, "expected `counts`"));
        }
        let mut counts = CountsTable::default();
        let mut finished = false;
        for (ln, line) in lines.by_ref() {
            if line == "end" {
                finished = true;
                break;
            }
            let parts: Vec<&str> = line.split(' ').collect();
            let check = |id: TagId| {
                if id as usize > n {
                    Err(format_err(ln, format!("tag id {id} out of range")))
                } else {
                    Ok(id)
                }
            };
            match parts.as_slice() {
                ["E", t, pos, c] => {
                    let t = check(number((ln, t))?)?;
                    let c: u64 = number((ln, c))?;
                    counts.emission.insert((t, pos.to_string()), c);
                    *counts.tag_emissions.entry(t).or_default() += c;
                }
                [kind @ ("1" | "2" | "3"), rest @ ..] if rest.len() == kind.parse::<usize>().unwrap() + 1 => {
                    let ids: Vec<TagId> = rest[..rest.len() - 1]
                        .iter()
                        .map(|v| number((ln, v)).and_then(check))
                        .collect::<Result<_, _>>()?;
                    counts.add_raw(kind, &ids, number((ln, rest[rest.len() - 1]))?);
                }
                _ => return Err(format_err(ln, format!("bad count line `{line}`"))),
            }
        }
        if !finished {
            return Err(format_err(0, "missing `end`"));
        }
        let scheme = EncodingScheme { dims, depth, flags };
        let model = ChunkModel::from_counts(scheme, order, alphabet, counts, unk, sentences, tokens)?;
        let w = model.weights;
        if (w.unigram - stored[0]).abs() > 1e-12 || (w.bigram - stored[1]).abs() > 1e-12 || (w.trigram - stored[2]).abs() > 1e-12 {
            return Err(format_err(ln, "stored weights disagree with the counts"));
        }
        Ok(model)
    }
}
