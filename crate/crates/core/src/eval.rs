//! Scoring predicted against gold trees, cross-validation and learning curves.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::chunker::{prepare_treebank, BoundarySpec, ChunkError, Chunker, ChunkerConfig, Mode};
use crate::corpus::{Node, Phrase, Sentence, Treebank};
use crate::encoding::{normalize, relation_at, Depth, Relation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("gold has {gold} sentences, prediction {predicted}")]
    LengthMismatch { gold: usize, predicted: usize },
    #[error("sentence {0}: token sequences differ")]
    Misaligned(usize),
    #[error("need at least {need} sentences, have {have}")]
    TooFewSentences { need: usize, have: usize },
    #[error("training size {size} exceeds the {available} sentences available")]
    SizeTooLarge { size: usize, available: usize },
    #[error(transparent)]
    Chunk(#[from] ChunkError),
}

/// Raw counts behind an [`EvalReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalCounts {
    pub sentences: usize,
    pub tags_correct: usize,
    pub tags_total: usize,
    pub brackets_matched: usize,
    pub labelled_matched: usize,
    pub brackets_predicted: usize,
    pub brackets_gold: usize,
    pub chunks_matched: usize,
    pub chunk_boundaries_matched: usize,
    pub chunks_predicted: usize,
    pub chunks_gold: usize,
}

impl EvalCounts {
    fn add(&mut self, o: &EvalCounts) {
        self.sentences += o.sentences;
        self.tags_correct += o.tags_correct;
        self.tags_total += o.tags_total;
        self.brackets_matched += o.brackets_matched;
        self.labelled_matched += o.labelled_matched;
        self.brackets_predicted += o.brackets_predicted;
        self.brackets_gold += o.brackets_gold;
        self.chunks_matched += o.chunks_matched;
        self.chunk_boundaries_matched += o.chunk_boundaries_matched;
        self.chunks_predicted += o.chunks_predicted;
        self.chunks_gold += o.chunks_gold;
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision and recall figures. An empty denominator scores 1.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalReport {
    /// Share of words whose structural relation is right.
    pub tag_accuracy: f64,
    pub bracketing_precision: f64,
    pub bracketing_recall: f64,
    pub labelled_precision: f64,
    pub labelled_recall: f64,
    /// Top-level chunks whose whole subtree, labels included, is right.
    pub top_level_precision: f64,
    pub top_level_recall: f64,
    /// Share of gold top-level chunks whose outer span was found.
    pub boundary_accuracy: f64,
    pub repair_count: usize,
    pub counts: EvalCounts,
}

impl EvalReport {
    pub fn from_counts(counts: EvalCounts, repair_count: usize) -> Self {
        let c = &counts;
        EvalReport {
            tag_accuracy: ratio(c.tags_correct, c.tags_total),
            bracketing_precision: ratio(c.brackets_matched, c.brackets_predicted),
            bracketing_recall: ratio(c.brackets_matched, c.brackets_gold),
            labelled_precision: ratio(c.labelled_matched, c.brackets_predicted),
            labelled_recall: ratio(c.labelled_matched, c.brackets_gold),
            top_level_precision: ratio(c.chunks_matched, c.chunks_predicted),
            top_level_recall: ratio(c.chunks_matched, c.chunks_gold),
            boundary_accuracy: ratio(c.chunk_boundaries_matched, c.chunks_gold),
            repair_count,
            counts,
        }
    }

    fn values(&self) -> [f64; 8] {
        [
            self.tag_accuracy,
            self.bracketing_precision,
            self.bracketing_recall,
            self.labelled_precision,
            self.labelled_recall,
            self.top_level_precision,
            self.top_level_recall,
            self.boundary_accuracy,
        ]
    }

    const NAMES: [(&'static str, &'static str); 8] = [
        ("tag_accuracy", "structural tags"),
        ("bracketing_precision", "bracketing precision"),
        ("bracketing_recall", "bracketing recall"),
        ("labelled_precision", "labelled bracketing precision"),
        ("labelled_recall", "labelled bracketing recall"),
        ("top_level_precision", "top-level chunk precision"),
        ("top_level_recall", "top-level chunk recall"),
        ("boundary_accuracy", "chunk boundaries"),
    ];

    /// Unweighted mean of the figures; counts and repairs are summed.
    pub fn mean(reports: &[EvalReport]) -> EvalReport {
        let n = reports.len().max(1) as f64;
        let mut sums = [0.0; 8];
        let mut counts = EvalCounts::default();
        let mut repairs = 0;
        for r in reports {
            for (s, v) in sums.iter_mut().zip(r.values()) {
                *s += v;
            }
            counts.add(&r.counts);
            repairs += r.repair_count;
        }
        let m = sums.map(|s| s / n);
        EvalReport {
            tag_accuracy: m[0],
            bracketing_precision: m[1],
            bracketing_recall: m[2],
            labelled_precision: m[3],
            labelled_recall: m[4],
            top_level_precision: m[5],
            top_level_recall: m[6],
            boundary_accuracy: m[7],
            repair_count: repairs,
            counts,
        }
    }

    /// Aligned plain-text table.
    pub fn render_table(&self) -> String {
        let c = &self.counts;
        let raw = [
            (c.tags_correct, c.tags_total),
            (c.brackets_matched, c.brackets_predicted),
            (c.brackets_matched, c.brackets_gold),
            (c.labelled_matched, c.brackets_predicted),
            (c.labelled_matched, c.brackets_gold),
            (c.chunks_matched, c.chunks_predicted),
            (c.chunks_matched, c.chunks_gold),
            (c.chunk_boundaries_matched, c.chunks_gold),
        ];
        let mut out = format!("{:<30} {:>8} {:>15}\n", "measure", "percent", "correct/total");
        for (((_, name), v), (a, b)) in Self::NAMES.iter().zip(self.values()).zip(raw) {
            let _ = writeln!(out, "{:<30} {:>7.2}% {:>15}", name, 100.0 * v, format!("{a}/{b}"));
        }
        let _ = writeln!(out, "{:<30} {:>8}", "repairs", self.repair_count);
        out
    }

    /// One `key=value` line per figure.
    pub fn render_key_values(&self) -> String {
        let mut out = String::new();
        for ((key, _), v) in Self::NAMES.iter().zip(self.values()) {
            let _ = writeln!(out, "{key}={v:.6}");
        }
        let _ = writeln!(out, "repair_count={}", self.repair_count);
        let _ = writeln!(out, "sentences={}", self.counts.sentences);
        out
    }
}

fn collect_spans(children: &[Node], out: &mut Vec<(Range<usize>, String)>) {
    for c in children {
        if let Node::Phrase(p) = c {
            out.push((p.span(), p.label.clone()));
            collect_spans(&p.children, out);
        }
    }
}

fn multiset_overlap<K: std::hash::Hash + Eq>(gold: Vec<K>, predicted: Vec<K>) -> usize {
    let mut counts: HashMap<K, usize> = HashMap::new();
    for k in gold {
        *counts.entry(k).or_default() += 1;
    }
    let mut matched = 0;
    for k in predicted {
        if let Some(n) = counts.get_mut(&k) {
            if *n > 0 {
                *n -= 1;
                matched += 1;
            }
        }
    }
    matched
}

fn relations(s: &Sentence) -> Vec<Relation> {
    (0..s.len())
        .map(|i| if i == 0 { Relation::One } else { relation_at(s, i).expect("index in range") })
        .collect()
}

fn top_level(s: &Sentence) -> Vec<&Phrase> {
    s.forest()
        .iter()
        .filter_map(|n| match n {
            Node::Phrase(p) => Some(p),
            Node::Leaf(_) => None,
        })
        .collect()
}

/// Counts for one aligned sentence pair.
pub fn score_sentence(gold: &Sentence, predicted: &Sentence) -> EvalCounts {
    let rg = relations(gold);
    let rp = relations(predicted);
    let mut g = Vec::new();
    let mut p = Vec::new();
    collect_spans(gold.forest(), &mut g);
    collect_spans(predicted.forest(), &mut p);
    let unlabelled = multiset_overlap(g.iter().map(|(s, _)| (s.start, s.end)).collect(), p.iter().map(|(s, _)| (s.start, s.end)).collect());
    let (brackets_gold, brackets_predicted) = (g.len(), p.len());
    let labelled = multiset_overlap(g, p);
    let gc = top_level(gold);
    let pc = top_level(predicted);
    let chunks_matched = pc.iter().filter(|c| gc.contains(c)).count();
    let chunk_boundaries_matched = gc.iter().filter(|c| pc.iter().any(|d| d.span() == c.span())).count();
    EvalCounts {
        sentences: 1,
        tags_correct: rg.iter().zip(&rp).filter(|(a, b)| a == b).count(),
        tags_total: rg.len(),
        brackets_matched: unlabelled,
        labelled_matched: labelled,
        brackets_predicted,
        brackets_gold,
        chunks_matched,
        chunk_boundaries_matched,
        chunks_predicted: pc.len(),
        chunks_gold: gc.len(),
    }
}

/// Micro-averaged scores of aligned treebanks.
pub fn score(gold: &Treebank, predicted: &Treebank) -> Result<EvalReport, EvalError> {
    if gold.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            predicted: predicted.len(),
        });
    }
    let mut counts = EvalCounts::default();
    for (i, (g, p)) in gold.sentences().iter().zip(predicted.sentences()).enumerate() {
        if g.tokens() != p.tokens() {
            return Err(EvalError::Misaligned(i));
        }
        counts.add(&score_sentence(g, p));
    }
    Ok(EvalReport::from_counts(counts, 0))
}

/// Gold trees in the form the configured chunker is able to produce.
pub fn prepare_gold(tb: &Treebank, config: &ChunkerConfig) -> Treebank {
    let stripped = prepare_treebank(tb, config);
    match config.scheme.depth {
        Depth::Two => stripped.with_sentences(stripped.sentences().iter().map(|s| normalize(s, Depth::Two)).collect()),
        Depth::Three => stripped,
    }
}

/// Tags every sentence of `test` (with gold chunk spans in interactive mode)
/// and scores the output against the prepared gold.
pub fn evaluate(chunker: &Chunker, test: &Treebank) -> Result<EvalReport, EvalError> {
    let gold = prepare_gold(test, chunker.config());
    let mut predicted = Vec::with_capacity(gold.len());
    let mut repairs = 0;
    for s in gold.sentences() {
        let tagged = match chunker.config().mode {
            Mode::Interactive => chunker.tag_interactive(s.tokens(), &BoundarySpec::new(s.chunk_spans(), s.len())?)?,
            Mode::Standalone => chunker.tag_standalone(s.tokens())?,
        };
        repairs += tagged.repairs;
        predicted.push(tagged.sentence);
    }
    let mut report = score(&gold, &gold.with_sentences(predicted))?;
    report.repair_count = repairs;
    Ok(report)
}

fn shuffled(tb: &Treebank, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..tb.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

fn subset(tb: &Treebank, idx: &[usize]) -> Treebank {
    tb.with_sentences(idx.iter().map(|&i| tb.sentences()[i].clone()).collect())
}

/// Result of [`cross_validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    pub seed: u64,
    pub folds: Vec<EvalReport>,
    pub mean: EvalReport,
}

/// Shuffles with `seed`, cuts the treebank into `folds` contiguous parts and
/// trains on all but one part in turn. Folds run in parallel; the result does
/// not depend on scheduling.
pub fn cross_validate(tb: &Treebank, config: &ChunkerConfig, folds: usize, seed: u64) -> Result<CrossValidation, EvalError> {
    let folds = folds.max(2);
    if tb.len() < folds {
        return Err(EvalError::TooFewSentences { need: folds, have: tb.len() });
    }
    let order = shuffled(tb, seed);
    let n = order.len();
    let reports: Vec<EvalReport> = (0..folds)
        .into_par_iter()
        .map(|k| {
            let (lo, hi) = (k * n / folds, (k + 1) * n / folds);
            let test = subset(tb, &order[lo..hi]);
            let train_idx: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
            let chunker = Chunker::train(&subset(tb, &train_idx), config.clone())?;
            evaluate(&chunker, &test)
        })
        .collect::<Result<_, _>>()?;
    Ok(CrossValidation {
        seed,
        mean: EvalReport::mean(&reports),
        folds: reports,
    })
}

/// Held-out scores for growing training sets.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub seed: u64,
    pub points: Vec<(usize, EvalReport)>,
}

impl LearningCurve {
    /// `size precision` lines with top-level chunk precision in percent.
    pub fn render(&self) -> String {
        let mut out = String::from("# sentences top_level_precision\n");
        for (size, r) in &self.points {
            let _ = writeln!(out, "{size} {:.4}", 100.0 * r.top_level_precision);
        }
        out
    }
}

/// Shuffles with `seed`, holds out the first tenth as the test set and, for
/// each size, trains on that many sentences from the front of the rest.
pub fn learning_curve(tb: &Treebank, config: &ChunkerConfig, sizes: &[usize], seed: u64) -> Result<LearningCurve, EvalError> {
    if tb.len() < 10 {
        return Err(EvalError::TooFewSentences { need: 10, have: tb.len() });
    }
    let order = shuffled(tb, seed);
    let n_test = tb.len().div_ceil(10);
    let (test_idx, pool) = order.split_at(n_test);
    if let Some(&size) = sizes.iter().find(|&&s| s > pool.len() || s == 0) {
        return Err(EvalError::SizeTooLarge {
            size,
            available: pool.len(),
        });
    }
    let test = subset(tb, test_idx);
    let points = sizes
        .par_iter()
        .map(|&size| {
            let chunker = Chunker::train(&subset(tb, &pool[..size]), config.clone())?;
            Ok((size, evaluate(&chunker, &test)?))
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(LearningCurve { seed, points })
}
