//! Shared test helpers: random small models and a brute-force decoder.

#![allow(dead_code)]

use chunktagger::encoding::{Depth, Dims, EncodingScheme, Relation, StructuralTag};
use chunktagger::model::{ChunkModel, CountsTable, Order, TagId, BOUNDARY};
use indexmap::IndexSet;
use rand::Rng;

/// A model over `k` random tags trained on random sequences. With `with_pos`
/// the tags carry one of `pos_set` (degenerate emission); otherwise they
/// carry only a relation and emission is smoothed.
pub fn random_model<R: Rng>(rng: &mut R, k: usize, pos_set: &[&str], with_pos: bool) -> ChunkModel {
    let mut alphabet = IndexSet::new();
    while alphabet.len() < k {
        let relation = Relation::ALL[rng.gen_range(0..7)];
        let tag = if with_pos {
            StructuralTag {
                pos: Some(pos_set[rng.gen_range(0..pos_set.len())].to_string()),
                ..StructuralTag::relation_only(relation)
            }
        } else {
            StructuralTag::relation_only(relation)
        };
        alphabet.insert(tag);
        if !with_pos && alphabet.len() == 7 {
            break;
        }
    }
    let n = alphabet.len();
    let mut counts = CountsTable::default();
    for _ in 0..rng.gen_range(1..25) {
        let len = rng.gen_range(1..8);
        let seq: Vec<(TagId, String)> = (0..len)
            .map(|_| {
                let id = rng.gen_range(1..=n as TagId);
                let pos = match &alphabet[id as usize - 1].pos {
                    Some(p) => p.clone(),
                    None => pos_set[rng.gen_range(0..pos_set.len())].to_string(),
                };
                (id, pos)
            })
            .collect();
        counts.add_sequence(&seq);
    }
    let dims = if with_pos { Dims::RT } else { Dims::R };
    let order = [Order::Unigram, Order::Bigram, Order::Trigram, Order::Trigram][rng.gen_range(0..4)];
    ChunkModel::from_counts(EncodingScheme::new(dims, Depth::Three), order, alphabet, counts, false, 0, 0).unwrap()
}

/// Dense log tables read through the public probability functions.
pub struct Tables {
    pub n: usize,
    /// `trans[a][b][c]` over ids 0..=n, 0 being the boundary.
    pub trans: Vec<Vec<Vec<f64>>>,
}

impl Tables {
    pub fn new(m: &ChunkModel) -> Self {
        let n = m.tagset_size();
        let mut trans = vec![vec![vec![0.0; n + 1]; n + 1]; n + 1];
        for a in 0..=n {
            for b in 0..=n {
                for c in 0..=n {
                    trans[a][b][c] = m.transition_prob(a as TagId, b as TagId, c as TagId).unwrap().ln();
                }
            }
        }
        Tables { n, trans }
    }
}

/// Best and second-best total log score over every tag sequence, with the
/// arg-max. Sequences with a zero emission are skipped.
pub fn brute_force(m: &ChunkModel, t: &Tables, pos: &[&str]) -> (f64, f64, Vec<TagId>) {
    let emit: Vec<Vec<f64>> = pos
        .iter()
        .map(|p| (0..=t.n).map(|s| if s == 0 { f64::NEG_INFINITY } else { m.emission_prob(s as TagId, p).ln() }).collect())
        .collect();
    let mut best = (f64::NEG_INFINITY, f64::NEG_INFINITY, Vec::new());
    let mut seq = Vec::with_capacity(pos.len());
    fn go(t: &Tables, emit: &[Vec<f64>], seq: &mut Vec<usize>, score: f64, best: &mut (f64, f64, Vec<TagId>)) {
        let i = seq.len();
        let h2 = if i >= 2 { seq[i - 2] } else { 0 };
        let h1 = if i >= 1 { seq[i - 1] } else { 0 };
        if i == emit.len() {
            let total = score + t.trans[h2][h1][BOUNDARY as usize];
            if total > best.0 {
                best.1 = best.0;
                best.0 = total;
                best.2 = seq.iter().map(|&s| s as TagId).collect();
            } else if total > best.1 {
                best.1 = total;
            }
            return;
        }
        for s in 1..=t.n {
            if emit[i][s] == f64::NEG_INFINITY {
                continue;
            }
            seq.push(s);
            go(t, emit, seq, score + t.trans[h2][h1][s] + emit[i][s], best);
            seq.pop();
        }
    }
    go(t, &emit, &mut seq, 0.0, &mut best);
    best
}

/// Every sequence over `symbols` with length 1..=max_len.
pub fn all_sequences<'a>(symbols: &[&'a str], max_len: usize) -> Vec<Vec<&'a str>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<&str>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|prefix| {
                symbols.iter().map(move |s| {
                    let mut v = prefix.clone();
                    v.push(*s);
                    v
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}
