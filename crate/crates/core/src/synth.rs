//! Synthetic data: random encodable trees and a small German-like grammar
//! corpus with controllable attachment ambiguity and rare POS tags.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Node, Phrase, Sentence, Token, Treebank};
use crate::encoding::Depth;

/// Per token, the pre-order ids of its phrase ancestors from the chunk root
/// down to the direct parent.
fn root_paths(s: &Sentence) -> Vec<Vec<usize>> {
    fn go(children: &[Node], path: &mut Vec<usize>, next: &mut usize, out: &mut Vec<Vec<usize>>) {
        for c in children {
            match c {
                Node::Leaf(i) => out[*i] = path.clone(),
                Node::Phrase(p) => {
                    path.push(*next);
                    *next += 1;
                    go(&p.children, path, next, out);
                    path.pop();
                }
            }
        }
    }
    let mut out = vec![Vec::new(); s.len()];
    go(s.forest(), &mut Vec::new(), &mut 0, &mut out);
    out
}

fn every_phrase_has_token(children: &[Node]) -> bool {
    children.iter().all(|c| match c {
        Node::Leaf(_) => true,
        Node::Phrase(p) => p.children.iter().any(|c| matches!(c, Node::Leaf(_))) && every_phrase_has_token(&p.children),
    })
}

/// Whether a tree is exactly representable by structural tags at `depth`:
/// no token lies more than `depth` levels below its chunk root, every phrase
/// has a token as a direct child, and every pair of neighbouring words in one
/// chunk is separated by a transition the relation set can express.
pub fn is_encodable(s: &Sentence, depth: Depth) -> bool {
    let limit = depth.levels();
    let paths = root_paths(s);
    if paths.iter().any(|p| p.len() > limit + 1) || !every_phrase_has_token(s.forest()) {
        return false;
    }
    paths.windows(2).all(|w| {
        let (a, b) = (&w[0], &w[1]);
        if a.is_empty() || b.is_empty() || a[0] != b[0] {
            return true;
        }
        let shared = a.iter().zip(b).take_while(|(x, y)| x == y).count();
        let closed = a.len() - shared;
        let opened = b.len() - shared;
        match depth {
            Depth::Two => matches!((closed, opened), (0, 0) | (1, 0) | (0, 1)),
            Depth::Three => matches!((closed, opened), (0, 0) | (1, 0) | (2, 0) | (0, 1) | (0, 2) | (1, 1)),
        }
    })
}

const RANDOM_LABELS: [&str; 5] = ["NP", "PP", "AP", "MPN", "CNP"];
const RANDOM_POS: [&str; 8] = ["ART", "NN", "NE", "ADJA", "APPR", "ADV", "VVFIN", "KON"];

/// A random sentence of 1 to 14 tokens that [`is_encodable`] at `depth`.
pub fn random_sentence<R: Rng + ?Sized>(rng: &mut R, depth: Depth) -> Sentence {
    let max_levels = depth.levels() + 1;
    loop {
        let mut tokens = Vec::new();
        let mut forest = Vec::new();
        let items = rng.gen_range(1..=5);
        for _ in 0..items {
            if rng.gen_bool(0.35) {
                forest.push(Node::Leaf(push_random_token(rng, &mut tokens)));
            } else {
                forest.push(Node::Phrase(random_phrase(rng, &mut tokens, 1, max_levels)));
            }
        }
        if tokens.len() > 14 {
            continue;
        }
        let s = Sentence::new(tokens, forest).expect("generated tree is well formed");
        if is_encodable(&s, depth) {
            return s;
        }
    }
}

fn push_random_token<R: Rng + ?Sized>(rng: &mut R, tokens: &mut Vec<Token>) -> usize {
    let pos = RANDOM_POS[rng.gen_range(0..RANDOM_POS.len())];
    tokens.push(Token::new(format!("w{}", tokens.len()), pos).expect("valid token"));
    tokens.len() - 1
}

fn random_phrase<R: Rng + ?Sized>(rng: &mut R, tokens: &mut Vec<Token>, level: usize, max_levels: usize) -> Phrase {
    let label = RANDOM_LABELS[rng.gen_range(0..RANDOM_LABELS.len())];
    let n = rng.gen_range(1..=4);
    let anchor = rng.gen_range(0..n);
    let mut children = Vec::with_capacity(n);
    for i in 0..n {
        if i != anchor && level < max_levels && rng.gen_bool(0.4) {
            children.push(Node::Phrase(random_phrase(rng, tokens, level + 1, max_levels)));
        } else {
            children.push(Node::Leaf(push_random_token(rng, tokens)));
        }
    }
    Phrase::new(label, children)
}

/// Parameters of the grammar corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct GrammarConfig {
    pub sentences: usize,
    /// Probability that a noun phrase is followed by a prepositional phrase.
    pub postnominal_rate: f64,
    /// Probability that such a prepositional phrase is attached inside the
    /// noun phrase rather than standing next to it.
    pub postnominal_attach: f64,
    /// Probability that a determiner, adjective or noun slot draws its POS
    /// from a Zipf-distributed inventory of rare tags.
    pub rare_rate: f64,
    /// Size of each rare inventory.
    pub rare_types: usize,
}

impl Default for GrammarConfig {
    fn default() -> Self {
        GrammarConfig {
            sentences: 2000,
            postnominal_rate: 0.3,
            postnominal_attach: 0.5,
            rare_rate: 0.12,
            rare_types: 30,
        }
    }
}

/// Clause-level slots generated by a second-order Markov chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Start,
    Noun,
    Prep,
    Pron,
    Adv,
    Verb,
    Conj,
    End,
}

const SLOTS: [Slot; 7] = [Slot::Noun, Slot::Prep, Slot::Pron, Slot::Adv, Slot::Verb, Slot::Conj, Slot::End];

/// Weights over [`SLOTS`] given the two previous slots. This is the known
/// trigram source behind the clause structure.
fn slot_weights(prev2: Slot, prev1: Slot) -> [f64; 7] {
    use Slot::*;
    match (prev2, prev1) {
        (_, Start) => [0.45, 0.15, 0.3, 0.1, 0.0, 0.0, 0.0],
        (Start, Verb) | (Conj, Verb) => [0.35, 0.15, 0.3, 0.15, 0.0, 0.0, 0.05],
        (_, Verb) => [0.3, 0.3, 0.05, 0.1, 0.0, 0.05, 0.2],
        (Start, _) | (Conj, _) => [0.05, 0.05, 0.0, 0.05, 0.85, 0.0, 0.0],
        (_, Conj) => [0.5, 0.1, 0.3, 0.1, 0.0, 0.0, 0.0],
        (Verb, _) => [0.2, 0.25, 0.05, 0.1, 0.15, 0.05, 0.2],
        _ => [0.15, 0.15, 0.0, 0.05, 0.3, 0.05, 0.3],
    }
}

struct Builder<'a, R: Rng> {
    rng: &'a mut R,
    config: &'a GrammarConfig,
    tokens: Vec<Token>,
    zipf: WeightedIndex<f64>,
}

const ARTICLES: [&str; 6] = ["der", "die", "das", "ein", "eine", "den"];
const NOUNS: [&str; 8] = ["Mann", "Haus", "Stadt", "Maler", "Frau", "Buch", "Weg", "Zeit"];
const NAMES: [&str; 6] = ["Tel", "Aviv", "Anna", "Berlin", "Karl", "Rom"];
const ADJECTIVES: [&str; 6] = ["alte", "neue", "lebender", "grosse", "kleine", "gute"];
const ADVERBS: [&str; 5] = ["sehr", "nur", "auch", "oft", "hier"];
const PREPOSITIONS: [&str; 6] = ["in", "mit", "auf", "von", "aus", "nach"];
const VERBS: [(&str, &str); 4] = [("sieht", "VVFIN"), ("hat", "VAFIN"), ("kann", "VMFIN"), ("gesehen", "VVPP")];
const PRONOUNS: [&str; 4] = ["er", "sie", "wir", "es"];

impl<'a, R: Rng> Builder<'a, R> {
    fn token(&mut self, form: &str, pos: &str) -> Node {
        self.tokens.push(Token::new(form, pos).expect("valid token"));
        Node::Leaf(self.tokens.len() - 1)
    }

    fn pick<'b>(&mut self, words: &[&'b str]) -> &'b str {
        words[self.rng.gen_range(0..words.len())]
    }

    /// A POS from the rare inventory of `family`, or `common`.
    fn pos(&mut self, family: &str, common: &str) -> String {
        if self.rng.gen_bool(self.config.rare_rate) {
            format!("{family}{}", self.zipf.sample(self.rng) + 1)
        } else {
            common.to_string()
        }
    }

    fn determiner(&mut self) -> Node {
        let form = self.pick(&ARTICLES);
        let pos = self.pos("DET", "ART");
        self.token(form, &pos)
    }

    fn noun(&mut self) -> Node {
        let form = self.pick(&NOUNS);
        let pos = self.pos("NOUN", "NN");
        self.token(form, &pos)
    }

    fn adjective(&mut self) -> Node {
        let form = self.pick(&ADJECTIVES);
        let pos = self.pos("ADJ", "ADJA");
        self.token(form, &pos)
    }

    fn name(&mut self) -> Vec<Node> {
        let first = self.pick(&NAMES);
        let first = self.token(first, "NE");
        if self.rng.gen_bool(0.4) {
            let second = self.pick(&NAMES);
            let second = self.token(second, "NE");
            vec![Node::Phrase(Phrase::new("MPN", vec![first, second]))]
        } else {
            vec![first]
        }
    }

    /// Prenominal modifier: a bare adjective or an adjective phrase. With
    /// `deep`, the phrase may carry a prepositional complement.
    fn modifier(&mut self, deep: bool) -> Node {
        let r: f64 = self.rng.gen();
        if r < 0.5 {
            self.adjective()
        } else if r < 0.75 || !deep {
            let adv = self.pick(&ADVERBS);
            let adv = self.token(adv, "ADV");
            let adj = self.adjective();
            Node::Phrase(Phrase::new("AP", vec![adv, adj]))
        } else {
            let pp = self.simple_pp();
            let adj = self.adjective();
            Node::Phrase(Phrase::new("AP", vec![pp, adj]))
        }
    }

    /// A prepositional phrase with a name or a bare noun, used inside
    /// adjective phrases.
    fn simple_pp(&mut self) -> Node {
        let prep = self.pick(&PREPOSITIONS);
        let mut children = vec![self.token(prep, "APPR")];
        if self.rng.gen_bool(0.5) {
            children.extend(self.name());
        } else {
            children.push(self.noun());
        }
        Node::Phrase(Phrase::new("PP", children))
    }

    /// Material of a nominal group: optional determiner, modifiers, noun.
    fn nominal(&mut self, deep: bool) -> Vec<Node> {
        let mut children = Vec::new();
        if self.rng.gen_bool(0.8) {
            children.push(self.determiner());
        }
        let mods = if self.rng.gen_bool(0.45) { 1 + usize::from(self.rng.gen_bool(0.3)) } else { 0 };
        for i in 0..mods {
            // an adjective phrase followed by one opening two levels is not expressible
            children.push(self.modifier(deep && i == 0));
        }
        children.push(self.noun());
        children
    }

    /// A postnominal prepositional phrase: flat, no further nesting.
    fn postnominal_pp(&mut self) -> Phrase {
        let prep = self.pick(&PREPOSITIONS);
        let mut children = vec![self.token(prep, "APPR")];
        if self.rng.gen_bool(0.3) {
            children.extend(self.name());
        } else {
            children.extend(self.nominal(false));
        }
        Phrase::new("PP", children)
    }

    /// A noun phrase slot, returning one or two top-level items.
    fn noun_slot(&mut self) -> Vec<Node> {
        let r: f64 = self.rng.gen();
        if r < 0.12 {
            let names = self.name();
            return names
                .into_iter()
                .map(|n| match n {
                    Node::Leaf(_) => Node::Phrase(Phrase::new("NP", vec![n])),
                    other => other,
                })
                .collect();
        }
        if r < 0.2 {
            let a = Phrase::new("NP", self.nominal(false));
            let kon = self.token("und", "KON");
            let b = Phrase::new("NP", self.nominal(false));
            return vec![Node::Phrase(Phrase::new("CNP", vec![Node::Phrase(a), kon, Node::Phrase(b)]))];
        }
        let mut np = self.nominal(true);
        if self.rng.gen_bool(self.config.postnominal_rate) {
            let pp = self.postnominal_pp();
            if self.rng.gen_bool(self.config.postnominal_attach) {
                np.push(Node::Phrase(pp));
                vec![Node::Phrase(Phrase::new("NP", np))]
            } else {
                vec![Node::Phrase(Phrase::new("NP", np)), Node::Phrase(pp)]
            }
        } else {
            vec![Node::Phrase(Phrase::new("NP", np))]
        }
    }

    fn prep_slot(&mut self) -> Node {
        let r: f64 = self.rng.gen();
        if r < 0.15 {
            let appr = self.token("im", "APPRART");
            let noun = self.noun();
            return Node::Phrase(Phrase::new("PP", vec![appr, noun]));
        }
        let prep = self.pick(&PREPOSITIONS);
        let mut children = vec![self.token(prep, "APPR")];
        if r < 0.3 {
            children.extend(self.name());
        } else {
            children.extend(self.nominal(true));
        }
        Node::Phrase(Phrase::new("PP", children))
    }

    fn sentence(&mut self) -> Sentence {
        self.tokens.clear();
        let mut forest = Vec::new();
        let (mut p2, mut p1) = (Slot::Start, Slot::Start);
        for _ in 0..12 {
            let w = WeightedIndex::new(slot_weights(p2, p1)).expect("positive weights");
            let slot = SLOTS[w.sample(self.rng)];
            match slot {
                Slot::Noun => forest.extend(self.noun_slot()),
                Slot::Prep => forest.push(self.prep_slot()),
                Slot::Pron => {
                    let form = self.pick(&PRONOUNS);
                    forest.push(self.token(form, "PPER"));
                }
                Slot::Adv => {
                    let form = self.pick(&ADVERBS);
                    forest.push(self.token(form, "ADV"));
                }
                Slot::Verb => {
                    let (form, pos) = VERBS[self.rng.gen_range(0..VERBS.len())];
                    forest.push(self.token(form, pos));
                }
                Slot::Conj => {
                    let comma = self.token(",", "$,");
                    forest.push(comma);
                    forest.push(self.token("und", "KON"));
                }
                Slot::End | Slot::Start => break,
            }
            (p2, p1) = (p1, slot);
        }
        forest.push(self.token(".", "$."));
        Sentence::new(std::mem::take(&mut self.tokens), forest).expect("generated tree is well formed")
    }
}

/// Generates a treebank from the grammar, deterministically for a seed.
/// Every sentence is encodable at depth 3.
pub fn grammar_corpus(config: &GrammarConfig, seed: u64) -> Treebank {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zipf = WeightedIndex::new((1..=config.rare_types.max(1)).map(|k| 1.0 / k as f64)).expect("positive weights");
    let mut b = Builder {
        rng: &mut rng,
        config,
        tokens: Vec::new(),
        zipf,
    };
    let sentences = (0..config.sentences).map(|_| b.sentence()).collect();
    Treebank::new(sentences)
}
