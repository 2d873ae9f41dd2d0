//! Codec between depth-limited trees and per-word structural tags.
//!
//! The relation of word `i` to word `i-1` is read off their parent chains:
//!
//! | tag  | condition                      |
//! |------|--------------------------------|
//! | `0`  | parent(wᵢ) = parent(wᵢ₋₁)      |
//! | `+`  | parent(wᵢ) = parent²(wᵢ₋₁)     |
//! | `++` | parent(wᵢ) = parent³(wᵢ₋₁)     |
//! | `-`  | parent²(wᵢ) = parent(wᵢ₋₁)     |
//! | `--` | parent³(wᵢ) = parent(wᵢ₋₁)     |
//! | `=`  | parent²(wᵢ) = parent²(wᵢ₋₁)    |
//! | `1`  | otherwise                      |
//!
//! The first matching row wins. Parent chains stop at the top-level chunk, so
//! adjacent chunks are always separated by `1`.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexSet;
use thiserror::Error;

use crate::corpus::{Node, Phrase, Sentence, Token, Treebank};

/// Label given to decoded phrases when no category evidence is available.
pub const UNKNOWN_LABEL: &str = "X";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("word index {index} out of range for a sentence of {len} words")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("structure depth {depth} exceeds the scheme limit of {max}")]
    DepthOverflow { depth: usize, max: usize },
    #[error("{tokens} tokens but {tags} tags")]
    LengthMismatch { tokens: usize, tags: usize },
    #[error("cannot parse tag `{0}`")]
    BadTag(String),
    #[error("cannot parse encoding scheme `{0}`")]
    BadScheme(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Zero,
    Plus,
    PlusPlus,
    Minus,
    MinusMinus,
    Equal,
    One,
}

impl Relation {
    /// All values, in tie-break order.
    pub const ALL: [Relation; 7] = [
        Relation::Zero,
        Relation::Plus,
        Relation::PlusPlus,
        Relation::Minus,
        Relation::MinusMinus,
        Relation::Equal,
        Relation::One,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Zero => "0",
            Relation::Plus => "+",
            Relation::PlusPlus => "++",
            Relation::Minus => "-",
            Relation::MinusMinus => "--",
            Relation::Equal => "=",
            Relation::One => "1",
        }
    }

    pub fn is_legal(self, depth: Depth) -> bool {
        match depth {
            Depth::Three => true,
            Depth::Two => matches!(self, Relation::Zero | Relation::Plus | Relation::Minus | Relation::One),
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Relation {
    type Err = EncodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Relation::ALL
            .into_iter()
            .find(|r| r.symbol() == s)
            .ok_or_else(|| EncodeError::BadTag(s.to_string()))
    }
}

/// Digest of the grandparent's category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GrandparentFlag {
    /// An adjectival phrase.
    Ap,
    /// A noun or prepositional phrase.
    NpPp,
    /// A coordinated constituent.
    Coordinated,
    /// Anything else, including "no grandparent".
    Other,
}

impl GrandparentFlag {
    pub fn symbol(self) -> &'static str {
        match self {
            GrandparentFlag::Ap => "A",
            GrandparentFlag::NpPp => "N",
            GrandparentFlag::Coordinated => "C",
            GrandparentFlag::Other => "_",
        }
    }
}

impl FromStr for GrandparentFlag {
    type Err = EncodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "A" => GrandparentFlag::Ap,
            "N" => GrandparentFlag::NpPp,
            "C" => GrandparentFlag::Coordinated,
            "_" => GrandparentFlag::Other,
            _ => return Err(EncodeError::BadTag(s.to_string())),
        })
    }
}

/// Category of the phrase immediately dominating a word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    /// The word is not inside any phrase.
    Outside,
    Label(String),
}

impl Category {
    pub fn as_str(&self) -> &str {
        match self {
            Category::Outside => "_",
            Category::Label(l) => l,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StructuralTag {
    pub relation: Relation,
    pub pos: Option<String>,
    pub category: Option<Category>,
    pub grandparent: Option<GrandparentFlag>,
}

impl StructuralTag {
    pub fn relation_only(relation: Relation) -> Self {
        StructuralTag {
            relation,
            pos: None,
            category: None,
            grandparent: None,
        }
    }

    /// Parses the `r|t|c|g` rendering; only the fields in `dims` are expected.
    pub fn parse(s: &str, dims: Dims) -> Result<Self, EncodeError> {
        let bad = || EncodeError::BadTag(s.to_string());
        let mut parts = s.split('|');
        let relation = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let pos = if dims.pos {
            Some(parts.next().filter(|p| !p.is_empty()).ok_or_else(bad)?.to_string())
        } else {
            None
        };
        let category = if dims.category {
            Some(match parts.next().ok_or_else(bad)? {
                "" => return Err(bad()),
                "_" => Category::Outside,
                l => Category::Label(l.to_string()),
            })
        } else {
            None
        };
        let grandparent = if dims.grandparent {
            Some(parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?)
        } else {
            None
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(StructuralTag {
            relation,
            pos,
            category,
            grandparent,
        })
    }
}

impl fmt::Display for StructuralTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.relation.symbol())?;
        if let Some(p) = &self.pos {
            write!(f, "|{p}")?;
        }
        if let Some(c) = &self.category {
            write!(f, "|{}", c.as_str())?;
        }
        if let Some(g) = self.grandparent {
            write!(f, "|{}", g.symbol())?;
        }
        Ok(())
    }
}

/// Which optional dimensions a tag carries. The relation is always present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Dims {
    pub pos: bool,
    pub category: bool,
    pub grandparent: bool,
}

impl Dims {
    pub const R: Dims = Dims { pos: false, category: false, grandparent: false };
    pub const RT: Dims = Dims { pos: true, category: false, grandparent: false };
    pub const RCG: Dims = Dims { pos: false, category: true, grandparent: true };
    pub const RTC: Dims = Dims { pos: true, category: true, grandparent: false };
    pub const RTCG: Dims = Dims { pos: true, category: true, grandparent: true };
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("r")?;
        if self.pos {
            f.write_str("t")?;
        }
        if self.category {
            f.write_str("c")?;
        }
        if self.grandparent {
            f.write_str("g")?;
        }
        Ok(())
    }
}

impl FromStr for Dims {
    type Err = EncodeError;

    /// Accepts `rtcg` or `r,t,c,g` style lists.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EncodeError::BadScheme(s.to_string());
        let mut dims = Dims::default();
        let mut has_r = false;
        for c in s.chars().filter(|c| *c != ',' && !c.is_whitespace()) {
            let slot = match c {
                'r' => &mut has_r,
                't' => &mut dims.pos,
                'c' => &mut dims.category,
                'g' => &mut dims.grandparent,
                _ => return Err(bad()),
            };
            if *slot {
                return Err(bad());
            }
            *slot = true;
        }
        if !has_r || (dims.grandparent && !dims.category) {
            return Err(bad());
        }
        Ok(dims)
    }
}

/// Relation inventory: depth 3 uses all seven values, depth 2 only `1 0 + -`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Depth {
    Two,
    #[default]
    Three,
}

impl Depth {
    /// Levels allowed below a chunk root.
    pub fn levels(self) -> usize {
        match self {
            Depth::Two => 2,
            Depth::Three => 3,
        }
    }

    pub fn from_levels(levels: usize) -> Option<Depth> {
        match levels {
            2 => Some(Depth::Two),
            3 => Some(Depth::Three),
            _ => None,
        }
    }
}

/// Category tests behind the grandparent flags.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlagLabels {
    pub adjectival: Vec<String>,
    pub nominal: Vec<String>,
    /// Labels starting with this prefix count as coordinated.
    pub coordination_prefix: String,
    /// Label used when decoding a `C` flag into a category.
    pub coordination_label: String,
}

impl Default for FlagLabels {
    fn default() -> Self {
        FlagLabels {
            adjectival: vec!["AP".into()],
            nominal: vec!["NP".into(), "PP".into()],
            coordination_prefix: "C".into(),
            coordination_label: "CNP".into(),
        }
    }
}

impl FlagLabels {
    pub fn flag_for(&self, label: &str) -> GrandparentFlag {
        if self.adjectival.iter().any(|l| l == label) {
            GrandparentFlag::Ap
        } else if self.nominal.iter().any(|l| l == label) {
            GrandparentFlag::NpPp
        } else if !self.coordination_prefix.is_empty() && label.starts_with(&self.coordination_prefix) {
            GrandparentFlag::Coordinated
        } else {
            GrandparentFlag::Other
        }
    }

    fn label_for(&self, flag: GrandparentFlag) -> Option<&str> {
        match flag {
            GrandparentFlag::Ap => self.adjectival.first().map(String::as_str),
            GrandparentFlag::NpPp => self.nominal.first().map(String::as_str),
            GrandparentFlag::Coordinated => Some(&self.coordination_label),
            GrandparentFlag::Other => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct EncodingScheme {
    pub dims: Dims,
    pub depth: Depth,
    pub flags: FlagLabels,
}

impl EncodingScheme {
    pub fn new(dims: Dims, depth: Depth) -> Self {
        EncodingScheme {
            dims,
            depth,
            flags: FlagLabels::default(),
        }
    }
}

impl FromStr for EncodingScheme {
    type Err = EncodeError;

    /// Dimension list, depth 3.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(EncodingScheme::new(s.parse()?, Depth::Three))
    }
}

fn condition_holds(rel: Relation, prev: &[usize], cur: &[usize]) -> bool {
    // parentᵏ(w) is chain[k-1]; a missing entry never matches.
    let eq = |a: Option<&usize>, b: Option<&usize>| matches!((a, b), (Some(x), Some(y)) if x == y);
    match rel {
        Relation::Zero => eq(cur.first(), prev.first()),
        Relation::Plus => eq(cur.first(), prev.get(1)),
        Relation::PlusPlus => eq(cur.first(), prev.get(2)),
        Relation::Minus => eq(cur.get(1), prev.first()),
        Relation::MinusMinus => eq(cur.get(2), prev.first()),
        Relation::Equal => eq(cur.get(1), prev.get(1)),
        Relation::One => true,
    }
}

fn relation_between(prev: &[usize], cur: &[usize]) -> Relation {
    Relation::ALL
        .into_iter()
        .find(|&r| condition_holds(r, prev, cur))
        .unwrap_or(Relation::One)
}

/// Structural relation between word `i` and word `i - 1`, for `1 <= i < n`.
pub fn relation_at(sentence: &Sentence, i: usize) -> Result<Relation, EncodeError> {
    if i == 0 || i >= sentence.len() {
        return Err(EncodeError::IndexOutOfRange {
            index: i,
            len: sentence.len(),
        });
    }
    let sk = sentence.skeleton();
    Ok(relation_between(&sk.ancestors(i - 1), &sk.ancestors(i)))
}

/// Levels closed after `prev` and opened before `cur` below their lowest
/// common phrase, or `None` when they share no phrase.
fn transition(prev: &[usize], cur: &[usize]) -> Option<(usize, usize)> {
    prev.iter()
        .position(|a| cur.contains(a))
        .map(|k| (k, cur.iter().position(|b| *b == prev[k]).unwrap()))
}

fn transition_legal(depth: Depth, closed: usize, opened: usize) -> bool {
    match depth {
        Depth::Two => matches!((closed, opened), (0, 0) | (1, 0) | (0, 1)),
        Depth::Three => matches!((closed, opened), (0, 0) | (1, 0) | (2, 0) | (0, 1) | (0, 2) | (1, 1)),
    }
}

fn splice(forest: &[Node], target: usize) -> Vec<Node> {
    fn go(children: &[Node], target: usize, counter: &mut usize, out: &mut Vec<Node>) {
        for c in children {
            match c {
                Node::Leaf(i) => out.push(Node::Leaf(*i)),
                Node::Phrase(p) => {
                    let id = *counter;
                    *counter += 1;
                    let mut inner = Vec::with_capacity(p.children.len());
                    go(&p.children, target, counter, &mut inner);
                    if id == target {
                        out.extend(inner);
                    } else {
                        out.push(Node::Phrase(Phrase::new(p.label.clone(), inner)));
                    }
                }
            }
        }
    }
    let mut out = Vec::with_capacity(forest.len());
    go(forest, target, &mut 0, &mut out);
    out
}

/// Rewrites a sentence so that every structure is expressible with the
/// relation inventory of `depth`: levels beyond the limit are spliced out,
/// then any adjacent-word transition the inventory cannot express is
/// repaired by splicing the innermost phrase involved.
///
/// For depth 2 this is the tree the depth-2 scheme actually encodes.
pub fn normalize(sentence: &Sentence, depth: Depth) -> Sentence {
    let (mut s, _) = sentence.flatten(depth.levels());
    loop {
        let sk = s.skeleton();
        let chains: Vec<Vec<usize>> = (0..s.len()).map(|i| sk.ancestors(i)).collect();
        let mut target = None;
        for i in 1..s.len() {
            if let Some((closed, opened)) = transition(&chains[i - 1], &chains[i]) {
                if !transition_legal(depth, closed, opened) {
                    target = Some(if opened > 0 { chains[i][0] } else { chains[i - 1][0] });
                    break;
                }
            }
        }
        let Some(target) = target else { return s };
        let forest = splice(s.forest(), target);
        let tokens = s.tokens().to_vec();
        s = Sentence::new(tokens, forest).expect("splicing preserves coverage");
    }
}

/// One structural tag per word. Word 0 and every chunk-initial word get `1`.
pub fn encode_sentence(sentence: &Sentence, scheme: &EncodingScheme) -> Result<Vec<StructuralTag>, EncodeError> {
    let depth = sentence.structural_depth();
    let max = Depth::Three.levels();
    if depth > max || (scheme.depth == Depth::Three && depth > scheme.depth.levels()) {
        return Err(EncodeError::DepthOverflow { depth, max });
    }
    let s: Cow<'_, Sentence> = match scheme.depth {
        Depth::Three => Cow::Borrowed(sentence),
        Depth::Two => Cow::Owned(normalize(sentence, Depth::Two)),
    };
    let sk = s.skeleton();
    let chains: Vec<Vec<usize>> = (0..s.len()).map(|i| sk.ancestors(i)).collect();
    let tags = s
        .tokens()
        .iter()
        .enumerate()
        .map(|(i, tok)| {
            let chain = &chains[i];
            let relation = if i == 0 {
                Relation::One
            } else {
                relation_between(&chains[i - 1], chain)
            };
            StructuralTag {
                relation,
                pos: scheme.dims.pos.then(|| tok.pos().to_string()),
                category: scheme.dims.category.then(|| match chain.first() {
                    Some(&p) => Category::Label(sk.label(p).to_string()),
                    None => Category::Outside,
                }),
                grandparent: scheme.dims.grandparent.then(|| match chain.get(1) {
                    Some(&g) => scheme.flags.flag_for(sk.label(g)),
                    None => GrandparentFlag::Other,
                }),
            }
        })
        .collect();
    Ok(tags)
}

/// Output of [`decode_tags`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub sentence: Sentence,
    /// Number of tags that could not be followed literally.
    pub repairs: usize,
}

enum Child {
    Leaf(usize),
    Node(usize),
}

struct DecodeNode {
    label: Option<String>,
    children: Vec<Child>,
}

struct Decoder<'a> {
    tags: &'a [StructuralTag],
    nodes: Vec<DecodeNode>,
    forest: Vec<Child>,
    /// Ancestors of the previous word, nearest first.
    path: Vec<usize>,
    /// Deepest ancestor count of any word in the current chunk.
    chunk_depth: usize,
    /// The previous word is bare but may still acquire parents (no category dim).
    provisional: bool,
    depth: Depth,
    max_levels: usize,
    repairs: usize,
}

impl<'a> Decoder<'a> {
    fn node(&mut self, label: Option<String>) -> usize {
        self.nodes.push(DecodeNode {
            label,
            children: Vec::new(),
        });
        self.nodes.len() - 1
    }

    fn label_of(&self, word: usize) -> Option<String> {
        match &self.tags[word].category {
            Some(Category::Label(l)) => Some(l.clone()),
            _ => None,
        }
    }

    fn attach(&mut self, node: usize, word: usize) {
        let label = self.label_of(word);
        let n = &mut self.nodes[node];
        n.children.push(Child::Leaf(word));
        if n.label.is_none() {
            n.label = label;
        }
    }

    fn open(&mut self, under: usize, label: Option<String>) -> usize {
        let n = self.node(label);
        self.nodes[under].children.push(Child::Node(n));
        n
    }

    fn start(&mut self, word: usize) {
        match &self.tags[word].category {
            Some(Category::Label(_)) => {
                let n = self.node(None);
                self.attach(n, word);
                self.forest.push(Child::Node(n));
                self.path = vec![n];
                self.chunk_depth = 1;
                self.provisional = false;
            }
            Some(Category::Outside) => {
                self.forest.push(Child::Leaf(word));
                self.path.clear();
                self.chunk_depth = 0;
                self.provisional = false;
            }
            None => {
                self.forest.push(Child::Leaf(word));
                self.path.clear();
                self.chunk_depth = 0;
                self.provisional = true;
            }
        }
    }

    /// Whether the previous word can be given `k` ancestors, growing the
    /// chunk upwards if needed.
    fn can_reach(&self, k: usize) -> bool {
        let missing = k.saturating_sub(self.path.len());
        missing == 0
            || ((!self.path.is_empty() || self.provisional) && self.chunk_depth + missing <= self.max_levels)
    }

    fn grow(&mut self, k: usize) {
        while self.path.len() < k {
            let top = self.forest.pop().expect("growing an empty forest");
            let n = self.node(None);
            self.nodes[n].children.push(top);
            self.forest.push(Child::Node(n));
            self.path.push(n);
            self.chunk_depth += 1;
        }
        self.provisional = false;
    }

    fn run(&mut self) {
        let depth = self.depth;
        for word in 0..self.tags.len() {
            let mut rel = self.tags[word].relation;
            if word == 0 && rel != Relation::One {
                self.repairs += 1;
                rel = Relation::One;
            }
            if !rel.is_legal(depth) {
                self.repairs += 1;
                rel = match rel {
                    Relation::PlusPlus | Relation::Equal => Relation::Plus,
                    _ => Relation::Minus,
                };
            }
            self.step(word, rel);
        }
    }

    fn step(&mut self, word: usize, rel: Relation) {
        let len = self.path.len().max(1);
        match rel {
            Relation::One => self.start(word),
            Relation::Zero => self.attach_up(word, 1, false),
            Relation::Plus => self.attach_up(word, 2, false),
            Relation::PlusPlus => self.attach_up(word, 3, false),
            Relation::Minus if self.can_reach(1) && len < self.max_levels => {
                self.grow(1);
                let label = self.label_of(word);
                let n = self.open(self.path[0], label);
                self.attach(n, word);
                self.path.insert(0, n);
                self.chunk_depth = self.chunk_depth.max(self.path.len());
            }
            Relation::MinusMinus if self.can_reach(1) && len + 2 <= self.max_levels => {
                self.grow(1);
                let mid = self.open(self.path[0], None);
                let label = self.label_of(word);
                let n = self.open(mid, label);
                self.attach(n, word);
                self.path.insert(0, mid);
                self.path.insert(0, n);
                self.chunk_depth = self.chunk_depth.max(self.path.len());
            }
            Relation::MinusMinus => {
                self.repairs += 1;
                self.step_repaired(word, Relation::Minus);
            }
            Relation::Minus => {
                self.repairs += 1;
                self.attach_up(word, 1, true);
            }
            Relation::Equal if self.can_reach(2) => {
                self.grow(2);
                let label = self.label_of(word);
                let n = self.open(self.path[1], label);
                self.attach(n, word);
                self.path[0] = n;
            }
            Relation::Equal => {
                self.repairs += 1;
                self.attach_up(word, 1, true);
            }
        }
    }

    /// Like `step` for a relation substituted during repair; further
    /// fallbacks do not count again.
    fn step_repaired(&mut self, word: usize, rel: Relation) {
        let before = self.repairs;
        self.step(word, rel);
        self.repairs = before;
    }

    /// Attaches `word` directly under the `level`-th ancestor of the previous
    /// word, falling back to the highest reachable ancestor, then to starting
    /// a new chunk. `counted` says whether a repair was already recorded.
    fn attach_up(&mut self, word: usize, level: usize, counted: bool) {
        let mut reachable = level;
        while reachable > 0 && !self.can_reach(reachable) {
            reachable -= 1;
        }
        if reachable != level && !counted {
            self.repairs += 1;
        }
        if reachable == 0 {
            self.start(word);
            return;
        }
        self.grow(reachable);
        let target = self.path[reachable - 1];
        self.attach(target, word);
        self.path.drain(..reachable - 1);
    }

    fn resolve_labels(&mut self, flags: &FlagLabels) {
        for id in 0..self.nodes.len() {
            if self.nodes[id].label.is_some() {
                continue;
            }
            let mut found = None;
            'outer: for c in &self.nodes[id].children {
                if let Child::Node(child) = c {
                    for cc in &self.nodes[*child].children {
                        if let Child::Leaf(w) = cc {
                            if let Some(l) = self.tags[*w].grandparent.and_then(|g| flags.label_for(g)) {
                                found = Some(l.to_string());
                                break 'outer;
                            }
                        }
                    }
                }
            }
            self.nodes[id].label = Some(found.unwrap_or_else(|| UNKNOWN_LABEL.to_string()));
        }
    }

    fn build(&self, c: &Child) -> Node {
        match c {
            Child::Leaf(w) => Node::Leaf(*w),
            Child::Node(id) => {
                let n = &self.nodes[*id];
                Node::Phrase(Phrase::new(
                    n.label.clone().unwrap_or_else(|| UNKNOWN_LABEL.to_string()),
                    n.children.iter().map(|c| self.build(c)).collect(),
                ))
            }
        }
    }
}

/// Rebuilds a forest from a tag sequence, left to right.
///
/// Tags that cannot be followed literally (for example `++` after a word
/// with a single ancestor at the depth limit) are clamped to the nearest
/// level that exists; each such tag counts as one repair. Phrase labels come
/// from the category of the first word attached directly below a phrase,
/// else from a grandparent flag pointing at it, else [`UNKNOWN_LABEL`].
pub fn decode_tags(tokens: &[Token], tags: &[StructuralTag], scheme: &EncodingScheme) -> Result<Decoded, EncodeError> {
    if tokens.len() != tags.len() {
        return Err(EncodeError::LengthMismatch {
            tokens: tokens.len(),
            tags: tags.len(),
        });
    }
    if tokens.is_empty() {
        return Err(EncodeError::LengthMismatch { tokens: 0, tags: 0 });
    }
    let mut d = Decoder {
        tags,
        nodes: Vec::new(),
        forest: Vec::new(),
        path: Vec::new(),
        chunk_depth: 0,
        provisional: false,
        depth: scheme.depth,
        max_levels: scheme.depth.levels() + 1,
        repairs: 0,
    };
    d.run();
    d.resolve_labels(&scheme.flags);
    let forest = d.forest.iter().map(|c| d.build(c)).collect();
    let sentence = Sentence::new(tokens.to_vec(), forest).expect("decoder emits a covering forest");
    Ok(Decoded {
        sentence,
        repairs: d.repairs,
    })
}

/// Distinct tags of a treebank under a scheme, in first-seen order.
#[derive(Debug, Clone, PartialEq)]
pub struct TagAlphabet {
    pub tags: IndexSet<StructuralTag>,
    /// Mean over word tokens of the number of distinct tags observed with
    /// the token's POS anywhere in the treebank.
    pub ambiguity: f64,
}

pub fn tag_alphabet(tb: &Treebank, scheme: &EncodingScheme) -> Result<TagAlphabet, EncodeError> {
    let mut tags = IndexSet::new();
    let mut by_pos: std::collections::HashMap<&str, std::collections::HashSet<usize>> = Default::default();
    let mut tokens = 0usize;
    let mut encoded = Vec::with_capacity(tb.len());
    for s in tb.sentences() {
        let enc = encode_sentence(s, scheme)?;
        for (tok, tag) in s.tokens().iter().zip(&enc) {
            let (id, _) = tags.insert_full(tag.clone());
            by_pos.entry(tok.pos()).or_default().insert(id);
        }
        tokens += s.len();
        encoded.push(enc);
    }
    let total: usize = tb
        .sentences()
        .iter()
        .flat_map(|s| s.tokens())
        .map(|t| by_pos[t.pos()].len())
        .sum();
    Ok(TagAlphabet {
        tags,
        ambiguity: if tokens == 0 { 0.0 } else { total as f64 / tokens as f64 },
    })
}
