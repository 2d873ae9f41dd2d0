//! POS-tagged sentences, depth-limited constituent trees and the bracketed
//! corpus format.
//!
//! One sentence per line. A phrase is `(LABEL child child ...)`, a token is
//! `form/POS` split on the last slash. Tokens outside any phrase appear bare
//! at the top level. Literal parentheses are written `-LRB-` / `-RRB-`.
//! Optional header lines `#pos: ...` and `#cat: ...` declare the alphabets;
//! any other line starting with `#` is a comment.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use thiserror::Error;

/// Default limit on structural depth (levels below the top-level chunk root).
pub const DEFAULT_MAX_DEPTH: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("unbalanced brackets")]
    Unbalanced,
    #[error("token `{0}` has no POS tag")]
    MissingPos(String),
    #[error("phrase without a label")]
    MissingLabel,
    #[error("phrase `{0}` has no children")]
    EmptyPhrase(String),
    #[error("structure depth {depth} exceeds the maximum of {max}")]
    TooDeep { depth: usize, max: usize },
    #[error("POS tag `{0}` is not in the declared alphabet")]
    UndeclaredPos(String),
    #[error("category `{0}` is not in the declared alphabet")]
    UndeclaredCategory(String),
    #[error("invalid symbol `{0}`")]
    InvalidSymbol(String),
    #[error("tree leaves do not cover tokens 0..{0} exactly once and in order")]
    BadCoverage(usize),
    #[error("empty sentence")]
    EmptySentence,
    #[error("line {line}: {error}")]
    Line {
        line: usize,
        #[source]
        error: Box<CorpusError>,
    },
}

impl CorpusError {
    fn at(self, line: usize) -> Self {
        CorpusError::Line {
            line,
            error: Box::new(self),
        }
    }
}

fn check_symbol(s: &str, forbid: &[char]) -> Result<(), CorpusError> {
    if s.is_empty() || s.chars().any(|c| c.is_whitespace() || forbid.contains(&c)) {
        return Err(CorpusError::InvalidSymbol(s.to_string()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    form: String,
    pos: String,
}

impl Token {
    /// Forms may not contain whitespace; POS tags may additionally not
    /// contain `/` or `|`.
    pub fn new(form: impl Into<String>, pos: impl Into<String>) -> Result<Self, CorpusError> {
        let (form, pos) = (form.into(), pos.into());
        check_symbol(&form, &[])?;
        check_symbol(&pos, &['/', '|'])?;
        Ok(Token { form, pos })
    }

    pub fn form(&self) -> &str {
        &self.form
    }

    pub fn pos(&self) -> &str {
        &self.pos
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", escape(&self.form), escape(&self.pos))
    }
}

/// A child in a tree: either a token (by index into the sentence) or a phrase.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Leaf(usize),
    Phrase(Phrase),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Phrase {
    pub label: String,
    pub children: Vec<Node>,
}

impl Phrase {
    pub fn new(label: impl Into<String>, children: Vec<Node>) -> Self {
        Phrase {
            label: label.into(),
            children,
        }
    }

    /// Token range covered by this phrase. Only meaningful on validated trees.
    pub fn span(&self) -> Range<usize> {
        let mut leaves = Vec::new();
        collect_leaves(&self.children, &mut leaves);
        match (leaves.first(), leaves.last()) {
            (Some(&a), Some(&b)) => a..b + 1,
            _ => 0..0,
        }
    }

    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        collect_leaves(&self.children, &mut out);
        out
    }
}

fn collect_leaves(children: &[Node], out: &mut Vec<usize>) {
    for c in children {
        match c {
            Node::Leaf(i) => out.push(*i),
            Node::Phrase(p) => collect_leaves(&p.children, out),
        }
    }
}

/// Height of a phrase counted in phrase nodes: `1 + max` over the children,
/// tokens contributing 0.
pub fn tree_depth(node: &Phrase) -> usize {
    1 + node
        .children
        .iter()
        .map(|c| match c {
            Node::Leaf(_) => 0,
            Node::Phrase(p) => tree_depth(p),
        })
        .max()
        .unwrap_or(0)
}

/// A POS-tagged sentence with its top-level forest.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sentence {
    tokens: Vec<Token>,
    forest: Vec<Node>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>, forest: Vec<Node>) -> Result<Self, CorpusError> {
        if tokens.is_empty() {
            return Err(CorpusError::EmptySentence);
        }
        fn check(children: &[Node]) -> Result<(), CorpusError> {
            for c in children {
                if let Node::Phrase(p) = c {
                    check_symbol(&p.label, &['|'])?;
                    if p.label == "_" {
                        return Err(CorpusError::InvalidSymbol(p.label.clone()));
                    }
                    if p.children.is_empty() {
                        return Err(CorpusError::EmptyPhrase(p.label.clone()));
                    }
                    check(&p.children)?;
                }
            }
            Ok(())
        }
        check(&forest)?;
        let mut leaves = Vec::with_capacity(tokens.len());
        collect_leaves(&forest, &mut leaves);
        if leaves.len() != tokens.len() || leaves.iter().enumerate().any(|(i, &l)| i != l) {
            return Err(CorpusError::BadCoverage(tokens.len()));
        }
        Ok(Sentence { tokens, forest })
    }

    /// A sentence with no phrases at all.
    pub fn bare(tokens: Vec<Token>) -> Result<Self, CorpusError> {
        let forest = (0..tokens.len()).map(Node::Leaf).collect();
        Sentence::new(tokens, forest)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn forest(&self) -> &[Node] {
        &self.forest
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn into_parts(self) -> (Vec<Token>, Vec<Node>) {
        (self.tokens, self.forest)
    }

    /// Number of phrase ancestors strictly below the top-level chunk root,
    /// per token. Bare tokens and tokens directly under a root get 0.
    pub fn token_depths(&self) -> Vec<usize> {
        let sk = self.skeleton();
        (0..self.len())
            .map(|i| sk.ancestors(i).len().saturating_sub(1))
            .collect()
    }

    /// Maximum token depth in the sentence.
    pub fn structural_depth(&self) -> usize {
        self.forest
            .iter()
            .filter_map(|n| match n {
                Node::Phrase(p) => Some(tree_depth(p) - 1),
                Node::Leaf(_) => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Splices out phrases nested deeper than `max_depth` levels below their
    /// chunk root; their children move up to the grandparent. Returns the new
    /// sentence and the number of phrases removed.
    pub fn flatten(&self, max_depth: usize) -> (Sentence, usize) {
        fn go(children: &[Node], level: usize, max_level: usize, removed: &mut usize) -> Vec<Node> {
            let mut out = Vec::with_capacity(children.len());
            for c in children {
                match c {
                    Node::Leaf(i) => out.push(Node::Leaf(*i)),
                    Node::Phrase(p) if level > max_level => {
                        *removed += 1;
                        out.extend(go(&p.children, level, max_level, removed));
                    }
                    Node::Phrase(p) => out.push(Node::Phrase(Phrase {
                        label: p.label.clone(),
                        children: go(&p.children, level + 1, max_level, removed),
                    })),
                }
            }
            out
        }
        let mut removed = 0;
        let forest = go(&self.forest, 1, max_depth + 1, &mut removed);
        (
            Sentence {
                tokens: self.tokens.clone(),
                forest,
            },
            removed,
        )
    }

    /// Token ranges of the top-level phrases.
    pub fn chunk_spans(&self) -> Vec<Range<usize>> {
        self.forest
            .iter()
            .filter_map(|n| match n {
                Node::Phrase(p) => Some(p.span()),
                Node::Leaf(_) => None,
            })
            .collect()
    }

    /// Flat view of the phrase structure, for ancestor queries.
    pub fn skeleton(&self) -> Skeleton<'_> {
        let mut sk = Skeleton {
            nodes: Vec::new(),
            token_parent: vec![None; self.tokens.len()],
        };
        fn go<'a>(sk: &mut Skeleton<'a>, children: &'a [Node], parent: Option<usize>) {
            for c in children {
                match c {
                    Node::Leaf(i) => sk.token_parent[*i] = parent,
                    Node::Phrase(p) => {
                        let id = sk.nodes.len();
                        sk.nodes.push(SkeletonNode {
                            label: &p.label,
                            parent,
                            span: p.span(),
                            phrase: p,
                        });
                        go(sk, &p.children, Some(id));
                    }
                }
            }
        }
        go(&mut sk, &self.forest, None);
        sk
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn node(f: &mut fmt::Formatter<'_>, tokens: &[Token], n: &Node) -> fmt::Result {
            match n {
                Node::Leaf(i) => write!(f, "{}", tokens[*i]),
                Node::Phrase(p) => {
                    write!(f, "({}", escape(&p.label))?;
                    for c in &p.children {
                        f.write_str(" ")?;
                        node(f, tokens, c)?;
                    }
                    f.write_str(")")
                }
            }
        }
        for (i, n) in self.forest.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            node(f, &self.tokens, n)?;
        }
        Ok(())
    }
}

/// Pre-order list of the phrases of a sentence with parent links.
#[derive(Debug)]
pub struct Skeleton<'a> {
    nodes: Vec<SkeletonNode<'a>>,
    token_parent: Vec<Option<usize>>,
}

#[derive(Debug)]
pub struct SkeletonNode<'a> {
    pub label: &'a str,
    pub parent: Option<usize>,
    pub span: Range<usize>,
    pub phrase: &'a Phrase,
}

impl<'a> Skeleton<'a> {
    pub fn nodes(&self) -> &[SkeletonNode<'a>] {
        &self.nodes
    }

    pub fn parent_of_token(&self, token: usize) -> Option<usize> {
        self.token_parent[token]
    }

    /// Node ids from the token's parent up to its top-level root.
    pub fn ancestors(&self, token: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.token_parent[token];
        while let Some(id) = cur {
            out.push(id);
            cur = self.nodes[id].parent;
        }
        out
    }

    pub fn label(&self, id: usize) -> &'a str {
        self.nodes[id].label
    }
}

/// A collection of sentences with their POS and category alphabets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Treebank {
    pos_alphabet: BTreeSet<String>,
    category_alphabet: BTreeSet<String>,
    sentences: Vec<Sentence>,
}

fn sentence_symbols(s: &Sentence, pos: &mut BTreeSet<String>, cats: &mut BTreeSet<String>) {
    for t in s.tokens() {
        pos.insert(t.pos.clone());
    }
    for n in s.skeleton().nodes() {
        cats.insert(n.label.to_string());
    }
}

impl Treebank {
    /// Builds a treebank whose alphabets are collected from the data.
    pub fn new(sentences: Vec<Sentence>) -> Self {
        let mut pos = BTreeSet::new();
        let mut cats = BTreeSet::new();
        for s in &sentences {
            sentence_symbols(s, &mut pos, &mut cats);
        }
        Treebank {
            pos_alphabet: pos,
            category_alphabet: cats,
            sentences,
        }
    }

    /// Builds a treebank with declared alphabets; every sentence must only use
    /// declared symbols.
    pub fn with_alphabets(
        pos_alphabet: BTreeSet<String>,
        category_alphabet: BTreeSet<String>,
        sentences: Vec<Sentence>,
    ) -> Result<Self, CorpusError> {
        for s in &sentences {
            validate_against(s, &pos_alphabet, &category_alphabet)?;
        }
        Ok(Treebank {
            pos_alphabet,
            category_alphabet,
            sentences,
        })
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn into_sentences(self) -> Vec<Sentence> {
        self.sentences
    }

    pub fn pos_alphabet(&self) -> &BTreeSet<String> {
        &self.pos_alphabet
    }

    pub fn category_alphabet(&self) -> &BTreeSet<String> {
        &self.category_alphabet
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    /// Same alphabets, different sentences. Sentences must already be
    /// drawn from (or derived from) this treebank.
    pub fn with_sentences(&self, sentences: Vec<Sentence>) -> Treebank {
        Treebank {
            pos_alphabet: self.pos_alphabet.clone(),
            category_alphabet: self.category_alphabet.clone(),
            sentences,
        }
    }

    /// Writes the bracketed format, alphabets declared in header lines.
    pub fn to_bracketed(&self) -> String {
        let mut out = String::new();
        let join = |set: &BTreeSet<String>| set.iter().map(|s| escape(s)).collect::<Vec<_>>().join(" ");
        out.push_str(&format!("#pos: {}\n", join(&self.pos_alphabet)));
        out.push_str(&format!("#cat: {}\n", join(&self.category_alphabet)));
        for s in &self.sentences {
            out.push_str(&s.to_string());
            out.push('\n');
        }
        out
    }
}

fn validate_against(s: &Sentence, pos: &BTreeSet<String>, cats: &BTreeSet<String>) -> Result<(), CorpusError> {
    for t in s.tokens() {
        if !pos.contains(&t.pos) {
            return Err(CorpusError::UndeclaredPos(t.pos.clone()));
        }
    }
    for n in s.skeleton().nodes() {
        if !cats.contains(n.label) {
            return Err(CorpusError::UndeclaredCategory(n.label.to_string()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DepthPolicy {
    /// Reject sentences deeper than the limit.
    #[default]
    Strict,
    /// Splice out the overflowing levels and count them.
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    pub max_depth: usize,
    pub depth_policy: DepthPolicy,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            max_depth: DEFAULT_MAX_DEPTH,
            depth_policy: DepthPolicy::Strict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed {
    pub treebank: Treebank,
    /// Phrases removed by lenient flattening.
    pub flattened: usize,
}

/// Parses a bracketed corpus with the default options (strict, depth 3).
pub fn parse_bracketed(text: &str) -> Result<Treebank, CorpusError> {
    parse_bracketed_with(text, &ParseOptions::default()).map(|p| p.treebank)
}

pub fn parse_bracketed_with(text: &str, opts: &ParseOptions) -> Result<Parsed, CorpusError> {
    let mut declared_pos: Option<BTreeSet<String>> = None;
    let mut declared_cat: Option<BTreeSet<String>> = None;
    let mut sentences = Vec::new();
    let mut flattened = 0;
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            let rest = rest.trim_start();
            if let Some(syms) = rest.strip_prefix("pos:") {
                declared_pos = Some(syms.split_whitespace().map(unescape).collect());
            } else if let Some(syms) = rest.strip_prefix("cat:") {
                declared_cat = Some(syms.split_whitespace().map(unescape).collect());
            }
            continue;
        }
        let mut s = parse_sentence(trimmed).map_err(|e| e.at(lineno))?;
        let depth = s.structural_depth();
        if depth > opts.max_depth {
            match opts.depth_policy {
                DepthPolicy::Strict => {
                    return Err(CorpusError::TooDeep {
                        depth,
                        max: opts.max_depth,
                    }
                    .at(lineno))
                }
                DepthPolicy::Lenient => {
                    let (flat, removed) = s.flatten(opts.max_depth);
                    flattened += removed;
                    s = flat;
                }
            }
        }
        sentences.push((lineno, s));
    }

    let mut pos = BTreeSet::new();
    let mut cats = BTreeSet::new();
    for (_, s) in &sentences {
        sentence_symbols(s, &mut pos, &mut cats);
    }
    if let Some(declared) = &declared_pos {
        if let Some(bad) = pos.iter().find(|p| !declared.contains(*p)) {
            let line = sentences
                .iter()
                .find(|(_, s)| s.tokens().iter().any(|t| &t.pos == bad))
                .map_or(0, |(l, _)| *l);
            return Err(CorpusError::UndeclaredPos(bad.clone()).at(line));
        }
    }
    if let Some(declared) = &declared_cat {
        if let Some(bad) = cats.iter().find(|c| !declared.contains(*c)) {
            let line = sentences
                .iter()
                .find(|(_, s)| s.skeleton().nodes().iter().any(|n| n.label == bad.as_str()))
                .map_or(0, |(l, _)| *l);
            return Err(CorpusError::UndeclaredCategory(bad.clone()).at(line));
        }
    }
    Ok(Parsed {
        treebank: Treebank {
            pos_alphabet: declared_pos.unwrap_or(pos),
            category_alphabet: declared_cat.unwrap_or(cats),
            sentences: sentences.into_iter().map(|(_, s)| s).collect(),
        },
        flattened,
    })
}

/// Parses one line of the bracketed format into a sentence.
pub fn parse_sentence(line: &str) -> Result<Sentence, CorpusError> {
    // Balance first, so nesting errors win over token errors.
    let mut level = 0i64;
    for c in line.chars() {
        match c {
            '(' => level += 1,
            ')' => {
                level -= 1;
                if level < 0 {
                    return Err(CorpusError::Unbalanced);
                }
            }
            _ => {}
        }
    }
    if level != 0 {
        return Err(CorpusError::Unbalanced);
    }

    let mut tokens = Vec::new();
    let mut forest = Vec::new();
    let mut stack: Vec<Phrase> = Vec::new();
    let mut rest = line;
    loop {
        rest = rest.trim_start();
        let Some(c) = rest.chars().next() else { break };
        match c {
            '(' => {
                let after = &rest[1..];
                let end = after
                    .find(|c: char| c.is_whitespace() || c == '(' || c == ')')
                    .unwrap_or(after.len());
                if end == 0 {
                    return Err(CorpusError::MissingLabel);
                }
                stack.push(Phrase::new(unescape(&after[..end]), Vec::new()));
                rest = &after[end..];
            }
            ')' => {
                let p = stack.pop().ok_or(CorpusError::Unbalanced)?;
                if p.children.is_empty() {
                    return Err(CorpusError::EmptyPhrase(p.label));
                }
                match stack.last_mut() {
                    Some(top) => top.children.push(Node::Phrase(p)),
                    None => forest.push(Node::Phrase(p)),
                }
                rest = &rest[1..];
            }
            _ => {
                let end = rest
                    .find(|c: char| c.is_whitespace() || c == '(' || c == ')')
                    .unwrap_or(rest.len());
                let word = &rest[..end];
                let (form, pos) = word
                    .rsplit_once('/')
                    .filter(|(f, p)| !f.is_empty() && !p.is_empty())
                    .ok_or_else(|| CorpusError::MissingPos(word.to_string()))?;
                let leaf = Node::Leaf(tokens.len());
                tokens.push(Token::new(unescape(form), unescape(pos))?);
                match stack.last_mut() {
                    Some(top) => top.children.push(leaf),
                    None => forest.push(leaf),
                }
                rest = &rest[end..];
            }
        }
    }
    if !stack.is_empty() {
        return Err(CorpusError::Unbalanced);
    }
    Sentence::new(tokens, forest)
}

/// Parses POS-tagged input (`form/POS` tokens, one sentence per line) into
/// bare sentences. Blank lines and `#` comments are skipped.
pub fn parse_tagged(text: &str) -> Result<Vec<Vec<Token>>, CorpusError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let s = parse_sentence(line).map_err(|e| e.at(lineno + 1))?;
        out.push(s.into_parts().0);
    }
    Ok(out)
}

fn escape(s: &str) -> String {
    if s.contains(['(', ')']) {
        s.replace('(', "-LRB-").replace(')', "-RRB-")
    } else {
        s.to_string()
    }
}

fn unescape(s: &str) -> String {
    if s.contains("-LRB-") || s.contains("-RRB-") {
        s.replace("-LRB-", "(").replace("-RRB-", ")")
    } else {
        s.to_string()
    }
}

/// Turns each maximal phrase with a requested category into its own
/// one-chunk sentence. Everything outside those phrases is dropped.
pub fn extract_chunks<S: AsRef<str>>(tb: &Treebank, categories: &[S]) -> Treebank {
    fn collect<'a>(children: &'a [Node], cats: &[&str], out: &mut Vec<&'a Phrase>) {
        for c in children {
            if let Node::Phrase(p) = c {
                if cats.contains(&p.label.as_str()) {
                    out.push(p);
                } else {
                    collect(&p.children, cats, out);
                }
            }
        }
    }
    fn shift(n: &Node, by: usize) -> Node {
        match n {
            Node::Leaf(i) => Node::Leaf(i - by),
            Node::Phrase(p) => Node::Phrase(Phrase {
                label: p.label.clone(),
                children: p.children.iter().map(|c| shift(c, by)).collect(),
            }),
        }
    }
    let cats: Vec<&str> = categories.iter().map(|c| c.as_ref()).collect();
    let mut out = Vec::new();
    for s in tb.sentences() {
        let mut found = Vec::new();
        collect(s.forest(), &cats, &mut found);
        for p in found {
            let span = p.span();
            let tokens = s.tokens()[span.clone()].to_vec();
            let forest = vec![shift(&Node::Phrase(p.clone()), span.start)];
            out.push(Sentence { tokens, forest });
        }
    }
    tb.with_sentences(out)
}
