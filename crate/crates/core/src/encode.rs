//! Model-facing encodings: prefix token sequences for the LSTM and ordered
//! token trees for the TreeLSTM, over a shared vocabulary.
//!
//! Operator tokens carry their arity (`ADD2`, `MUL3`, ...), so a token
//! sequence decodes without delimiters. Shared DAG nodes are unfolded: a
//! subexpression used twice appears twice in both encodings.

use crate::datagen::{normalize_constants, IntegrandRecord};
use crate::expr::{ConstClass, ExprId, ExprStore, Func, Node};
use num_bigint::BigInt;
use sha2::{Digest, Sha256};
use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use thiserror::Error;

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
/// Ids below this are reserved.
pub const RESERVED: u32 = 2;

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("token id {0} is outside the vocabulary")]
    UnknownId(u32),
    #[error("token {0} cannot be decoded")]
    Undecodable(String),
    #[error("token sequence ended early")]
    UnexpectedEnd,
    #[error("{0} trailing tokens after a complete expression")]
    Trailing(usize),
    #[error("vocabulary io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("vocabulary file {0} is malformed")]
    Malformed(String),
    #[error("stored expression does not parse: {0}")]
    Prefix(#[from] crate::expr::PrefixError),
}

/// Token string of a node head, without its children.
pub fn node_token(s: &ExprStore, e: ExprId) -> String {
    match s.node(e) {
        Node::Int(n) => n.to_string(),
        Node::Const(c) => c.token().to_string(),
        Node::Var(v) => v.clone(),
        Node::Func(f, _) => f.name().to_uppercase(),
        Node::Pow(..) => "POW".to_string(),
        Node::Add(xs) => format!("ADD{}", xs.len()),
        Node::Mul(xs) => format!("MUL{}", xs.len()),
    }
}

/// Pre-order token strings of the tree unfolding of `e`.
pub fn tokens(s: &ExprStore, e: ExprId) -> Vec<String> {
    let mut out = Vec::new();
    let mut stack = vec![e];
    while let Some(n) = stack.pop() {
        out.push(node_token(s, n));
        stack.extend(children(s, n).into_iter().rev());
    }
    out
}

fn children(s: &ExprStore, e: ExprId) -> Vec<ExprId> {
    match s.node(e) {
        Node::Int(_) | Node::Const(_) | Node::Var(_) => vec![],
        Node::Func(_, a) => vec![*a],
        Node::Pow(b, x) => vec![*b, *x],
        Node::Add(xs) | Node::Mul(xs) => xs.clone(),
    }
}

/// Token alphabet with `PAD = 0`, `UNK = 1` and the remaining tokens in
/// sorted order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocabulary {
    /// Vocabulary over the given (non-reserved) tokens.
    pub fn from_tokens<I: IntoIterator<Item = String>>(toks: I) -> Vocabulary {
        let set: BTreeSet<String> = toks.into_iter().collect();
        let mut tokens = vec!["PAD".to_string(), "UNK".to_string()];
        tokens.extend(set.into_iter().filter(|t| t != "PAD" && t != "UNK"));
        let ids = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary { tokens, ids }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, tok: &str) -> u32 {
        self.ids.get(tok).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// All token strings in id order, reserved ones included.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// File form: one non-reserved token per line; line `k` holds id
    /// `k + RESERVED`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.tokens[RESERVED as usize..] {
            out.push_str(t);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Vocabulary, EncodeError> {
        let toks: Vec<String> = text.lines().map(str::to_string).collect();
        let v = Vocabulary::from_tokens(toks.clone());
        if v.tokens[RESERVED as usize..] != toks[..] {
            return Err(EncodeError::Malformed("tokens must be unique and sorted".into()));
        }
        Ok(v)
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn save(&self, path: &Path) -> Result<(), EncodeError> {
        std::fs::write(path, self.to_text())
            .map_err(|source| EncodeError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path) -> Result<Vocabulary, EncodeError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| EncodeError::Io { path: path.display().to_string(), source })?;
        Vocabulary::from_text(&text).map_err(|_| EncodeError::Malformed(path.display().to_string()))
    }
}

/// Vocabulary of the normalized integrands of `records`.
pub fn build_vocabulary(records: &[IntegrandRecord]) -> Result<Vocabulary, EncodeError> {
    let mut set = BTreeSet::new();
    for r in records {
        let mut s = ExprStore::new();
        let e = model_input(&mut s, &r.integrand_prefix)?;
        set.extend(tokens(&s, e));
    }
    Ok(Vocabulary::from_tokens(set))
}

/// The expression the models see for a stored integrand: parsed, then
/// constant-normalized.
pub fn model_input(s: &mut ExprStore, prefix: &str) -> Result<ExprId, EncodeError> {
    let e = s.from_prefix(prefix)?;
    Ok(normalize_constants(s, e))
}

/// Pre-order token ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Ordered token tree stored in pre-order; node 0 is the root and every
/// child index is larger than its parent's.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeEncoding {
    pub ids: Vec<u32>,
    pub children: Vec<Vec<usize>>,
}

impl TreeEncoding {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Token ids in pre-order.
    pub fn flatten(&self) -> Vec<u32> {
        self.ids.clone()
    }
}

pub fn encode_sequence(s: &ExprStore, e: ExprId, v: &Vocabulary) -> TokenSequence {
    TokenSequence { ids: tokens(s, e).iter().map(|t| v.id(t)).collect() }
}

pub fn encode_tree(s: &ExprStore, e: ExprId, v: &Vocabulary) -> TreeEncoding {
    let mut t = TreeEncoding { ids: Vec::new(), children: Vec::new() };
    unfold(s, e, v, &mut t);
    t
}

fn unfold(s: &ExprStore, e: ExprId, v: &Vocabulary, t: &mut TreeEncoding) -> usize {
    let me = t.ids.len();
    t.ids.push(v.id(&node_token(s, e)));
    t.children.push(Vec::new());
    for c in children(s, e) {
        let k = unfold(s, c, v, t);
        t.children[me].push(k);
    }
    me
}

/// Rebuilds the expression from a token sequence. Nodes are interned as
/// read, without re-canonicalization, so encoding then decoding returns
/// the same identifier.
pub fn decode(s: &mut ExprStore, seq: &TokenSequence, v: &Vocabulary) -> Result<ExprId, EncodeError> {
    let mut at = 0;
    let e = decode_at(s, &seq.ids, v, &mut at)?;
    if at != seq.ids.len() {
        return Err(EncodeError::Trailing(seq.ids.len() - at));
    }
    Ok(e)
}

fn decode_at(s: &mut ExprStore, ids: &[u32], v: &Vocabulary, at: &mut usize) -> Result<ExprId, EncodeError> {
    let id = *ids.get(*at).ok_or(EncodeError::UnexpectedEnd)?;
    *at += 1;
    let tok = v.token(id).ok_or(EncodeError::UnknownId(id))?.to_string();
    let bad = || EncodeError::Undecodable(tok.clone());
    if id < RESERVED {
        return Err(bad());
    }
    if let Some(f) = Func::ALL.into_iter().find(|f| f.name().to_uppercase() == tok) {
        let a = decode_at(s, ids, v, at)?;
        return Ok(s.intern(Node::Func(f, a)));
    }
    if let Some(c) = ConstClass::from_token(&tok) {
        return Ok(s.constant(c));
    }
    if tok == "POW" {
        let b = decode_at(s, ids, v, at)?;
        let x = decode_at(s, ids, v, at)?;
        return Ok(s.intern(Node::Pow(b, x)));
    }
    for (head, is_add) in [("ADD", true), ("MUL", false)] {
        if let Some(n) = tok.strip_prefix(head) {
            let n: usize = n.parse().map_err(|_| bad())?;
            let mut xs = Vec::with_capacity(n);
            for _ in 0..n {
                xs.push(decode_at(s, ids, v, at)?);
            }
            return Ok(s.intern(if is_add { Node::Add(xs) } else { Node::Mul(xs) }));
        }
    }
    if let Ok(n) = tok.parse::<BigInt>() {
        return Ok(s.int(n));
    }
    if tok.chars().all(|c| c.is_ascii_lowercase()) {
        return Ok(s.var(&tok));
    }
    Err(bad())
}
