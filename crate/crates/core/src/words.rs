//! Canonical nominal words.
//!
//! Bound names never appear in a canonical word. Every `Open` token allocates
//! the next register level (one more than the number of binders currently
//! open), and an `Idx(i)` token refers to the name held at level `i`. A word is
//! *legal* when it is a prefix of some well-scoped nominal word.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A letter of the finite alphabet Σ.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

/// The finite letter set Σ.
pub type Sigma = BTreeSet<Symbol>;

/// Builds a [`Sigma`] from string slices.
pub fn sigma<'a>(letters: impl IntoIterator<Item = &'a str>) -> Sigma {
    letters.into_iter().map(Symbol::new).collect()
}

/// One token of a canonical word.
///
/// The derived ordering is the fixed token order used everywhere a scan order
/// matters: letters (sorted), then indices ascending, then `Open`, then `Close`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    Letter(Symbol),
    Idx(u32),
    /// Allocation `≪` of a fresh name at the next register level.
    Open,
    /// Deallocation `≫` of the most recently allocated name.
    Close,
}

impl Token {
    pub fn letter(name: &str) -> Self {
        Token::Letter(Symbol::new(name))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("`>>` at token {pos} closes a binder that was never opened")]
    UnbalancedClose { pos: usize },
    #[error("index {idx} at token {pos} is out of scope ({open} binders open)")]
    IndexOutOfScope { pos: usize, idx: u32, open: u32 },
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
}

/// Counter values observed while scanning a structurally legal word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Profile {
    /// Binders still open at the end of the word.
    pub reg: u32,
    /// Highest nesting reached anywhere in the word.
    pub depth: u32,
}

/// A finite sequence of tokens.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Token>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn new(tokens: Vec<Token>) -> Self {
        Word(tokens)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn into_tokens(self) -> Vec<Token> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Raw concatenation, without any legality check.
    pub fn join(&self, other: &Word) -> Word {
        let mut tokens = Vec::with_capacity(self.len() + other.len());
        tokens.extend_from_slice(&self.0);
        tokens.extend_from_slice(&other.0);
        Word(tokens)
    }

    pub fn pushed(&self, token: Token) -> Word {
        let mut tokens = self.0.clone();
        tokens.push(token);
        Word(tokens)
    }

    /// Scans the word with the open-binder counter.
    ///
    /// Fails when a `Close` would drive the counter negative or an index
    /// exceeds the number of binders open at that point.
    pub fn profile(&self) -> Result<Profile, WordError> {
        let mut open = 0u32;
        let mut depth = 0u32;
        for (pos, token) in self.0.iter().enumerate() {
            match token {
                Token::Open => {
                    open += 1;
                    depth = depth.max(open);
                }
                Token::Close => {
                    if open == 0 {
                        return Err(WordError::UnbalancedClose { pos });
                    }
                    open -= 1;
                }
                Token::Idx(i) => {
                    if *i == 0 || *i > open {
                        return Err(WordError::IndexOutOfScope { pos, idx: *i, open });
                    }
                }
                Token::Letter(_) => {}
            }
        }
        Ok(Profile { reg: open, depth })
    }

    /// Number of binders opened but not yet closed.
    pub fn reg(&self) -> Result<u32, WordError> {
        self.profile().map(|p| p.reg)
    }

    /// Maximum binder nesting reached while scanning.
    pub fn depth(&self) -> Result<u32, WordError> {
        self.profile().map(|p| p.depth)
    }

    pub fn is_legal(&self, alphabet: &Alphabet) -> bool {
        let letters_ok = self.0.iter().all(|t| match t {
            Token::Letter(a) => alphabet.sigma.contains(a),
            _ => true,
        });
        letters_ok && matches!(self.profile(), Ok(p) if p.depth <= alphabet.n)
    }

    /// All prefixes, shortest first, from ε up to the word itself.
    pub fn prefixes(&self) -> Vec<Word> {
        (0..=self.len()).map(|k| Word(self.0[..k].to_vec())).collect()
    }

    /// Length-then-lexicographic comparison in token order.
    pub fn shortlex_cmp(&self, other: &Word) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }

    /// Plain ASCII form accepted by [`parse_word`]; ε renders as the empty string.
    pub fn serialize(&self) -> String {
        self.0
            .iter()
            .map(|t| match t {
                Token::Letter(a) => a.to_string(),
                Token::Idx(i) => i.to_string(),
                Token::Open => "<<".to_string(),
                Token::Close => ">>".to_string(),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl FromIterator<Token> for Word {
    fn from_iter<I: IntoIterator<Item = Token>>(iter: I) -> Self {
        Word(iter.into_iter().collect())
    }
}

/// Pretty form with the allocated level shown after each binder, e.g. `a b ≪1. 1 ≫`.
impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        let mut open = 0u32;
        for (k, token) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            match token {
                Token::Letter(a) => write!(f, "{a}")?,
                Token::Idx(i) => write!(f, "{i}")?,
                Token::Open => {
                    open += 1;
                    write!(f, "≪{open}.")?
                }
                Token::Close => {
                    open = open.saturating_sub(1);
                    f.write_str("≫")?
                }
            }
        }
        Ok(())
    }
}

/// Σ together with the current register bound `n`.
///
/// For `n = 0` the token set is Σ alone. For `n > 0` it is Σ, the indices
/// `1..=n`, `Open` and `Close`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    pub sigma: Sigma,
    pub n: u32,
}

impl Alphabet {
    pub fn new(sigma: Sigma, n: u32) -> Self {
        Alphabet { sigma, n }
    }

    /// Every token of A_n, in token order.
    pub fn tokens(&self) -> Vec<Token> {
        let mut out: Vec<Token> = self.sigma.iter().cloned().map(Token::Letter).collect();
        if self.n > 0 {
            out.extend((1..=self.n).map(Token::Idx));
            out.push(Token::Open);
            out.push(Token::Close);
        }
        out
    }

    /// Tokens that keep a legal word legal when `reg` binders are open.
    pub fn tokens_at(&self, reg: u32) -> Vec<Token> {
        let mut out: Vec<Token> = self.sigma.iter().cloned().map(Token::Letter).collect();
        out.extend((1..=reg.min(self.n)).map(Token::Idx));
        if reg < self.n {
            out.push(Token::Open);
        }
        if reg > 0 {
            out.push(Token::Close);
        }
        out
    }

    /// Number of tokens in A_n.
    pub fn size(&self) -> usize {
        self.tokens().len()
    }
}

/// Joins `s·e`, or returns `None` (the ⊥ mark) when the result is illegal.
pub fn concat(s: &Word, e: &Word, alphabet: &Alphabet) -> Option<Word> {
    let joined = s.join(e);
    joined.is_legal(alphabet).then_some(joined)
}

/// Parses the whitespace-separated word syntax.
///
/// `<<` is an allocation and may carry the decoration `<< k .` (or the glued
/// forms `<<k.` / `≪k.`), in which case `k` must equal the level being
/// allocated. `>>` (or `≫`) closes, integers are indices, and identifiers
/// `[a-z][a-z0-9]*` are letters. The empty string and `ε` denote ε.
pub fn parse_word(text: &str) -> Result<Word, WordError> {
    let pieces: Vec<(usize, &str)> = split_with_offsets(text);
    let mut tokens = Vec::new();
    let mut open = 0u32;
    let mut k = 0;
    while k < pieces.len() {
        let (pos, piece) = pieces[k];
        k += 1;
        if piece == "ε" && pieces.len() == 1 {
            break;
        }
        if let Some(rest) = piece.strip_prefix("<<").or_else(|| piece.strip_prefix('≪')) {
            open += 1;
            tokens.push(Token::Open);
            if !rest.is_empty() {
                // glued decoration, e.g. `≪1.`
                let level = rest.strip_suffix('.').ok_or_else(|| WordError::Syntax {
                    pos,
                    msg: format!("malformed binder decoration `{piece}`"),
                })?;
                check_level(pos, level, open)?;
            } else if k + 1 < pieces.len()
                && pieces[k + 1].1 == "."
                && pieces[k].1.chars().all(|c| c.is_ascii_digit())
            {
                check_level(pieces[k].0, pieces[k].1, open)?;
                k += 2;
            }
            continue;
        }
        if piece == ">>" || piece == "≫" {
            open = open.saturating_sub(1);
            tokens.push(Token::Close);
            continue;
        }
        if piece.chars().all(|c| c.is_ascii_digit()) {
            let idx: u32 = piece.parse().map_err(|_| WordError::Syntax {
                pos,
                msg: format!("index `{piece}` out of range"),
            })?;
            if idx == 0 {
                return Err(WordError::Syntax { pos, msg: "indices start at 1".into() });
            }
            tokens.push(Token::Idx(idx));
            continue;
        }
        if is_letter(piece) {
            tokens.push(Token::letter(piece));
            continue;
        }
        return Err(WordError::Syntax { pos, msg: format!("unexpected `{piece}`") });
    }
    Ok(Word(tokens))
}

/// Inverse of [`parse_word`] on the canonical plain form.
pub fn serialize_word(word: &Word) -> String {
    word.serialize()
}

fn check_level(pos: usize, level: &str, open: u32) -> Result<(), WordError> {
    match level.parse::<u32>() {
        Ok(l) if l == open => Ok(()),
        _ => Err(WordError::Syntax {
            pos,
            msg: format!("binder decoration `{level}` does not match level {open}"),
        }),
    }
}

pub(crate) fn is_letter(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
}

fn split_with_offsets(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, &text[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &text[s..]));
    }
    out
}
