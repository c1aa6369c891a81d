//! Nominal regular expressions with binders.
//!
//! Text syntax:
//!
//! ```text
//! expr ::= '0' | 'eps' | letter | name | expr '+' expr | expr expr | expr '*'
//!        | '<' name '.' expr '>' | '(' expr ')'
//! ```
//!
//! Star binds tightest, then juxtaposition, then `+`. An identifier resolves
//! to the innermost binder of that name if there is one, otherwise to a
//! letter. Identifiers that match neither as a whole are split into a
//! sequence of known letters and bound names, so `ab<n.n*>` reads as
//! `a b <n. n*>` over Σ = {a, b}. Integers are always names, which is how
//! canonical expressions print.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::words::{Sigma, Symbol, Token, Word};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NominalRegex {
    Empty,
    Epsilon,
    Letter(Symbol),
    Name(String),
    Sum(Box<NominalRegex>, Box<NominalRegex>),
    Concat(Box<NominalRegex>, Box<NominalRegex>),
    Star(Box<NominalRegex>),
    Binder(String, Box<NominalRegex>),
}

/// A closed expression whose binders carry their nesting level and whose
/// names are replaced by the level of the binder they refer to.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CanonicalRegex {
    Empty,
    Epsilon,
    Letter(Symbol),
    Idx(u32),
    Sum(Box<CanonicalRegex>, Box<CanonicalRegex>),
    Concat(Box<CanonicalRegex>, Box<CanonicalRegex>),
    Star(Box<CanonicalRegex>),
    Binder(u32, Box<CanonicalRegex>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegexError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown letter `{name}` at byte {pos}")]
    UnknownLetter { pos: usize, name: String },
    #[error("binder name `{name}` at byte {pos} clashes with a letter")]
    NameIsLetter { pos: usize, name: String },
    #[error("name `{name}` is free; only closed expressions can be canonicalized")]
    FreeName { name: String },
}

impl NominalRegex {
    pub fn letter(a: &str) -> Self {
        NominalRegex::Letter(Symbol::new(a))
    }

    pub fn name(n: &str) -> Self {
        NominalRegex::Name(n.to_string())
    }

    pub fn sum(l: NominalRegex, r: NominalRegex) -> Self {
        NominalRegex::Sum(Box::new(l), Box::new(r))
    }

    pub fn concat(l: NominalRegex, r: NominalRegex) -> Self {
        NominalRegex::Concat(Box::new(l), Box::new(r))
    }

    pub fn star(body: NominalRegex) -> Self {
        NominalRegex::Star(Box::new(body))
    }

    pub fn binder(n: &str, body: NominalRegex) -> Self {
        NominalRegex::Binder(n.to_string(), Box::new(body))
    }

    /// True iff every name occurrence is under a binder of that name.
    pub fn is_closed(&self) -> bool {
        fn go<'a>(re: &'a NominalRegex, scope: &mut Vec<&'a str>) -> bool {
            match re {
                NominalRegex::Empty | NominalRegex::Epsilon | NominalRegex::Letter(_) => true,
                NominalRegex::Name(n) => scope.contains(&n.as_str()),
                NominalRegex::Sum(l, r) | NominalRegex::Concat(l, r) => {
                    go(l, scope) && go(r, scope)
                }
                NominalRegex::Star(b) => go(b, scope),
                NominalRegex::Binder(n, b) => {
                    scope.push(n);
                    let ok = go(b, scope);
                    scope.pop();
                    ok
                }
            }
        }
        go(self, &mut Vec::new())
    }

    pub fn letters(&self) -> Sigma {
        let mut out = BTreeSet::new();
        self.collect_letters(&mut out);
        out
    }

    fn collect_letters(&self, out: &mut Sigma) {
        match self {
            NominalRegex::Letter(a) => {
                out.insert(a.clone());
            }
            NominalRegex::Sum(l, r) | NominalRegex::Concat(l, r) => {
                l.collect_letters(out);
                r.collect_letters(out);
            }
            NominalRegex::Star(b) | NominalRegex::Binder(_, b) => b.collect_letters(out),
            _ => {}
        }
    }
}

/// Closed-expression canonical form: the binder at nesting depth `d` becomes
/// level `d` and each name becomes the level of the innermost binder that
/// captures it.
pub fn canonicalize(ne: &NominalRegex) -> Result<CanonicalRegex, RegexError> {
    fn go(ne: &NominalRegex, scope: &mut Vec<String>) -> Result<CanonicalRegex, RegexError> {
        Ok(match ne {
            NominalRegex::Empty => CanonicalRegex::Empty,
            NominalRegex::Epsilon => CanonicalRegex::Epsilon,
            NominalRegex::Letter(a) => CanonicalRegex::Letter(a.clone()),
            NominalRegex::Name(n) => match scope.iter().rposition(|m| m == n) {
                Some(k) => CanonicalRegex::Idx(k as u32 + 1),
                None => return Err(RegexError::FreeName { name: n.clone() }),
            },
            NominalRegex::Sum(l, r) => {
                CanonicalRegex::Sum(Box::new(go(l, scope)?), Box::new(go(r, scope)?))
            }
            NominalRegex::Concat(l, r) => {
                CanonicalRegex::Concat(Box::new(go(l, scope)?), Box::new(go(r, scope)?))
            }
            NominalRegex::Star(b) => CanonicalRegex::Star(Box::new(go(b, scope)?)),
            NominalRegex::Binder(n, b) => {
                scope.push(n.clone());
                let level = scope.len() as u32;
                let body = go(b, scope);
                scope.pop();
                CanonicalRegex::Binder(level, Box::new(body?))
            }
        })
    }
    go(ne, &mut Vec::new())
}

impl CanonicalRegex {
    pub fn letter(a: &str) -> Self {
        CanonicalRegex::Letter(Symbol::new(a))
    }

    pub fn sum(l: CanonicalRegex, r: CanonicalRegex) -> Self {
        CanonicalRegex::Sum(Box::new(l), Box::new(r))
    }

    pub fn concat(l: CanonicalRegex, r: CanonicalRegex) -> Self {
        CanonicalRegex::Concat(Box::new(l), Box::new(r))
    }

    pub fn star(body: CanonicalRegex) -> Self {
        CanonicalRegex::Star(Box::new(body))
    }

    pub fn binder(level: u32, body: CanonicalRegex) -> Self {
        CanonicalRegex::Binder(level, Box::new(body))
    }

    /// Binder depth: leaves are 0, `+`/concat take the max, binders add one.
    pub fn theta(&self) -> u32 {
        match self {
            CanonicalRegex::Empty
            | CanonicalRegex::Epsilon
            | CanonicalRegex::Letter(_)
            | CanonicalRegex::Idx(_) => 0,
            CanonicalRegex::Sum(l, r) | CanonicalRegex::Concat(l, r) => l.theta().max(r.theta()),
            CanonicalRegex::Star(b) => b.theta(),
            CanonicalRegex::Binder(_, b) => 1 + b.theta(),
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            CanonicalRegex::Sum(l, r) | CanonicalRegex::Concat(l, r) => 1 + l.size() + r.size(),
            CanonicalRegex::Star(b) | CanonicalRegex::Binder(_, b) => 1 + b.size(),
            _ => 1,
        }
    }

    pub fn letters(&self) -> Sigma {
        self.to_nominal().letters()
    }

    /// Reads levels back as names (`<1. 1>` becomes `⟨"1". "1"⟩`).
    pub fn to_nominal(&self) -> NominalRegex {
        match self {
            CanonicalRegex::Empty => NominalRegex::Empty,
            CanonicalRegex::Epsilon => NominalRegex::Epsilon,
            CanonicalRegex::Letter(a) => NominalRegex::Letter(a.clone()),
            CanonicalRegex::Idx(i) => NominalRegex::Name(i.to_string()),
            CanonicalRegex::Sum(l, r) => NominalRegex::sum(l.to_nominal(), r.to_nominal()),
            CanonicalRegex::Concat(l, r) => NominalRegex::concat(l.to_nominal(), r.to_nominal()),
            CanonicalRegex::Star(b) => NominalRegex::star(b.to_nominal()),
            CanonicalRegex::Binder(l, b) => NominalRegex::binder(&l.to_string(), b.to_nominal()),
        }
    }

    /// Every word of the language with at most `max_len` tokens.
    pub fn denote_bounded(&self, max_len: usize) -> BTreeSet<Word> {
        match self {
            CanonicalRegex::Empty => BTreeSet::new(),
            CanonicalRegex::Epsilon => BTreeSet::from([Word::empty()]),
            CanonicalRegex::Letter(a) => single(Token::Letter(a.clone()), max_len),
            CanonicalRegex::Idx(i) => single(Token::Idx(*i), max_len),
            CanonicalRegex::Sum(l, r) => {
                let mut out = l.denote_bounded(max_len);
                out.extend(r.denote_bounded(max_len));
                out
            }
            CanonicalRegex::Concat(l, r) => {
                let left = l.denote_bounded(max_len);
                if left.is_empty() {
                    return left;
                }
                let right = r.denote_bounded(max_len);
                concat_sets(&left, &right, max_len)
            }
            CanonicalRegex::Star(b) => {
                let body: BTreeSet<Word> =
                    b.denote_bounded(max_len).into_iter().filter(|w| !w.is_empty()).collect();
                let mut out = BTreeSet::from([Word::empty()]);
                let mut frontier = out.clone();
                loop {
                    let next: BTreeSet<Word> = concat_sets(&frontier, &body, max_len)
                        .into_iter()
                        .filter(|w| !out.contains(w))
                        .collect();
                    if next.is_empty() {
                        break out;
                    }
                    out.extend(next.iter().cloned());
                    frontier = next;
                }
            }
            CanonicalRegex::Binder(_, b) => {
                if max_len < 2 {
                    return BTreeSet::new();
                }
                b.denote_bounded(max_len - 2)
                    .into_iter()
                    .map(|w| {
                        let mut tokens = Vec::with_capacity(w.len() + 2);
                        tokens.push(Token::Open);
                        tokens.extend(w.into_tokens());
                        tokens.push(Token::Close);
                        Word::new(tokens)
                    })
                    .collect()
            }
        }
    }
}

fn single(token: Token, max_len: usize) -> BTreeSet<Word> {
    if max_len >= 1 {
        BTreeSet::from([Word::new(vec![token])])
    } else {
        BTreeSet::new()
    }
}

fn concat_sets(left: &BTreeSet<Word>, right: &BTreeSet<Word>, max_len: usize) -> BTreeSet<Word> {
    let mut out = BTreeSet::new();
    for l in left {
        for r in right {
            if l.len() + r.len() <= max_len {
                out.insert(l.join(r));
            }
        }
    }
    out
}

// Printing precedence: 0 sum, 1 juxtaposition, 2 star, 3 atoms and binders.

impl fmt::Display for NominalRegex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_nominal(self, 0, f)
    }
}

fn fmt_nominal(re: &NominalRegex, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let mine = match re {
        NominalRegex::Sum(..) => 0,
        NominalRegex::Concat(..) => 1,
        NominalRegex::Star(..) => 2,
        _ => 3,
    };
    if mine < prec {
        f.write_str("(")?;
    }
    match re {
        NominalRegex::Empty => f.write_str("0")?,
        NominalRegex::Epsilon => f.write_str("eps")?,
        NominalRegex::Letter(a) => write!(f, "{a}")?,
        NominalRegex::Name(n) => f.write_str(n)?,
        NominalRegex::Sum(l, r) => {
            fmt_nominal(l, 1, f)?;
            f.write_str(" + ")?;
            fmt_nominal(r, 0, f)?;
        }
        NominalRegex::Concat(l, r) => {
            fmt_nominal(l, 2, f)?;
            f.write_str(" ")?;
            fmt_nominal(r, 1, f)?;
        }
        NominalRegex::Star(b) => {
            fmt_nominal(b, 3, f)?;
            f.write_str("*")?;
        }
        NominalRegex::Binder(n, b) => {
            write!(f, "<{n}. ")?;
            fmt_nominal(b, 0, f)?;
            f.write_str(">")?;
        }
    }
    if mine < prec {
        f.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for CanonicalRegex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_nominal(&self.to_nominal(), 0, f)
    }
}

/// Parses over a declared alphabet.
pub fn parse_regex(text: &str, sigma: &Sigma) -> Result<NominalRegex, RegexError> {
    let tokens = lex(text)?;
    let mut parser = Parser { tokens, pos: 0, scope: Vec::new(), letters: Letters::Declared(sigma), end: text.len() };
    parser.parse_all()
}

/// Parses without a declared alphabet: unbound identifiers are split into
/// single-character letters, and the letters found are returned as Σ.
pub fn parse_regex_infer(text: &str) -> Result<(NominalRegex, Sigma), RegexError> {
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        scope: Vec::new(),
        letters: Letters::Inferred(BTreeSet::new()),
        end: text.len(),
    };
    let re = parser.parse_all()?;
    let Letters::Inferred(found) = parser.letters else { unreachable!() };
    Ok((re, found))
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Lexeme {
    Zero,
    Eps,
    Ident(String),
    Int(String),
    Plus,
    Star,
    LParen,
    RParen,
    LAngle,
    RAngle,
    Dot,
}

fn lex(text: &str) -> Result<Vec<(usize, Lexeme)>, RegexError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let simple = match c {
            '+' => Some(Lexeme::Plus),
            '*' => Some(Lexeme::Star),
            '(' => Some(Lexeme::LParen),
            ')' => Some(Lexeme::RParen),
            '<' | '⟨' => Some(Lexeme::LAngle),
            '>' | '⟩' => Some(Lexeme::RAngle),
            '.' => Some(Lexeme::Dot),
            'ε' => Some(Lexeme::Eps),
            '∅' => Some(Lexeme::Zero),
            _ => None,
        };
        if let Some(lexeme) = simple {
            chars.next();
            out.push((pos, lexeme));
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&(_, d)) = chars.peek() {
                if !d.is_ascii_digit() {
                    break;
                }
                s.push(d);
                chars.next();
            }
            let lexeme = if s == "0" {
                Lexeme::Zero
            } else if s.starts_with('0') {
                return Err(RegexError::Syntax { pos, msg: format!("bad integer `{s}`") });
            } else {
                Lexeme::Int(s)
            };
            out.push((pos, lexeme));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&(_, d)) = chars.peek() {
                if !(d.is_ascii_alphanumeric() || d == '_') {
                    break;
                }
                s.push(d);
                chars.next();
            }
            out.push((pos, if s == "eps" { Lexeme::Eps } else { Lexeme::Ident(s) }));
            continue;
        }
        return Err(RegexError::Syntax { pos, msg: format!("unexpected character `{c}`") });
    }
    Ok(out)
}

enum Letters<'a> {
    Declared(&'a Sigma),
    Inferred(Sigma),
}

struct Parser<'a> {
    tokens: Vec<(usize, Lexeme)>,
    pos: usize,
    scope: Vec<String>,
    letters: Letters<'a>,
    end: usize,
}

impl Parser<'_> {
    fn parse_all(&mut self) -> Result<NominalRegex, RegexError> {
        let re = self.sum()?;
        if let Some((pos, lx)) = self.tokens.get(self.pos) {
            return Err(RegexError::Syntax { pos: *pos, msg: format!("unexpected {lx:?}") });
        }
        Ok(re)
    }

    fn peek(&self) -> Option<&Lexeme> {
        self.tokens.get(self.pos).map(|(_, l)| l)
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn expect(&mut self, want: Lexeme) -> Result<(), RegexError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(RegexError::Syntax { pos: self.here(), msg: format!("expected {want:?}") })
        }
    }

    fn sum(&mut self) -> Result<NominalRegex, RegexError> {
        let mut parts = vec![self.juxtaposition()?];
        while self.peek() == Some(&Lexeme::Plus) {
            self.pos += 1;
            parts.push(self.juxtaposition()?);
        }
        Ok(fold_right(parts, NominalRegex::sum))
    }

    fn juxtaposition(&mut self) -> Result<NominalRegex, RegexError> {
        let mut parts = Vec::new();
        while matches!(
            self.peek(),
            Some(
                Lexeme::Zero
                    | Lexeme::Eps
                    | Lexeme::Ident(_)
                    | Lexeme::Int(_)
                    | Lexeme::LParen
                    | Lexeme::LAngle
            )
        ) {
            parts.extend(self.starred()?);
        }
        if parts.is_empty() {
            return Err(RegexError::Syntax { pos: self.here(), msg: "expected an expression".into() });
        }
        Ok(fold_right(parts, NominalRegex::concat))
    }

    /// An atom with trailing stars. Split identifiers yield several factors,
    /// and a star then applies to the last one only.
    fn starred(&mut self) -> Result<Vec<NominalRegex>, RegexError> {
        let mut atoms = self.atom()?;
        while self.peek() == Some(&Lexeme::Star) {
            self.pos += 1;
            let last = atoms.pop().expect("atom yields at least one factor");
            atoms.push(NominalRegex::star(last));
        }
        Ok(atoms)
    }

    fn atom(&mut self) -> Result<Vec<NominalRegex>, RegexError> {
        let pos = self.here();
        let Some((_, lexeme)) = self.tokens.get(self.pos).cloned() else {
            return Err(RegexError::Syntax { pos, msg: "unexpected end of input".into() });
        };
        self.pos += 1;
        match lexeme {
            Lexeme::Zero => Ok(vec![NominalRegex::Empty]),
            Lexeme::Eps => Ok(vec![NominalRegex::Epsilon]),
            Lexeme::Int(n) => Ok(vec![NominalRegex::Name(n)]),
            Lexeme::Ident(id) => self.resolve(&id, pos),
            Lexeme::LParen => {
                let inner = self.sum()?;
                self.expect(Lexeme::RParen)?;
                Ok(vec![inner])
            }
            Lexeme::LAngle => {
                let name_pos = self.here();
                let name = match self.tokens.get(self.pos).map(|(_, l)| l.clone()) {
                    Some(Lexeme::Ident(n)) | Some(Lexeme::Int(n)) => n,
                    _ => {
                        return Err(RegexError::Syntax { pos: name_pos, msg: "expected a binder name".into() })
                    }
                };
                self.pos += 1;
                if let Letters::Declared(sigma) = &self.letters {
                    if sigma.contains(&Symbol::new(&name)) {
                        return Err(RegexError::NameIsLetter { pos: name_pos, name });
                    }
                }
                self.expect(Lexeme::Dot)?;
                self.scope.push(name.clone());
                let body = self.sum();
                self.scope.pop();
                let body = body?;
                self.expect(Lexeme::RAngle)?;
                Ok(vec![NominalRegex::Binder(name, Box::new(body))])
            }
            other => Err(RegexError::Syntax { pos, msg: format!("unexpected {other:?}") }),
        }
    }

    fn resolve(&mut self, id: &str, pos: usize) -> Result<Vec<NominalRegex>, RegexError> {
        if self.scope.iter().any(|n| n == id) {
            return Ok(vec![NominalRegex::name(id)]);
        }
        match &mut self.letters {
            Letters::Declared(sigma) => {
                if sigma.contains(&Symbol::new(id)) {
                    return Ok(vec![NominalRegex::letter(id)]);
                }
                let mut pieces: Vec<(String, bool)> =
                    self.scope.iter().map(|n| (n.clone(), true)).collect();
                pieces.extend(sigma.iter().map(|a| (a.to_string(), false)));
                segment(id, &pieces)
                    .ok_or_else(|| RegexError::UnknownLetter { pos, name: id.to_string() })
            }
            Letters::Inferred(found) => {
                let mut pieces: Vec<(String, bool)> =
                    self.scope.iter().map(|n| (n.clone(), true)).collect();
                pieces.extend(('a'..='z').map(|c| (c.to_string(), false)));
                let factors = match segment(id, &pieces) {
                    Some(f) => f,
                    None if crate::words::is_letter(id) => vec![NominalRegex::letter(id)],
                    None => return Err(RegexError::UnknownLetter { pos, name: id.to_string() }),
                };
                for f in &factors {
                    if let NominalRegex::Letter(a) = f {
                        found.insert(a.clone());
                    }
                }
                Ok(factors)
            }
        }
    }
}

/// Splits `id` into the fewest pieces, preferring longer pieces first.
/// Each piece is `(text, is_name)`.
fn segment(id: &str, pieces: &[(String, bool)]) -> Option<Vec<NominalRegex>> {
    let n = id.len();
    // best[i] = fewest pieces covering id[i..]
    let mut best: Vec<Option<(usize, usize)>> = vec![None; n + 1];
    best[n] = Some((0, usize::MAX));
    for i in (0..n).rev() {
        let mut choice: Option<(usize, usize)> = None;
        for (k, (text, _)) in pieces.iter().enumerate() {
            if !id[i..].starts_with(text.as_str()) || text.is_empty() {
                continue;
            }
            let Some((rest, _)) = best[i + text.len()] else { continue };
            let better = match choice {
                None => true,
                Some((count, prev)) => {
                    rest + 1 < count || (rest + 1 == count && text.len() > pieces[prev].0.len())
                }
            };
            if better {
                choice = Some((rest + 1, k));
            }
        }
        best[i] = choice;
    }
    best[0]?;
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let (_, k) = best[i]?;
        let (text, is_name) = &pieces[k];
        out.push(if *is_name { NominalRegex::name(text) } else { NominalRegex::letter(text) });
        i += text.len();
    }
    Some(out)
}

fn fold_right(
    mut parts: Vec<NominalRegex>,
    join: fn(NominalRegex, NominalRegex) -> NominalRegex,
) -> NominalRegex {
    let mut acc = parts.pop().expect("non-empty");
    while let Some(p) = parts.pop() {
        acc = join(p, acc);
    }
    acc
}
