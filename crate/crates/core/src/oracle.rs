//! Brute-force ground truth: exhaustive enumeration of legal words and
//! membership by recursion on expression syntax. Nothing here goes through
//! automata, so it can catch mistakes in compilation, determinization,
//! minimization and the equivalence check.

use std::collections::BTreeSet;

use crate::automaton::NominalAutomaton;
use crate::regex::CanonicalRegex;
use crate::words::{Alphabet, Sigma, Token, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumBound {
    pub max_len: usize,
    pub max_depth: u32,
}

impl EnumBound {
    pub fn new(max_len: usize, max_depth: u32) -> Self {
        EnumBound { max_len, max_depth }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BruteVerdict {
    Agree,
    Witness(Word),
}

/// Legal words within the bound, by length and then lexicographically.
pub fn enumerate_legal(sigma: &Sigma, bound: EnumBound) -> Vec<Word> {
    let alphabet = Alphabet::new(sigma.clone(), bound.max_depth);
    let tokens = alphabet.tokens();
    let mut out = vec![Word::empty()];
    let mut level = vec![Word::empty()];
    for _ in 0..bound.max_len {
        // legality is prefix-closed, so extending legal words finds them all
        level = level
            .iter()
            .flat_map(|w| tokens.iter().map(move |t| w.pushed(t.clone())))
            .filter(|w| w.is_legal(&alphabet))
            .collect();
        out.extend(level.iter().cloned());
    }
    out
}

/// Counts what [`enumerate_legal`] should return, by recursion on the open
/// binder counter.
pub fn count_legal(letters: usize, bound: EnumBound) -> u128 {
    fn go(len: usize, open: u32, letters: u128, depth: u32) -> u128 {
        if len == 0 {
            return 1;
        }
        let mut total = (letters + open as u128) * go(len - 1, open, letters, depth);
        if open < depth {
            total += go(len - 1, open + 1, letters, depth);
        }
        if open > 0 {
            total += go(len - 1, open - 1, letters, depth);
        }
        total
    }
    (0..=bound.max_len).map(|l| go(l, 0, letters as u128, bound.max_depth)).sum()
}

/// Does the canonical expression denote `word`? Computed as the set of
/// spans `(i, j)` of the word each subexpression matches.
pub fn brute_membership(cne: &CanonicalRegex, word: &Word) -> bool {
    let w = word.tokens();
    spans(cne, w)[0][w.len()]
}

type Spans = Vec<Vec<bool>>;

fn spans(re: &CanonicalRegex, w: &[Token]) -> Spans {
    let n = w.len();
    let mut m = vec![vec![false; n + 1]; n + 1];
    match re {
        CanonicalRegex::Empty => {}
        CanonicalRegex::Epsilon => (0..=n).for_each(|i| m[i][i] = true),
        CanonicalRegex::Letter(a) => {
            for i in 0..n {
                m[i][i + 1] = w[i] == Token::Letter(a.clone());
            }
        }
        CanonicalRegex::Idx(k) => {
            for i in 0..n {
                m[i][i + 1] = w[i] == Token::Idx(*k);
            }
        }
        CanonicalRegex::Sum(l, r) => {
            let (a, b) = (spans(l, w), spans(r, w));
            for i in 0..=n {
                for j in i..=n {
                    m[i][j] = a[i][j] || b[i][j];
                }
            }
        }
        CanonicalRegex::Concat(l, r) => m = compose(&spans(l, w), &spans(r, w)),
        CanonicalRegex::Star(b) => {
            let body = spans(b, w);
            (0..=n).for_each(|i| m[i][i] = true);
            // spans grow left to right, so one pass in order of j closes them
            for j in 0..=n {
                for i in (0..=j).rev() {
                    if !m[i][j] {
                        m[i][j] = (i..j).any(|k| m[i][k] && body[k][j]);
                    }
                }
            }
        }
        CanonicalRegex::Binder(_, b) => {
            let body = spans(b, w);
            for i in 0..n {
                for j in i + 2..=n {
                    m[i][j] = w[i] == Token::Open && w[j - 1] == Token::Close && body[i + 1][j - 1];
                }
            }
        }
    }
    m
}

fn compose(a: &Spans, b: &Spans) -> Spans {
    let n = a.len() - 1;
    let mut m = vec![vec![false; n + 1]; n + 1];
    for i in 0..=n {
        for k in i..=n {
            if a[i][k] {
                for j in k..=n {
                    m[i][j] |= b[k][j];
                }
            }
        }
    }
    m
}

/// First enumerated word on which the automaton and the expression disagree.
/// Expression membership is read off the bounded denotation.
pub fn brute_equivalence(m: &NominalAutomaton, cne: &CanonicalRegex, bound: EnumBound) -> BruteVerdict {
    let denotation: BTreeSet<Word> = cne.denote_bounded(bound.max_len);
    for w in enumerate_legal(m.sigma(), bound) {
        let accepted = m.accepts(&w).expect("enumerated words are legal over the automaton's letters");
        if accepted != denotation.contains(&w) {
            return BruteVerdict::Witness(w);
        }
    }
    BruteVerdict::Agree
}
