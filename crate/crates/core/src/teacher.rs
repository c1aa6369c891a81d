//! The teacher: knows the target language and answers queries about it.

use std::collections::VecDeque;
use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::automaton::{self, AutomatonError, Equivalence, NominalAutomaton, Strategy};
use crate::regex::CanonicalRegex;
use crate::words::{Sigma, Word};

/// Three-valued membership answer: in the language, a proper prefix of a
/// word in the language, or neither.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Answer {
    #[serde(rename = "1")]
    One,
    P,
    #[serde(rename = "0")]
    Zero,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::One => "1",
            Answer::P => "P",
            Answer::Zero => "0",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TeacherError {
    #[error("membership query on an illegal word `{word}`: {source}")]
    IllegalQuery { word: String, source: AutomatonError },
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    Member,
    Equiv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub kind: QueryKind,
    pub input: Value,
    pub answer: Value,
    pub index: usize,
}

#[derive(Clone, Debug)]
pub struct Teacher {
    target: NominalAutomaton,
    strategy: Strategy,
    // states from which some final state is reachable
    live: Vec<bool>,
    membership_queries: usize,
    equivalence_queries: usize,
    log: Vec<QueryRecord>,
}

impl Teacher {
    /// Wraps a target automaton; it is determinized if it is not already.
    pub fn new(target: &NominalAutomaton, strategy: Strategy) -> Self {
        let target = if target.is_deterministic() { target.clone() } else { target.determinize() };
        let live = co_reachable(&target);
        Teacher { target, strategy, live, membership_queries: 0, equivalence_queries: 0, log: Vec::new() }
    }

    pub fn from_regex(cne: &CanonicalRegex, sigma: &Sigma, strategy: Strategy) -> Self {
        Teacher::new(&automaton::compile(cne, sigma), strategy)
    }

    pub fn target(&self) -> &NominalAutomaton {
        &self.target
    }

    pub fn sigma(&self) -> &Sigma {
        self.target.sigma()
    }

    /// Deepest binder nesting any word of the target can have.
    pub fn theta_bound(&self) -> u32 {
        self.target.n()
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn membership_queries(&self) -> usize {
        self.membership_queries
    }

    pub fn equivalence_queries(&self) -> usize {
        self.equivalence_queries
    }

    pub fn log(&self) -> &[QueryRecord] {
        &self.log
    }

    /// Writes the query log as JSON lines.
    pub fn write_log(&self, mut out: impl io::Write) -> io::Result<()> {
        for record in &self.log {
            serde_json::to_writer(&mut out, record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Answers without touching counters or the log.
    pub fn classify(&self, word: &Word) -> Result<Answer, TeacherError> {
        let reached = match self.target.accepts(word) {
            Err(source) => return Err(TeacherError::IllegalQuery { word: word.serialize(), source }),
            Ok(true) => return Ok(Answer::One),
            Ok(false) => self.target.run(word),
        };
        let Some(q) = reached else { return Ok(Answer::Zero) };
        let extendable = self
            .target
            .edges(q)
            .iter()
            .any(|(_, to)| self.live[*to]);
        Ok(if extendable { Answer::P } else { Answer::Zero })
    }

    pub fn membership(&mut self, word: &Word) -> Result<Answer, TeacherError> {
        let answer = self.classify(word)?;
        self.membership_queries += 1;
        log::trace!("member {} -> {answer}", word);
        self.record(QueryKind::Member, json!(word.serialize()), json!(answer.to_string()));
        Ok(answer)
    }

    /// Language equality over legal words; counterexamples are picked by the
    /// teacher's strategy.
    pub fn equivalence(&mut self, hypothesis: &NominalAutomaton) -> Result<Equivalence, TeacherError> {
        let verdict = automaton::equivalence(hypothesis, &self.target, self.strategy)?;
        self.equivalence_queries += 1;
        let answer = match &verdict {
            Equivalence::Equivalent => json!("yes"),
            Equivalence::Counterexample(c) => json!({ "counterexample": c.serialize() }),
        };
        log::debug!("equivalence query {}: {answer}", self.equivalence_queries);
        let input = json!({ "states": hypothesis.state_count(), "n": hypothesis.n() });
        self.record(QueryKind::Equiv, input, answer);
        Ok(verdict)
    }

    /// True if any logged membership query contained a binder token.
    pub fn queried_binders(&self) -> bool {
        self.log.iter().any(|r| {
            r.kind == QueryKind::Member
                && r.input.as_str().is_some_and(|w| w.split(' ').any(|t| t == "<<" || t == ">>"))
        })
    }

    fn record(&mut self, kind: QueryKind, input: Value, answer: Value) {
        let index = self.log.len();
        self.log.push(QueryRecord { kind, input, answer, index });
    }
}

fn co_reachable(m: &NominalAutomaton) -> Vec<bool> {
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); m.state_count()];
    for q in 0..m.state_count() {
        for (_, to) in m.edges(q) {
            preds[*to].push(q);
        }
    }
    let mut live = vec![false; m.state_count()];
    let mut queue: VecDeque<usize> = m.finals().iter().copied().collect();
    for q in &queue {
        live[*q] = true;
    }
    while let Some(q) = queue.pop_front() {
        for p in &preds[q] {
            if !live[*p] {
                live[*p] = true;
                queue.push_back(*p);
            }
        }
    }
    live
}
