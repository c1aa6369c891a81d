//! Nominal observation tables and the learning loop.
//!
//! Rows are indexed by `S ∪ S·A_n`, columns by `E`. A cell holds the teacher's
//! answer for the concatenation, or `⊥` when the concatenation is not a legal
//! word over the current alphabet; `⊥` is decided locally and never asked.
//! Two rows are equivalent when their cells agree and their labels end with
//! the same number of open binders.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};

use serde::Serialize;
use thiserror::Error;

use crate::automaton::{AutomatonError, Equivalence, Label, NominalAutomaton};
use crate::teacher::{Answer, Teacher, TeacherError};
use crate::words::{concat, Alphabet, Sigma, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Cell {
    #[serde(rename = "1")]
    One,
    P,
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "⊥")]
    Bottom,
}

impl From<Answer> for Cell {
    fn from(a: Answer) -> Self {
        match a {
            Answer::One => Cell::One,
            Answer::P => Cell::P,
            Answer::Zero => Cell::Zero,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cell::One => "1",
            Cell::P => "P",
            Cell::Zero => "0",
            Cell::Bottom => "⊥",
        })
    }
}

/// Row contents plus the register count of the row's label.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Row {
    pub values: Vec<Cell>,
    pub reg: u32,
}

#[derive(Debug, Error)]
pub enum LearnError {
    #[error(transparent)]
    Teacher(#[from] TeacherError),
    #[error("table is not closed and consistent")]
    NotClosedOrConsistent,
    #[error("no answer after {0} rounds")]
    RoundCap(usize),
    #[error("hypothesis construction failed: {0}")]
    Automaton(#[from] AutomatonError),
}

#[derive(Clone, Debug)]
pub struct ObservationTable {
    alphabet: Alphabet,
    s: Vec<Word>,
    s_index: HashSet<Word>,
    e: Vec<Word>,
    answers: HashMap<Word, Cell>,
}

impl ObservationTable {
    /// `S = E = {ε}` with `n = 0`, filled by membership queries.
    pub fn init(teacher: &mut Teacher) -> Result<Self, LearnError> {
        let mut table = ObservationTable {
            alphabet: Alphabet::new(teacher.sigma().clone(), 0),
            s: vec![Word::empty()],
            s_index: HashSet::from([Word::empty()]),
            e: vec![Word::empty()],
            answers: HashMap::new(),
        };
        table.fill(teacher)?;
        Ok(table)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn sigma(&self) -> &Sigma {
        &self.alphabet.sigma
    }

    pub fn n(&self) -> u32 {
        self.alphabet.n
    }

    pub fn s(&self) -> &[Word] {
        &self.s
    }

    pub fn e(&self) -> &[Word] {
        &self.e
    }

    pub fn contains_s(&self, w: &Word) -> bool {
        self.s_index.contains(w)
    }

    /// Legal one-token extensions of `S` that are not in `S`, in scan order.
    pub fn boundary(&self) -> Vec<Word> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for s in &self.s {
            for t in self.alphabet.tokens_at(s.reg().expect("S holds legal words")) {
                let x = s.pushed(t);
                if !self.s_index.contains(&x) && seen.insert(x.clone()) {
                    out.push(x);
                }
            }
        }
        out
    }

    /// `S` followed by the boundary: every label with a non-trivial row.
    pub fn labels(&self) -> Vec<Word> {
        let mut out = self.s.clone();
        out.extend(self.boundary());
        out
    }

    /// `None` marks an illegal label, whose row is all `⊥`.
    pub fn reg_of(&self, x: &Word) -> Option<u32> {
        x.is_legal(&self.alphabet).then(|| x.reg().expect("legal word"))
    }

    pub fn cell(&self, x: &Word, e: &Word) -> Cell {
        match concat(x, e, &self.alphabet) {
            None => Cell::Bottom,
            Some(w) => *self.answers.get(&w).expect("table filled before reading"),
        }
    }

    pub fn row(&self, x: &Word) -> Option<Row> {
        let reg = self.reg_of(x)?;
        Some(Row { values: self.e.iter().map(|e| self.cell(x, e)).collect(), reg })
    }

    /// Asks the teacher for every legal cell not answered yet.
    pub fn fill(&mut self, teacher: &mut Teacher) -> Result<(), LearnError> {
        for x in self.labels() {
            for e in &self.e {
                if let Some(w) = concat(&x, e, &self.alphabet) {
                    if let Entry::Vacant(slot) = self.answers.entry(w) {
                        let a = teacher.membership(slot.key())?;
                        slot.insert(a.into());
                    }
                }
            }
        }
        Ok(())
    }

    fn s_rows(&self) -> HashSet<Row> {
        self.s.iter().filter_map(|s| self.row(s)).collect()
    }

    /// First boundary label whose row matches no row of `S`.
    pub fn check_closed(&self) -> Option<Word> {
        let rows = self.s_rows();
        self.boundary().into_iter().find(|x| !rows.contains(&self.row(x).expect("boundary is legal")))
    }

    /// Every `α·e` that separates two equivalent rows of `S`, in scan order:
    /// pairs of `S` in insertion order, then tokens, then columns.
    pub fn consistency_violations(&self) -> Vec<Word> {
        let mut out: Vec<Word> = Vec::new();
        let rows: Vec<Row> = self.s.iter().map(|s| self.row(s).expect("S holds legal words")).collect();
        for i in 0..self.s.len() {
            for j in i + 1..self.s.len() {
                if rows[i] != rows[j] {
                    continue;
                }
                for t in self.alphabet.tokens_at(rows[i].reg) {
                    let (x, y) = (self.s[i].pushed(t.clone()), self.s[j].pushed(t.clone()));
                    for e in &self.e {
                        if self.cell(&x, e) != self.cell(&y, e) {
                            let ae = Word::new(vec![t.clone()]).join(e);
                            if !out.contains(&ae) {
                                out.push(ae);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn check_consistent(&self) -> Option<Word> {
        self.consistency_violations().into_iter().next()
    }

    pub fn is_closed(&self) -> bool {
        self.check_closed().is_none()
    }

    pub fn is_consistent(&self) -> bool {
        self.check_consistent().is_none()
    }

    pub fn extend_close(&mut self, s: Word, teacher: &mut Teacher) -> Result<(), LearnError> {
        if self.s_index.insert(s.clone()) {
            self.s.push(s);
        }
        self.fill(teacher)
    }

    pub fn extend_consistent(&mut self, ae: Word, teacher: &mut Teacher) -> Result<(), LearnError> {
        if !self.e.contains(&ae) {
            self.e.push(ae);
        }
        self.fill(teacher)
    }

    /// Adds the counterexample and its prefixes to `S`, first widening the
    /// alphabet to the counterexample's nesting depth.
    pub fn handle_counterexample(&mut self, c: &Word, teacher: &mut Teacher) -> Result<(), LearnError> {
        let depth = c.depth().map_err(|e| {
            LearnError::Teacher(TeacherError::IllegalQuery { word: c.serialize(), source: e.into() })
        })?;
        self.alphabet.n = self.alphabet.n.max(depth);
        for p in c.prefixes() {
            if self.s_index.insert(p.clone()) {
                self.s.push(p);
            }
        }
        self.fill(teacher)
    }

    /// Hypothesis states: distinct rows of `S`, numbered by first occurrence.
    fn states(&self) -> (Vec<Row>, HashMap<Row, usize>) {
        let mut order = Vec::new();
        let mut index = HashMap::new();
        for s in &self.s {
            let r = self.row(s).expect("S holds legal words");
            if !index.contains_key(&r) {
                index.insert(r.clone(), order.len());
                order.push(r);
            }
        }
        (order, index)
    }

    /// The hypothesis state that row `x` stands for.
    pub fn state_of(&self, x: &Word) -> Option<usize> {
        self.states().1.get(&self.row(x)?).copied()
    }

    pub fn to_automaton(&self) -> Result<NominalAutomaton, LearnError> {
        if !self.is_closed() || !self.is_consistent() {
            return Err(LearnError::NotClosedOrConsistent);
        }
        let (rows, index) = self.states();
        let mut reps: Vec<Option<&Word>> = vec![None; rows.len()];
        for s in &self.s {
            let q = index[&self.row(s).expect("legal")];
            reps[q].get_or_insert(s);
        }
        let mut m = NominalAutomaton::new(self.sigma().clone(), self.n());
        for r in rows.iter().skip(1) {
            m.add_state(r.reg)?;
        }
        for (q, r) in rows.iter().enumerate() {
            // E[0] is ε
            if r.reg == 0 && r.values[0] == Cell::One {
                m.set_final(q)?;
            }
            let s = reps[q].expect("every state has a representative");
            for t in self.alphabet.tokens_at(r.reg) {
                let next = self.row(&s.pushed(t.clone())).expect("legal extension");
                m.add_transition(q, Label::from(t), index[&next])?;
            }
        }
        Ok(m)
    }

    /// Number of cells with a legal label.
    pub fn cell_count(&self) -> usize {
        self.labels().len() * self.e.len()
    }

    /// Plain-text table: register count, label, one column per `E` entry;
    /// `S` above the rule, the boundary below.
    pub fn render_grid(&self) -> String {
        let header: Vec<String> = self.e.iter().map(|e| e.to_string()).collect();
        let line = |reg: String, label: String, cells: Vec<String>| {
            let mut l = format!("{reg:>3} | {label:<16} |");
            for (c, h) in cells.iter().zip(&header) {
                let w = h.chars().count().max(1);
                let _ = write!(l, " {c:^w$} |");
            }
            l.trim_end().to_string()
        };
        let mut out = String::new();
        let top = line("reg".into(), "".into(), header.clone());
        let rule = "-".repeat(top.chars().count());
        let _ = writeln!(out, "{top}\n{rule}");
        let body = |x: &Word| {
            let r = self.row(x).expect("legal label");
            line(r.reg.to_string(), x.to_string(), r.values.iter().map(Cell::to_string).collect())
        };
        for s in &self.s {
            let _ = writeln!(out, "{}", body(s));
        }
        let _ = writeln!(out, "{rule}");
        for x in self.boundary() {
            let _ = writeln!(out, "{}", body(&x));
        }
        out
    }
}

#[derive(Clone, Debug, Default)]
pub struct LearnConfig {
    pub max_rounds: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundSnapshot {
    pub round: usize,
    pub s_size: usize,
    pub e_size: usize,
    pub n: u32,
    pub hypothesis_states: usize,
    pub counterexample: Option<String>,
    pub grid: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunStats {
    pub membership_count: usize,
    pub equivalence_count: usize,
    pub s_size: usize,
    pub e_size: usize,
    pub final_n: u32,
    pub cell_count: usize,
    pub max_counterexample_len: usize,
    pub counterexamples: Vec<String>,
    pub rounds: Vec<RoundSnapshot>,
}

pub fn run_nlstar(teacher: &mut Teacher, config: &LearnConfig) -> Result<(NominalAutomaton, RunStats), LearnError> {
    run_nlstar_with(teacher, config, |_, _| {})
}

/// Runs the learning loop, handing every closed and consistent table and its
/// hypothesis to `observe` before the equivalence query.
pub fn run_nlstar_with(
    teacher: &mut Teacher,
    config: &LearnConfig,
    mut observe: impl FnMut(&ObservationTable, &NominalAutomaton),
) -> Result<(NominalAutomaton, RunStats), LearnError> {
    let mut table = ObservationTable::init(teacher)?;
    let mut rounds = Vec::new();
    let mut counterexamples: Vec<Word> = Vec::new();
    loop {
        loop {
            let mut changed = false;
            if let Some(s) = table.check_closed() {
                log::debug!("not closed: adding {s} to S");
                table.extend_close(s, teacher)?;
                changed = true;
            }
            if let Some(ae) = table.check_consistent() {
                log::debug!("not consistent: adding {ae} to E");
                table.extend_consistent(ae, teacher)?;
                changed = true;
            }
            if !changed {
                break;
            }
        }
        let hypothesis = table.to_automaton()?;
        observe(&table, &hypothesis);
        let verdict = teacher.equivalence(&hypothesis)?;
        let mut snapshot = RoundSnapshot {
            round: rounds.len() + 1,
            s_size: table.s().len(),
            e_size: table.e().len(),
            n: table.n(),
            hypothesis_states: hypothesis.state_count(),
            counterexample: None,
            grid: table.render_grid(),
        };
        match verdict {
            Equivalence::Equivalent => {
                rounds.push(snapshot);
                let stats = RunStats {
                    membership_count: teacher.membership_queries(),
                    equivalence_count: teacher.equivalence_queries(),
                    s_size: table.s().len(),
                    e_size: table.e().len(),
                    final_n: table.n(),
                    cell_count: table.cell_count(),
                    max_counterexample_len: counterexamples.iter().map(Word::len).max().unwrap_or(0),
                    counterexamples: counterexamples.iter().map(Word::serialize).collect(),
                    rounds,
                };
                return Ok((hypothesis, stats));
            }
            Equivalence::Counterexample(c) => {
                if counterexamples.contains(&c) {
                    log::warn!("counterexample {c} returned again");
                }
                snapshot.counterexample = Some(c.serialize());
                rounds.push(snapshot);
                if config.max_rounds.is_some_and(|cap| rounds.len() >= cap) {
                    return Err(LearnError::RoundCap(rounds.len()));
                }
                table.handle_counterexample(&c, teacher)?;
                counterexamples.push(c);
            }
        }
    }
}

/// Checks the hypothesis against the table it was built from: every label
/// reaches the state of its row, and acceptance of every legal `w·u` with
/// `u ∈ E` matches the `1` cells. Returns one message per violation.
pub fn hypothesis_violations(table: &ObservationTable, hypothesis: &NominalAutomaton) -> Vec<String> {
    let mut out = Vec::new();
    for w in table.labels() {
        let reached = hypothesis.run(&w);
        if reached != table.state_of(&w) {
            out.push(format!("{w} reaches {reached:?}, row is state {:?}", table.state_of(&w)));
        }
        for u in table.e() {
            if let Some(wu) = concat(&w, u, table.alphabet()) {
                let accepted = hypothesis.accepts(&wu).unwrap_or(false);
                if accepted != (table.cell(&w, u) == Cell::One) {
                    out.push(format!("{wu}: accepted={accepted}, cell={}", table.cell(&w, u)));
                }
            }
        }
    }
    out
}
