//! Nominal automata with binders.
//!
//! Each state carries a layer, the number of registers it holds. `Open`
//! moves one layer up, `Close` one layer down, every other label stays on the
//! same layer, and an index transition `i` needs `i <= layer`. Initial and
//! final states live on layer 0.
//!
//! Because canonical words allocate a globally fresh name at every `Open`,
//! register contents are always pairwise distinct and an index token matches
//! exactly one register. Register assignments therefore never need to be
//! materialized: the layer of the current state is the whole configuration,
//! and the automaton behaves as a finite automaton over `A_n` restricted to
//! legal words. Equivalence, determinization and minimization are all
//! computed on that finite encoding.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::regex::CanonicalRegex;
use crate::words::{Alphabet, Sigma, Symbol, Token, Word, WordError};

pub type StateId = usize;

/// Transition label. `Eps` moves consume nothing and only appear in
/// compiled automata.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Letter(Symbol),
    Idx(u32),
    Open,
    Close,
    Eps,
}

impl From<Token> for Label {
    fn from(t: Token) -> Self {
        match t {
            Token::Letter(a) => Label::Letter(a),
            Token::Idx(i) => Label::Idx(i),
            Token::Open => Label::Open,
            Token::Close => Label::Close,
        }
    }
}

impl From<&Token> for Label {
    fn from(t: &Token) -> Self {
        Label::from(t.clone())
    }
}

impl Label {
    fn render(&self) -> String {
        match self {
            Label::Letter(a) => a.to_string(),
            Label::Idx(i) => i.to_string(),
            Label::Open => "≪".into(),
            Label::Close => "≫".into(),
            Label::Eps => "ε".into(),
        }
    }
}

/// How the teacher picks among the words that separate two automata.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Shortest word, ties broken lexicographically in token order.
    #[default]
    Shortest,
    /// Among the shortest words, one with the deepest binder nesting.
    MaxFresh,
    /// Among the shortest words, one with the shallowest binder nesting.
    MinFresh,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Equivalence {
    Equivalent,
    Counterexample(Word),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomatonError {
    #[error("state {0} does not exist")]
    NoSuchState(StateId),
    #[error("layer {layer} exceeds the register bound {n}")]
    LayerOutOfRange { layer: u32, n: u32 },
    #[error("transition {from} --{label:?}--> {to} breaks the layer discipline")]
    LayerViolation { from: StateId, label: Label, to: StateId },
    #[error("final state {0} is not on layer 0")]
    FinalNotAtLayerZero(StateId),
    #[error("letter `{0}` is not in the alphabet")]
    UnknownLetter(Symbol),
    #[error("illegal word: {0}")]
    IllegalWord(#[from] WordError),
    #[error("automata are over different alphabets")]
    AlphabetMismatch,
    #[error("operation needs a deterministic automaton")]
    NotDeterministic,
    #[error("malformed automaton JSON: {0}")]
    Schema(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NominalAutomaton {
    sigma: Sigma,
    n: u32,
    layers: Vec<u32>,
    initial: StateId,
    finals: BTreeSet<StateId>,
    edges: Vec<Vec<(Label, StateId)>>,
}

impl NominalAutomaton {
    /// A one-state automaton (state 0, layer 0, not accepting).
    pub fn new(sigma: Sigma, n: u32) -> Self {
        NominalAutomaton {
            sigma,
            n,
            layers: vec![0],
            initial: 0,
            finals: BTreeSet::new(),
            edges: vec![Vec::new()],
        }
    }

    pub fn sigma(&self) -> &Sigma {
        &self.sigma
    }

    /// Highest layer a state may have.
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.sigma.clone(), self.n)
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn finals(&self) -> &BTreeSet<StateId> {
        &self.finals
    }

    pub fn is_final(&self, q: StateId) -> bool {
        self.finals.contains(&q)
    }

    pub fn layer(&self, q: StateId) -> u32 {
        self.layers[q]
    }

    pub fn state_count(&self) -> usize {
        self.layers.len()
    }

    pub fn edges(&self, q: StateId) -> &[(Label, StateId)] {
        &self.edges[q]
    }

    pub fn transition_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn add_state(&mut self, layer: u32) -> Result<StateId, AutomatonError> {
        if layer > self.n {
            return Err(AutomatonError::LayerOutOfRange { layer, n: self.n });
        }
        self.layers.push(layer);
        self.edges.push(Vec::new());
        Ok(self.layers.len() - 1)
    }

    pub fn set_final(&mut self, q: StateId) -> Result<(), AutomatonError> {
        self.check_state(q)?;
        if self.layers[q] != 0 {
            return Err(AutomatonError::FinalNotAtLayerZero(q));
        }
        self.finals.insert(q);
        Ok(())
    }

    pub fn add_transition(&mut self, from: StateId, label: Label, to: StateId) -> Result<(), AutomatonError> {
        self.check_state(from)?;
        self.check_state(to)?;
        let (lf, lt) = (self.layers[from], self.layers[to]);
        let ok = match &label {
            Label::Open => lt == lf + 1,
            Label::Close => lf > 0 && lt + 1 == lf,
            Label::Idx(i) => *i >= 1 && *i <= lf && lt == lf,
            Label::Letter(a) => {
                if !self.sigma.contains(a) {
                    return Err(AutomatonError::UnknownLetter(a.clone()));
                }
                lt == lf
            }
            Label::Eps => lt == lf,
        };
        if !ok {
            return Err(AutomatonError::LayerViolation { from, label, to });
        }
        if !self.edges[from].contains(&(label.clone(), to)) {
            self.edges[from].push((label, to));
        }
        Ok(())
    }

    fn check_state(&self, q: StateId) -> Result<(), AutomatonError> {
        if q < self.layers.len() {
            Ok(())
        } else {
            Err(AutomatonError::NoSuchState(q))
        }
    }

    /// Drops states unreachable from the initial state, keeping the relative
    /// order of the rest.
    pub fn trim(&self) -> NominalAutomaton {
        let mut reached = vec![false; self.state_count()];
        reached[self.initial] = true;
        let mut stack = vec![self.initial];
        while let Some(q) = stack.pop() {
            for (_, to) in &self.edges[q] {
                if !reached[*to] {
                    reached[*to] = true;
                    stack.push(*to);
                }
            }
        }
        let mut rename = vec![usize::MAX; self.state_count()];
        let kept: Vec<StateId> = (0..self.state_count()).filter(|q| reached[*q]).collect();
        for (new, old) in kept.iter().enumerate() {
            rename[*old] = new;
        }
        NominalAutomaton {
            sigma: self.sigma.clone(),
            n: self.n,
            layers: kept.iter().map(|q| self.layers[*q]).collect(),
            initial: rename[self.initial],
            finals: self.finals.iter().filter(|q| reached[**q]).map(|q| rename[*q]).collect(),
            edges: kept
                .iter()
                .map(|q| self.edges[*q].iter().map(|(l, to)| (l.clone(), rename[*to])).collect())
                .collect(),
        }
    }

    /// At most one successor per label and no ε-moves.
    pub fn is_deterministic(&self) -> bool {
        self.edges.iter().all(|out| {
            let mut seen = BTreeSet::new();
            out.iter().all(|(l, _)| *l != Label::Eps && seen.insert(l))
        })
    }

    /// The unique successor of `q` under `token`, for deterministic automata.
    pub fn step(&self, q: StateId, token: &Token) -> Option<StateId> {
        let label = Label::from(token);
        self.edges[q].iter().find(|(l, _)| *l == label).map(|(_, to)| *to)
    }

    /// Runs a deterministic automaton; `None` if some transition is missing.
    pub fn run(&self, word: &Word) -> Option<StateId> {
        word.tokens().iter().try_fold(self.initial, |q, t| self.step(q, t))
    }

    fn eps_closure(&self, seeds: impl IntoIterator<Item = StateId>) -> Vec<StateId> {
        let mut seen: BTreeSet<StateId> = BTreeSet::new();
        let mut stack: Vec<StateId> = Vec::new();
        for q in seeds {
            if seen.insert(q) {
                stack.push(q);
            }
        }
        while let Some(q) = stack.pop() {
            for (l, to) in &self.edges[q] {
                if *l == Label::Eps && seen.insert(*to) {
                    stack.push(*to);
                }
            }
        }
        seen.into_iter().collect()
    }

    fn step_set(&self, set: &[StateId], label: &Label) -> Vec<StateId> {
        let targets = set
            .iter()
            .flat_map(|q| self.edges[*q].iter().filter(|(l, _)| l == label).map(|(_, to)| *to));
        self.eps_closure(targets.collect::<Vec<_>>())
    }

    fn any_final(&self, set: &[StateId]) -> bool {
        set.iter().any(|q| self.finals.contains(q))
    }

    /// Configuration-based acceptance with ε-moves.
    ///
    /// The word must be scoped legally and use letters of Σ. Words nested
    /// deeper than the automaton's layers are simply rejected.
    pub fn accepts(&self, word: &Word) -> Result<bool, AutomatonError> {
        word.profile()?;
        for t in word.tokens() {
            if let Token::Letter(a) = t {
                if !self.sigma.contains(a) {
                    return Err(AutomatonError::UnknownLetter(a.clone()));
                }
            }
        }
        let mut current = self.eps_closure([self.initial]);
        for t in word.tokens() {
            current = self.step_set(&current, &Label::from(t));
            if current.is_empty() {
                return Ok(false);
            }
        }
        Ok(self.any_final(&current))
    }

    /// Subset construction over the legal labels of each layer.
    ///
    /// The result is total on legal labels: an empty subset becomes a sink,
    /// one per layer. Only reachable subsets are built.
    pub fn determinize(&self) -> NominalAutomaton {
        let alphabet = self.alphabet();
        let start = (self.eps_closure([self.initial]), 0u32);
        let mut index: HashMap<(Vec<StateId>, u32), StateId> = HashMap::new();
        let mut order: Vec<(Vec<StateId>, u32)> = Vec::new();
        let mut out = NominalAutomaton::new(self.sigma.clone(), self.n);
        index.insert(start.clone(), 0);
        order.push(start);
        let mut k = 0;
        while k < order.len() {
            let (set, layer) = order[k].clone();
            if self.any_final(&set) {
                out.finals.insert(k);
            }
            for t in alphabet.tokens_at(layer) {
                let label = Label::from(&t);
                let next_layer = match t {
                    Token::Open => layer + 1,
                    Token::Close => layer - 1,
                    _ => layer,
                };
                let key = (self.step_set(&set, &label), next_layer);
                let id = match index.get(&key) {
                    Some(id) => *id,
                    None => {
                        let id = out.add_state(next_layer).expect("layer within bound");
                        index.insert(key.clone(), id);
                        order.push(key);
                        id
                    }
                };
                out.edges[k].push((label, id));
            }
            k += 1;
        }
        out
    }

    /// Minimal deterministic automaton, total on legal labels, with states
    /// numbered in breadth-first order from the initial state.
    pub fn minimize(&self) -> Result<NominalAutomaton, AutomatonError> {
        if !self.is_deterministic() {
            return Err(AutomatonError::NotDeterministic);
        }
        let total = Total::build(self);
        let classes = total.refine();
        Ok(total.quotient(&classes, self.sigma.clone(), self.n))
    }

    /// Checks structural equality up to renaming of reachable states.
    pub fn is_isomorphic(&self, other: &NominalAutomaton) -> bool {
        if !self.is_deterministic() || !other.is_deterministic() || self.sigma != other.sigma {
            return false;
        }
        let mut map: HashMap<StateId, StateId> = HashMap::new();
        let mut back: HashMap<StateId, StateId> = HashMap::new();
        let mut queue = VecDeque::from([(self.initial, other.initial)]);
        map.insert(self.initial, other.initial);
        back.insert(other.initial, self.initial);
        while let Some((p, q)) = queue.pop_front() {
            if self.layers[p] != other.layers[q] || self.is_final(p) != other.is_final(q) {
                return false;
            }
            let mut lp: Vec<&(Label, StateId)> = self.edges[p].iter().collect();
            let mut lq: Vec<&(Label, StateId)> = other.edges[q].iter().collect();
            lp.sort();
            lq.sort();
            if lp.len() != lq.len() {
                return false;
            }
            for ((la, pa), (lb, qb)) in lp.into_iter().zip(lq) {
                if la != lb {
                    return false;
                }
                match (map.get(pa), back.get(qb)) {
                    (None, None) => {
                        map.insert(*pa, *qb);
                        back.insert(*qb, *pa);
                        queue.push_back((*pa, *qb));
                    }
                    (Some(x), Some(y)) if x == qb && y == pa => {}
                    _ => return false,
                }
            }
        }
        true
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph nominal_automaton {\n    rankdir=LR;\n    start [shape=point];\n");
        for q in 0..self.state_count() {
            let shape = if self.is_final(q) { "doublecircle" } else { "circle" };
            let _ = writeln!(out, "    q{q} [shape={shape}, label=\"q{q}\\n‖{}‖\"];", self.layers[q]);
        }
        let _ = writeln!(out, "    start -> q{};", self.initial);
        for q in 0..self.state_count() {
            // group parallel edges into one arrow
            let mut grouped: Vec<(StateId, Vec<String>)> = Vec::new();
            for (l, to) in &self.edges[q] {
                match grouped.iter_mut().find(|(t, _)| t == to) {
                    Some((_, ls)) => ls.push(l.render()),
                    None => grouped.push((*to, vec![l.render()])),
                }
            }
            for (to, labels) in grouped {
                let _ = writeln!(out, "    q{q} -> q{to} [label=\"{}\"];", labels.join(", "));
            }
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_schema()).expect("automaton schema serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_schema()).expect("automaton schema serializes")
    }

    fn to_schema(&self) -> JsonAutomaton {
        JsonAutomaton {
            sigma: self.sigma.iter().map(|a| a.to_string()).collect(),
            n: self.n,
            states: (0..self.state_count())
                .map(|q| JsonState { id: format!("q{q}"), layer: self.layers[q] })
                .collect(),
            initial: format!("q{}", self.initial),
            finals: self.finals.iter().map(|q| format!("q{q}")).collect(),
            transitions: (0..self.state_count())
                .flat_map(|q| {
                    self.edges[q].iter().map(move |(l, to)| JsonTransition {
                        from: format!("q{q}"),
                        label: l.clone(),
                        to: format!("q{to}"),
                    })
                })
                .collect(),
        }
    }

    /// Reads the JSON schema, re-checking every layer rule.
    pub fn from_json(text: &str) -> Result<NominalAutomaton, AutomatonError> {
        let raw: JsonAutomaton =
            serde_json::from_str(text).map_err(|e| AutomatonError::Schema(e.to_string()))?;
        let schema = |msg: String| AutomatonError::Schema(msg);
        let mut ids: HashMap<&str, StateId> = HashMap::new();
        for (k, s) in raw.states.iter().enumerate() {
            if ids.insert(s.id.as_str(), k).is_some() {
                return Err(schema(format!("duplicate state id `{}`", s.id)));
            }
        }
        let lookup = |id: &str| ids.get(id).copied().ok_or_else(|| schema(format!("unknown state `{id}`")));
        let initial = lookup(&raw.initial)?;
        if raw.states[initial].layer != 0 {
            return Err(schema("initial state must be on layer 0".into()));
        }
        let mut m = NominalAutomaton {
            sigma: raw.sigma.iter().map(|a| Symbol::new(a)).collect(),
            n: raw.n,
            layers: Vec::new(),
            initial,
            finals: BTreeSet::new(),
            edges: Vec::new(),
        };
        for s in &raw.states {
            m.add_state(s.layer)?;
        }
        for f in &raw.finals {
            m.set_final(lookup(f)?)?;
        }
        for t in raw.transitions {
            m.add_transition(lookup(&t.from)?, t.label, lookup(&t.to)?)?;
        }
        Ok(m)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonAutomaton {
    sigma: Vec<String>,
    n: u32,
    states: Vec<JsonState>,
    initial: String,
    finals: Vec<String>,
    transitions: Vec<JsonTransition>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonState {
    id: String,
    layer: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonTransition {
    from: String,
    label: Label,
    to: String,
}

/// Reachable, total view of a deterministic automaton. Successors are listed
/// per state in `tokens_at(layer)` order.
struct Total {
    alphabet: Alphabet,
    layers: Vec<u32>,
    finals: Vec<bool>,
    succ: Vec<Vec<usize>>,
}

impl Total {
    fn build(m: &NominalAutomaton) -> Total {
        let alphabet = m.alphabet();
        let mut index: HashMap<Option<StateId>, usize> = HashMap::new();
        let mut sinks: HashMap<u32, usize> = HashMap::new();
        // node key: Some(original state) or a per-layer sink
        let mut order: Vec<(Option<StateId>, u32)> = vec![(Some(m.initial), 0)];
        index.insert(Some(m.initial), 0);
        let mut succ = Vec::new();
        let mut k = 0;
        while k < order.len() {
            let (node, layer) = order[k];
            let mut row = Vec::new();
            for t in alphabet.tokens_at(layer) {
                let next_layer = match t {
                    Token::Open => layer + 1,
                    Token::Close => layer - 1,
                    _ => layer,
                };
                let target = node.and_then(|q| m.step(q, &t));
                let id = match target {
                    Some(q) => *index.entry(Some(q)).or_insert_with(|| {
                        order.push((Some(q), next_layer));
                        order.len() - 1
                    }),
                    None => *sinks.entry(next_layer).or_insert_with(|| {
                        order.push((None, next_layer));
                        order.len() - 1
                    }),
                };
                row.push(id);
            }
            succ.push(row);
            k += 1;
        }
        Total {
            alphabet,
            layers: order.iter().map(|(_, l)| *l).collect(),
            finals: order.iter().map(|(q, _)| q.is_some_and(|q| m.is_final(q))).collect(),
            succ,
        }
    }

    /// Moore partition refinement; classes are numbered by first occurrence.
    fn refine(&self) -> Vec<usize> {
        let mut classes = number_by_first_occurrence(
            (0..self.layers.len()).map(|q| (self.finals[q], self.layers[q], Vec::<usize>::new())),
        );
        loop {
            let next = number_by_first_occurrence((0..self.layers.len()).map(|q| {
                let sig: Vec<usize> = self.succ[q].iter().map(|s| classes[*s]).collect();
                (self.finals[q], self.layers[q], [vec![classes[q]], sig].concat())
            }));
            let count = |c: &[usize]| c.iter().max().map_or(0, |m| m + 1);
            if count(&next) == count(&classes) {
                return next;
            }
            classes = next;
        }
    }

    fn quotient(&self, classes: &[usize], sigma: Sigma, n: u32) -> NominalAutomaton {
        // renumber classes breadth-first from the initial node
        let mut rename: HashMap<usize, StateId> = HashMap::new();
        let mut reps: Vec<usize> = Vec::new();
        rename.insert(classes[0], 0);
        reps.push(0);
        let mut k = 0;
        while k < reps.len() {
            for s in &self.succ[reps[k]] {
                if let std::collections::hash_map::Entry::Vacant(slot) = rename.entry(classes[*s]) {
                    slot.insert(reps.len());
                    reps.push(*s);
                }
            }
            k += 1;
        }
        let mut out = NominalAutomaton::new(sigma, n);
        for rep in reps.iter().skip(1) {
            out.add_state(self.layers[*rep]).expect("layer within bound");
        }
        for (id, rep) in reps.iter().enumerate() {
            if self.finals[*rep] {
                out.finals.insert(id);
            }
            for (t, s) in self.alphabet.tokens_at(self.layers[*rep]).into_iter().zip(&self.succ[*rep]) {
                out.edges[id].push((Label::from(t), rename[&classes[*s]]));
            }
        }
        out
    }
}

fn number_by_first_occurrence<K: std::hash::Hash + Eq>(keys: impl Iterator<Item = K>) -> Vec<usize> {
    let mut ids: HashMap<K, usize> = HashMap::new();
    keys.map(|k| {
        let next = ids.len();
        *ids.entry(k).or_insert(next)
    })
    .collect()
}

/// Thompson-style construction. Binders wrap their body one layer up with an
/// `Open` edge in and a `Close` edge out.
pub fn compile(cne: &CanonicalRegex, sigma: &Sigma) -> NominalAutomaton {
    let mut m = NominalAutomaton::new(sigma.clone(), cne.theta());
    let (start, end) = gadget(&mut m, cne, 0);
    m.edges[0].push((Label::Eps, start));
    m.set_final(end).expect("root gadget ends on layer 0");
    m.trim()
}

fn gadget(m: &mut NominalAutomaton, re: &CanonicalRegex, layer: u32) -> (StateId, StateId) {
    let s = m.add_state(layer).expect("layer bounded by theta");
    let e = m.add_state(layer).expect("layer bounded by theta");
    let link = |m: &mut NominalAutomaton, from, label, to| {
        m.add_transition(from, label, to).expect("gadget respects layers")
    };
    match re {
        CanonicalRegex::Empty => {}
        CanonicalRegex::Epsilon => link(m, s, Label::Eps, e),
        CanonicalRegex::Letter(a) => link(m, s, Label::Letter(a.clone()), e),
        CanonicalRegex::Idx(i) => link(m, s, Label::Idx(*i), e),
        CanonicalRegex::Sum(l, r) => {
            let (ls, le) = gadget(m, l, layer);
            let (rs, re_) = gadget(m, r, layer);
            link(m, s, Label::Eps, ls);
            link(m, s, Label::Eps, rs);
            link(m, le, Label::Eps, e);
            link(m, re_, Label::Eps, e);
        }
        CanonicalRegex::Concat(l, r) => {
            let (ls, le) = gadget(m, l, layer);
            let (rs, re_) = gadget(m, r, layer);
            link(m, s, Label::Eps, ls);
            link(m, le, Label::Eps, rs);
            link(m, re_, Label::Eps, e);
        }
        CanonicalRegex::Star(b) => {
            let (bs, be) = gadget(m, b, layer);
            link(m, s, Label::Eps, bs);
            link(m, s, Label::Eps, e);
            link(m, be, Label::Eps, bs);
            link(m, be, Label::Eps, e);
        }
        CanonicalRegex::Binder(_, b) => {
            let (bs, be) = gadget(m, b, layer + 1);
            link(m, s, Label::Open, bs);
            link(m, be, Label::Close, e);
        }
    }
    (s, e)
}

/// Decides language equality on legal words over `A_N`, `N` the larger of
/// the two register bounds, and otherwise returns a separating word chosen
/// by `strategy`.
///
/// Breadth-first search over the product of the two subset constructions,
/// the open-binder counter and the nesting depth reached so far. Each level
/// is visited in lexicographic order of the shortest words, so the first
/// level holding a disagreement yields the minimum-length witnesses.
pub fn equivalence(
    a: &NominalAutomaton,
    b: &NominalAutomaton,
    strategy: Strategy,
) -> Result<Equivalence, AutomatonError> {
    if a.sigma != b.sigma {
        return Err(AutomatonError::AlphabetMismatch);
    }
    let alphabet = Alphabet::new(a.sigma.clone(), a.n.max(b.n));

    type Key = (Vec<StateId>, Vec<StateId>, u32, u32);
    struct Node {
        key: Key,
        parent: Option<(usize, Token)>,
    }
    let mut nodes: Vec<Node> = Vec::new();
    let mut seen: HashMap<Key, usize> = HashMap::new();
    let start: Key = (a.eps_closure([a.initial]), b.eps_closure([b.initial]), 0, 0);
    seen.insert(start.clone(), 0);
    nodes.push(Node { key: start, parent: None });

    let mut level: Vec<usize> = vec![0];
    while !level.is_empty() {
        let differing = level.iter().copied().filter(|k| {
            let (sa, sb, _, _) = &nodes[*k].key;
            a.any_final(sa) != b.any_final(sb)
        });
        let chosen = match strategy {
            Strategy::Shortest => differing.min(),
            Strategy::MaxFresh => differing.min_by_key(|k| (std::cmp::Reverse(nodes[*k].key.3), *k)),
            Strategy::MinFresh => differing.min_by_key(|k| (nodes[*k].key.3, *k)),
        };
        if let Some(k) = chosen {
            let mut tokens = Vec::new();
            let mut cur = k;
            while let Some((p, t)) = &nodes[cur].parent {
                tokens.push(t.clone());
                cur = *p;
            }
            tokens.reverse();
            return Ok(Equivalence::Counterexample(Word::new(tokens)));
        }
        let mut next = Vec::new();
        for k in level {
            let (sa, sb, reg, depth) = nodes[k].key.clone();
            for t in alphabet.tokens_at(reg) {
                let label = Label::from(&t);
                let (reg2, depth2) = match t {
                    Token::Open => (reg + 1, depth.max(reg + 1)),
                    Token::Close => (reg - 1, depth),
                    _ => (reg, depth),
                };
                let key: Key = (a.step_set(&sa, &label), b.step_set(&sb, &label), reg2, depth2);
                if !seen.contains_key(&key) {
                    seen.insert(key.clone(), nodes.len());
                    next.push(nodes.len());
                    nodes.push(Node { key, parent: Some((k, t)) });
                }
            }
        }
        level = next;
    }
    Ok(Equivalence::Equivalent)
}
