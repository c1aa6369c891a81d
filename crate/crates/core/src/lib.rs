//! Active learning of nominal automata with binders.
//!
//! Words are canonical: bound names are replaced by register levels, so a
//! nominal regular language becomes a language over the finite token set
//! `Σ ∪ {1..n} ∪ {≪, ≫}` restricted to legally scoped words. The crate
//! provides
//!
//! * [`words`]: tokens, legality, register counts and the word syntax,
//! * [`regex`]: nominal regular expressions and their canonical form,
//! * [`automaton`]: nominal automata with layers (compile, determinize,
//!   minimize, equivalence with counterexamples, DOT/JSON),
//! * [`teacher`]: three-valued membership and equivalence queries,
//! * [`learner`]: nominal observation tables and the learning loop,
//! * [`oracle`]: brute-force enumeration used to cross-check everything else.

pub mod automaton;
pub mod learner;
pub mod oracle;
pub mod regex;
pub mod teacher;
pub mod words;

pub use automaton::{Equivalence, NominalAutomaton, Strategy};
pub use learner::{run_nlstar, Cell, LearnConfig, LearnError, ObservationTable, RunStats};
pub use regex::{canonicalize, parse_regex, parse_regex_infer, CanonicalRegex, NominalRegex};
pub use teacher::{Answer, Teacher};
pub use words::{parse_word, Alphabet, Sigma, Symbol, Token, Word};
