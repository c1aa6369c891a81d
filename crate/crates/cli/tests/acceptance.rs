//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use nlstar::automaton::{compile, equivalence, Label};
use nlstar::learner::{run_nlstar_with, hypothesis_violations, LearnConfig, RunStats};
use nlstar::oracle::{brute_equivalence, brute_membership, enumerate_legal, BruteVerdict, EnumBound};
use nlstar::words::sigma;
use nlstar::{
    canonicalize, parse_regex, parse_regex_infer, parse_word, CanonicalRegex, Cell, Equivalence, NominalAutomaton,
    ObservationTable, Sigma, Strategy, Symbol, Teacher,
};

const SEED: u64 = 0x6e4c_2a01;
const CLASSICAL_SEED: u64 = 0x6e4c_2a02;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(failures: &[String], ok_detail: String) -> Outcome {
    if failures.is_empty() {
        Outcome { pass: true, detail: ok_detail }
    } else {
        let mut shown = failures.iter().take(5).cloned().collect::<Vec<_>>().join("; ");
        if failures.len() > 5 {
            shown += &format!("; … {} more", failures.len() - 5);
        }
        Outcome { pass: false, detail: shown }
    }
}

fn ab() -> Sigma {
    sigma(["a", "b"])
}

/// Table/hypothesis agreement bookkeeping shared by criteria 1–3.
#[derive(Default)]
struct Agreement {
    tables: usize,
    violations: Vec<String>,
}

struct Learned {
    machine: NominalAutomaton,
    stats: RunStats,
    hypotheses: Vec<NominalAutomaton>,
    teacher: Teacher,
}

fn learn(cne: &CanonicalRegex, letters: &Sigma, agreement: &mut Agreement) -> Result<Learned, String> {
    let mut teacher = Teacher::from_regex(cne, letters, Strategy::Shortest);
    let mut hypotheses = Vec::new();
    let config = LearnConfig { max_rounds: Some(200) };
    let observe = |table: &ObservationTable, h: &NominalAutomaton| {
        agreement.tables += 1;
        agreement.violations.extend(hypothesis_violations(table, h).into_iter().map(|v| format!("{cne}: {v}")));
        hypotheses.push(h.clone());
    };
    let (machine, stats) = run_nlstar_with(&mut teacher, &config, observe).map_err(|e| format!("{cne}: {e}"))?;
    Ok(Learned { machine, stats, hypotheses, teacher })
}

fn letter(a: &str) -> Label {
    Label::Letter(Symbol::new(a))
}

/// Reference first hypothesis for `ab<n.n*>`: two states, nothing accepted.
fn two_state_reference() -> NominalAutomaton {
    let mut m = NominalAutomaton::new(ab(), 0);
    let q1 = m.add_state(0).unwrap();
    for (from, a, to) in [(0, "a", q1), (0, "b", 0), (q1, "a", 0), (q1, "b", q1)] {
        m.add_transition(from, letter(a), to).unwrap();
    }
    m
}

/// Reference answer for `ab<n.n*>`, partial at the accepting state.
fn seven_state_reference() -> NominalAutomaton {
    let mut m = NominalAutomaton::new(ab(), 1);
    let layers = [0, 0, 0, 1, 0, 0, 1];
    for l in &layers[1..] {
        m.add_state(*l).unwrap();
    }
    m.set_final(4).unwrap();
    let edges: &[(usize, Label, usize)] = &[
        (0, letter("a"), 1),
        (0, letter("b"), 5),
        (1, letter("a"), 5),
        (1, letter("b"), 2),
        (2, letter("a"), 5),
        (2, letter("b"), 5),
        (2, Label::Open, 3),
        (3, letter("a"), 6),
        (3, letter("b"), 6),
        (3, Label::Idx(1), 3),
        (3, Label::Close, 4),
        (4, letter("a"), 5),
        (4, letter("b"), 5),
        (5, letter("a"), 5),
        (5, letter("b"), 5),
        (6, letter("a"), 6),
        (6, letter("b"), 6),
        (6, Label::Idx(1), 6),
        (6, Label::Close, 5),
    ];
    for (from, l, to) in edges {
        m.add_transition(*from, l.clone(), *to).unwrap();
    }
    m
}

fn criterion1(agreement: &mut Agreement) -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let target = canonicalize(&parse_regex("ab<n.n*>", &ab()).unwrap()).unwrap();

    let mut teacher = Teacher::from_regex(&target, &ab(), Strategy::Shortest);
    let initial = ObservationTable::init(&mut teacher).unwrap();
    let cell = |x: &str| initial.cell(&parse_word(x).unwrap(), &parse_word("ε").unwrap());
    let labels: Vec<String> = initial.labels().iter().map(|w| w.serialize()).collect();
    if (cell("ε"), cell("a"), cell("b")) != (Cell::P, Cell::P, Cell::Zero) || labels != ["", "a", "b"] {
        failures.push(format!("initial table differs:\n{}", initial.render_grid()));
    }

    let run = match learn(&target, &ab(), agreement) {
        Ok(r) => r,
        Err(e) => return outcome(&[e], String::new()),
    };
    let first = &run.hypotheses[0];
    let first_ok = first.state_count() == 2
        && first.n() == 0
        && first.finals().is_empty()
        && equivalence(first, &two_state_reference(), Strategy::Shortest) == Ok(Equivalence::Equivalent);
    if !first_ok {
        failures.push(format!("first hypothesis:\n{}", first.to_dot()));
    }
    if run.stats.counterexamples.first().map(String::as_str) != Some("a b << >>") {
        failures.push(format!("counterexamples {:?}", run.stats.counterexamples));
    }
    let reference = seven_state_reference();
    if equivalence(&run.machine, &reference, Strategy::Shortest) != Ok(Equivalence::Equivalent) {
        failures.push("final machine not language-equal to the 7-state reference".into());
    }
    if run.machine.state_count() != reference.state_count() {
        failures.push(format!("final machine has {} states", run.machine.state_count()));
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(5) {
        failures.push(format!("took {elapsed:?}"));
    }
    outcome(
        &failures,
        format!(
            "initial table exact, 2-state first hypothesis, counterexample `ab≪≫`, final {} states ≡ reference, {} equivalence queries, {:.2?}",
            run.machine.state_count(),
            run.stats.equivalence_count,
            elapsed
        ),
    )
}

fn criterion2(agreement: &mut Agreement) -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let (re, letters) = parse_regex_infer("<n. <m. m>* n <k. k*> n>").unwrap();
    let cne = canonicalize(&re).unwrap();
    let compiled = compile(&cne, &letters);
    let words = enumerate_legal(&letters, EnumBound::new(10, 2));
    let mut members = 0;
    for w in &words {
        let brute = brute_membership(&cne, w);
        members += brute as usize;
        if compiled.accepts(w).unwrap() != brute {
            failures.push(format!("compiled automaton wrong on `{w}`"));
        }
    }
    match learn(&cne, &letters, agreement) {
        Ok(run) => {
            if equivalence(&run.machine, &compiled, Strategy::Shortest) != Ok(Equivalence::Equivalent) {
                failures.push("learned machine differs from the compiled one".into());
            }
            let elapsed = start.elapsed();
            if elapsed >= Duration::from_secs(60) {
                failures.push(format!("took {elapsed:?}"));
            }
            let minimal = compiled.determinize().minimize().unwrap().state_count();
            outcome(
                &failures,
                format!(
                    "{} words checked ({members} members), learned {} states (minimal {minimal}), {} equivalence queries, {:.2?}",
                    words.len(),
                    run.machine.state_count(),
                    run.stats.equivalence_count,
                    elapsed
                ),
            )
        }
        Err(e) => outcome(&[e], String::new()),
    }
}

struct CorpusRun {
    cne: CanonicalRegex,
    minimal_states: usize,
    learned: Learned,
}

fn corpus_runs(corpus: &[CanonicalRegex], agreement: &mut Agreement) -> Result<Vec<CorpusRun>, String> {
    corpus
        .iter()
        .map(|cne| {
            let minimal_states = compile(cne, &ab()).determinize().minimize().unwrap().state_count();
            Ok(CorpusRun { cne: cne.clone(), minimal_states, learned: learn(cne, &ab(), agreement)? })
        })
        .collect()
}

fn criterion3(agreement: &Agreement) -> Outcome {
    let failures: Vec<String> = if agreement.tables == 0 { vec!["no tables observed".into()] } else { agreement.violations.clone() };
    outcome(&failures, format!("{} closed and consistent tables, 0 violations", agreement.tables))
}

fn criterion4(runs: &[CorpusRun]) -> Outcome {
    let mut failures = Vec::new();
    let k = ab().len();
    for r in runs {
        let st = &r.learned.stats;
        let (s, b, n) = (r.minimal_states, st.max_counterexample_len, st.final_n as usize);
        let s_bound = s + b * (s - 1);
        let cells_bound = (k + n + 2) * s_bound * s;
        let mut bad = Vec::new();
        if st.s_size > s_bound {
            bad.push(format!("|S|={} > {s_bound}", st.s_size));
        }
        if st.e_size > s {
            bad.push(format!("|E|={} > {s}", st.e_size));
        }
        if st.equivalence_count > s - 1 {
            bad.push(format!("{} equivalence queries > {}", st.equivalence_count, s - 1));
        }
        if st.cell_count > cells_bound {
            bad.push(format!("cells={} > {cells_bound}", st.cell_count));
        }
        if !bad.is_empty() {
            failures.push(format!("{} (𝔰={s}, 𝔟={b}): {}", r.cne, bad.join(", ")));
        }
    }
    let max_s = runs.iter().map(|r| r.minimal_states).max().unwrap_or(0);
    let max_eq = runs.iter().map(|r| r.learned.stats.equivalence_count).max().unwrap_or(0);
    outcome(
        &failures,
        format!(
            "{} runs within the |S|, |E|, equivalence-query and cell bounds (𝔰 up to {max_s}, at most {max_eq} queries)",
            runs.len()
        ),
    )
}

fn criterion5() -> Outcome {
    let mut failures = Vec::new();
    let corpus = common::corpus(CLASSICAL_SEED, 10, 0, 0);
    let mut scratch = Agreement::default();
    for cne in &corpus {
        let minimal = compile(cne, &ab()).determinize().minimize().unwrap();
        match learn(cne, &ab(), &mut scratch) {
            Ok(run) => {
                if run.stats.final_n != 0 || run.teacher.queried_binders() {
                    failures.push(format!("{cne}: binders appeared (n={})", run.stats.final_n));
                }
                if !run.machine.is_isomorphic(&minimal) {
                    failures.push(format!("{cne}: learned {} states, minimal {}", run.machine.state_count(), minimal.state_count()));
                }
            }
            Err(e) => failures.push(e),
        }
    }
    let sizes: Vec<usize> = corpus
        .iter()
        .map(|c| compile(c, &ab()).determinize().minimize().unwrap().state_count())
        .collect();
    outcome(&failures, format!("10 binder-free targets isomorphic to their minimal DFAs (sizes {sizes:?})"))
}

fn criterion6(corpus: &[CanonicalRegex]) -> Outcome {
    let mut failures = Vec::new();
    let mut words_checked = 0;
    let mut verdicts = 0;
    for (i, cne) in corpus.iter().enumerate() {
        let m = compile(cne, &ab());
        for w in enumerate_legal(&ab(), EnumBound::new(8, cne.theta() + 1)) {
            words_checked += 1;
            if m.accepts(&w).unwrap() != brute_membership(cne, &w) {
                failures.push(format!("{cne}: compile wrong on `{w}`"));
            }
        }
        let min = m.determinize().minimize().unwrap();
        let other = &corpus[(i + 1) % corpus.len()];
        let pairs: [(&NominalAutomaton, &CanonicalRegex, &CanonicalRegex); 3] =
            [(&m, cne, cne), (&min, cne, cne), (&min, cne, other)];
        for (machine, own, against) in pairs {
            verdicts += 1;
            let bound = EnumBound::new(8, own.theta().max(against.theta()));
            let exact = equivalence(machine, &compile(against, &ab()), Strategy::Shortest).unwrap();
            let brute = brute_equivalence(machine, against, bound);
            let agree = match (&exact, &brute) {
                (Equivalence::Equivalent, BruteVerdict::Agree) => true,
                (Equivalence::Counterexample(c), BruteVerdict::Witness(w)) => c == w,
                (Equivalence::Counterexample(c), BruteVerdict::Agree) => c.len() > bound.max_len,
                (Equivalence::Equivalent, BruteVerdict::Witness(_)) => false,
            };
            if !agree {
                failures.push(format!("{own} vs {against}: exact {exact:?}, brute {brute:?}"));
            }
        }
    }
    outcome(&failures, format!("{words_checked} word checks and {verdicts} equivalence verdicts, 0 disagreements"))
}

fn criterion7() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut failures = Vec::new();
    let targets = ["ab<n.n*>", "<n. <m. m>* n <k. k*> n>"];
    for (t, target) in targets.iter().enumerate() {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let path = |name: &str| dir.path().join(format!("{t}-{run}-{name}"));
            let status = Command::new(env!("CARGO_BIN_EXE_nlstar"))
                .args(["learn", "--target", target, "--emit", "json", "--strategy", "max-fresh"])
                .arg("--output")
                .arg(path("automaton.json"))
                .arg("--stats")
                .arg(path("stats.json"))
                .arg("--log")
                .arg(path("log.jsonl"))
                .status()
                .unwrap();
            if !status.success() {
                failures.push(format!("{target}: exit {status}"));
            }
            let files: Vec<Vec<u8>> = ["automaton.json", "stats.json", "log.jsonl"]
                .iter()
                .map(|f| fs::read(path(f)).unwrap_or_default())
                .collect();
            outputs.push(files);
        }
        for (f, name) in ["automaton", "stats", "log"].iter().enumerate() {
            if outputs[0][f].is_empty() || outputs[0][f] != outputs[1][f] {
                failures.push(format!("{target}: {name} differs between runs"));
            }
        }
    }
    outcome(&failures, "automaton, stats and log byte-identical across two runs for 2 targets".into())
}

fn main() {
    let mut agreement = Agreement::default();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("ab<n.n*> golden run", criterion1(&mut agreement)));
    results.push(("nested-binder round trip", criterion2(&mut agreement)));

    let corpus = common::corpus(SEED, 20, 1, 2);
    let runs = corpus_runs(&corpus, &mut agreement);
    let c3 = criterion3(&agreement);
    match &runs {
        Ok(runs) => {
            results.push(("table/hypothesis agreement", c3));
            results.push(("complexity bounds", criterion4(runs)));
        }
        Err(e) => {
            results.push(("table/hypothesis agreement", outcome(std::slice::from_ref(e), String::new())));
            results.push(("complexity bounds", outcome(std::slice::from_ref(e), String::new())));
        }
    }
    results.push(("classical degeneration", criterion5()));
    results.push(("oracle equivalence", criterion6(&corpus)));
    results.push(("determinism", criterion7()));

    println!("corpus ({} targets, seed {SEED:#x}):", corpus.len());
    for cne in &corpus {
        println!("    {cne}");
    }
    let mut all = true;
    for (i, (name, o)) in results.iter().enumerate() {
        all &= o.pass;
        println!("criterion {} ({name}): {} — {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if !all {
        std::process::exit(1);
    }
}
