mod common;

use std::fs;
use std::process::{Command, Output};

use nlstar::automaton::{compile, equivalence, Label};
use nlstar::words::sigma;
use nlstar::{Equivalence, NominalAutomaton, Strategy};

fn nlstar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlstar")).args(args).env_remove("NLSTAR_TOKEN_ORDER").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn count_label(m: &NominalAutomaton, label: &Label) -> usize {
    (0..m.state_count()).flat_map(|q| m.edges(q)).filter(|(l, _)| l == label).count()
}

#[test]
fn member_answers() {
    for (word, expected) in [("a", "P"), ("b", "0"), (">>", "bottom"), ("a b << 1 >>", "1"), ("c", "bottom")] {
        let o = nlstar(&["member", "--target", "ab<n.n*>", "--word", word]);
        assert_eq!(o.status.code(), Some(0), "{word}");
        assert_eq!(stdout(&o).trim(), expected, "{word}");
    }
}

#[test]
fn compile_outputs() {
    let o = nlstar(&["compile", "--target", "<n. a n>"]);
    assert!(o.status.success());
    let m = NominalAutomaton::from_json(&stdout(&o)).unwrap();
    assert!(m.state_count() >= 4);
    assert_eq!(count_label(&m, &Label::Open), 1);
    assert_eq!(count_label(&m, &Label::Close), 1);

    let o = nlstar(&["compile", "--target", "0", "--sigma", "a,b"]);
    assert!(NominalAutomaton::from_json(&stdout(&o)).unwrap().finals().is_empty());

    let o = nlstar(&["compile", "--target", "<n. <m. m>* n <k. k*> n>", "--minimize", "--emit", "dot"]);
    let dot = stdout(&o);
    assert!(dot.starts_with("digraph"));
    assert_eq!(dot.matches("doublecircle").count(), 1);
    // nine live states plus one sink per layer
    assert_eq!(dot.matches("[shape=").count() - 1, 12);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["compile", "--target", "<n. n> 3"],
        vec!["compile", "--target", "a +"],
        vec!["compile", "--target", "a c", "--sigma", "a,b"],
        vec!["member", "--target", "ab<n.n*>", "--word", "a ? b"],
        vec!["learn", "--target", "<n. n"],
    ] {
        let o = nlstar(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    }
    let o = Command::new(env!("CARGO_BIN_EXE_nlstar"))
        .args(["member", "--target", "a", "--word", "a"])
        .env("NLSTAR_TOKEN_ORDER", "reversed")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn round_cap_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.jsonl");
    let o = nlstar(&["learn", "--target", "ab<n.n*>", "--max-rounds", "1", "--log", log.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(fs::read_to_string(log).unwrap().contains(r#""kind":"equiv""#));
}

#[test]
fn learn_ab_binder_target() {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("stats.json");
    let o = nlstar(&["learn", "--target", "ab<n.n*>", "--stats", stats.to_str().unwrap(), "--oracle-len", "9"]);
    assert_eq!(o.status.code(), Some(0));
    let m = NominalAutomaton::from_json(&stdout(&o)).unwrap();
    assert_eq!(m.state_count(), 7);
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(stats).unwrap()).unwrap();
    assert_eq!(s["final_n"], 1);
    assert!(s["equivalence_count"].as_u64().unwrap() >= 2);
}

#[test]
fn learn_classical_star() {
    let o = nlstar(&["learn", "--target", "a*"]);
    let m = NominalAutomaton::from_json(&stdout(&o)).unwrap();
    assert_eq!((m.state_count(), m.n()), (1, 0));
    assert!(m.is_final(0));
    assert_eq!(m.edges(0), [(Label::Letter("a".into()), 0)]);

    let o = nlstar(&["learn", "--target", "a*", "--emit", "table"]);
    assert!(stdout(&o).contains("  0 | ε                | 1 |"));
}

#[test]
fn learned_language_is_strategy_invariant() {
    let ab = sigma(["a", "b"]);
    for cne in common::corpus(0x5eed, 6, 1, 2) {
        let text = cne.to_string();
        let machines: Vec<NominalAutomaton> = ["shortest", "max-fresh", "min-fresh"]
            .iter()
            .map(|s| {
                let o = nlstar(&["learn", "--target", &text, "--sigma", "a,b", "--strategy", s]);
                assert!(o.status.success(), "{text} {s}");
                NominalAutomaton::from_json(&stdout(&o)).unwrap()
            })
            .collect();
        let target = compile(&cne, &ab);
        for m in &machines {
            assert_eq!(equivalence(m, &target, Strategy::Shortest), Ok(Equivalence::Equivalent), "{text}");
            assert_eq!(equivalence(m, &machines[0], Strategy::Shortest), Ok(Equivalence::Equivalent), "{text}");
        }
    }
}
