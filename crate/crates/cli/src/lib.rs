//! Command logic behind the `nlstar` binary.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nlstar::learner::{run_nlstar, LearnConfig, LearnError};
use nlstar::oracle::{brute_equivalence, BruteVerdict, EnumBound};
use nlstar::words::concat;
use nlstar::{
    automaton, canonicalize, parse_regex, parse_regex_infer, parse_word, Alphabet, CanonicalRegex, NominalAutomaton,
    Sigma, Strategy, Teacher,
};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ORACLE: i32 = 3;
pub const EXIT_ROUND_CAP: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "nlstar", version, about = "Learn nominal automata with binders")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compile an expression into an automaton.
    Compile {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, value_enum, default_value_t = Emit::Json)]
        emit: Emit,
        /// Determinize and minimize before printing.
        #[arg(long)]
        minimize: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the teacher's answer for one word: 1, P, 0 or bottom.
    Member {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long)]
        word: String,
    },
    /// Learn the target and write the automaton, statistics and query log.
    Learn(LearnArgs),
}

#[derive(Args, Debug, Clone)]
pub struct TargetArgs {
    /// Closed nominal expression, e.g. `ab<n.n*>`.
    #[arg(long)]
    pub target: String,
    /// Comma-separated letters; inferred from the expression when absent.
    #[arg(long)]
    pub sigma: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct LearnArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long, value_enum, default_value_t = StrategyArg::Shortest)]
    pub strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = Emit::Json)]
    pub emit: Emit,
    /// Where to write the automaton (stdout if absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Query log, one JSON object per line.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Run statistics as JSON.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Cross-check the result against brute-force enumeration up to this length.
    #[arg(long)]
    pub oracle_len: Option<usize>,
    #[arg(long)]
    pub max_rounds: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Emit {
    Dot,
    Json,
    Table,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrategyArg {
    Shortest,
    MaxFresh,
    MinFresh,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Shortest => Strategy::Shortest,
            StrategyArg::MaxFresh => Strategy::MaxFresh,
            StrategyArg::MinFresh => Strategy::MinFresh,
        }
    }
}

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(1, e.to_string())
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    check_token_order()?;
    match cli.command {
        Command::Compile { target, emit, minimize, output } => cmd_compile(&target, emit, minimize, output.as_deref(), out),
        Command::Member { target, word } => cmd_member(&target, &word, out),
        Command::Learn(args) => cmd_learn(&args, out),
    }
}

fn check_token_order() -> Result<(), Failure> {
    match std::env::var("NLSTAR_TOKEN_ORDER") {
        Ok(v) if !v.is_empty() && v != "default" => {
            Err(Failure::new(EXIT_USAGE, format!("NLSTAR_TOKEN_ORDER={v}: only the default order is supported")))
        }
        _ => Ok(()),
    }
}

/// Parses, checks closedness and canonicalizes the target.
pub fn load_target(args: &TargetArgs) -> Result<(CanonicalRegex, Sigma), Failure> {
    let usage = |e: nlstar::regex::RegexError| Failure::new(EXIT_USAGE, format!("{}: {e}", args.target));
    let (ne, sigma) = match &args.sigma {
        Some(list) => {
            let sigma = nlstar::words::sigma(list.split(',').map(str::trim).filter(|s| !s.is_empty()));
            (parse_regex(&args.target, &sigma).map_err(usage)?, sigma)
        }
        None => parse_regex_infer(&args.target).map_err(usage)?,
    };
    Ok((canonicalize(&ne).map_err(usage)?, sigma))
}

pub fn cmd_compile(
    target: &TargetArgs,
    emit: Emit,
    minimize: bool,
    output: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let (cne, sigma) = load_target(target)?;
    let mut m = automaton::compile(&cne, &sigma);
    if minimize {
        m = m.determinize().minimize().expect("determinized input");
    }
    write_output(output, &render(&m, emit), out)
}

pub fn cmd_member(target: &TargetArgs, word: &str, out: &mut dyn Write) -> Result<(), Failure> {
    let (cne, sigma) = load_target(target)?;
    let w = parse_word(word).map_err(|e| Failure::new(EXIT_USAGE, format!("{word}: {e}")))?;
    let teacher = Teacher::from_regex(&cne, &sigma, Strategy::Shortest);
    // ⊥ is decided on the learner's side from legality alone
    let depth = w.depth().unwrap_or(0);
    let legal = concat(&w, &nlstar::Word::empty(), &Alphabet::new(sigma, depth)).is_some();
    let answer = if legal {
        teacher.classify(&w).map_err(|e| Failure::new(1, e.to_string()))?.to_string()
    } else {
        "bottom".to_string()
    };
    writeln!(out, "{answer}")?;
    Ok(())
}

pub fn cmd_learn(args: &LearnArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let (cne, sigma) = load_target(&args.target)?;
    let mut teacher = Teacher::from_regex(&cne, &sigma, args.strategy.into());
    let config = LearnConfig { max_rounds: args.max_rounds };
    let result = run_nlstar(&mut teacher, &config);
    // the log is written even when the run stops early
    if let Some(path) = &args.log {
        teacher.write_log(fs::File::create(path)?)?;
    }
    let (m, stats) = match result {
        Ok(r) => r,
        Err(LearnError::RoundCap(k)) => return Err(Failure::new(EXIT_ROUND_CAP, format!("round cap reached after {k} rounds"))),
        Err(e) => return Err(Failure::new(1, e.to_string())),
    };
    if let Some(path) = &args.stats {
        let mut text = serde_json::to_string_pretty(&stats).expect("stats serialize");
        text.push('\n');
        fs::write(path, text)?;
    }
    let text = match args.emit {
        Emit::Table => stats.rounds.last().map(|r| r.grid.clone()).unwrap_or_default(),
        other => render(&m, other),
    };
    write_output(args.output.as_deref(), &text, out)?;
    if let Some(len) = args.oracle_len {
        let bound = EnumBound::new(len, cne.theta() + 1);
        if let BruteVerdict::Witness(w) = brute_equivalence(&m, &cne, bound) {
            return Err(Failure::new(EXIT_ORACLE, format!("learned automaton disagrees with the target on `{w}`")));
        }
    }
    Ok(())
}

fn render(m: &NominalAutomaton, emit: Emit) -> String {
    match emit {
        Emit::Dot => m.to_dot(),
        Emit::Json => m.to_json() + "\n",
        Emit::Table => transition_table(m),
    }
}

fn transition_table(m: &NominalAutomaton) -> String {
    let mut s = String::new();
    for q in 0..m.state_count() {
        let mark = match (q == m.initial(), m.is_final(q)) {
            (true, true) => "->*",
            (true, false) => "-> ",
            (false, true) => "  *",
            (false, false) => "   ",
        };
        let edges: Vec<String> = m.edges(q).iter().map(|(l, to)| format!("{}:q{to}", label_text(l))).collect();
        let _ = writeln!(s, "{mark} q{q} [{}]  {}", m.layer(q), edges.join(" "));
    }
    s
}

fn label_text(l: &automaton::Label) -> String {
    use automaton::Label;
    match l {
        Label::Letter(a) => a.to_string(),
        Label::Idx(i) => i.to_string(),
        Label::Open => "<<".into(),
        Label::Close => ">>".into(),
        Label::Eps => "eps".into(),
    }
}

fn write_output(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}
