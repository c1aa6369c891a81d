use clap::Parser;
use nlstar_cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    if let Err(failure) = run(cli, &mut stdout.lock()) {
        eprintln!("error: {failure}");
        std::process::exit(failure.code);
    }
}
