use clap::Parser;
use mottrack::cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("mottrack: {e}");
        std::process::exit(e.exit_code());
    }
}
