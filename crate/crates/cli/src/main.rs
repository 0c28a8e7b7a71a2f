use clap::Parser;
use lmc_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("lmc: error: {e}");
        std::process::exit(e.exit_code());
    }
}
