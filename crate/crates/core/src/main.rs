use clap::Parser;

use citerank::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if let Err(err) = run(cli, &mut out) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
