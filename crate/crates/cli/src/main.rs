use clap::Parser;
use edclust_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("edclust: {e}");
        std::process::exit(e.exit_code());
    }
}
