use clap::Parser;
use ordershape_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("ordershape: {e}");
        std::process::exit(e.exit_code());
    }
}
