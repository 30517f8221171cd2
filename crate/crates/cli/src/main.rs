use clap::Parser;

fn main() {
    let cli = dataneeds_cli::Cli::parse();
    if let Err(e) = dataneeds_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
