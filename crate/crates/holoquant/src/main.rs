use clap::Parser;

fn main() {
    let cli = holoquant::cli::Cli::parse();
    if let Err(e) = holoquant::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.code());
    }
}
