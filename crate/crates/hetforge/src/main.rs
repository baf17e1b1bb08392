use clap::Parser;

fn main() {
    let cli = hetforge::cli::Cli::parse();
    if let Err(err) = hetforge::cli::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
