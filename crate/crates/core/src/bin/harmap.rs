use clap::Parser;

fn main() {
    std::process::exit(harmap::cli::run(harmap::cli::Cli::parse()));
}
