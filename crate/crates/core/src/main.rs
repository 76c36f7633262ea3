use clap::Parser;

fn main() {
    std::process::exit(spflow::cli::run(spflow::cli::Args::parse()));
}
