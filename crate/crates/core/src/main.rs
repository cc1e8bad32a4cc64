use clap::Parser;

fn main() {
    let cli = colmod::cli::Cli::parse();
    std::process::exit(colmod::cli::run(&cli));
}
