use clap::Parser;

fn main() {
    let cli = padkit_cli::Cli::parse();
    std::process::exit(padkit_cli::run(cli));
}
