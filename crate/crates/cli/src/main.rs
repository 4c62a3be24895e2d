use clap::Parser;

fn main() {
    let cli = areolar_cli::Cli::parse();
    std::process::exit(areolar_cli::run(&cli));
}
