use clap::Parser;

fn main() {
    let cli = bellstab_cli::cli::Cli::parse();
    std::process::exit(bellstab_cli::cli::run(&cli));
}
