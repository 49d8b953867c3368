use clap::Parser;

fn main() {
    let cli = emqs::app::Cli::parse();
    std::process::exit(emqs::app::execute(&cli));
}
