use clap::Parser;

fn main() {
    let cli = cfuse::Cli::parse();
    let stdout = std::io::stdout();
    if let Err(e) = cfuse::run(cli, &mut stdout.lock()) {
        eprintln!("cfuse: {e}");
        std::process::exit(e.exit_code());
    }
}
