use clap::Parser;

fn main() {
    let cli = clsm_cli::Cli::parse();
    if let Err(e) = clsm_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
