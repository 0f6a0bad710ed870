use clap::Parser;

fn main() {
    let cli = mellin_qfe_cli::Cli::parse();
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = mellin_qfe_cli::execute(cli, &mut stdout) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
