use clap::Parser;
use fracsol_harness::cli::Cli;

fn main() {
    let cli = Cli::parse();
    match fracsol_harness::run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
