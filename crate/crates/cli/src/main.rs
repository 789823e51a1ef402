use clap::Parser;

fn main() {
    let cli = lerw_cli::Cli::parse();
    match lerw_cli::run(cli) {
        Ok(()) | Err(lerw_cli::CliError::Pipe) => {}
        Err(e) => {
            eprintln!("lerw: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
