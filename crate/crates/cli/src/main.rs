use clap::Parser;
use gapkit::{execute, Cli, CliError, EXIT_INVALID, EXIT_OK, EXIT_USAGE};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            std::process::exit(EXIT_OK);
        }
        Err(e) => {
            let err = CliError::Usage(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            std::process::exit(EXIT_USAGE);
        }
    };
    match execute(&cli) {
        Ok(summary) => {
            println!(
                "{}",
                serde_json::to_string(&summary).expect("summary serializes")
            );
            std::process::exit(if summary.ok { EXIT_OK } else { EXIT_INVALID });
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            std::process::exit(err.exit_code());
        }
    }
}
