use std::io::Write;
use std::process::ExitCode;

use qmm_cli::{execute, parse_args, Parsed};

fn main() -> ExitCode {
    let outcome = parse_args(std::env::args_os()).and_then(|p| match p {
        Parsed::Display(text) => Ok(text),
        Parsed::Run(cli) => {
            let env_seed = std::env::var(qmm_cli::config::SEED_ENV).ok();
            execute(&cli, env_seed.as_deref())
        }
    });
    match outcome {
        Ok(text) => {
            let mut out = std::io::stdout().lock();
            // A closed pipe is not an error for a report writer.
            let _ = out.write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
