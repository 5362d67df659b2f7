use std::process::ExitCode;

use clap::Parser;
use haffsim_cli::{run, threads_from_env, Cli, CliError, Verdict};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", CliError::Usage(first.to_string()).one_line());
            return ExitCode::from(2);
        }
        Err(e) => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let level = if cli.global.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = threads_from_env().and_then(|threads| {
        haffsim_core::par::init_thread_pool(threads);
        run(&cli.global, &cli.command, &mut std::io::stdout().lock())
    });
    match result {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.one_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
