mod args;
mod commands;
mod error;
mod output;
mod plot;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command, Common};
use crate::commands::Context;
use crate::error::CliError;

const THREADS_ENV: &str = "PERSIST_LAB_THREADS";

/// Configures the global pool; the environment variable wins over `--threads`.
fn init_threads(flag: Option<usize>) -> Result<usize, CliError> {
    let requested = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?,
        ),
        Err(_) => flag,
    };
    if let Some(n) = requested {
        if n == 0 {
            return Err(CliError::Usage("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(rayon::current_num_threads())
}

fn common(cmd: &Command) -> Option<&Common> {
    Some(match cmd {
        Command::Analyze(a) => &a.common,
        Command::TcGrid(a) => &a.common,
        Command::TcLambda(a) => &a.common,
        Command::Mprime(a) => &a.common,
        Command::DeltaC(a) => &a.common,
        Command::Survival(a) => &a.common,
        Command::CouplingCheck(a) => &a.common,
        Command::Plot(_) => return None,
    })
}

fn run(cli: Cli, argv: Vec<String>) -> Result<(), CliError> {
    if let Command::Plot(p) = &cli.command {
        let text = std::fs::read_to_string(&p.csv).map_err(|e| CliError::Io(format!("{}: {e}", p.csv.display())))?;
        let svg = plot::render_csv(&text, p.kind)?;
        let out = p.out.clone().unwrap_or_else(|| p.csv.with_extension("svg"));
        return output::write_text(Some(&out), &svg);
    }
    let threads = init_threads(common(&cli.command).and_then(|c| c.threads))?;
    let ctx = Context { argv, threads };
    match &cli.command {
        Command::Analyze(a) => commands::analyze(a, &ctx),
        Command::TcGrid(a) => commands::tc_grid(a, &ctx),
        Command::TcLambda(a) => commands::tc_lambda(a, &ctx),
        Command::Mprime(a) => commands::mprime(a, &ctx),
        Command::DeltaC(a) => commands::delta_c(a, &ctx),
        Command::Survival(a) => commands::survival(a, &ctx),
        Command::CouplingCheck(a) => commands::coupling_check(a, &ctx),
        Command::Plot(_) => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    // The echoed argv names the tool, not the path it was launched from.
    let echoed = std::iter::once("persist-lab".to_string()).chain(argv.into_iter().skip(1)).collect();
    match run(cli, echoed) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("persist-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
