mod args;
mod commands;
mod config;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command};

/// A problem with how the program was invoked, as opposed to with its data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

fn parse(argv: &[OsString]) -> Result<(Cli, String), clap::Error> {
    let m = Cli::command().try_get_matches_from(argv)?;
    let cli = Cli::from_arg_matches(&m)?;
    let (sub, sub_m) = m.subcommand().expect("subcommand is required");
    let resolved = config::resolved(&Cli::command(), sub, sub_m);
    Ok((cli, resolved))
}

fn clap_exit(e: clap::Error) -> ExitCode {
    let _ = e.print();
    if e.use_stderr() {
        ExitCode::from(EXIT_USAGE)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let (mut cli, mut resolved) = match parse(&argv) {
        Ok(v) => v,
        Err(e) => return clap_exit(e),
    };
    if let Some(path) = cli.config.clone() {
        let spliced = std::fs::read_to_string(&path)
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
            .and_then(|text| config::parse_config(&text, &path))
            .and_then(|entries| {
                let m = Cli::command().try_get_matches_from(&argv)?;
                let sub = m.subcommand_name().expect("subcommand is required").to_string();
                config::splice_config(&argv, &Cli::command(), &sub, &entries)
            });
        match spliced {
            Ok(argv) => match parse(&argv) {
                Ok(v) => (cli, resolved) = v,
                Err(e) => return clap_exit(e),
            },
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(EXIT_USAGE);
            }
        }
    }
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_DATA);
        }
    }
    let ctx = commands::Ctx {
        verbose: cli.verbose,
        resolved,
    };
    let result = match &cli.command {
        Command::Learn(c) => commands::learn(c, &ctx),
        Command::Gen(c) => commands::gen(c, &ctx),
        Command::Eval(c) => commands::eval(c, &ctx),
        Command::Curve(c) => commands::curve(c, &ctx),
        Command::Active(c) => commands::active(c, &ctx),
        Command::CountInterp(c) => commands::count_interp(c),
        Command::Lics(c) => commands::lics(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.downcast_ref::<UsageError>().is_some()
                || matches!(e.downcast_ref::<lexind::Error>(), Some(lexind::Error::InvalidArgument(_)));
            ExitCode::from(if usage { EXIT_USAGE } else { EXIT_DATA })
        }
    }
}
