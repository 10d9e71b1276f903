mod args;
mod commands;
mod context;
mod error;
mod report;
mod table;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use context::Context;
use error::{CliError, CliResult};

fn init_logging(level: &str) -> CliResult<()> {
    let filter: log::LevelFilter = level
        .parse()
        .map_err(|_| CliError::usage(format!("--log-level: `{level}` is not one of off, error, warn, info, debug, trace")))?;
    env_logger::Builder::new()
        .filter_level(filter)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    init_logging(&cli.log_level)?;
    let name = match &cli.command {
        Command::Gen(_) => "gen",
        Command::SynthModel(_) => "synth-model",
        Command::Score(_) => "score",
        Command::LossAudit(_) => "loss-audit",
        Command::Nmix(_) => "nmix",
        Command::Judge(_) => "judge",
        Command::Cka(_) => "cka",
        Command::Report(_) => "report",
        Command::Detect(args) => return commands::detect_cmd(cli.lang_set.clone().map(|s| s.0), args),
    };
    let ctx = Context::new(cli, name)?;
    let manifest = match &cli.command {
        Command::Gen(a) => commands::gen(ctx, a),
        Command::SynthModel(a) => commands::synth_model(ctx, a),
        Command::Score(a) => commands::score(ctx, a),
        Command::LossAudit(a) => commands::loss_audit_cmd(ctx, a),
        Command::Nmix(a) => commands::nmix(ctx, a),
        Command::Judge(a) => commands::judge(ctx, a),
        Command::Cka(a) => commands::cka(ctx, a),
        Command::Report(a) => report::report(ctx, a),
        Command::Detect(_) => unreachable!("handled above"),
    }?;
    log::info!("manifest written to {}", manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("unlearn-eval: {e}");
            ExitCode::from(e.code)
        }
    }
}
