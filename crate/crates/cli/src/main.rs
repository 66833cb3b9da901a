mod commands;
mod config;

use clap::{Arg, ArgAction, Command};
use config::{Failure, RunConfig, COMMANDS};
use std::path::PathBuf;
use std::process::ExitCode;

fn cli() -> Command {
    let mut app = Command::new("phasetomo")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Classical phase-space tomography: forward and inverse transforms, evolution, cavity modes")
        .subcommand_required(true)
        .arg(
            Arg::new("config")
                .long("config")
                .global(true)
                .value_name("FILE")
                .help("key = value file; flags override its entries"),
        );
    for (name, about) in COMMANDS {
        let mut sub = Command::new(name).about(about);
        for k in config::keys(name) {
            let help = match k.default {
                Some(d) => format!("{} [default: {d}]", k.help),
                None => k.help.to_string(),
            };
            sub = sub.arg(
                Arg::new(k.name).long(k.name).value_name("VALUE").help(help).hide(k.hidden).allow_hyphen_values(true).action(ArgAction::Set),
            );
        }
        app = app.subcommand(sub);
    }
    app
}

fn run() -> Result<(), Failure> {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return if code == 0 { Ok(()) } else { Err(Failure { code, message: String::new() }) };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let file = sub.get_one::<String>("config").map(PathBuf::from);
    let cfg = RunConfig::resolve(name, file.as_deref(), sub)?;
    let summary = commands::run(&cfg)?;
    commands::print_json(&summary);
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code as u8)
        }
    }
}
