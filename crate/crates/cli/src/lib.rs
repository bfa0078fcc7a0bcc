//! Command-line front end: configuration, subcommands and artifact output.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Arg, ArgMatches, Command};

use commands::{run, RunError};
use config::{ConfigError, ExperimentConfig, COMMANDS, GLOBAL_KEYS};

pub const THREADS_ENV: &str = "RIGIDITY_LAB_THREADS";

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

pub fn cli() -> Command {
    let mut cmd = Command::new("rigidity-lab")
        .about("Numerical experiments on special flows over circle rotations")
        .arg(Arg::new("config").long("config").value_name("FILE").global(true).help("key = value configuration file"));
    for k in GLOBAL_KEYS {
        cmd = cmd.arg(Arg::new(k.name).long(k.name).global(true).help(k.help));
    }
    for spec in COMMANDS {
        let sub = spec.keys.iter().fold(Command::new(spec.name).about(spec.about), |c, k| {
            let help = match k.default {
                Some(d) => format!("{} [default: {d}]", k.help),
                None => k.help.to_string(),
            };
            c.arg(Arg::new(k.name).long(k.name).help(help))
        });
        cmd = cmd.subcommand(sub);
    }
    cmd
}

/// Merges the configuration file (if any) with explicit flags, flags winning.
pub fn build_config(matches: &ArgMatches) -> Result<ExperimentConfig, ConfigError> {
    let sub = matches.subcommand();
    let mut cfg = match matches.get_one::<String>("config") {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{path}: {e}")))?;
            let cfg: ExperimentConfig = text.parse()?;
            if let Some((name, _)) = sub {
                if name != cfg.command {
                    return Err(ConfigError(format!("file names command {}, command line names {name}", cfg.command)));
                }
            }
            cfg
        }
        None => {
            let (name, _) = sub.ok_or_else(|| ConfigError("no command given".into()))?;
            ExperimentConfig::new(name)?
        }
    };
    let sub_matches = sub.map(|(_, m)| m);
    let spec = cfg.spec();
    for k in GLOBAL_KEYS.iter().chain(spec.keys) {
        let lookup = |m: &ArgMatches| m.try_get_one::<String>(k.name).ok().flatten().cloned();
        let v = sub_matches.and_then(lookup).or_else(|| lookup(matches));
        if let Some(v) = v {
            cfg.set(k.name, &v)?;
        }
    }
    Ok(cfg)
}

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw.trim().parse().map_err(|e| ConfigError(format!("{THREADS_ENV}={raw:?}: {e}")))?;
    if n == 0 {
        return Err(ConfigError(format!("{THREADS_ENV} must be positive")));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError(format!("thread pool: {e}")))
}

/// Runs the program on `args` and returns the exit status.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = configure_threads()
        .map_err(RunError::Config)
        .and_then(|()| build_config(&matches).map_err(RunError::Config))
        .and_then(|cfg| {
            let format = output::Format::parse(cfg.raw("format").unwrap_or("text"))?;
            let artifacts = run(&cfg)?;
            let out = cfg.get::<PathBuf>("out")?;
            output::emit(&cfg, &artifacts, format, out.as_deref()).map_err(|e| RunError::Module(e.to_string()))?;
            Ok(artifacts)
        });
    match outcome {
        Ok(a) => match a.violation {
            Some(v) => {
                eprintln!("invariant violated: {v}");
                EXIT_VIOLATION
            }
            None => EXIT_OK,
        },
        Err(e @ RunError::Config(_)) => {
            eprintln!("{e}");
            EXIT_CONFIG
        }
        Err(e) => {
            eprintln!("{e}");
            EXIT_VIOLATION
        }
    }
}
