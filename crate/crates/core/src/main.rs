use clap::{Parser, Subcommand};
use shl::commands::{cmd_classify, cmd_demo, cmd_singular, cmd_verify, exit_code_for, EXIT_USAGE};
use shl::config::{parse_list, RunConfig, KEYS};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "shl",
    version,
    about = "Singular stationary solutions of −Δu = f(u) on a disc and the heat flows they seed",
    after_help = format!(
        "Exit codes: 0 pass, 2 hypothesis failure, 3 construction failure, 4 demo or check failure, 64 usage.\n\
         SHL_THREADS caps the worker threads.\n\nConfig keys (flat key = value, [section] headers):\n{KEYS}"
    )
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Catalog key; overrides the config.
    #[arg(long, global = true)]
    spec: Option<String>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for the random-field harnesses; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Probe times as fractions of T, comma separated.
    #[arg(long, global = true)]
    probe: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Hypothesis report and transform diagnostics.
    Classify,
    /// Singular profile, residual, pairings and integrability.
    Singular,
    /// Two-solution pipeline.
    Demo,
    /// Property suite.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Singular => "singular",
            Command::Demo => "demo",
            Command::Verify => "verify",
        }
    }
}

fn load(cli: &Cli) -> shl::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::parse(&std::fs::read_to_string(p)?)?,
        None => RunConfig::default(),
    };
    if let Some(s) = &cli.spec {
        cfg.demo.spec = s.clone();
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(p) = &cli.probe {
        cfg.demo.probe = parse_list("probe", p)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    if let Ok(n) = std::env::var("SHL_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("SHL_THREADS must be a positive integer");
                return ExitCode::from(EXIT_USAGE as u8);
            }
        }
    }
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    let cmd = cli.command;
    let res = match cmd {
        Command::Classify => cmd_classify(&cfg),
        Command::Singular => cmd_singular(&cfg),
        Command::Demo => cmd_demo(&cfg),
        Command::Verify => cmd_verify(&cfg),
    };
    let code = match res {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", cmd.name());
            exit_code_for(&e, cmd.name())
        }
    };
    ExitCode::from(code as u8)
}
