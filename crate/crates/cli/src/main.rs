use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use curlheat_cli::{parse_config_with, run, Command};

/// Output directory override, applied after the config file and before flags.
const OUT_ENV: &str = "CURLHEAT_OUT";

#[derive(Parser, Debug)]
#[command(name = "curlheat", version, about = "Parabolic curl system: solver runs, convergence studies and norm probes")]
struct Args {
    /// Config file of `key = value` lines with `[section]` headers.
    config: Option<PathBuf>,
    /// Overrides any config key, e.g. `--set alpha=0.4` (repeatable).
    #[arg(short, long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    command: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Print the effective config and exit.
    #[arg(long)]
    echo: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match real_main(args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn real_main(args: Args) -> Result<u8, Box<dyn std::error::Error>> {
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?,
        None => String::new(),
    };
    let mut overrides: Vec<(String, String)> = Vec::new();
    if let Ok(dir) = std::env::var(OUT_ENV) {
        overrides.push(("out".into(), dir));
    }
    for s in &args.set {
        let (k, v) = s.split_once('=').ok_or_else(|| format!("--set expects KEY=VALUE, got {s:?}"))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    if let Some(c) = &args.command {
        overrides.push(("command".into(), c.clone()));
    }
    if let Some(o) = &args.out {
        overrides.push(("out".into(), o.display().to_string()));
    }
    if let Some(s) = args.seed {
        overrides.push(("seed".into(), s.to_string()));
    }
    let cfg = parse_config_with(&text, &overrides)?;
    if args.echo {
        print!("{}", cfg.to_text());
        return Ok(0);
    }
    let outcome = run(&cfg)?;
    if cfg.command == Command::Chain {
        print!("{}", std::fs::read_to_string(cfg.out.join("chain.txt"))?);
    }
    print!("{}", outcome.summary.text());
    println!("artifacts in {}", cfg.out.display());
    Ok(outcome.exit_code() as u8)
}
