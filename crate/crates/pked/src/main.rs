use clap::{Parser, ValueEnum};
use pked::{ExpError, ExperimentConfig, Kind};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Quench,
    Eigenstates,
    Pairwise,
    Models,
    Theory,
}

impl From<Command> for Kind {
    fn from(c: Command) -> Self {
        match c {
            Command::Quench => Kind::Quench,
            Command::Eigenstates => Kind::Eigenstates,
            Command::Pairwise => Kind::Pairwise,
            Command::Models => Kind::Models,
            Command::Theory => Kind::Theory,
        }
    }
}

/// Projected-ensemble design campaigns.
#[derive(Debug, Parser)]
#[command(name = "pked", version)]
struct Cli {
    /// Campaign to run; must match `kind` in the config file.
    #[arg(value_enum)]
    command: Command,
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: PathBuf,
    /// Output root; overrides `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides `threads`.
    #[arg(long)]
    threads: Option<usize>,
    /// Top-level seed; overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(cli: &Cli) -> pked::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| ExpError::Config(format!("{}: {e}", cli.config.display())))?;
    let mut cfg = ExperimentConfig::parse_str(&text)?;
    let kind = Kind::from(cli.command);
    if cfg.kind != kind {
        return Err(ExpError::Config(format!(
            "config kind `{}` does not match command `{}`",
            cfg.kind.as_str(),
            kind.as_str()
        )));
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(s) = cli.seed {
        cfg = cfg.with_seed(s);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match load(&cli).and_then(|cfg| pked::run(&cfg)) {
        Ok(s) => {
            println!(
                "{} tables in {} ({:.1} s)",
                s.tables.len(),
                s.dir.display(),
                s.meta.wall_time_s
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
