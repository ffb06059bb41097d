use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use randman::experiments::FigureKind;
use randman::harness::{self, Command, Format, RunConfig};
use randman::Error;

/// Random projections of Gaussian random manifolds.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw one manifold and report the self-averaging audit.
    Sample,
    /// Monte Carlo check of the chordal and tangential cone guarantees.
    VerifyCones,
    /// Tabulate the analytic bounds.
    Bounds,
    /// Emit the data behind one figure.
    Figure {
        /// fig4, fig5, fig6a or fig6b; overrides the config.
        #[arg(long)]
        kind: Option<String>,
    },
    /// Empirical minimum projection dimension at one parameter point.
    Mstar,
    /// Re-run the job recorded in a manifest and diff its artifacts.
    Replay { manifest: PathBuf },
}

fn fail(e: Error) -> ExitCode {
    eprintln!("{}", serde_json::to_string(&e.record()).unwrap());
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match try_main(cli) {
        Ok(code) => code,
        Err(e) => fail(e),
    }
}

fn try_main(cli: Cli) -> randman::Result<ExitCode> {
    if let Cmd::Replay { manifest } = &cli.cmd {
        let r = harness::replay(manifest)?;
        for f in &r.identical {
            println!("identical {f}");
        }
        for f in &r.differing {
            println!("differs {f}");
        }
        for f in &r.missing {
            println!("missing {f}");
        }
        return Ok(if r.ok() { ExitCode::SUCCESS } else { ExitCode::from(2) });
    }
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(d) = cli.out_dir {
        cfg.out_dir = d;
    }
    if let Some(f) = &cli.format {
        cfg.format = f.parse::<Format>()?;
    }
    let cmd = match cli.cmd {
        Cmd::Sample => Command::Sample,
        Cmd::VerifyCones => Command::VerifyCones,
        Cmd::Bounds => Command::Bounds,
        Cmd::Mstar => Command::Mstar,
        Cmd::Figure { kind } => {
            if let Some(k) = kind {
                let kind: FigureKind = k.parse()?;
                cfg.figure.get_or_insert_with(Default::default).kind = kind;
            }
            Command::Figure
        }
        Cmd::Replay { .. } => unreachable!(),
    };
    let out = harness::run(cmd, cfg)?;
    for a in &out.artifacts {
        println!("{}", a.display());
    }
    println!("{}", out.manifest.display());
    Ok(ExitCode::SUCCESS)
}
