use std::path::PathBuf;
use std::process::ExitCode;

use anisolab_cli::config::ExperimentKind;
use anisolab_cli::{run_file, validate_file, RunOptions, EXIT_ERROR, EXIT_PASS, EXIT_PROPERTY};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "anisolab",
    version,
    about = "Anisotropic symbol calculus and R-bound experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the JSON summary and CSV tables.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// R-bound of a finite matrix family.
    Rbound(Common),
    /// Order, homogeneity and seminorm saturation of a classical symbol.
    SymbolCheck(Common),
    /// Defect of the truncated composition formula against the operator product.
    Composition(Common),
    /// Multiplier R-bounds, Hilbert transform and equivalent Sobolev norms.
    Multiplier(Common),
    /// Resolvent parametrix remainder decay and accuracy.
    Parametrix(Common),
    /// R-bound of the resolvent family on a sector.
    ResolventRbound(Common),
    /// Maximal-regularity constants of the shifted Cauchy problem.
    Maxreg(Common),
    /// Parameter-ellipticity check.
    Ellipticity(Common),
    /// Runs whatever kind the config declares.
    Run(Common),
    /// Checks a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn init_threads(n: Option<usize>) -> anyhow::Result<()> {
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn run(common: Common, kind: Option<ExperimentKind>) -> i32 {
    if let Err(e) = init_threads(common.threads) {
        eprintln!("error: {e:#}");
        return EXIT_ERROR;
    }
    let opts = RunOptions {
        out: common.out,
        seed: common.seed,
        kind,
    };
    match run_file(&common.config, &opts) {
        Ok(r) => {
            for c in &r.outcome.checks {
                println!(
                    "{} {} (value {:e}, bound {:e})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.bound
                );
            }
            for p in &r.written {
                println!("wrote {}", p.display());
            }
            r.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Rbound(c) => run(c, Some(ExperimentKind::Rbound)),
        Command::SymbolCheck(c) => run(c, Some(ExperimentKind::SymbolCheck)),
        Command::Composition(c) => run(c, Some(ExperimentKind::Composition)),
        Command::Multiplier(c) => run(c, Some(ExperimentKind::Multiplier)),
        Command::Parametrix(c) => run(c, Some(ExperimentKind::Parametrix)),
        Command::ResolventRbound(c) => run(c, Some(ExperimentKind::ResolventRbound)),
        Command::Maxreg(c) => run(c, Some(ExperimentKind::Maxreg)),
        Command::Ellipticity(c) => run(c, Some(ExperimentKind::Ellipticity)),
        Command::Run(c) => run(c, None),
        Command::Validate { config } => match validate_file(&config) {
            Ok(d) if d.is_empty() => {
                println!("ok");
                EXIT_PASS
            }
            Ok(d) => {
                for m in d {
                    println!("{m}");
                }
                EXIT_PROPERTY
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                EXIT_ERROR
            }
        },
    };
    ExitCode::from(code as u8)
}
