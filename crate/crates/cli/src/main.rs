use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use daub_cli::commands::{
    cmd_ablate_ft, cmd_compare_configs, cmd_compare_traces, cmd_run, cmd_schedule,
    cmd_verify_suite, Overrides,
};
use daub_cli::config::{parse_sizes, Mode, RunConfigFile};
use daub_cli::error::{CliError, CliResult};
use daub_core::ideal::SuiteParams;

#[derive(Debug, Parser)]
#[command(
    name = "daub",
    version,
    about = "Allocate training data across learners by upper bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone)]
struct SizeList(Vec<u64>);

fn size_list(s: &str) -> Result<SizeList, String> {
    parse_sizes(s).map(SizeList).map_err(|e| format!("{e:#}"))
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (defaults to `[output] dir`, then `out/` next to the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Explicit schedule, comma separated; must end at N.
    #[arg(long, value_parser = size_list)]
    sizes: Option<SizeList>,
    /// daub, daub_star, full, fixed_fraction, elimination, verify or trend.
    #[arg(long)]
    mode: Option<Mode>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            sizes: self.sizes.clone().map(|s| s.0),
            mode: self.mode,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the mode named in the config; writes trace.jsonl and summary.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Compare full training with DAUB, from two traces or by running configs.
    Compare {
        #[arg(long, requires = "full", conflicts_with = "config")]
        daub: Option<PathBuf>,
        #[arg(long, requires = "daub")]
        full: Option<PathBuf>,
        /// Repeat to tabulate several pools and print the means.
        #[arg(long)]
        config: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Print the allocation sizes.
    Schedule {
        #[arg(long, conflicts_with = "config")]
        base: Option<u64>,
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long)]
        full: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = size_list)]
        sizes: Option<SizeList>,
    },
    /// DAUB with and without the training-accuracy cap over many seeds.
    AblateFt {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Exact-mode guarantee checks, on a config or on random problems.
    Verify {
        #[arg(long, conflicts_with = "problems")]
        config: Option<PathBuf>,
        /// Number of random problems to draw when no config is given.
        #[arg(long)]
        problems: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Regret ratio across the config's `[trend] grid`.
    Trend {
        #[arg(long)]
        config: PathBuf,
        /// Replace the config's grid, comma separated.
        #[arg(long, value_parser = size_list)]
        grid: Option<SizeList>,
        #[command(flatten)]
        common: Common,
    },
}

fn run_mode(config: &Path, common: &Common, mode: Option<Mode>) -> CliResult<()> {
    let mut cfg = RunConfigFile::load(config)?;
    let mut overrides = common.overrides();
    if mode.is_some() {
        overrides.mode = mode;
    }
    if let Some(m) = overrides.mode {
        cfg.mode = m;
    }
    let out = cmd_run(&cfg, &overrides)?;
    print!("{}", out.text);
    eprintln!("wrote {}", out.out_dir.display());
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config, common } => run_mode(&config, &common, None),
        Command::Compare {
            daub,
            full,
            config,
            common,
        } => {
            if let (Some(daub), Some(full)) = (daub, full) {
                print!("{}", cmd_compare_traces(&daub, &full)?);
                return Ok(());
            }
            if config.is_empty() {
                return Err(CliError::config(anyhow::anyhow!(
                    "compare needs --daub and --full traces or at least one --config"
                )));
            }
            let configs = config
                .iter()
                .map(|p| RunConfigFile::load(p))
                .collect::<CliResult<Vec<_>>>()?;
            let (_, text) = cmd_compare_configs(&configs, &common.overrides())?;
            print!("{text}");
            Ok(())
        }
        Command::Schedule {
            base,
            ratio,
            full,
            config,
            sizes,
        } => {
            let (b, r, n) = match (config, base, ratio, full) {
                (Some(path), _, _, _) => {
                    let cfg = RunConfigFile::load(&path)?;
                    let a = &cfg.allocation;
                    let sizes = sizes.clone().map(|s| s.0).or_else(|| a.sizes.clone());
                    println!("{}", cmd_schedule(a.b, a.r, a.n_full, sizes.as_deref())?);
                    return Ok(());
                }
                (None, Some(b), Some(r), Some(n)) => (b, r, n),
                _ => {
                    return Err(CliError::config(anyhow::anyhow!(
                        "schedule needs --base, --ratio and --full, or --config"
                    )))
                }
            };
            println!(
                "{}",
                cmd_schedule(b, r, n, sizes.as_ref().map(|s| s.0.as_slice()))?
            );
            Ok(())
        }
        Command::AblateFt {
            config,
            seeds,
            common,
        } => {
            let cfg = RunConfigFile::load(&config)?;
            let out = cmd_ablate_ft(&cfg, &common.overrides(), seeds)?;
            print!("{}", out.text);
            Ok(())
        }
        Command::Verify {
            config,
            problems,
            common,
        } => match config {
            Some(path) => run_mode(&path, &common, Some(Mode::Verify)),
            None => {
                let out = cmd_verify_suite(
                    problems.unwrap_or(200),
                    common.seed.unwrap_or(0),
                    &SuiteParams::default(),
                )?;
                print!("{}", out.text);
                match out.failed().count() {
                    0 => Ok(()),
                    k => Err(CliError::other(anyhow::anyhow!(
                        "{k} verification checks failed"
                    ))),
                }
            }
        },
        Command::Trend {
            config,
            grid,
            common,
        } => {
            let mut cfg = RunConfigFile::load(&config)?;
            if let Some(grid) = grid {
                cfg.trend = Some(daub_cli::config::TrendSection { grid: grid.0 });
            }
            cfg.mode = Mode::Trend;
            if cfg.trend.as_ref().is_none_or(|t| t.grid.is_empty()) {
                return Err(CliError::config(anyhow::anyhow!("trend needs a grid")));
            }
            let out = cmd_run(&cfg, &common.overrides())?;
            print!("{}", out.text);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
