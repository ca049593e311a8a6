//! Command implementations. Each returns its printable output so the
//! binary and the tests share one code path.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use daub_core::ideal::{
    regret_trend, run_daub_star, seeded_problem, verify_spec_ub, IdealProblem, SuiteParams, Verdict,
};
use daub_core::scheduler::{
    run_daub, run_elimination, run_fixed_fraction, run_full_training, schedule_sizes,
};
use daub_core::{BoundPolicy, DaubConfig, Learner, LearnerId, RunOptions, RunReport};

use crate::compare::{loss_label, mean_speedup_loss, speedup_label, thousands, ComparisonTable};
use crate::config::{Mode, RunConfigFile};
use crate::error::{CliError, CliResult, ExitContext, ExitKind};
use crate::summary::{write_summary_file, SummaryRow};
use crate::trace::{Trace, TraceRecord};

pub const TRACE_FILE: &str = "trace.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TREND_FILE: &str = "trend.csv";
pub const ABLATION_FILE: &str = "ablation.csv";

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub sizes: Option<Vec<u64>>,
    pub mode: Option<Mode>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfigFile) -> CliResult<()> {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(mode) = self.mode {
            cfg.mode = mode;
        }
        if let Some(sizes) = &self.sizes {
            cfg.allocation.sizes = Some(sizes.clone());
            cfg.daub_config()?;
        }
        Ok(())
    }

    fn out_dir(&self, cfg: &RunConfigFile) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.output_dir())
            .unwrap_or_else(|| cfg.resolve(Path::new("out")))
    }
}

/// Result of `run`: the trace written to disk, the summary rows and the
/// text printed to stdout.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Trace,
    pub rows: Vec<SummaryRow>,
    pub out_dir: PathBuf,
    pub text: String,
}

impl RunOutput {
    pub fn failed_verdicts(&self) -> Vec<&Verdict> {
        self.trace.verdicts().filter(|v| !v.passed).collect()
    }
}

fn learners_for(cfg: &RunConfigFile) -> CliResult<Vec<Box<dyn Learner>>> {
    cfg.build_learners()
}

fn attach_oracle(
    cfg: &RunConfigFile,
    config: &DaubConfig,
    report: &mut RunReport,
) -> CliResult<()> {
    if let Some(finals) = cfg.oracle_finals(config) {
        report
            .attach_oracle(&finals, config.delta())
            .exit(ExitKind::Other)?;
    }
    Ok(())
}

/// One allocation run in any of the single-run modes.
pub fn execute_single(
    cfg: &RunConfigFile,
    config: &DaubConfig,
    mode: Mode,
) -> CliResult<RunReport> {
    let mut learners = learners_for(cfg)?;
    let seed = cfg.seed;
    let estimated = RunOptions::default().with_seed(seed);
    let mut report = match mode {
        Mode::Daub => run_daub(&mut learners, config, &estimated)?,
        Mode::DaubStar => run_daub(&mut learners, config, &RunOptions::ideal().with_seed(seed))?,
        Mode::Full => run_full_training(&mut learners, config, seed)?,
        Mode::FixedFraction => {
            let n = cfg.allocation.fixed_n.ok_or_else(|| {
                CliError::config(anyhow!("fixed_fraction mode needs allocation.fixed_n"))
            })?;
            run_fixed_fraction(&mut learners, n, config, seed)?
        }
        Mode::Elimination => run_elimination(&mut learners, config, &estimated)?,
        Mode::Verify | Mode::Trend => {
            return Err(CliError::other(anyhow!(
                "{mode:?} is not a single-run mode"
            )))
        }
    };
    attach_oracle(cfg, config, &mut report)?;
    Ok(report)
}

fn synthetic_specs(
    cfg: &RunConfigFile,
    mode: &str,
) -> CliResult<Vec<daub_core::SyntheticCurveSpec>> {
    cfg.synthetic_specs()
        .map(|v| v.into_iter().map(|(_, s)| s).collect())
        .ok_or_else(|| CliError::config(anyhow!("{mode} mode needs every learner to be synthetic")))
}

fn config_names(cfg: &RunConfigFile) -> Vec<String> {
    cfg.synthetic_specs()
        .map(|v| v.into_iter().map(|(n, _)| n).collect())
        .unwrap_or_default()
}

/// Exact-mode run plus every guarantee check, and bound validity per learner.
pub fn verify_problem(problem: &IdealProblem) -> CliResult<(RunReport, Vec<Verdict>, f64)> {
    let outcome = run_daub_star(problem)?;
    let mut verdicts = outcome.verdicts;
    for (i, spec) in problem.specs().iter().enumerate() {
        let mut v = verify_spec_ub(spec, problem.config());
        v.learner = Some(LearnerId(i));
        verdicts.push(v);
    }
    Ok((outcome.report, verdicts, outcome.u_min_full))
}

fn verdict_text(verdicts: &[Verdict]) -> String {
    let mut text = String::new();
    let failed: Vec<_> = verdicts.iter().filter(|v| !v.passed).collect();
    for v in &failed {
        let who = v
            .learner
            .map(|l| format!(" learner {l}"))
            .unwrap_or_default();
        let _ = writeln!(text, "FAIL {}{who}: {}", v.check, v.detail);
    }
    let _ = writeln!(
        text,
        "{} checks, {} passed, {} failed",
        verdicts.len(),
        verdicts.len() - failed.len(),
        failed.len()
    );
    text
}

fn summary_text(rows: &[SummaryRow]) -> String {
    let mut text = String::new();
    for r in rows {
        let _ = write!(
            text,
            "{}: selected {} ({}) after {} iterations, allocation {}, cost {:.3}",
            r.strategy,
            r.selected_name,
            r.selected,
            r.iterations,
            thousands(r.allocation),
            r.total_cost
        );
        if let Some(regret) = r.regret {
            let _ = write!(text, ", regret {regret:.3}");
        }
        if let Some(loss) = r.loss {
            let _ = write!(text, ", loss {}", loss_label(loss));
        }
        text.push('\n');
    }
    text
}

/// Execute the configured mode and write `trace.jsonl` and `summary.csv`
/// (plus `trend.csv` in trend mode) into the output directory.
pub fn cmd_run(cfg: &RunConfigFile, overrides: &Overrides) -> CliResult<RunOutput> {
    let mut cfg = cfg.clone();
    overrides.apply(&mut cfg)?;
    let config = cfg.daub_config()?;
    let out_dir = overrides.out_dir(&cfg);
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))
        .exit(ExitKind::Other)?;

    let mut trace = Trace::default();
    let mut rows = Vec::new();
    let mut text = String::new();
    match cfg.mode {
        Mode::Verify => {
            let specs = synthetic_specs(&cfg, "verify")?;
            let problem = IdealProblem::new(specs, config.clone()).exit(ExitKind::Config)?;
            let (mut report, verdicts, u_min) = verify_problem(&problem)?;
            report.learner_names = config_names(&cfg);
            trace.push_report(&report, Some(u_min));
            trace
                .records
                .extend(verdicts.iter().cloned().map(TraceRecord::Verdict));
            rows.push(SummaryRow::of(&report));
            text.push_str(&summary_text(&rows));
            text.push_str(&verdict_text(&verdicts));
        }
        Mode::Trend => {
            let specs = synthetic_specs(&cfg, "trend")?;
            let grid = &cfg.trend.as_ref().expect("validated").grid;
            let a = &cfg.allocation;
            let table = regret_trend(&specs, grid, a.b, a.r, a.delta, a.s)?;
            let mut w = csv::Writer::from_path(out_dir.join(TREND_FILE)).exit(ExitKind::Other)?;
            let _ = writeln!(
                text,
                "{:>10}  {:>14}  {:>14}  {:>12}  selected",
                "N", "regret", "M*cost", "ratio"
            );
            for row in &table {
                w.serialize(row).exit(ExitKind::Other)?;
                let _ = writeln!(
                    text,
                    "{:>10}  {:>14.3}  {:>14.1}  {:>12.6}  {}",
                    row.n_full, row.regret, row.scale, row.ratio, row.selected
                );
            }
            w.flush().exit(ExitKind::Other)?;
            trace
                .records
                .extend(table.into_iter().map(TraceRecord::Trend));
        }
        mode => {
            let report = execute_single(&cfg, &config, mode)?;
            trace.push_report(&report, None);
            rows.push(SummaryRow::of(&report));
            text.push_str(&summary_text(&rows));
        }
    }
    trace
        .write(&out_dir.join(TRACE_FILE))
        .exit(ExitKind::Other)?;
    if !rows.is_empty() {
        write_summary_file(&rows, &out_dir.join(SUMMARY_FILE)).exit(ExitKind::Other)?;
    }
    let output = RunOutput {
        trace,
        rows,
        out_dir,
        text,
    };
    let failed = output.failed_verdicts().len();
    if failed > 0 {
        return Err(CliError::other(anyhow!(
            "{failed} verification checks failed\n{}",
            output.text
        )));
    }
    Ok(output)
}

/// Compare two traces: full training first, DAUB second.
pub fn cmd_compare_traces(daub: &Path, full: &Path) -> CliResult<ComparisonTable> {
    let daub = Trace::read(daub)
        .and_then(|t| t.report())
        .exit(ExitKind::Config)?;
    let full = Trace::read(full)
        .and_then(|t| t.report())
        .exit(ExitKind::Config)?;
    ComparisonTable::full_vs_daub(&full, &daub).exit(ExitKind::Config)
}

/// Run full training and DAUB on every config and tabulate each, then the means.
pub fn cmd_compare_configs(
    configs: &[RunConfigFile],
    overrides: &Overrides,
) -> CliResult<(Vec<ComparisonTable>, String)> {
    let mut tables = Vec::new();
    let mut text = String::new();
    for (i, cfg) in configs.iter().enumerate() {
        let mut cfg = cfg.clone();
        overrides.apply(&mut cfg)?;
        let config = cfg.daub_config()?;
        let full = execute_single(&cfg, &config, Mode::Full)?;
        let daub = execute_single(&cfg, &config, Mode::Daub)?;
        let table = ComparisonTable::full_vs_daub(&full, &daub).exit(ExitKind::Config)?;
        let _ = writeln!(
            text,
            "[{}] N = {}, {} learners",
            i + 1,
            config.n_full(),
            full.learner_count()
        );
        let _ = writeln!(text, "{table}");
        tables.push(table);
    }
    if tables.len() > 1 {
        if let Some((speedup, loss)) = mean_speedup_loss(&tables, 1) {
            let _ = writeln!(
                text,
                "mean over {} configs: speedup {}, loss {}",
                tables.len(),
                speedup_label(speedup),
                loss_label(loss)
            );
        }
    }
    Ok((tables, text))
}

/// The size list a learner walks through, space separated.
pub fn cmd_schedule(b: u64, r: f64, n_full: u64, sizes: Option<&[u64]>) -> CliResult<String> {
    let list = match sizes {
        None => {
            // Same validation as a run, so b * r^2 > N is reported by name.
            DaubConfig::new(r, b, n_full, 0.01, 1).exit(ExitKind::Config)?;
            schedule_sizes(b, r, n_full).exit(ExitKind::Config)?
        }
        Some(explicit) => DaubConfig::new(r, b, n_full, 0.01, 1)
            .and_then(|c| c.with_sizes(explicit.to_vec()))
            .exit(ExitKind::Config)?
            .sizes()
            .to_vec(),
    };
    Ok(list
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join(" "))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationSeed {
    pub seed: u64,
    pub allocation_no_ft: u64,
    pub allocation_daub: u64,
    pub iterations_no_ft: usize,
    pub iterations_daub: usize,
}

#[derive(Debug, Clone)]
pub struct AblationOutput {
    pub table: ComparisonTable,
    pub seeds: Vec<AblationSeed>,
    pub text: String,
}

impl AblationOutput {
    /// Seeds on which dropping the training-accuracy cap allocated at least as much.
    pub fn no_ft_at_least_daub(&self) -> usize {
        self.seeds
            .iter()
            .filter(|s| s.allocation_no_ft >= s.allocation_daub)
            .count()
    }
}

/// DAUB with and without the training-accuracy cap, over `seeds`
/// consecutive seeds starting at the config's seed. The table shows full
/// training, the uncapped variant and DAUB for the first seed.
pub fn cmd_ablate_ft(
    cfg: &RunConfigFile,
    overrides: &Overrides,
    seeds: u64,
) -> CliResult<AblationOutput> {
    let mut cfg = cfg.clone();
    overrides.apply(&mut cfg)?;
    let config = cfg.daub_config()?;
    let mut learners = learners_for(&cfg)?;
    let mut runs = Vec::new();
    let mut first = None;
    for k in 0..seeds.max(1) {
        let seed = cfg.seed.wrapping_add(k);
        let capped = RunOptions::default().with_seed(seed);
        let uncapped = RunOptions {
            policy: BoundPolicy::Estimated { train_cap: false },
            seed,
        };
        let mut no_ft = run_daub(&mut learners, &config, &uncapped)?;
        let mut daub = run_daub(&mut learners, &config, &capped)?;
        attach_oracle(&cfg, &config, &mut no_ft)?;
        attach_oracle(&cfg, &config, &mut daub)?;
        runs.push(AblationSeed {
            seed,
            allocation_no_ft: no_ft.total_allocation(),
            allocation_daub: daub.total_allocation(),
            iterations_no_ft: no_ft.iterations(),
            iterations_daub: daub.iterations(),
        });
        if first.is_none() {
            first = Some((no_ft, daub));
        }
    }
    let (no_ft, daub) = first.expect("at least one seed");
    let full = run_full_training(&mut learners, &config, cfg.seed)?;
    let table = ComparisonTable::new(("full", &full), &[("no f^T", &no_ft), ("daub", &daub)])
        .exit(ExitKind::Other)?;

    let out_dir = overrides.out.clone().or_else(|| cfg.output_dir());
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(&dir).exit(ExitKind::Other)?;
        let mut w = csv::Writer::from_path(dir.join(ABLATION_FILE)).exit(ExitKind::Other)?;
        w.write_record([
            "seed",
            "allocation_no_ft",
            "allocation_daub",
            "iterations_no_ft",
            "iterations_daub",
        ])
        .exit(ExitKind::Other)?;
        for s in &runs {
            w.write_record([
                s.seed.to_string(),
                s.allocation_no_ft.to_string(),
                s.allocation_daub.to_string(),
                s.iterations_no_ft.to_string(),
                s.iterations_daub.to_string(),
            ])
            .exit(ExitKind::Other)?;
        }
        w.flush().exit(ExitKind::Other)?;
    }

    let mut out = AblationOutput {
        table,
        seeds: runs,
        text: String::new(),
    };
    let k = out.seeds.len() as f64;
    let mean = |f: fn(&AblationSeed) -> u64| out.seeds.iter().map(f).sum::<u64>() as f64 / k;
    let mean_no_ft = mean(|s| s.allocation_no_ft);
    let mean_daub = mean(|s| s.allocation_daub);
    out.text = format!(
        "{}\nno f^T allocated >= DAUB on {}/{} seeds (mean allocation {} vs {})\n",
        out.table,
        out.no_ft_at_least_daub(),
        out.seeds.len(),
        thousands(mean_no_ft.round() as u64),
        thousands(mean_daub.round() as u64),
    );
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SuiteOutput {
    pub problems: usize,
    pub verdicts: Vec<(usize, Verdict)>,
    pub text: String,
}

impl SuiteOutput {
    pub fn failed(&self) -> impl Iterator<Item = &(usize, Verdict)> {
        self.verdicts.iter().filter(|(_, v)| !v.passed)
    }
}

/// Exact-mode checks over `problems` random pools drawn from `seed`, `seed + 1`, ...
pub fn cmd_verify_suite(
    problems: usize,
    seed: u64,
    params: &SuiteParams,
) -> CliResult<SuiteOutput> {
    let mut verdicts = Vec::new();
    for i in 0..problems {
        let problem = seeded_problem(seed.wrapping_add(i as u64), params).exit(ExitKind::Config)?;
        let (_, vs, _) = verify_problem(&problem)?;
        verdicts.extend(vs.into_iter().map(|v| (i, v)));
    }
    let mut out = SuiteOutput {
        problems,
        verdicts,
        text: String::new(),
    };
    let mut text = String::new();
    for (i, v) in out.failed() {
        let who = v
            .learner
            .map(|l| format!(" learner {l}"))
            .unwrap_or_default();
        let _ = writeln!(text, "FAIL problem {i} {}{who}: {}", v.check, v.detail);
    }
    let failed = out.failed().count();
    let _ = writeln!(
        text,
        "{problems} problems, {} checks, {failed} failed",
        out.verdicts.len()
    );
    out.text = text;
    Ok(out)
}
