//! TOML run configuration.
//!
//! ```toml
//! mode = "daub"
//! seed = 7
//!
//! [allocation]
//! r = 2.0
//! b = 100
//! n_full = 6400
//! delta = 0.01
//!
//! [output]
//! dir = "out"
//!
//! [[learners]]
//! kind = "synthetic"
//! name = "fast"
//! family = "inverse"
//! asymptote = 0.9
//! scale = 50.0
//!
//! [[learners]]
//! kind = "replay"
//! manifest = "replay/manifest.csv"
//!
//! [[learners]]
//! kind = "external"
//! command = ["python", "-m", "worker"]
//! names = ["tree", "forest"]
//! ```
//!
//! Relative paths resolve against the config file's directory.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use anyhow::{anyhow, bail, Context};
use daub_core::learners::load_manifest;
use daub_core::{
    DaubConfig, Learner, ReplayLearner, ReplayTable, SyntheticCurveSpec, SyntheticLearner,
    WorkerClient,
};
use serde::Deserialize;

use crate::error::{CliError, CliResult, ExitContext, ExitKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Daub,
    DaubStar,
    Full,
    FixedFraction,
    Elimination,
    Verify,
    Trend,
}

impl FromStr for Mode {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "daub" => Mode::Daub,
            "daub_star" => Mode::DaubStar,
            "full" => Mode::Full,
            "fixed_fraction" => Mode::FixedFraction,
            "elimination" => Mode::Elimination,
            "verify" => Mode::Verify,
            "trend" => Mode::Trend,
            other => bail!("unknown mode `{other}`"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationSection {
    pub r: f64,
    pub b: u64,
    pub n_full: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_step")]
    pub s: u64,
    /// Explicit schedule replacing the geometric one.
    #[serde(default)]
    pub sizes: Option<Vec<u64>>,
    /// Bootstrap size for `fixed_fraction` mode.
    #[serde(default)]
    pub fixed_n: Option<u64>,
}

fn default_delta() -> f64 {
    0.01
}

fn default_step() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrendSection {
    pub grid: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerEntry {
    Synthetic {
        name: String,
        #[serde(flatten)]
        spec: SyntheticCurveSpec,
    },
    /// Every row of a `name,path` manifest becomes one learner.
    Replay { manifest: PathBuf },
    External {
        command: Vec<String>,
        names: Vec<String>,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
    },
}

fn default_timeout() -> f64 {
    600.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    pub allocation: AllocationSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub trend: Option<TrendSection>,
    pub learners: Vec<LearnerEntry>,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfigFile {
    pub fn parse(text: &str, base_dir: &Path) -> CliResult<Self> {
        let mut cfg: RunConfigFile = toml::from_str(text).exit(ExitKind::Config)?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .exit(ExitKind::Config)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
            .map_err(|e| CliError::config(e.inner.context(format!("in {}", path.display()))))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn validate(&self) -> CliResult<()> {
        if self.learners.is_empty() {
            return Err(CliError::config(anyhow!("learner list is empty")));
        }
        for entry in &self.learners {
            match entry {
                LearnerEntry::Synthetic { name, spec } => spec
                    .validate()
                    .with_context(|| format!("learner `{name}`"))
                    .exit(ExitKind::Config)?,
                LearnerEntry::Replay { manifest } => {
                    let path = self.resolve(manifest);
                    if !path.is_file() {
                        return Err(CliError::config(anyhow!(
                            "replay manifest {} does not exist",
                            path.display()
                        )));
                    }
                }
                LearnerEntry::External {
                    command,
                    names,
                    timeout_secs,
                } => {
                    if command.is_empty() {
                        return Err(CliError::config(anyhow!(
                            "external worker command is empty"
                        )));
                    }
                    if names.is_empty() {
                        return Err(CliError::config(anyhow!(
                            "external worker `{}` lists no learners",
                            command[0]
                        )));
                    }
                    if !(timeout_secs.is_finite() && *timeout_secs > 0.0) {
                        return Err(CliError::config(anyhow!(
                            "timeout_secs must be positive (got {timeout_secs})"
                        )));
                    }
                }
            }
        }
        if self.mode == Mode::Trend && self.trend.as_ref().is_none_or(|t| t.grid.is_empty()) {
            return Err(CliError::config(anyhow!(
                "trend mode needs a non-empty [trend] grid"
            )));
        }
        if self.mode == Mode::FixedFraction && self.allocation.fixed_n.is_none() {
            return Err(CliError::config(anyhow!(
                "fixed_fraction mode needs allocation.fixed_n"
            )));
        }
        self.daub_config()?;
        Ok(())
    }

    pub fn daub_config(&self) -> CliResult<DaubConfig> {
        let a = &self.allocation;
        let mut cfg = DaubConfig::new(a.r, a.b, a.n_full, a.delta, a.s).exit(ExitKind::Config)?;
        if let Some(sizes) = &a.sizes {
            cfg = cfg.with_sizes(sizes.clone()).exit(ExitKind::Config)?;
        }
        Ok(cfg)
    }

    /// Synthetic specs in learner order, or `None` if any learner is not synthetic.
    pub fn synthetic_specs(&self) -> Option<Vec<(String, SyntheticCurveSpec)>> {
        self.learners
            .iter()
            .map(|e| match e {
                LearnerEntry::Synthetic { name, spec } => Some((name.clone(), *spec)),
                _ => None,
            })
            .collect()
    }

    pub fn output_dir(&self) -> Option<PathBuf> {
        self.output.dir.as_deref().map(|d| self.resolve(d))
    }

    /// Instantiate every learner. External workers are spawned here.
    pub fn build_learners(&self) -> CliResult<Vec<Box<dyn Learner>>> {
        let mut out: Vec<Box<dyn Learner>> = Vec::new();
        for entry in &self.learners {
            match entry {
                LearnerEntry::Synthetic { name, spec } => {
                    let l = SyntheticLearner::new(name.clone(), *spec).exit(ExitKind::Config)?;
                    out.push(Box::new(l));
                }
                LearnerEntry::Replay { manifest } => {
                    let path = self.resolve(manifest);
                    let rows = load_manifest(&path).exit(ExitKind::Config)?;
                    for (name, table_path) in rows {
                        let table = ReplayTable::load(&table_path)
                            .with_context(|| format!("replay table for `{name}`"))
                            .exit(ExitKind::Config)?;
                        out.push(Box::new(ReplayLearner::new(name, table)));
                    }
                }
                LearnerEntry::External {
                    command,
                    names,
                    timeout_secs,
                } => {
                    let worker =
                        WorkerClient::spawn(command, Duration::from_secs_f64(*timeout_secs))
                            .with_context(|| format!("starting worker `{}`", command[0]))
                            .exit(ExitKind::LearnerAbort)?;
                    let learners = worker.into_learners(names).exit(ExitKind::LearnerAbort)?;
                    out.extend(
                        learners
                            .into_iter()
                            .map(|l| Box::new(l) as Box<dyn Learner>),
                    );
                }
            }
        }
        Ok(out)
    }

    /// Expected accuracies at `N`, available when every learner is synthetic.
    pub fn oracle_finals(&self, config: &DaubConfig) -> Option<Vec<f64>> {
        self.synthetic_specs().map(|specs| {
            specs
                .iter()
                .map(|(_, s)| s.exact_accuracy(config.n_full()))
                .collect()
        })
    }
}

/// Parse a comma- or space-separated size list.
pub fn parse_sizes(text: &str) -> anyhow::Result<Vec<u64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<u64>()
                .with_context(|| format!("`{t}` is not a sample count"))
        })
        .collect()
}
