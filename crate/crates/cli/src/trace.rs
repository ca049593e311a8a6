//! JSONL run traces.
//!
//! One JSON object per line, discriminated by `record`:
//!
//! ```text
//! {"record":"allocation","iter":0,"learner":0,"n":100,"train_acc":1.0,"val_acc":0.7,"bound":null,"cost":100.0}
//! {"record":"failure","learner":2,"n":400,"message":"..."}
//! {"record":"summary","strategy":"daub","learner_names":["a","b"],"n_full":800,...}
//! {"record":"verdict","check":"step_below_r_nstar","learner":0,"passed":true,"detail":"..."}
//! {"record":"trend","n_full":1000,"regret":12.0,"scale":3000.0,"ratio":0.004,"selected":1}
//! ```
//!
//! Allocation and failure lines come first, in run order; the summary
//! follows them.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use daub_core::ideal::{TrendRow, Verdict};
use daub_core::model::LearnerFailure;
use daub_core::{AllocationRecord, LearnerId, RunReport, Strategy};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub strategy: Strategy,
    pub learner_names: Vec<String>,
    pub n_full: u64,
    pub selected: LearnerId,
    pub iterations: usize,
    pub allocation: u64,
    pub total_cost: f64,
    pub selected_cost: f64,
    pub regret: Option<f64>,
    pub loss: Option<f64>,
    /// Smallest bound any learner would report at `N` (exact mode only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_min_full: Option<f64>,
}

impl SummaryRecord {
    pub fn of(report: &RunReport) -> Self {
        Self {
            strategy: report.strategy,
            learner_names: report.learner_names.clone(),
            n_full: report.n_full,
            selected: report.selected,
            iterations: report.iterations(),
            allocation: report.total_allocation(),
            total_cost: report.total_cost,
            selected_cost: report.selected_cost,
            regret: report.regret,
            loss: report.loss,
            u_min_full: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum TraceRecord {
    Allocation(AllocationRecord),
    Failure(LearnerFailure),
    Summary(SummaryRecord),
    Verdict(Verdict),
    Trend(TrendRow),
}

/// Everything a trace file holds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn from_report(report: &RunReport) -> Self {
        let mut t = Self::default();
        t.push_report(report, None);
        t
    }

    pub fn push_report(&mut self, report: &RunReport, u_min_full: Option<f64>) {
        self.records
            .extend(report.records.iter().copied().map(TraceRecord::Allocation));
        self.records
            .extend(report.failures.iter().cloned().map(TraceRecord::Failure));
        let mut summary = SummaryRecord::of(report);
        summary.u_min_full = u_min_full;
        self.records.push(TraceRecord::Summary(summary));
    }

    pub fn allocations(&self) -> impl Iterator<Item = &AllocationRecord> {
        self.records.iter().filter_map(|r| match r {
            TraceRecord::Allocation(a) => Some(a),
            _ => None,
        })
    }

    pub fn verdicts(&self) -> impl Iterator<Item = &Verdict> {
        self.records.iter().filter_map(|r| match r {
            TraceRecord::Verdict(v) => Some(v),
            _ => None,
        })
    }

    pub fn trend_rows(&self) -> impl Iterator<Item = &TrendRow> {
        self.records.iter().filter_map(|r| match r {
            TraceRecord::Trend(t) => Some(t),
            _ => None,
        })
    }

    pub fn write_to<W: Write>(&self, out: W) -> anyhow::Result<()> {
        let mut out = BufWriter::new(out);
        for rec in &self.records {
            serde_json::to_writer(&mut out, rec)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let file =
            std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        self.write_to(file)
    }

    pub fn read_from<R: Read>(input: R) -> anyhow::Result<Self> {
        let mut records = Vec::new();
        for (i, line) in BufReader::new(input).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TraceRecord =
                serde_json::from_str(&line).with_context(|| format!("trace line {}", i + 1))?;
            records.push(rec);
        }
        Ok(Self { records })
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let file = std::fs::File::open(path)
            .with_context(|| format!("opening trace {}", path.display()))?;
        Self::read_from(file)
    }

    /// Rebuild the run report(s); one per summary record, each built from the
    /// allocation and failure lines preceding it.
    pub fn reports(&self) -> anyhow::Result<Vec<RunReport>> {
        let mut out = Vec::new();
        let mut allocations = Vec::new();
        let mut failures = Vec::new();
        for rec in &self.records {
            match rec {
                TraceRecord::Allocation(a) => allocations.push(*a),
                TraceRecord::Failure(f) => failures.push(f.clone()),
                TraceRecord::Summary(s) => {
                    let mut report = RunReport::from_records(
                        s.strategy,
                        s.learner_names.clone(),
                        s.n_full,
                        s.selected,
                        std::mem::take(&mut allocations),
                        std::mem::take(&mut failures),
                    )
                    .map_err(|e| anyhow!("inconsistent trace: {e}"))?;
                    report.regret = s.regret;
                    report.loss = s.loss;
                    if report.total_cost != s.total_cost
                        || report.selected_cost != s.selected_cost
                        || report.total_allocation() != s.allocation
                        || report.iterations() != s.iterations
                    {
                        bail!("summary totals disagree with the allocation records");
                    }
                    out.push(report);
                }
                TraceRecord::Verdict(_) | TraceRecord::Trend(_) => {}
            }
        }
        if !allocations.is_empty() {
            bail!("trace ends with allocations but no summary record");
        }
        Ok(out)
    }

    /// The single report of a one-run trace.
    pub fn report(&self) -> anyhow::Result<RunReport> {
        let mut reports = self.reports()?;
        match reports.len() {
            1 => Ok(reports.pop().unwrap()),
            0 => bail!("trace holds no summary record"),
            k => bail!("trace holds {k} runs, expected one"),
        }
    }
}
