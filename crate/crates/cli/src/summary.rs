//! One-row-per-run CSV summaries.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::Context;
use daub_core::RunReport;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub strategy: String,
    pub learners: usize,
    pub n_full: u64,
    pub selected: usize,
    pub selected_name: String,
    pub iterations: usize,
    pub allocation: u64,
    pub total_cost: f64,
    pub selected_cost: f64,
    pub regret: Option<f64>,
    pub loss: Option<f64>,
}

impl SummaryRow {
    pub fn of(report: &RunReport) -> Self {
        Self {
            strategy: report.strategy.label().to_string(),
            learners: report.learner_count(),
            n_full: report.n_full,
            selected: report.selected.0,
            selected_name: report.learner_names[report.selected.0].clone(),
            iterations: report.iterations(),
            allocation: report.total_allocation(),
            total_cost: report.total_cost,
            selected_cost: report.selected_cost,
            regret: report.regret,
            loss: report.loss,
        }
    }
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_file(rows: &[SummaryRow], path: &Path) -> anyhow::Result<()> {
    let file =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_summary(rows, file)
}

pub fn read_summary<R: Read>(input: R) -> anyhow::Result<Vec<SummaryRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Into::into))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use daub_core::scheduler::run_full_training;
    use daub_core::{DaubConfig, SyntheticCurveSpec, SyntheticLearner};

    #[test]
    fn full_training_row_and_round_trip() {
        let mut learners: Vec<_> = [0.7, 0.8, 0.75]
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                SyntheticLearner::new(format!("l{i}"), SyntheticCurveSpec::inverse(a, 10.0))
                    .unwrap()
            })
            .collect();
        let cfg = DaubConfig::new(2.0, 100, 1000, 0.01, 1).unwrap();
        let report = run_full_training(&mut learners, &cfg, 0).unwrap();
        let row = SummaryRow::of(&report);
        assert_eq!(row.allocation, 3000);
        assert_eq!(row.selected_name, "l1");
        assert_eq!(row.strategy, "full");

        let mut buf = Vec::new();
        write_summary(std::slice::from_ref(&row), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "strategy,learners,n_full,selected,selected_name,iterations,allocation,total_cost,selected_cost,regret,loss\n"
        ));
        assert_eq!(read_summary(buf.as_slice()).unwrap(), vec![row]);
    }
}
