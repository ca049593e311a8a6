//! Side-by-side comparison tables: iterations, allocation and time per
//! strategy, plus speedup and loss against a baseline column.

use std::fmt;

use anyhow::bail;
use daub_core::RunReport;

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub label: String,
    pub iterations: usize,
    pub allocation: u64,
    pub time: f64,
    /// Validation accuracy of the selected learner at `N`.
    pub selected_acc: f64,
    /// Baseline time over this column's time; `None` for the baseline.
    pub speedup: Option<f64>,
    /// Baseline accuracy minus this column's, floored at zero.
    pub loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub columns: Vec<Column>,
}

fn selected_acc(report: &RunReport) -> anyhow::Result<f64> {
    match report.observed_val(report.selected, report.n_full) {
        Some(v) => Ok(v),
        None => bail!(
            "{} run never trained its selected learner at N = {}",
            report.strategy.label(),
            report.n_full
        ),
    }
}

fn column(label: &str, report: &RunReport) -> anyhow::Result<Column> {
    Ok(Column {
        label: label.to_string(),
        iterations: report.iterations(),
        allocation: report.total_allocation(),
        time: report.total_cost,
        selected_acc: selected_acc(report)?,
        speedup: None,
        loss: None,
    })
}

impl ComparisonTable {
    /// `baseline` first, then every other run with speedup and loss against it.
    /// All runs must share the learner pool and `N`.
    pub fn new(
        baseline: (&str, &RunReport),
        others: &[(&str, &RunReport)],
    ) -> anyhow::Result<Self> {
        let (_, base) = baseline;
        for (label, r) in others {
            if r.learner_names != base.learner_names {
                bail!(
                    "learner pools differ: `{label}` has {:?}, baseline has {:?}",
                    r.learner_names,
                    base.learner_names
                );
            }
            if r.n_full != base.n_full {
                bail!(
                    "`{label}` ran with N = {}, baseline with N = {}",
                    r.n_full,
                    base.n_full
                );
            }
        }
        let first = column(baseline.0, base)?;
        let mut columns = vec![first.clone()];
        for (label, r) in others {
            let mut c = column(label, r)?;
            c.speedup = Some(first.time / c.time);
            c.loss = Some((first.selected_acc - c.selected_acc).max(0.0));
            columns.push(c);
        }
        Ok(Self { columns })
    }

    /// Full training against DAUB.
    pub fn full_vs_daub(full: &RunReport, daub: &RunReport) -> anyhow::Result<Self> {
        Self::new(("full", full), &[("daub", daub)])
    }

    pub fn speedup(&self, col: usize) -> Option<f64> {
        self.columns.get(col).and_then(|c| c.speedup)
    }

    pub fn loss(&self, col: usize) -> Option<f64> {
        self.columns.get(col).and_then(|c| c.loss)
    }
}

/// Whole numbers get no decimals from 10x up, one decimal below.
pub fn speedup_label(speedup: f64) -> String {
    if !speedup.is_finite() {
        return "inf".into();
    }
    if speedup >= 10.0 {
        format!("{speedup:.0}x")
    } else {
        format!("{speedup:.1}x")
    }
}

/// Accuracy difference as a percentage with one decimal.
pub fn loss_label(loss: f64) -> String {
    let pct = loss * 100.0;
    let s = format!("{pct:.1}%");
    if s == "-0.0%" {
        "0.0%".into()
    } else {
        s
    }
}

/// `1234567` as `1,234,567`.
pub fn thousands(v: u64) -> String {
    let digits = v.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    let lead = digits.len() % 3;
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && i % 3 == lead {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// Seconds: grouped integers from 100 up, two decimals below.
pub fn time_label(t: f64) -> String {
    if t >= 100.0 {
        thousands(t.round() as u64)
    } else {
        format!("{t:.2}")
    }
}

type CellFn = Box<dyn Fn(&Column) -> String>;

impl fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: [(&str, CellFn); 5] = [
            ("Iterations", Box::new(|c| thousands(c.iterations as u64))),
            ("Allocation", Box::new(|c| thousands(c.allocation))),
            ("Time (s)", Box::new(|c| time_label(c.time))),
            (
                "Speedup",
                Box::new(|c| c.speedup.map(speedup_label).unwrap_or_default()),
            ),
            (
                "Loss",
                Box::new(|c| c.loss.map(loss_label).unwrap_or_default()),
            ),
        ];
        let cells: Vec<Vec<String>> = rows
            .iter()
            .map(|(_, cell)| self.columns.iter().map(cell).collect())
            .collect();
        let head_w = rows.iter().map(|(h, _)| h.len()).max().unwrap_or(0);
        let widths: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(j, c)| {
                cells
                    .iter()
                    .map(|r| r[j].len())
                    .chain([c.label.len()])
                    .max()
                    .unwrap()
            })
            .collect();
        write!(f, "{:head_w$}", "")?;
        for (c, w) in self.columns.iter().zip(&widths) {
            write!(f, "  {:>w$}", c.label)?;
        }
        writeln!(f)?;
        for ((head, _), row) in rows.iter().zip(&cells) {
            write!(f, "{head:head_w$}")?;
            for (cell, w) in row.iter().zip(&widths) {
                write!(f, "  {cell:>w$}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Mean speedup and mean loss of column `col` across several tables.
pub fn mean_speedup_loss(tables: &[ComparisonTable], col: usize) -> Option<(f64, f64)> {
    let pairs: Vec<(f64, f64)> = tables
        .iter()
        .filter_map(|t| Some((t.speedup(col)?, t.loss(col)?)))
        .collect();
    if pairs.is_empty() {
        return None;
    }
    let k = pairs.len() as f64;
    Some((
        pairs.iter().map(|p| p.0).sum::<f64>() / k,
        pairs.iter().map(|p| p.1).sum::<f64>() / k,
    ))
}
