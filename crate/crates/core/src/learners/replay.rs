use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Capabilities, Learner};
use crate::error::{LearnerError, ModelError};
use crate::model::CurveSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplayRow {
    pub n: u64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub cost: f64,
}

/// A recorded learning curve, one row per training size.
///
/// Queries between rows interpolate linearly; queries outside the recorded
/// range fail rather than extrapolate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayTable {
    rows: Vec<ReplayRow>,
}

impl ReplayTable {
    pub fn new(rows: Vec<ReplayRow>) -> Result<Self, LearnerError> {
        if rows.is_empty() {
            return Err(LearnerError::Rejected("replay table has no rows".into()));
        }
        if rows.windows(2).any(|w| w[0].n >= w[1].n) {
            return Err(LearnerError::Rejected(
                "replay table n values must be strictly increasing".into(),
            ));
        }
        for r in &rows {
            CurveSample::new(r.n, r.train_acc, r.val_acc, r.cost)?;
        }
        Ok(Self { rows })
    }

    /// Parse CSV with header `n,train_acc,val_acc,cost`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, LearnerError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| LearnerError::Rejected(format!("replay csv: {e}")))?
            .clone();
        let expected = ["n", "train_acc", "val_acc", "cost"];
        if headers.iter().map(str::trim).ne(expected.iter().copied()) {
            return Err(LearnerError::Rejected(format!(
                "replay csv header must be `n,train_acc,val_acc,cost`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let rows = rdr
            .deserialize()
            .collect::<Result<Vec<ReplayRow>, _>>()
            .map_err(|e| LearnerError::Rejected(format!("replay csv: {e}")))?;
        Self::new(rows)
    }

    pub fn load(path: &Path) -> Result<Self, LearnerError> {
        let file = std::fs::File::open(path)
            .map_err(|e| LearnerError::Rejected(format!("{}: {e}", path.display())))?;
        Self::from_csv(file)
    }

    pub fn rows(&self) -> &[ReplayRow] {
        &self.rows
    }

    pub fn range(&self) -> (u64, u64) {
        (self.rows[0].n, self.rows[self.rows.len() - 1].n)
    }

    pub fn sample(&self, n: u64) -> Result<CurveSample, LearnerError> {
        let (lo, hi) = self.range();
        if n < lo || n > hi {
            return Err(LearnerError::OutOfRange { n, lo, hi });
        }
        let idx = self.rows.partition_point(|r| r.n < n);
        let right = self.rows[idx];
        if right.n == n {
            return Ok(CurveSample::new(
                n,
                right.train_acc,
                right.val_acc,
                right.cost,
            )?);
        }
        let left = self.rows[idx - 1];
        let t = (n - left.n) as f64 / (right.n - left.n) as f64;
        let lerp = |a: f64, b: f64| a + t * (b - a);
        CurveSample::new(
            n,
            lerp(left.train_acc, right.train_acc),
            lerp(left.val_acc, right.val_acc),
            lerp(left.cost, right.cost),
        )
        .map_err(|e: ModelError| e.into())
    }
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    name: String,
    path: PathBuf,
}

/// Read a replay manifest (`name,path` CSV); relative paths resolve against
/// the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<Vec<(String, PathBuf)>, LearnerError> {
    let file = std::fs::File::open(path)
        .map_err(|e| LearnerError::Rejected(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    csv::Reader::from_reader(file)
        .deserialize()
        .map(|row| {
            let row: ManifestRow =
                row.map_err(|e| LearnerError::Rejected(format!("manifest: {e}")))?;
            let resolved = if row.path.is_absolute() {
                row.path
            } else {
                base.join(row.path)
            };
            Ok((row.name, resolved))
        })
        .collect()
}

/// [`Learner`] that replays a [`ReplayTable`].
#[derive(Debug, Clone)]
pub struct ReplayLearner {
    name: String,
    table: ReplayTable,
}

impl ReplayLearner {
    pub fn new(name: impl Into<String>, table: ReplayTable) -> Self {
        Self {
            name: name.into(),
            table,
        }
    }

    pub fn table(&self) -> &ReplayTable {
        &self.table
    }
}

impl Learner for ReplayLearner {
    fn name(&self) -> &str {
        &self.name
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            max_n: Some(self.table.range().1),
            exact: false,
        }
    }

    fn train_eval(&mut self, n: u64, _seed: u64) -> Result<CurveSample, LearnerError> {
        self.table.sample(n)
    }
}
