use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::StatsError;

/// Features and binary outcomes of the reusable test set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestDataset {
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

impl TestDataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<bool>) -> Result<Self, StatsError> {
        if features.len() != labels.len() {
            return Err(StatsError::LengthMismatch {
                expected: labels.len(),
                found: features.len(),
            });
        }
        let width = features.first().map_or(0, Vec::len);
        Ok(Self {
            feature_names: (1..=width).map(|i| format!("x{i}")).collect(),
            features,
            labels,
        })
    }

    /// Reads a CSV with a header row, a `label` column of 0/1 values and
    /// numeric feature columns.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self, StatsError> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        let label_col = headers
            .iter()
            .position(|h| h.trim() == "label")
            .ok_or(StatsError::MissingLabelColumn)?;
        let feature_names = headers
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != label_col)
            .map(|(_, h)| h.trim().to_string())
            .collect();
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let mut x = Vec::with_capacity(record.len().saturating_sub(1));
            for (i, field) in record.iter().enumerate() {
                let field = field.trim();
                if i == label_col {
                    labels.push(match field.parse::<f64>() {
                        Ok(v) if v == 0.0 => false,
                        Ok(v) if v == 1.0 => true,
                        _ => {
                            return Err(StatsError::InvalidLabel {
                                row: row + 1,
                                value: field.to_string(),
                            })
                        }
                    });
                } else {
                    x.push(field.parse::<f64>().map_err(|_| StatsError::InvalidNumber {
                        row: row + 1,
                        value: field.to_string(),
                    })?);
                }
            }
            features.push(x);
        }
        Ok(Self {
            feature_names,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }
}

/// Reads one score per line; blank lines are ignored.
pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<f64>, StatsError> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            line.trim().parse::<f64>().map_err(|_| StatsError::InvalidNumber {
                row: i + 1,
                value: line.trim().to_string(),
            })
        })
        .collect()
}
