//! Per-column Min-Max normalization, fitted on the training split only.

use serde::{Deserialize, Serialize};

use crate::data::schema::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl NormalizationStats {
    /// Fit per-feature-column min/max on the given (training) dataset.
    pub fn fit(dataset: &Dataset) -> Self {
        let dim = dataset.schema.feature_dim();
        let mut mins = vec![f64::INFINITY; dim];
        let mut maxs = vec![f64::NEG_INFINITY; dim];
        for row in dataset.rows() {
            for (c, v) in row.features().into_iter().enumerate() {
                mins[c] = mins[c].min(v);
                maxs[c] = maxs[c].max(v);
            }
        }
        Self { mins, maxs }
    }

    pub fn feature_dim(&self) -> usize {
        self.mins.len()
    }

    pub fn is_constant(&self, column: usize) -> bool {
        self.maxs[column] == self.mins[column]
    }

    /// (x - min) / (max - min); constant columns map to 0.
    pub fn apply(&self, column: usize, value: f64) -> f64 {
        if self.is_constant(column) {
            0.0
        } else {
            (value - self.mins[column]) / (self.maxs[column] - self.mins[column])
        }
    }

    /// Exact inverse of [`apply`](Self::apply) on non-constant columns.
    pub fn invert(&self, column: usize, value: f64) -> Result<f64> {
        if self.is_constant(column) {
            return Err(Error::DataValidation(format!(
                "cannot invert normalization on constant column {column}"
            )));
        }
        Ok(value * (self.maxs[column] - self.mins[column]) + self.mins[column])
    }

    pub fn apply_row(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .enumerate()
            .map(|(c, &v)| self.apply(c, v))
            .collect()
    }
}
