//! Chronological train/validate/test partition.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data::schema::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Last date of the training split (inclusive).
    pub train_end_date: NaiveDate,
    /// Last date of the validation split (inclusive); test is the remainder.
    pub validate_end_date: NaiveDate,
}

impl SplitSpec {
    pub fn validate_against(&self, dataset: &Dataset) -> Result<()> {
        if self.train_end_date >= self.validate_end_date {
            return Err(Error::DataValidation(format!(
                "train_end_date {} must precede validate_end_date {}",
                self.train_end_date, self.validate_end_date
            )));
        }
        if self.train_end_date < dataset.first_date()
            || self.validate_end_date >= dataset.last_date()
        {
            return Err(Error::DataValidation(format!(
                "split dates ({}, {}) outside dataset range {}..{}",
                self.train_end_date,
                self.validate_end_date,
                dataset.first_date(),
                dataset.last_date()
            )));
        }
        Ok(())
    }

    /// Proportional split by fractions of the dataset length.
    pub fn fractional(dataset: &Dataset, train_frac: f64, validate_frac: f64) -> Result<Self> {
        let n = dataset.len() as f64;
        let train_end = (n * train_frac).floor() as usize;
        let val_end = (n * (train_frac + validate_frac)).floor() as usize;
        if train_end == 0 || val_end <= train_end || val_end >= dataset.len() {
            return Err(Error::DataValidation(format!(
                "fractions ({train_frac}, {validate_frac}) leave an empty split"
            )));
        }
        Ok(Self {
            train_end_date: dataset.rows()[train_end - 1].date,
            validate_end_date: dataset.rows()[val_end - 1].date,
        })
    }
}

/// Non-overlapping chronological partition; the union is the dataset.
pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    spec.validate_against(dataset)?;
    let train_end = dataset
        .index_of(spec.train_end_date)
        .ok_or_else(|| Error::DataValidation("train_end_date not in dataset".into()))?;
    let val_end = dataset
        .index_of(spec.validate_end_date)
        .ok_or_else(|| Error::DataValidation("validate_end_date not in dataset".into()))?;
    Ok((
        dataset.slice(0, train_end + 1)?,
        dataset.slice(train_end + 1, val_end + 1)?,
        dataset.slice(val_end + 1, dataset.len())?,
    ))
}
