//! Record schema, categorical encodings, and the validated daily dataset.

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column layout of one daily record. Feature columns, in order:
/// demand, idx_1..idx_K, temp_max, weather, date_type, month, weekday.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSchema {
    /// Number of search-index columns (K).
    pub k_indexes: usize,
}

impl RecordSchema {
    pub fn new(k_indexes: usize) -> Self {
        Self { k_indexes }
    }

    pub fn feature_dim(&self) -> usize {
        self.k_indexes + 6
    }

    pub const COL_DEMAND: usize = 0;

    pub fn col_temp(&self) -> usize {
        self.k_indexes + 1
    }

    pub fn col_weather(&self) -> usize {
        self.k_indexes + 2
    }

    pub fn col_date_type(&self) -> usize {
        self.k_indexes + 3
    }

    pub fn col_month(&self) -> usize {
        self.k_indexes + 4
    }

    pub fn col_weekday(&self) -> usize {
        self.k_indexes + 5
    }

    /// CSV header names in column order.
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["date".to_string(), "demand".to_string()];
        for k in 1..=self.k_indexes {
            h.push(format!("idx_{k}"));
        }
        h.extend(
            ["temp_max", "weather", "date_type", "month", "weekday"]
                .iter()
                .map(|s| s.to_string()),
        );
        h
    }
}

/// One calendar day of data.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub date: NaiveDate,
    pub demand: f64,
    pub indexes: Vec<f64>,
    pub temp_max: f64,
    pub weather: u8,
    pub date_type: u8,
    pub month_code: u8,
    pub weekday_code: u8,
}

impl Record {
    /// Raw (un-normalized) feature vector in schema column order.
    pub fn features(&self) -> Vec<f64> {
        let mut f = Vec::with_capacity(self.indexes.len() + 6);
        f.push(self.demand);
        f.extend_from_slice(&self.indexes);
        f.push(self.temp_max);
        f.push(self.weather as f64);
        f.push(self.date_type as f64);
        f.push(self.month_code as f64);
        f.push(self.weekday_code as f64);
        f
    }
}

/// Date-ordered daily records with no gaps and strictly positive demand.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: RecordSchema,
    rows: Vec<Record>,
}

impl Dataset {
    pub fn new(schema: RecordSchema, rows: Vec<Record>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::DataValidation("dataset is empty".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.indexes.len() != schema.k_indexes {
                return Err(Error::CsvRow {
                    row: i + 1,
                    message: format!(
                        "expected {} index columns, found {}",
                        schema.k_indexes,
                        r.indexes.len()
                    ),
                });
            }
            if !(r.demand > 0.0) {
                return Err(Error::CsvRow {
                    row: i + 1,
                    message: format!("demand must be positive (MAPE divides by it), got {}", r.demand),
                });
            }
            if r.weather > 4 || r.date_type > 2 || r.month_code > 11 || r.weekday_code > 6 {
                return Err(Error::CsvRow {
                    row: i + 1,
                    message: "categorical code out of range".into(),
                });
            }
            if i > 0 {
                let prev = rows[i - 1].date;
                let expected = prev.succ_opt().unwrap();
                if r.date != expected {
                    return Err(Error::DataValidation(format!(
                        "date gap or disorder: expected {expected} after {prev}, found {}",
                        r.date
                    )));
                }
            }
        }
        Ok(Self { schema, rows })
    }

    pub fn rows(&self) -> &[Record] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn first_date(&self) -> NaiveDate {
        self.rows[0].date
    }

    pub fn last_date(&self) -> NaiveDate {
        self.rows[self.rows.len() - 1].date
    }

    /// Index of a date within the dataset, if present.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = (date - self.first_date()).num_days();
        if offset < 0 || offset as usize >= self.rows.len() {
            None
        } else {
            Some(offset as usize)
        }
    }

    pub fn slice(&self, start: usize, end: usize) -> Result<Dataset> {
        Dataset::new(self.schema.clone(), self.rows[start..end].to_vec())
    }
}

/// working day -> 0, weekend -> 1, holiday -> 2.
pub fn encode_date_type(label: &str) -> Result<u8> {
    match label.trim().to_ascii_lowercase().as_str() {
        "working day" => Ok(0),
        "weekend" => Ok(1),
        "holiday" => Ok(2),
        other => Err(Error::DataValidation(format!(
            "unknown date type label {other:?}"
        ))),
    }
}

/// snow -> 0, rain -> 1, overcast -> 2, cloudy -> 3, sunny -> 4.
pub fn encode_weather(label: &str) -> Result<u8> {
    match label.trim().to_ascii_lowercase().as_str() {
        "snow" => Ok(0),
        "rain" => Ok(1),
        "overcast" => Ok(2),
        "cloudy" => Ok(3),
        "sunny" => Ok(4),
        other => Err(Error::DataValidation(format!(
            "unknown weather label {other:?}"
        ))),
    }
}

/// January..December -> 0..11, Monday..Sunday -> 0..6.
pub fn encode_calendar(date: NaiveDate) -> (u8, u8) {
    (
        (date.month0()) as u8,
        date.weekday().num_days_from_monday() as u8,
    )
}
