//! CSV ingestion and emission.
//!
//! Header: `date,demand,idx_1..idx_K,temp_max,weather,date_type,month,weekday`
//! with ISO-8601 dates. Weather and date type may be text labels or
//! pre-encoded integers.

use std::path::Path;

use chrono::NaiveDate;

use crate::data::schema::{
    encode_calendar, encode_date_type, encode_weather, Dataset, Record, RecordSchema,
};
use crate::error::{Error, Result};

/// Parse and validate a dataset; K is inferred from the header.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::DataValidation(format!("cannot read header: {e}")))?
        .iter()
        .map(|s| s.to_string())
        .collect();
    let k = header
        .iter()
        .filter(|h| h.starts_with("idx_"))
        .count();
    let schema = RecordSchema::new(k);
    let expected = schema.header();
    if header != expected {
        return Err(Error::DataValidation(format!(
            "header mismatch: expected {expected:?}, found {header:?}"
        )));
    }

    let mut rows = Vec::new();
    for (i, result) in reader.records().enumerate() {
        let row_no = i + 2; // 1-based, after header
        let record = result.map_err(|e| Error::CsvRow {
            row: row_no,
            message: e.to_string(),
        })?;
        rows.push(parse_record(&schema, &record, row_no)?);
    }
    // Dataset::new re-checks ordering/gaps/positivity with 1-based data rows;
    // remap its row numbers to file rows for the diagnostics.
    Dataset::new(schema, rows).map_err(|e| match e {
        Error::CsvRow { row, message } => Error::CsvRow {
            row: row + 1,
            message,
        },
        other => other,
    })
}

fn parse_record(schema: &RecordSchema, record: &csv::StringRecord, row_no: usize) -> Result<Record> {
    let fail = |message: String| Error::CsvRow {
        row: row_no,
        message,
    };
    let field = |idx: usize, name: &str| -> Result<&str> {
        record
            .get(idx)
            .ok_or_else(|| fail(format!("missing column {name}")))
    };
    let num = |idx: usize, name: &str| -> Result<f64> {
        field(idx, name)?
            .parse::<f64>()
            .map_err(|_| fail(format!("unparseable {name} value {:?}", record.get(idx).unwrap_or(""))))
    };

    let date = NaiveDate::parse_from_str(field(0, "date")?, "%Y-%m-%d")
        .map_err(|_| fail(format!("unparseable date {:?}", record.get(0).unwrap_or(""))))?;
    let demand = num(1, "demand")?;
    let mut indexes = Vec::with_capacity(schema.k_indexes);
    for kcol in 0..schema.k_indexes {
        indexes.push(num(2 + kcol, &format!("idx_{}", kcol + 1))?);
    }
    let temp_max = num(2 + schema.k_indexes, "temp_max")?;

    let weather_raw = field(3 + schema.k_indexes, "weather")?;
    let weather = match weather_raw.parse::<u8>() {
        Ok(v) => v,
        Err(_) => encode_weather(weather_raw).map_err(|e| fail(e.to_string()))?,
    };
    let date_type_raw = field(4 + schema.k_indexes, "date_type")?;
    let date_type = match date_type_raw.parse::<u8>() {
        Ok(v) => v,
        Err(_) => encode_date_type(date_type_raw).map_err(|e| fail(e.to_string()))?,
    };
    let month_code = num(5 + schema.k_indexes, "month")? as u8;
    let weekday_code = num(6 + schema.k_indexes, "weekday")? as u8;

    let (expect_month, expect_weekday) = encode_calendar(date);
    if month_code != expect_month || weekday_code != expect_weekday {
        return Err(fail(format!(
            "calendar codes ({month_code},{weekday_code}) disagree with date {date} (expected ({expect_month},{expect_weekday}))"
        )));
    }

    Ok(Record {
        date,
        demand,
        indexes,
        temp_max,
        weather,
        date_type,
        month_code,
        weekday_code,
    })
}

/// Write a dataset in the canonical column order.
pub fn save_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer
        .write_record(dataset.schema.header())
        .map_err(|e| Error::DataValidation(e.to_string()))?;
    for row in dataset.rows() {
        let mut fields = vec![row.date.format("%Y-%m-%d").to_string(), fmt(row.demand)];
        fields.extend(row.indexes.iter().map(|v| fmt(*v)));
        fields.push(fmt(row.temp_max));
        fields.push(row.weather.to_string());
        fields.push(row.date_type.to_string());
        fields.push(row.month_code.to_string());
        fields.push(row.weekday_code.to_string());
        writer
            .write_record(&fields)
            .map_err(|e| Error::DataValidation(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

fn fmt(v: f64) -> String {
    // shortest round-trip rendering
    format!("{v}")
}
