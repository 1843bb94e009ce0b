//! Deterministic synthetic demand generator, a stand-in for the private
//! tourism datasets.

use chrono::{Datelike, NaiveDate};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::schema::{encode_calendar, Dataset, Record, RecordSchema};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub days: usize,
    pub base: f64,
    pub weekly_amp: f64,
    pub annual_amp: f64,
    /// Multiplicative noise scale (standard deviation of epsilon).
    pub noise: f64,
    /// Holiday spikes as "MM-DD" strings.
    pub holidays: Vec<String>,
    pub holiday_amp: f64,
    pub k_indexes: usize,
    pub seed: u64,
    pub start_date: NaiveDate,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            days: 1200,
            base: 1000.0,
            weekly_amp: 0.4,
            annual_amp: 0.3,
            noise: 0.05,
            holidays: vec!["01-01".into(), "05-01".into(), "10-01".into()],
            holiday_amp: 0.5,
            k_indexes: 3,
            seed: 0,
            start_date: NaiveDate::from_ymd_opt(2013, 1, 1).unwrap(),
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.days < 400 {
            return Err(Error::DataValidation(format!(
                "synthetic spec needs at least 400 days, got {}",
                self.days
            )));
        }
        if !(self.base > 0.0) {
            return Err(Error::DataValidation("base level must be positive".into()));
        }
        if self.noise < 0.0 || self.weekly_amp < 0.0 || self.annual_amp < 0.0 {
            return Err(Error::DataValidation(
                "amplitudes and noise must be nonnegative".into(),
            ));
        }
        for h in &self.holidays {
            parse_holiday(h)?;
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SynthSpec = toml::from_str(text)
            .map_err(|e| Error::DataValidation(format!("bad synthetic spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_holiday(s: &str) -> Result<(u32, u32)> {
    let parts: Vec<&str> = s.split('-').collect();
    let bad = || Error::DataValidation(format!("holiday {s:?} is not MM-DD"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let month: u32 = parts[0].parse().map_err(|_| bad())?;
    let day: u32 = parts[1].parse().map_err(|_| bad())?;
    if !(1..=12).contains(&month) || !(1..=31).contains(&day) {
        return Err(bad());
    }
    Ok((month, day))
}

/// demand(t) = base · (1 + a_w·weekly + a_y·annual + spike) · (1 + ε), clipped >= 1.
/// Search indexes are demand lagged 1-3 days with independent noise.
pub fn synth_generate(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let holidays: Vec<(u32, u32)> = spec
        .holidays
        .iter()
        .map(|h| parse_holiday(h))
        .collect::<Result<_>>()?;

    let mut demand = Vec::with_capacity(spec.days);
    let mut dates = Vec::with_capacity(spec.days);
    for t in 0..spec.days {
        let date = spec
            .start_date
            .checked_add_days(chrono::Days::new(t as u64))
            .unwrap();
        let weekday = date.weekday().num_days_from_monday() as f64;
        let weekly = (2.0 * std::f64::consts::PI * weekday / 7.0).sin();
        let annual =
            (2.0 * std::f64::consts::PI * date.ordinal0() as f64 / 365.25).sin();
        let spike = if holidays.contains(&(date.month(), date.day())) {
            spec.holiday_amp
        } else {
            0.0
        };
        let eps = if spec.noise > 0.0 {
            spec.noise * normal.sample(&mut rng)
        } else {
            0.0
        };
        let level = spec.base
            * (1.0 + spec.weekly_amp * weekly + spec.annual_amp * annual + spike)
            * (1.0 + eps);
        demand.push(level.max(1.0));
        dates.push(date);
    }

    let mut rows = Vec::with_capacity(spec.days);
    for t in 0..spec.days {
        let date = dates[t];
        let mut indexes = Vec::with_capacity(spec.k_indexes);
        for k in 0..spec.k_indexes {
            let lag = 1 + k % 3;
            let lagged = if t >= lag { demand[t - lag] } else { spec.base };
            let eta = if spec.noise > 0.0 {
                spec.noise * normal.sample(&mut rng)
            } else {
                0.0
            };
            indexes.push((lagged * (1.0 + eta)).max(0.0));
        }
        let annual =
            (2.0 * std::f64::consts::PI * date.ordinal0() as f64 / 365.25).sin();
        let temp_max = 15.0 + 10.0 * annual + normal.sample(&mut rng);
        let weather = rng.gen_range(0u8..5);
        let date_type = *[0u8, 0, 0, 1, 1, 2]
            .get(rng.gen_range(0usize..6))
            .unwrap();
        let (month_code, weekday_code) = encode_calendar(date);
        rows.push(Record {
            date,
            demand: demand[t],
            indexes,
            temp_max,
            weather,
            date_type,
            month_code,
            weekday_code,
        });
    }
    Dataset::new(RecordSchema::new(spec.k_indexes), rows)
}
