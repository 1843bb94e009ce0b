//! Dataset ingestion, encoding, normalization, window construction,
//! chronological splitting, and synthesis.

mod csvio;
mod normalize;
mod schema;
mod split;
mod synth;
mod windows;

pub use csvio::{load_csv, save_csv};
pub use normalize::NormalizationStats;
pub use schema::{
    encode_calendar, encode_date_type, encode_weather, Dataset, Record, RecordSchema,
};
pub use split::{split, SplitSpec};
pub use synth::{synth_generate, SynthSpec};
pub use windows::{
    build_window, evaluation_windows, make_windows, KnownColumn, WindowOptions, WindowSample,
};
