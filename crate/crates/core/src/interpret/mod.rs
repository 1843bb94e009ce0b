//! Attention-weight capture, averaging, and export.

pub mod capture;
pub mod export;

pub use capture::{capture_attention, AttentionSummary, CaptureOptions};
pub use export::{export_csv, read_matrix_csv, render_heatmap};
