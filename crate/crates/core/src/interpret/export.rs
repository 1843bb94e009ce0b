//! CSV and SVG heatmap export of attention summaries.

use std::path::Path;

use crate::error::{Error, Result};
use crate::interpret::capture::AttentionSummary;
use crate::numcore::Tensor;

/// Matrices to write, with file stems and day labels.
fn matrices(summary: &AttentionSummary) -> Vec<(String, &Tensor, Vec<usize>, Vec<usize>, i64)> {
    let dec_days = summary.decoder_day_labels();
    let enc_days = summary.encoder_day_labels();
    // allowed cross columns satisfy j <= i + (L_enc - L_dec)
    let cross_offset = summary.encoder_len as i64 - summary.decoder_len as i64;
    let mut out = Vec::new();
    for (l, m) in summary.decoder_self.iter().enumerate() {
        out.push((
            format!("decoder_layer{}_self", l + 1),
            m,
            dec_days.clone(),
            dec_days.clone(),
            0,
        ));
    }
    for (l, m) in summary.decoder_cross.iter().enumerate() {
        out.push((
            format!("decoder_layer{}_cross", l + 1),
            m,
            dec_days.clone(),
            enc_days.clone(),
            cross_offset,
        ));
    }
    if let Some(enc) = &summary.encoder_self {
        for (l, m) in enc.iter().enumerate() {
            out.push((
                format!("encoder_layer{}_self", l + 1),
                m,
                enc_days.clone(),
                enc_days.clone(),
                0,
            ));
        }
    }
    if let Some(heads) = &summary.decoder_self_heads {
        for (l, layer) in heads.iter().enumerate() {
            for (h, m) in layer.iter().enumerate() {
                out.push((
                    format!("decoder_layer{}_self_head{}", l + 1, h + 1),
                    m,
                    dec_days.clone(),
                    dec_days.clone(),
                    0,
                ));
            }
        }
    }
    if let Some(heads) = &summary.decoder_cross_heads {
        for (l, layer) in heads.iter().enumerate() {
            for (h, m) in layer.iter().enumerate() {
                out.push((
                    format!("decoder_layer{}_cross_head{}", l + 1, h + 1),
                    m,
                    dec_days.clone(),
                    enc_days.clone(),
                    cross_offset,
                ));
            }
        }
    }
    out
}

fn matrix_csv(matrix: &Tensor, row_days: &[usize], col_days: &[usize]) -> String {
    let mut out = String::from("day");
    for c in col_days {
        out.push_str(&format!(",day_{c}"));
    }
    out.push('\n');
    for (r, day) in row_days.iter().enumerate() {
        out.push_str(&format!("day_{day}"));
        for c in 0..matrix.cols() {
            out.push_str(&format!(",{}", matrix.get2(r, c)));
        }
        out.push('\n');
    }
    out
}

/// Write one CSV per matrix; returns the file paths written.
pub fn export_csv(summary: &AttentionSummary, directory: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut written = Vec::new();
    for (stem, matrix, rows, cols, _) in matrices(summary) {
        let path = directory.join(format!("{stem}.csv"));
        std::fs::write(&path, matrix_csv(matrix, &rows, &cols))?;
        written.push(path);
    }
    Ok(written)
}

/// Read a matrix back from an `export_csv` file, dropping the labels.
pub fn read_matrix_csv(path: &Path) -> Result<Tensor> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for line in text.lines().skip(1) {
        let values: Vec<f64> = line
            .split(',')
            .skip(1)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::DataValidation(format!("bad matrix cell {v:?}")))
            })
            .collect::<Result<_>>()?;
        rows.push(values);
    }
    Tensor::from_rows(&rows)
}

const CELL: usize = 24;
const MARGIN: usize = 56;

/// One self-contained SVG heatmap: weights shaded white→blue on a linear
/// 0→max scale, masked cells hatched gray, axes labeled by day.
fn matrix_svg(matrix: &Tensor, row_days: &[usize], col_days: &[usize], offset: i64) -> String {
    let (rows, cols) = (matrix.rows(), matrix.cols());
    let width = MARGIN + cols * CELL + CELL;
    let height = MARGIN + rows * CELL + CELL;
    let max = matrix.data().iter().cloned().fold(0.0f64, f64::max);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"monospace\" font-size=\"10\">\n\
         <defs><pattern id=\"masked\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\">\
         <rect width=\"6\" height=\"6\" fill=\"#e0e0e0\"/>\
         <path d=\"M0 6 L6 0\" stroke=\"#9e9e9e\" stroke-width=\"1\"/></pattern></defs>\n"
    );
    for (r, rd) in row_days.iter().enumerate() {
        let y = MARGIN + r * CELL;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">day {rd}</text>\n",
            MARGIN - 6,
            y + CELL / 2 + 4
        ));
        for (c, _) in col_days.iter().enumerate() {
            let x = MARGIN + c * CELL;
            let masked = c as i64 > r as i64 + offset;
            let fill = if masked {
                "url(#masked)".to_string()
            } else {
                let t = if max > 0.0 { matrix.get2(r, c) / max } else { 0.0 };
                // white (255,255,255) -> deep blue (31,95,168)
                let ch = |lo: f64| (255.0 + (lo - 255.0) * t).round() as u8;
                format!("rgb({},{},{})", ch(31.0), ch(95.0), ch(168.0))
            };
            svg.push_str(&format!(
                "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" \
                 fill=\"{fill}\" stroke=\"#ffffff\" stroke-width=\"0.5\"/>\n"
            ));
        }
    }
    for (c, cd) in col_days.iter().enumerate() {
        let x = MARGIN + c * CELL;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{cd}</text>\n",
            x + CELL / 2,
            MARGIN - 8
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Write one SVG per matrix; returns the file paths written.
pub fn render_heatmap(
    summary: &AttentionSummary,
    directory: &Path,
) -> Result<Vec<std::path::PathBuf>> {
    let mut written = Vec::new();
    for (stem, matrix, rows, cols, offset) in matrices(summary) {
        let path = directory.join(format!("{stem}.svg"));
        std::fs::write(&path, matrix_svg(matrix, &rows, &cols, offset))?;
        written.push(path);
    }
    Ok(written)
}
