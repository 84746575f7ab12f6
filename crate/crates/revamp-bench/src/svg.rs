//! Minimal self-contained SVG line chart of NMSE (dB) against SNR (dB).
//!
//! The CSV files stay the canonical output; the chart is a convenience view
//! with one polyline per estimator. Non-finite NMSE values (failed cells or
//! exactly-zero NMSE) are left out of their polyline.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::experiment::SummaryRow;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 190.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#17becf", "#7f7f7f",
];

pub fn write_nmse_svg(path: &Path, summary: &[SummaryRow], title: &str) -> Result<()> {
    let finite: Vec<&SummaryRow> = summary.iter().filter(|r| r.nmse_db.is_finite()).collect();
    let (x_min, x_max) = bounds(summary.iter().map(|r| r.snr_db));
    let (y_min, y_max) = if finite.is_empty() {
        (-1.0, 1.0)
    } else {
        bounds(finite.iter().map(|r| r.nmse_db))
    };
    let x_span = (x_max - x_min).max(1e-9);
    let y_span = (y_max - y_min).max(1e-9);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_x = |snr: f64| MARGIN_LEFT + (snr - x_min) / x_span * plot_w;
    let to_y = |db: f64| MARGIN_TOP + (y_max - db) / y_span * plot_h;

    let mut estimators: Vec<&str> = Vec::new();
    for row in summary {
        if !estimators.contains(&row.estimator.as_str()) {
            estimators.push(&row.estimator);
        }
    }

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
        MARGIN_LEFT + plot_w / 2.0,
        escape(title)
    );

    // Frame.
    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"#333\"/>"
    );

    // X ticks at every SNR level present.
    let mut xs: Vec<f64> = summary.iter().map(|r| r.snr_db).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for snr in &xs {
        let x = to_x(*snr);
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"#ccc\" stroke-dasharray=\"3 3\"/>",
            MARGIN_TOP,
            MARGIN_TOP + plot_h
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x:.2}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{snr}</text>",
            MARGIN_TOP + plot_h + 16.0
        );
    }

    // Y ticks on a 10 dB grid covering the data.
    let y_step = 10.0f64;
    let mut tick = (y_min / y_step).floor() * y_step;
    while tick <= y_max + 1e-9 {
        if tick >= y_min - 1e-9 {
            let y = to_y(tick);
            let _ = writeln!(
                svg,
                "<line x1=\"{MARGIN_LEFT}\" y1=\"{y:.2}\" x2=\"{}\" y2=\"{y:.2}\" stroke=\"#ccc\" stroke-dasharray=\"3 3\"/>",
                MARGIN_LEFT + plot_w
            );
            let _ = writeln!(
                svg,
                "<text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{tick}</text>",
                MARGIN_LEFT - 6.0,
                y + 4.0
            );
        }
        tick += y_step;
    }

    // Axis labels.
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">SNR (dB)</text>",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">NMSE (dB)</text>",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    // One polyline and one legend entry per estimator.
    for (idx, name) in estimators.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut points = String::new();
        for row in summary.iter().filter(|r| r.estimator == *name) {
            if row.nmse_db.is_finite() {
                let _ = write!(points, "{:.2},{:.2} ", to_x(row.snr_db), to_y(row.nmse_db));
            }
        }
        if !points.is_empty() {
            let _ = writeln!(
                svg,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>",
                points.trim_end()
            );
        }
        let ly = MARGIN_TOP + 14.0 + idx as f64 * 18.0;
        let lx = MARGIN_LEFT + plot_w + 12.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2.5\"/>",
            lx + 22.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            lx + 28.0,
            ly + 4.0,
            escape(name)
        );
    }
    let _ = writeln!(svg, "</svg>");
    std::fs::write(path, svg)?;
    Ok(())
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_a_polyline_per_estimator() {
        let rows = vec![
            SummaryRow {
                snr_db: 0.0,
                estimator: "acrevamp".into(),
                nmse: 0.1,
                nmse_db: -10.0,
                n_instances: 5,
                n_failed: 0,
                n_nonconverged: 0,
            },
            SummaryRow {
                snr_db: 5.0,
                estimator: "acrevamp".into(),
                nmse: 0.01,
                nmse_db: -20.0,
                n_instances: 5,
                n_failed: 0,
                n_nonconverged: 0,
            },
            SummaryRow {
                snr_db: 0.0,
                estimator: "lmmse".into(),
                nmse: 0.5,
                nmse_db: -3.0,
                n_instances: 5,
                n_failed: 0,
                n_nonconverged: 0,
            },
            SummaryRow {
                snr_db: 5.0,
                estimator: "lmmse".into(),
                nmse: f64::NAN,
                nmse_db: f64::NAN,
                n_instances: 0,
                n_failed: 5,
                n_nonconverged: 0,
            },
        ];
        let path = std::env::temp_dir().join("revamp-bench-svg-test.svg");
        write_nmse_svg(&path, &rows, "test sweep").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.matches("<polyline").count(), 2);
        assert!(text.contains("acrevamp"));
        assert!(text.contains("NMSE (dB)"));
        assert!(!text.contains("NaN"));
    }
}
