//! CSV and SVG rendering of replay metrics.

use std::fmt::Write as _;
use std::io::{self, Write};

use super::replay::MetricsRow;

pub const CSV_HEADER: [&str; 7] = [
    "t",
    "step",
    "predicted",
    "correct",
    "cum_correct",
    "cum_acc",
    "roll_acc",
];

/// Writes one CSV line per row; a missing prediction is an empty field and
/// `correct` is `1`/`0`.
pub fn write_csv<W: Write>(out: W, rows: &[MetricsRow]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            r.observed.to_string(),
            r.predicted.map(|s| s.to_string()).unwrap_or_default(),
            u8::from(r.correct).to_string(),
            r.cum_correct.to_string(),
            format!("{:.6}", r.cum_accuracy),
            format!("{:.6}", r.roll_accuracy),
        ])?;
    }
    w.flush()
}

pub fn csv_string(rows: &[MetricsRow]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

pub const CONTEXT_COLOR: &str = "#d62728";
pub const BASELINE_COLOR: &str = "#1f77b4";

const WIDTH: f64 = 760.0;
const PANEL_HEIGHT: f64 = 220.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 40.0;

struct Panel {
    title: &'static str,
    y_label: &'static str,
    value: fn(&MetricsRow) -> f64,
    fixed_max: Option<f64>,
}

const PANELS: [Panel; 3] = [
    Panel {
        title: "Total correct predictions",
        y_label: "correct",
        value: |r| r.cum_correct as f64,
        fixed_max: None,
    },
    Panel {
        title: "Cumulative accuracy",
        y_label: "accuracy",
        value: |r| r.cum_accuracy,
        fixed_max: Some(1.0),
    },
    Panel {
        title: "Rolling accuracy",
        y_label: "accuracy",
        value: |r| r.roll_accuracy,
        fixed_max: Some(1.0),
    },
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Stand-alone SVG with one panel per metric; the context engine is drawn in
/// red, the baseline in blue.
pub fn render_svg(title: &str, context: &[MetricsRow], baseline: &[MetricsRow]) -> String {
    let height = MARGIN_TOP + PANEL_HEIGHT * PANELS.len() as f64;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let n = context.len().max(baseline.len()).max(1);
    for (k, panel) in PANELS.iter().enumerate() {
        let top = MARGIN_TOP + PANEL_HEIGHT * k as f64;
        render_panel(&mut s, panel, top, n, context, baseline);
    }
    s.push_str("</svg>\n");
    s
}

fn render_panel(
    s: &mut String,
    panel: &Panel,
    top: f64,
    n: usize,
    context: &[MetricsRow],
    baseline: &[MetricsRow],
) {
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = top + PANEL_HEIGHT - MARGIN_BOTTOM;
    let y1 = top + 20.0;
    let y_max = panel.fixed_max.unwrap_or_else(|| {
        context
            .iter()
            .chain(baseline)
            .map(panel.value)
            .fold(1.0, f64::max)
    });
    let sx = |t: usize| x0 + (x1 - x0) * t as f64 / n as f64;
    let sy = |v: f64| y0 - (y0 - y1) * v / y_max;

    let _ = writeln!(s, r#"<g class="panel">"#);
    let _ = writeln!(
        s,
        r#"<text x="{x0}" y="{}" font-size="12">{}</text>"#,
        top + 12.0,
        panel.title
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">prediction</text>"#,
        (x0 + x1) / 2.0,
        y0 + 28.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        panel.y_label
    );
    for (v, anchor_y) in [(0.0, y0), (y_max, y1)] {
        let label = if panel.fixed_max.is_some() {
            format!("{:.0}%", v * 100.0)
        } else {
            format!("{v:.0}")
        };
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{label}</text>"#,
            x0 - 4.0,
            anchor_y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{x0}" y="{}" text-anchor="middle">0</text><text x="{x1}" y="{}" text-anchor="middle">{n}</text>"#,
        y0 + 14.0,
        y0 + 14.0
    );
    for (rows, color, name) in [
        (baseline, BASELINE_COLOR, "baseline"),
        (context, CONTEXT_COLOR, "context"),
    ] {
        let mut points = String::new();
        for r in rows {
            let _ = write!(points, "{:.2},{:.2} ", sx(r.t), sy((panel.value)(r)));
        }
        let _ = writeln!(
            s,
            r#"<polyline class="{name}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.trim_end()
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" fill="{CONTEXT_COLOR}" text-anchor="end">context</text><text x="{}" y="{}" fill="{BASELINE_COLOR}" text-anchor="end">baseline</text>"#,
        x1,
        top + 12.0,
        x1 - 60.0,
        top + 12.0
    );
    let _ = writeln!(s, "</g>");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StepId;

    fn row(t: usize, observed: u32, predicted: Option<u32>, cum: usize, roll: f64) -> MetricsRow {
        MetricsRow {
            t,
            observed: StepId(observed),
            predicted: predicted.map(StepId),
            correct: predicted == Some(observed),
            cum_correct: cum,
            cum_accuracy: cum as f64 / t as f64,
            roll_accuracy: roll,
        }
    }

    #[test]
    fn empty_rows_give_header_only() {
        assert_eq!(
            csv_string(&[]),
            "t,step,predicted,correct,cum_correct,cum_acc,roll_acc\n"
        );
    }

    #[test]
    fn exact_csv_fixture() {
        let rows = [
            row(1, 3, None, 0, 0.0),
            row(2, 2, Some(2), 1, 0.5),
            row(3, 3, Some(4), 1, 1.0 / 3.0),
        ];
        assert_eq!(
            csv_string(&rows),
            "t,step,predicted,correct,cum_correct,cum_acc,roll_acc\n\
             1,3,,0,0,0.000000,0.000000\n\
             2,2,2,1,1,0.500000,0.500000\n\
             3,3,4,0,1,0.333333,0.333333\n"
        );
    }

    #[test]
    fn svg_is_well_formed_with_two_series_per_panel() {
        let ctx = [row(1, 3, Some(3), 1, 1.0), row(2, 2, Some(2), 2, 1.0)];
        let base = [row(1, 3, None, 0, 0.0), row(2, 2, Some(2), 1, 0.5)];
        let svg = render_svg("mix <seed 7>", &ctx, &base);
        let doc = roxmltree::Document::parse(&svg).expect("well-formed XML");
        let panels: Vec<_> = doc
            .descendants()
            .filter(|n| n.attribute("class") == Some("panel"))
            .collect();
        assert_eq!(panels.len(), 3);
        for p in panels {
            let lines: Vec<_> = p
                .children()
                .filter(|n| n.has_tag_name("polyline"))
                .collect();
            assert_eq!(lines.len(), 2);
            assert!(lines
                .iter()
                .any(|l| l.attribute("stroke") == Some(CONTEXT_COLOR)));
            assert!(lines
                .iter()
                .any(|l| l.attribute("stroke") == Some(BASELINE_COLOR)));
        }
        assert!(!svg.contains("href"));
    }
}
