//! CSV tables and SVG line plots.

use std::fmt::Write as _;
use std::io::Write;

use super::CliError;

/// Named numeric columns of equal length.
pub type Columns = Vec<(String, Vec<f64>)>;

pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(out: impl Write, columns: &Columns) -> Result<(), CliError> {
    let rows = columns.first().map_or(0, |c| c.1.len());
    if columns.iter().any(|c| c.1.len() != rows) {
        return Err(CliError::Io("ragged CSV columns".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(columns.iter().map(|c| c.0.as_str()))
        .map_err(io)?;
    for r in 0..rows {
        w.write_record(columns.iter().map(|c| format_number(c.1[r])))
            .map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

/// Reads a CSV produced by [`write_csv`].
pub fn read_csv(text: &str) -> Result<Columns, CliError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let parse_err = |e: csv::Error| CliError::Parse(format!("CSV: {e}"));
    let headers = r.headers().map_err(parse_err)?.clone();
    let mut columns: Columns = headers
        .iter()
        .map(|h| (h.to_string(), Vec::new()))
        .collect();
    for (row, record) in r.records().enumerate() {
        let record = record.map_err(parse_err)?;
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            let v = field.trim().parse::<f64>().map_err(|_| {
                CliError::Parse(format!("CSV row {}: {field:?} is not a number", row + 2))
            })?;
            col.1.push(v);
        }
    }
    Ok(columns)
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

/// Line plot of `selected` columns against the `x` column.
pub fn render_svg(
    columns: &Columns,
    selected: &[String],
    log_scale: bool,
    title: &str,
) -> Result<String, CliError> {
    if selected.is_empty() {
        return Err(CliError::Usage("no columns selected for plotting".into()));
    }
    let find = |name: &str| {
        columns
            .iter()
            .find(|c| c.0 == name)
            .ok_or_else(|| CliError::Usage(format!("unknown column {name:?}")))
    };
    let xs = &find("x")?.1;
    let transform = |v: f64| if log_scale { v.abs().log10() } else { v };
    let mut curves = Vec::new();
    for name in selected {
        let ys: Vec<f64> = find(name)?.1.iter().map(|&v| transform(v)).collect();
        curves.push((name.as_str(), ys));
    }
    let finite = |v: &f64| v.is_finite();
    let (x_min, x_max) = bounds(xs.iter().copied().filter(finite));
    let (y_min, y_max) = bounds(
        curves
            .iter()
            .flat_map(|c| c.1.iter().copied())
            .filter(finite),
    );
    let sx = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * (WIDTH - LEFT - RIGHT);
    let sy = |y: f64| HEIGHT - BOTTOM - (y - y_min) / (y_max - y_min) * (HEIGHT - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="800" height="600" viewBox="0 0 800 600">"#
    );
    let _ = writeln!(s, r#"<rect width="800" height="600" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="400" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        escape(title)
    );
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        s,
        r#"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let xv = x_min + t * (x_max - x_min);
        let yv = y_min + t * (y_max - y_min);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            y0 + 18.0,
            tick(xv)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}" stroke="black"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
            x0 - 8.0,
            py + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="13">x</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0
    );
    let y_label = if log_scale { "log10 |value|" } else { "value" };
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {:.2})">{y_label}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    for (idx, (name, ys)) in curves.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for (&x, &y) in xs.iter().zip(ys) {
            if !(x.is_finite() && y.is_finite()) {
                pen_down = false;
                continue;
            }
            let _ = write!(
                d,
                "{}{:.2},{:.2} ",
                if pen_down { "L" } else { "M" },
                sx(x),
                sy(y)
            );
            pen_down = true;
        }
        let _ = writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#,
            d.trim_end()
        );
        let ly = TOP + 20.0 + 20.0 * idx as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            x1 + 15.0,
            x1 + 40.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
            x1 + 46.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
