//! Row serialization (CSV/JSON) and standalone SVG plots.
//!
//! The CSV column set is frozen; unbounded times serialize as the literal
//! token `inf`, absent channels leave their fields empty, numbers use the
//! shortest decimal form that round-trips, and lines end in LF. Identical
//! rows always produce identical bytes.

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::config::OutputFormat;
use crate::error::{Error, Result};
use crate::noise::{ChannelKind, CoherenceTime};
use crate::sweep::{ChannelCells, SweepRow};

/// Frozen CSV header.
pub const CSV_HEADER: &str = "ratio,ej_sum_ghz,e01_ghz,alpha_ghz,t2_charge_s,t2_flux_s,t2_ic_s,\
t2_charge_asym_s,t2_flux_asym_s,t2_ic_asym_s,err_charge_pct,err_flux_pct,err_ic_pct";

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn csv_t2(cells: Option<&ChannelCells>) -> String {
    match cells {
        None => String::new(),
        Some(c) => match c.t2 {
            CoherenceTime::Bounded(s) => fmt(s),
            CoherenceTime::Unbounded => "inf".to_string(),
        },
    }
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

fn csv_line(row: &SweepRow) -> String {
    let channels = [
        row.cells(ChannelKind::Charge),
        row.cells(ChannelKind::Flux),
        row.cells(ChannelKind::CriticalCurrent),
    ];
    let mut fields = vec![
        fmt(row.ratio),
        fmt(row.ej_sum),
        fmt(row.e01),
        fmt(row.anharmonicity),
    ];
    for c in channels {
        fields.push(csv_t2(c));
    }
    for c in channels {
        fields.push(csv_opt(c.and_then(|c| c.t2_asym)));
    }
    for c in channels {
        fields.push(csv_opt(c.and_then(|c| c.err_pct)));
    }
    fields.join(",")
}

fn json_t2(cells: Option<&ChannelCells>) -> Value {
    match cells {
        None => Value::Null,
        Some(c) => match c.t2 {
            CoherenceTime::Bounded(s) => json!(s),
            CoherenceTime::Unbounded => Value::String("inf".to_string()),
        },
    }
}

fn json_opt(v: Option<f64>) -> Value {
    v.map(|x| json!(x)).unwrap_or(Value::Null)
}

fn json_row(row: &SweepRow) -> Value {
    let charge = row.cells(ChannelKind::Charge);
    let flux = row.cells(ChannelKind::Flux);
    let ic = row.cells(ChannelKind::CriticalCurrent);
    let mut m = Map::new();
    m.insert("ratio".into(), json!(row.ratio));
    m.insert("ej_sum_ghz".into(), json!(row.ej_sum));
    m.insert("e01_ghz".into(), json!(row.e01));
    m.insert("alpha_ghz".into(), json!(row.anharmonicity));
    m.insert("t2_charge_s".into(), json_t2(charge));
    m.insert("t2_flux_s".into(), json_t2(flux));
    m.insert("t2_ic_s".into(), json_t2(ic));
    m.insert(
        "t2_charge_asym_s".into(),
        json_opt(charge.and_then(|c| c.t2_asym)),
    );
    m.insert(
        "t2_flux_asym_s".into(),
        json_opt(flux.and_then(|c| c.t2_asym)),
    );
    m.insert("t2_ic_asym_s".into(), json_opt(ic.and_then(|c| c.t2_asym)));
    m.insert(
        "err_charge_pct".into(),
        json_opt(charge.and_then(|c| c.err_pct)),
    );
    m.insert(
        "err_flux_pct".into(),
        json_opt(flux.and_then(|c| c.err_pct)),
    );
    m.insert("err_ic_pct".into(), json_opt(ic.and_then(|c| c.err_pct)));
    Value::Object(m)
}

/// Serializes rows to the destination and returns the byte count written.
pub fn emit_rows(rows: &[SweepRow], format: OutputFormat, dest: &mut dyn Write) -> Result<u64> {
    let text = match format {
        OutputFormat::Csv => {
            let mut out = String::with_capacity(64 * (rows.len() + 1));
            out.push_str(CSV_HEADER);
            out.push('\n');
            for row in rows {
                out.push_str(&csv_line(row));
                out.push('\n');
            }
            out
        }
        OutputFormat::Json => {
            let values: Vec<Value> = rows.iter().map(json_row).collect();
            let mut text = serde_json::to_string_pretty(&values).expect("rows serialize");
            text.push('\n');
            text
        }
    };
    dest.write_all(text.as_bytes())?;
    Ok(text.len() as u64)
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 560.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 56.0;

fn coord(v: f64) -> String {
    format!("{v:.2}")
}

struct Frame {
    x_min: f64,
    x_max: f64,
    log_y_min: f64,
    log_y_max: f64,
}

impl Frame {
    fn x(&self, x: f64) -> f64 {
        MARGIN_LEFT
            + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, y: f64) -> f64 {
        let t = (y.log10() - self.log_y_min) / (self.log_y_max - self.log_y_min);
        HEIGHT - MARGIN_BOTTOM - t * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn polyline(frame: &Frame, series: &[(f64, f64)], style: &str) -> String {
    let points: Vec<String> = series
        .iter()
        .map(|&(x, y)| format!("{},{}", coord(frame.x(x)), coord(frame.y(y))))
        .collect();
    format!(r#"<polyline {} points="{}"/>"#, style, points.join(" "))
}

/// Writes a standalone SVG for one channel: the numeric dephasing-time curve
/// as a solid polyline over a log y axis, with the calibrated asymptotic
/// overlay dashed. Byte output is deterministic for identical rows.
pub fn emit_plot(rows: &[SweepRow], channel: ChannelKind, dest: &mut dyn Write) -> Result<u64> {
    let numeric: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| {
            r.cells(channel)
                .and_then(|c| c.t2.seconds().map(|s| (r.ratio, s)))
        })
        .collect();
    let overlay: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| {
            r.cells(channel)
                .and_then(|c| c.t2_asym.filter(|s| *s > 0.0).map(|s| (r.ratio, s)))
        })
        .collect();
    if numeric.len() < 2 {
        return Err(Error::EmptySeries {
            channel: channel.label(),
        });
    }

    let x_min = numeric.first().map(|p| p.0).unwrap();
    let x_max = numeric.last().map(|p| p.0).unwrap();
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for &(_, y) in numeric.iter().chain(&overlay) {
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    let mut log_y_min = y_min.log10().floor();
    let mut log_y_max = y_max.log10().ceil();
    if log_y_max <= log_y_min {
        log_y_min -= 1.0;
        log_y_max += 1.0;
    }
    let frame = Frame {
        x_min,
        x_max,
        log_y_min,
        log_y_max,
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        r#"<svg version="1.1" width="{WIDTH}" height="{HEIGHT}" xmlns="http://www.w3.org/2000/svg">"#
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{} noise dephasing time</text>"#,
        coord(WIDTH / 2.0),
        channel.label(),
    ));
    svg.push('\n');

    // Decade grid and y tick labels.
    let mut exp = log_y_min as i64;
    while exp <= log_y_max as i64 {
        let y = frame.y(10f64.powi(exp as i32));
        svg.push_str(&format!(
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#dddddd" stroke-width="1"/>"##,
            coord(MARGIN_LEFT),
            coord(y),
            coord(WIDTH - MARGIN_RIGHT),
            coord(y),
        ));
        svg.push('\n');
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="end">1e{}</text>"#,
            coord(MARGIN_LEFT - 6.0),
            coord(y + 4.0),
            exp,
        ));
        svg.push('\n');
        exp += 1;
    }

    // X ticks.
    for k in 0..=5 {
        let x_val = x_min + (x_max - x_min) * k as f64 / 5.0;
        let x = frame.x(x_val);
        svg.push_str(&format!(
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#999999" stroke-width="1"/>"##,
            coord(x),
            coord(HEIGHT - MARGIN_BOTTOM),
            coord(x),
            coord(HEIGHT - MARGIN_BOTTOM + 5.0),
        ));
        svg.push('\n');
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{:.1}</text>"#,
            coord(x),
            coord(HEIGHT - MARGIN_BOTTOM + 20.0),
            x_val,
        ));
        svg.push('\n');
    }

    // Frame and axis labels.
    svg.push_str(&format!(
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black" stroke-width="1"/>"#,
        coord(MARGIN_LEFT),
        coord(MARGIN_TOP),
        coord(WIDTH - MARGIN_LEFT - MARGIN_RIGHT),
        coord(HEIGHT - MARGIN_TOP - MARGIN_BOTTOM),
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">EJ/Ec</text>"#,
        coord(MARGIN_LEFT + (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / 2.0),
        coord(HEIGHT - 12.0),
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<text x="18" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 18 {})">T2 (s)</text>"#,
        coord(MARGIN_TOP + (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / 2.0),
        coord(MARGIN_TOP + (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / 2.0),
    ));
    svg.push('\n');

    // Curves: numeric solid, overlay dashed.
    svg.push_str(&polyline(
        &frame,
        &numeric,
        r##"fill="none" stroke="#1f6fb2" stroke-width="1.8""##,
    ));
    svg.push('\n');
    if overlay.len() >= 2 {
        svg.push_str(&polyline(
            &frame,
            &overlay,
            r##"fill="none" stroke="#c44e52" stroke-width="1.5" stroke-dasharray="7 4""##,
        ));
        svg.push('\n');
    }

    // Legend.
    let lx = MARGIN_LEFT + 14.0;
    let ly = MARGIN_TOP + 18.0;
    svg.push_str(&format!(
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#1f6fb2" stroke-width="1.8"/>"##,
        coord(lx),
        coord(ly),
        coord(lx + 28.0),
        coord(ly),
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">numeric</text>"#,
        coord(lx + 34.0),
        coord(ly + 4.0),
    ));
    svg.push('\n');
    if overlay.len() >= 2 {
        svg.push_str(&format!(
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#c44e52" stroke-width="1.5" stroke-dasharray="7 4"/>"##,
            coord(lx),
            coord(ly + 18.0),
            coord(lx + 28.0),
            coord(ly + 18.0),
        ));
        svg.push('\n');
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">asymptotic</text>"#,
            coord(lx + 34.0),
            coord(ly + 22.0),
        ));
        svg.push('\n');
    }
    svg.push_str("</svg>\n");

    dest.write_all(svg.as_bytes())?;
    Ok(svg.len() as u64)
}
