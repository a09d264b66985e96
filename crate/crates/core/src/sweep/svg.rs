//! Standalone SVG plots of sweep results: heatmaps for two-axis grids, line
//! plots for single-axis scans.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::{Axis, Scale, SweepResult, SweepRow};
use crate::dynamics::Verdict;

#[derive(Debug, Error)]
pub enum SvgError {
    #[error("unknown quantity `{0}`")]
    UnknownQuantity(String),
    #[error("I/O failure: {0}")]
    IoFailure(#[from] std::io::Error),
}

/// Quantities accepted by [`render_svg`]. `negativities` draws E_mc, E_ac and
/// E_ma together.
pub const QUANTITIES: [&str; 10] = [
    "E_mc",
    "E_ac",
    "E_ma",
    "eps_mc",
    "eps_ac",
    "eps_ma",
    "nu_min",
    "c_s",
    "max_real_part",
    "negativities",
];

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const HATCH_COLOR: &str = "#9e9e9e";
const LINE_COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
const VIRIDIS: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

#[derive(Clone, Copy)]
enum Cell {
    Value(f64),
    /// Unstable point or per-point failure.
    Hatched,
}

fn extract(row: &SweepRow, quantity: &str) -> Cell {
    let Ok(p) = &row.outcome else {
        return Cell::Hatched;
    };
    let ent = p.entanglement.as_ref();
    let neg = |k: usize, eps: bool| {
        ent.map_or(Cell::Hatched, |e| {
            let n = e.negativities[k];
            Cell::Value(if eps { n.epsilon } else { n.log_negativity })
        })
    };
    match quantity {
        "E_mc" => neg(0, false),
        "E_ac" => neg(1, false),
        "E_ma" => neg(2, false),
        "eps_mc" => neg(0, true),
        "eps_ac" => neg(1, true),
        "eps_ma" => neg(2, true),
        "nu_min" => ent.map_or(Cell::Hatched, |e| Cell::Value(e.nu_min)),
        "c_s" if p.verdict == Verdict::Stable => Cell::Value(p.c_s),
        "max_real_part" => Cell::Value(p.max_real_part),
        _ => Cell::Hatched,
    }
}

pub fn emit_svg(result: &SweepResult, quantity: &str, path: &Path) -> Result<(), SvgError> {
    std::fs::write(path, render_svg(result, quantity)?)?;
    Ok(())
}

/// One-axis results become line plots, two-axis results heatmaps.
pub fn render_svg(result: &SweepResult, quantity: &str) -> Result<String, SvgError> {
    check_quantity(quantity)?;
    match &result.axis2 {
        None => {
            let names: &[&str] = if quantity == "negativities" {
                &["E_mc", "E_ac", "E_ma"]
            } else {
                &[quantity]
            };
            let series = names
                .iter()
                .map(|q| {
                    (
                        q.to_string(),
                        result.rows.iter().map(|r| extract(r, q)).collect(),
                    )
                })
                .collect::<Vec<_>>();
            let title = format!(
                "{}: {}",
                result.name,
                if quantity == "negativities" {
                    "E_N"
                } else {
                    quantity
                }
            );
            Ok(line_plot(&result.axis1, &series, &title, quantity))
        }
        Some(_) if quantity == "negativities" => Err(SvgError::UnknownQuantity(
            "negativities (two-axis sweep)".into(),
        )),
        Some(a2) => Ok(heatmap(result, a2, quantity)),
    }
}

/// A two-axis result drawn as one line per second-axis value.
pub fn render_svg_lines(result: &SweepResult, quantity: &str) -> Result<String, SvgError> {
    check_quantity(quantity)?;
    let Some(a2) = &result.axis2 else {
        return render_svg(result, quantity);
    };
    if quantity == "negativities" {
        return Err(SvgError::UnknownQuantity(
            "negativities (two-axis sweep)".into(),
        ));
    }
    let n1 = result.axis1.len();
    let series: Vec<(String, Vec<Cell>)> = a2
        .values
        .iter()
        .enumerate()
        .map(|(i2, v)| {
            let label = format!("{} = {}", a2.name, tick_label(*v));
            (
                label,
                (0..n1)
                    .map(|i1| extract(result.row(i1, i2), quantity))
                    .collect(),
            )
        })
        .collect();
    Ok(line_plot(
        &result.axis1,
        &series,
        &format!("{}: {}", result.name, quantity),
        quantity,
    ))
}

fn check_quantity(quantity: &str) -> Result<(), SvgError> {
    if QUANTITIES.contains(&quantity) {
        Ok(())
    } else {
        Err(SvgError::UnknownQuantity(quantity.to_string()))
    }
}

fn open_svg(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r##"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<defs><pattern id="hatch" patternUnits="userSpaceOnUse" width="6" height="6"><rect width="6" height="6" fill="#ffffff"/><path d="M0,6 L6,0" stroke="{HATCH_COLOR}" stroke-width="1.5"/></pattern></defs>
<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>
<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>
"##,
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        escape(title)
    );
}

fn plot_box() -> (f64, f64, f64, f64) {
    (LEFT, TOP, WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM)
}

fn axis_coord(axis: &Axis, v: f64) -> f64 {
    match axis.scale {
        Scale::Linear => v,
        Scale::Log => v.log10(),
    }
}

fn line_plot(axis: &Axis, series: &[(String, Vec<Cell>)], title: &str, quantity: &str) -> String {
    let mut out = String::new();
    open_svg(&mut out, title);
    let (x0, y0, w, h) = plot_box();

    let xs: Vec<f64> = axis.values.iter().map(|v| axis_coord(axis, *v)).collect();
    let (xmin, xmax) = min_max(xs.iter().copied()).unwrap_or((0.0, 1.0));
    let (xmin, xmax) = widen(xmin, xmax);
    let values = series
        .iter()
        .flat_map(|(_, s)| s.iter())
        .filter_map(|c| match c {
            Cell::Value(v) => Some(*v),
            Cell::Hatched => None,
        });
    let (vmin, vmax) = min_max(values).unwrap_or((0.0, 0.0));
    let (ymin, ymax) = widen(vmin.min(0.0), vmax.max(0.0));
    let px = |x: f64| x0 + (x - xmin) / (xmax - xmin) * w;
    let py = |y: f64| y0 + h - (y - ymin) / (ymax - ymin) * h;

    // Hatched bands where every series is unavailable.
    let half = if xs.len() > 1 {
        (xs[1] - xs[0]).abs() / 2.0
    } else {
        (xmax - xmin) / 2.0
    };
    for (i, &x) in xs.iter().enumerate() {
        if series.iter().all(|(_, s)| matches!(s[i], Cell::Hatched)) {
            let a = px((x - half).max(xmin));
            let b = px((x + half).min(xmax));
            let _ = writeln!(
                out,
                r##"<rect x="{a:.2}" y="{y0:.2}" width="{:.2}" height="{h:.2}" fill="url(#hatch)" stroke="none"/>"##,
                (b - a).max(0.5)
            );
        }
    }
    frame(&mut out);
    x_ticks(&mut out, axis, xmin, xmax, &px);
    for k in 0..=4 {
        let y = ymin + (ymax - ymin) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{x0:.2}" y2="{:.2}" stroke="#000000"/>"##,
            x0 - 5.0,
            py(y),
            py(y)
        );
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            x0 - 8.0,
            py(y) + 4.0,
            escape(&tick_label(y))
        );
    }
    axis_labels(&mut out, &axis_title(axis), quantity);

    for (k, (label, cells)) in series.iter().enumerate() {
        let color = LINE_COLORS[k % LINE_COLORS.len()];
        let mut run: Vec<(f64, f64)> = Vec::new();
        let flush = |run: &mut Vec<(f64, f64)>, out: &mut String| {
            if run.len() == 1 {
                let (x, y) = run[0];
                let _ = writeln!(
                    out,
                    r##"<circle cx="{x:.2}" cy="{y:.2}" r="1.8" fill="{color}"/>"##
                );
            } else if run.len() > 1 {
                let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    out,
                    r##"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"##,
                    pts.join(" ")
                );
            }
            run.clear();
        };
        for (i, c) in cells.iter().enumerate() {
            match c {
                Cell::Value(v) => run.push((px(xs[i]), py(*v))),
                Cell::Hatched => flush(&mut run, &mut out),
            }
        }
        flush(&mut run, &mut out);
        let ly = y0 + 10.0 + 18.0 * k as f64;
        let lx = x0 + w + 14.0;
        let _ = writeln!(
            out,
            r##"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"##,
            lx + 18.0
        );
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}">{}</text>"##,
            lx + 22.0,
            ly + 4.0,
            escape(label)
        );
    }
    let ly = y0 + 10.0 + 18.0 * series.len() as f64;
    let lx = x0 + w + 14.0;
    let _ = writeln!(
        out,
        r##"<rect x="{lx:.2}" y="{:.2}" width="18" height="10" fill="url(#hatch)" stroke="{HATCH_COLOR}"/>"##,
        ly - 5.0
    );
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}">unstable</text>"##,
        lx + 22.0,
        ly + 4.0
    );
    out.push_str("</svg>\n");
    out
}

fn heatmap(result: &SweepResult, a2: &Axis, quantity: &str) -> String {
    let mut out = String::new();
    open_svg(&mut out, &format!("{}: {}", result.name, quantity));
    let (x0, y0, w, h) = plot_box();
    let (n1, n2) = (result.axis1.len(), a2.len());
    let cells: Vec<Cell> = result.rows.iter().map(|r| extract(r, quantity)).collect();
    let vmax = cells
        .iter()
        .filter_map(|c| match c {
            Cell::Value(v) => Some(*v),
            Cell::Hatched => None,
        })
        .fold(0.0f64, f64::max);
    let cw = w / n1 as f64;
    let ch = h / n2 as f64;
    for i2 in 0..n2 {
        for i1 in 0..n1 {
            let fill = match cells[i2 * n1 + i1] {
                Cell::Value(v) => colormap(if vmax > 0.0 {
                    (v / vmax).clamp(0.0, 1.0)
                } else {
                    0.0
                }),
                Cell::Hatched => "url(#hatch)".to_string(),
            };
            let _ = writeln!(
                out,
                r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{fill}" stroke="none"/>"##,
                x0 + i1 as f64 * cw,
                y0 + h - (i2 + 1) as f64 * ch,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    frame(&mut out);
    for k in index_ticks(n1) {
        let x = x0 + (k as f64 + 0.5) * cw;
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000000"/>"##,
            y0 + h,
            y0 + h + 5.0
        );
        let _ = writeln!(
            out,
            r##"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            y0 + h + 18.0,
            escape(&tick_label(result.axis1.values[k]))
        );
    }
    for k in index_ticks(n2) {
        let y = y0 + h - (k as f64 + 0.5) * ch;
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="#000000"/>"##,
            x0 - 5.0
        );
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            x0 - 8.0,
            y + 4.0,
            escape(&tick_label(a2.values[k]))
        );
    }
    axis_labels(&mut out, &axis_title(&result.axis1), &axis_title(a2));

    // Color bar from 0 to the column maximum.
    let bx = x0 + w + 20.0;
    let steps = 50;
    for s in 0..steps {
        let t = s as f64 / (steps - 1) as f64;
        let color = colormap(if vmax > 0.0 { t } else { 0.0 });
        let y = y0 + h - (s + 1) as f64 * h / steps as f64;
        let _ = writeln!(
            out,
            r##"<rect x="{bx:.2}" y="{y:.3}" width="18" height="{:.3}" fill="{color}" stroke="none"/>"##,
            h / steps as f64 + 0.05
        );
    }
    let _ = writeln!(
        out,
        r##"<rect x="{bx:.2}" y="{y0:.2}" width="18" height="{h:.2}" fill="none" stroke="#000000"/>"##
    );
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}">{}</text>"##,
        bx + 24.0,
        y0 + 8.0,
        escape(&tick_label(vmax))
    );
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}">0</text>"##,
        bx + 24.0,
        y0 + h
    );
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}">{}</text>"##,
        bx,
        y0 - 8.0,
        escape(quantity)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{bx:.2}" y="{:.2}" width="18" height="10" fill="url(#hatch)" stroke="{HATCH_COLOR}"/>"##,
        y0 + h + 20.0
    );
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}">unstable</text>"##,
        bx + 24.0,
        y0 + h + 29.0
    );
    out.push_str("</svg>\n");
    out
}

fn frame(out: &mut String) {
    let (x0, y0, w, h) = plot_box();
    let _ = writeln!(
        out,
        r##"<rect x="{x0:.2}" y="{y0:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="#000000"/>"##
    );
}

fn x_ticks(out: &mut String, axis: &Axis, xmin: f64, xmax: f64, px: &dyn Fn(f64) -> f64) {
    let (_, y0, _, h) = plot_box();
    for k in 0..=4 {
        let x = xmin + (xmax - xmin) * k as f64 / 4.0;
        let value = match axis.scale {
            Scale::Linear => x,
            Scale::Log => 10f64.powf(x),
        };
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#000000"/>"##,
            px(x),
            y0 + h,
            px(x),
            y0 + h + 5.0
        );
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            px(x),
            y0 + h + 18.0,
            escape(&tick_label(value))
        );
    }
}

fn axis_labels(out: &mut String, x: &str, y: &str) {
    let (x0, y0, w, h) = plot_box();
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
        x0 + w / 2.0,
        y0 + h + 42.0,
        escape(x)
    );
    let cy = y0 + h / 2.0;
    let _ = writeln!(
        out,
        r##"<text x="20" y="{cy:.2}" text-anchor="middle" transform="rotate(-90 20 {cy:.2})">{}</text>"##,
        escape(y)
    );
}

fn axis_title(axis: &Axis) -> String {
    match axis.scale {
        Scale::Linear => axis.name.to_string(),
        Scale::Log => format!("{} (log)", axis.name),
    }
}

fn index_ticks(n: usize) -> Vec<usize> {
    if n <= 5 {
        (0..n).collect()
    } else {
        (0..5).map(|k| k * (n - 1) / 4).collect()
    }
}

fn min_max(it: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    it.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((a, b)) => Some((a.min(v), b.max(v))),
    })
}

/// Degenerate ranges become a unit interval around the value.
fn widen(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

fn colormap(t: f64) -> String {
    let x = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let i = (x.floor() as usize).min(VIRIDIS.len() - 2);
    let f = x - i as f64;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * f).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".into()
    } else if (1e-2..1e4).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
