use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CsiError, Result};

use super::runner::ResultRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    PlotSvg,
}

/// Writes `rows` to `path` in the given format.
pub fn emit(rows: &[ResultRow], format: OutputFormat, path: &Path) -> Result<()> {
    let text = match format {
        OutputFormat::Csv => to_csv(rows)?,
        OutputFormat::PlotSvg => to_svg(rows)?,
    };
    std::fs::write(path, text)?;
    Ok(())
}

fn check_rows(rows: &[ResultRow]) -> Result<Vec<&str>> {
    let first = rows
        .first()
        .ok_or_else(|| CsiError::InvalidParameter("no rows to emit".into()))?;
    let names: Vec<&str> = first.keys.iter().map(|(k, _)| k.as_str()).collect();
    for r in rows {
        if r.scenario != first.scenario || r.keys.iter().map(|(k, _)| k.as_str()).ne(names.iter().copied()) {
            return Err(CsiError::InvalidParameter(
                "rows mix scenarios or key sets; emit them separately".into(),
            ));
        }
    }
    Ok(names)
}

fn escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// CSV with header `scenario,<keys>...,metric,value,n,stderr`. Numbers use the
/// shortest representation that round-trips, so output is byte-stable.
pub fn to_csv(rows: &[ResultRow]) -> Result<String> {
    let names = check_rows(rows)?;
    let mut out = String::from("scenario");
    for n in &names {
        out.push(',');
        out.push_str(&escape(n));
    }
    out.push_str(",metric,value,n,stderr\n");
    for r in rows {
        out.push_str(&escape(&r.scenario));
        for (_, v) in &r.keys {
            out.push(',');
            out.push_str(&escape(v));
        }
        let _ = writeln!(out, ",{},{},{},{}", escape(&r.metric), r.value, r.n, r.stderr);
    }
    Ok(out)
}

const W: f64 = 720.0;
const H: f64 = 460.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 230.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

/// The numeric key with the most distinct values becomes the x axis.
fn pick_x_key(rows: &[ResultRow], names: &[&str]) -> Option<usize> {
    (0..names.len())
        .filter(|&i| rows.iter().all(|r| r.keys[i].1.parse::<f64>().is_ok()))
        .map(|i| {
            let mut vals: Vec<&str> = rows.iter().map(|r| r.keys[i].1.as_str()).collect();
            vals.sort_unstable();
            vals.dedup();
            (i, vals.len())
        })
        .filter(|&(_, n)| n > 1)
        .max_by_key(|&(i, n)| (n, std::cmp::Reverse(i)))
        .map(|(i, _)| i)
}

/// Line plot of positive metric values on a log10 y axis. Each series is one
/// metric together with the non-x keys that vary.
pub fn to_svg(rows: &[ResultRow]) -> Result<String> {
    let names = check_rows(rows)?;
    let x_key = pick_x_key(rows, &names);
    let varying: Vec<usize> = (0..names.len())
        .filter(|&i| Some(i) != x_key)
        .filter(|&i| rows.iter().any(|r| r.keys[i].1 != rows[0].keys[i].1))
        .collect();

    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for (idx, r) in rows.iter().enumerate() {
        if !(r.value > 0.0) || !r.value.is_finite() {
            continue;
        }
        let mut label = r.metric.clone();
        for &i in &varying {
            let _ = write!(label, " {}={}", names[i], r.keys[i].1);
        }
        let x = match x_key {
            Some(i) => r.keys[i].1.parse::<f64>().unwrap_or(idx as f64),
            None => idx as f64,
        };
        if !series.contains_key(&label) {
            order.push(label.clone());
        }
        series.entry(label).or_default().push((x, r.value));
    }
    let pts: Vec<(f64, f64)> = series.values().flatten().copied().collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{LEFT}" y="18" font-size="13">{}</text>"#, xml(&rows[0].scenario));
    if pts.is_empty() {
        svg.push_str("<text x=\"100\" y=\"200\">no positive values to plot</text>\n</svg>\n");
        return Ok(svg);
    }
    let (mut x0, mut x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    if x1 == x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let ly: Vec<f64> = pts.iter().map(|p| p.1.log10()).collect();
    let mut d0 = ly.iter().copied().fold(f64::INFINITY, f64::min).floor();
    let mut d1 = ly.iter().copied().fold(f64::NEG_INFINITY, f64::max).ceil();
    if d1 <= d0 {
        d0 -= 1.0;
        d1 += 1.0;
    }
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |v: f64| TOP + (d1 - v.log10()) / (d1 - d0) * ph;

    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
    );
    for d in d0 as i32..=d1 as i32 {
        let y = sy(10f64.powi(d));
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">1e{d}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0
        );
    }
    for i in 0..=4 {
        let x = x0 + (x1 - x0) * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(x),
            TOP + ph + 16.0,
            trim(x)
        );
    }
    let x_label = x_key.map(|i| names[i]).unwrap_or("row");
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 12.0,
        xml(x_label)
    );
    for (n, label) in order.iter().enumerate() {
        let color = COLORS[n % COLORS.len()];
        let mut p = series[label].clone();
        p.sort_by(|a, b| a.0.total_cmp(&b.0));
        let path: Vec<String> = p.iter().map(|(x, v)| format!("{:.2},{:.2}", sx(*x), sy(*v))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        for (x, v) in &p {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(*x), sy(*v));
        }
        if n < 24 {
            let ly = TOP + 12.0 + 14.0 * n as f64;
            let _ = writeln!(
                svg,
                r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                W - RIGHT + 10.0,
                W - RIGHT + 28.0,
                W - RIGHT + 32.0,
                ly + 4.0,
                xml(label)
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn trim(x: f64) -> String {
    let s = format!("{x:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
