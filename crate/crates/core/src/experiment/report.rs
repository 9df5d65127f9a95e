use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::BerRecord;
use crate::{Error, Result};

pub fn write_records(path: &Path, records: &[BerRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<BerRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Writes the CSV table and the BER-vs-noise SVG plot.
pub fn emit_report(records: &[BerRecord], csv_path: &Path, svg_path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Empty("BER records"));
    }
    write_records(csv_path, records)?;
    std::fs::write(svg_path, render_svg(records)).map_err(|e| Error::io(svg_path, e))
}

/// Records grouped per demapper, each curve sorted by noise level.
pub fn curves(records: &[BerRecord]) -> BTreeMap<String, Vec<&BerRecord>> {
    let mut map: BTreeMap<String, Vec<&BerRecord>> = BTreeMap::new();
    for r in records {
        map.entry(r.demapper.clone()).or_default().push(r);
    }
    for c in map.values_mut() {
        c.sort_by(|a, b| a.noise_db.total_cmp(&b.noise_db));
    }
    map
}

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

/// Log-scale BER versus noise level with one series per demapper and
/// vertical bars for the credibility intervals.
pub fn render_svg(records: &[BerRecord]) -> String {
    let (w, h) = (720.0, 480.0);
    let (left, right, top, bottom) = (80.0, 150.0, 30.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let xs = records.iter().map(|r| r.noise_db);
    let x_min = xs.clone().fold(f64::INFINITY, f64::min).floor();
    let mut x_max = xs.fold(f64::NEG_INFINITY, f64::max).ceil();
    if x_max <= x_min {
        x_max = x_min + 1.0;
    }
    let floor = |v: f64| v.max(1e-12);
    let lows = records.iter().map(|r| floor(r.ci_low.min(r.ber)));
    let highs = records.iter().map(|r| floor(r.ci_high.max(r.ber)));
    let d_min = lows.fold(f64::INFINITY, f64::min).log10().floor();
    let mut d_max = highs.fold(f64::NEG_INFINITY, f64::max).log10().ceil();
    if d_max <= d_min {
        d_max = d_min + 1.0;
    }
    let px = |x: f64| left + (x - x_min) / (x_max - x_min) * pw;
    let py = |b: f64| top + (d_max - floor(b).log10()) / (d_max - d_min) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for d in (d_min as i64)..=(d_max as i64) {
        let y = py(10f64.powi(d as i32));
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"##,
            left + pw,
            left - 6.0,
            y + 4.0
        );
    }
    let mut x = x_min;
    while x <= x_max + 1e-9 {
        let xp = px(x);
        let _ = writeln!(
            s,
            r##"<line x1="{xp:.2}" y1="{top}" x2="{xp:.2}" y2="{:.2}" stroke="#eee"/><text x="{xp:.2}" y="{:.2}" text-anchor="middle">{x}</text>"##,
            top + ph,
            top + ph + 18.0
        );
        x += 1.0;
    }
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">noise level σ² (dB)</text>"#,
        left + pw / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">BER</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, (name, curve)) in curves(records).iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let pts: Vec<String> = curve
            .iter()
            .map(|r| format!("{:.2},{:.2}", px(r.noise_db), py(r.ber)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        for r in curve {
            let (x, y) = (px(r.noise_db), py(r.ber));
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{c}"/><circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{c}"/>"#,
                py(r.ci_low),
                py(r.ci_high)
            );
        }
        let ly = top + 20.0 + 20.0 * i as f64;
        let lx = left + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{c}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 25.0,
            lx + 32.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(name: &str, db: f64, e: u64) -> BerRecord {
        BerRecord::new(name, db, e, 1_000_000, 0, false).unwrap()
    }

    #[test]
    fn csv_round_trip_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let (c, s) = (dir.path().join("r.csv"), dir.path().join("r.svg"));
        let records = vec![rec("le7", -3.0, 2100)];
        emit_report(&records, &c, &s).unwrap();
        let text = std::fs::read_to_string(&c).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "demapper,noise_db,errors,bits,ber,ci_low,ci_high,seed,censored");
        assert_eq!(read_records(&c).unwrap(), records);
        let svg = std::fs::read_to_string(&s).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn empty_report_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_report(&[], &dir.path().join("a"), &dir.path().join("b")).is_err());
    }
}
