use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// A table row that can be written to and parsed back from CSV, and plotted
/// against the shift level.
pub trait ReportRow: Sized {
    /// Column names. May depend on the rows (for per-layer columns).
    fn header(rows: &[Self]) -> Vec<String>;
    fn record(&self) -> Vec<String>;
    fn from_record(header: &[String], record: &[String]) -> Result<Self>;
    /// Chart series this row belongs to.
    fn series(&self) -> String;
    fn x(&self) -> f64;
    fn x_label() -> &'static str;
    /// `(chart name, y value)` pairs plotted for this row.
    fn plot_values(&self) -> Vec<(String, f64)>;
}

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Looks up `name` in a parsed CSV record.
pub(crate) struct Fields<'a> {
    header: &'a [String],
    record: &'a [String],
}

impl<'a> Fields<'a> {
    pub(crate) fn new(header: &'a [String], record: &'a [String]) -> Result<Self> {
        if header.len() != record.len() {
            return Err(Error::format("csv", "record", format!("{} fields for {} columns", record.len(), header.len())));
        }
        Ok(Self { header, record })
    }

    pub(crate) fn str(&self, name: &str) -> Result<&'a str> {
        self.header
            .iter()
            .position(|h| h == name)
            .map(|i| self.record[i].as_str())
            .ok_or_else(|| Error::format("csv", name, "missing column"))
    }

    pub(crate) fn parse<T: std::str::FromStr>(&self, name: &str) -> Result<T> {
        let s = self.str(name)?;
        s.parse().map_err(|_| Error::format("csv", name, format!("cannot parse {s:?}")))
    }

    pub(crate) fn opt(&self, name: &str) -> Result<Option<f64>> {
        match self.str(name)? {
            "" => Ok(None),
            _ => self.parse(name).map(Some),
        }
    }
}

pub fn write_csv<T: ReportRow>(rows: &[T], path: impl AsRef<Path>) -> Result<()> {
    let p = path.as_ref();
    let mut w = csv::Writer::from_path(p)?;
    w.write_record(T::header(rows))?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush().map_err(|e| Error::io(p, e))
}

pub fn read_csv<T: ReportRow>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let p = path.as_ref();
    let mut r = csv::Reader::from_path(p)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    r.records()
        .map(|rec| {
            let fields: Vec<String> = rec?.iter().map(str::to_string).collect();
            T::from_record(&header, &fields)
        })
        .collect()
}

/// Column names of a CSV file.
pub fn read_header(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let mut r = csv::Reader::from_path(path.as_ref())?;
    Ok(r.headers()?.iter().map(str::to_string).collect())
}

/// Writes `<out>/rows.csv` and one SVG chart per plotted value.
pub fn emit_report<T: ReportRow>(rows: &[T], out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::arg("no rows to report"));
    }
    let out = out_dir.as_ref();
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let csv_path = out.join("rows.csv");
    write_csv(rows, &csv_path)?;
    let mut written = vec![csv_path];
    written.extend(emit_charts(rows, out)?);
    Ok(written)
}

/// One SVG per plotted value, one polyline per series.
pub fn emit_charts<T: ReportRow>(rows: &[T], out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let out = out_dir.as_ref();
    let mut charts: Vec<(String, Vec<(String, Vec<(f64, f64)>)>)> = Vec::new();
    for row in rows {
        let series = row.series();
        for (name, y) in row.plot_values() {
            if !y.is_finite() {
                continue;
            }
            let chart = match charts.iter_mut().position(|(n, _)| *n == name) {
                Some(i) => &mut charts[i].1,
                None => {
                    charts.push((name.clone(), Vec::new()));
                    &mut charts.last_mut().expect("just pushed").1
                }
            };
            match chart.iter_mut().find(|(s, _)| *s == series) {
                Some((_, pts)) => pts.push((row.x(), y)),
                None => chart.push((series.clone(), vec![(row.x(), y)])),
            }
        }
    }
    let mut written = Vec::new();
    for (name, series) in &charts {
        let path = out.join(format!("{name}.svg"));
        std::fs::write(&path, svg_chart(name, T::x_label(), series)).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

const PALETTE: [&str; 8] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Minimal line chart with axis extents, one `<polyline>` per series.
pub fn svg_chart(title: &str, x_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (w, h, pad) = (480.0, 320.0, 50.0);
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<line x1="{pad}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/><line x1="{pad}" y1="{pad}" x2="{pad}" y2="{0}" stroke="black"/>"#,
        h - pad,
        w - pad
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="11">{}</text>"#, w / 2.0, h - 12.0, escape(x_label));
    for (x, y, anchor, v) in [
        (pad, h - pad + 14.0, "start", x0),
        (w - pad, h - pad + 14.0, "end", x1),
        (pad - 4.0, h - pad, "end", y0),
        (pad - 4.0, pad + 4.0, "end", y1),
    ] {
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-size="10">{v:.3}</text>"#);
    }
    for (i, (name, p)) in series.iter().enumerate() {
        let coords: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            coords.join(" "),
            escape(name)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="10" fill="{color}">{}</text>"#,
            w - pad + 4.0,
            pad + 12.0 * i as f64,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}
