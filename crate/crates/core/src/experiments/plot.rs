//! Deterministic SVG plots of recovery-rate reports.
//!
//! Any CSV with numeric columns `m`, `s` and `rate` is a known report; extra
//! columns are ignored. Coordinates are printed with fixed decimals so the
//! same CSV always yields the same bytes.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    /// Recovery rate over the `(m, s)` grid, one cell per row.
    Heatmap,
    /// Rate against `m`, one polyline per `s`.
    Lines,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heatmap" => Ok(PlotKind::Heatmap),
            "lines" => Ok(PlotKind::Lines),
            other => Err(Error::Format(format!("unknown plot kind `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Point {
    m: usize,
    s: usize,
    rate: f64,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 110.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn parse_points(csv_text: &str) -> Result<Vec<Point>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Format(format!("unreadable CSV header: {e}")))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("unknown report schema: no `{name}` column")))
    };
    let (im, is, ir) = (column("m")?, column("s")?, column("rate")?);
    let mut points = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format(format!("bad CSV record: {e}")))?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let bad = |name: &str| Error::Format(format!("data row {}: bad `{name}` value", line + 1));
        let m = field(im).parse::<usize>().map_err(|_| bad("m"))?;
        let s = field(is).parse::<usize>().map_err(|_| bad("s"))?;
        let rate = field(ir).parse::<f64>().map_err(|_| bad("rate"))?;
        if !(0.0..=1.0).contains(&rate) {
            return Err(bad("rate"));
        }
        points.push(Point { m, s, rate });
    }
    if points.is_empty() {
        return Err(Error::Format("report has no data rows".into()));
    }
    let mut seen = BTreeSet::new();
    for p in &points {
        if !seen.insert((p.m, p.s)) {
            return Err(Error::Format(format!("duplicate grid point m = {}, s = {}", p.m, p.s)));
        }
    }
    Ok(points)
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{HEIGHT:.0}" viewBox="0 0 {WIDTH:.0} {HEIGHT:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24.00" text-anchor="middle" font-size="15">{title}</text>"#,
        WIDTH / 2.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">m</text>"#,
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        HEIGHT - 16.0
    );
}

/// `#rrggbb` on a white-to-blue ramp.
fn shade(rate: f64) -> String {
    let v = (255.0 * (1.0 - rate)).round() as u8;
    format!("#{v:02x}{:02x}ff", 0xb0u8.max(v))
}

fn heatmap(points: &[Point]) -> String {
    let ms: Vec<usize> = points.iter().map(|p| p.m).collect::<BTreeSet<_>>().into_iter().collect();
    let ss: Vec<usize> = points.iter().map(|p| p.s).collect::<BTreeSet<_>>().into_iter().collect();
    let cw = (WIDTH - LEFT - RIGHT) / ms.len() as f64;
    let ch = (HEIGHT - TOP - BOTTOM) / ss.len() as f64;
    let mut out = String::new();
    header(&mut out, "recovery rate");
    let _ = writeln!(
        out,
        r#"<text x="18.00" y="{:.2}" text-anchor="middle" transform="rotate(-90 18.00 {:.2})">s</text>"#,
        TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
        TOP + (HEIGHT - TOP - BOTTOM) / 2.0
    );
    let mut sorted = points.to_vec();
    sorted.sort_by_key(|p| (p.s, p.m));
    for p in &sorted {
        let col = ms.binary_search(&p.m).unwrap();
        // larger s at the top
        let row = ss.len() - 1 - ss.binary_search(&p.s).unwrap();
        let _ = writeln!(
            out,
            r##"<rect class="cell" x="{:.2}" y="{:.2}" width="{cw:.2}" height="{ch:.2}" fill="{}" stroke="#ffffff"><title>m={} s={} rate={}</title></rect>"##,
            LEFT + col as f64 * cw,
            TOP + row as f64 * ch,
            shade(p.rate),
            p.m,
            p.s,
            p.rate
        );
    }
    for (k, m) in ms.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{m}</text>"#,
            LEFT + (k as f64 + 0.5) * cw,
            HEIGHT - BOTTOM + 16.0
        );
    }
    for (k, s) in ss.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{s}</text>"#,
            LEFT - 6.0,
            TOP + (ss.len() - 1 - k) as f64 * ch + ch / 2.0 + 4.0
        );
    }
    let lx = WIDTH - RIGHT + 16.0;
    let _ = writeln!(out, r#"<text x="{lx:.2}" y="{:.2}">rate 0</text>"#, TOP + 12.0);
    let _ = writeln!(
        out,
        r##"<circle cx="{:.2}" cy="{:.2}" r="6.00" fill="{}" stroke="#999999"/>"##,
        lx + 70.0,
        TOP + 8.0,
        shade(0.0)
    );
    let _ = writeln!(out, r#"<text x="{lx:.2}" y="{:.2}">rate 1</text>"#, TOP + 32.0);
    let _ = writeln!(
        out,
        r##"<circle cx="{:.2}" cy="{:.2}" r="6.00" fill="{}" stroke="#999999"/>"##,
        lx + 70.0,
        TOP + 28.0,
        shade(1.0)
    );
    out.push_str("</svg>\n");
    out
}

fn lines(points: &[Point]) -> String {
    let m_lo = points.iter().map(|p| p.m).min().unwrap() as f64;
    let m_hi = points.iter().map(|p| p.m).max().unwrap() as f64;
    let span = if m_hi > m_lo { m_hi - m_lo } else { 1.0 };
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let x = |m: usize| {
        if m_hi > m_lo {
            LEFT + (m as f64 - m_lo) / span * pw
        } else {
            LEFT + pw / 2.0
        }
    };
    let y = |r: f64| TOP + (1.0 - r) * ph;
    let mut out = String::new();
    header(&mut out, "recovery rate against m");
    let _ = writeln!(
        out,
        r##"<polyline fill="none" stroke="#000000" points="{LEFT:.2},{TOP:.2} {LEFT:.2},{:.2} {:.2},{:.2}"/>"##,
        TOP + ph,
        LEFT + pw,
        TOP + ph
    );
    for r in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{r:.2}</text>"#,
            LEFT - 6.0,
            y(r) + 4.0
        );
    }
    let ms: BTreeSet<usize> = points.iter().map(|p| p.m).collect();
    for m in &ms {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{m}</text>"#,
            x(*m),
            TOP + ph + 16.0
        );
    }
    let ss: BTreeSet<usize> = points.iter().map(|p| p.s).collect();
    for (k, s) in ss.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut series: Vec<&Point> = points.iter().filter(|p| p.s == *s).collect();
        series.sort_by_key(|p| p.m);
        let coords: Vec<String> = series
            .iter()
            .map(|p| format!("{:.2},{:.2}", x(p.m), y(p.rate)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
        for p in &series {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3.00" fill="{color}"/>"#,
                x(p.m),
                y(p.rate)
            );
        }
        let ly = TOP + 12.0 + 18.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{ly:.2}" fill="{color}">s = {s}</text>"#,
            WIDTH - RIGHT + 16.0
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Renders a report CSV as an SVG document.
pub fn render_plot(csv_text: &str, kind: PlotKind) -> Result<String> {
    let points = parse_points(csv_text)?;
    Ok(match kind {
        PlotKind::Heatmap => heatmap(&points),
        PlotKind::Lines => lines(&points),
    })
}

/// Reads `csv_path`, writes the plot to `out` (default: the CSV path with an
/// `.svg` extension) and returns the path written.
pub fn emit_plot(csv_path: &Path, kind: PlotKind, out: Option<&Path>) -> Result<PathBuf> {
    let text = std::fs::read_to_string(csv_path)?;
    let svg = render_plot(&text, kind)?;
    let target = out.map_or_else(|| csv_path.with_extension("svg"), Path::to_path_buf);
    std::fs::write(&target, svg)?;
    Ok(target)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PHASE: &str = "m,s,rate,trials\n10,1,0.5,4\n10,2,0.25,4\n20,1,1,4\n20,2,0.75,4\n30,1,1,4\n30,2,1,4\n";

    #[test]
    fn heatmap_has_one_cell_per_row() {
        let svg = render_plot(PHASE, PlotKind::Heatmap).unwrap();
        assert_eq!(svg.matches("<rect").count(), 6);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg, render_plot(PHASE, PlotKind::Heatmap).unwrap());
    }

    #[test]
    fn lines_have_one_series_per_s() {
        let svg = render_plot(PHASE, PlotKind::Lines).unwrap();
        assert_eq!(svg.matches(r#"class="series""#).count(), 2);
        assert_eq!(svg.matches("<circle").count(), 6);
    }

    #[test]
    fn rejects_unknown_or_empty_reports() {
        assert!(matches!(render_plot("m,s,rate,trials\n", PlotKind::Heatmap), Err(Error::Format(_))));
        assert!(matches!(render_plot("a,b\n1,2\n", PlotKind::Lines), Err(Error::Format(_))));
        assert!(matches!(render_plot("m,s,rate\n1,1,x\n", PlotKind::Lines), Err(Error::Format(_))));
        assert!(matches!(render_plot("m,s,rate\n1,1,2\n", PlotKind::Lines), Err(Error::Format(_))));
        assert!(matches!(
            render_plot("m,s,rate\n1,1,0.5\n1,1,0.5\n", PlotKind::Lines),
            Err(Error::Format(_))
        ));
        assert!("pie".parse::<PlotKind>().is_err());
    }

    #[test]
    fn single_column_grid() {
        let svg = render_plot("m,s,rate\n5,1,1\n", PlotKind::Lines).unwrap();
        assert!(svg.contains("<circle"));
    }
}
