use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{csv_err, io_err, json_err, BenchError, Result};
use crate::profile::{Metric, ProfileCurve};
use crate::suite::RunRecord;

pub const RECORDS_JSONL: &str = "records.jsonl";
pub const RECORDS_CSV: &str = "records.csv";

pub fn profile_csv_name(metric: Metric) -> String {
    format!("profile_{metric}.csv")
}

pub fn profile_svg_name(metric: Metric) -> String {
    format!("profile_{metric}.svg")
}

/// Writes records as CSV and JSON lines, and every metric's curves as CSV
/// and SVG. Returns the paths written. Nothing is written when `curves` is
/// empty.
pub fn emit_report(
    curves: &[ProfileCurve],
    records: &[RunRecord],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if curves.is_empty() {
        return Err(BenchError::NothingToRender);
    }
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = write_records(records, out_dir)?;
    let mut metrics: Vec<Metric> = Vec::new();
    for c in curves {
        if !metrics.contains(&c.metric) {
            metrics.push(c.metric);
        }
    }
    for metric in metrics {
        let group: Vec<ProfileCurve> = curves
            .iter()
            .filter(|c| c.metric == metric)
            .cloned()
            .collect();
        written.extend(write_profile(&group, metric, out_dir)?);
    }
    Ok(written)
}

/// Writes `records.jsonl` and `records.csv` into `out_dir`.
pub fn write_records(records: &[RunRecord], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let jsonl = out_dir.join(RECORDS_JSONL);
    let mut w = BufWriter::new(File::create(&jsonl).map_err(io_err(&jsonl))?);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(json_err(&jsonl))?;
        w.write_all(b"\n").map_err(io_err(&jsonl))?;
    }
    w.flush().map_err(io_err(&jsonl))?;

    let csv_path = out_dir.join(RECORDS_CSV);
    let mut w = csv::Writer::from_path(&csv_path).map_err(csv_err(&csv_path))?;
    for r in records {
        w.serialize(r).map_err(csv_err(&csv_path))?;
    }
    w.flush().map_err(io_err(&csv_path))?;
    Ok(vec![jsonl, csv_path])
}

/// Writes `profile_<metric>.csv` and `profile_<metric>.svg` into `out_dir`.
pub fn write_profile(
    curves: &[ProfileCurve],
    metric: Metric,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if curves.is_empty() {
        return Err(BenchError::NothingToRender);
    }
    let csv_path = out_dir.join(profile_csv_name(metric));
    let mut w = csv::Writer::from_path(&csv_path).map_err(csv_err(&csv_path))?;
    for c in curves {
        for &(tau, value) in &c.breakpoints {
            w.serialize(ProfileRow {
                solver_id: c.solver_id.clone(),
                metric: c.metric,
                tau,
                value,
            })
            .map_err(csv_err(&csv_path))?;
        }
    }
    w.flush().map_err(io_err(&csv_path))?;

    let svg_path = out_dir.join(profile_svg_name(metric));
    fs::write(&svg_path, render_svg(curves, metric)).map_err(io_err(&svg_path))?;
    Ok(vec![csv_path, svg_path])
}

#[derive(Debug, Serialize, Deserialize)]
struct ProfileRow {
    solver_id: String,
    metric: Metric,
    tau: f64,
    value: f64,
}

/// Reads curves written by [`write_profile`], preserving solver order.
pub fn read_profile_csv(path: &Path) -> Result<Vec<ProfileCurve>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut curves: Vec<ProfileCurve> = Vec::new();
    for row in rdr.deserialize() {
        let row: ProfileRow = row.map_err(csv_err(path))?;
        match curves.last_mut() {
            Some(c) if c.solver_id == row.solver_id && c.metric == row.metric => {
                c.breakpoints.push((row.tau, row.value))
            }
            _ => curves.push(ProfileCurve {
                solver_id: row.solver_id,
                metric: row.metric,
                breakpoints: vec![(row.tau, row.value)],
            }),
        }
    }
    Ok(curves)
}

/// Reads records from a `.csv` file or from JSON lines (any other
/// extension).
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
        return rdr
            .deserialize()
            .map(|r| r.map_err(csv_err(path)))
            .collect();
    }
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_err(path))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line).map_err(json_err(path))?);
        }
    }
    Ok(out)
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 180.0;
const MARGIN_Y: f64 = 40.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Step plot of `P_s(τ)` on a log₁₀ τ axis, one `<polyline>` per solver.
pub fn render_svg(curves: &[ProfileCurve], metric: Metric) -> String {
    let tau_max = curves
        .iter()
        .filter_map(ProfileCurve::max_finite_tau)
        .fold(2.0f64, f64::max)
        * 1.1;
    let log_max = tau_max.log10();
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - 2.0 * MARGIN_Y;
    let sx = |tau: f64| MARGIN_LEFT + plot_w * tau.log10() / log_max;
    let sy = |p: f64| MARGIN_Y + plot_h * (1.0 - p);

    let mut svg = String::new();
    // Writing into a String cannot fail.
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">Performance profile ({metric})</text>"#,
        MARGIN_LEFT + plot_w / 2.0
    );
    // Axes and ticks.
    let (x0, x1, y0, y1) = (sx(1.0), sx(tau_max), sy(0.0), sy(1.0));
    let _ = writeln!(
        svg,
        r#"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let p = i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{p}</text>"#,
            x0 - 6.0,
            sy(p) + 4.0
        );
    }
    let mut decade = 1.0;
    while decade <= tau_max {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{decade}</text>"#,
            sx(decade),
            y0 + 16.0
        );
        decade *= 10.0;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">τ (log scale)</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 6.0
    );

    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut points = vec![(1.0, 0.0)];
        let mut prev = 0.0;
        for &(tau, p) in c.breakpoints.iter().filter(|(t, _)| t.is_finite()) {
            points.push((tau, prev));
            points.push((tau, p));
            prev = p;
        }
        points.push((tau_max, prev));
        let pts: Vec<String> = points
            .iter()
            .map(|&(t, p)| format!("{:.2},{:.2}", sx(t), sy(p)))
            .collect();
        let id = xml_escape(&c.solver_id);
        let _ = writeln!(
            svg,
            r#"<polyline data-solver="{id}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN_Y + 16.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{id}</text>"#,
            lx + 26.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(id: &str, bps: Vec<(f64, f64)>) -> ProfileCurve {
        ProfileCurve {
            solver_id: id.into(),
            metric: Metric::Iterations,
            breakpoints: bps,
        }
    }

    #[test]
    fn empty_curve_list_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        assert!(matches!(
            emit_report(&[], &[], &out),
            Err(BenchError::NothingToRender)
        ));
        assert!(!out.exists());
    }

    #[test]
    fn io_errors_carry_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let c = [curve("a", vec![(1.0, 1.0), (f64::INFINITY, 1.0)])];
        let err = emit_report(&c, &[], &blocker.join("sub")).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }

    #[test]
    fn svg_escapes_ids() {
        let svg = render_svg(
            &[curve("a<b>&c", vec![(f64::INFINITY, 0.0)])],
            Metric::Iterations,
        );
        assert!(svg.contains("a&lt;b&gt;&amp;c"));
        assert_eq!(svg.matches("<polyline").count(), 1);
    }
}
