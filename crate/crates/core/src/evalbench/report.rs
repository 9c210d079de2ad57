//! CSV and SVG artifacts for a bench run.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::harness::{BenchReport, Phase};
use super::regression::RegressionFit;

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn writer(dir: &Path, name: &str) -> io::Result<(csv::Writer<fs::File>, PathBuf)> {
    let path = dir.join(name);
    Ok((csv::Writer::from_path(&path)?, path))
}

/// One row of a figure: x, measured y, fitted y.
pub type FigureRow = (f64, Option<f64>, Option<f64>);

pub fn figure_rows(report: &BenchReport, figure: Figure) -> Vec<FigureRow> {
    match figure {
        Figure::Build | Figure::Replacement => {
            let (phase, fits) = match figure {
                Figure::Build => (Phase::MatrixBuild, &report.build),
                _ => (Phase::Replacement, &report.replacement),
            };
            let best = fits.best();
            report
                .measurement
                .means(phase)
                .into_iter()
                .map(|(k, y)| (k, Some(y), best.map(|f| f.predict(k))))
                .collect()
        }
        Figure::Total => report
            .extrapolation
            .iter()
            .map(|r| (r.k as f64, r.measured_total_seconds, r.predicted.map(|p| p.total_seconds)))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Mean matrix build time vs k.
    Build,
    /// Mean replacement time vs k.
    Replacement,
    /// Total construction time vs k.
    Total,
}

impl Figure {
    pub const ALL: [Figure; 3] = [Figure::Build, Figure::Replacement, Figure::Total];

    pub fn stem(self) -> &'static str {
        match self {
            Figure::Build => "fig3a",
            Figure::Replacement => "fig3b",
            Figure::Total => "fig3c",
        }
    }

    fn title(self) -> &'static str {
        match self {
            Figure::Build => "Mean adjacency matrix build time",
            Figure::Replacement => "Mean replacement time",
            Figure::Total => "Total core-set construction time",
        }
    }
}

/// Writes `report.csv`, `fits.csv`, `extrapolation.csv` and the three figure
/// CSVs (plus SVG charts when `svg` is set). Returns the paths written.
pub fn write_bench_artifacts(report: &BenchReport, dir: &Path, svg: bool) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let (mut w, path) = writer(dir, "report.csv")?;
    w.write_record(["k", "stream_id", "phase", "duration_s"])?;
    for s in &report.measurement.samples {
        w.write_record([s.k.to_string(), s.stream_id.to_string(), s.phase.to_string(), s.seconds.to_string()])?;
    }
    w.flush()?;
    written.push(path);

    let (mut w, path) = writer(dir, "fits.csv")?;
    w.write_record(["phase", "basis", "c0", "c1", "c2", "r_squared"])?;
    for (phase, fits) in [(Phase::MatrixBuild, &report.build), (Phase::Replacement, &report.replacement)] {
        for fit in [&fits.linear, &fits.quadratic].into_iter().flatten() {
            w.write_record(fit_record(phase, fit))?;
        }
    }
    w.flush()?;
    written.push(path);

    let (mut w, path) = writer(dir, "extrapolation.csv")?;
    w.write_record(["k", "predicted_total_s", "measured_replacement_rate"])?;
    for row in &report.extrapolation {
        w.write_record([
            row.k.to_string(),
            opt(row.predicted.map(|p| p.total_seconds)),
            opt(row.measured_replacement_rate),
        ])?;
    }
    w.flush()?;
    written.push(path);

    for fig in Figure::ALL {
        let rows = figure_rows(report, fig);
        let (mut w, path) = writer(dir, &format!("{}.csv", fig.stem()))?;
        w.write_record(["x", "y_measured", "y_fit"])?;
        for (x, y, f) in &rows {
            w.write_record([x.to_string(), opt(*y), opt(*f)])?;
        }
        w.flush()?;
        written.push(path);
        if svg {
            let path = dir.join(format!("{}.svg", fig.stem()));
            fs::write(&path, render_svg(fig.title(), &rows))?;
            written.push(path);
        }
    }
    Ok(written)
}

fn fit_record(phase: Phase, fit: &RegressionFit) -> Vec<String> {
    let c = |i: usize| fit.coefficients.get(i).map(|v| v.to_string()).unwrap_or_default();
    vec![phase.to_string(), fit.basis.to_string(), c(0), c(1), c(2), fit.r_squared.to_string()]
}

/// Bare axes with a measured polyline (with markers) and a fitted polyline.
pub fn render_svg(title: &str, rows: &[FigureRow]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    let ys = rows.iter().flat_map(|r| [r.1, r.2]).flatten();
    let y_max = ys.fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let x_min = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let x_max = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let sx = |x: f64| M + (x - x_min) / x_span * (W - 2.0 * M);
    let sy = |y: f64| H - M - y / y_max * (H - 2.0 * M);
    let line = |pick: fn(&FigureRow) -> Option<f64>| {
        rows.iter()
            .filter_map(|r| pick(r).map(|y| format!("{:.2},{:.2}", sx(r.0), sy(y))))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{title}</text>\n\
         <line x1=\"{M}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{}\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">k</text>\n\
         <text x=\"12\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">s</text>\n\
         <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\">{y_max:.3e}</text>\n",
        W / 2.0,
        H - M,
        W - M,
        H - M,
        H - M,
        W / 2.0,
        H - 12.0,
        H / 2.0,
        M + 4.0,
        M - 4.0,
    );
    out.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#d62728\" stroke-dasharray=\"6 4\" points=\"{}\"/>\n",
        line(|r| r.2)
    ));
    out.push_str(&format!("<polyline fill=\"none\" stroke=\"#1f77b4\" points=\"{}\"/>\n", line(|r| r.1)));
    for r in rows {
        if let Some(y) = r.1 {
            out.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#1f77b4\"/>\n<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">{}</text>\n",
                sx(r.0),
                sy(y),
                sx(r.0),
                H - M + 14.0,
                r.0
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}
