//! The growth experiment over a grid of `(n, k)` pairs, and SVG output.

use std::fmt::Write as _;
use std::time::Instant;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::adversary::{instance_report, ReportOptions};
use crate::error::Result;
use crate::geom::{format_rational, frac, rational_serde, Point, Rational};
use crate::partition::{baseline_partition, coloring_from_partition, crossing_number, KPartition};

/// Largest padded point set whose baseline partition is evaluated exactly;
/// above it the crossing is the best probe line found by the coloring check,
/// a lower bound.
pub const EXACT_LIMIT: usize = 96;

pub const CSV_HEADER: &str =
    "n,k,beta,m,n_prime,measured_crossing,measured_exact,lower_bound,upper_ref,runtime_ms,status";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExperimentRow {
    pub n: usize,
    pub k: usize,
    pub beta: u32,
    pub m: usize,
    pub n_prime: usize,
    pub measured_crossing: usize,
    pub measured_exact: bool,
    pub lower_bound: usize,
    /// `log₂(n/k)` rounded to three decimals.
    #[serde(with = "rational_serde")]
    pub upper_ref: Rational,
    pub runtime_ms: u64,
    /// `ok`, or the reason the row failed.
    pub status: String,
}

impl ExperimentRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.k,
            self.beta,
            self.m,
            self.n_prime,
            self.measured_crossing,
            self.measured_exact,
            self.lower_bound,
            format_rational(&self.upper_ref),
            self.runtime_ms,
            self.status.replace(',', ";")
        )
    }

    fn failed(n: usize, k: usize, status: String) -> Self {
        ExperimentRow {
            n,
            k,
            beta: 0,
            m: 0,
            n_prime: 0,
            measured_crossing: 0,
            measured_exact: false,
            lower_bound: 0,
            upper_ref: upper_ref(n, k),
            runtime_ms: 0,
            status,
        }
    }
}

fn upper_ref(n: usize, k: usize) -> Rational {
    let v = (n as f64 / k as f64).log2();
    frac((v * 1000.0).round() as i64, 1000)
}

/// One row: padded instance, baseline partition, crossing measurement.
/// Failed checks end up in `status`; only internal errors are returned.
pub fn run_row(n: usize, k: usize, timing: bool) -> ExperimentRow {
    let start = Instant::now();
    let mut row = match measure(n, k) {
        Ok(row) => row,
        Err(e) => ExperimentRow::failed(n, k, e.to_string()),
    };
    if timing {
        row.runtime_ms = start.elapsed().as_millis() as u64;
    }
    row
}

fn measure(n: usize, k: usize) -> Result<ExperimentRow> {
    let (inst, report) = instance_report(n, k, ReportOptions::default())?;
    let points = inst.all_points();
    let partition = baseline_partition(&points, k)?;
    let coloring = coloring_from_partition(&inst, &partition, k)?;
    let (measured, exact) = if points.len() <= EXACT_LIMIT {
        (crossing_number(&points, &partition, k)?.value, true)
    } else {
        (coloring.max_probe_crossed, false)
    };
    let mut failures: Vec<String> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.clone())
        .collect();
    if !coloring.ok() {
        failures.push("coloring".into());
    }
    Ok(ExperimentRow {
        n,
        k,
        beta: report.beta,
        m: report.m,
        n_prime: report.n_prime,
        measured_crossing: measured,
        measured_exact: exact,
        lower_bound: report.crossing_lower_bound,
        upper_ref: upper_ref(n, k),
        runtime_ms: 0,
        status: if failures.is_empty() {
            "ok".into()
        } else {
            format!("failed: {}", failures.join(" "))
        },
    })
}

/// Runs all rows in parallel and returns them sorted by `(n, k)`.
pub fn run_grid(grid: &[(usize, usize)], timing: bool) -> Vec<ExperimentRow> {
    let mut rows: Vec<ExperimentRow> = grid.par_iter().map(|&(n, k)| run_row(n, k, timing)).collect();
    rows.sort_by_key(|r| (r.n, r.k));
    rows
}

/// `n = 2^lo .. 2^hi` with `k = ⌈log₂ n⌉`.
pub fn default_grid(lo: u32, hi: u32) -> Vec<(usize, usize)> {
    (lo..=hi).map(|e| (1usize << e, e as usize)).collect()
}

pub fn to_csv(rows: &[ExperimentRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    s
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 50.0;

/// Line chart of measured crossing, lower bound and `log₂(n/k)` against
/// `n/k` on a log axis.
pub fn experiment_svg(rows: &[ExperimentRow]) -> String {
    let ok: Vec<&ExperimentRow> = rows.iter().filter(|r| r.status == "ok").collect();
    let xs: Vec<f64> = ok.iter().map(|r| (r.n as f64 / r.k as f64).log2()).collect();
    let series: [(&str, &str, Vec<f64>); 3] = [
        ("measured crossing", "#1f77b4", ok.iter().map(|r| r.measured_crossing as f64).collect()),
        ("lower bound", "#d62728", ok.iter().map(|r| r.lower_bound as f64).collect()),
        ("log2(n/k)", "#7f7f7f", ok.iter().map(|r| r.upper_ref.to_f64().unwrap_or(0.0)).collect()),
    ];
    let (x0, x1) = bounds(&xs);
    let ymax = series
        .iter()
        .flat_map(|s| s.2.iter().copied())
        .fold(1.0f64, f64::max)
        .ceil();
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - y / ymax * (H - 2.0 * MARGIN);

    let mut s = svg_open();
    let _ = writeln!(
        s,
        r##"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{b}" x2="{m}" y2="{m}" stroke="black"/>"##,
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">n/k (log scale)</text>"#,
        W / 2.0,
        H - 12.0
    );
    for (i, x) in xs.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle" font-size="10">{:.1}</text>"#,
            px(*x),
            H - MARGIN + 14.0,
            ok[i].n as f64 / ok[i].k as f64
        );
    }
    for t in 0..=ymax as u64 {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end" font-size="10">{t}</text>"#,
            MARGIN - 6.0,
            py(t as f64) + 3.0
        );
    }
    for (li, (name, color, ys)) in series.iter().enumerate() {
        let pts: Vec<String> = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| format!("{:.1},{:.1}", px(*x), py(*y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" fill="{color}">{name}</text>"#,
            MARGIN + 10.0,
            MARGIN + 14.0 * li as f64
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Instance points (black), padding (orange) and, when given, the
/// partition triangles.
pub fn instance_svg(points: &[Point], padding: &[Point], partition: Option<&KPartition>) -> String {
    let mut all: Vec<&Point> = points.iter().chain(padding).collect();
    if let Some(p) = partition {
        all.extend(p.triangles.iter().flat_map(|t| t.vertices().iter()));
    }
    let fx: Vec<f64> = all.iter().map(|p| p.x.to_f64().unwrap_or(0.0)).collect();
    let fy: Vec<f64> = all.iter().map(|p| p.y.to_f64().unwrap_or(0.0)).collect();
    let (x0, x1) = bounds(&fx);
    let (y0, y1) = bounds(&fy);
    let tx = |p: &Point| MARGIN + (p.x.to_f64().unwrap_or(0.0) - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let ty = |p: &Point| H - MARGIN - (p.y.to_f64().unwrap_or(0.0) - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut s = svg_open();
    if let Some(part) = partition {
        for t in &part.triangles {
            let v = t.vertices();
            let _ = writeln!(
                s,
                r##"<polygon fill="#9ecae1" fill-opacity="0.3" stroke="#3182bd" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}"/>"##,
                tx(&v[0]),
                ty(&v[0]),
                tx(&v[1]),
                ty(&v[1]),
                tx(&v[2]),
                ty(&v[2])
            );
        }
    }
    for (set, color) in [(points, "black"), (padding, "#ff7f0e")] {
        for p in set {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, tx(p), ty(p));
        }
    }
    s.push_str("</svg>\n");
    s
}

fn svg_open() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n<!-- shallow-lab {} -->\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        env!("CARGO_PKG_VERSION")
    )
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}
