//! Problem files (TOML), CSV output and standalone SVG plots.

use std::fmt::Write as _;
use std::io::Write;

use serde::Deserialize;

use crate::admm::AdmmParams;
use crate::analysis::{Grid, ValueSample};
use crate::error::{Error, Result};
use crate::mpc::{Schedule, Trajectory};
use crate::numerics::Matrix;
use crate::plant::{Alphabet, Plant};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    schema_version: u32,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<f64>,
    levels: Vec<f64>,
    weights: Vec<f64>,
    #[serde(rename = "T")]
    horizon: f64,
    nu: usize,
    x0: Vec<f64>,
    omega: Option<f64>,
    solver: Option<RawSolver>,
    mpc: Option<RawMpc>,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    gamma: Option<f64>,
    max_iter: Option<usize>,
    eps_primal: Option<f64>,
    eps_dual: Option<f64>,
    terminal_scale: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMpc {
    sampling_instants: Vec<f64>,
    end_time: f64,
    min_gap: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    lower: Vec<f64>,
    upper: Vec<f64>,
    counts: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct MpcSection {
    pub schedule: Schedule,
    pub end_time: f64,
}

/// A validated problem file.
#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub plant: Plant,
    pub alphabet: Alphabet,
    pub horizon: f64,
    pub nu: usize,
    pub x0: Vec<f64>,
    pub omega: Option<f64>,
    pub admm: AdmmParams,
    pub mpc: Option<MpcSection>,
    pub sweep: Option<Grid>,
}

/// 1-based line of the first `key = …` assignment in `source`.
fn line_of(source: &str, key: &str) -> Option<usize> {
    source.lines().position(|line| {
        let t = line.trim_start();
        t.strip_prefix(key)
            .map(|rest| rest.trim_start().starts_with('='))
            .unwrap_or(false)
    })
    .map(|i| i + 1)
}

fn anchored(source: &str, key: &str, msg: impl std::fmt::Display) -> Error {
    match line_of(source, key) {
        Some(line) => Error::Validation(format!("line {line} ({key}): {msg}")),
        None => Error::Validation(format!("{key}: {msg}")),
    }
}

impl ProblemFile {
    pub fn parse(source: &str) -> Result<Self> {
        let raw: RawProblem = toml::from_str(source).map_err(|e| Error::Validation(e.to_string().trim_end().to_string()))?;
        if raw.schema_version != SCHEMA_VERSION {
            return Err(anchored(
                source,
                "schema_version",
                format!("unsupported schema version {} (expected {SCHEMA_VERSION})", raw.schema_version),
            ));
        }
        let n = raw.a.len();
        if n == 0 || raw.a.iter().any(|row| row.len() != n) {
            return Err(anchored(source, "A", "must be a nonempty square array of rows"));
        }
        let a = Matrix::from_row_major(n, n, raw.a.concat()).map_err(|e| anchored(source, "A", e))?;
        let plant = Plant::new(a, raw.b.clone()).map_err(|e| {
            let key = if raw.b.len() != n { "B" } else { "A" };
            anchored(source, key, e)
        })?;
        let alphabet = Alphabet::new(raw.levels, raw.weights).map_err(|e| {
            let key = if e.to_string().contains("weight") { "weights" } else { "levels" };
            anchored(source, key, e)
        })?;
        if !(raw.horizon > 0.0) || !raw.horizon.is_finite() {
            return Err(anchored(source, "T", format!("horizon must be positive, got {}", raw.horizon)));
        }
        if raw.nu == 0 {
            return Err(anchored(source, "nu", "grid count must be at least 1"));
        }
        if raw.x0.len() != n || raw.x0.iter().any(|v| !v.is_finite()) {
            return Err(anchored(source, "x0", format!("needs {n} finite entries")));
        }
        if let Some(w) = raw.omega {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(anchored(source, "omega", "must be finite and nonnegative"));
            }
        }
        let s = raw.solver.unwrap_or_default();
        let defaults = AdmmParams::default();
        let admm = AdmmParams {
            gamma: s.gamma.unwrap_or(defaults.gamma),
            max_iter: s.max_iter.unwrap_or(defaults.max_iter),
            eps_primal: s.eps_primal.unwrap_or(defaults.eps_primal),
            eps_dual: s.eps_dual.unwrap_or(defaults.eps_dual),
            terminal_scale: s.terminal_scale,
            warm_start: None,
        };
        if let Err(e) = admm.validate() {
            let key = ["gamma", "max_iter", "eps_primal", "eps_dual", "terminal_scale"]
                .into_iter()
                .find(|k| e.to_string().contains(k))
                .unwrap_or("solver");
            return Err(anchored(source, key, e));
        }
        let h = raw.horizon / raw.nu as f64;
        let mpc = match raw.mpc {
            Some(m) => {
                let min_gap = m.min_gap.unwrap_or(h);
                let schedule = Schedule::new(&m.sampling_instants, h, raw.horizon, min_gap).map_err(|e| {
                    let key = if e.to_string().contains("minimum gap") { "min_gap" } else { "sampling_instants" };
                    anchored(source, key, e)
                })?;
                if crate::mpc::to_step(m.end_time, h).is_none() {
                    return Err(anchored(
                        source,
                        "end_time",
                        format!("{} is not a nonnegative multiple of the grid step {h}", m.end_time),
                    ));
                }
                let last = *schedule.instants().last().expect("schedule starts at 0");
                if last < m.end_time - 1e-9 * m.end_time.max(1.0) {
                    return Err(anchored(
                        source,
                        "sampling_instants",
                        format!("instants stop at {last}, before end_time {}", m.end_time),
                    ));
                }
                Some(MpcSection {
                    schedule,
                    end_time: m.end_time,
                })
            }
            None => None,
        };
        let sweep = match raw.sweep {
            Some(sw) => {
                if sw.lower.len() != n {
                    return Err(anchored(source, "lower", format!("needs {n} entries")));
                }
                Some(Grid::new(sw.lower, sw.upper, sw.counts).map_err(|e| anchored(source, "counts", e))?)
            }
            None => None,
        };
        Ok(ProblemFile {
            plant,
            alphabet,
            horizon: raw.horizon,
            nu: raw.nu,
            x0: raw.x0,
            omega: raw.omega,
            admm,
            mpc,
            sweep,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let source = std::fs::read_to_string(path)
            .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&source).map_err(|e| match e {
            Error::Validation(msg) => Error::Validation(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

/// `{:.12e}`, with `nan` for non-finite values.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.12e}")
    }
}

/// Writes `t,u,x1..xn,V`. Row `l` holds the control applied from `t_l`;
/// the last row repeats the final control.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: &mut W) -> std::io::Result<()> {
    let n = traj.states.first().map_or(0, |x| x.len());
    let mut header = String::from("t,u");
    for i in 1..=n {
        write!(header, ",x{i}").expect("string write");
    }
    header.push_str(",V");
    writeln!(out, "{header}")?;
    for (l, (t, x)) in traj.times.iter().zip(&traj.states).enumerate() {
        let u = traj
            .controls
            .get(l)
            .or_else(|| traj.controls.last())
            .copied()
            .unwrap_or(f64::NAN);
        let mut row = format!("{},{}", fmt_num(*t), fmt_num(u));
        for v in x {
            row.push(',');
            row.push_str(&fmt_num(*v));
        }
        row.push(',');
        row.push_str(&fmt_num(traj.values[l]));
        writeln!(out, "{row}")?;
    }
    if let Some(abort) = &traj.aborted {
        writeln!(out, "# aborted at t={}: {:?}", fmt_num(abort.time), abort.reason)?;
    }
    Ok(())
}

/// Writes `x1..xn,V,feasible`, with `V = nan` where infeasible.
pub fn write_sweep_csv<W: Write>(samples: &[ValueSample], n: usize, out: &mut W) -> std::io::Result<()> {
    let mut header = String::new();
    for i in 1..=n {
        write!(header, "x{i},").expect("string write");
    }
    header.push_str("V,feasible");
    writeln!(out, "{header}")?;
    for s in samples {
        let mut row = String::new();
        for v in &s.xi {
            row.push_str(&fmt_num(*v));
            row.push(',');
        }
        row.push_str(&fmt_num(s.value.unwrap_or(f64::NAN)));
        row.push_str(if s.is_feasible() { ",true" } else { ",false" });
        writeln!(out, "{row}")?;
    }
    Ok(())
}

/// One curve in an SVG plot.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Draw as a zero-order-hold staircase.
    pub staircase: bool,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

/// Standalone SVG line plot: no scripts, no external references.
pub fn svg_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (720.0, 400.0);
    let (ml, mr, mt, mb) = (64.0, 120.0, 36.0, 48.0);
    let finite = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in finite {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let pw = w - ml - mr;
    let ph = h - mt - mb;
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| mt + (y1 - y) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">
<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>
<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        ml + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
    );
    for t in nice_ticks(x0, x1, 8) {
        let x = sx(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            mt,
            mt + ph,
            mt + ph + 16.0,
            trim_num(t)
        );
    }
    for t in nice_ticks(y0, y1, 6) {
        let y = sy(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{ml}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            ml + pw,
            ml - 6.0,
            y + 4.0,
            trim_num(t)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        ml + pw / 2.0,
        h - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        mt + ph / 2.0,
        mt + ph / 2.0,
        escape(y_label)
    );
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut pts = String::new();
        let mut prev: Option<(f64, f64)> = None;
        for &(x, y) in s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
            if s.staircase {
                if let Some((_, py)) = prev {
                    let _ = write!(pts, "{:.2},{:.2} ", sx(x), sy(py));
                }
            }
            let _ = write!(pts, "{:.2},{:.2} ", sx(x), sy(y));
            prev = Some((x, y));
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.trim_end()
        );
        let ly = mt + 16.0 + 18.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            ml + pw + 10.0,
            ml + pw + 34.0,
            ml + pw + 40.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn trim_num(v: f64) -> String {
    let s = format!("{:.6}", if v.abs() < 1e-12 { 0.0 } else { v });
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// Control staircase of a trajectory.
pub fn control_plot(traj: &Trajectory, title: &str) -> String {
    let mut pts: Vec<(f64, f64)> = traj.controls.iter().enumerate().map(|(l, &u)| (traj.times[l], u)).collect();
    if let (Some(&u), Some(&t)) = (traj.controls.last(), traj.times.last()) {
        pts.push((t, u));
    }
    svg_plot(
        title,
        "t",
        "u(t)",
        &[Series {
            label: "u".into(),
            points: pts,
            staircase: true,
        }],
    )
}

/// State components against time.
pub fn state_plot(traj: &Trajectory, title: &str) -> String {
    let n = traj.states.first().map_or(0, |x| x.len());
    let series: Vec<Series> = (0..n)
        .map(|i| Series {
            label: format!("x{}", i + 1),
            points: traj.times.iter().zip(&traj.states).map(|(&t, x)| (t, x[i])).collect(),
            staircase: false,
        })
        .collect();
    svg_plot(title, "t", "x(t)", &series)
}
