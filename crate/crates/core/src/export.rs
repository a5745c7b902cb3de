//! CSV and JSON writers for the artifacts produced by the other modules.
//!
//! Floats are written with [`fmt_float`] so output is stable across runs and
//! platforms.

use std::io::Write;

use serde::Serialize;

use crate::coupling::SweepPoint;
use crate::motion::MotionPattern;
use crate::simulator::{GridCell, OutcomeSummary, TrajectoryPoint};
use crate::workspace::WorkspaceCloud;

pub type ExportResult = Result<(), csv::Error>;

/// Nine significant digits, trailing zeros trimmed; scientific notation
/// outside `[1e-5, 1e9)`.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim(mantissa.to_string()), exp)
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>, csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    Ok(w)
}

pub fn write_workspace<W: Write>(out: W, cloud: &WorkspaceCloud) -> ExportResult {
    let mut w = writer(out, &["theta1", "theta2", "theta3", "x", "y", "z", "delta", "phi", "r"])?;
    for p in &cloud.points {
        let [a, b, c] = p.theta.0;
        let row = [a, b, c, p.position.x, p.position.y, p.position.z, p.pose.delta, p.pose.phi, p.pose.r];
        w.write_record(row.iter().map(|v| fmt_float(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_alpha_map<W: Write>(out: W, map: &[(f64, f64, f64)]) -> ExportResult {
    let mut w = writer(out, &["delta", "phi", "alpha"])?;
    for &(d, p, a) in map {
        w.write_record([fmt_float(d), fmt_float(p), fmt_float(a)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_lmin_sweep<W: Write>(out: W, points: &[SweepPoint]) -> ExportResult {
    let mut w = writer(out, &["axis_value", "lmin_mm", "feasible"])?;
    for p in points {
        w.write_record([fmt_float(p.value), fmt_float(p.lmin), p.feasible.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Samples every tile's pose at `times`. Unreachable vibration offsets are
/// reported as errors by the caller's pattern, so they are propagated here.
pub fn write_pattern_trajectory<W: Write>(
    out: W,
    pattern: &MotionPattern,
    tiles: usize,
    times: &[f64],
) -> Result<(), Box<dyn std::error::Error>> {
    let mut w = writer(out, &["t", "tile", "delta", "phi", "r"])?;
    for &t in times {
        for tile in 1..=tiles {
            let p = pattern.pose(tile, t)?;
            w.write_record([fmt_float(t), tile.to_string(), fmt_float(p.delta), fmt_float(p.phi), fmt_float(p.r)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_sim_trajectory<W: Write>(out: W, trajectory: &[TrajectoryPoint]) -> ExportResult {
    let mut w = writer(out, &["t", "x_mm", "z_mm", "v_mm_s", "status"])?;
    for p in trajectory {
        w.write_record([
            fmt_float(p.t),
            fmt_float(p.x),
            fmt_float(p.z),
            fmt_float(p.v),
            p.status.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Rows are material lengths, columns inter-tile distances.
pub fn write_grid<W: Write>(out: W, lengths: &[f64], spacings: &[f64], cells: &[Vec<GridCell>]) -> ExportResult {
    let mut w = csv::Writer::from_writer(out);
    let header = std::iter::once("L_mm\\D_mm".to_string()).chain(spacings.iter().map(|d| fmt_float(*d)));
    w.write_record(header)?;
    for (l, row) in lengths.iter().zip(cells) {
        let record = std::iter::once(fmt_float(*l)).chain(row.iter().map(|c| c.as_str().to_string()));
        w.write_record(record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn outcome_json(summary: &OutcomeSummary) -> String {
    to_json(summary)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes")
}
