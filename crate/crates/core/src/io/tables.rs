//! CSV outputs. Floats use 17 significant digits so values read back exactly.

use std::path::Path;

use crate::continuation::{BifurcationPoint, Branch, EventKind};
use crate::error::{Error, Result};
use crate::simulator::SimulationTrace;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

/// Writes a header row and data rows.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a table written by [`write_table`].
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(|e| csv_error(path, e))?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

fn labels(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |k| format!("{prefix}_{k}"))
}

/// `t, u_1..u_N, v_1..v_N, zeta_1..zeta_N, A_1..A_N`.
pub fn trace_header(n: usize) -> Vec<String> {
    std::iter::once("t".to_string())
        .chain(labels("u", n))
        .chain(labels("v", n))
        .chain(labels("zeta", n))
        .chain(labels("A", n))
        .collect()
}

pub fn write_trace_csv(trace: &SimulationTrace, path: &Path) -> Result<()> {
    let rows: Vec<Vec<String>> = trace
        .records
        .iter()
        .map(|r| {
            std::iter::once(r.t)
                .chain(r.u.iter().copied())
                .chain(r.v.iter().copied())
                .chain(r.zeta.iter().copied())
                .chain(r.a.iter().copied())
                .map(fmt_f64)
                .collect()
        })
        .collect();
    write_table(path, &trace_header(trace.n()), &rows)
}

pub fn event_name(kind: EventKind) -> &'static str {
    match kind {
        EventKind::Hopf => "hopf",
        EventKind::SaddleNode => "saddle_node",
    }
}

fn parse_event(s: &str) -> Option<EventKind> {
    match s {
        "hopf" => Some(EventKind::Hopf),
        "saddle_node" => Some(EventKind::SaddleNode),
        _ => None,
    }
}

/// One row of a branch CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchRow {
    pub param: f64,
    pub max_u: Vec<f64>,
    pub period: Option<f64>,
    pub stable: bool,
    pub event: Option<EventKind>,
}

/// `param, max_u_1..max_u_N, period, stable, event`.
pub fn write_branch_csv(branch: &Branch, n: usize, path: &Path) -> Result<()> {
    let header: Vec<String> = std::iter::once("param".to_string())
        .chain(labels("max_u", n))
        .chain(["period", "stable", "event"].map(String::from))
        .collect();
    let rows: Vec<Vec<String>> = branch
        .points
        .iter()
        .map(|p| {
            let mut row = vec![fmt_f64(p.param)];
            row.extend(p.max_u.iter().map(|&v| fmt_f64(v)));
            row.push(p.period.map(fmt_f64).unwrap_or_default());
            row.push(p.stable.to_string());
            row.push(p.event.map(event_name).unwrap_or_default().to_string());
            row
        })
        .collect();
    write_table(path, &header, &rows)
}

pub fn read_branch_csv(path: &Path) -> Result<Vec<BranchRow>> {
    let (header, rows) = read_table(path)?;
    let bad = |msg: String| Error::io(path, std::io::Error::other(msg));
    if header.len() < 4 || header[0] != "param" {
        return Err(bad("not a branch table".into()));
    }
    let n = header.len() - 4;
    let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
    rows.iter()
        .map(|r| {
            Ok(BranchRow {
                param: num(&r[0])?,
                max_u: r[1..=n].iter().map(|s| num(s)).collect::<Result<_>>()?,
                period: if r[n + 1].is_empty() { None } else { Some(num(&r[n + 1])?) },
                stable: r[n + 2] == "true",
                event: parse_event(&r[n + 3]),
            })
        })
        .collect()
}

/// `kind, eps, mu, freq`.
pub fn write_events_csv(events: &[(f64, &BifurcationPoint)], path: &Path) -> Result<()> {
    let header = ["kind", "eps", "mu", "freq"].map(String::from);
    let rows: Vec<Vec<String>> = events
        .iter()
        .map(|(eps, e)| {
            vec![
                event_name(e.kind).to_string(),
                fmt_f64(*eps),
                fmt_f64(e.param),
                fmt_f64(e.frequency),
            ]
        })
        .collect();
    write_table(path, &header, &rows)
}
