//! CSV serialization of iterate traces. Floats are written with 17
//! significant digits so parsing a trace back reproduces the exact bits;
//! vector cells join coordinates with semicolons; absent columns stay empty.

use std::io::Write;
use std::path::Path;
use vi_core::algorithms::IterateTrace;
use vi_core::Vector;

pub const TRACE_HEADER: &str = "n,x,y,z,w,u,lambda,step_norm,xy_residual,phi_to_solution";

fn fmt_f(t: f64) -> String {
    format!("{t:.16e}")
}

fn fmt_vec(v: &Vector) -> String {
    v.iter().map(|t| fmt_f(*t)).collect::<Vec<_>>().join(";")
}

fn fmt_opt_vec(v: &Option<Vector>) -> String {
    v.as_ref().map(fmt_vec).unwrap_or_default()
}

pub fn trace_to_csv(trace: &IterateTrace) -> String {
    let mut out = String::with_capacity(128 * (trace.rows.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for row in &trace.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            row.n,
            fmt_vec(&row.x),
            fmt_vec(&row.y),
            fmt_opt_vec(&row.z),
            fmt_opt_vec(&row.w),
            fmt_opt_vec(&row.u),
            fmt_f(row.lambda),
            fmt_f(row.step_norm),
            fmt_f(row.xy_residual),
            row.phi_to_solution.map(fmt_f).unwrap_or_default(),
        ));
    }
    out
}

pub fn write_trace(path: &Path, trace: &IterateTrace) -> std::io::Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(trace_to_csv(trace).as_bytes())
}

/// One parsed trace row; vectors come back as plain coordinate lists.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedRow {
    pub n: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Option<Vec<f64>>,
    pub w: Option<Vec<f64>>,
    pub u: Option<Vec<f64>>,
    pub lambda: f64,
    pub step_norm: f64,
    pub xy_residual: f64,
    pub phi_to_solution: Option<f64>,
}

fn parse_vec(cell: &str) -> Result<Vec<f64>, String> {
    cell.split(';')
        .map(|t| t.parse::<f64>().map_err(|e| format!("bad float '{t}': {e}")))
        .collect()
}

fn parse_opt_vec(cell: &str) -> Result<Option<Vec<f64>>, String> {
    if cell.is_empty() {
        Ok(None)
    } else {
        parse_vec(cell).map(Some)
    }
}

pub fn parse_trace(text: &str) -> Result<Vec<ParsedRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRACE_HEADER => {}
        Some(h) => return Err(format!("unexpected trace header: {h}")),
        None => return Err("empty trace".into()),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 10 {
            return Err(format!("row {} has {} cells, expected 10", i + 1, cells.len()));
        }
        rows.push(ParsedRow {
            n: cells[0].parse().map_err(|e| format!("bad n: {e}"))?,
            x: parse_vec(cells[1])?,
            y: parse_vec(cells[2])?,
            z: parse_opt_vec(cells[3])?,
            w: parse_opt_vec(cells[4])?,
            u: parse_opt_vec(cells[5])?,
            lambda: cells[6].parse().map_err(|e| format!("bad lambda: {e}"))?,
            step_norm: cells[7].parse().map_err(|e| format!("bad step_norm: {e}"))?,
            xy_residual: cells[8].parse().map_err(|e| format!("bad xy_residual: {e}"))?,
            phi_to_solution: if cells[9].is_empty() {
                None
            } else {
                Some(cells[9].parse().map_err(|e| format!("bad phi: {e}"))?)
            },
        });
    }
    Ok(rows)
}
