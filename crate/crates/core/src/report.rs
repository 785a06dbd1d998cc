//! CSV output. Floats are written with `{}`, which round-trips exactly.

use std::io::{Read, Write};

use crate::adversary::VerificationReport;
use crate::domains::Point;
use crate::error::{Error, Result};
use crate::operators::ErrorReport;

fn csv_err(e: csv::Error) -> Error {
    Error::Input(format!("csv: {e}"))
}

fn io_err(e: std::io::Error) -> Error {
    Error::Input(format!("write failed: {e}"))
}

/// Column names for points of dimension `dim`: `t` in 1D, `x1, x2, ...` otherwise.
pub fn coord_names(dim: usize) -> Vec<String> {
    if dim == 1 {
        vec!["t".to_string()]
    } else {
        (1..=dim).map(|i| format!("x{i}")).collect()
    }
}

/// A plain table with the given header.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        if r.len() != header.len() {
            return Err(Error::Input(format!("row has {} fields, header has {}", r.len(), header.len())));
        }
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_error_reports<W: Write>(out: W, reports: &[ErrorReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["problem", "n", "e_max", "y_norm", "psi", "value", "est_quad_err"]).map_err(csv_err)?;
    for r in reports {
        w.write_record([
            r.problem.clone(),
            r.n.to_string(),
            format!("{}", r.e_max),
            r.y_norm.to_string(),
            r.psi.name(),
            format!("{}", r.value),
            format!("{}", r.est_quad_err),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

/// One row per node: coordinates followed by one value per named column.
pub fn write_profile<W: Write>(out: W, nodes: &[Point], columns: &[(&str, &[f64])]) -> Result<()> {
    let dim = nodes.first().map_or(1, Point::dim);
    for (name, vals) in columns {
        if vals.len() != nodes.len() {
            return Err(Error::Input(format!("column {name} has {} values for {} nodes", vals.len(), nodes.len())));
        }
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = coord_names(dim);
    header.extend(columns.iter().map(|(n, _)| n.to_string()));
    w.write_record(&header).map_err(csv_err)?;
    for (k, p) in nodes.iter().enumerate() {
        let mut rec: Vec<String> = p.coords().iter().map(|c| format!("{c}")).collect();
        rec.extend(columns.iter().map(|(_, v)| format!("{}", v[k])));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_tau_profile<W: Write>(out: W, nodes: &[Point], tau: &[f64]) -> Result<()> {
    write_profile(out, nodes, &[("tau", tau)])
}

pub fn write_partition<W: Write>(out: W, nodes: &[Point], cells: &[usize]) -> Result<()> {
    if cells.len() != nodes.len() {
        return Err(Error::Input(format!("{} cells for {} nodes", cells.len(), nodes.len())));
    }
    let dim = nodes.first().map_or(1, Point::dim);
    let mut w = csv::Writer::from_writer(out);
    let mut header = coord_names(dim);
    header.push("cell_index".into());
    w.write_record(&header).map_err(csv_err)?;
    for (p, c) in nodes.iter().zip(cells) {
        let mut rec: Vec<String> = p.coords().iter().map(|c| format!("{c}")).collect();
        rec.push(c.to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_verification<W: Write>(out: W, report: &VerificationReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial", "clause", "value", "bound", "pass"]).map_err(csv_err)?;
    for r in &report.rows {
        w.write_record([r.trial.to_string(), r.clause.clone(), format!("{}", r.value), format!("{}", r.bound), r.pass.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

/// Reads `index,z` rows. Indices must cover `0..n` exactly once, in any order.
pub fn read_measurements<R: Read>(input: R) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Input(format!("measurement file needs an `{name}` column")))
    };
    let (ci, cz) = (col("index")?, col("z")?);
    let mut rows: Vec<(usize, f64)> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let field = |c: usize| rec.get(c).map(str::trim).unwrap_or("");
        let i: usize = field(ci)
            .parse()
            .map_err(|_| Error::Input(format!("row {}: bad index {:?}", line + 1, field(ci))))?;
        let z: f64 = field(cz).parse().map_err(|_| Error::Input(format!("row {}: bad value {:?}", line + 1, field(cz))))?;
        if !z.is_finite() {
            return Err(Error::Input(format!("row {}: value must be finite", line + 1)));
        }
        rows.push((i, z));
    }
    let mut z = vec![f64::NAN; rows.len()];
    for (i, v) in rows {
        if i >= z.len() || !z[i].is_nan() {
            return Err(Error::Input(format!("measurement indices must be 0..{} without repeats; saw {i}", z.len())));
        }
        z[i] = v;
    }
    Ok(z)
}
