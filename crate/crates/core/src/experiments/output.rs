//! Figure tables as CSV.

use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::CurvePoint;

pub const CSV_HEADER: [&str; 8] = ["figure", "scheme", "regime", "x", "mean", "stderr", "trials", "infeasible_count"];

// Shortest representation that parses back to the same value.
fn format_float(v: f64) -> String {
    v.to_string()
}

pub fn write_csv<W: std::io::Write>(points: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for p in points {
        w.write_record([
            p.figure.clone(),
            p.scheme.clone(),
            p.regime.clone(),
            format_float(p.x),
            format_float(p.mean),
            format_float(p.stderr),
            p.trials.to_string(),
            p.infeasible_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(points: &[CurvePoint], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(points, std::io::BufWriter::new(file))
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<CurvePoint>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Config(format!("unexpected CSV header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::Config(format!("row {}: bad {what}", i + 1));
        let f = |j: usize, what: &str| rec[j].parse::<f64>().map_err(|_| bad(what));
        let u = |j: usize, what: &str| rec[j].parse::<usize>().map_err(|_| bad(what));
        out.push(CurvePoint {
            figure: rec[0].to_string(),
            scheme: rec[1].to_string(),
            regime: rec[2].to_string(),
            x: f(3, "x")?,
            mean: f(4, "mean")?,
            stderr: f(5, "stderr")?,
            trials: u(6, "trials")?,
            infeasible_count: u(7, "infeasible_count")?,
        });
    }
    Ok(out)
}

pub fn load_csv(path: &Path) -> Result<Vec<CurvePoint>> {
    read_csv(std::fs::File::open(path)?)
}
