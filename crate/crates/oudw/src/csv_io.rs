//! CSV formats. Floats are written with 17 significant digits so that every
//! value reads back to the same double.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use oudw_core::asymptotics::{CriticalValue, WSamplerConfig};
use oudw_core::harness::ReplicateOutcome;
use oudw_core::SamplePath;

use crate::error::{Error, Result};

pub const PATH_HEADER: [&str; 3] = ["t", "x", "v"];
pub const QUANTILE_HEADER: [&str; 7] = ["alpha", "z_alpha", "ci_low", "ci_high", "draws", "method", "seed"];
pub const REPLICATE_HEADER: [&str; 5] = ["rep", "theta_hat", "rho_hat", "dw", "z_stat"];

/// Relative tolerance on `t_i = i * step` when reading a path.
const TIME_TOLERANCE: f64 = 1e-9;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_path<W: Write>(out: W, path: &SamplePath) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PATH_HEADER)?;
    for (i, (x, v)) in path.x().iter().zip(path.v()).enumerate() {
        w.write_record([fmt_f64(path.time(i)), fmt_f64(*x), fmt_f64(*v)])?;
    }
    w.flush().map_err(|e| Error::Output(e.to_string()))
}

fn parse_cell(record: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<f64> {
    let cell = record.get(idx).ok_or_else(|| Error::csv(line, name, "missing"))?;
    let value: f64 = cell
        .trim()
        .parse()
        .map_err(|_| Error::csv(line, name, format!("not a number: {cell:?}")))?;
    if !value.is_finite() {
        return Err(Error::csv(line, name, "not finite"));
    }
    Ok(value)
}

fn check_header<R: Read>(reader: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let header = reader.headers()?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::csv(1, "header", format!("expected `{}`, found `{}`", expected.join(","), got.join(","))));
    }
    Ok(())
}

/// Reads a `t,x,v` path. The step is taken from the second row and every
/// time stamp must sit on that grid.
pub fn read_path<R: Read>(input: R) -> Result<SamplePath> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    check_header(&mut reader, &PATH_HEADER)?;
    let (mut t, mut x, mut v) = (Vec::new(), Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(Error::csv(line, "record", format!("expected 3 fields, found {}", record.len())));
        }
        t.push(parse_cell(&record, 0, "t", line)?);
        x.push(parse_cell(&record, 1, "x", line)?);
        v.push(parse_cell(&record, 2, "v", line)?);
    }
    if t.len() < 2 {
        return Err(Error::csv(1, "record", "need at least two grid points"));
    }
    if t[0] != 0.0 {
        return Err(Error::csv(2, "t", "path must start at t = 0"));
    }
    let step = t[1];
    if !(step > 0.0) {
        return Err(Error::csv(3, "t", "time must increase"));
    }
    for (i, &ti) in t.iter().enumerate() {
        let want = i as f64 * step;
        if (ti - want).abs() > TIME_TOLERANCE * want.max(1.0) {
            return Err(Error::csv(i as u64 + 2, "t", format!("off the uniform grid of step {step}")));
        }
    }
    Ok(SamplePath::new(step, x, v)?)
}

pub fn write_quantile_table<W: Write>(out: W, rows: &[CriticalValue], config: &WSamplerConfig) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(QUANTILE_HEADER)?;
    for c in rows {
        w.write_record([
            fmt_f64(c.alpha),
            fmt_f64(c.z_alpha),
            fmt_f64(c.ci_low),
            fmt_f64(c.ci_high),
            c.draws.to_string(),
            config.method.name().to_string(),
            config.seed.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Output(e.to_string()))
}

pub fn write_replicates<W: Write>(out: W, outcomes: &[(u64, ReplicateOutcome)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPLICATE_HEADER)?;
    for (rep, o) in outcomes {
        w.write_record([rep.to_string(), fmt_f64(o.theta_hat), fmt_f64(o.rho_hat), fmt_f64(o.dw), fmt_f64(o.z_stat)])?;
    }
    w.flush().map_err(|e| Error::Output(e.to_string()))
}

/// Replicate rows `(rep, theta_hat, rho_hat, dw, z_stat)`.
pub fn read_replicates<R: Read>(input: R) -> Result<Vec<(u64, [f64; 4])>> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &REPLICATE_HEADER)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let rep = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::csv(line, "rep", format!("not an index: {:?}", &record[0])))?;
        let mut vals = [0.0; 4];
        for (k, name) in REPLICATE_HEADER[1..].iter().enumerate() {
            vals[k] = parse_cell(&record, k + 1, name, line)?;
        }
        rows.push((rep, vals));
    }
    Ok(rows)
}

pub fn write_draws<W: Write>(out: W, draws: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["w"])?;
    for d in draws {
        w.write_record([fmt_f64(*d)])?;
    }
    w.flush().map_err(|e| Error::Output(e.to_string()))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn read_path_file(path: &Path) -> Result<SamplePath> {
    read_path(open(path)?)
}

pub fn write_path_file(path: &Path, sample: &SamplePath) -> Result<()> {
    write_path(create(path)?, sample)
}
