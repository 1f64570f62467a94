use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{AggregateRow, ResultTable, TrialRow, TrialStatus};
use crate::error::{Error, Result};

pub const RAW_HEADER: &str = "D,n,trial,error,N_n,delta_n,status";
pub const AGGREGATE_HEADER: &str = "D,n,mean_error,var_error,trials_ok";

pub const RAW_FILE: &str = "raw.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";

// `Display` for f64 is the shortest string that parses back to the same value.
pub fn write_raw_csv<W: Write>(rows: &[TrialRow], w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{RAW_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.dim_out,
            r.n,
            r.trial,
            r.error,
            r.n_neighbors,
            r.delta,
            r.status.as_str()
        )?;
    }
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{AGGREGATE_HEADER}")?;
    for a in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            a.dim_out, a.n, a.mean_error, a.var_error, a.trials_ok
        )?;
    }
    Ok(())
}

fn records(text: &str, header: &str) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let found = reader
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if found != header {
        return Err(Error::Parse(format!(
            "expected header {header:?}, found {found:?}"
        )));
    }
    reader
        .records()
        .map(|r| r.map_err(|e| Error::Parse(e.to_string())))
        .collect()
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.trim().parse().map_err(|_| {
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        Error::Parse(format!("line {line}: bad {name} value {raw:?}"))
    })
}

pub fn read_raw_csv(text: &str) -> Result<Vec<TrialRow>> {
    records(text, RAW_HEADER)?
        .iter()
        .map(|rec| {
            Ok(TrialRow {
                dim_out: field(rec, 0, "D")?,
                n: field(rec, 1, "n")?,
                trial: field(rec, 2, "trial")?,
                error: field(rec, 3, "error")?,
                n_neighbors: field(rec, 4, "N_n")?,
                delta: field(rec, 5, "delta_n")?,
                status: TrialStatus::parse(rec.get(6).unwrap_or("").trim())?,
            })
        })
        .collect()
}

pub fn read_aggregate_csv(text: &str) -> Result<Vec<AggregateRow>> {
    records(text, AGGREGATE_HEADER)?
        .iter()
        .map(|rec| {
            Ok(AggregateRow {
                dim_out: field(rec, 0, "D")?,
                n: field(rec, 1, "n")?,
                mean_error: field(rec, 2, "mean_error")?,
                var_error: field(rec, 3, "var_error")?,
                trials_ok: field(rec, 4, "trials_ok")?,
            })
        })
        .collect()
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    let mut s = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|e| Error::io(path, e))?;
    Ok(s)
}

/// Writes `raw.csv` and `aggregate.csv` into `dir`, creating it if needed.
pub fn emit_csv(table: &ResultTable, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join(RAW_FILE), |w| write_raw_csv(&table.rows, w))?;
    write_file(&dir.join(AGGREGATE_FILE), |w| {
        write_aggregate_csv(&table.aggregates, w)
    })
}

/// Reads back the pair written by [`emit_csv`].
pub fn read_csv(dir: &Path) -> Result<ResultTable> {
    let rows = read_raw_csv(&read_file(&dir.join(RAW_FILE))?)?;
    let aggregates = read_aggregate_csv(&read_file(&dir.join(AGGREGATE_FILE))?)?;
    Ok(ResultTable { rows, aggregates })
}
