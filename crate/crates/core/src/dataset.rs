//! Sample storage, neighborhood selection and the dataset CSV format.
//!
//! Points are stored row-major in flat buffers. The target point is always the
//! origin; use [`Dataset::translated`] to estimate elsewhere.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    d: usize,
    dim_out: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from flat row-major buffers.
    pub fn new(d: usize, dim_out: usize, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if d == 0 || dim_out == 0 {
            return Err(Error::DimensionMismatch(format!(
                "input dimension {d} and output dimension {dim_out} must both be positive"
            )));
        }
        if !xs.len().is_multiple_of(d) || !ys.len().is_multiple_of(dim_out) {
            return Err(Error::DimensionMismatch(
                "buffer length is not a multiple of the point dimension".into(),
            ));
        }
        if xs.len() / d != ys.len() / dim_out {
            return Err(Error::DimensionMismatch(format!(
                "{} inputs but {} outputs",
                xs.len() / d,
                ys.len() / dim_out
            )));
        }
        Ok(Self { d, dim_out, xs, ys })
    }

    /// Builds a dataset from per-sample rows.
    pub fn from_rows(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<Self> {
        let d = xs.first().map_or(0, Vec::len);
        let dim_out = ys.first().map_or(0, Vec::len);
        if xs.iter().any(|x| x.len() != d) || ys.iter().any(|y| y.len() != dim_out) {
            return Err(Error::DimensionMismatch("ragged sample rows".into()));
        }
        Self::new(d, dim_out, xs.concat(), ys.concat())
    }

    pub fn len(&self) -> usize {
        self.xs.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.d
    }

    pub fn output_dim(&self) -> usize {
        self.dim_out
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.d..(i + 1) * self.d]
    }

    pub fn y(&self, i: usize) -> &[f64] {
        &self.ys[i * self.dim_out..(i + 1) * self.dim_out]
    }

    pub fn y_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.ys[i * self.dim_out..(i + 1) * self.dim_out]
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Rows `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut xs = Vec::with_capacity(indices.len() * self.d);
        let mut ys = Vec::with_capacity(indices.len() * self.dim_out);
        for &i in indices {
            xs.extend_from_slice(self.x(i));
            ys.extend_from_slice(self.y(i));
        }
        Self {
            d: self.d,
            dim_out: self.dim_out,
            xs,
            ys,
        }
    }

    /// Only output coordinate `j`, as a `D = 1` dataset.
    pub fn output_coordinate(&self, j: usize) -> Self {
        let ys = (0..self.len()).map(|i| self.y(i)[j]).collect();
        Self {
            d: self.d,
            dim_out: 1,
            xs: self.xs.clone(),
            ys,
        }
    }

    /// Shifts every input by `-center`, moving `center` to the origin.
    pub fn translated(&self, center: &[f64]) -> Result<Self> {
        if center.len() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "center has dimension {}, data has {}",
                center.len(),
                self.d
            )));
        }
        let mut out = self.clone();
        for row in out.xs.chunks_mut(self.d) {
            for (v, c) in row.iter_mut().zip(center) {
                *v -= c;
            }
        }
        Ok(out)
    }

    /// Writes the `x1..xd,y1..yD` CSV format.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_csv_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_csv_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "{}", csv_header(self.d, self.dim_out))?;
        let mut line = String::new();
        for i in 0..self.len() {
            write_csv_row(w, self.x(i), self.y(i), &mut line)?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut text = String::new();
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }

    /// Parses the dataset CSV format; dimensions come from the header.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::Parse(format!("dataset header: {e}")))?
            .clone();
        let (d, dim_out) = parse_header(headers.iter())?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record =
                record.map_err(|e| Error::Parse(format!("dataset row {}: {e}", row + 1)))?;
            if record.len() != d + dim_out {
                return Err(Error::Parse(format!(
                    "dataset row {} has {} fields, expected {}",
                    row + 1,
                    record.len(),
                    d + dim_out
                )));
            }
            for (k, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    Error::Parse(format!(
                        "dataset row {}: {field:?} is not a number",
                        row + 1
                    ))
                })?;
                if k < d {
                    xs.push(v);
                } else {
                    ys.push(v);
                }
            }
        }
        if xs.is_empty() {
            return Err(Error::Parse("dataset has no rows".into()));
        }
        Self::new(d, dim_out, xs, ys)
    }
}

fn parse_header<'a>(names: impl Iterator<Item = &'a str>) -> Result<(usize, usize)> {
    let (mut d, mut dim_out) = (0usize, 0usize);
    for name in names {
        let expected_x = format!("x{}", d + 1);
        let expected_y = format!("y{}", dim_out + 1);
        if dim_out == 0 && name == expected_x {
            d += 1;
        } else if d > 0 && name == expected_y {
            dim_out += 1;
        } else {
            return Err(Error::Parse(format!(
                "unexpected header column {name:?}; expected x1..xd followed by y1..yD"
            )));
        }
    }
    if d == 0 || dim_out == 0 {
        return Err(Error::Parse(
            "header needs at least one x and one y column".into(),
        ));
    }
    Ok((d, dim_out))
}

/// The samples within the bandwidth of the origin.
/// `x1,..,xd,y1,..,yD`
pub fn csv_header(d: usize, dim_out: usize) -> String {
    let names: Vec<String> = (1..=d)
        .map(|j| format!("x{j}"))
        .chain((1..=dim_out).map(|j| format!("y{j}")))
        .collect();
    names.join(",")
}

/// One data line in shortest round-trip form; `line` is scratch space.
pub fn write_csv_row<W: Write>(
    w: &mut W,
    x: &[f64],
    y: &[f64],
    line: &mut String,
) -> std::io::Result<()> {
    line.clear();
    for (k, v) in x.iter().chain(y).enumerate() {
        if k > 0 {
            line.push(',');
        }
        line.push_str(&v.to_string());
    }
    line.push('\n');
    w.write_all(line.as_bytes())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Neighborhood {
    /// Zero-based row indices, ascending.
    pub indices: Vec<usize>,
    /// Bandwidth used for the selection.
    pub epsilon: f64,
    /// Largest distance from the origin among selected points, 0 when empty.
    pub delta: f64,
}

impl Neighborhood {
    pub fn count(&self) -> usize {
        self.indices.len()
    }
}

/// Selects all samples with `‖x_i‖ <= epsilon` (closed ball).
pub fn select_neighborhood(dataset: &Dataset, epsilon: f64) -> Neighborhood {
    let mut indices = Vec::new();
    let mut delta: f64 = 0.0;
    for i in 0..dataset.len() {
        let r = norm(dataset.x(i));
        if r <= epsilon {
            indices.push(i);
            delta = delta.max(r);
        }
    }
    Neighborhood {
        indices,
        epsilon,
        delta,
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}
