//! Norm time series as CSV: a header row of [`COLUMNS`] and floats with 17
//! significant digits.

use std::io::{Read, Write};
use std::path::Path;

use crate::analysis::report::{NormReport, COLUMNS};
use crate::error::{Error, Result};

/// `{:.16e}`: 17 significant digits, round-trip exact.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(context: &str, e: csv::Error) -> Error {
    Error::InvalidArgument(format!("{context}: {e}"))
}

pub fn write_series<W: Write>(out: W, series: &[NormReport]) -> Result<()> {
    let mut w = SeriesWriter::new(out)?;
    for r in series {
        w.push(r)?;
    }
    Ok(())
}

/// Row-at-a-time writer, flushed after every row so partial runs leave a
/// readable file.
pub struct SeriesWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> SeriesWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(COLUMNS).map_err(|e| csv_err("csv header", e))?;
        inner.flush().map_err(|e| Error::io("flushing csv", e))?;
        Ok(Self { inner })
    }

    pub fn push(&mut self, r: &NormReport) -> Result<()> {
        self.inner
            .write_record(r.values().iter().map(|v| format_f64(*v)))
            .map_err(|e| csv_err("csv row", e))?;
        self.inner.flush().map_err(|e| Error::io("flushing csv", e))
    }
}

pub fn series_to_string(series: &[NormReport]) -> String {
    let mut buf = Vec::new();
    write_series(&mut buf, series).expect("writing to memory");
    String::from_utf8(buf).expect("csv is ascii")
}

pub fn write_series_file(path: &Path, series: &[NormReport]) -> Result<()> {
    let f = std::fs::File::create(path)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    write_series(std::io::BufWriter::new(f), series)
}

/// Parses a series written by [`write_series`]; the header must match.
pub fn read_series<R: Read>(input: R) -> Result<Vec<NormReport>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(|e| csv_err("csv header", e))?.clone();
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(Error::InvalidArgument(format!(
            "unexpected csv header: {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| csv_err("csv row", e))?;
        let mut vals = [0.0; 15];
        for (i, field) in rec.iter().enumerate() {
            vals[i] = field.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!(
                    "row {}: column {} is not a number: {field:?}",
                    row + 1,
                    COLUMNS[i]
                ))
            })?;
        }
        out.push(NormReport::from_values(vals));
    }
    Ok(out)
}

pub fn read_series_file(path: &Path) -> Result<Vec<NormReport>> {
    let f = std::fs::File::open(path)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    read_series(f)
}
