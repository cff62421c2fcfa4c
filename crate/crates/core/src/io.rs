//! Grid dumps and CSV reports.
//!
//! A dump is plain text: the header line `d n1 … nd h`, then one value per
//! line in row-major order. Values are written with 17 significant digits so
//! reading a dump back reproduces every bit. The box origin is not part of
//! the format and is supplied by the reader.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

pub fn write_dump<W: Write>(field: &ScalarField, mut out: W) -> Result<()> {
    let g = &field.grid;
    write!(out, "{}", g.dim())?;
    for k in g.shape() {
        write!(out, " {k}")?;
    }
    writeln!(out, " {:.16e}", g.h())?;
    for v in &field.values {
        writeln!(out, "{v:.16e}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_dump_file(field: &ScalarField, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_dump(field, std::io::BufWriter::new(file))
}

/// Contents of a dump before an origin is attached.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDump {
    pub shape: Vec<usize>,
    pub h: f64,
    pub values: Vec<f64>,
}

impl GridDump {
    pub fn into_field(self, lo: Vec<f64>) -> Result<ScalarField> {
        let grid = Grid::new(lo, self.shape, self.h)?;
        ScalarField::new(grid, self.values)
    }
}

pub fn read_dump<R: BufRead>(input: R) -> Result<GridDump> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty dump".into()))??;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let d: usize = tokens
        .first()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad header {header:?}")))?;
    if tokens.len() != d + 2 {
        return Err(Error::Parse(format!("header {header:?} needs {} fields", d + 2)));
    }
    let shape = tokens[1..=d]
        .iter()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Parse(format!("bad node count: {e}")))?;
    let h: f64 = tokens[d + 1]
        .parse()
        .map_err(|e| Error::Parse(format!("bad spacing: {e}")))?;
    let expected: usize = shape.iter().product();
    let mut values = Vec::with_capacity(expected);
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        values.push(
            t.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad value {t:?}: {e}")))?,
        );
    }
    if values.len() != expected {
        return Err(Error::Parse(format!("{} values for {expected} nodes", values.len())));
    }
    Ok(GridDump { shape, h, values })
}

pub fn read_dump_file(path: &Path) -> Result<GridDump> {
    let file = std::fs::File::open(path)?;
    read_dump(std::io::BufReader::new(file))
}

/// Writes serializable rows as CSV with a header line.
pub fn write_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.into()))?;
    for row in rows {
        w.serialize(row).map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = Grid::cube(2, -1.0, 1.0, 7).unwrap();
        let u = ScalarField::from_fn(&g, |x| (x[0] * 3.1).sin() * 1e-7 + x[1] / 3.0);
        let mut buf = Vec::new();
        write_dump(&u, &mut buf).unwrap();
        let back = read_dump(&buf[..]).unwrap().into_field(vec![-1.0, -1.0]).unwrap();
        assert_eq!(back.grid, g);
        for (a, b) in u.values.iter().zip(&back.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn header_format() {
        let g = Grid::cube(3, 0.0, 1.0, 3).unwrap();
        let mut buf = Vec::new();
        write_dump(&ScalarField::zeros(&g), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("3 3 3 3 5.0000000000000000e-1\n"));
        assert_eq!(text.lines().count(), 28);
    }

    #[test]
    fn truncated_dump_rejected() {
        assert!(read_dump("2 3 3 0.5\n1\n2\n".as_bytes()).is_err());
        assert!(read_dump("2 3 0.5\n".as_bytes()).is_err());
        assert!(read_dump("".as_bytes()).is_err());
    }
}
