//! Output files: field and table CSVs and JSON reports.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a file back and writing it again reproduces it byte for byte.

use crate::error::{Error, Result};
use crate::point::Point;
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::path::Path;

/// Version stamp embedded in every report: crate version plus git revision
/// when built from a checkout.
pub const VERSION: &str = env!("PSCAT_VERSION_STAMP");

pub const FIELD_HEADER: [&str; 4] = ["x", "y", "re_u", "im_u"];

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("malformed csv: {other:?}")),
    }
}

/// A table of pre-formatted cells with a header row.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self { header: header.iter().map(|h| h.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width does not match header");
        self.rows.push(row);
    }

    /// Cells of column `name`.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k].as_str()).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()).map_err(csv_err))
            .collect::<Result<Vec<Vec<String>>>>()?;
        Ok(Self { header, rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Formats an optional float; `None` becomes an empty cell.
pub fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Field samples `(x, y, Re u, Im u)`.
pub fn field_table(points: &[Point], values: &[C64]) -> Table {
    let mut t = Table::new(&FIELD_HEADER);
    for (p, u) in points.iter().zip(values) {
        t.push(vec![p.x.to_string(), p.y.to_string(), u.re.to_string(), u.im.to_string()]);
    }
    t
}

/// Inverse of [`field_table`].
pub fn parse_field(t: &Table) -> Result<(Vec<Point>, Vec<C64>)> {
    if t.header != FIELD_HEADER {
        return Err(Error::Config(format!("field table header {:?}, expected {:?}", t.header, FIELD_HEADER)));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Config(format!("bad number '{s}': {e}")));
    let mut pts = Vec::with_capacity(t.rows.len());
    let mut vals = Vec::with_capacity(t.rows.len());
    for r in &t.rows {
        pts.push(Point::new(num(&r[0])?, num(&r[1])?));
        vals.push(C64::new(num(&r[2])?, num(&r[3])?));
    }
    Ok((pts, vals))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(format!("report serialization: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Complex numbers as `[re, im]` pairs for JSON.
pub fn pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn field_round_trip_is_byte_identical() {
        let pts = vec![Point::new(0.3, 0.25), Point::new(-0.5, 1e-300), Point::new(-0.0, 2.0 / 3.0)];
        let vals = vec![C64::new(0.1 + 0.2, -1e-17), C64::new(f64::MIN_POSITIVE, 5e-324), C64::new(-0.0, 1.0)];
        let text = field_table(&pts, &vals).to_csv().unwrap();
        let back = Table::from_csv(&text).unwrap();
        assert_eq!(back.to_csv().unwrap(), text);
        let (p2, v2) = parse_field(&back).unwrap();
        assert_eq!(p2, pts);
        assert_eq!(v2, vals);
    }

    #[test]
    fn table_handles_empty_cells_and_bad_headers() {
        let mut t = Table::new(&["mode", "ratio"]);
        t.push(vec!["dense".into(), cell(None)]);
        t.push(vec!["id-half".into(), cell(Some(3.5))]);
        let text = t.to_csv().unwrap();
        assert_eq!(text, "mode,ratio\ndense,\nid-half,3.5\n");
        assert_eq!(Table::from_csv(&text).unwrap(), t);
        assert_eq!(t.column("ratio").unwrap(), vec!["", "3.5"]);
        assert!(parse_field(&t).is_err());
    }

    proptest! {
        #[test]
        fn any_float_field_round_trips(vals in proptest::collection::vec(proptest::num::f64::ANY, 4..40)) {
            let n = vals.len() / 4;
            let pts: Vec<Point> = (0..n).map(|k| Point::new(vals[4 * k], vals[4 * k + 1])).collect();
            let us: Vec<C64> = (0..n).map(|k| C64::new(vals[4 * k + 2], vals[4 * k + 3])).collect();
            let text = field_table(&pts, &us).to_csv().unwrap();
            let again = Table::from_csv(&text).unwrap().to_csv().unwrap();
            prop_assert_eq!(again, text);
        }
    }
}
