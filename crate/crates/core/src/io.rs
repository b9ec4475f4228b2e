//! Line-oriented text records for datasets and truth functions: one
//! `x_1,…,x_d,y` record per line, 17 significant digits.

use crate::data::{Dataset, Points};
use crate::error::{Error, Result};
use crate::simulate::TruthFunction;
use std::fmt::Write as _;
use std::io::Read;

fn push_record(out: &mut String, xs: &[f64], y: f64) {
    for x in xs {
        let _ = write!(out, "{x:.16e},");
    }
    let _ = writeln!(out, "{y:.16e}");
}

pub fn dataset_to_text(data: &Dataset) -> String {
    let mut out = String::new();
    for (row, &y) in data.x.rows().zip(&data.y) {
        push_record(&mut out, row, y);
    }
    out
}

/// Anchor nodes and scaled anchor values, one `x,f(x)` record per node.
pub fn truth_to_text(truth: &TruthFunction) -> String {
    let mut out = String::new();
    for (&x, &v) in truth.anchor_grid().iter().zip(truth.anchor_values()) {
        push_record(&mut out, &[x], truth.scale * v);
    }
    out
}

/// Parses comma-separated records whose last field is the label. A first
/// line that does not parse as numbers is treated as a header.
pub fn dataset_from_reader<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Input(format!("malformed CSV: {e}")))?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        let fields = match parsed {
            Ok(f) => f,
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::Input(format!("line {line}: {e}"))),
        };
        if fields.len() < 2 {
            return Err(Error::Input(format!(
                "line {line}: expected at least two columns"
            )));
        }
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(Error::Input(format!(
                    "line {line}: expected {w} columns, found {}",
                    fields.len()
                )))
            }
            _ => {}
        }
        let (y, xs) = fields.split_last().expect("two or more fields");
        values.extend_from_slice(xs);
        labels.push(*y);
    }
    let Some(w) = width else {
        return Err(Error::Input("no data records found".into()));
    };
    Dataset::new(Points::new(values, w - 1)?, labels)
}

pub fn dataset_from_text(text: &str) -> Result<Dataset> {
    dataset_from_reader(text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::gp_sample_path;

    #[test]
    fn dataset_round_trip_is_exact() {
        let data = Dataset::new(
            Points::from_scalars(vec![0.1, 1.0 / 3.0, 0.999_999_999_999_9]),
            vec![-2.5e-300, std::f64::consts::PI, 7.0],
        )
        .unwrap();
        let text = dataset_to_text(&data);
        assert_eq!(dataset_from_text(&text).unwrap(), data);
        assert!(text
            .lines()
            .next()
            .unwrap()
            .starts_with("1.0000000000000001e-1,"));
    }

    #[test]
    fn header_and_blank_lines() {
        let d = dataset_from_text("x,y\n0.5, 1\n\n0.25,2\n").unwrap();
        assert_eq!(d.y, vec![1.0, 2.0]);
        assert!(dataset_from_text("x,y\n0.5,oops\n")
            .unwrap_err()
            .to_string()
            .contains("line 2"));
        assert!(dataset_from_text("0.5,1\n0.2\n").is_err());
        assert!(dataset_from_text("x,y\n").is_err());
    }

    #[test]
    fn truth_records_replay() {
        let f = gp_sample_path(2.01, 0.2, 33, 1).unwrap().scaled(2.0);
        let d = dataset_from_text(&truth_to_text(&f)).unwrap();
        for (row, y) in d.x.rows().zip(&d.y) {
            assert_eq!(f.eval(row[0]), *y);
        }
    }
}
