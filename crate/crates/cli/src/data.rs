//! `time,choice` CSV files.

use std::io::{Read, Write};
use std::path::Path;

use ddm_core::{Dataset, DdmError, TrialRecord};

use crate::error::{CliError, Result};

pub const HEADER: [&str; 2] = ["time", "choice"];

/// `t` rounded to nine significant digits, in plain decimal notation.
pub fn format_time(t: f64) -> String {
    if t == 0.0 || !t.is_finite() {
        return t.to_string();
    }
    // The exponent after rounding, so a carry into a new digit is counted.
    let sci = format!("{t:.8e}");
    let exponent: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    let decimals = (8 - exponent).max(0) as usize;
    format!("{t:.decimals$}")
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Read {
        path: path.to_owned(),
        source,
    })?;
    parse_dataset(file, path)
}

pub fn parse_dataset(input: impl Read, path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let record_error = |line: u64, reason: String| CliError::Record {
        path: path.to_owned(),
        line,
        reason,
    };
    let headers = reader.headers().map_err(|e| record_error(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(CliError::Header {
            path: path.to_owned(),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            record_error(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let time: f64 = row[0]
            .parse()
            .map_err(|_| record_error(line, format!("time {:?} is not a number", &row[0])))?;
        let choice = match &row[1] {
            "1" => true,
            "0" => false,
            other => return Err(record_error(line, format!("choice must be 0 or 1, found {other:?}"))),
        };
        records.push(TrialRecord::new(time, choice).map_err(|e| record_error(line, e.to_string()))?);
    }
    if records.is_empty() {
        return Err(DdmError::EmptyDataset.into());
    }
    Ok(Dataset::new(records)?)
}

pub fn write_dataset(data: &Dataset, out: impl Write) -> std::io::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(HEADER)?;
    for r in data.records() {
        writer.write_record([format_time(r.decision_time), u8::from(r.choice).to_string()])?;
    }
    writer.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset> {
        parse_dataset(text.as_bytes(), Path::new("mem.csv"))
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_time(0.123456789123), "0.123456789");
        assert_eq!(format_time(12.3456789123), "12.3456789");
        assert_eq!(format_time(1.0), "1.00000000");
        assert_eq!(format_time(9.9999999999), "10.0000000");
        assert_eq!(format_time(0.00012345678912), "0.000123456789");
        assert_eq!(format_time(123456789.4), "123456789");
        assert_eq!(format_time(0.000999999999999), "0.00100000000");
    }

    #[test]
    fn round_trip_at_printed_precision() {
        let data = Dataset::from_pairs([(0.731234567891, true), (2.5, false), (1e-4, true), (37.123456789, false)])
            .unwrap();
        let mut buf = Vec::new();
        write_dataset(&data, &mut buf).unwrap();
        let back = parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        for (a, b) in data.records().iter().zip(back.records()) {
            assert_eq!(a.choice, b.choice);
            assert!(((a.decision_time - b.decision_time) / a.decision_time).abs() < 5e-9);
        }
        let mut again = Vec::new();
        write_dataset(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn header_is_checked() {
        let err = parse("t,c\n1,0\n").unwrap_err();
        assert!(err.to_string().contains("expected header `time,choice`"), "{err}");
        assert_eq!(err.exit_code(), crate::error::EXIT_DATA);
    }

    #[test]
    fn bad_rows_report_line() {
        let err = parse("time,choice\n0.5,1\n0.7,2\n").unwrap_err();
        assert!(matches!(err, CliError::Record { line: 3, .. }), "{err}");
        let err = parse("time,choice\n0.5,1\n-1,0\n").unwrap_err();
        assert!(matches!(err, CliError::Record { line: 3, .. }), "{err}");
        let err = parse("time,choice\nabc,1\n").unwrap_err();
        assert!(matches!(err, CliError::Record { line: 2, .. }), "{err}");
        assert!(parse("time,choice\n").is_err());
    }
}
