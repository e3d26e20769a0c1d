//! CSV and JSON result emission.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::harness::BerRecord;
use crate::{Error, Result};

/// Column order of the CSV output.
pub const CSV_HEADER: &str = "scheme,snr_db,bits,errors,ber,ci_half_width,packets,qdf_selected_fraction";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// One output row. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: String,
    pub snr_db: f64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    pub ci_half_width: f64,
    pub packets: u64,
    pub qdf_selected_fraction: f64,
}

impl From<&BerRecord> for ResultRow {
    fn from(r: &BerRecord) -> Self {
        Self {
            scheme: r.scheme.clone(),
            snr_db: r.snr_db,
            bits: r.bits_simulated,
            errors: r.bit_errors,
            ber: r.ber(),
            ci_half_width: r.ci_half_width(),
            packets: r.packets,
            qdf_selected_fraction: r.qdf_fraction(),
        }
    }
}

/// Row describing the direct-link-only estimates of a record.
pub fn direct_only_row(r: &BerRecord) -> ResultRow {
    let direct = BerRecord {
        scheme: format!("{}/direct-only", r.scheme),
        bits_simulated: r.direct_bits,
        bit_errors: r.direct_errors,
        qdf_selected: 0,
        ..r.clone()
    };
    ResultRow::from(&direct)
}

pub fn write_rows<W: Write>(rows: &[ResultRow], format: OutputFormat, mut out: W) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, rows).map_err(|e| Error::Io(e.to_string()))?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn render(rows: &[ResultRow], format: OutputFormat) -> Result<String> {
    let mut buf = Vec::new();
    write_rows(rows, format, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

/// Writes `rows` to `path`.
pub fn emit_results(rows: &[ResultRow], format: OutputFormat, path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no records to emit".into()));
    }
    let file = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_rows(rows, format, std::io::BufWriter::new(file))
}

pub fn parse_json(s: &str) -> Result<Vec<ResultRow>> {
    serde_json::from_str(s).map_err(|e| Error::InvalidArgument(e.to_string()))
}

pub fn parse_csv(s: &str) -> Result<Vec<ResultRow>> {
    csv::Reader::from_reader(s.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(scheme: &str, snr: f64, bits: u64, errors: u64) -> BerRecord {
        BerRecord {
            scheme: scheme.into(),
            snr_db: snr,
            bits_simulated: bits,
            bit_errors: errors,
            packets: bits / 2000,
            qdf_selected: 0,
            direct_bits: bits,
            direct_errors: errors * 2,
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let rows: Vec<ResultRow> = [record("a", 0.0, 2000, 7), record("a", 2.0, 2000, 1), record("b", 0.0, 4000, 0)]
            .iter()
            .map(Into::into)
            .collect();
        let text = render(&rows, OutputFormat::Csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("a,0.0,2000,7,0.0035,"));
        assert_eq!(parse_csv(&text).unwrap(), rows);
    }

    #[test]
    fn zero_error_row_uses_wilson_bound() {
        let row = ResultRow::from(&record("x", 10.0, 1_000_000, 0));
        assert_eq!(row.ber, 0.0);
        // z = 3, k = 0: z^2 / (2 (n + z^2))
        assert!((row.ci_half_width - 9.0 / (2.0 * 1_000_009.0)).abs() < 1e-18);
    }

    #[test]
    fn direct_only_rows() {
        let row = direct_only_row(&record("dmnc", 4.0, 2000, 3));
        assert_eq!(row.scheme, "dmnc/direct-only");
        assert_eq!(row.errors, 6);
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let rows = vec![ResultRow::from(&record("x", 0.0, 10, 1))];
        let err = emit_results(&rows, OutputFormat::Csv, Path::new("/nonexistent-dir/out.csv")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
        assert!(emit_results(&[], OutputFormat::Csv, Path::new("/tmp/x.csv")).is_err());
    }

    proptest! {
        #[test]
        fn json_round_trip(
            snr in -30.0f64..30.0,
            bits in 1u64..1_000_000_000,
            frac in 0.0f64..1.0,
            q in 0.0f64..1.0,
        ) {
            let errors = (bits as f64 * frac) as u64;
            let mut row = ResultRow::from(&record("adaptive(pth=0.3)", snr, bits, errors));
            row.qdf_selected_fraction = q;
            let text = render(std::slice::from_ref(&row), OutputFormat::Json).unwrap();
            prop_assert_eq!(parse_json(&text).unwrap(), vec![row.clone()]);
            let text = render(std::slice::from_ref(&row), OutputFormat::Csv).unwrap();
            prop_assert_eq!(parse_csv(&text).unwrap(), vec![row]);
        }
    }
}
