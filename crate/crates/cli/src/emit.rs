//! Result tables: CSV with a fixed header, or one JSON object per line.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use quadsense::SweepRow;

/// Column order of the CSV table.
pub const CSV_HEADER: [&str; 12] =
    ["channel", "scheme", "T", "alpha", "p", "lambda0", "lambda1", "metric", "value", "stderr", "n_samples", "seed"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        })
    }
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(format!("unknown format `{other}` (expected csv or jsonl)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("unexpected CSV header {0:?}")]
    Header(Vec<String>),
    #[error("line {line}: bad `{field}` value `{value}`")]
    Field { line: usize, field: &'static str, value: String },
}

/// Serializes rows. Floats use the shortest decimal that round-trips.
pub fn emit(rows: &[SweepRow], format: Format) -> Vec<u8> {
    match format {
        Format::Csv => emit_csv(rows),
        Format::Jsonl => {
            let mut out = Vec::new();
            for row in rows {
                serde_json::to_writer(&mut out, row).expect("rows serialize");
                out.push(b'\n');
            }
            out
        }
    }
}

fn emit_csv(rows: &[SweepRow]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.channel.to_string(),
            r.scheme.clone(),
            r.t.to_string(),
            r.alpha.map(|a| a.to_string()).unwrap_or_default(),
            r.p.to_string(),
            r.lambda0.to_string(),
            r.lambda1.to_string(),
            r.metric.to_string(),
            r.value.to_string(),
            r.stderr.to_string(),
            r.n_samples.to_string(),
            r.seed.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Reads back a table written by [`emit`].
pub fn parse(bytes: &[u8], format: Format) -> Result<Vec<SweepRow>, ParseError> {
    match format {
        Format::Jsonl => bytes
            .split(|&b| b == b'\n')
            .filter(|l| !l.is_empty())
            .map(|l| serde_json::from_slice(l).map_err(ParseError::from))
            .collect(),
        Format::Csv => parse_csv(bytes),
    }
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T, ParseError> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|_| ParseError::Field { line, field: CSV_HEADER[i], value: raw.to_string() })
}

fn parse_csv(bytes: &[u8]) -> Result<Vec<SweepRow>, ParseError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(ParseError::Header(header));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let alpha = match rec.get(3).unwrap_or("") {
            "" => None,
            _ => Some(field(&rec, 3, line)?),
        };
        rows.push(SweepRow {
            channel: field(&rec, 0, line)?,
            scheme: rec.get(1).unwrap_or("").to_string(),
            t: field(&rec, 2, line)?,
            alpha,
            p: field(&rec, 4, line)?,
            lambda0: field(&rec, 5, line)?,
            lambda1: field(&rec, 6, line)?,
            metric: field(&rec, 7, line)?,
            value: field(&rec, 8, line)?,
            stderr: field(&rec, 9, line)?,
            n_samples: field(&rec, 10, line)?,
            seed: field(&rec, 11, line)?,
        });
    }
    Ok(rows)
}
